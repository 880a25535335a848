//! Tomographic forward models and measurement generation.
//!
//! Both projectors precompute their interpolation or intersection weights
//! once; the forward map and its adjoint read the same weights, so the
//! pair is algebraically exact.

mod io;
mod noise;
mod radon;
mod ray3d;
mod scene;

pub use io::{read_measurements, write_measurements};
pub use noise::{add_noise, MeasurementSet};
pub use radon::{radon2d_adjoint, radon2d_apply, Radon2d, SinogramGeometry};
pub use ray3d::{ray3d_adjoint, ray3d_apply, siddon_traversal, Ray3d, RayGeometry3D};
pub use scene::{make_gps_scene, select_rays, GpsSceneParams};
