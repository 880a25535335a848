//! Primal-dual proximal solvers for TV-penalized, Bregman-distance
//! regularization of linear inverse problems.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`]: flat row-major fields and stacked forward differences.
//! * [`operators`]: the [`LinearOperator`](operators::LinearOperator)
//!   contract, the gradient pair `D`/`Dᵀ`, dense matrices and power
//!   iteration for `‖T‖`.
//! * [`proximal`]: projections, the ∞-ball dual prox, TV and the
//!   Bregman-penalized objective.
//! * [`solver`]: the two primal-dual iterations, an iterated-Bregman
//!   variant, parameter schedules and discrepancy-principle stopping.
//! * [`tomo`]: 2-D parallel-beam and 3-D ray-transform forward models.
//! * [`harness`]: phantoms, experiment drivers, CSV output and the CLI.
//!
//! Forward and adjoint products run on rayon when the `parallel` feature
//! (on by default) is enabled; results are bit-identical either way.

pub mod error;
pub mod grid;
pub mod harness;
pub mod operators;
pub mod par;
pub mod proximal;
pub mod solver;
pub mod tomo;

pub use error::{Error, Result};
pub use grid::{GridField, GridShape, StackedGradientField};
pub use operators::{LinearOperator, LinearOperatorHandle};
pub use proximal::Constraint;
pub use solver::{run, Mode, Schedule, SolverConfig};
