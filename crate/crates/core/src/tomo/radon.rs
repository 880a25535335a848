use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, GridShape};
use crate::operators::{LinearOperator, WeightMatrix};
use crate::par;

/// Parallel-beam acquisition: detector offsets are centred on the grid
/// centre and bins are ordered angle-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinogramGeometry {
    pub num_angles: usize,
    pub num_detectors: usize,
    pub angles: Vec<f64>,
    pub detector_spacing: f64,
}

impl SinogramGeometry {
    /// Angles `kπ/num_angles`, `k = 0..num_angles`.
    pub fn uniform(num_angles: usize, num_detectors: usize, detector_spacing: f64) -> Result<Self> {
        let angles = (0..num_angles).map(|k| k as f64 * PI / num_angles as f64).collect();
        Self::with_angles(angles, num_detectors, detector_spacing)
    }

    pub fn with_angles(angles: Vec<f64>, num_detectors: usize, detector_spacing: f64) -> Result<Self> {
        let geom = Self {
            num_angles: angles.len(),
            num_detectors,
            angles,
            detector_spacing,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Enough unit-spaced detectors to cover the grid diagonal.
    pub fn covering(shape: &GridShape, num_angles: usize) -> Result<Self> {
        let h = shape.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
        let ext: f64 = shape
            .dims
            .iter()
            .zip(&shape.spacing)
            .map(|(&n, &s)| (n as f64 * s).powi(2))
            .sum::<f64>()
            .sqrt();
        let mut nd = (ext / h).ceil() as usize + 1;
        if nd.is_multiple_of(2) {
            nd += 1;
        }
        Self::uniform(num_angles, nd, h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_angles == 0 || self.num_detectors == 0 {
            return Err(Error::Parameter("sinogram needs at least one angle and one detector".into()));
        }
        if self.angles.len() != self.num_angles {
            return Err(Error::Parameter("angle list length differs from num_angles".into()));
        }
        if self.angles.iter().any(|&a| !(0.0..PI).contains(&a)) {
            return Err(Error::Parameter("angles must lie in [0, π)".into()));
        }
        if self.angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("angles must be strictly increasing".into()));
        }
        if !(self.detector_spacing > 0.0 && self.detector_spacing.is_finite()) {
            return Err(Error::Parameter("detector spacing must be positive".into()));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.num_angles * self.num_detectors
    }

    pub fn detector_offset(&self, k: usize) -> f64 {
        (k as f64 - (self.num_detectors as f64 - 1.0) / 2.0) * self.detector_spacing
    }
}

/// 2-D parallel-beam projector with Joseph interpolation.
#[derive(Debug, Clone)]
pub struct Radon2d {
    domain: GridShape,
    geometry: SinogramGeometry,
    weights: WeightMatrix,
}

impl Radon2d {
    pub fn new(domain: GridShape, geometry: SinogramGeometry) -> Result<Self> {
        if domain.ndim() != 2 {
            return Err(Error::UnsupportedDimension(domain.ndim()));
        }
        geometry.validate()?;
        let bins: Vec<(usize, usize)> = (0..geometry.num_angles)
            .flat_map(|a| (0..geometry.num_detectors).map(move |d| (a, d)))
            .collect();
        let rows = par::map_collect(&bins, |&(a, d)| {
            joseph_row(&domain, geometry.angles[a], geometry.detector_offset(d))
        });
        let weights = WeightMatrix::from_rows(domain.len(), rows);
        Ok(Self { domain, geometry, weights })
    }

    pub fn geometry(&self) -> &SinogramGeometry {
        &self.geometry
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }
}

/// Weights of one ray: unit steps along the dominant axis, linear
/// interpolation across it, scaled by the path length per step.
fn joseph_row(shape: &GridShape, theta: f64, s: f64) -> Vec<(usize, f64)> {
    let (ny, nx) = (shape.dims[0], shape.dims[1]);
    let (dy, dx) = (shape.spacing[0], shape.spacing[1]);
    let (sin, cos) = theta.sin_cos();
    let cy = (ny as f64 - 1.0) / 2.0;
    let cx = (nx as f64 - 1.0) / 2.0;
    let mut row = Vec::new();

    // point on the ray: s(cos, sin) + t(-sin, cos)
    if cos.abs() >= sin.abs() {
        let step = dy / cos.abs();
        for i in 0..ny {
            let y = (i as f64 - cy) * dy;
            let t = (y - s * sin) / cos;
            let x = s * cos - t * sin;
            push_interp(&mut row, x / dx + cx, nx, step, |j| i * nx + j);
        }
    } else {
        let step = dx / sin.abs();
        for j in 0..nx {
            let x = (j as f64 - cx) * dx;
            let t = (s * cos - x) / sin;
            let y = s * sin + t * cos;
            push_interp(&mut row, y / dy + cy, ny, step, |i| i * nx + j);
        }
    }
    row
}

fn push_interp(row: &mut Vec<(usize, f64)>, frac_idx: f64, n: usize, step: f64, flat: impl Fn(usize) -> usize) {
    let lo = frac_idx.floor();
    let f = frac_idx - lo;
    let lo = lo as i64;
    if lo >= 0 && (lo as usize) < n && f < 1.0 {
        row.push((flat(lo as usize), step * (1.0 - f)));
    }
    let hi = lo + 1;
    if hi >= 0 && (hi as usize) < n && f > 0.0 {
        row.push((flat(hi as usize), step * f));
    }
}

impl LinearOperator for Radon2d {
    fn domain(&self) -> &GridShape {
        &self.domain
    }

    fn range_size(&self) -> usize {
        self.geometry.num_bins()
    }

    fn apply_flat(&self, x: &[f64], out: &mut [f64]) {
        self.weights.mul(x, out)
    }

    fn adjoint_flat(&self, y: &[f64], out: &mut [f64]) {
        self.weights.mul_transpose(y, out)
    }
}

pub fn radon2d_apply(u: &GridField, g: &SinogramGeometry) -> Result<Vec<f64>> {
    Radon2d::new(u.shape().clone(), g.clone())?.apply(u)
}

/// Unfiltered backprojection onto a grid of the given shape.
pub fn radon2d_adjoint(v: &[f64], g: &SinogramGeometry, shape: &GridShape) -> Result<GridField> {
    Radon2d::new(shape.clone(), g.clone())?.adjoint(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_vertical_ray_through_unit_image() {
        let shape = GridShape::new(vec![8, 8]).unwrap();
        let g = SinogramGeometry::uniform(1, 9, 1.0).unwrap();
        let u = GridField::filled(shape, 1.0);
        let sino = radon2d_apply(&u, &g).unwrap();
        // detector 4 sits at offset 0, between columns 3 and 4
        assert!((sino[4] - 8.0).abs() <= 1e-9);
    }

    #[test]
    fn zero_in_zero_out() {
        let shape = GridShape::new(vec![6, 5]).unwrap();
        let g = SinogramGeometry::uniform(3, 7, 1.0).unwrap();
        let sino = radon2d_apply(&GridField::zeros(shape.clone()), &g).unwrap();
        assert!(sino.iter().all(|&x| x == 0.0));
        let back = radon2d_adjoint(&vec![0.0; 21], &g, &shape).unwrap();
        assert!(back.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ray_outside_grid_is_zero() {
        let shape = GridShape::new(vec![4, 4]).unwrap();
        let g = SinogramGeometry::uniform(2, 3, 10.0).unwrap();
        let sino = radon2d_apply(&GridField::filled(shape, 1.0), &g).unwrap();
        assert_eq!(sino[0], 0.0);
        assert_eq!(sino[2], 0.0);
        assert!(sino[1] > 0.0);
    }

    #[test]
    fn single_bin_backprojects_along_its_ray() {
        let shape = GridShape::new(vec![8, 8]).unwrap();
        let g = SinogramGeometry::uniform(4, 11, 1.0).unwrap();
        let op = Radon2d::new(shape, g).unwrap();
        let bin = 2 * 11 + 5;
        let mut v = vec![0.0; op.range_size()];
        v[bin] = 1.0;
        let back = op.adjoint(&v).unwrap();
        let support: Vec<usize> = op.weights().row(bin).map(|(c, _)| c).collect();
        for (j, &x) in back.values().iter().enumerate() {
            assert_eq!(x != 0.0, support.contains(&j), "pixel {j}");
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(SinogramGeometry::uniform(0, 3, 1.0).is_err());
        assert!(SinogramGeometry::uniform(3, 0, 1.0).is_err());
        assert!(SinogramGeometry::with_angles(vec![0.5, 0.1], 3, 1.0).is_err());
        assert!(SinogramGeometry::with_angles(vec![0.0, 4.0], 3, 1.0).is_err());
        let g = SinogramGeometry::uniform(2, 3, 1.0).unwrap();
        let bad = radon2d_adjoint(&[1.0; 5], &g, &GridShape::new(vec![3, 3]).unwrap());
        assert!(matches!(bad, Err(Error::Shape(_))));
        let u3 = GridField::zeros(GridShape::new(vec![2, 2, 2]).unwrap());
        assert!(radon2d_apply(&u3, &g).is_err());
    }
}
