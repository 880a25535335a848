use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, GridShape};
use crate::operators::{LinearOperator, WeightMatrix};
use crate::par;

pub type Point3 = [f64; 3];

/// Straight transmitter-to-receiver rays through a 3-D grid.
///
/// The grid occupies `[0, n_a·h_a]` along each axis, axis 0 = x, 1 = y,
/// 2 = z (vertical). Points are `[x, y, z]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayGeometry3D {
    pub transmitters: Vec<Point3>,
    pub receivers: Vec<Point3>,
    pub rays: Vec<(usize, usize)>,
}

impl RayGeometry3D {
    pub fn new(transmitters: Vec<Point3>, receivers: Vec<Point3>, rays: Vec<(usize, usize)>) -> Result<Self> {
        let g = Self {
            transmitters,
            receivers,
            rays,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rays.is_empty() {
            return Err(Error::Parameter("geometry has no rays".into()));
        }
        for (k, &(t, r)) in self.rays.iter().enumerate() {
            if t >= self.transmitters.len() || r >= self.receivers.len() {
                return Err(Error::Parameter(format!("ray {k} references a missing endpoint")));
            }
        }
        let finite = |p: &Point3| p.iter().all(|c| c.is_finite());
        if !self.transmitters.iter().chain(&self.receivers).all(finite) {
            return Err(Error::Parameter("non-finite endpoint".into()));
        }
        Ok(())
    }

    pub fn segment(&self, ray: usize) -> (Point3, Point3) {
        let (t, r) = self.rays[ray];
        (self.transmitters[t], self.receivers[r])
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        g.validate()?;
        Ok(g)
    }
}

/// Parametric (Siddon) traversal of the segment `p0 → p1`.
///
/// Returns `(flat voxel index, chord length)` in order along the segment.
/// Consecutive crossings closer than `1e-12` in the ray parameter are
/// merged.
pub fn siddon_traversal(shape: &GridShape, p0: Point3, p1: Point3) -> Vec<(usize, f64)> {
    let d = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
    let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if len == 0.0 {
        return Vec::new();
    }
    let mut a_min: f64 = 0.0;
    let mut a_max: f64 = 1.0;
    for a in 0..3 {
        let hi = shape.dims[a] as f64 * shape.spacing[a];
        if d[a] != 0.0 {
            let t0 = -p0[a] / d[a];
            let t1 = (hi - p0[a]) / d[a];
            a_min = a_min.max(t0.min(t1));
            a_max = a_max.min(t0.max(t1));
        } else if p0[a] < 0.0 || p0[a] > hi {
            return Vec::new();
        }
    }
    if a_max <= a_min {
        return Vec::new();
    }

    let mut alphas = vec![a_min, a_max];
    for a in 0..3 {
        if d[a] == 0.0 {
            continue;
        }
        for k in 1..shape.dims[a] {
            let t = (k as f64 * shape.spacing[a] - p0[a]) / d[a];
            if t > a_min && t < a_max {
                alphas.push(t);
            }
        }
    }
    alphas.sort_by(f64::total_cmp);

    let strides = shape.strides();
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(alphas.len());
    for w in alphas.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        if t1 - t0 < 1e-12 {
            continue;
        }
        let mid = 0.5 * (t0 + t1);
        let mut flat = 0;
        for a in 0..3 {
            let c = (p0[a] + mid * d[a]) / shape.spacing[a];
            let i = (c.floor().max(0.0) as usize).min(shape.dims[a] - 1);
            flat += i * strides[a];
        }
        let chord = (t1 - t0) * len;
        match out.last_mut() {
            Some((last, l)) if *last == flat => *l += chord,
            _ => out.push((flat, chord)),
        }
    }
    out
}

/// Ray transform over a 3-D grid with exact chord-length weights.
#[derive(Debug, Clone)]
pub struct Ray3d {
    domain: GridShape,
    geometry: RayGeometry3D,
    weights: WeightMatrix,
}

impl Ray3d {
    pub fn new(domain: GridShape, geometry: RayGeometry3D) -> Result<Self> {
        if domain.ndim() != 3 {
            return Err(Error::UnsupportedDimension(domain.ndim()));
        }
        geometry.validate()?;
        let idx: Vec<usize> = (0..geometry.rays.len()).collect();
        let rows = par::map_collect(&idx, |&k| {
            let (p0, p1) = geometry.segment(k);
            siddon_traversal(&domain, p0, p1)
        });
        if let Some(k) = rows.iter().position(|r| r.is_empty()) {
            return Err(Error::Parameter(format!("ray {k} misses the grid")));
        }
        let weights = WeightMatrix::from_rows(domain.len(), rows);
        Ok(Self { domain, geometry, weights })
    }

    pub fn geometry(&self) -> &RayGeometry3D {
        &self.geometry
    }

    pub fn weights(&self) -> &WeightMatrix {
        &self.weights
    }

    /// Flat indices of every voxel touched by at least one ray.
    pub fn traversed_voxels(&self) -> Vec<usize> {
        let mut hit = vec![false; self.domain.len()];
        for r in 0..self.weights.rows() {
            for (c, _) in self.weights.row(r) {
                hit[c] = true;
            }
        }
        hit.iter().enumerate().filter(|(_, &h)| h).map(|(i, _)| i).collect()
    }
}

impl LinearOperator for Ray3d {
    fn domain(&self) -> &GridShape {
        &self.domain
    }

    fn range_size(&self) -> usize {
        self.geometry.rays.len()
    }

    fn apply_flat(&self, x: &[f64], out: &mut [f64]) {
        self.weights.mul(x, out)
    }

    fn adjoint_flat(&self, y: &[f64], out: &mut [f64]) {
        self.weights.mul_transpose(y, out)
    }
}

pub fn ray3d_apply(u: &GridField, g: &RayGeometry3D) -> Result<Vec<f64>> {
    Ray3d::new(u.shape().clone(), g.clone())?.apply(u)
}

pub fn ray3d_adjoint(v: &[f64], g: &RayGeometry3D, shape: &GridShape) -> Result<GridField> {
    Ray3d::new(shape.clone(), g.clone())?.adjoint(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: [usize; 3]) -> GridShape {
        GridShape::new(n.to_vec()).unwrap()
    }

    #[test]
    fn vertical_ray_through_one_column() {
        let shape = unit_grid([3, 3, 5]);
        let g = RayGeometry3D::new(vec![[1.5, 0.5, 20.0]], vec![[1.5, 0.5, 0.0]], vec![(0, 0)]).unwrap();
        let u = GridField::filled(shape, 1.0);
        let v = ray3d_apply(&u, &g).unwrap();
        assert!((v[0] - 5.0).abs() <= 1e-12);
    }

    #[test]
    fn zero_volume_and_zero_vector() {
        let shape = unit_grid([4, 4, 4]);
        let g = RayGeometry3D::new(vec![[0.3, 3.1, 9.0]], vec![[2.2, 1.7, 0.0]], vec![(0, 0)]).unwrap();
        assert_eq!(ray3d_apply(&GridField::zeros(shape.clone()), &g).unwrap(), vec![0.0]);
        let back = ray3d_adjoint(&[0.0], &g, &shape).unwrap();
        assert!(back.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_ray_adjoint_support() {
        let shape = unit_grid([4, 4, 4]);
        let g = RayGeometry3D::new(vec![[-1.0, 0.2, 5.0]], vec![[3.7, 3.9, 0.0]], vec![(0, 0)]).unwrap();
        let op = Ray3d::new(shape.clone(), g).unwrap();
        let back = op.adjoint(&[1.0]).unwrap();
        let path: Vec<usize> = siddon_traversal(&shape, [-1.0, 0.2, 5.0], [3.7, 3.9, 0.0])
            .into_iter()
            .map(|(i, _)| i)
            .collect();
        for (j, &x) in back.values().iter().enumerate() {
            assert_eq!(x != 0.0, path.contains(&j));
        }
    }

    #[test]
    fn missing_ray_is_rejected() {
        let shape = unit_grid([2, 2, 2]);
        let g = RayGeometry3D::new(vec![[10.0, 10.0, 10.0]], vec![[10.0, 12.0, 0.0]], vec![(0, 0)]).unwrap();
        assert!(Ray3d::new(shape.clone(), g).is_err());
        assert!(siddon_traversal(&shape, [5.0, 5.0, 5.0], [6.0, 6.0, 6.0]).is_empty());
    }

    #[test]
    fn geometry_json_shape() {
        let g = RayGeometry3D::new(vec![[1.0, 2.0, 3.0]], vec![[0.5, 0.5, 0.0]], vec![(0, 0)]).unwrap();
        let json = g.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["transmitters"][0], serde_json::json!([1.0, 2.0, 3.0]));
        assert_eq!(v["rays"][0], serde_json::json!([0, 0]));
        assert_eq!(RayGeometry3D::from_json(&json).unwrap(), g);
        assert!(RayGeometry3D::new(vec![], vec![], vec![]).is_err());
        assert!(RayGeometry3D::new(vec![[0.0; 3]], vec![[0.0; 3]], vec![(1, 0)]).is_err());
    }
}
