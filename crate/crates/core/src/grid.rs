//! Regular-grid storage for primal fields and their stacked gradients.

use crate::error::{Error, Result};

/// Axis counts and physical spacing of a regular grid.
///
/// Storage is row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridShape {
    pub dims: Vec<usize>,
    pub spacing: Vec<f64>,
}

impl GridShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let spacing = vec![1.0; dims.len()];
        Self::with_spacing(dims, spacing)
    }

    pub fn with_spacing(dims: Vec<usize>, spacing: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::UnsupportedDimension(dims.len()));
        }
        if spacing.len() != dims.len() {
            return Err(Error::Shape(format!(
                "{} spacings for {} axes",
                spacing.len(),
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Shape(format!("zero-length axis in {dims:?}")));
        }
        if spacing.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
            return Err(Error::Parameter(format!("spacing must be positive: {spacing:?}")));
        }
        Ok(Self { dims, spacing })
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat-index stride of each axis.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for a in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.dims[a + 1];
        }
        strides
    }

    /// Multi-index of a flat offset.
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for a in (0..self.dims.len()).rev() {
            idx[a] = flat % self.dims[a];
            flat /= self.dims[a];
        }
        idx
    }

    pub fn same_dims(&self, other: &GridShape) -> bool {
        self.dims == other.dims
    }
}

/// A real field sampled on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    shape: GridShape,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{} values for grid {:?}",
                values.len(),
                shape.dims
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite value at index {i}")));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: GridShape) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: GridShape, value: f64) -> Self {
        let values = vec![value; shape.len()];
        Self { shape, values }
    }

    /// Builds a field from values already known to be finite and sized.
    pub(crate) fn from_raw(shape: GridShape, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), shape.len());
        Self { shape, values }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        &self.shape.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn dot(&self, other: &GridField) -> f64 {
        dot(&self.values, &other.values)
    }

    pub(crate) fn check_same(&self, other: &GridField) -> Result<()> {
        if self.shape.same_dims(&other.shape) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "grid {:?} vs {:?}",
                self.shape.dims, other.shape.dims
            )))
        }
    }
}

/// One forward-difference component per axis, each the size of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedGradientField {
    shape: GridShape,
    components: Vec<Vec<f64>>,
}

impl StackedGradientField {
    pub fn new(shape: GridShape, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.len() != shape.ndim() {
            return Err(Error::Shape(format!(
                "{} components for a {}-axis grid",
                components.len(),
                shape.ndim()
            )));
        }
        let n = shape.len();
        if let Some(c) = components.iter().find(|c| c.len() != n) {
            return Err(Error::Shape(format!("component of length {} (expected {n})", c.len())));
        }
        Ok(Self { shape, components })
    }

    pub fn zeros(shape: GridShape) -> Self {
        let components = vec![vec![0.0; shape.len()]; shape.ndim()];
        Self { shape, components }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.components
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    /// Iterates over every entry of every component, axis by axis.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.components.iter().flatten()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let components = self
            .components
            .iter()
            .map(|c| c.iter().map(|&x| f(x)).collect())
            .collect();
        Self {
            shape: self.shape.clone(),
            components,
        }
    }

    /// `self + scale * other`, componentwise.
    pub fn axpy(&self, scale: f64, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + scale * y).collect())
            .collect();
        Ok(Self {
            shape: self.shape.clone(),
            components,
        })
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.iter().zip(other.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self.shape.same_dims(&other.shape) && self.components.len() == other.components.len() {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "gradient field {:?} vs {:?}",
                self.shape.dims, other.shape.dims
            )))
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance between two equal-length slices.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strides_are_row_major() {
        let s = GridShape::new(vec![2, 3, 4]).unwrap();
        assert_eq!(s.strides(), vec![12, 4, 1]);
        assert_eq!(s.unravel(23), vec![1, 2, 3]);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(
            GridShape::new(vec![]),
            Err(Error::UnsupportedDimension(0))
        ));
        assert!(matches!(
            GridShape::new(vec![2, 2, 2, 2]),
            Err(Error::UnsupportedDimension(4))
        ));
        let s = GridShape::new(vec![2, 2]).unwrap();
        assert!(GridField::new(s.clone(), vec![0.0; 3]).is_err());
        assert!(GridField::new(s.clone(), vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(StackedGradientField::new(s, vec![vec![0.0; 4]]).is_err());
    }
}
