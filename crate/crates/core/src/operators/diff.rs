//! Forward-difference gradient `D` and its exact transpose.
//!
//! Differences are taken in index units with a replicate (Neumann)
//! boundary: the last slice along each axis has zero difference.

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::grid::{GridField, GridShape, StackedGradientField};

pub fn gradient(u: &GridField) -> Result<StackedGradientField> {
    let shape = u.shape();
    check_dims(shape)?;
    let mut out = StackedGradientField::zeros(shape.clone());
    gradient_flat(shape, u.values(), out.components_mut());
    Ok(out)
}

/// `Dᵀw`, the negative divergence matching [`gradient`]'s boundary.
pub fn gradient_adjoint(w: &StackedGradientField) -> Result<GridField> {
    let shape = w.shape();
    check_dims(shape)?;
    if w.components().len() != shape.ndim() {
        return Err(Error::Shape(format!(
            "{} components for a {}-axis grid",
            w.components().len(),
            shape.ndim()
        )));
    }
    let mut out = vec![0.0; shape.len()];
    gradient_adjoint_flat(shape, w.components(), &mut out);
    Ok(GridField::from_raw(shape.clone(), out))
}

fn check_dims(shape: &GridShape) -> Result<()> {
    match shape.ndim() {
        1..=3 => Ok(()),
        n => Err(Error::UnsupportedDimension(n)),
    }
}

pub(crate) fn gradient_flat<C: AsMut<[f64]>>(shape: &GridShape, u: &[f64], comps: &mut [C]) {
    let strides = shape.strides();
    for (axis, comp) in comps.iter_mut().enumerate() {
        let comp = comp.as_mut();
        let stride = strides[axis];
        let n = shape.dims[axis];
        for (i, c) in comp.iter_mut().enumerate() {
            let pos = (i / stride) % n;
            *c = if pos + 1 < n { u[i + stride] - u[i] } else { 0.0 };
        }
    }
}

pub(crate) fn gradient_adjoint_flat<C: AsRef<[f64]>>(shape: &GridShape, comps: &[C], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let strides = shape.strides();
    for (axis, comp) in comps.iter().enumerate() {
        let comp = comp.as_ref();
        let stride = strides[axis];
        let n = shape.dims[axis];
        for (i, o) in out.iter_mut().enumerate() {
            let pos = (i / stride) % n;
            if pos + 1 < n {
                *o -= comp[i];
            }
            if pos > 0 {
                *o += comp[i - stride];
            }
        }
    }
}

/// `D` viewed as a linear operator onto the concatenated components.
#[derive(Debug, Clone)]
pub struct GradientOperator {
    shape: GridShape,
}

impl GradientOperator {
    pub fn new(shape: GridShape) -> Result<Self> {
        check_dims(&shape)?;
        Ok(Self { shape })
    }
}

impl LinearOperator for GradientOperator {
    fn domain(&self) -> &GridShape {
        &self.shape
    }

    fn range_size(&self) -> usize {
        self.shape.ndim() * self.shape.len()
    }

    fn apply_flat(&self, x: &[f64], out: &mut [f64]) {
        let mut comps: Vec<&mut [f64]> = out.chunks_mut(self.shape.len()).collect();
        gradient_flat(&self.shape, x, &mut comps);
    }

    fn adjoint_flat(&self, y: &[f64], out: &mut [f64]) {
        let comps: Vec<&[f64]> = y.chunks(self.shape.len()).collect();
        gradient_adjoint_flat(&self.shape, &comps, out);
    }
}
