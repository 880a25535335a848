use super::LinearOperator;
use crate::grid::GridShape;

/// Matrix-free identity, the forward map of pure denoising.
#[derive(Debug, Clone, PartialEq)]
pub struct Identity {
    domain: GridShape,
}

impl Identity {
    pub fn new(domain: GridShape) -> Self {
        Self { domain }
    }
}

impl LinearOperator for Identity {
    fn domain(&self) -> &GridShape {
        &self.domain
    }

    fn range_size(&self) -> usize {
        self.domain.len()
    }

    fn apply_flat(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    fn adjoint_flat(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
}
