//! Linear operators with exact adjoints.
//!
//! Every forward map used by the solvers implements [`LinearOperator`]:
//! a pre-image grid, a flat measurement vector, and a matched
//! `apply`/`adjoint` pair. [`LinearOperatorHandle`] bundles the concrete
//! backends so callers can hold any of them behind one type.

mod dense;
mod diff;
mod identity;
mod norm;
mod sparse;

pub use dense::DenseMatrix;
pub use diff::{gradient, gradient_adjoint, GradientOperator};
pub use identity::Identity;
pub use norm::{estimate_operator_norm, OperatorNormEstimate, DEFAULT_NORM_ITERS, DEFAULT_NORM_TOL};
pub use sparse::WeightMatrix;

use crate::error::{Error, Result};
use crate::grid::{GridField, GridShape};
use crate::tomo::{Radon2d, Ray3d};

pub trait LinearOperator: Send + Sync {
    fn domain(&self) -> &GridShape;

    fn range_size(&self) -> usize;

    /// `out = T x` on flat storage. Lengths are the caller's responsibility.
    fn apply_flat(&self, x: &[f64], out: &mut [f64]);

    /// `out = Tᵀ y` on flat storage.
    fn adjoint_flat(&self, y: &[f64], out: &mut [f64]);

    fn apply(&self, u: &GridField) -> Result<Vec<f64>> {
        if !u.shape().same_dims(self.domain()) {
            return Err(Error::Shape(format!(
                "operator domain {:?}, field {:?}",
                self.domain().dims,
                u.dims()
            )));
        }
        let mut out = vec![0.0; self.range_size()];
        self.apply_flat(u.values(), &mut out);
        Ok(out)
    }

    fn adjoint(&self, v: &[f64]) -> Result<GridField> {
        if v.len() != self.range_size() {
            return Err(Error::Shape(format!(
                "measurement length {} (operator range {})",
                v.len(),
                self.range_size()
            )));
        }
        let mut out = vec![0.0; self.domain().len()];
        self.adjoint_flat(v, &mut out);
        Ok(GridField::from_raw(self.domain().clone(), out))
    }
}

/// Which concrete forward model a handle wraps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Identity,
    DenseMatrix,
    Radon2d,
    Ray3d,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Identity => "identity",
            Backend::DenseMatrix => "dense-matrix",
            Backend::Radon2d => "radon2d",
            Backend::Ray3d => "ray3d",
        }
    }
}

/// An immutable forward operator `T`, shareable across threads.
#[derive(Debug, Clone)]
pub enum LinearOperatorHandle {
    Identity(Identity),
    Dense(DenseMatrix),
    Radon2d(Radon2d),
    Ray3d(Ray3d),
}

impl LinearOperatorHandle {
    pub fn backend(&self) -> Backend {
        match self {
            LinearOperatorHandle::Identity(_) => Backend::Identity,
            LinearOperatorHandle::Dense(_) => Backend::DenseMatrix,
            LinearOperatorHandle::Radon2d(_) => Backend::Radon2d,
            LinearOperatorHandle::Ray3d(_) => Backend::Ray3d,
        }
    }

    fn inner(&self) -> &dyn LinearOperator {
        match self {
            LinearOperatorHandle::Identity(op) => op,
            LinearOperatorHandle::Dense(op) => op,
            LinearOperatorHandle::Radon2d(op) => op,
            LinearOperatorHandle::Ray3d(op) => op,
        }
    }
}

impl LinearOperator for LinearOperatorHandle {
    fn domain(&self) -> &GridShape {
        self.inner().domain()
    }

    fn range_size(&self) -> usize {
        self.inner().range_size()
    }

    fn apply_flat(&self, x: &[f64], out: &mut [f64]) {
        self.inner().apply_flat(x, out)
    }

    fn adjoint_flat(&self, y: &[f64], out: &mut [f64]) {
        self.inner().adjoint_flat(y, out)
    }
}

impl From<Identity> for LinearOperatorHandle {
    fn from(op: Identity) -> Self {
        LinearOperatorHandle::Identity(op)
    }
}

impl From<DenseMatrix> for LinearOperatorHandle {
    fn from(op: DenseMatrix) -> Self {
        LinearOperatorHandle::Dense(op)
    }
}

impl From<Radon2d> for LinearOperatorHandle {
    fn from(op: Radon2d) -> Self {
        LinearOperatorHandle::Radon2d(op)
    }
}

impl From<Ray3d> for LinearOperatorHandle {
    fn from(op: Ray3d) -> Self {
        LinearOperatorHandle::Ray3d(op)
    }
}
