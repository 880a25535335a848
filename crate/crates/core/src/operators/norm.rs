use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::grid::{dot, norm};

pub const DEFAULT_NORM_ITERS: usize = 200;
pub const DEFAULT_NORM_TOL: f64 = 1e-8;

const START_SEED: u64 = 0x5eed_0001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNormEstimate {
    pub value: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

/// Spectral norm `‖T‖` by power iteration on `TᵀT`.
///
/// The start vector is drawn from a fixed-seed generator in `[0.5, 1.5)`;
/// a constant start would sit in the null space of difference operators.
pub fn estimate_operator_norm<T: LinearOperator + ?Sized>(
    op: &T,
    max_iters: usize,
    tol: f64,
) -> Result<OperatorNormEstimate> {
    if max_iters == 0 {
        return Err(Error::Parameter("max_iters must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tol must be positive, got {tol}")));
    }
    let n = op.domain().len();
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);

    let mut tx = vec![0.0; op.range_size()];
    let mut y = vec![0.0; n];
    let mut prev: Option<f64> = None;
    for k in 1..=max_iters {
        op.apply_flat(&x, &mut tx);
        op.adjoint_flat(&tx, &mut y);
        let rq = dot(&x, &y);
        let ny = norm(&y);
        if ny == 0.0 {
            return Ok(OperatorNormEstimate {
                value: 0.0,
                iterations_used: k,
                converged: true,
            });
        }
        let done = prev.is_some_and(|p| (rq - p).abs() < tol * rq.abs());
        prev = Some(rq);
        if done {
            return Ok(OperatorNormEstimate {
                value: rq.max(0.0).sqrt(),
                iterations_used: k,
                converged: true,
            });
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    Ok(OperatorNormEstimate {
        value: prev.unwrap_or(0.0).max(0.0).sqrt(),
        iterations_used: max_iters,
        converged: false,
    })
}
