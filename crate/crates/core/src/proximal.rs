//! Proximal maps, subgradients and the Bregman-penalized objective.
//!
//! The penalty is anisotropic TV, `J(u) = ‖Du‖₁`. Its convex conjugate
//! `g*` is the indicator of the unit ∞-ball, so every dual prox here is a
//! clamp to `[-1, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, StackedGradientField};
use crate::operators::{gradient, LinearOperator};

/// Admissible set `Ω` for the primal iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Constraint {
    #[default]
    Nonnegative,
    Box {
        lo: f64,
        hi: f64,
    },
    None,
}

impl Constraint {
    pub fn boxed(lo: f64, hi: f64) -> Result<Self> {
        if lo <= hi {
            Ok(Constraint::Box { lo, hi })
        } else {
            Err(Error::Parameter(format!("box bounds lo={lo} > hi={hi}")))
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Constraint::Box { lo, hi } if !(lo <= hi) => {
                Err(Error::Parameter(format!("box bounds lo={lo} > hi={hi}")))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn project_value(&self, x: f64) -> f64 {
        match *self {
            Constraint::Nonnegative => x.max(0.0),
            Constraint::Box { lo, hi } => x.clamp(lo, hi),
            Constraint::None => x,
        }
    }

    #[inline]
    pub fn admits(&self, x: f64) -> bool {
        match *self {
            Constraint::Nonnegative => x >= 0.0,
            Constraint::Box { lo, hi } => (lo..=hi).contains(&x),
            Constraint::None => true,
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.iter().all(|&x| self.admits(x))
    }

    pub(crate) fn project_in_place(&self, u: &mut [f64]) {
        if !matches!(self, Constraint::None) {
            u.iter_mut().for_each(|x| *x = self.project_value(*x));
        }
    }
}

/// `prox_{μh}` for the indicator `h` of `Ω`: the metric projection.
pub fn prox_indicator(u: &GridField, c: &Constraint) -> GridField {
    let mut out = u.clone();
    c.project_in_place(out.values_mut());
    out
}

/// `prox_{νg*}(arg)`: clamp to the unit ∞-ball. `ν` only has to be positive.
pub fn prox_dual_l1(nu: f64, arg: &StackedGradientField) -> Result<StackedGradientField> {
    check_nu(nu)?;
    Ok(arg.map(|x| x.clamp(-1.0, 1.0)))
}

/// Dual ascent step `prox_{νg*}(w + ν·du)`.
pub fn dual_update(w: &StackedGradientField, nu: f64, du: &StackedGradientField) -> Result<StackedGradientField> {
    check_nu(nu)?;
    let arg = w.axpy(nu, du)?;
    prox_dual_l1(nu, &arg)
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("dual step nu must be positive, got {nu}")))
    }
}

/// Element of `∂‖·‖₁(d)`: the sign, with 0 at 0.
pub fn l1_subgradient(d: &StackedGradientField) -> StackedGradientField {
    d.map(|x| {
        if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Anisotropic total variation `‖Du‖₁`.
pub fn tv_value(u: &GridField) -> Result<f64> {
    Ok(gradient(u)?.iter().map(|x| x.abs()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BregmanEvaluation {
    pub value: f64,
    pub j_u: f64,
    pub j_ref: f64,
    pub pairing: f64,
}

/// `D_J(u, u_ref) = J(u) − J(u_ref) − ⟨q_ref, D(u − u_ref)⟩` with
/// `q_ref ∈ ∂g(D u_ref)` supplied by the caller.
pub fn bregman_distance(u: &GridField, u_ref: &GridField, q_ref: &StackedGradientField) -> Result<BregmanEvaluation> {
    u.check_same(u_ref)?;
    if !q_ref.shape().same_dims(u.shape()) {
        return Err(Error::Shape(format!(
            "subgradient {:?} vs field {:?}",
            q_ref.shape().dims,
            u.dims()
        )));
    }
    let du = gradient(u)?;
    let dref = gradient(u_ref)?;
    let j_u: f64 = du.iter().map(|x| x.abs()).sum();
    let j_ref: f64 = dref.iter().map(|x| x.abs()).sum();
    let pairing: f64 = q_ref
        .iter()
        .zip(du.iter().zip(dref.iter()))
        .map(|(q, (a, b))| q * (a - b))
        .sum();
    Ok(BregmanEvaluation {
        value: j_u - j_ref - pairing,
        j_u,
        j_ref,
        pairing,
    })
}

/// `F_α(u) = ½‖Tu − v‖² + α D_J(u, u0) + h(u)`; `+∞` outside `Ω`.
#[allow(clippy::too_many_arguments)]
pub fn objective_value<T: LinearOperator + ?Sized>(
    op: &T,
    u: &GridField,
    v_delta: &[f64],
    alpha: f64,
    u0: &GridField,
    w0: &StackedGradientField,
    c: &Constraint,
) -> Result<f64> {
    let tu = op.apply(u)?;
    if tu.len() != v_delta.len() {
        return Err(Error::Shape(format!(
            "data length {} vs operator range {}",
            v_delta.len(),
            tu.len()
        )));
    }
    let breg = bregman_distance(u, u0, w0)?;
    if !c.contains(u.values()) {
        return Ok(f64::INFINITY);
    }
    let misfit: f64 = tu.iter().zip(v_delta).map(|(a, b)| (a - b) * (a - b)).sum();
    let penalty = if alpha == 0.0 { 0.0 } else { alpha * breg.value };
    Ok(0.5 * misfit + penalty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;
    use crate::operators::DenseMatrix;

    fn field(values: Vec<f64>) -> GridField {
        GridField::new(GridShape::new(vec![values.len()]).unwrap(), values).unwrap()
    }

    fn stacked(values: Vec<f64>) -> StackedGradientField {
        StackedGradientField::new(GridShape::new(vec![values.len()]).unwrap(), vec![values]).unwrap()
    }

    #[test]
    fn projections() {
        let u = field(vec![-1.0, 0.5, 0.0]);
        assert_eq!(prox_indicator(&u, &Constraint::Nonnegative).values(), &[0.0, 0.5, 0.0]);
        let feasible = field(vec![0.0, 0.5, 2.0]);
        assert_eq!(prox_indicator(&feasible, &Constraint::Nonnegative), feasible);
        let b = Constraint::boxed(0.0, 1.0).unwrap();
        assert_eq!(prox_indicator(&field(vec![-0.2, 0.4, 3.0]), &b).values(), &[0.0, 0.4, 1.0]);
        assert_eq!(prox_indicator(&u, &Constraint::None), u);
        assert!(Constraint::boxed(1.0, 0.0).is_err());
    }

    #[test]
    fn dual_prox_is_a_clamp_independent_of_nu() {
        let arg = stacked(vec![-2.0, 0.3, 1.5]);
        assert_eq!(prox_dual_l1(1.0, &arg).unwrap().component(0), &[-1.0, 0.3, 1.0]);
        let inside = stacked(vec![-1.0, 0.0, 0.99]);
        assert_eq!(prox_dual_l1(3.0, &inside).unwrap(), inside);
        assert_eq!(prox_dual_l1(0.5, &arg).unwrap(), prox_dual_l1(5.0, &arg).unwrap());
        assert!(matches!(prox_dual_l1(0.0, &arg), Err(Error::Parameter(_))));
        assert!(prox_dual_l1(-1.0, &arg).is_err());
    }

    #[test]
    fn sign_subgradient() {
        assert_eq!(l1_subgradient(&stacked(vec![-3.0, 0.0, 0.1])).component(0), &[-1.0, 0.0, 1.0]);
        let u0 = GridField::filled(GridShape::new(vec![4, 5]).unwrap(), 2.5);
        let w0 = l1_subgradient(&gradient(&u0).unwrap());
        assert!(w0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn tv_values() {
        assert_eq!(tv_value(&GridField::filled(GridShape::new(vec![3, 3]).unwrap(), 4.0)).unwrap(), 0.0);
        assert_eq!(tv_value(&field(vec![0.0, 1.0, 3.0])).unwrap(), 3.0);
        let u = field(vec![0.3, -1.0, 2.0, 2.0, 0.1]);
        let u2 = field(u.values().iter().map(|x| 2.0 * x).collect());
        assert!((tv_value(&u2).unwrap() - 2.0 * tv_value(&u).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bregman_examples() {
        let u = field(vec![0.3, -1.0, 2.0]);
        let q = l1_subgradient(&gradient(&u).unwrap());
        assert_eq!(bregman_distance(&u, &u, &q).unwrap().value, 0.0);

        let b = bregman_distance(&field(vec![0.0, 2.0]), &field(vec![0.0, 1.0]), &stacked(vec![1.0, 0.0])).unwrap();
        assert_eq!((b.j_u, b.j_ref, b.pairing, b.value), (2.0, 1.0, 1.0, 0.0));

        let other = GridField::zeros(GridShape::new(vec![2, 2]).unwrap());
        assert!(bregman_distance(&other, &u, &q).is_err());
    }

    #[test]
    fn objective_examples() {
        let shape = GridShape::new(vec![4]).unwrap();
        let id = DenseMatrix::identity(shape.clone());
        let u0 = GridField::new(shape.clone(), vec![0.0, 1.0, 1.0, 3.0]).unwrap();
        let w0 = l1_subgradient(&gradient(&u0).unwrap());
        let c = Constraint::Nonnegative;
        assert_eq!(objective_value(&id, &u0, u0.values(), 0.7, &u0, &w0, &c).unwrap(), 0.0);

        let bad = GridField::new(shape.clone(), vec![0.0, -1.0, 1.0, 3.0]).unwrap();
        assert_eq!(objective_value(&id, &bad, u0.values(), 0.7, &u0, &w0, &c).unwrap(), f64::INFINITY);

        let u = GridField::new(shape, vec![1.0, 0.0, 2.0, 2.0]).unwrap();
        let v = [0.5, 0.5, 0.5, 0.5];
        let plain = 0.5 * (0.25 + 0.25 + 2.25 + 2.25);
        assert_eq!(objective_value(&id, &u, &v, 0.0, &u0, &w0, &c).unwrap(), plain);
    }
}
