use super::schedule::StepParams;
use crate::error::{Error, Result};
use crate::grid::{distance, GridField, StackedGradientField};
use crate::operators::{gradient, gradient_adjoint, LinearOperator};
use crate::proximal::{l1_subgradient, Constraint};

/// Iterate pair `(u_i, w_i)` with the anchors of the Bregman penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    /// Current primal iterate `u_i`, always feasible.
    pub u: GridField,
    /// `û_i` from the last Algorithm-2 step.
    pub u_hat: Option<GridField>,
    /// Dual iterate `w_i`, always in the unit ∞-ball.
    pub w: StackedGradientField,
    /// Anchor `u₀` of the Bregman penalty (moves in Bregman-iterated mode).
    pub u_anchor: GridField,
    /// Subgradient `w₀ ∈ ∂‖D u_anchor‖₁`.
    pub w0: StackedGradientField,
    pub iter: usize,
    /// Parameters for the next step, set by the scheduler.
    pub params: StepParams,
    /// `‖T u_i − v^δ‖`.
    pub residual: f64,
    /// Cached `T u_i`.
    pub tu: Vec<f64>,
}

impl SolverState {
    /// Projects `u0` onto `Ω`, sets `w₀ ∈ ∂‖Du₀‖₁` and `w₁ = w₀`.
    pub fn init<T: LinearOperator + ?Sized>(op: &T, v_delta: &[f64], u0: &GridField, c: &Constraint) -> Result<Self> {
        check_data(op, v_delta)?;
        let mut u = u0.clone();
        c.project_in_place(u.values_mut());
        let tu = op.apply(&u)?;
        let w0 = l1_subgradient(&gradient(&u)?);
        Ok(Self {
            residual: distance(&tu, v_delta),
            tu,
            u_anchor: u.clone(),
            u,
            u_hat: None,
            w: w0.clone(),
            w0,
            iter: 0,
            params: StepParams::default(),
        })
    }
}

fn check_data<T: LinearOperator + ?Sized>(op: &T, v_delta: &[f64]) -> Result<()> {
    if v_delta.len() != op.range_size() {
        return Err(Error::Shape(format!(
            "data length {} vs operator range {}",
            v_delta.len(),
            op.range_size()
        )));
    }
    Ok(())
}

fn check_params(p: &StepParams) -> Result<()> {
    if !(p.mu > 0.0 && p.nu > 0.0 && p.alpha >= 0.0) {
        return Err(Error::Parameter(format!(
            "step parameters must be scheduled before stepping (mu={}, nu={}, alpha={})",
            p.mu, p.nu, p.alpha
        )));
    }
    Ok(())
}

fn ensure_finite(values: &[f64], iter: usize, quantity: &'static str) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { iter, quantity })
    }
}

/// `prox_{μh}[u − μ(Tᵀ(Tu − v) + α Dᵀ(w − w₀))]` with `Tu` supplied.
#[allow(clippy::too_many_arguments)]
fn primal_step<T: LinearOperator + ?Sized>(
    op: &T,
    u: &GridField,
    tu: &[f64],
    w: &StackedGradientField,
    w0: &StackedGradientField,
    v_delta: &[f64],
    p: &StepParams,
    c: &Constraint,
) -> Result<GridField> {
    let r: Vec<f64> = tu.iter().zip(v_delta).map(|(a, b)| a - b).collect();
    let mut grad = vec![0.0; u.len()];
    op.adjoint_flat(&r, &mut grad);
    let dw = gradient_adjoint(&w.axpy(-1.0, w0)?)?;
    let mut next = u.clone();
    for ((x, g), d) in next.values_mut().iter_mut().zip(&grad).zip(dw.values()) {
        *x = c.project_value(*x - p.mu * (g + p.alpha * d));
    }
    Ok(next)
}

/// `prox_{νg*}(w + ν D u)`.
fn dual_step(w: &StackedGradientField, u: &GridField, nu: f64) -> Result<StackedGradientField> {
    let du = gradient(u)?;
    let arg = w.axpy(nu, &du)?;
    Ok(arg.map(|x| x.clamp(-1.0, 1.0)))
}

struct Update {
    u: GridField,
    w: StackedGradientField,
}

fn alg1_update<T: LinearOperator + ?Sized>(state: &SolverState, op: &T, v_delta: &[f64], c: &Constraint) -> Result<Update> {
    let i = state.iter + 1;
    let u = primal_step(op, &state.u, &state.tu, &state.w, &state.w0, v_delta, &state.params, c)?;
    ensure_finite(u.values(), i, "primal iterate")?;
    let w = dual_step(&state.w, &u, state.params.nu)?;
    ensure_finite(&w.iter().copied().collect::<Vec<_>>(), i, "dual iterate")?;
    Ok(Update { u, w })
}

fn finish<T: LinearOperator + ?Sized>(
    state: &SolverState,
    op: &T,
    v_delta: &[f64],
    u: GridField,
    u_hat: Option<GridField>,
    w: StackedGradientField,
) -> Result<SolverState> {
    let i = state.iter + 1;
    let tu = op.apply(&u)?;
    let residual = distance(&tu, v_delta);
    if !residual.is_finite() {
        return Err(Error::Divergence { iter: i, quantity: "residual" });
    }
    Ok(SolverState {
        u,
        u_hat,
        w,
        u_anchor: state.u_anchor.clone(),
        w0: state.w0.clone(),
        iter: i,
        params: state.params,
        residual,
        tu,
    })
}

/// One Algorithm-1 iteration with the parameters already in `state.params`.
pub fn step_alg1<T: LinearOperator + ?Sized>(state: &SolverState, op: &T, v_delta: &[f64], c: &Constraint) -> Result<SolverState> {
    check_data(op, v_delta)?;
    check_params(&state.params)?;
    let Update { u, w } = alg1_update(state, op, v_delta, c)?;
    finish(state, op, v_delta, u, None, w)
}

/// One Algorithm-2 iteration: the Algorithm-1 pair at `û_{i+1}`, then
/// `u_{i+1} = P_Ω[(1−λ)u_i + λû_{i+1}]`.
pub fn step_alg2<T: LinearOperator + ?Sized>(
    state: &SolverState,
    op: &T,
    v_delta: &[f64],
    c: &Constraint,
    lambda: f64,
) -> Result<SolverState> {
    check_data(op, v_delta)?;
    check_params(&state.params)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
    }
    let Update { u: u_hat, w } = alg1_update(state, op, v_delta, c)?;
    let mut u = u_hat.clone();
    for (x, prev) in u.values_mut().iter_mut().zip(state.u.values()) {
        *x = c.project_value((1.0 - lambda) * prev + lambda * *x);
    }
    ensure_finite(u.values(), state.iter + 1, "extrapolated iterate")?;
    finish(state, op, v_delta, u, Some(u_hat), w)
}

/// One outer step of the iterated-Bregman scheme.
///
/// Runs `inner_iters` Algorithm-1 sweeps against the penalty
/// `D_J(·, u_k)` with subgradient `w_k = sign(D u_k)`, then moves the
/// anchor to the result. The sweeps use `state.params` unchanged.
pub fn step_bregman_iterated<T: LinearOperator + ?Sized>(
    state: &SolverState,
    op: &T,
    v_delta: &[f64],
    c: &Constraint,
    inner_iters: usize,
) -> Result<SolverState> {
    check_data(op, v_delta)?;
    check_params(&state.params)?;
    if inner_iters == 0 {
        return Err(Error::Parameter("inner_iters must be at least 1".into()));
    }
    let mut inner = state.clone();
    for _ in 0..inner_iters {
        let Update { u, w } = alg1_update(&inner, op, v_delta, c)?;
        inner.tu = op.apply(&u)?;
        inner.u = u;
        inner.w = w;
    }
    let residual = distance(&inner.tu, v_delta);
    if !residual.is_finite() {
        return Err(Error::Divergence { iter: state.iter + 1, quantity: "residual" });
    }
    let w_next = l1_subgradient(&gradient(&inner.u)?);
    Ok(SolverState {
        u_anchor: inner.u.clone(),
        u: inner.u,
        u_hat: None,
        w: w_next.clone(),
        w0: w_next,
        iter: state.iter + 1,
        params: state.params,
        residual,
        tu: inner.tu,
    })
}

/// Distance of `(u, w)` from the fixed-point system characterizing the
/// regularized minimizer:
///
/// `max(‖u − P_Ω[u − μ(Tᵀ(Tu−v) + αDᵀ(w−w₀))]‖/(1+‖u‖), ‖w − clamp(w + νDu)‖/(1+‖w‖))`.
#[allow(clippy::too_many_arguments)]
pub fn fixed_point_residual<T: LinearOperator + ?Sized>(
    u: &GridField,
    w: &StackedGradientField,
    op: &T,
    v_delta: &[f64],
    alpha: f64,
    mu: f64,
    nu: f64,
    w0: &StackedGradientField,
    c: &Constraint,
) -> Result<f64> {
    if !(mu > 0.0 && nu > 0.0) {
        return Err(Error::Parameter(format!("mu and nu must be positive (mu={mu}, nu={nu})")));
    }
    check_data(op, v_delta)?;
    let tu = op.apply(u)?;
    let p = StepParams { mu, nu, alpha };
    let u_next = primal_step(op, u, &tu, w, w0, v_delta, &p, c)?;
    let w_next = dual_step(w, u, nu)?;
    let primal = distance(u.values(), u_next.values()) / (1.0 + u.norm());
    let dual = w.axpy(-1.0, &w_next)?.norm() / (1.0 + w.norm());
    Ok(primal.max(dual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;
    use crate::operators::DenseMatrix;

    fn line(values: &[f64]) -> GridField {
        GridField::new(GridShape::new(vec![values.len()]).unwrap(), values.to_vec()).unwrap()
    }

    fn setup(u0: &[f64], v: &[f64]) -> (DenseMatrix, SolverState) {
        let u0 = line(u0);
        let id = DenseMatrix::identity(u0.shape().clone());
        let state = SolverState::init(&id, v, &u0, &Constraint::Nonnegative).unwrap();
        (id, state)
    }

    #[test]
    fn exact_data_without_penalty_is_stationary() {
        let (id, mut s) = setup(&[0.0, 1.0, 3.0, 2.0], &[0.0, 1.0, 3.0, 2.0]);
        s.params = StepParams { mu: 0.7, nu: 3.0, alpha: 0.0 };
        let next = step_alg1(&s, &id, &[0.0, 1.0, 3.0, 2.0], &Constraint::Nonnegative).unwrap();
        assert_eq!(next.u, s.u);
        assert_eq!(next.iter, 1);
        assert_eq!(next.residual, 0.0);
    }

    #[test]
    fn negative_components_are_zeroed() {
        let v = [-5.0, 2.0, -1.0, 0.5];
        let (id, mut s) = setup(&[1.0; 4], &v);
        s.params = StepParams { mu: 1.0, nu: 1.0, alpha: 0.0 };
        let next = step_alg1(&s, &id, &v, &Constraint::Nonnegative).unwrap();
        assert_eq!(next.u.values(), &[0.0, 2.0, 0.0, 0.5]);
    }

    #[test]
    fn extrapolation_without_projection() {
        // u_i = [0], û = [2] with λ = 1.5 → [3]
        let u0 = line(&[0.0]);
        let id = DenseMatrix::identity(u0.shape().clone());
        let mut s = SolverState::init(&id, &[2.0], &u0, &Constraint::None).unwrap();
        s.params = StepParams { mu: 1.0, nu: 1.0, alpha: 0.0 };
        let next = step_alg2(&s, &id, &[2.0], &Constraint::None, 1.5).unwrap();
        assert_eq!(next.u_hat.as_ref().unwrap().values(), &[2.0]);
        assert_eq!(next.u.values(), &[3.0]);
    }

    #[test]
    fn extrapolation_fixed_point() {
        let v = [1.0, 2.0, 2.0, 0.5];
        let (id, mut s) = setup(&v, &v);
        s.params = StepParams { mu: 0.4, nu: 2.0, alpha: 0.0 };
        for lambda in [1.2, 1.5, 1.9] {
            assert_eq!(step_alg2(&s, &id, &v, &Constraint::Nonnegative, lambda).unwrap().u, s.u);
        }
    }

    #[test]
    fn unscheduled_state_is_rejected() {
        let (id, s) = setup(&[1.0; 4], &[1.0; 4]);
        assert!(matches!(step_alg1(&s, &id, &[1.0; 4], &Constraint::None), Err(Error::Parameter(_))));
    }

    #[test]
    fn overflow_is_reported_as_divergence() {
        let v = [1.0, 2.0, 2.0, 0.5];
        let (id, mut s) = setup(&[1.0; 4], &v);
        s.params = StepParams { mu: f64::MAX, nu: 1.0, alpha: 1.0 };
        let mut big = s.clone();
        big.u = line(&[f64::MAX, 0.0, 0.0, 0.0]);
        big.tu = big.u.values().to_vec();
        let err = step_alg1(&big, &id, &v, &Constraint::None).unwrap_err();
        assert!(matches!(err, Error::Divergence { iter: 1, .. }), "{err}");
    }

    #[test]
    fn stationary_pair_has_zero_fixed_point_residual() {
        let v = [0.0, 1.0, 1.0, 4.0];
        let (id, s) = setup(&v, &v);
        for alpha in [0.0, 0.3, 10.0] {
            let r = fixed_point_residual(&s.u, &s.w0, &id, &v, alpha, 0.5, 2.0, &s.w0, &Constraint::Nonnegative).unwrap();
            assert!(r <= 1e-12, "alpha {alpha}: {r}");
        }
    }
}
