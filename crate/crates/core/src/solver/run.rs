use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Mode, SolverConfig};
use super::schedule::{effective_lambda, schedule_parameters};
use super::step::{step_alg1, step_alg2, step_bregman_iterated, SolverState};
use crate::error::{Error, Result};
use crate::grid::{distance, norm, GridField, StackedGradientField};
use crate::operators::{estimate_operator_norm, LinearOperator, DEFAULT_NORM_ITERS, DEFAULT_NORM_TOL};
use crate::proximal::{bregman_distance, Constraint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MdpDecision {
    Continue,
    StopInBand,
}

/// Discrepancy rule: stop once `‖Tu_i − v^δ‖ ≤ τ_upper·δ`. Disabled for `δ = 0`.
pub fn mdp_decide(residual: f64, delta: f64, cfg: &SolverConfig) -> MdpDecision {
    if delta > 0.0 && residual <= cfg.tau_upper * delta {
        MdpDecision::StopInBand
    } else {
        MdpDecision::Continue
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MdpBand,
    OracleFloor,
    /// Noise-free data fitted exactly (`δ = 0`, zero residual).
    ExactData,
    MaxIter,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::MdpBand => "mdp_band",
            StopReason::OracleFloor => "oracle_floor",
            StopReason::ExactData => "exact_data",
            StopReason::MaxIter => "max_iter",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StopReport {
    pub reason: StopReason,
    pub i_star: usize,
    pub final_residual: f64,
    /// `(τ_lower·δ, τ_upper·δ)`.
    pub tau_delta_bounds: (f64, f64),
    /// The stopping residual landed below `τ_lower·δ`.
    pub below_band: bool,
    pub op_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub residual: f64,
    pub objective: f64,
    pub rel_error: Option<f64>,
    pub alpha: f64,
    pub mu: f64,
    pub nu: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub u: GridField,
    pub w: StackedGradientField,
    pub report: StopReport,
    /// One record per stored iterate, starting with `u_0`.
    pub history: Vec<IterRecord>,
}

fn objective(state: &SolverState, alpha: f64, c: &Constraint) -> Result<f64> {
    if !c.contains(state.u.values()) {
        return Ok(f64::INFINITY);
    }
    let misfit = state.residual * state.residual;
    let breg = bregman_distance(&state.u, &state.u_anchor, &state.w0)?;
    Ok(0.5 * misfit + alpha * breg.value)
}

/// Runs the configured iteration from `u0` until the discrepancy rule,
/// the relative-error floor (when `truth` is given) or `max_iter` stops it.
#[allow(clippy::too_many_arguments)]
pub fn run<T: LinearOperator + ?Sized>(
    op: &T,
    v_delta: &[f64],
    delta: f64,
    u0: &GridField,
    c: &Constraint,
    cfg: &SolverConfig,
    truth: Option<&GridField>,
) -> Result<RunOutput> {
    cfg.validate()?;
    c.validate()?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Parameter(format!("delta must be finite and >= 0, got {delta}")));
    }
    if let Some(t) = truth {
        t.check_same(u0)?;
    }
    let op_norm = match cfg.op_norm {
        Some(n) => n,
        None => estimate_operator_norm(op, DEFAULT_NORM_ITERS, DEFAULT_NORM_TOL)?.value,
    };
    if op_norm <= 0.0 {
        return Err(Error::Parameter("operator norm is zero".into()));
    }
    let cap = cfg.i_star();
    let lambda = effective_lambda(cfg, cap);
    let truth_norm = truth.map(|t| t.norm());
    let rel_error = |u: &GridField| -> Option<f64> {
        let t = truth?;
        let n = truth_norm.unwrap();
        Some(if n > 0.0 { distance(u.values(), t.values()) / n } else { norm(u.values()) })
    };

    let start = Instant::now();
    let mut state = SolverState::init(op, v_delta, u0, c)?;
    let mut history = vec![IterRecord {
        iter: 0,
        residual: state.residual,
        objective: objective(&state, cfg.alpha0, c)?,
        rel_error: rel_error(&state.u),
        alpha: 0.0,
        mu: 0.0,
        nu: 0.0,
        wall_ms: start.elapsed().as_millis() as u64,
    }];

    let reason = loop {
        if mdp_decide(state.residual, delta, cfg) == MdpDecision::StopInBand {
            break StopReason::MdpBand;
        }
        if delta == 0.0 && state.residual == 0.0 {
            break StopReason::ExactData;
        }
        if let (Some(eps), Some(err)) = (cfg.epsilon, history.last().and_then(|h| h.rel_error)) {
            if err <= eps {
                break StopReason::OracleFloor;
            }
        }
        if state.iter >= cfg.max_iter {
            break StopReason::MaxIter;
        }
        state.params = schedule_parameters(state.iter + 1, op_norm, cfg, cap)?;
        state = match cfg.mode {
            Mode::Alg1 => step_alg1(&state, op, v_delta, c)?,
            Mode::Alg2 => step_alg2(&state, op, v_delta, c, lambda)?,
            Mode::Bregman => step_bregman_iterated(&state, op, v_delta, c, cfg.inner_iters)?,
        };
        history.push(IterRecord {
            iter: state.iter,
            residual: state.residual,
            objective: objective(&state, state.params.alpha, c)?,
            rel_error: rel_error(&state.u),
            alpha: state.params.alpha,
            mu: state.params.mu,
            nu: state.params.nu,
            wall_ms: start.elapsed().as_millis() as u64,
        });
    };

    let bounds = (cfg.tau_lower * delta, cfg.tau_upper * delta);
    Ok(RunOutput {
        report: StopReport {
            reason,
            i_star: state.iter,
            final_residual: state.residual,
            tau_delta_bounds: bounds,
            below_band: reason == StopReason::MdpBand && state.residual < bounds.0,
            op_norm,
        },
        u: state.u,
        w: state.w,
        history,
    })
}
