use super::config::{Mode, Schedule, SolverConfig};
use crate::error::{Error, Result};

/// Upper clip on the dual step.
pub const NU_MAX: f64 = 1e12;

/// Bound on `‖D‖²` for grids of up to three axes.
pub const GRADIENT_NORM2_MAX: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepParams {
    pub mu: f64,
    pub nu: f64,
    pub alpha: f64,
}

/// Step length, dual step and regularization weight for iteration `i ≥ 1`.
///
/// `ν_i` saturates `μ_iα_i ≤ 1/√ν_i`, clipped to [`NU_MAX`]. In
/// Bregman-iterated mode the inner sweeps take `μ_i/2` and
/// `ν_i ≤ 1/(μ_iα_i‖D‖²)`.
pub fn schedule_parameters(i: usize, op_norm: f64, cfg: &SolverConfig, i_star_cap: usize) -> Result<StepParams> {
    if i == 0 {
        return Err(Error::Parameter("schedules are 1-indexed; i must be >= 1".into()));
    }
    if !(op_norm > 0.0 && op_norm.is_finite()) {
        return Err(Error::Parameter(format!("operator norm must be positive, got {op_norm}")));
    }
    let norm2 = op_norm * op_norm;
    let mu = match cfg.schedule {
        Schedule::Dynamic => cfg.mu_safety * 2.0 / norm2,
        Schedule::FixedTheorem => 1.0 / (2.0 * i_star_cap.max(1) as f64 * norm2),
    };
    let alpha = cfg.alpha0 / i as f64;
    let nu = (1.0 / (mu * alpha).powi(2)).min(NU_MAX);
    if cfg.mode == Mode::Bregman {
        // inner sweeps: half step, dual step within the primal-dual bound
        let mu = mu / 2.0;
        let nu = nu.min(1.0 / (2.0 * mu * alpha * GRADIENT_NORM2_MAX));
        return Ok(StepParams { mu, nu, alpha });
    }
    Ok(StepParams { mu, nu, alpha })
}

/// Extrapolation weight actually used by Algorithm 2.
pub fn effective_lambda(cfg: &SolverConfig, i_star_cap: usize) -> f64 {
    match (cfg.mode, cfg.schedule) {
        (Mode::Alg2, Schedule::FixedTheorem) => 2.0 / i_star_cap.max(1) as f64,
        _ => cfg.lambda,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dynamic() -> SolverConfig {
        SolverConfig {
            schedule: Schedule::Dynamic,
            mu_safety: 1.0,
            alpha0: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn dynamic_first_iteration() {
        let p = schedule_parameters(1, 2.0, &dynamic(), 100).unwrap();
        assert_eq!(p, StepParams { mu: 0.5, nu: 4.0, alpha: 1.0 });
    }

    #[test]
    fn alpha_decays_like_one_over_i() {
        let p = schedule_parameters(4, 2.0, &dynamic(), 100).unwrap();
        assert_eq!(p.alpha, 0.25);
    }

    #[test]
    fn fixed_theorem_step_is_constant() {
        let cfg = SolverConfig {
            schedule: Schedule::FixedTheorem,
            ..dynamic()
        };
        for i in [1, 2, 9, 10, 50] {
            assert_eq!(schedule_parameters(i, 1.0, &cfg, 10).unwrap().mu, 1.0 / 20.0);
        }
        let alg2 = SolverConfig { mode: Mode::Alg2, ..cfg };
        assert_eq!(effective_lambda(&alg2, 10), 0.2);
        assert_eq!(effective_lambda(&dynamic(), 10), dynamic().lambda);
    }

    #[test]
    fn bregman_inner_steps_are_damped() {
        let base = schedule_parameters(2, 1.0, &dynamic(), 1).unwrap();
        let cfg = SolverConfig { mode: Mode::Bregman, ..dynamic() };
        let p = schedule_parameters(2, 1.0, &cfg, 1).unwrap();
        assert_eq!(p.mu, base.mu / 2.0);
        assert_eq!(p.alpha, base.alpha);
        assert_eq!(p.nu, 1.0 / (base.mu * base.alpha * GRADIENT_NORM2_MAX));
    }

    #[test]
    fn nu_is_clipped() {
        let p = schedule_parameters(1_000_000_000, 1.0, &dynamic(), 1).unwrap();
        assert_eq!(p.nu, NU_MAX);
    }

    #[test]
    fn zero_index_rejected() {
        assert!(matches!(schedule_parameters(0, 1.0, &dynamic(), 1), Err(Error::Parameter(_))));
        assert!(schedule_parameters(1, 0.0, &dynamic(), 1).is_err());
    }
}
