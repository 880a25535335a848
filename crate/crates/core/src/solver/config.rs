use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Alg1,
    Alg2,
    #[serde(alias = "bregman_iterated")]
    Bregman,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Alg1 => "alg1",
            Mode::Alg2 => "alg2",
            Mode::Bregman => "bregman",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alg1" => Ok(Mode::Alg1),
            "alg2" => Ok(Mode::Alg2),
            "bregman" | "bregman_iterated" => Ok(Mode::Bregman),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `μ_i = s·2/‖T‖²`, `α_i = α₀/i`, `ν_i = 1/(μ_iα_i)²`.
    Dynamic,
    /// `μ = 1/(2 i* ‖T‖²)`, `α_i = α₀/i`, and `λ = 2/i*` for Algorithm 2.
    FixedTheorem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mode: Mode,
    pub tau_lower: f64,
    pub tau_upper: f64,
    pub alpha0: f64,
    /// Extrapolation weight for Algorithm 2, in `(1, 2)`.
    pub lambda: f64,
    /// Relative-error floor; only consulted when ground truth is supplied.
    pub epsilon: Option<f64>,
    pub max_iter: usize,
    pub schedule: Schedule,
    pub mu_safety: f64,
    /// Iteration budget `i*` used by the fixed schedule; defaults to `max_iter`.
    pub i_star_cap: Option<usize>,
    /// Inner Algorithm-1 sweeps per outer Bregman step.
    pub inner_iters: usize,
    /// Overrides the power-iteration estimate of `‖T‖`.
    pub op_norm: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Alg2,
            tau_lower: 1.1,
            tau_upper: 1.5,
            alpha0: 1.0,
            lambda: 1.05,
            epsilon: None,
            max_iter: 5000,
            schedule: Schedule::Dynamic,
            mu_safety: 0.9,
            i_star_cap: None,
            inner_iters: 10,
            op_norm: None,
        }
    }
}

impl SolverConfig {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn i_star(&self) -> usize {
        self.i_star_cap.unwrap_or(self.max_iter).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.tau_lower > 1.0) {
            return bad(format!("tau_lower must exceed 1, got {}", self.tau_lower));
        }
        if !(self.tau_upper >= self.tau_lower) {
            return bad(format!(
                "tau_upper ({}) must be >= tau_lower ({})",
                self.tau_upper, self.tau_lower
            ));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return bad(format!("alpha0 must be positive, got {}", self.alpha0));
        }
        if self.mode == Mode::Alg2 && self.schedule == Schedule::Dynamic && !(self.lambda > 1.0 && self.lambda < 2.0) {
            return bad(format!("lambda must lie in (1, 2), got {}", self.lambda));
        }
        if !(self.mu_safety > 0.0 && self.mu_safety <= 1.0) {
            return bad(format!("mu_safety must lie in (0, 1], got {}", self.mu_safety));
        }
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0) {
                return bad(format!("epsilon must be >= 0, got {eps}"));
            }
        }
        if self.i_star_cap == Some(0) {
            return bad("i_star_cap must be at least 1".into());
        }
        if self.inner_iters == 0 {
            return bad("inner_iters must be at least 1".into());
        }
        if let Some(n) = self.op_norm {
            if !(n > 0.0 && n.is_finite()) {
                return bad(format!("op_norm must be positive, got {n}"));
            }
        }
        Ok(())
    }
}
