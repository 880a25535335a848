//! Primal-dual iterations for the Bregman/TV-penalized objective.
//!
//! Two update rules share the same primal and dual steps:
//!
//! * [`step_alg1`] takes a projected gradient-type primal step, then a
//!   dual ascent step at the *new* primal iterate.
//! * [`step_alg2`] computes the same pair from `û_{i+1}`, then
//!   extrapolates `u_{i+1} = (1−λ)u_i + λû_{i+1}` and re-projects onto `Ω`.
//!
//! [`step_bregman_iterated`] wraps inner Algorithm-1 sweeps and moves
//! the Bregman anchor to the latest outer iterate. [`run`] drives any of
//! them under Morozov's discrepancy principle.

mod config;
mod run;
mod schedule;
mod step;

pub use config::{Mode, Schedule, SolverConfig};
pub use run::{mdp_decide, run, IterRecord, MdpDecision, RunOutput, StopReason, StopReport};
pub use schedule::{effective_lambda, schedule_parameters, StepParams, GRADIENT_NORM2_MAX, NU_MAX};
pub use step::{fixed_point_residual, step_alg1, step_alg2, step_bregman_iterated, SolverState};
