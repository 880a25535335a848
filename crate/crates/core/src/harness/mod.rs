//! Experiment orchestration: phantoms, problem assembly, noise sweeps,
//! algorithm benchmarks, GPS scenes, the invariant self-test and the CLI.

pub mod checks;
pub mod cli;
mod config;
mod experiments;
mod output;
mod phantom;

pub use config::{ExperimentConfig, Problem};
pub use experiments::{
    build_problem, run_benchmark_alg1_vs_alg2, run_gps_experiments, run_noise_sweep, support_jaccard, BenchOutcome,
    GpsOutcome, GpsRun, ProblemInstance, RunSummary, SweepCell, SweepOutcome, SUPPORT_THRESHOLD,
};
pub use output::{read_volume, write_metrics, write_volume, MetricsRow, METRICS_HEADER};
pub use phantom::{make_phantom, PhantomId};
