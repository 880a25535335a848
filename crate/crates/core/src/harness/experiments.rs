use std::fmt::Write as _;
use std::path::Path;

use super::config::{ExperimentConfig, Problem};
use super::output::{write_metrics, write_text, write_volume, METRICS_HEADER, MetricsRow};
use super::phantom::make_phantom;
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::operators::{Identity, LinearOperator, LinearOperatorHandle};
use crate::par;
use crate::proximal::Constraint;
use crate::solver::{run, Mode, RunOutput, Schedule, SolverConfig, StopReason};
use crate::tomo::{add_noise, make_gps_scene, select_rays, write_measurements, MeasurementSet, Radon2d, Ray3d, SinogramGeometry};

/// Forward operator plus ground truth for one experiment.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub op: LinearOperatorHandle,
    pub truth: GridField,
    pub tag: String,
}

impl ProblemInstance {
    pub fn measure(&self, noise_fraction: f64, seed: u64) -> Result<MeasurementSet> {
        let clean = self.op.apply(&self.truth)?;
        Ok(add_noise(&clean, noise_fraction, seed)?.with_tag(self.tag.clone()))
    }

    pub fn solve(&self, meas: &MeasurementSet, solver: &SolverConfig) -> Result<RunOutput> {
        let u0 = GridField::zeros(self.truth.shape().clone());
        run(
            &self.op,
            &meas.values,
            meas.delta,
            &u0,
            &Constraint::Nonnegative,
            solver,
            Some(&self.truth),
        )
    }
}

/// Assembles the configured problem. For `gps3d`, `ray_count` keeps only
/// that many rays of the configured scene.
pub fn build_problem(cfg: &ExperimentConfig, ray_count: Option<usize>) -> Result<ProblemInstance> {
    let shape = cfg.grid_shape()?;
    let truth = make_phantom(cfg.phantom, &shape)?;
    let (op, tag): (LinearOperatorHandle, String) = match cfg.problem {
        Problem::Denoise2d => (Identity::new(shape).into(), "identity".into()),
        Problem::Radon2d => {
            let g = SinogramGeometry::covering(&shape, cfg.num_angles)?;
            let tag = format!("radon2d:{}x{}", g.num_angles, g.num_detectors);
            (Radon2d::new(shape, g)?.into(), tag)
        }
        Problem::Gps3d => {
            let mut g = make_gps_scene(&shape, &cfg.gps)?;
            if let Some(k) = ray_count {
                g = select_rays(&g, k)?;
            }
            let tag = format!("gps3d:{}rays", g.rays.len());
            (Ray3d::new(shape, g)?.into(), tag)
        }
    };
    Ok(ProblemInstance { op, truth, tag })
}

/// Final numbers of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub delta: f64,
    pub stop_reason: StopReason,
    pub i_star: usize,
    pub final_residual: f64,
    pub final_rel_error: f64,
}

impl RunSummary {
    fn of(out: &RunOutput, delta: f64) -> Self {
        Self {
            delta,
            stop_reason: out.report.reason,
            i_star: out.report.i_star,
            final_residual: out.report.final_residual,
            final_rel_error: out.history.last().and_then(|h| h.rel_error).unwrap_or(f64::NAN),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub noise_fraction: f64,
    pub seed: u64,
    /// `Err` carries the solver failure message; the sweep keeps going.
    pub result: std::result::Result<RunSummary, String>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub cells: Vec<SweepCell>,
    /// Final relative error is non-decreasing in δ for every seed.
    pub monotone: bool,
    pub diverged: bool,
}

fn tag_num(x: f64) -> String {
    x.to_string()
}

fn write_run(dir: &Path, stem: &str, out: &RunOutput) -> Result<()> {
    write_metrics(&dir.join(format!("{stem}.csv")), &out.history)?;
    write_volume(&dir.join(format!("final_{stem}.csv")), &out.u)
}

/// Solves one `(noise_fraction, seed)` cell per entry and writes a
/// summary with a monotonicity verdict per seed.
pub fn run_noise_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    let dir = cfg.prepare_output_dir()?;
    let problem = build_problem(cfg, None)?;
    write_volume(&dir.join("truth.csv"), &problem.truth)?;

    let jobs: Vec<(f64, u64)> = cfg
        .seeds
        .iter()
        .flat_map(|&s| cfg.noise_fractions.iter().map(move |&f| (f, s)))
        .collect();
    let results = par::map_collect(&jobs, |&(frac, seed)| -> Result<SweepCell> {
        let stem = format!("sweep_{}_{}", tag_num(frac), seed);
        let meas = problem.measure(frac, seed)?;
        write_measurements(&meas, dir.join(format!("meas_{}_{}.csv", tag_num(frac), seed)))?;
        let result = match problem.solve(&meas, &cfg.solver) {
            Ok(out) => {
                write_run(dir, &stem, &out)?;
                Ok(RunSummary::of(&out, meas.delta))
            }
            Err(e @ Error::Divergence { .. }) => Err(e.to_string()),
            Err(e) => return Err(e),
        };
        Ok(SweepCell {
            noise_fraction: frac,
            seed,
            result,
        })
    });
    let cells = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut monotone_by_seed = Vec::new();
    for &seed in &cfg.seeds {
        let mut group: Vec<&SweepCell> = cells.iter().filter(|c| c.seed == seed).collect();
        group.sort_by(|a, b| a.noise_fraction.total_cmp(&b.noise_fraction));
        let errs: Option<Vec<f64>> = group.iter().map(|c| c.result.as_ref().ok().map(|r| r.final_rel_error)).collect();
        let ok = errs.is_some_and(|e| e.windows(2).all(|w| w[0] <= w[1]));
        monotone_by_seed.push((seed, ok));
    }

    let mut text = String::from(
        "noise_fraction,seed,delta,stop_reason,i_star,final_residual,final_rel_error,monotone_in_delta\n",
    );
    for c in &cells {
        let verdict = monotone_by_seed.iter().find(|(s, _)| *s == c.seed).map(|(_, ok)| *ok).unwrap_or(false);
        let verdict = if verdict { "pass" } else { "fail" };
        match &c.result {
            Ok(r) => writeln!(
                text,
                "{},{},{},{},{},{},{},{verdict}",
                c.noise_fraction,
                c.seed,
                r.delta,
                r.stop_reason.name(),
                r.i_star,
                r.final_residual,
                r.final_rel_error
            ),
            Err(_) => writeln!(text, "{},{},,diverged,,,,{verdict}", c.noise_fraction, c.seed),
        }
        .unwrap();
    }
    write_text(&dir.join("summary.csv"), &text)?;

    Ok(SweepOutcome {
        monotone: monotone_by_seed.iter().all(|(_, ok)| *ok),
        diverged: cells.iter().any(|c| c.result.is_err()),
        cells,
    })
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub alg1: RunOutput,
    pub alg2: RunOutput,
    pub alg1_summary: RunSummary,
    pub alg2_summary: RunSummary,
    /// Mode whose run entered the discrepancy band in fewer iterations.
    pub first_to_band: Option<Mode>,
    pub lower_error: Mode,
}

/// Runs Algorithm 1 and Algorithm 2 on one shared measurement (first
/// noise fraction, first seed) and writes paired error curves.
pub fn run_benchmark_alg1_vs_alg2(cfg: &ExperimentConfig) -> Result<BenchOutcome> {
    cfg.validate()?;
    let dir = cfg.prepare_output_dir()?;
    let problem = build_problem(cfg, None)?;
    let meas = problem.measure(cfg.noise_fractions[0], cfg.seeds[0])?;
    write_measurements(&meas, dir.join("bench_meas.csv"))?;

    let modes = [Mode::Alg1, Mode::Alg2];
    let runs = par::map_collect(&modes, |&m| problem.solve(&meas, &cfg.solver.clone().with_mode(m)));
    let mut runs = runs.into_iter();
    let alg1 = runs.next().unwrap()?;
    let alg2 = runs.next().unwrap()?;

    let mut text = format!("mode,{METRICS_HEADER}\n");
    for (mode, out) in [(Mode::Alg1, &alg1), (Mode::Alg2, &alg2)] {
        for r in &out.history {
            writeln!(text, "{},{}", mode.name(), MetricsRow::from(r).csv_fields()).unwrap();
        }
        write_volume(&dir.join(format!("bench_final_{}.csv", mode.name())), &out.u)?;
    }
    write_text(&dir.join("bench.csv"), &text)?;
    write_volume(&dir.join("truth.csv"), &problem.truth)?;

    let s1 = RunSummary::of(&alg1, meas.delta);
    let s2 = RunSummary::of(&alg2, meas.delta);
    let in_band = |s: &RunSummary| s.stop_reason == StopReason::MdpBand;
    let first_to_band = match (in_band(&s1), in_band(&s2)) {
        (true, true) if s2.i_star < s1.i_star => Some(Mode::Alg2),
        (true, true) => Some(Mode::Alg1),
        (true, false) => Some(Mode::Alg1),
        (false, true) => Some(Mode::Alg2),
        (false, false) => None,
    };
    let lower_error = if s2.final_rel_error <= s1.final_rel_error {
        Mode::Alg2
    } else {
        Mode::Alg1
    };

    let mut text = String::from("mode,stop_reason,i_star,final_residual,final_rel_error,first_to_band,lower_final_error\n");
    for (mode, s) in [(Mode::Alg1, &s1), (Mode::Alg2, &s2)] {
        writeln!(
            text,
            "{},{},{},{},{},{},{}",
            mode.name(),
            s.stop_reason.name(),
            s.i_star,
            s.final_residual,
            s.final_rel_error,
            first_to_band == Some(mode),
            lower_error == mode
        )
        .unwrap();
    }
    write_text(&dir.join("bench_summary.csv"), &text)?;

    Ok(BenchOutcome {
        alg1,
        alg2,
        alg1_summary: s1,
        alg2_summary: s2,
        first_to_band,
        lower_error,
    })
}

/// Jaccard index between `{u > threshold·max u}` and `voxels`.
pub fn support_jaccard(u: &GridField, voxels: &[usize], rel_threshold: f64) -> f64 {
    let max = u.values().iter().cloned().fold(0.0, f64::max);
    let mut in_ray = vec![false; u.len()];
    for &v in voxels {
        in_ray[v] = true;
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (j, &x) in u.values().iter().enumerate() {
        let s = max > 0.0 && x > rel_threshold * max;
        inter += (s && in_ray[j]) as usize;
        union += (s || in_ray[j]) as usize;
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Relative threshold used for the reconstruction support in GPS runs.
pub const SUPPORT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct GpsRun {
    pub schedule: Schedule,
    pub num_rays: usize,
    pub summary: RunSummary,
    pub support_jaccard: f64,
    pub output: RunOutput,
}

#[derive(Debug, Clone)]
pub struct GpsOutcome {
    pub runs: Vec<GpsRun>,
}

impl GpsOutcome {
    pub fn find(&self, schedule: Schedule, num_rays: usize) -> Option<&GpsRun> {
        self.runs.iter().find(|r| r.schedule == schedule && r.num_rays == num_rays)
    }
}

fn schedule_name(s: Schedule) -> &'static str {
    match s {
        Schedule::Dynamic => "dynamic",
        Schedule::FixedTheorem => "fixed_theorem",
    }
}

/// Sweeps `{dynamic, fixed_theorem}` × `ray_counts` on the GPS scene.
pub fn run_gps_experiments(cfg: &ExperimentConfig) -> Result<GpsOutcome> {
    cfg.validate()?;
    if cfg.problem != Problem::Gps3d {
        return Err(Error::Config(format!("gps experiments need problem gps3d, got {}", cfg.problem.name())));
    }
    let dir = cfg.prepare_output_dir()?;
    let mut jobs = Vec::new();
    for &k in &cfg.ray_counts {
        for s in [Schedule::Dynamic, Schedule::FixedTheorem] {
            jobs.push((s, k));
        }
    }
    let frac = cfg.noise_fractions[0];
    let seed = cfg.seeds[0];
    let runs = par::map_collect(&jobs, |&(schedule, k)| -> Result<GpsRun> {
        let problem = build_problem(cfg, Some(k))?;
        let LinearOperatorHandle::Ray3d(ray_op) = &problem.op else {
            unreachable!("gps3d builds a ray transform")
        };
        let meas = problem.measure(frac, seed)?;
        let solver = SolverConfig {
            schedule,
            ..cfg.solver.clone()
        };
        let out = problem.solve(&meas, &solver)?;
        let stem = format!("gps_{}_{k}", schedule_name(schedule));
        write_metrics(&dir.join(format!("{stem}.csv")), &out.history)?;
        write_volume(&dir.join(format!("gps_volume_{}_{k}.csv", schedule_name(schedule))), &out.u)?;
        if schedule == Schedule::Dynamic {
            write_text(&dir.join(format!("gps_geometry_{k}.json")), &ray_op.geometry().to_json()?)?;
            write_measurements(&meas, dir.join(format!("gps_meas_{k}.csv")))?;
        }
        Ok(GpsRun {
            schedule,
            num_rays: ray_op.range_size(),
            summary: RunSummary::of(&out, meas.delta),
            support_jaccard: support_jaccard(&out.u, &ray_op.traversed_voxels(), SUPPORT_THRESHOLD),
            output: out,
        })
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    write_volume(&dir.join("gps_truth.csv"), &make_phantom(cfg.phantom, &cfg.grid_shape()?)?)?;

    let mut text = String::from(
        "schedule,num_rays,stop_reason,i_star,final_residual,final_rel_error,support_jaccard\n",
    );
    for r in &runs {
        writeln!(
            text,
            "{},{},{},{},{},{},{}",
            schedule_name(r.schedule),
            r.num_rays,
            r.summary.stop_reason.name(),
            r.summary.i_star,
            r.summary.final_residual,
            r.summary.final_rel_error,
            r.support_jaccard
        )
        .unwrap();
    }
    write_text(&dir.join("gps_summary.csv"), &text)?;
    Ok(GpsOutcome { runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridShape;

    #[test]
    fn jaccard_counts() {
        let u = GridField::new(GridShape::new(vec![4]).unwrap(), vec![0.0, 1.0, 0.5, 0.01]).unwrap();
        assert_eq!(support_jaccard(&u, &[1, 2], 0.05), 1.0);
        assert_eq!(support_jaccard(&u, &[1], 0.05), 0.5);
        assert_eq!(support_jaccard(&u, &[0, 3], 0.05), 0.0);
    }

    #[test]
    fn sweep_bookkeeping() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            problem: Problem::Denoise2d,
            shape: Some(vec![12, 12]),
            output_dir: dir.path().to_path_buf(),
            solver: SolverConfig {
                max_iter: 200,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = run_noise_sweep(&cfg).unwrap();
        assert_eq!(out.cells.len(), 3);
        for f in ["0.01", "0.03", "0.05"] {
            assert!(dir.path().join(format!("sweep_{f}_1.csv")).exists());
        }
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 4);
    }

    #[test]
    fn empty_noise_list_is_a_config_error() {
        let cfg = ExperimentConfig {
            noise_fractions: vec![],
            ..Default::default()
        };
        assert!(matches!(run_noise_sweep(&cfg), Err(Error::Config(_))));
    }
}
