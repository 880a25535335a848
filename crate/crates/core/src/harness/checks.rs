//! Numerical invariant checks shared by `selftest`, the test suites and
//! the benches.
//!
//! Each check draws its inputs from a seeded generator and returns the
//! worst violation it saw, so callers decide the tolerance.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::output::write_text;
use crate::error::Result;
use crate::grid::{dot, norm, GridField, GridShape};
use crate::operators::{gradient, gradient_adjoint, DenseMatrix, GradientOperator, Identity, LinearOperator};
use crate::proximal::{bregman_distance, dual_update, l1_subgradient, objective_value, prox_indicator, Constraint};
use crate::solver::{fixed_point_residual, run, schedule_parameters, step_alg1, step_alg2, Mode, SolverConfig, SolverState, StopReason};
use crate::tomo::{siddon_traversal, Radon2d, Ray3d, RayGeometry3D, SinogramGeometry};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_field(rng: &mut impl Rng, shape: &GridShape) -> GridField {
    GridField::new(shape.clone(), random_vec(rng, shape.len())).unwrap()
}

pub fn random_dense(rng: &mut impl Rng, rows: usize, domain: GridShape) -> DenseMatrix {
    let data = random_vec(rng, rows * domain.len());
    DenseMatrix::new(rows, domain.len(), data, domain).unwrap()
}

/// `H·diag(d)` with a random Householder reflection `H`, so the
/// singular values are exactly `|d|`.
pub fn dense_with_singular_values(rng: &mut impl Rng, d: &[f64]) -> DenseMatrix {
    let n = d.len();
    let v = random_vec(rng, n);
    let vv = dot(&v, &v);
    let mut data = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let h = if r == c { 1.0 } else { 0.0 } - 2.0 * v[r] * v[c] / vv;
            data[r * n + c] = h * d[c];
        }
    }
    DenseMatrix::new(n, n, data, GridShape::new(vec![n]).unwrap()).unwrap()
}

/// Random rays from above a 3-D grid down to points on its floor.
pub fn random_rays(rng: &mut impl Rng, shape: &GridShape, count: usize) -> RayGeometry3D {
    let ext: Vec<f64> = shape.dims.iter().zip(&shape.spacing).map(|(&n, &h)| n as f64 * h).collect();
    let mut tx = Vec::with_capacity(count);
    let mut rx = Vec::with_capacity(count);
    for _ in 0..count {
        tx.push([
            rng.random_range(-0.5..1.5) * ext[0],
            rng.random_range(-0.5..1.5) * ext[1],
            rng.random_range(1.5..3.0) * ext[2],
        ]);
        rx.push([rng.random_range(0.0..1.0) * ext[0], rng.random_range(0.0..1.0) * ext[1], 0.0]);
    }
    let rays = (0..count).map(|k| (k, k)).collect();
    RayGeometry3D::new(tx, rx, rays).unwrap()
}

/// Worst `|⟨Tx,y⟩ − ⟨x,Tᵀy⟩| / (‖x‖‖Tᵀy‖ + ‖Tx‖‖y‖)` over random pairs.
pub fn adjoint_mismatch<T: LinearOperator + ?Sized>(op: &T, pairs: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let n = op.domain().len();
    let m = op.range_size();
    let mut tx = vec![0.0; m];
    let mut ty = vec![0.0; n];
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let x = random_vec(&mut rng, n);
        let y = random_vec(&mut rng, m);
        op.apply_flat(&x, &mut tx);
        op.adjoint_flat(&y, &mut ty);
        let scale = norm(&x) * norm(&ty) + norm(&tx) * norm(&y);
        let gap = (dot(&tx, &y) - dot(&x, &ty)).abs();
        worst = worst.max(if scale > 0.0 { gap / scale } else { gap });
    }
    worst
}

/// Worst relative gap in
/// `‖λa+(1−λ)b‖² = λ‖a‖² + (1−λ)‖b‖² − λ(1−λ)‖a−b‖²`.
pub fn convex_combination_identity_gap(trials: usize, n: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a = random_vec(&mut rng, n);
        let b = random_vec(&mut rng, n);
        let l: f64 = rng.random_range(-1.0..2.0);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| l * x + (1.0 - l) * y).collect();
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let lhs = dot(&mix, &mix);
        let rhs = l * dot(&a, &a) + (1.0 - l) * dot(&b, &b) - l * (1.0 - l) * dot(&diff, &diff);
        let scale = lhs.abs().max(dot(&a, &a)).max(dot(&b, &b));
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    worst
}

/// Largest value of
/// `−⟨e, TᵀTe⟩ + ‖TᵀTe‖²/‖T‖²` (non-positive when the inequality holds),
/// relative to `‖e‖²‖T‖²`, on random `e = u₁ − u₂`.
pub fn misfit_cocoercivity_excess<T: LinearOperator + ?Sized>(op: &T, op_norm: f64, trials: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let n = op.domain().len();
    let mut te = vec![0.0; op.range_size()];
    let mut tte = vec![0.0; n];
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let u1 = random_vec(&mut rng, n);
        let u2 = random_vec(&mut rng, n);
        let e: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a - b).collect();
        op.apply_flat(&e, &mut te);
        op.adjoint_flat(&te, &mut tte);
        let lhs = -dot(&e, &tte);
        let rhs = -dot(&tte, &tte) / (op_norm * op_norm);
        worst = worst.max((lhs - rhs) / (dot(&e, &e) * op_norm * op_norm));
    }
    worst
}

/// Smallest Rayleigh quotient of `DᵀD` on random vectors.
pub fn gradient_gram_min_rayleigh(shape: &GridShape, trials: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let u = random_field(&mut rng, shape);
        let dtd = gradient_adjoint(&gradient(&u).unwrap()).unwrap();
        worst = worst.min(u.dot(&dtd) / u.dot(&u));
    }
    worst
}

/// Most negative Bregman distance seen with `q = sign(D u_ref)`.
pub fn bregman_min(shape: &GridShape, trials: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = f64::INFINITY;
    for _ in 0..trials {
        let u = random_field(&mut rng, shape);
        let r = random_field(&mut rng, shape);
        let q = l1_subgradient(&gradient(&r).unwrap());
        worst = worst.min(bregman_distance(&u, &r, &q).unwrap().value);
    }
    worst
}

/// Worst violation of idempotence or the 1-Lipschitz bound of `P_Ω`.
pub fn projection_violation(c: &Constraint, shape: &GridShape, trials: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let x = random_field(&mut rng, shape);
        let y = random_field(&mut rng, shape);
        let px = prox_indicator(&x, c);
        let ppx = prox_indicator(&px, c);
        let py = prox_indicator(&y, c);
        let idem = crate::grid::distance(px.values(), ppx.values());
        let lip = crate::grid::distance(px.values(), py.values()) - crate::grid::distance(x.values(), y.values());
        worst = worst.max(idem).max(lip);
    }
    worst
}

/// Worst excess `F(tu₁+(1−t)u₂) − tF(u₁) − (1−t)F(u₂)` on feasible pairs.
pub fn objective_convexity_excess(shape: &GridShape, trials: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let op = random_dense(&mut rng, shape.len(), shape.clone());
    let c = Constraint::Nonnegative;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let abs = |f: GridField| GridField::new(shape.clone(), f.values().iter().map(|x| x.abs()).collect()).unwrap();
        let u1 = abs(random_field(&mut rng, shape));
        let u2 = abs(random_field(&mut rng, shape));
        let u0 = abs(random_field(&mut rng, shape));
        let w0 = l1_subgradient(&gradient(&u0).unwrap());
        let v = random_vec(&mut rng, shape.len());
        let alpha: f64 = rng.random_range(0.0..2.0);
        let t: f64 = rng.random_range(0.0..1.0);
        let mid = GridField::new(
            shape.clone(),
            u1.values().iter().zip(u2.values()).map(|(a, b)| t * a + (1.0 - t) * b).collect(),
        )
        .unwrap();
        let f = |u: &GridField| objective_value(&op, u, &v, alpha, &u0, &w0, &c).unwrap();
        worst = worst.max(f(&mid) - t * f(&u1) - (1.0 - t) * f(&u2));
    }
    worst
}

/// Largest `‖w⁺‖_∞ − 1` after dual updates from random states.
pub fn dual_ball_excess(shape: &GridShape, trials: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let w = l1_subgradient(&gradient(&random_field(&mut rng, shape)).unwrap());
        let du = gradient(&random_field(&mut rng, shape)).unwrap().map(|x| 10.0 * x);
        let nu: f64 = rng.random_range(0.01..100.0);
        worst = worst.max(dual_update(&w, nu, &du).unwrap().max_abs() - 1.0);
    }
    worst
}

/// `n×n` image: a raised square on a 0.2 background.
pub fn toy_square(n: usize) -> GridField {
    let shape = GridShape::new(vec![n, n]).unwrap();
    let lo = n / 4;
    let hi = n - n / 4;
    let values = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if (lo..hi).contains(&i) && (lo..hi).contains(&j) {
                1.0
            } else {
                0.2
            }
        })
        .collect();
    GridField::new(shape, values).unwrap()
}

/// TV denoising data for the 8×8 toy at noise level `fraction·‖v‖`.
pub fn denoise_toy(fraction: f64, seed: u64) -> (Identity, GridField, crate::tomo::MeasurementSet) {
    let truth = toy_square(8);
    let op = Identity::new(truth.shape().clone());
    let meas = crate::tomo::add_noise(truth.values(), fraction, seed).unwrap();
    (op, truth, meas)
}

/// Iterates Algorithm 1 with the dynamic schedule for `iters` steps,
/// ignoring the stopping rule, and returns the final state.
pub fn iterate_alg1(op: &dyn LinearOperator, v: &[f64], u0: &GridField, cfg: &SolverConfig, op_norm: f64, iters: usize) -> Result<SolverState> {
    let c = Constraint::Nonnegative;
    let mut s = SolverState::init(op, v, u0, &c)?;
    for i in 1..=iters {
        s.params = schedule_parameters(i, op_norm, cfg, cfg.i_star())?;
        s = step_alg1(&s, op, v, &c)?;
    }
    Ok(s)
}

/// Iterates of one algorithm with the dynamic schedule on the 8×8 toy.
pub fn toy_iterates(mode: Mode, iters: usize) -> Result<Vec<GridField>> {
    let (op, truth, meas) = denoise_toy(0.02, 5);
    let cfg = SolverConfig {
        mode,
        ..Default::default()
    };
    let c = Constraint::Nonnegative;
    let mut s = SolverState::init(&op, &meas.values, &GridField::zeros(truth.shape().clone()), &c)?;
    let mut out = Vec::with_capacity(iters + 1);
    out.push(s.u.clone());
    for i in 1..=iters {
        s.params = schedule_parameters(i, 1.0, &cfg, cfg.i_star())?;
        s = match mode {
            Mode::Alg1 => step_alg1(&s, &op, &meas.values, &c)?,
            _ => step_alg2(&s, &op, &meas.values, &c, cfg.lambda)?,
        };
        out.push(s.u.clone());
    }
    Ok(out)
}

/// `(count, largest)` of increases `‖u_i − u_ref‖ − ‖u_{i−1} − u_ref‖`
/// above `slack`, with `u_ref` the last of `iters` iterates.
pub fn monotone_approximation_violations(mode: Mode, iters: usize, slack: f64) -> Result<(usize, f64)> {
    let us = toy_iterates(mode, iters)?;
    let reference = us.last().expect("at least one iterate");
    let d: Vec<f64> = us.iter().map(|u| crate::grid::distance(u.values(), reference.values())).collect();
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    for pair in d.windows(2) {
        let rise = pair[1] - pair[0];
        worst = worst.max(rise);
        if rise > slack {
            count += 1;
        }
    }
    Ok((count, worst))
}

/// Largest iterate gap between Algorithm 1 and Algorithm 2 at
/// `λ = 1 + 1e-9` over `steps` steps on the 8×8 toy.
pub fn lambda_limit_gap(steps: usize) -> Result<f64> {
    let (op, truth, meas) = denoise_toy(0.02, 3);
    let c = Constraint::Nonnegative;
    let cfg = SolverConfig::default();
    let mut a = SolverState::init(&op, &meas.values, &GridField::zeros(truth.shape().clone()), &c)?;
    let mut b = a.clone();
    let mut worst: f64 = 0.0;
    for i in 1..=steps {
        let p = schedule_parameters(i, 1.0, &cfg, cfg.i_star())?;
        a.params = p;
        b.params = p;
        a = step_alg1(&a, &op, &meas.values, &c)?;
        b = step_alg2(&b, &op, &meas.values, &c, 1.0 + 1e-9)?;
        let gap = a.u.values().iter().zip(b.u.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    Ok(worst)
}

/// Fixed-point residual after a long Algorithm-1 run on the 8×8 toy.
pub fn long_run_fixed_point_residual(iters: usize) -> Result<f64> {
    let (op, truth, meas) = denoise_toy(0.02, 5);
    let cfg = SolverConfig {
        mode: Mode::Alg1,
        ..Default::default()
    };
    let u0 = GridField::zeros(truth.shape().clone());
    let s = iterate_alg1(&op, &meas.values, &u0, &cfg, 1.0, iters)?;
    let p = s.params;
    fixed_point_residual(&s.u, &s.w, &op, &meas.values, p.alpha, p.mu, p.nu, &s.w0, &Constraint::Nonnegative)
}

/// `‖Tu_{i*} − Tu^†‖ − (τ_upper + 1)δ` for a stopped run (≤ 0 expected),
/// or `None` when the run did not stop in the band.
pub fn mdp_consequence_excess(mode: Mode, fraction: f64, seed: u64) -> Result<Option<f64>> {
    let (op, truth, meas) = denoise_toy(fraction, seed);
    let cfg = SolverConfig {
        mode,
        ..Default::default()
    };
    let u0 = GridField::zeros(truth.shape().clone());
    let out = run(&op, &meas.values, meas.delta, &u0, &Constraint::Nonnegative, &cfg, Some(&truth))?;
    if out.report.reason != StopReason::MdpBand {
        return Ok(None);
    }
    let tu = op.apply(&out.u)?;
    let tt = op.apply(&truth)?;
    Ok(Some(crate::grid::distance(&tu, &tt) - (cfg.tau_upper + 1.0) * meas.delta))
}

/// Worst relative gap between summed Siddon chords and the clipped
/// segment length.
pub fn siddon_length_gap(shape: &GridShape, rays: &RayGeometry3D) -> f64 {
    let ext: Vec<f64> = shape.dims.iter().zip(&shape.spacing).map(|(&n, &h)| n as f64 * h).collect();
    let mut worst: f64 = 0.0;
    for k in 0..rays.rays.len() {
        let (p0, p1) = rays.segment(k);
        let total: f64 = siddon_traversal(shape, p0, p1).iter().map(|(_, l)| l).sum();
        let clipped = clipped_length(p0, p1, &ext);
        worst = worst.max((total - clipped).abs() / clipped.max(f64::MIN_POSITIVE));
    }
    worst
}

/// Slab clipping of a segment against `[0, ext]³`.
fn clipped_length(p0: [f64; 3], p1: [f64; 3], ext: &[f64]) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut len2 = 0.0;
    for a in 0..3 {
        let d = p1[a] - p0[a];
        len2 += d * d;
        if d == 0.0 {
            if p0[a] < 0.0 || p0[a] > ext[a] {
                return 0.0;
            }
            continue;
        }
        let (t0, t1) = ((0.0 - p0[a]) / d, (ext[a] - p0[a]) / d);
        lo = lo.max(t0.min(t1));
        hi = hi.min(t0.max(t1));
    }
    (hi - lo).max(0.0) * len2.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

fn below(name: &'static str, value: f64, threshold: f64) -> CheckResult {
    CheckResult {
        name,
        value,
        threshold,
        pass: value <= threshold,
    }
}

/// Runs the invariant suite; writes `selftest.csv` into `out_dir` if given.
pub fn selftest(out_dir: Option<&Path>) -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();

    let mut r = rng(101);
    let dense = random_dense(&mut r, 48, GridShape::new(vec![8, 8])?);
    results.push(below("adjoint_dense_8x8", adjoint_mismatch(&dense, 100, 1), 1e-10));
    let radon = Radon2d::new(GridShape::new(vec![8, 8])?, SinogramGeometry::uniform(4, 11, 1.0)?)?;
    results.push(below("adjoint_radon2d_8x8", adjoint_mismatch(&radon, 100, 2), 1e-10));
    let cube = GridShape::new(vec![4, 4, 4])?;
    let rays = random_rays(&mut r, &cube, 10);
    let ray = Ray3d::new(cube.clone(), rays.clone())?;
    results.push(below("adjoint_ray3d_4x4x4", adjoint_mismatch(&ray, 100, 3), 1e-10));
    let grad = GradientOperator::new(GridShape::new(vec![5, 5])?)?;
    results.push(below("adjoint_gradient_5x5", adjoint_mismatch(&grad, 100, 4), 1e-10));
    results.push(below("siddon_length_conservation", siddon_length_gap(&cube, &rays), 1e-9));

    results.push(below("convex_combination_identity", convex_combination_identity_gap(100, 32, 5), 1e-10));
    let d: Vec<f64> = (0..12).map(|k| 0.25 + k as f64 * 0.3).collect();
    let exact = dense_with_singular_values(&mut r, &d);
    let norm_exact = d.iter().cloned().fold(0.0, f64::max);
    results.push(below(
        "misfit_cocoercivity",
        misfit_cocoercivity_excess(&exact, norm_exact, 100, 6),
        1e-12,
    ));
    let sq = GridShape::new(vec![6, 6])?;
    results.push(below("gradient_gram_psd", -gradient_gram_min_rayleigh(&sq, 100, 7), 1e-12));
    results.push(below("bregman_nonnegative", -bregman_min(&sq, 100, 8), 1e-12));
    results.push(below(
        "projection_idempotent_lipschitz",
        projection_violation(&Constraint::boxed(-0.3, 0.6)?, &sq, 100, 9),
        1e-12,
    ));
    results.push(below(
        "objective_convex_on_segments",
        objective_convexity_excess(&GridShape::new(vec![4, 4])?, 100, 10),
        1e-10,
    ));
    results.push(below("dual_update_in_unit_ball", dual_ball_excess(&sq, 100, 11), 0.0));
    results.push(below("fixed_point_residual_8x8", long_run_fixed_point_residual(10_000)?, 1e-6));
    for (name, mode) in [("monotone_approximation_alg1", Mode::Alg1), ("monotone_approximation_alg2", Mode::Alg2)] {
        let (_, rise) = monotone_approximation_violations(mode, 10_000, 1e-9)?;
        results.push(below(name, rise, 1e-9));
    }
    results.push(below("lambda_limit_alg2_to_alg1", lambda_limit_gap(20)?, 1e-6));
    for (name, mode) in [("mdp_consequence_alg1", Mode::Alg1), ("mdp_consequence_alg2", Mode::Alg2)] {
        let excess = mdp_consequence_excess(mode, 0.05, 12)?.unwrap_or(f64::INFINITY);
        results.push(below(name, excess, 1e-9));
    }

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
        let mut text = String::from("check,value,threshold,pass\n");
        for c in &results {
            writeln!(text, "{},{},{},{}", c.name, c.value, c.threshold, c.pass).unwrap();
        }
        write_text(&dir.join("selftest.csv"), &text)?;
    }
    Ok(results)
}
