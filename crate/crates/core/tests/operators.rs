use nalgebra::DMatrix;

use tvpd::harness::checks::{random_dense, random_field, random_rays, random_vec, rng};
use tvpd::harness::{make_phantom, PhantomId};
use tvpd::operators::{
    estimate_operator_norm, gradient, gradient_adjoint, DenseMatrix, GradientOperator, LinearOperator,
};
use tvpd::tomo::{siddon_traversal, Radon2d, Ray3d, RayGeometry3D, SinogramGeometry};
use tvpd::{GridField, GridShape, StackedGradientField};

/// Column-by-column assembly of `T` and row-by-row assembly of `Tᵀ`.
fn assemble<T: LinearOperator + ?Sized>(op: &T) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = op.domain().len();
    let m = op.range_size();
    let mut fwd = DMatrix::zeros(m, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; m];
    for j in 0..n {
        e[j] = 1.0;
        op.apply_flat(&e, &mut col);
        e[j] = 0.0;
        for i in 0..m {
            fwd[(i, j)] = col[i];
        }
    }
    let mut adj = DMatrix::zeros(n, m);
    let mut f = vec![0.0; m];
    let mut row = vec![0.0; n];
    for i in 0..m {
        f[i] = 1.0;
        op.adjoint_flat(&f, &mut row);
        f[i] = 0.0;
        for j in 0..n {
            adj[(j, i)] = row[j];
        }
    }
    (fwd, adj)
}

fn check_adjoint_against_assembly<T: LinearOperator + ?Sized>(op: &T, seed: u64) {
    let (a, at) = assemble(op);
    assert!((&a.transpose() - &at).abs().max() <= 1e-12 * a.abs().max().max(1.0));
    let mut r = rng(seed);
    for _ in 0..100 {
        let x = random_vec(&mut r, op.domain().len());
        let y = random_vec(&mut r, op.range_size());
        let xv = nalgebra::DVector::from_vec(x.clone());
        let yv = nalgebra::DVector::from_vec(y.clone());
        let tx = &a * &xv;
        let ty = &at * &yv;
        let lhs = tx.dot(&yv);
        let rhs = xv.dot(&ty);
        let scale = xv.norm() * ty.norm() + tx.norm() * yv.norm();
        assert!((lhs - rhs).abs() <= 1e-10 * scale, "{lhs} vs {rhs}");
        let mut ours = vec![0.0; op.range_size()];
        op.apply_flat(&x, &mut ours);
        for (o, t) in ours.iter().zip(tx.iter()) {
            assert!((o - t).abs() <= 1e-12 * (1.0 + t.abs()));
        }
    }
}

#[test]
fn dense_backend_adjoint() {
    let mut r = rng(1);
    let op = random_dense(&mut r, 48, GridShape::new(vec![8, 8]).unwrap());
    check_adjoint_against_assembly(&op, 11);
    let small = random_dense(&mut r, 16, GridShape::new(vec![4, 4]).unwrap());
    check_adjoint_against_assembly(&small, 12);
}

#[test]
fn radon2d_adjoint() {
    let op = Radon2d::new(GridShape::new(vec![8, 8]).unwrap(), SinogramGeometry::uniform(4, 11, 1.0).unwrap()).unwrap();
    check_adjoint_against_assembly(&op, 2);
    let aniso = GridShape::with_spacing(vec![6, 9], vec![0.7, 1.3]).unwrap();
    let op = Radon2d::new(aniso.clone(), SinogramGeometry::covering(&aniso, 7).unwrap()).unwrap();
    check_adjoint_against_assembly(&op, 3);
}

#[test]
fn ray3d_adjoint() {
    let cube = GridShape::new(vec![4, 4, 4]).unwrap();
    let mut r = rng(4);
    let op = Ray3d::new(cube.clone(), random_rays(&mut r, &cube, 10)).unwrap();
    check_adjoint_against_assembly(&op, 5);
    let boxy = GridShape::with_spacing(vec![5, 3, 4], vec![1.0, 2.0, 0.5]).unwrap();
    let op = Ray3d::new(boxy.clone(), random_rays(&mut r, &boxy, 12)).unwrap();
    check_adjoint_against_assembly(&op, 6);
}

/// Forward differences with replicate boundary, built entry by entry.
fn dense_gradient(shape: &GridShape) -> DMatrix<f64> {
    let n = shape.len();
    let nd = shape.ndim();
    let strides = shape.strides();
    let mut d = DMatrix::zeros(nd * n, n);
    for axis in 0..nd {
        for k in 0..n {
            let idx = shape.unravel(k);
            if idx[axis] + 1 < shape.dims[axis] {
                d[(axis * n + k, k)] = -1.0;
                d[(axis * n + k, k + strides[axis])] = 1.0;
            }
        }
    }
    d
}

#[test]
fn gradient_pair_matches_dense_difference_matrix() {
    for dims in [vec![5, 5], vec![3, 4, 2], vec![7]] {
        let shape = GridShape::new(dims).unwrap();
        let d = dense_gradient(&shape);
        let mut r = rng(7);
        let u = random_field(&mut r, &shape);
        let du = gradient(&u).unwrap();
        let expect = &d * nalgebra::DVector::from_column_slice(u.values());
        let flat: Vec<f64> = du.iter().copied().collect();
        for (a, b) in flat.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
        let w = random_vec(&mut r, d.nrows());
        let comps = w.chunks(shape.len()).map(<[f64]>::to_vec).collect();
        let wf = StackedGradientField::new(shape.clone(), comps).unwrap();
        let dtw = gradient_adjoint(&wf).unwrap();
        let expect = d.transpose() * nalgebra::DVector::from_vec(w);
        for (a, b) in dtw.values().iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}

#[test]
fn gradient_adjoint_dot_test_5x5() {
    let op = GradientOperator::new(GridShape::new(vec![5, 5]).unwrap()).unwrap();
    check_adjoint_against_assembly(&op, 8);
}

#[test]
fn gradient_norm_matches_svd() {
    let shape = GridShape::new(vec![16, 16]).unwrap();
    let exact = dense_gradient(&shape).singular_values().max();
    let est = estimate_operator_norm(&GradientOperator::new(shape).unwrap(), 200, 1e-8).unwrap();
    assert!((est.value - exact).abs() <= 0.01 * exact, "{} vs {exact}", est.value);
    assert!(est.value <= 8f64.sqrt() + 1e-12);
    assert!(exact <= 8f64.sqrt());
}

#[test]
fn dense_norm_matches_svd() {
    let mut r = rng(9);
    let op = random_dense(&mut r, 20, GridShape::new(vec![12]).unwrap());
    let m = DMatrix::from_row_slice(20, 12, op.data());
    let exact = m.singular_values().max();
    let est = estimate_operator_norm(&op, 200, 1e-8).unwrap();
    assert!((est.value - exact).abs() <= 0.01 * exact);
}

#[test]
fn dense_text_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.txt");
    std::fs::write(&path, "2 3\n1 0 2\n-1 0.5 0\n").unwrap();
    let m = DenseMatrix::from_file(&path, None).unwrap();
    let u = GridField::new(GridShape::new(vec![3]).unwrap(), vec![1.0, 2.0, 3.0]).unwrap();
    assert_eq!(m.apply(&u).unwrap(), vec![7.0, 0.0]);
    assert!(DenseMatrix::from_file(dir.path().join("missing.txt"), None).is_err());
}

/// Chord of `p0 → p1` inside the box `[lo, hi]`, by slab clipping.
fn chord(p0: [f64; 3], p1: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> f64 {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    let mut len2 = 0.0;
    for a in 0..3 {
        let d = p1[a] - p0[a];
        len2 += d * d;
        if d.abs() < 1e-300 {
            if p0[a] < lo[a] || p0[a] > hi[a] {
                return 0.0;
            }
        } else {
            let (ta, tb) = ((lo[a] - p0[a]) / d, (hi[a] - p0[a]) / d);
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
    }
    (t1 - t0).max(0.0) * len2.sqrt()
}

#[test]
fn siddon_matches_per_voxel_clipping() {
    let shape = GridShape::with_spacing(vec![4, 5, 3], vec![1.0, 0.5, 2.0]).unwrap();
    let mut r = rng(10);
    let rays = random_rays(&mut r, &shape, 25);
    let ext = [4.0, 2.5, 6.0];
    for k in 0..rays.rays.len() {
        let (p0, p1) = rays.segment(k);
        let got = siddon_traversal(&shape, p0, p1);
        let mut dense = vec![0.0; shape.len()];
        for &(v, l) in &got {
            dense[v] += l;
        }
        for v in 0..shape.len() {
            let idx = shape.unravel(v);
            let lo = [idx[0] as f64, idx[1] as f64 * 0.5, idx[2] as f64 * 2.0];
            let hi = [lo[0] + 1.0, lo[1] + 0.5, lo[2] + 2.0];
            let expect = chord(p0, p1, lo, hi);
            assert!((dense[v] - expect).abs() < 1e-9, "voxel {v}: {} vs {expect}", dense[v]);
        }
        let total: f64 = got.iter().map(|(_, l)| l).sum();
        let whole = chord(p0, p1, [0.0; 3], ext);
        assert!((total - whole).abs() <= 1e-9 * whole);
    }
}

#[test]
fn axis_aligned_ray_through_column() {
    let shape = GridShape::new(vec![3, 3, 6]).unwrap();
    let g = RayGeometry3D::new(vec![[1.5, 1.5, 20.0]], vec![[1.5, 1.5, 0.0]], vec![(0, 0)]).unwrap();
    let op = Ray3d::new(shape.clone(), g).unwrap();
    let ones = GridField::filled(shape, 1.0);
    assert!((op.apply(&ones).unwrap()[0] - 6.0).abs() < 1e-9);
}

#[test]
fn central_ray_through_unit_image() {
    for n in [8, 9] {
        let shape = GridShape::new(vec![n, n]).unwrap();
        let op = Radon2d::new(shape.clone(), SinogramGeometry::uniform(2, 1, 1.0).unwrap()).unwrap();
        let sino = op.apply(&GridField::filled(shape, 1.0)).unwrap();
        for v in sino {
            assert!((v - n as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn disc_sinogram_respects_grid_symmetries() {
    let shape = GridShape::new(vec![32, 32]).unwrap();
    let disc = make_phantom(PhantomId::Disc, &shape).unwrap();
    let geo = SinogramGeometry::covering(&shape, 4).unwrap();
    let nd = geo.num_detectors;
    let op = Radon2d::new(shape, geo).unwrap();
    let s = op.apply(&disc).unwrap();
    let row = |a: usize| &s[a * nd..(a + 1) * nd];
    let scale = s.iter().cloned().fold(0.0, f64::max);
    for d in 0..nd {
        // 0 ↔ π/2 by transposition, π/4 ↔ 3π/4 by reflection
        assert!((row(0)[d] - row(2)[d]).abs() <= 1e-6 * scale);
        assert!((row(1)[d] - row(3)[nd - 1 - d]).abs() <= 1e-6 * scale);
    }
}

#[test]
fn forward_maps_preserve_nonnegativity_and_linearity() {
    let mut r = rng(13);
    let img = GridShape::new(vec![10, 12]).unwrap();
    let radon = Radon2d::new(img.clone(), SinogramGeometry::covering(&img, 9).unwrap()).unwrap();
    let vol = GridShape::new(vec![5, 5, 4]).unwrap();
    let ray = Ray3d::new(vol.clone(), random_rays(&mut r, &vol, 15)).unwrap();
    let ops: [(&dyn LinearOperator, &GridShape); 2] = [(&radon, &img), (&ray, &vol)];
    for (op, shape) in ops {
        let pos = GridField::new(shape.clone(), random_vec(&mut r, shape.len()).iter().map(|x| x.abs()).collect()).unwrap();
        assert!(op.apply(&pos).unwrap().iter().all(|&v| v >= 0.0));
        let a = random_field(&mut r, shape);
        let b = random_field(&mut r, shape);
        let sum = GridField::new(shape.clone(), a.values().iter().zip(b.values()).map(|(x, y)| 2.0 * x - y).collect()).unwrap();
        let lhs = op.apply(&sum).unwrap();
        let (ta, tb) = (op.apply(&a).unwrap(), op.apply(&b).unwrap());
        for k in 0..lhs.len() {
            assert!((lhs[k] - (2.0 * ta[k] - tb[k])).abs() < 1e-12);
        }
    }
}

#[test]
fn fewer_rays_mean_fewer_measurements() {
    let vol = GridShape::new(vec![6, 6, 4]).unwrap();
    let mut r = rng(14);
    let g = random_rays(&mut r, &vol, 5);
    let one = RayGeometry3D::new(g.transmitters.clone(), g.receivers.clone(), g.rays[..1].to_vec()).unwrap();
    let a = Ray3d::new(vol.clone(), g).unwrap();
    let b = Ray3d::new(vol.clone(), one).unwrap();
    assert!(b.range_size() < a.range_size());
    assert!(a.range_size() < vol.len());
}
