use matbp::gradcheck::{default_step, fd_grad, relative_error, FdMode};
use matbp::linalg::{eig_sym, svd_full, RealMatrix, SvdFactors};
use matbp::random::{gaussian, seeded, with_eigenvalues, with_singular_values};
use matbp::spectral::*;
use matbp::Error;

const SEEDS: u64 = 20;

fn rel(a: &RealMatrix, b: &RealMatrix) -> f64 {
    relative_error(a.as_slice(), b.as_slice())
}

fn spread_sigma(rng: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (n - i) as f64 + rng.random_range(0.1..0.5))
        .collect()
}

fn svd_grad(
    x: &RealMatrix,
    f: &SvdFactors,
    g_u: Option<RealMatrix>,
    g_s: Option<RealMatrix>,
    g_v: Option<RealMatrix>,
) -> RealMatrix {
    let (m, n) = x.shape();
    svd_layer_backward(
        x,
        f,
        &g_u.unwrap_or_else(|| RealMatrix::zeros(m, m)),
        &g_s.unwrap_or_else(|| RealMatrix::zeros(m, n)),
        &g_v.unwrap_or_else(|| RealMatrix::zeros(n, n)),
        &GapPolicy::default(),
    )
    .unwrap()
}

#[test]
fn svd_largest_singular_value() {
    for seed in 0..SEEDS {
        let mut rng = seeded(seed);
        let sigma = spread_sigma(&mut rng, 3);
        let x = with_singular_values(&mut rng, 5, 3, &sigma);
        let f = svd_full(&x).unwrap();
        let an = svd_grad(
            &x,
            &f,
            None,
            Some(RealMatrix::rect_diag(5, 3, &[1.0, 0.0, 0.0])),
            None,
        );
        // Independent closed form: ∂σ₁/∂X = u₁v₁ᵀ.
        let u1 = RealMatrix::new(5, 1, f.u.column(0)).unwrap();
        let v1 = RealMatrix::new(3, 1, f.v.column(0)).unwrap();
        assert!((&an - &u1.matmul_t(&v1)).frobenius_norm() < 1e-12);
        let loss = |m: &RealMatrix| Ok(svd_full(m)?.singular_values()[0]);
        let fd = fd_grad(loss, &x, default_step(&x), FdMode::Entrywise).unwrap();
        assert!(rel(&an, &fd) < 1e-5, "seed {seed}: {}", rel(&an, &fd));
    }
}

#[test]
fn svd_right_vectors_and_values() {
    for seed in 0..SEEDS {
        let mut rng = seeded(100 + seed);
        let sigma = spread_sigma(&mut rng, 4);
        let x = with_singular_values(&mut rng, 6, 4, &sigma);
        let f = svd_full(&x).unwrap();
        let mv = gaussian(&mut rng, 4, 4);
        let ms = gaussian(&mut rng, 6, 4).diag_part();
        let an = svd_grad(&x, &f, None, Some(ms.clone()), Some(mv.clone()));
        let loss = |m: &RealMatrix| {
            let g = svd_full(m)?;
            Ok(mv.colon(&g.v) + ms.colon(&g.s))
        };
        let fd = fd_grad(loss, &x, default_step(&x), FdMode::Entrywise).unwrap();
        assert!(rel(&an, &fd) < 1e-5, "seed {seed}: {}", rel(&an, &fd));
    }
}

#[test]
fn svd_leading_left_vectors() {
    for (m, n) in [(4, 4), (5, 3), (7, 2)] {
        for seed in 0..SEEDS {
            let mut rng = seeded(200 + seed);
            let sigma = spread_sigma(&mut rng, n);
            let x = with_singular_values(&mut rng, m, n, &sigma);
            let f = svd_full(&x).unwrap();
            let mu = gaussian(&mut rng, m, n);
            let g_u = if m > n {
                mu.hstack(&RealMatrix::zeros(m, m - n))
            } else {
                mu.clone()
            };
            let an = svd_grad(&x, &f, Some(g_u), None, None);
            let loss = |a: &RealMatrix| Ok(mu.colon(&svd_full(a)?.u1()));
            let fd = fd_grad(loss, &x, default_step(&x), FdMode::Entrywise).unwrap();
            assert!(
                rel(&an, &fd) < 1e-5,
                "{m}x{n} seed {seed}: {}",
                rel(&an, &fd)
            );
        }
    }
}

#[test]
fn svd_trailing_left_vectors_agree_with_complement() {
    // colon(M, U₂U₂ᵀ) = colon(M, I − U₁U₁ᵀ): one loss reaches the backward
    // through ∂L/∂U₂, the other through ∂L/∂U₁.
    for seed in 0..SEEDS {
        let mut rng = seeded(300 + seed);
        let (m, n) = (6, 3);
        let sigma = spread_sigma(&mut rng, n);
        let x = with_singular_values(&mut rng, m, n, &sigma);
        let f = svd_full(&x).unwrap();
        let mm = gaussian(&mut rng, m, m);
        let s = &mm + &mm.transpose();
        let u1 = f.u.columns(0..n);
        let u2 = f.u.columns(n..m);
        let via_u2 = RealMatrix::zeros(m, n).hstack(&s.matmul(&u2));
        let via_u1 = s
            .matmul(&u1)
            .scale(-1.0)
            .hstack(&RealMatrix::zeros(m, m - n));
        let a = svd_grad(&x, &f, Some(via_u2), None, None);
        let b = svd_grad(&x, &f, Some(via_u1), None, None);
        assert!(rel(&a, &b) < 1e-10, "seed {seed}: {}", rel(&a, &b));
        let loss = |a: &RealMatrix| {
            let u2 = svd_full(a)?.u.columns(n..m);
            Ok(mm.colon(&u2.matmul_t(&u2)))
        };
        let fd = fd_grad(loss, &x, default_step(&x), FdMode::Entrywise).unwrap();
        assert!(rel(&a, &fd) < 1e-5, "seed {seed}: {}", rel(&a, &fd));
    }
}

fn spread_eigs(rng: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 2.0 * (n - i) as f64 - n as f64 + rng.random_range(0.1..0.5))
        .collect()
}

#[test]
fn eig_largest_eigenvalue_and_vectors() {
    for seed in 0..SEEDS {
        let mut rng = seeded(400 + seed);
        let eigs = spread_eigs(&mut rng, 5);
        let z = with_eigenvalues(&mut rng, &eigs);
        let f = eig_sym(&z).unwrap();
        let mq = RealMatrix::diag_from(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        let mu = gaussian(&mut rng, 5, 5);
        let p = GapPolicy::default();
        let an = eig_layer_backward(&z, &f, &mu, &mq, &p).unwrap();
        assert_eq!(an.asymmetry(), 0.0);
        let loss = |m: &RealMatrix| {
            let g = eig_sym(m)?;
            Ok(g.eigenvalues()[0] + mu.colon(&g.u))
        };
        let fd = fd_grad(loss, &z, default_step(&z), FdMode::Symmetric).unwrap();
        assert!(rel(&an, &fd) < 1e-5, "seed {seed}: {}", rel(&an, &fd));
    }
}

#[test]
fn matfun_svd_trace_log() {
    let spec = MatrixFunctionSpec::default();
    for seed in 0..SEEDS {
        let mut rng = seeded(500 + seed);
        let sigma = spread_sigma(&mut rng, 3);
        let x = with_singular_values(&mut rng, 5, 3, &sigma);
        let f = svd_full(&x).unwrap();
        let (g_v, g_s) = matfun_svd_backward(&f, &spec, &RealMatrix::identity(3)).unwrap();
        let an = svd_grad(&x, &f, None, Some(g_s), Some(g_v));
        let loss = |m: &RealMatrix| Ok(matfun_svd_forward(&svd_full(m)?, &spec)?.trace());
        let fd = fd_grad(loss, &x, default_step(&x), FdMode::Entrywise).unwrap();
        assert!(rel(&an, &fd) < 1e-5, "seed {seed}: {}", rel(&an, &fd));
        // trace log(XᵀX+εI) has gradient 2X(XᵀX+εI)⁻¹.
        let z = &x.t_matmul(&x) + &RealMatrix::identity(3).scale(spec.epsilon);
        let closed = x
            .matmul(&matbp::linalg::ops::inverse(&z).unwrap())
            .scale(2.0);
        assert!(rel(&an, &closed) < 1e-10);
    }
}

#[test]
fn matfun_eig_log_colon() {
    let spec = MatrixFunctionSpec::default();
    for seed in 0..SEEDS {
        let mut rng = seeded(600 + seed);
        let eigs: Vec<f64> = spread_sigma(&mut rng, 4);
        let z = with_eigenvalues(&mut rng, &eigs);
        let mc = gaussian(&mut rng, 4, 4);
        let shift = RealMatrix::identity(4).scale(spec.epsilon);
        let zs = &z + &shift;
        let f = eig_sym(&zs).unwrap();
        let (g_u, g_q) = matfun_eig_backward(&f, &spec, &mc).unwrap();
        let an = eig_layer_backward(&zs, &f, &g_u, &g_q, &GapPolicy::default()).unwrap();
        let loss =
            |m: &RealMatrix| Ok(mc.colon(&matfun_eig_forward(&eig_sym(&(m + &shift))?, &spec)?));
        let fd = fd_grad(loss, &z, default_step(&z), FdMode::Symmetric).unwrap();
        assert!(rel(&an, &fd) < 1e-5, "seed {seed}: {}", rel(&an, &fd));
    }
}

#[test]
fn deep_o2p_both_paths_match_finite_differences() {
    let spec = MatrixFunctionSpec::default();
    let policy = GapPolicy::default();
    for path in [O2pPath::Svd, O2pPath::Eig] {
        for seed in 0..SEEDS {
            let mut rng = seeded(700 + seed);
            let f = gaussian(&mut rng, 8, 4);
            let mc = gaussian(&mut rng, 4, 4);
            let (_, cache) = deep_o2p_forward(&f, &spec, path).unwrap();
            let an = deep_o2p_backward(&f, &cache, &spec, &mc, &policy).unwrap();
            let loss = |m: &RealMatrix| Ok(mc.colon(&deep_o2p(m, &spec, path)?));
            let fd = fd_grad(loss, &f, default_step(&f), FdMode::Entrywise).unwrap();
            assert!(
                rel(&an, &fd) < 1e-5,
                "{path:?} seed {seed}: {}",
                rel(&an, &fd)
            );
        }
    }
}

#[test]
fn deep_o2p_paths_agree() {
    let spec = MatrixFunctionSpec::default();
    let policy = GapPolicy::default();
    for seed in 0..50 {
        let mut rng = seeded(800 + seed);
        let f = gaussian(&mut rng, 8, 4);
        let mc = gaussian(&mut rng, 4, 4);
        let (cs, ks) = deep_o2p_forward(&f, &spec, O2pPath::Svd).unwrap();
        let (ce, ke) = deep_o2p_forward(&f, &spec, O2pPath::Eig).unwrap();
        assert!(rel(&cs, &ce) < 1e-8, "seed {seed}: {}", rel(&cs, &ce));
        let gs = deep_o2p_backward(&f, &ks, &spec, &mc, &policy).unwrap();
        let ge = deep_o2p_backward(&f, &ke, &spec, &mc, &policy).unwrap();
        assert!(rel(&gs, &ge) < 1e-6, "seed {seed}: {}", rel(&gs, &ge));
    }
}

/// `exp` by scaling and squaring of a truncated Taylor series.
fn expm(a: &RealMatrix) -> RealMatrix {
    let n = a.rows();
    let norm = a.frobenius_norm();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = a.scale(0.5f64.powi(squarings));
    let mut term = RealMatrix::identity(n);
    let mut sum = RealMatrix::identity(n);
    for k in 1..30 {
        term = term.matmul(&b).scale(1.0 / k as f64);
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

#[test]
fn deep_o2p_is_a_matrix_logarithm() {
    let spec = MatrixFunctionSpec::default();
    for seed in 0..SEEDS {
        let mut rng = seeded(900 + seed);
        let f = gaussian(&mut rng, 8, 4).scale(0.5);
        let z = &f.t_matmul(&f) + &RealMatrix::identity(4).scale(spec.epsilon);
        for path in [O2pPath::Svd, O2pPath::Eig] {
            let c = deep_o2p(&f, &spec, path).unwrap();
            assert!(c.asymmetry() <= 1e-12 * c.frobenius_norm());
            let back = expm(&c);
            assert!(
                rel(&back, &z) < 1e-9,
                "{path:?} seed {seed}: {}",
                rel(&back, &z)
            );
        }
    }
}

#[test]
fn gauge_flip_leaves_gradients_unchanged() {
    let spec = MatrixFunctionSpec::default();
    let policy = GapPolicy::default();
    let mut rng = seeded(1000);
    let x = gaussian(&mut rng, 6, 3);
    let mc = gaussian(&mut rng, 3, 3);
    let f = svd_full(&x).unwrap();
    let mut flipped = f.clone();
    // Flip the second singular pair.
    flipped.u = RealMatrix::from_fn(6, 6, |i, j| {
        if j == 1 {
            -f.u.get(i, j)
        } else {
            f.u.get(i, j)
        }
    });
    flipped.v = RealMatrix::from_fn(3, 3, |i, j| {
        if j == 1 {
            -f.v.get(i, j)
        } else {
            f.v.get(i, j)
        }
    });
    assert!(rel(&flipped.reconstruct(), &x) < 1e-12);
    let a = deep_o2p_backward(&x, &O2pCache::Svd(f), &spec, &mc, &policy).unwrap();
    let b = deep_o2p_backward(&x, &O2pCache::Svd(flipped), &spec, &mc, &policy).unwrap();
    assert!(rel(&a, &b) < 1e-12);
}

#[test]
fn repeated_spectrum_errors_or_clamps() {
    let x = RealMatrix::rect_diag(4, 3, &[2.0, 2.0, 1.0]);
    let f = svd_full(&x).unwrap();
    let gv = RealMatrix::from_fn(3, 3, |i, j| (i + 2 * j) as f64);
    let gs = RealMatrix::zeros(4, 3);
    let gu = RealMatrix::zeros(4, 4);
    let err = svd_layer_backward(&x, &f, &gu, &gs, &gv, &GapPolicy::default()).unwrap_err();
    assert!(matches!(err, Error::DegenerateSpectrum { i: 0, j: 1, .. }));
    let g = svd_layer_backward(&x, &f, &gu, &gs, &gv, &GapPolicy::clamp(1e-6)).unwrap();
    assert!(g.is_finite());

    let z = RealMatrix::diag_from(&[3.0, 1.0, 1.0]);
    let e = eig_sym(&z).unwrap();
    let gu = RealMatrix::from_fn(3, 3, |i, j| (i * j) as f64 + 1.0);
    let gq = RealMatrix::zeros(3, 3);
    let err = eig_layer_backward(&z, &e, &gu, &gq, &GapPolicy::default()).unwrap_err();
    assert!(matches!(err, Error::DegenerateSpectrum { i: 1, j: 2, .. }));
    let g = eig_layer_backward(&z, &e, &gu, &gq, &GapPolicy::clamp(1e-6)).unwrap();
    assert!(g.is_finite());
}

#[test]
fn taylor_residual_is_second_order() {
    let spec = MatrixFunctionSpec::default();
    for path in [O2pPath::Svd, O2pPath::Eig] {
        let mut rng = seeded(1100);
        let f = gaussian(&mut rng, 8, 4);
        let mc = gaussian(&mut rng, 4, 4);
        let dir = gaussian(&mut rng, 8, 4);
        let dir = dir.scale(1.0 / dir.frobenius_norm());
        let loss = |m: &RealMatrix| mc.colon(&deep_o2p(m, &spec, path).unwrap());
        let (_, cache) = deep_o2p_forward(&f, &spec, path).unwrap();
        let g = deep_o2p_backward(&f, &cache, &spec, &mc, &GapPolicy::default()).unwrap();
        let slope = g.colon(&dir);
        let l0 = loss(&f);
        let r = |h: f64| (loss(&(&f + &dir.scale(h))) - l0 - h * slope).abs();
        let h = 1e-2;
        let order = (r(h) / r(h / 2.0)).log2();
        assert!(order >= 1.9, "{path:?}: order {order}");
    }
}
