use matbp::gradcheck::{congruence, congruence_tangent, fd_along, relative_error};
use matbp::linalg::ops::inverse;
use matbp::linalg::{numerical_rank, RealMatrix};
use matbp::ncuts::*;
use matbp::random::{gaussian, seeded, uniform, SeededRng};
use matbp::Result;
use rand::Rng;

const SEEDS: u64 = 20;

fn random_labels(rng: &mut SeededRng, m: usize, k: usize) -> Vec<usize> {
    loop {
        let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..k)).collect();
        if (0..k).all(|c| labels.contains(&c)) {
            return labels;
        }
    }
}

/// Low-rank affinity with strictly positive entries: `F` uniform in
/// (0.1, 1), `Λ` SPD with positive entries.
fn positive_affinity(
    rng: &mut SeededRng,
    m: usize,
    d: usize,
) -> (RealMatrix, AffinityModel, RealMatrix) {
    let f = uniform(rng, m, d, 0.1, 1.0);
    let a = uniform(rng, d, d, 0.0, 1.0);
    let lambda = (&a.matmul_t(&a) + &RealMatrix::identity(d)).sym();
    let model = AffinityModel::new(lambda, true).unwrap();
    let w = affinity_forward(&f, &model).unwrap();
    (f, model, w)
}

/// Directional derivatives along rank-preserving congruence curves, compared
/// against `grad : (GW + WGᵀ)`.
fn congruence_error(
    w: &RealMatrix,
    grad: &RealMatrix,
    loss: impl Fn(&RealMatrix) -> Result<f64>,
    rng: &mut SeededRng,
    directions: usize,
) -> f64 {
    let h = 1e-6 * (1.0 + w.frobenius_norm());
    let mut an = Vec::new();
    let mut fd = Vec::new();
    for _ in 0..directions {
        let g = gaussian(rng, w.rows(), w.rows());
        an.push(grad.colon(&congruence_tangent(w, &g)));
        let step = h / (1.0 + g.frobenius_norm());
        fd.push(fd_along(&loss, &|t| congruence(w, &g, t), step).unwrap());
    }
    relative_error(&an, &fd)
}

/// `B(BᵀB)⁻¹Bᵀ` for a full-column-rank basis `B`.
fn basis_projector(b: &RealMatrix) -> RealMatrix {
    b.matmul(&inverse(&b.t_matmul(b)).unwrap()).matmul_t(b)
}

fn assert_projector_laws(p: &RealMatrix, a: &RealMatrix) {
    assert!((&p.matmul(p) - p).frobenius_norm() <= 1e-8);
    assert!((p - &p.transpose()).frobenius_norm() <= 1e-12);
    assert!((&p.matmul(a) - a).frobenius_norm() <= 1e-8 * (1.0 + a.frobenius_norm()));
}

#[test]
fn affinity_gradients_through_j2() {
    for seed in 0..SEEDS {
        let mut rng = seeded(seed);
        let (f, model, w) = positive_affinity(&mut rng, 9, 3);
        let e = indicator_from_labels(&random_labels(&mut rng, 9, 3), 3).unwrap();
        let (_, cache) = j2_forward(&w, &e).unwrap();
        let g_w = j2_backward(&cache).unwrap();
        let (_, g_f) = affinity_backward(&f, &model, &g_w).unwrap();
        let loss = |x: &RealMatrix| Ok(j2_forward(&affinity_forward(x, &model)?, &e)?.0);
        let fd = matbp::gradcheck::fd_grad(
            loss,
            &f,
            1e-6 * (1.0 + f.frobenius_norm()),
            matbp::gradcheck::FdMode::Entrywise,
        )
        .unwrap();
        let err = relative_error(g_f.as_slice(), fd.as_slice());
        assert!(err < 1e-5, "seed {seed}: {err}");
    }
}

#[test]
fn affinity_gradients_through_j1() {
    use matbp::gradcheck::{fd_grad, FdMode};
    for seed in 0..SEEDS {
        let mut rng = seeded(50 + seed);
        let (f, model, w) = positive_affinity(&mut rng, 8, 3);
        let e = indicator_from_labels(&random_labels(&mut rng, 8, 2), 2).unwrap();
        let (_, cache) = j1_forward(&w, &e).unwrap();
        let g_w = j1_backward(&cache).unwrap();
        let (g_l, g_f) = affinity_backward(&f, &model, &g_w).unwrap();
        let by_f = |x: &RealMatrix| Ok(j1_forward(&affinity_forward(x, &model)?, &e)?.0);
        let fd = fd_grad(
            by_f,
            &f,
            1e-6 * (1.0 + f.frobenius_norm()),
            FdMode::Entrywise,
        )
        .unwrap();
        let err = relative_error(g_f.as_slice(), fd.as_slice());
        assert!(err < 1e-4, "F seed {seed}: {err}");
        let by_l = |l: &RealMatrix| {
            let m = AffinityModel::new(l.clone(), false)?;
            Ok(j1_forward(&affinity_forward(&f, &m)?, &e)?.0)
        };
        let l = &model.lambda;
        let fd = fd_grad(
            by_l,
            l,
            1e-6 * (1.0 + l.frobenius_norm()),
            FdMode::Symmetric,
        )
        .unwrap();
        let err = relative_error(g_l.sym().as_slice(), fd.as_slice());
        assert!(err < 1e-4, "Lambda seed {seed}: {err}");
    }
}

#[test]
fn normalized_affinity_spectrum_in_unit_interval() {
    for seed in 0..SEEDS {
        let mut rng = seeded(100 + seed);
        let (_, _, w) = positive_affinity(&mut rng, 10, 4);
        let n = degree_and_normalize(&w, None).unwrap();
        let q = matbp::linalg::eig_sym(&n.m).unwrap().eigenvalues();
        assert!(q.iter().all(|v| *v <= 1.0 + 1e-12 && *v >= -1.0 - 1e-12));
        // The top eigenvalue of a normalized positive affinity is exactly 1.
        assert!((q[0] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn projector_variation_along_rank_preserving_directions() {
    for seed in 0..SEEDS {
        let mut rng = seeded(150 + seed);
        let a = matbp::random::symmetric_low_rank(&mut rng, 4, 2, true);
        let p = projector_forward(&a).unwrap();
        assert_projector_laws(&p, &a);
        let a_pinv = matbp::linalg::pinv(&a).unwrap();
        let g = gaussian(&mut rng, 4, 4);
        let s = congruence_tangent(&a, &g);
        // dΠ = 2((I − Π) dA A⁺)_sym
        let complement = &RealMatrix::identity(4) - &p;
        let d_pi = complement.matmul(&s).matmul(&a_pinv).sym().scale(2.0);
        let h = 1e-6;
        let fd = (&projector_forward(&congruence(&a, &g, h)).unwrap()
            - &projector_forward(&congruence(&a, &g, -h)).unwrap())
            .scale(0.5 / h);
        let err = relative_error(d_pi.as_slice(), fd.as_slice());
        assert!(err < 1e-6, "seed {seed}: {err}");
        // And the backward pass is its adjoint.
        let g_pi = gaussian(&mut rng, 4, 4);
        let g_a = projector_backward(&a, &p, &g_pi).unwrap();
        assert!(
            (g_a.colon(&s) - g_pi.colon(&d_pi)).abs() < 1e-10 * (1.0 + g_pi.colon(&d_pi).abs())
        );
    }
}

#[test]
fn j1_gradient_matches_finite_differences() {
    for seed in 0..SEEDS {
        let mut rng = seeded(200 + seed);
        let (_, _, w) = positive_affinity(&mut rng, 8, 3);
        let e = indicator_from_labels(&random_labels(&mut rng, 8, 2), 2).unwrap();
        let (value, cache) = j1_forward(&w, &e).unwrap();
        assert!(value > 0.0);
        let grad = j1_backward(&cache).unwrap();
        assert_eq!(grad.asymmetry(), 0.0);
        let err = congruence_error(&w, &grad, |x| Ok(j1_forward(x, &e)?.0), &mut rng, 12);
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn j1_value_matches_basis_projectors() {
    for seed in 0..SEEDS {
        let mut rng = seeded(250 + seed);
        let f = uniform(&mut rng, 8, 3, 0.1, 1.0);
        let w = f.matmul_t(&f).sym();
        let e = indicator_from_labels(&random_labels(&mut rng, 8, 2), 2).unwrap();
        let (value, cache) = j1_forward(&w, &e).unwrap();
        let d = w.row_sums();
        let isq: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
        let sq: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
        let pi_m = basis_projector(&f.scale_rows(&isq));
        let pi_o = basis_projector(&e.scale_rows(&sq));
        let expected = 0.5 * (&pi_m - &pi_o).frobenius_norm().powi(2);
        assert!(
            (value - expected).abs() < 1e-10 * (1.0 + expected),
            "seed {seed}"
        );
        assert_projector_laws(&cache.pi_m, &cache.normalized.m);
        assert_projector_laws(&cache.pi_omega, cache.normalized.omega.as_ref().unwrap());
    }
}

#[test]
fn j1_single_cluster_rank_one() {
    let mut rng = seeded(300);
    let w0 = uniform(&mut rng, 6, 1, 0.2, 1.0);
    let w = w0.matmul_t(&w0).sym();
    let e = indicator_from_labels(&[0; 6], 1).unwrap();
    let (value, _) = j1_forward(&w, &e).unwrap();
    assert!(value < 1e-20, "{value}");
}

#[test]
fn j2_gradient_matches_finite_differences() {
    for seed in 0..SEEDS {
        let mut rng = seeded(350 + seed);
        let (_, _, w) = positive_affinity(&mut rng, 8, 3);
        let e = indicator_from_labels(&random_labels(&mut rng, 8, 3), 3).unwrap();
        let (_, cache) = j2_forward(&w, &e).unwrap();
        assert_eq!(cache.rank, 3);
        let grad = j2_backward(&cache).unwrap();
        let err = congruence_error(&w, &grad, |x| Ok(j2_forward(x, &e)?.0), &mut rng, 12);
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn j2_value_matches_basis_projectors() {
    for seed in 0..SEEDS {
        let mut rng = seeded(400 + seed);
        let f = gaussian(&mut rng, 8, 3);
        let w = f.matmul_t(&f).sym();
        let e = indicator_from_labels(&random_labels(&mut rng, 8, 2), 2).unwrap();
        let (value, cache) = j2_forward(&w, &e).unwrap();
        let expected = 0.5
            * (&basis_projector(&f) - &basis_projector(&e))
                .frobenius_norm()
                .powi(2);
        assert!((value - expected).abs() < 1e-10 * (1.0 + expected));
        assert_projector_laws(&cache.pi_w, &w);
        assert_projector_laws(&cache.pi_psi, &e.matmul_t(&e));
    }
}

#[test]
fn lambda_gradient_of_j2_vanishes() {
    for seed in 0..SEEDS {
        let mut rng = seeded(450 + seed);
        let (f, model, _) = positive_affinity(&mut rng, 9, 3);
        let e = indicator_from_labels(&random_labels(&mut rng, 9, 3), 3).unwrap();
        let report = j2_lambda_grad_is_zero(&f, &model, &e).unwrap();
        assert!(report.pass, "seed {seed}: {report:?}");
    }
    // Rank-deficient features: the third column repeats the first.
    let mut rng = seeded(499);
    let base = uniform(&mut rng, 9, 2, 0.1, 1.0);
    let f = base.hstack(&base.columns(0..1));
    let model = AffinityModel::new(RealMatrix::identity(3), true).unwrap();
    let e = indicator_from_labels(&random_labels(&mut rng, 9, 2), 2).unwrap();
    assert!(j2_lambda_grad_is_zero(&f, &model, &e).unwrap().pass);
}

#[test]
fn ideal_affinity() {
    let labels = [0, 1, 1, 2, 0, 2, 2, 1, 0];
    let e = indicator_from_labels(&labels, 3).unwrap();
    let w = e.matmul_t(&e);
    assert!(j1_forward(&w, &e).unwrap().0 < 1e-28);
    assert!(j2_forward(&w, &e).unwrap().0 < 1e-28);
    assert!((ncuts_criterion(&w, &e).unwrap() - 3.0).abs() < 1e-14);
    let r = rank_gap_check(&w, &e.matmul_t(&e)).unwrap();
    assert!(r.holds && r.rank_a == 3);
    // Ideal features with Λ = I give J₂ = 0.
    let model = AffinityModel::new(RealMatrix::identity(3), false).unwrap();
    let w = affinity_forward(&e, &model).unwrap();
    assert!(j2_forward(&w, &e).unwrap().0 < 1e-28);
}

fn pairwise_criterion(w: &RealMatrix, labels: &[usize], k: usize) -> f64 {
    (0..k)
        .map(|c| {
            let mut assoc = 0.0;
            let mut vol = 0.0;
            for (a, &la) in labels.iter().enumerate() {
                if la != c {
                    continue;
                }
                for (b, &lb) in labels.iter().enumerate() {
                    vol += w.get(a, b);
                    if lb == c {
                        assoc += w.get(a, b);
                    }
                }
            }
            assoc / vol
        })
        .sum()
}

#[test]
fn criterion_matches_pairwise_sums() {
    for seed in 0..SEEDS {
        let mut rng = seeded(500 + seed);
        let (_, _, w) = positive_affinity(&mut rng, 12, 4);
        let labels = random_labels(&mut rng, 12, 3);
        let e = indicator_from_labels(&labels, 3).unwrap();
        let c = ncuts_criterion(&w, &e).unwrap();
        let oracle = pairwise_criterion(&w, &labels, 3);
        assert!((c - oracle).abs() <= 1e-9 * oracle.abs(), "seed {seed}");
    }
}

#[test]
fn permutation_equivariance() {
    let mut rng = seeded(600);
    let (f, model, w) = positive_affinity(&mut rng, 8, 3);
    let labels = random_labels(&mut rng, 8, 2);
    let e = indicator_from_labels(&labels, 2).unwrap();
    let perm = [3, 0, 6, 1, 7, 2, 5, 4];
    let p = RealMatrix::from_fn(8, 8, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
    let pw = p.matmul(&w).matmul_t(&p);
    let pe = p.matmul(&e);
    let pf = p.matmul(&f);
    let g1 = j1_backward(&j1_forward(&w, &e).unwrap().1).unwrap();
    let g1p = j1_backward(&j1_forward(&pw, &pe).unwrap().1).unwrap();
    assert!((&p.matmul(&g1).matmul_t(&p) - &g1p).frobenius_norm() < 1e-10);
    let g2 = j2_backward(&j2_forward(&w, &e).unwrap().1).unwrap();
    let g2p = j2_backward(&j2_forward(&pw, &pe).unwrap().1).unwrap();
    assert!((&p.matmul(&g2).matmul_t(&p) - &g2p).frobenius_norm() < 1e-10);
    let (_, gf) = affinity_backward(&f, &model, &g1).unwrap();
    let (_, gfp) = affinity_backward(&pf, &model, &g1p).unwrap();
    assert!((&p.matmul(&gf) - &gfp).frobenius_norm() < 1e-10);
}

#[test]
fn rank_lemma_on_random_pairs() {
    for seed in 0..200 {
        let mut rng = seeded(700 + seed);
        let ra = rng.random_range(1..4);
        let rb = rng.random_range(1..4);
        let a = matbp::random::symmetric_low_rank(&mut rng, 6, ra, false);
        let b = &a + &matbp::random::symmetric_low_rank(&mut rng, 6, rb, false).scale(1e-3);
        let r = rank_gap_check(&a, &b).unwrap();
        assert!(r.holds, "seed {seed}: {r:?}");
        if r.rank_a != r.rank_b {
            assert!(r.distance >= 1.0 - 1e-12);
        }
    }
}

#[test]
fn spectral_inference_recovers_ideal_partition() {
    let labels = [0, 0, 1, 1, 1, 2, 2, 0, 2, 1];
    let e = indicator_from_labels(&labels, 3).unwrap();
    let w = &e.matmul_t(&e) + &RealMatrix::from_fn(10, 10, |_, _| 1e-9);
    let config = InferenceConfig {
        k_list: vec![1, 3],
        ..InferenceConfig::default()
    };
    let out = spectral_inference(&w, &config).unwrap();
    assert_eq!(out[0], vec![0; 10]);
    assert_eq!(adjusted_rand_index(&out[1], &labels).unwrap(), 1.0);
    assert_eq!(spectral_inference(&w, &config).unwrap(), out);
}

#[test]
fn spectral_inference_splits_components() {
    // 2x4 image: clusters {left column pair, right column pair} share a
    // label but are not adjacent.
    let labels = [0, 1, 1, 0, 0, 1, 1, 0];
    let e = indicator_from_labels(&labels, 2).unwrap();
    let w = &e.matmul_t(&e) + &RealMatrix::from_fn(8, 8, |_, _| 1e-9);
    let config = InferenceConfig {
        k_list: vec![2],
        image_shape: Some((2, 4)),
        ..InferenceConfig::default()
    };
    let out = spectral_inference(&w, &config).unwrap();
    assert_eq!(out[0], vec![0, 1, 1, 2, 0, 1, 1, 2]);
}

#[test]
fn instance_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("matbp-instance-{}", std::process::id()));
    let mut rng = seeded(800);
    let f = gaussian(&mut rng, 6, 2);
    let e = indicator_from_labels(&[0, 0, 1, 1, 0, 1], 2).unwrap();
    let inst = SegmentationInstance::new(f, e, (2, 3)).unwrap();
    inst.write(&dir, "toy").unwrap();
    let back = SegmentationInstance::read(&dir, "toy").unwrap();
    assert_eq!(back, inst);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn numerical_rank_of_affinity_matches_features() {
    let mut rng = seeded(900);
    let (_, _, w) = positive_affinity(&mut rng, 64, 4);
    assert_eq!(numerical_rank(&w).unwrap(), 4);
}

#[test]
fn degree_regularization_handles_isolated_pixel() {
    let labels = [0, 0, 0, 1, 1, 1, 1, 0];
    let e = indicator_from_labels(&labels, 2).unwrap();
    // Pixel 7 has zero affinity to everything.
    let w = RealMatrix::from_fn(8, 8, |i, j| {
        if i == 7 || j == 7 {
            0.0
        } else {
            e.row(i).iter().zip(e.row(j)).map(|(a, b)| a * b).sum()
        }
    });
    let plain = InferenceConfig {
        k_list: vec![2],
        ..InferenceConfig::default()
    };
    assert!(matches!(
        spectral_inference(&w, &plain),
        Err(matbp::Error::DisconnectedPixel { row: 7 })
    ));
    let shifted = InferenceConfig {
        degree_regularization: 1e-2,
        ..plain
    };
    let out = spectral_inference(&w, &shifted).unwrap();
    assert_eq!(&out[0][..7], &[0, 0, 0, 1, 1, 1, 1]);
    let negative = InferenceConfig {
        degree_regularization: -1.0,
        ..shifted
    };
    assert!(spectral_inference(&w, &negative).is_err());
}
