//! Seeded generators for test inputs and synthetic data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::RealMatrix;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> RealMatrix {
    RealMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn uniform(rng: &mut impl Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> RealMatrix {
    RealMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Haar-ish random matrix with orthonormal columns (`rows ≥ cols`), via
/// modified Gram-Schmidt on a Gaussian draw.
pub fn orthonormal(rng: &mut impl Rng, rows: usize, cols: usize) -> RealMatrix {
    assert!(rows >= cols);
    loop {
        let g = gaussian(rng, rows, cols);
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols);
        let mut ok = true;
        for j in 0..cols {
            let mut v = g.column(j);
            for _ in 0..2 {
                for b in &q {
                    let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                    v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n < 1e-8 {
                ok = false;
                break;
            }
            v.iter_mut().for_each(|x| *x /= n);
            q.push(v);
        }
        if ok {
            return RealMatrix::from_fn(rows, cols, |i, j| q[j][i]);
        }
    }
}

/// `rows × cols` matrix with the prescribed singular values (`rows ≥ cols`).
pub fn with_singular_values(
    rng: &mut impl Rng,
    rows: usize,
    cols: usize,
    sigma: &[f64],
) -> RealMatrix {
    assert_eq!(sigma.len(), cols);
    let u = orthonormal(rng, rows, cols);
    let v = orthonormal(rng, cols, cols);
    u.scale_cols(sigma).matmul_t(&v)
}

/// Symmetric matrix with the prescribed eigenvalues.
pub fn with_eigenvalues(rng: &mut impl Rng, eigenvalues: &[f64]) -> RealMatrix {
    let n = eigenvalues.len();
    let u = orthonormal(rng, n, n);
    u.scale_cols(eigenvalues).matmul_t(&u).sym()
}

/// Symmetric `n × n` matrix of exact rank `rank` (nonzero eigenvalues drawn
/// away from zero with alternating signs when `indefinite`).
pub fn symmetric_low_rank(
    rng: &mut impl Rng,
    n: usize,
    rank: usize,
    indefinite: bool,
) -> RealMatrix {
    let basis = orthonormal(rng, n, rank);
    let vals: Vec<f64> = (0..rank)
        .map(|i| {
            let mag = 1.0 + i as f64 * 0.75 + rng.random_range(0.0..0.25);
            if indefinite && i % 2 == 1 {
                -mag
            } else {
                mag
            }
        })
        .collect();
    basis.scale_cols(&vals).matmul_t(&basis).sym()
}
