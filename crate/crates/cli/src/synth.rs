//! Seeded synthetic data for the demos.
//!
//! *Covariance classes* (o2p): each sample is an `m × d` matrix with
//! i.i.d. rows `N(0, Σ_c)`. Both classes have zero mean and trace `d`;
//! `Σ_± = I ± δ(uuᵀ − vvᵀ)` for a pair of orthonormal directions `u, v`
//! fixed by the seed. Class labels alternate, so splits are balanced.
//!
//! *Region images* (ncuts): a square image cut into `k` Voronoi cells
//! around distinct random sites. The first two channels carry a per-cell
//! color (evenly spaced on a circle) plus small noise; every other channel
//! is a distractor of pure, larger noise.

use matbp::linalg::RealMatrix;
use matbp::ncuts::{indicator_from_labels, SegmentationInstance};
use matbp::netgraph::Sample;
use matbp::random::{gaussian, orthonormal, seeded, SeededRng};
use rand::Rng;

use crate::error::CliError;

/// Covariance contrast `δ` of the two classes.
pub const COVARIANCE_CONTRAST: f64 = 0.6;
/// Radius of the color circle in the informative channels.
pub const COLOR_RADIUS: f64 = 1.0;
/// Noise on the informative channels.
pub const COLOR_NOISE: f64 = 0.1;
/// Noise on the distractor channels.
pub const DISTRACTOR_NOISE: f64 = 1.0;

const TRAIN_STREAM: u64 = 0x7a1d;
const TEST_STREAM: u64 = 0x7e57;

fn stream(seed: u64, salt: u64) -> SeededRng {
    seeded(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

/// `Σ_±^(1/2)` for both classes.
fn class_factors(seed: u64, d: usize) -> [RealMatrix; 2] {
    let mut rng = stream(seed, 0xc0de);
    let q = orthonormal(&mut rng, d, d.min(2));
    let factor = |sign: f64| {
        let mut s = RealMatrix::identity(d);
        let weights = [sign * COVARIANCE_CONTRAST, -sign * COVARIANCE_CONTRAST];
        for (c, w) in weights.iter().take(q.cols()).enumerate() {
            let u = q.columns(c..c + 1);
            s = &s + &u.matmul_t(&u).scale((1.0 + w).sqrt() - 1.0);
        }
        s
    };
    [factor(1.0), factor(-1.0)]
}

fn covariance_split(seed: u64, m: usize, d: usize, count: usize, salt: u64) -> Vec<Sample> {
    let factors = class_factors(seed, d);
    let mut rng = stream(seed, salt);
    (0..count)
        .map(|i| {
            let c = i % 2;
            Sample {
                input: gaussian(&mut rng, m, d).matmul(&factors[c]),
                target: RealMatrix::from_fn(1, 1, |_, _| c as f64),
            }
        })
        .collect()
}

/// Train and test splits of covariance-class samples.
pub fn covariance_classes(
    seed: u64,
    m: usize,
    d: usize,
    train: usize,
    test: usize,
) -> (Vec<Sample>, Vec<Sample>) {
    (
        covariance_split(seed, m, d, train, TRAIN_STREAM),
        covariance_split(seed, m, d, test, TEST_STREAM),
    )
}

fn region_image(
    rng: &mut SeededRng,
    side: usize,
    d: usize,
    k: usize,
) -> Result<SegmentationInstance, CliError> {
    let m = side * side;
    let mut sites: Vec<usize> = Vec::with_capacity(k);
    while sites.len() < k {
        let p = rng.random_range(0..m);
        if !sites.contains(&p) {
            sites.push(p);
        }
    }
    let labels: Vec<usize> = (0..m)
        .map(|p| {
            let (r, c) = ((p / side) as f64, (p % side) as f64);
            let dist = |s: usize| ((s / side) as f64 - r).powi(2) + ((s % side) as f64 - c).powi(2);
            (0..k)
                .min_by(|&a, &b| dist(sites[a]).total_cmp(&dist(sites[b])))
                .expect("k > 0")
        })
        .collect();
    let offset = rng.random_range(0.0..std::f64::consts::TAU);
    let colors: Vec<[f64; 2]> = (0..k)
        .map(|r| {
            let a = offset + std::f64::consts::TAU * r as f64 / k as f64;
            [COLOR_RADIUS * a.cos(), COLOR_RADIUS * a.sin()]
        })
        .collect();
    let noise = gaussian(rng, m, d);
    let f = RealMatrix::from_fn(m, d, |p, j| {
        if j < 2 {
            colors[labels[p]][j] + COLOR_NOISE * noise.get(p, j)
        } else {
            DISTRACTOR_NOISE * noise.get(p, j)
        }
    });
    let e = indicator_from_labels(&labels, k).map_err(|e| CliError::input("region image", e))?;
    SegmentationInstance::new(f, e, (side, side)).map_err(|e| CliError::input("region image", e))
}

/// Train and test splits of region images.
pub fn region_images(
    seed: u64,
    side: usize,
    d: usize,
    k: usize,
    train: usize,
    test: usize,
) -> Result<(Vec<SegmentationInstance>, Vec<SegmentationInstance>), CliError> {
    let mut a = stream(seed, TRAIN_STREAM);
    let mut b = stream(seed, TEST_STREAM);
    let tr = (0..train)
        .map(|_| region_image(&mut a, side, d, k))
        .collect::<Result<_, _>>()?;
    let te = (0..test)
        .map(|_| region_image(&mut b, side, d, k))
        .collect::<Result<_, _>>()?;
    Ok((tr, te))
}
