use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::degree_and_normalize;
use crate::error::{Error, Result};
use crate::linalg::{eig_sym, RealMatrix};
use crate::random::seeded;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub k_list: Vec<usize>,
    /// Independent k-means++ initializations; the lowest inertia wins.
    pub restarts: usize,
    /// Lloyd iterations per restart.
    pub max_iterations: usize,
    pub seed: u64,
    /// When set, spatially disconnected parts of a cluster become separate
    /// segments (4-connectivity, row-major pixels).
    pub image_shape: Option<(usize, usize)>,
    /// `τ ≥ 0`: clustering runs on `W + τ·(d̄/m)·𝟙𝟙ᵀ`, with `d̄` the mean
    /// degree, so pixels with zero affinity to all others stay usable.
    /// `𝟙` lies in the span of every partition indicator, so the shift does
    /// not move an ideal affinity off its partition.
    pub degree_regularization: f64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            k_list: (2..=9).collect(),
            restarts: 50,
            max_iterations: 100,
            seed: 0,
            image_shape: None,
            degree_regularization: 0.0,
        }
    }
}

/// One labeling per entry of `k_list`, labels numbered by first
/// appearance. Each embedding row is `D^(−1/2)` times the corresponding
/// row of the top-`k` eigenvectors of `M = D^(−1/2) W D^(−1/2)`.
pub fn spectral_inference(w: &RealMatrix, config: &InferenceConfig) -> Result<Vec<Vec<usize>>> {
    let m = w.rows();
    if let Some(&k) = config.k_list.iter().find(|&&k| k == 0 || k > m) {
        return Err(Error::Contract(format!("k = {k} must be in 1..={m}")));
    }
    if let Some((h, wd)) = config.image_shape {
        if h * wd != m {
            return Err(Error::shape(
                "spectral_inference",
                format!("image {h}x{wd} does not have {m} pixels"),
            ));
        }
    }
    let tau = config.degree_regularization;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::Contract(format!(
            "degree_regularization = {tau} must be finite and >= 0"
        )));
    }
    let shifted;
    let w = if tau > 0.0 {
        let mean_degree = w.row_sums().iter().sum::<f64>() / m as f64;
        let c = tau * mean_degree / m as f64;
        shifted = w.map(|x| x + c);
        &shifted
    } else {
        w
    };
    let normalized = degree_and_normalize(w, None)?;
    let factors = eig_sym(&normalized.m)?;
    let inv_sqrt: Vec<f64> = normalized.degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    config
        .k_list
        .par_iter()
        .map(|&k| {
            let embedding = factors.u.columns(0..k).scale_rows(&inv_sqrt);
            let seed = config.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let result = kmeans(&embedding, k, config.restarts, config.max_iterations, seed)?;
            let labels = match config.image_shape {
                Some(shape) => split_components(&result.labels, shape),
                None => result.labels,
            };
            Ok(canonical(&labels))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    /// `k × dim`.
    pub centroids: RealMatrix,
    /// Sum of squared distances to the assigned centroid.
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm from k-means++ seeds, best of `restarts` runs.
pub fn kmeans(
    points: &RealMatrix,
    k: usize,
    restarts: usize,
    max_iterations: usize,
    seed: u64,
) -> Result<KMeansResult> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::Contract(format!("k = {k} must be in 1..={n}")));
    }
    let mut rng = seeded(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, k, max_iterations, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus(points: &RealMatrix, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.rows();
    let mut centers = vec![points.row(rng.random_range(0..n)).to_vec()];
    let mut dist: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut idx = n - 1;
            for (i, d) in dist.iter().enumerate() {
                if u < *d {
                    idx = i;
                    break;
                }
                u -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(points: &RealMatrix, k: usize, max_iterations: usize, rng: &mut impl Rng) -> KMeansResult {
    let (n, dim) = points.shape();
    let mut centers = plus_plus(points, k, rng);
    let mut labels = vec![usize::MAX; n];
    for _ in 0..max_iterations.max(1) {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let p = points.row(i);
            let nearest = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centers[a]).total_cmp(&sq_dist(p, &centers[b])))
                .expect("k >= 1");
            if *label != nearest {
                *label = nearest;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            sums[l]
                .iter_mut()
                .zip(points.row(i))
                .for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // Re-seed an empty cluster at the worst-served point.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(points.row(a), &centers[labels[a]]);
                        let db = sq_dist(points.row(b), &centers[labels[b]]);
                        da.total_cmp(&db)
                    })
                    .expect("n >= 1");
                centers[c] = points.row(far).to_vec();
            }
        }
    }
    let inertia = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(points.row(i), &centers[l]))
        .sum();
    KMeansResult {
        labels,
        centroids: RealMatrix::from_fn(k, dim, |i, j| centers[i][j]),
        inertia,
    }
}

/// Splits each label into its 4-connected components.
fn split_components(labels: &[usize], (height, width): (usize, usize)) -> Vec<usize> {
    let mut out = vec![usize::MAX; labels.len()];
    let mut next = 0;
    for start in 0..labels.len() {
        if out[start] != usize::MAX {
            continue;
        }
        out[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            let (r, c) = (p / width, p % width);
            let mut neighbors = Vec::with_capacity(4);
            if r > 0 {
                neighbors.push(p - width);
            }
            if r + 1 < height {
                neighbors.push(p + width);
            }
            if c > 0 {
                neighbors.push(p - 1);
            }
            if c + 1 < width {
                neighbors.push(p + 1);
            }
            for q in neighbors {
                if out[q] == usize::MAX && labels[q] == labels[start] {
                    out[q] = next;
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }
    out
}

/// Renumbers labels in order of first appearance.
fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let n = map.len();
            *map.entry(*l).or_insert(n)
        })
        .collect()
}

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same points.
/// Identical partitions score 1; two trivial single-cluster partitions
/// also score 1.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(
            "adjusted_rand_index",
            format!("labelings have {} and {} points", a.len(), b.len()),
        ));
    }
    let (a, b) = (canonical(a), canonical(b));
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&x, &y) in a.iter().zip(&b) {
        table[x][y] += 1;
    }
    let index: f64 = table.iter().flatten().map(|&n| choose2(n)).sum();
    let rows: f64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let cols: f64 = (0..kb)
        .map(|j| choose2(table.iter().map(|r| r[j]).sum()))
        .sum();
    let total = choose2(a.len());
    let expected = if total > 0.0 {
        rows * cols / total
    } else {
        0.0
    };
    let max = 0.5 * (rows + cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ari_identical_and_permuted() {
        assert_eq!(
            adjusted_rand_index(&[0, 0, 1, 1, 2], &[2, 2, 0, 0, 1]).unwrap(),
            1.0
        );
    }

    #[test]
    fn ari_known_value() {
        // Worked example: contingency [[2,1],[0,2]].
        let ari = adjusted_rand_index(&[0, 0, 0, 1, 1], &[0, 0, 1, 1, 1]).unwrap();
        // index = 1 + 1 = 2, rows = 3 + 1 = 4, cols = 1 + 3 = 4, total = 10
        let expected = (2.0 - 1.6) / (4.0 - 1.6);
        assert!((ari - expected).abs() < 1e-15);
    }

    #[test]
    fn components_split() {
        // 1x4 strip labeled 0 1 0 0: the first 0 is cut off.
        let s = canonical(&split_components(&[0, 1, 0, 0], (1, 4)));
        assert_eq!(s, vec![0, 1, 2, 2]);
    }

    #[test]
    fn kmeans_separated_blobs() {
        let p =
            RealMatrix::from_rows(&[&[0.0, 0.0], &[0.1, 0.0], &[5.0, 5.0], &[5.1, 5.0]]).unwrap();
        let r = kmeans(&p, 2, 5, 50, 1).unwrap();
        assert_eq!(canonical(&r.labels), vec![0, 0, 1, 1]);
        assert!(r.inertia < 0.011);
    }
}
