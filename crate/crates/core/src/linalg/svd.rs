//! Full singular value decomposition by one-sided (Hestenes) Jacobi.
//!
//! Column pairs of a working copy of `X` are rotated until mutually
//! orthogonal; the rotations accumulate into `V`, column norms are the
//! singular values and the normalized columns form the leading block of
//! `U`. The remaining columns of the `m × m` factor (null space and columns
//! belonging to zero singular values) are completed deterministically from
//! the canonical basis.

use super::{gauge_fix_columns, RealMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// `X = U S Vᵀ`, `U` is `m × m`, `S` is `m × n`, `V` is `n × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: RealMatrix,
    pub s: RealMatrix,
    pub v: RealMatrix,
}

impl SvdFactors {
    pub fn singular_values(&self) -> Vec<f64> {
        self.s.diagonal()
    }

    pub fn reconstruct(&self) -> RealMatrix {
        self.u.matmul(&self.s).matmul_t(&self.v)
    }

    /// Leading `m × n` block `U₁` of `U`.
    pub fn u1(&self) -> RealMatrix {
        self.u.columns(0..self.v.rows())
    }
}

/// Full SVD of an `m × n` matrix with `m ≥ n`.
///
/// Singular values are nonincreasing. Each column of `V` is sign-fixed so
/// its largest-magnitude entry (lowest index on ties) is nonnegative, and
/// the matching column of `U` follows.
pub fn svd_full(x: &RealMatrix) -> Result<SvdFactors> {
    let (m, n) = x.shape();
    if m < n {
        return Err(Error::shape(
            "svd_full",
            format!("requires rows >= cols, got {m}x{n}"),
        ));
    }
    let (cols, v_cols) = jacobi_columns(x)?;

    let norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    let sigma: Vec<f64> = order.iter().map(|&k| norms[k]).collect();

    let sigma_max = sigma[0];
    let zero_cutoff = sigma_max * f64::EPSILON * (m as f64);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut pending = Vec::new();
    for (slot, &k) in order.iter().enumerate() {
        if sigma[slot] > zero_cutoff && sigma[slot] > 0.0 {
            let inv = 1.0 / sigma[slot];
            basis.push(cols[k].iter().map(|v| v * inv).collect());
        } else {
            basis.push(Vec::new());
            pending.push(slot);
        }
    }
    // Slots for zero singular values get vectors orthogonal to the accepted
    // ones; after them come the m - n null-space columns.
    let mut accepted: Vec<Vec<f64>> = basis.iter().filter(|c| !c.is_empty()).cloned().collect();
    let needed = pending.len() + (m - n);
    let extra = complete_basis(m, &mut accepted, needed);
    let mut extra_iter = extra.into_iter();
    for slot in pending {
        basis[slot] = extra_iter.next().expect("completion count");
    }
    basis.extend(extra_iter);

    let mut u = RealMatrix::from_fn(m, m, |i, j| basis[j][i]);
    let mut v = RealMatrix::from_fn(n, n, |i, j| v_cols[order[j]][i]);
    let sigma: Vec<f64> = sigma
        .iter()
        .map(|&s| if s > zero_cutoff { s } else { 0.0 })
        .collect();
    gauge_fix_columns(&mut v, Some(&mut u));
    Ok(SvdFactors {
        u,
        s: RealMatrix::rect_diag(m, n, &sigma),
        v,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

type Columns = Vec<Vec<f64>>;

/// Runs Jacobi sweeps; returns the rotated columns of `X` and of `V`.
fn jacobi_columns(x: &RealMatrix) -> Result<(Columns, Columns)> {
    let (m, n) = x.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| x.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let tol = f64::EPSILON * (m as f64).sqrt();
    let mut residual = 0.0;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        residual = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 {
                    continue;
                }
                let off = gamma.abs() / (alpha * beta).sqrt();
                residual = residual.max(off);
                if off <= tol {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            return Ok((cols, vcols));
        }
    }
    Err(Error::DecompositionFailed {
        kernel: "one-sided Jacobi SVD",
        iterations: MAX_SWEEPS,
        residual,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Extends an orthonormal set by `needed` vectors, choosing at each step the
/// canonical basis vector with the largest component outside the current
/// span (two Gram-Schmidt passes).
fn complete_basis(m: usize, accepted: &mut Vec<Vec<f64>>, needed: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(needed);
    for _ in 0..needed {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..m {
            let mut cand = vec![0.0; m];
            cand[i] = 1.0;
            for _ in 0..2 {
                for b in accepted.iter() {
                    let proj = dot(&cand, b);
                    for (c, bv) in cand.iter_mut().zip(b) {
                        *c -= proj * bv;
                    }
                }
            }
            let nrm = norm(&cand);
            if best.as_ref().is_none_or(|(bn, _)| nrm > *bn) {
                best = Some((nrm, cand));
            }
        }
        let (nrm, mut cand) = best.expect("m >= 1");
        for c in cand.iter_mut() {
            *c /= nrm;
        }
        accepted.push(cand.clone());
        out.push(cand);
    }
    out
}
