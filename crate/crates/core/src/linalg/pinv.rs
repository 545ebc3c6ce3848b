//! Moore-Penrose pseudoinverse, orthogonal projector and numerical rank.
//!
//! Singular values at or below `τ = max(m, n) · σ_max · 2⁻⁵²` count as
//! zero. Exactly symmetric inputs go through [`eig_sym`], whose absolute
//! eigenvalues are the singular values; everything else through
//! [`svd_full`] (on the transpose when the matrix is wide).

use super::{eig_sym, svd_full, RealMatrix};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct PseudoInverse {
    /// `A⁺`, `n × m`.
    pub pinv: RealMatrix,
    /// `Π_A = AA⁺`, formed as `U_r U_rᵀ` from the same factorization so it
    /// is exactly symmetric.
    pub projector: RealMatrix,
    pub rank: usize,
    pub cutoff: f64,
    /// Nonincreasing singular values of `A`.
    pub singular_values: Vec<f64>,
}

pub fn pinv_cutoff(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    (rows.max(cols) as f64) * sigma_max * f64::EPSILON
}

pub fn pinv(a: &RealMatrix) -> Result<RealMatrix> {
    Ok(pseudo_inverse(a)?.pinv)
}

/// Number of singular values above the pseudoinverse cutoff.
pub fn numerical_rank(a: &RealMatrix) -> Result<usize> {
    Ok(pseudo_inverse(a)?.rank)
}

pub fn pseudo_inverse(a: &RealMatrix) -> Result<PseudoInverse> {
    let (m, n) = a.shape();
    if m == n && a.asymmetry() == 0.0 {
        return symmetric_pinv(a);
    }
    if m >= n {
        let f = svd_full(a)?;
        let sigma = f.singular_values();
        let cutoff = pinv_cutoff(m, n, sigma[0]);
        let rank = sigma.iter().filter(|&&s| s > cutoff).count();
        let inv: Vec<f64> = (0..n)
            .map(|i| if i < rank { 1.0 / sigma[i] } else { 0.0 })
            .collect();
        // A⁺ = V Σ⁺ U₁ᵀ
        let u1 = f.u1();
        let pinv = f.v.scale_cols(&inv).matmul_t(&u1);
        let projector = outer_leading(&f.u, rank, m);
        Ok(PseudoInverse {
            pinv,
            projector,
            rank,
            cutoff,
            singular_values: sigma,
        })
    } else {
        // Aᵀ = U S Vᵀ  ⇒  A = V Sᵀ Uᵀ, A⁺ = U₁ S⁺ Vᵀ, Π_A = V_r V_rᵀ.
        let f = svd_full(&a.transpose())?;
        let sigma = f.singular_values();
        let cutoff = pinv_cutoff(m, n, sigma[0]);
        let rank = sigma.iter().filter(|&&s| s > cutoff).count();
        let inv: Vec<f64> = (0..m)
            .map(|i| if i < rank { 1.0 / sigma[i] } else { 0.0 })
            .collect();
        let pinv = f.u1().scale_cols(&inv).matmul_t(&f.v);
        let projector = outer_leading(&f.v, rank, m);
        Ok(PseudoInverse {
            pinv,
            projector,
            rank,
            cutoff,
            singular_values: sigma,
        })
    }
}

fn symmetric_pinv(a: &RealMatrix) -> Result<PseudoInverse> {
    let n = a.rows();
    let f = eig_sym(a)?;
    let lambda = f.eigenvalues();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| lambda[y].abs().total_cmp(&lambda[x].abs()).then(x.cmp(&y)));
    let sigma: Vec<f64> = order.iter().map(|&k| lambda[k].abs()).collect();
    let cutoff = pinv_cutoff(n, n, sigma[0]);
    let rank = sigma.iter().filter(|&&s| s > cutoff).count();
    let kept = &order[..rank];
    let mut pinv = RealMatrix::zeros(n, n);
    let mut projector = RealMatrix::zeros(n, n);
    if rank > 0 {
        let basis = RealMatrix::from_fn(n, rank, |i, j| f.u.get(i, kept[j]));
        let inv: Vec<f64> = kept.iter().map(|&k| 1.0 / lambda[k]).collect();
        pinv = basis.scale_cols(&inv).matmul_t(&basis);
        projector = basis.matmul_t(&basis);
    }
    Ok(PseudoInverse {
        pinv: pinv.sym(),
        projector: projector.sym(),
        rank,
        cutoff,
        singular_values: sigma,
    })
}

/// `Σ_{j<r} q_j q_jᵀ` over the leading `r` columns of `q`.
fn outer_leading(q: &RealMatrix, r: usize, m: usize) -> RealMatrix {
    if r == 0 {
        return RealMatrix::zeros(m, m);
    }
    let qr = q.columns(0..r);
    qr.matmul_t(&qr).sym()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diag_with_zero() {
        let a = RealMatrix::diag_from(&[2.0, 0.0]);
        let p = pseudo_inverse(&a).unwrap();
        assert_eq!(p.pinv, RealMatrix::diag_from(&[0.5, 0.0]));
        assert_eq!(p.rank, 1);
        assert_eq!(p.projector, RealMatrix::diag_from(&[1.0, 0.0]));
    }

    #[test]
    fn orthogonal_inverse_is_transpose() {
        let (c, s) = (0.6f64, 0.8f64);
        let a = RealMatrix::from_rows(&[&[c, -s], &[s, c]]).unwrap();
        let p = pinv(&a).unwrap();
        assert!((&p - &a.transpose()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn wide_matrix() {
        let a = RealMatrix::from_rows(&[&[1.0, 0.0, 1.0], &[0.0, 2.0, 0.0]]).unwrap();
        let p = pseudo_inverse(&a).unwrap();
        assert_eq!(p.pinv.shape(), (3, 2));
        let back = a.matmul(&p.pinv).matmul(&a);
        assert!((&back - &a).frobenius_norm() < 1e-14);
        assert_eq!(p.rank, 2);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let p = pseudo_inverse(&RealMatrix::zeros(3, 3)).unwrap();
        assert_eq!(p.rank, 0);
        assert!(p.pinv.is_zero());
    }
}
