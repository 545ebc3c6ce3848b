//! Deterministic double-precision dense linear algebra.

mod eig;
pub mod io;
mod matrix;
pub mod ops;
mod pinv;
mod svd;

pub use eig::{eig_sym, symmetry_tolerance, EigFactors};
pub use matrix::RealMatrix;
pub use pinv::{numerical_rank, pinv, pinv_cutoff, pseudo_inverse, PseudoInverse};
pub use svd::{svd_full, SvdFactors};

/// Flips columns of `primary` so the largest-magnitude entry of each is
/// nonnegative (lowest index wins ties); `partner` columns flip with them.
pub(crate) fn gauge_fix_columns(primary: &mut RealMatrix, mut partner: Option<&mut RealMatrix>) {
    for j in 0..primary.cols() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..primary.rows() {
            let a = primary.get(i, j).abs();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        if primary.get(best, j) < 0.0 {
            for i in 0..primary.rows() {
                primary.set(i, j, -primary.get(i, j));
            }
            if let Some(p) = partner.as_deref_mut() {
                for i in 0..p.rows() {
                    p.set(i, j, -p.get(i, j));
                }
            }
        }
    }
}
