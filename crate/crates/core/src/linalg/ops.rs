//! Checked versions of the small algebraic operators used by every layer:
//! `sym`, `diag_part`, Hadamard and colon products, diagonal embedding, and
//! a partial-pivoting inverse for the small `k × k` systems of the
//! normalized-cuts objectives.

use super::RealMatrix;
use crate::error::{Error, Result};

fn same_shape(op: &'static str, a: &RealMatrix, b: &RealMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            op,
            format!("{}x{} vs {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
        ));
    }
    Ok(())
}

fn square(op: &'static str, a: &RealMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::shape(
            op,
            format!("expected square, got {}x{}", a.rows(), a.cols()),
        ));
    }
    Ok(())
}

/// `½(Aᵀ + A)`.
pub fn sym(a: &RealMatrix) -> Result<RealMatrix> {
    square("sym", a)?;
    Ok(a.sym())
}

pub fn diag_part(a: &RealMatrix) -> RealMatrix {
    a.diag_part()
}

pub fn hadamard(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    same_shape("hadamard", a, b)?;
    Ok(a.hadamard(b))
}

/// `A : B = Tr(AᵀB)`.
pub fn colon(a: &RealMatrix, b: &RealMatrix) -> Result<f64> {
    same_shape("colon", a, b)?;
    Ok(a.colon(b))
}

/// `[v]`, the diagonal matrix with main diagonal `v` (a column or row vector).
pub fn diag_embed(v: &RealMatrix) -> Result<RealMatrix> {
    if v.rows() != 1 && v.cols() != 1 {
        return Err(Error::shape(
            "diag_embed",
            format!("expected a vector, got {}x{}", v.rows(), v.cols()),
        ));
    }
    Ok(RealMatrix::diag_from(v.as_slice()))
}

pub fn matmul(a: &RealMatrix, b: &RealMatrix) -> Result<RealMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::shape(
            "matmul",
            format!("{}x{} times {}x{}", a.rows(), a.cols(), b.rows(), b.cols()),
        ));
    }
    Ok(a.matmul(b))
}

/// Gauss-Jordan inverse with partial pivoting. Pivots below
/// `n · ε · max|A|` are reported as [`Error::Singular`].
pub fn inverse(a: &RealMatrix) -> Result<RealMatrix> {
    square("inverse", a)?;
    let n = a.rows();
    let mut work = a.clone();
    let mut inv = RealMatrix::identity(n);
    let tiny = (n as f64) * f64::EPSILON * a.max_abs();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| work.get(x, col).abs().total_cmp(&work.get(y, col).abs()))
            .expect("non-empty range");
        let p = work.get(pivot, col);
        if p.abs() <= tiny || p == 0.0 {
            return Err(Error::Singular);
        }
        if pivot != col {
            for j in 0..n {
                let (w1, w2) = (work.get(col, j), work.get(pivot, j));
                work.set(col, j, w2);
                work.set(pivot, j, w1);
                let (i1, i2) = (inv.get(col, j), inv.get(pivot, j));
                inv.set(col, j, i2);
                inv.set(pivot, j, i1);
            }
        }
        let scale = 1.0 / work.get(col, col);
        for j in 0..n {
            work.set(col, j, work.get(col, j) * scale);
            inv.set(col, j, inv.get(col, j) * scale);
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = work.get(r, col);
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                work.set(r, j, work.get(r, j) - factor * work.get(col, j));
                inv.set(r, j, inv.get(r, j) - factor * inv.get(col, j));
            }
        }
    }
    Ok(inv)
}
