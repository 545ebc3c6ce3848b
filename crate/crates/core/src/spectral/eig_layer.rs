use super::{build_k_tilde, GapPolicy};
use crate::error::{Error, Result};
use crate::linalg::{EigFactors, RealMatrix};

/// Gradient of `L ∘ eig` with respect to a symmetric `Z`:
/// `U {K̃ᵀ ∘ (Uᵀ ∂L/∂U) + (∂L/∂Q)_diag} Uᵀ`, symmetrized because only
/// symmetric variations of `Z` are admissible. The result is exactly
/// symmetric.
pub fn eig_layer_backward(
    z: &RealMatrix,
    f: &EigFactors,
    g_u: &RealMatrix,
    g_q: &RealMatrix,
    policy: &GapPolicy,
) -> Result<RealMatrix> {
    let n = z.rows();
    for (name, shape) in [
        ("Z", z.shape()),
        ("U", f.u.shape()),
        ("dL/dU", g_u.shape()),
        ("dL/dQ", g_q.shape()),
    ] {
        if shape != (n, n) {
            return Err(Error::shape(
                "eig_layer_backward",
                format!("{name} is {}x{}, expected {n}x{n}", shape.0, shape.1),
            ));
        }
    }
    let k_tilde = build_k_tilde(&f.eigenvalues(), policy)?;
    let inner = &k_tilde.transpose().hadamard(&f.u.t_matmul(g_u)) + &g_q.diag_part();
    Ok(f.u.matmul(&inner).matmul_t(&f.u).sym())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eig_sym;

    #[test]
    fn eigenvalue_gradient_only() {
        let z = RealMatrix::diag_from(&[5.0, 2.0]);
        let f = eig_sym(&z).unwrap();
        let g = eig_layer_backward(
            &z,
            &f,
            &RealMatrix::zeros(2, 2),
            &RealMatrix::identity(2),
            &GapPolicy::default(),
        )
        .unwrap();
        assert_eq!(g, RealMatrix::identity(2));
    }

    #[test]
    fn zero_upstream_gives_zero() {
        let z = RealMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]).unwrap();
        let f = eig_sym(&z).unwrap();
        let g = eig_layer_backward(
            &z,
            &f,
            &RealMatrix::zeros(2, 2),
            &RealMatrix::zeros(2, 2),
            &GapPolicy::default(),
        )
        .unwrap();
        assert!(g.is_zero());
    }
}
