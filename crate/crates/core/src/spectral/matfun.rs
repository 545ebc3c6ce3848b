//! Spectral matrix functions on top of SVD and EIG factors.
//!
//! The SVD variant builds `C = V g(ΣᵀΣ + εI) Vᵀ = g(FᵀF + εI)` from the
//! factors of `F`; the EIG variant builds `C = U g(Q) Uᵀ = g(Z)`, with any
//! regularizing shift already applied to `Z` by the caller.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{EigFactors, RealMatrix, SvdFactors};

/// A scalar analytic function `g`, its derivative, and the fixed
/// regularizer `ε` added to `ΣᵀΣ` on the SVD path.
#[derive(Clone, Copy)]
pub struct MatrixFunctionSpec {
    pub name: &'static str,
    pub g: fn(f64) -> f64,
    pub g_prime: fn(f64) -> f64,
    pub epsilon: f64,
}

impl fmt::Debug for MatrixFunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixFunctionSpec")
            .field("name", &self.name)
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

fn ln(x: f64) -> f64 {
    x.ln()
}

fn recip(x: f64) -> f64 {
    1.0 / x
}

fn sqrt(x: f64) -> f64 {
    x.sqrt()
}

fn half_inv_sqrt(x: f64) -> f64 {
    0.5 / x.sqrt()
}

impl MatrixFunctionSpec {
    pub fn new(
        name: &'static str,
        g: fn(f64) -> f64,
        g_prime: fn(f64) -> f64,
        epsilon: f64,
    ) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::Contract(format!(
                "epsilon must be >= 0, got {epsilon}"
            )));
        }
        Ok(Self {
            name,
            g,
            g_prime,
            epsilon,
        })
    }

    /// Matrix logarithm, the second-order pooling nonlinearity.
    pub fn log(epsilon: f64) -> Result<Self> {
        Self::new("log", ln, recip, epsilon)
    }

    pub fn sqrt(epsilon: f64) -> Result<Self> {
        Self::new("sqrt", sqrt, half_inv_sqrt, epsilon)
    }

    /// `(g(x), g'(x))` per value, failing if either is non-finite.
    pub(crate) fn eval(&self, values: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut g = Vec::with_capacity(values.len());
        let mut gp = Vec::with_capacity(values.len());
        for &x in values {
            let (a, b) = ((self.g)(x), (self.g_prime)(x));
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::Domain {
                    function: self.name,
                    argument: x,
                });
            }
            g.push(a);
            gp.push(b);
        }
        Ok((g, gp))
    }
}

impl Default for MatrixFunctionSpec {
    fn default() -> Self {
        Self::log(1e-3).expect("valid epsilon")
    }
}

fn shifted_gram_spectrum(f: &SvdFactors, epsilon: f64) -> Vec<f64> {
    f.singular_values()
        .iter()
        .map(|s| s * s + epsilon)
        .collect()
}

/// `C = V g(ΣᵀΣ + εI) Vᵀ`.
pub fn matfun_svd_forward(f: &SvdFactors, spec: &MatrixFunctionSpec) -> Result<RealMatrix> {
    let (g, _) = spec.eval(&shifted_gram_spectrum(f, spec.epsilon))?;
    Ok(f.v.scale_cols(&g).matmul_t(&f.v).sym())
}

/// Returns `(∂L/∂V, ∂L/∂Σ)`; `∂L/∂U` is identically zero.
///
/// `∂L/∂V = 2 (∂L/∂C)_sym V g(ΣᵀΣ+εI)` and
/// `∂L/∂Σ = 2 Σ g'(ΣᵀΣ+εI) Vᵀ (∂L/∂C)_sym V`, restricted to its diagonal.
pub fn matfun_svd_backward(
    f: &SvdFactors,
    spec: &MatrixFunctionSpec,
    g_c: &RealMatrix,
) -> Result<(RealMatrix, RealMatrix)> {
    let n = f.v.rows();
    if g_c.shape() != (n, n) {
        return Err(Error::shape(
            "matfun_svd_backward",
            format!("dL/dC is {}x{}, expected {n}x{n}", g_c.rows(), g_c.cols()),
        ));
    }
    let (g, gp) = spec.eval(&shifted_gram_spectrum(f, spec.epsilon))?;
    let gcs = g_c.sym();
    let g_v = gcs.matmul(&f.v).scale_cols(&g).scale(2.0);
    let projected = f.v.t_matmul(&gcs.matmul(&f.v));
    let g_s =
        f.s.scale_cols(&gp)
            .matmul(&projected)
            .scale(2.0)
            .diag_part();
    Ok((g_v, g_s))
}

/// `C = U g(Q) Uᵀ`.
pub fn matfun_eig_forward(f: &EigFactors, spec: &MatrixFunctionSpec) -> Result<RealMatrix> {
    let (g, _) = spec.eval(&f.eigenvalues())?;
    Ok(f.u.scale_cols(&g).matmul_t(&f.u).sym())
}

/// Returns `(∂L/∂U, ∂L/∂Q)` with `∂L/∂U = 2 (∂L/∂C)_sym U g(Q)` and
/// `∂L/∂Q = g'(Q) Uᵀ (∂L/∂C) U` restricted to its diagonal.
pub fn matfun_eig_backward(
    f: &EigFactors,
    spec: &MatrixFunctionSpec,
    g_c: &RealMatrix,
) -> Result<(RealMatrix, RealMatrix)> {
    let n = f.u.rows();
    if g_c.shape() != (n, n) {
        return Err(Error::shape(
            "matfun_eig_backward",
            format!("dL/dC is {}x{}, expected {n}x{n}", g_c.rows(), g_c.cols()),
        ));
    }
    let (g, gp) = spec.eval(&f.eigenvalues())?;
    let gcs = g_c.sym();
    let g_u = gcs.matmul(&f.u).scale_cols(&g).scale(2.0);
    let g_q = f.u.t_matmul(&g_c.matmul(&f.u)).scale_rows(&gp).diag_part();
    Ok((g_u, g_q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_sym, svd_full};

    #[test]
    fn log_of_identity_features() {
        let f = svd_full(&RealMatrix::identity(2)).unwrap();
        let c = matfun_svd_forward(&f, &MatrixFunctionSpec::log(1e-3).unwrap()).unwrap();
        let expected = RealMatrix::identity(2).scale(1.001f64.ln());
        assert!((&c - &expected).frobenius_norm() < 1e-16);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let spec = MatrixFunctionSpec::default();
        let f = svd_full(&RealMatrix::from_rows(&[&[2.0, 0.5], &[0.0, 1.0], &[1.0, 0.0]]).unwrap())
            .unwrap();
        let (gv, gs) = matfun_svd_backward(&f, &spec, &RealMatrix::zeros(2, 2)).unwrap();
        assert!(gv.is_zero() && gs.is_zero());
        let e = eig_sym(&RealMatrix::diag_from(&[2.0, 1.0])).unwrap();
        let (gu, gq) = matfun_eig_backward(&e, &spec, &RealMatrix::zeros(2, 2)).unwrap();
        assert!(gu.is_zero() && gq.is_zero());
    }

    #[test]
    fn eig_log_of_identity_is_zero() {
        let e = eig_sym(&RealMatrix::identity(2)).unwrap();
        let c = matfun_eig_forward(&e, &MatrixFunctionSpec::log(0.0).unwrap()).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn log_domain_error() {
        let e = eig_sym(&RealMatrix::diag_from(&[1.0, -1.0])).unwrap();
        let err = matfun_eig_forward(&e, &MatrixFunctionSpec::log(0.0).unwrap()).unwrap_err();
        assert!(matches!(
            err,
            Error::Domain {
                function: "log",
                ..
            }
        ));
        let f = svd_full(&RealMatrix::zeros(2, 2)).unwrap();
        assert!(matfun_svd_forward(&f, &MatrixFunctionSpec::log(0.0).unwrap()).is_err());
    }

    #[test]
    fn negative_epsilon_rejected() {
        assert!(MatrixFunctionSpec::log(-1.0).is_err());
    }
}
