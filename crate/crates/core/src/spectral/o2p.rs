//! Second-order pooling descriptor `C = g(FᵀF + εI)` (with `g = log` by
//! default) through either the SVD of `F` or the eigendecomposition of the
//! shifted Gram matrix.

use serde::{Deserialize, Serialize};

use super::{
    eig_layer_backward, matfun_eig_backward, matfun_eig_forward, matfun_svd_backward,
    matfun_svd_forward, svd_layer_backward, GapPolicy, MatrixFunctionSpec,
};
use crate::error::{Error, Result};
use crate::linalg::{eig_sym, svd_full, EigFactors, RealMatrix, SvdFactors};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum O2pPath {
    Svd,
    Eig,
}

/// Factors retained by the forward pass.
#[derive(Debug, Clone)]
pub enum O2pCache {
    Svd(SvdFactors),
    /// Factors of `Z = FᵀF + εI`.
    Eig {
        z: RealMatrix,
        factors: EigFactors,
    },
}

pub fn deep_o2p(f: &RealMatrix, spec: &MatrixFunctionSpec, path: O2pPath) -> Result<RealMatrix> {
    deep_o2p_forward(f, spec, path).map(|(c, _)| c)
}

pub fn deep_o2p_forward(
    f: &RealMatrix,
    spec: &MatrixFunctionSpec,
    path: O2pPath,
) -> Result<(RealMatrix, O2pCache)> {
    match path {
        O2pPath::Svd => {
            if f.rows() < f.cols() {
                return Err(Error::shape(
                    "deep_o2p",
                    format!("SVD path needs rows >= cols, got {}x{}", f.rows(), f.cols()),
                ));
            }
            let factors = svd_full(f)?;
            let c = matfun_svd_forward(&factors, spec)?;
            Ok((c, O2pCache::Svd(factors)))
        }
        O2pPath::Eig => {
            let d = f.cols();
            let z = (&f.t_matmul(f) + &RealMatrix::identity(d).scale(spec.epsilon)).sym();
            let factors = eig_sym(&z)?;
            let c = matfun_eig_forward(&factors, spec)?;
            Ok((c, O2pCache::Eig { z, factors }))
        }
    }
}

/// `∂L/∂F` from `∂L/∂C`.
pub fn deep_o2p_backward(
    f: &RealMatrix,
    cache: &O2pCache,
    spec: &MatrixFunctionSpec,
    g_c: &RealMatrix,
    policy: &GapPolicy,
) -> Result<RealMatrix> {
    match cache {
        O2pCache::Svd(factors) => {
            let (g_v, g_s) = matfun_svd_backward(factors, spec, g_c)?;
            let m = f.rows();
            svd_layer_backward(f, factors, &RealMatrix::zeros(m, m), &g_s, &g_v, policy)
        }
        O2pCache::Eig { z, factors } => {
            let (g_u, g_q) = matfun_eig_backward(factors, spec, g_c)?;
            let g_z = eig_layer_backward(z, factors, &g_u, &g_q, policy)?;
            // dZ = dFᵀF + FᵀdF  ⇒  ∂L/∂F = 2 F (∂L/∂Z)_sym
            Ok(f.matmul(&g_z.sym()).scale(2.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_features_give_log_epsilon() {
        let spec = MatrixFunctionSpec::log(1e-3).unwrap();
        let expected = RealMatrix::identity(3).scale(1e-3f64.ln());
        for path in [O2pPath::Svd, O2pPath::Eig] {
            let c = deep_o2p(&RealMatrix::zeros(5, 3), &spec, path).unwrap();
            assert!((&c - &expected).frobenius_norm() < 1e-12, "{path:?}");
        }
    }

    #[test]
    fn svd_path_rejects_wide_features() {
        let spec = MatrixFunctionSpec::default();
        assert!(deep_o2p(&RealMatrix::zeros(2, 3), &spec, O2pPath::Svd).is_err());
        assert!(deep_o2p(&RealMatrix::zeros(2, 3), &spec, O2pPath::Eig).is_ok());
    }
}
