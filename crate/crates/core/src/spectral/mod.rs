//! Structured spectral layers with analytic backward passes.
//!
//! Each backward takes the factors cached by its forward pass; nothing is
//! refactorized. The SVD and EIG backward formulas divide by differences
//! of (squared) singular values or eigenvalues, so they share a
//! [`GapPolicy`] deciding what happens when two values nearly coincide.

mod eig_layer;
mod matfun;
mod o2p;
mod svd_layer;

pub use eig_layer::eig_layer_backward;
pub use matfun::{
    matfun_eig_backward, matfun_eig_forward, matfun_svd_backward, matfun_svd_forward,
    MatrixFunctionSpec,
};
pub use o2p::{deep_o2p, deep_o2p_backward, deep_o2p_forward, O2pCache, O2pPath};
pub use svd_layer::svd_layer_backward;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapAction {
    /// Refuse to differentiate through a near-degenerate spectrum.
    Error,
    /// Replace the offending denominator by `±min_gap`.
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPolicy {
    pub min_gap: f64,
    pub action: GapAction,
}

impl Default for GapPolicy {
    fn default() -> Self {
        Self {
            min_gap: 1e-8,
            action: GapAction::Error,
        }
    }
}

impl GapPolicy {
    pub fn new(min_gap: f64, action: GapAction) -> Result<Self> {
        if !min_gap.is_finite() || min_gap <= 0.0 {
            return Err(Error::Contract(format!(
                "min_gap must be positive, got {min_gap}"
            )));
        }
        Ok(Self { min_gap, action })
    }

    pub fn clamp(min_gap: f64) -> Self {
        Self {
            min_gap,
            action: GapAction::Clamp,
        }
    }
}

/// Shared builder: `out[i][j] = 1 / (key[i] − key[j])` off the diagonal.
fn inverse_differences(key: &[f64], policy: &GapPolicy) -> Result<RealMatrix> {
    let n = key.len();
    let mut out = RealMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut diff = key[i] - key[j];
            if diff.abs() < policy.min_gap {
                match policy.action {
                    GapAction::Error => {
                        return Err(Error::DegenerateSpectrum {
                            i: i.min(j),
                            j: i.max(j),
                            gap: diff.abs(),
                            min_gap: policy.min_gap,
                        })
                    }
                    GapAction::Clamp => {
                        let sign = if diff > 0.0 || (diff == 0.0 && i < j) {
                            1.0
                        } else {
                            -1.0
                        };
                        diff = sign * policy.min_gap;
                    }
                }
            }
            out.set(i, j, 1.0 / diff);
        }
    }
    Ok(out)
}

/// `Kᵢⱼ = 1/(σᵢ² − σⱼ²)` for `i ≠ j`, zero diagonal.
pub fn build_k(sigma: &[f64], policy: &GapPolicy) -> Result<RealMatrix> {
    if let Some(&s) = sigma.iter().find(|s| **s < 0.0) {
        return Err(Error::Contract(format!(
            "singular values must be nonnegative, got {s}"
        )));
    }
    let sq: Vec<f64> = sigma.iter().map(|s| s * s).collect();
    inverse_differences(&sq, policy)
}

/// `K̃ᵢⱼ = 1/(qᵢ − qⱼ)` for `i ≠ j`, zero diagonal.
pub fn build_k_tilde(q: &[f64], policy: &GapPolicy) -> Result<RealMatrix> {
    inverse_differences(q, policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loop_oracle(key: &[f64]) -> RealMatrix {
        let n = key.len();
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if i != j {
                    *v = 1.0 / (key[i] - key[j]);
                }
            }
        }
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        RealMatrix::from_rows(&refs).unwrap()
    }

    #[test]
    fn k_two_values() {
        let k = build_k(&[2.0, 1.0], &GapPolicy::default()).unwrap();
        let expected = RealMatrix::from_rows(&[&[0.0, 1.0 / 3.0], &[-1.0 / 3.0, 0.0]]).unwrap();
        assert_eq!(k, expected);
    }

    #[test]
    fn k_three_values_is_antisymmetric_and_matches_loop() {
        let k = build_k(&[3.0, 2.0, 1.0], &GapPolicy::default()).unwrap();
        assert_eq!(k, loop_oracle(&[9.0, 4.0, 1.0]));
        assert_eq!(&k + &k.transpose(), RealMatrix::zeros(3, 3));
    }

    #[test]
    fn k_tilde_values() {
        let k = build_k_tilde(&[5.0, 3.0], &GapPolicy::default()).unwrap();
        assert_eq!(
            k,
            RealMatrix::from_rows(&[&[0.0, 0.5], &[-0.5, 0.0]]).unwrap()
        );
        let k = build_k_tilde(&[4.0, 2.0, 1.0], &GapPolicy::default()).unwrap();
        assert_eq!(k, loop_oracle(&[4.0, 2.0, 1.0]));
    }

    #[test]
    fn degenerate_spectrum_errors_or_clamps() {
        let err = build_k(&[1.0, 1.0], &GapPolicy::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { i: 0, j: 1, .. }));
        assert!(build_k_tilde(&[1.0, 1.0], &GapPolicy::default()).is_err());
        let k = build_k_tilde(&[1.0, 1.0], &GapPolicy::clamp(1e-6)).unwrap();
        assert_eq!(k.get(0, 1), 1e6);
        assert_eq!(k.get(1, 0), -1e6);
    }

    #[test]
    fn policy_rejects_nonpositive_gap() {
        assert!(GapPolicy::new(0.0, GapAction::Error).is_err());
        assert!(GapPolicy::new(1e-3, GapAction::Clamp).is_ok());
    }
}
