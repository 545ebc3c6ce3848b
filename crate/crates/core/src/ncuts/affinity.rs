use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;

/// `W = FΛFᵀ` with a `d × d` parameter `Λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinityModel {
    pub lambda: RealMatrix,
    /// Require every entry of `W` to be strictly positive.
    pub nonneg_guard: bool,
}

impl AffinityModel {
    pub fn new(lambda: RealMatrix, nonneg_guard: bool) -> Result<Self> {
        if !lambda.is_square() {
            return Err(Error::shape("AffinityModel", "Lambda must be square"));
        }
        if !lambda.is_finite() {
            return Err(Error::Contract("Lambda has non-finite entries".into()));
        }
        Ok(Self {
            lambda,
            nonneg_guard,
        })
    }

    pub fn dim(&self) -> usize {
        self.lambda.rows()
    }

    fn check_features(&self, f: &RealMatrix, op: &'static str) -> Result<()> {
        if f.cols() != self.dim() {
            return Err(Error::shape(
                op,
                format!(
                    "F has {} columns, Lambda is {}x{}",
                    f.cols(),
                    self.dim(),
                    self.dim()
                ),
            ));
        }
        Ok(())
    }
}

pub fn affinity_forward(f: &RealMatrix, model: &AffinityModel) -> Result<RealMatrix> {
    model.check_features(f, "affinity_forward")?;
    let mut w = f.matmul(&model.lambda).matmul_t(f);
    if model.lambda.asymmetry() == 0.0 {
        w = w.sym();
    }
    if model.nonneg_guard {
        for i in 0..w.rows() {
            for j in 0..w.cols() {
                let v = w.get(i, j);
                if v.is_nan() || v <= 0.0 {
                    return Err(Error::AffinityDomain {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
    }
    Ok(w)
}

/// Returns `(∂L/∂Λ, ∂L/∂F) = (Fᵀ gW F, 2 (gW)_sym F Λᵀ)`.
pub fn affinity_backward(
    f: &RealMatrix,
    model: &AffinityModel,
    g_w: &RealMatrix,
) -> Result<(RealMatrix, RealMatrix)> {
    model.check_features(f, "affinity_backward")?;
    let m = f.rows();
    if g_w.shape() != (m, m) {
        return Err(Error::shape(
            "affinity_backward",
            format!("dL/dW is {}x{}, expected {m}x{m}", g_w.rows(), g_w.cols()),
        ));
    }
    let g_lambda = f.t_matmul(&g_w.matmul(f));
    let g_f = g_w.sym().matmul(f).matmul_t(&model.lambda).scale(2.0);
    Ok((g_lambda, g_f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_features() {
        let model = AffinityModel::new(RealMatrix::identity(2), false).unwrap();
        let f = RealMatrix::identity(2);
        assert_eq!(
            affinity_forward(&f, &model).unwrap(),
            RealMatrix::identity(2)
        );
        let (gl, gf) = affinity_backward(&f, &model, &RealMatrix::identity(2)).unwrap();
        assert_eq!(gl, RealMatrix::identity(2));
        assert_eq!(gf, RealMatrix::identity(2).scale(2.0));
    }

    #[test]
    fn zero_upstream() {
        let model = AffinityModel::new(RealMatrix::identity(2), false).unwrap();
        let f = RealMatrix::from_rows(&[&[1.0, 2.0], &[0.5, 0.1], &[3.0, 1.0]]).unwrap();
        let (gl, gf) = affinity_backward(&f, &model, &RealMatrix::zeros(3, 3)).unwrap();
        assert!(gl.is_zero() && gf.is_zero());
    }

    #[test]
    fn guard_reports_offending_pair() {
        let model = AffinityModel::new(RealMatrix::identity(2), true).unwrap();
        let f = RealMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let err = affinity_forward(&f, &model).unwrap_err();
        assert!(matches!(err, Error::AffinityDomain { row: 0, col: 1, .. }));
    }
}
