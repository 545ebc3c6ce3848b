use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{cache_ref, Cache, Loss};
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::ncuts::{
    j1_backward, j1_forward, j2_backward, j2_forward, rank_gap_from_projectors,
    rank_gap_to_partition, J1Cache, J2Cache, RankGapReport,
};

/// Returns its `1 × 1` input.
pub struct IdentityLoss;

impl Loss for IdentityLoss {
    fn name(&self) -> &str {
        "identity"
    }

    fn forward(&self, x: &RealMatrix, _target: &RealMatrix) -> Result<(f64, Cache)> {
        if x.shape() != (1, 1) {
            return Err(Error::shape("identity loss", "input must be 1x1"));
        }
        Ok((x.get(0, 0), Box::new(())))
    }

    fn backward(&self, cache: &Cache) -> Result<RealMatrix> {
        cache_ref::<()>(cache, "identity loss")?;
        Ok(RealMatrix::identity(1))
    }
}

/// Binary cross-entropy on a `1 × 1` logit `z` with target `y ∈ {0, 1}`:
/// `log(1 + eᶻ) − y·z`.
pub struct LogisticLoss;

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Loss for LogisticLoss {
    fn name(&self) -> &str {
        "logistic"
    }

    fn forward(&self, x: &RealMatrix, target: &RealMatrix) -> Result<(f64, Cache)> {
        if x.shape() != (1, 1) || target.shape() != (1, 1) {
            return Err(Error::shape(
                "logistic loss",
                "logit and target must be 1x1",
            ));
        }
        let (z, y) = (x.get(0, 0), target.get(0, 0));
        if y != 0.0 && y != 1.0 {
            return Err(Error::Contract(format!(
                "logistic target must be 0 or 1, got {y}"
            )));
        }
        let value = softplus(z) - y * z;
        let correct = ((z > 0.0) == (y == 1.0)) as u8 as f64;
        Ok((value, Box::new((z, y, correct))))
    }

    fn backward(&self, cache: &Cache) -> Result<RealMatrix> {
        let &(z, y, _): &(f64, f64, f64) = cache_ref(cache, "logistic loss")?;
        Ok(RealMatrix::from_fn(1, 1, |_, _| sigmoid(z) - y))
    }

    fn diagnostics(&self, cache: &Cache) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        if let Ok(&(_, _, correct)) = cache_ref::<(f64, f64, f64)>(cache, "logistic loss") {
            out.insert("accuracy".into(), correct);
        }
        out
    }
}

/// `½‖x − t‖²_F`.
pub struct SquaredError;

impl Loss for SquaredError {
    fn name(&self) -> &str {
        "squared_error"
    }

    fn forward(&self, x: &RealMatrix, target: &RealMatrix) -> Result<(f64, Cache)> {
        if x.shape() != target.shape() {
            return Err(Error::shape(
                "squared error",
                "input and target shapes differ",
            ));
        }
        let r = x - target;
        Ok((0.5 * r.frobenius_norm().powi(2), Box::new(r)))
    }

    fn backward(&self, cache: &Cache) -> Result<RealMatrix> {
        Ok(cache_ref::<RealMatrix>(cache, "squared error")?.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alignment {
    /// `½‖Π_M − Π_Ω‖²_F` on the normalized affinity.
    J1,
    /// `½‖Π_W − Π_Ψ‖²_F` on the raw affinity.
    J2,
}

/// Projector alignment between an affinity `W` (the input) and the
/// indicator `E` (the target).
pub struct AlignmentLoss {
    pub objective: Alignment,
}

enum AlignmentCache {
    J1(Box<J1Cache>, BTreeMap<String, f64>),
    J2(Box<J2Cache>, BTreeMap<String, f64>),
}

impl Loss for AlignmentLoss {
    fn name(&self) -> &str {
        match self.objective {
            Alignment::J1 => "alignment_j1",
            Alignment::J2 => "alignment_j2",
        }
    }

    fn forward(&self, w: &RealMatrix, e: &RealMatrix) -> Result<(f64, Cache)> {
        let mut diag = BTreeMap::new();
        let mut record = |gap: RankGapReport| {
            diag.insert("rank_w".into(), gap.rank_a as f64);
            diag.insert("rank_target".into(), gap.rank_b as f64);
            diag.insert("lemma_holds".into(), if gap.holds { 1.0 } else { 0.0 });
        };
        match self.objective {
            Alignment::J1 => {
                record(rank_gap_to_partition(w, e)?);
                let (v, c) = j1_forward(w, e)?;
                diag.insert("j1".into(), v);
                Ok((v, Box::new(AlignmentCache::J1(Box::new(c), diag))))
            }
            Alignment::J2 => {
                let (v, c) = j2_forward(w, e)?;
                record(rank_gap_from_projectors(
                    &c.pi_w,
                    c.rank,
                    &c.pi_psi,
                    e.cols(),
                ));
                diag.insert("j2".into(), v);
                Ok((v, Box::new(AlignmentCache::J2(Box::new(c), diag))))
            }
        }
    }

    fn backward(&self, cache: &Cache) -> Result<RealMatrix> {
        match cache_ref::<AlignmentCache>(cache, self.name())? {
            AlignmentCache::J1(c, _) => j1_backward(c),
            AlignmentCache::J2(c, _) => j2_backward(c),
        }
    }

    fn diagnostics(&self, cache: &Cache) -> BTreeMap<String, f64> {
        match cache_ref::<AlignmentCache>(cache, self.name()) {
            Ok(AlignmentCache::J1(_, d)) | Ok(AlignmentCache::J2(_, d)) => d.clone(),
            Err(_) => BTreeMap::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_at_zero_is_log_two() {
        let (v, c) = LogisticLoss
            .forward(&RealMatrix::zeros(1, 1), &RealMatrix::identity(1))
            .unwrap();
        assert_eq!(v, std::f64::consts::LN_2);
        assert_eq!(LogisticLoss.backward(&c).unwrap().get(0, 0), -0.5);
    }

    #[test]
    fn logistic_is_stable_for_large_logits() {
        let big = RealMatrix::from_fn(1, 1, |_, _| 800.0);
        let (v, _) = LogisticLoss
            .forward(&big, &RealMatrix::zeros(1, 1))
            .unwrap();
        assert_eq!(v, 800.0);
        let (v, _) = LogisticLoss
            .forward(&big, &RealMatrix::identity(1))
            .unwrap();
        assert_eq!(v, 0.0);
    }
}
