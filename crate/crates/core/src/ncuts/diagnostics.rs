use serde::{Deserialize, Serialize};

use super::{
    affinity_backward, affinity_forward, j2_backward, j2_forward, psi_projector, AffinityModel,
};
use crate::error::Result;
use crate::linalg::{pseudo_inverse, RealMatrix};

/// Size of `Fᵀ(∂J₂/∂W)F`, the `Λ`-gradient of `J₂` through `W = FΛFᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGradReport {
    pub norm: f64,
    /// `10⁻⁸ · (1 + ‖F‖²_F)`.
    pub tolerance: f64,
    pub pass: bool,
}

pub fn j2_lambda_grad_is_zero(
    f: &RealMatrix,
    model: &AffinityModel,
    e: &RealMatrix,
) -> Result<LambdaGradReport> {
    let w = affinity_forward(f, model)?;
    let (_, cache) = j2_forward(&w, e)?;
    let g_w = j2_backward(&cache)?;
    let (g_lambda, _) = affinity_backward(f, model, &g_w)?;
    let norm = g_lambda.frobenius_norm();
    let tolerance = 1e-8 * (1.0 + f.frobenius_norm().powi(2));
    Ok(LambdaGradReport {
        norm,
        tolerance,
        pass: norm <= tolerance,
    })
}

/// Margin below `½` the objective must clear before the rank implication
/// is enforced. Nested ranges one dimension apart sit at exactly `½`, and
/// rounding in the projectors must not push them under.
pub const RANK_LEMMA_MARGIN: f64 = 1e-8;

/// Distance between the projectors of two matrices and their numerical
/// ranks. Whenever `½‖Π_A − Π_B‖²_F < ½` the ranks must agree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankGapReport {
    /// `‖Π_A − Π_B‖_F`.
    pub distance: f64,
    /// `½‖Π_A − Π_B‖²_F`.
    pub objective: f64,
    pub rank_a: usize,
    pub rank_b: usize,
    /// The objective is below `½ − RANK_LEMMA_MARGIN`, so the rank
    /// implication applies.
    pub applies: bool,
    /// `false` only when the implication applies and the ranks differ.
    pub holds: bool,
}

pub fn rank_gap_check(a: &RealMatrix, b: &RealMatrix) -> Result<RankGapReport> {
    let pa = pseudo_inverse(a)?;
    let pb = pseudo_inverse(b)?;
    Ok(rank_gap_from_projectors(
        &pa.projector,
        pa.rank,
        &pb.projector,
        pb.rank,
    ))
}

/// [`rank_gap_check`] of `a` against `EEᵀ`, whose projector and rank
/// (the cluster count) follow from `E` directly.
pub fn rank_gap_to_partition(a: &RealMatrix, e: &RealMatrix) -> Result<RankGapReport> {
    let pa = pseudo_inverse(a)?;
    let pb = psi_projector(e)?;
    Ok(rank_gap_from_projectors(
        &pa.projector,
        pa.rank,
        &pb,
        e.cols(),
    ))
}

/// [`RankGapReport`] from already computed projectors and ranks.
pub fn rank_gap_from_projectors(
    pa: &RealMatrix,
    rank_a: usize,
    pb: &RealMatrix,
    rank_b: usize,
) -> RankGapReport {
    let distance = (pa - pb).frobenius_norm();
    let objective = 0.5 * distance * distance;
    let applies = objective < 0.5 - RANK_LEMMA_MARGIN;
    RankGapReport {
        distance,
        objective,
        rank_a,
        rank_b,
        applies,
        holds: !applies || rank_a == rank_b,
    }
}
