//! Normalized-cuts layers: affinity construction, degree normalization,
//! orthogonal projectors, the alignment objectives `J₁` and `J₂`, rank
//! diagnostics and spectral-clustering inference.
//!
//! Pixels index rows. `E` is the `m × k` 0/1 cluster indicator and
//! `Ψ = E(EᵀE)⁻¹Eᵀ` its projector.

mod affinity;
mod criterion;
mod diagnostics;
mod inference;
mod instance;
mod objectives;
mod projector;

pub use affinity::{affinity_backward, affinity_forward, AffinityModel};
pub use criterion::ncuts_criterion;
pub use diagnostics::{
    j2_lambda_grad_is_zero, rank_gap_check, rank_gap_from_projectors, rank_gap_to_partition,
    LambdaGradReport, RankGapReport, RANK_LEMMA_MARGIN,
};
pub use inference::{
    adjusted_rand_index, kmeans, spectral_inference, InferenceConfig, KMeansResult,
};
pub use instance::{
    indicator_from_labels, labels_from_indicator, validate_indicator, SegmentationInstance,
};
pub use objectives::{
    degree_and_normalize, j1_backward, j1_forward, j2_backward, j2_forward, psi_projector, J1Cache,
    J2Cache, Normalized,
};
pub use projector::{projector_backward, projector_backward_with, projector_forward};
