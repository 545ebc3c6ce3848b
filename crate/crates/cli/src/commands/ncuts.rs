//! Learning per-pixel features for normalized cuts through J₂:
//! `Linear(d→k) → Rectifier → Affinity(Λ = I) → J₂`, one image per sample.
//!
//! Every per-sample forward made during training, plus every epoch-level
//! evaluation, is checked against the rank lemma: whenever `J₂ < ½`,
//! `rank(W)` must equal `rank(EEᵀ)`.

use std::cell::RefCell;

use matbp::linalg::RealMatrix;
use matbp::ncuts::{
    adjusted_rand_index, spectral_inference, AffinityModel, InferenceConfig, SegmentationInstance,
};
use matbp::netgraph::{
    sgd_train_observed, AffinityLayer, Alignment, AlignmentLoss, EpochRecord, Linear, Pipeline,
    Rectifier, Sample, SgdConfig, StepRecord, TrainingLog,
};
use matbp::random::{gaussian, seeded};
use serde::Serialize;

use crate::config::{image_side, DemoConfig};
use crate::error::CliError;
use crate::synth::region_images;

const INIT_STREAM: u64 = 0xa11e;
/// Inference shift toward the constant affinity; rectified features can
/// vanish on isolated pixels.
pub const DEGREE_REGULARIZATION: f64 = 1e-2;
/// Initial bias of the feature layer; keeps most rectifier units active.
const BIAS_INIT: f64 = 1.0;

/// One checked iterate.
#[derive(Debug, Clone, Serialize)]
pub struct RankPoint {
    pub epoch: usize,
    pub step: usize,
    pub sample: usize,
    pub j2: f64,
    pub rank_w: usize,
    pub rank_target: usize,
    pub lemma_applies: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NcutsSummary {
    pub k: usize,
    pub image_side: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub initial_j2: f64,
    pub final_j2: f64,
    /// Per training image at the final parameters.
    pub final_j2_per_image: Vec<f64>,
    pub final_rank_per_image: Vec<usize>,
    pub test_ari: Vec<f64>,
    pub mean_test_ari: f64,
    pub baseline_test_ari: Vec<f64>,
    pub baseline_mean_test_ari: f64,
    pub iterates_checked: usize,
    pub iterates_with_lemma: usize,
}

pub struct NcutsOutcome {
    pub summary: NcutsSummary,
    pub log: TrainingLog,
    pub trajectory: Vec<RankPoint>,
    /// First test image with the trained features in place of the raw
    /// channels.
    pub learned_test_instance: SegmentationInstance,
}

fn point(r: &StepRecord) -> RankPoint {
    let get = |k: &str| r.diagnostics.get(k).copied().unwrap_or(f64::NAN);
    RankPoint {
        epoch: r.epoch,
        step: r.step,
        sample: r.sample,
        j2: r.loss,
        rank_w: get("rank_w") as usize,
        rank_target: get("rank_target") as usize,
        lemma_applies: r.loss < 0.5 - matbp::ncuts::RANK_LEMMA_MARGIN,
    }
}

fn violation(p: &RankPoint) -> CliError {
    CliError::LemmaViolation {
        epoch: p.epoch,
        step: p.step,
        objective: p.j2,
        rank_w: p.rank_w,
        rank_target: p.rank_target,
    }
}

fn check_epoch(r: &EpochRecord) -> Result<(), CliError> {
    if r.aux.get("lemma_holds").is_some_and(|&h| h < 1.0) {
        return Err(CliError::LemmaViolation {
            epoch: r.epoch,
            step: 0,
            objective: r.loss,
            rank_w: r.aux.get("rank_w").copied().unwrap_or(f64::NAN) as usize,
            rank_target: r.aux.get("rank_target").copied().unwrap_or(f64::NAN) as usize,
        });
    }
    Ok(())
}

fn features(p: &Pipeline, x: &RealMatrix) -> Result<RealMatrix, CliError> {
    let mut y = x.clone();
    for layer in &p.layers[..2] {
        y = layer.forward(&y).map_err(CliError::Training)?.0;
    }
    Ok(y)
}

fn test_ari(
    p: &Pipeline,
    images: &[SegmentationInstance],
    cfg: &DemoConfig,
) -> Result<Vec<f64>, CliError> {
    images
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let w = p.predict(&img.f).map_err(CliError::Training)?;
            let inference = InferenceConfig {
                k_list: vec![cfg.k],
                seed: cfg.seed.wrapping_add(i as u64),
                image_shape: Some(img.image_shape),
                degree_regularization: DEGREE_REGULARIZATION,
                ..InferenceConfig::default()
            };
            let labels = spectral_inference(&w, &inference).map_err(CliError::Training)?;
            adjusted_rand_index(&labels[0], &img.labels())
                .map_err(|e| CliError::input("adjusted Rand index", e))
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Trains the feature layer and measures segmentation quality before and
/// after. Writes nothing.
pub fn run(cfg: &DemoConfig) -> Result<NcutsOutcome, CliError> {
    cfg.validate()?;
    let side = image_side(cfg.m).expect("validated");
    let (train, test) = region_images(
        cfg.seed,
        side,
        cfg.d,
        cfg.k,
        cfg.train_samples,
        cfg.test_samples,
    )?;
    let samples: Vec<Sample> = train
        .iter()
        .map(|img| Sample {
            input: img.f.clone(),
            target: img.e.clone(),
        })
        .collect();

    let mut rng = seeded(cfg.seed ^ INIT_STREAM);
    let linear = Linear::new(
        gaussian(&mut rng, cfg.d, cfg.k).scale(1.0 / (cfg.d as f64).sqrt()),
        RealMatrix::from_fn(1, cfg.k, |_, _| BIAS_INIT),
    )
    .map_err(|e| CliError::input("feature layer", e))?;
    let model = AffinityModel::new(RealMatrix::identity(cfg.k), false)
        .map_err(|e| CliError::input("affinity", e))?;
    let mut p = Pipeline::new(
        vec![
            Box::new(linear),
            Box::new(Rectifier),
            Box::new(AffinityLayer::frozen(model)),
        ],
        Box::new(AlignmentLoss {
            objective: Alignment::J2,
        }),
    );
    let baseline_test_ari = test_ari(&p, &test, cfg)?;

    let sgd = SgdConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        seed: cfg.seed,
        ..SgdConfig::default()
    };
    let trajectory = RefCell::new(Vec::new());
    let violated = RefCell::new(None);
    let result = sgd_train_observed(&mut p, &samples, &sgd, |r| {
        let pt = point(r);
        let holds = r.diagnostics.get("lemma_holds").is_none_or(|&h| h >= 1.0);
        trajectory.borrow_mut().push(pt.clone());
        if holds {
            Ok(())
        } else {
            *violated.borrow_mut() = Some(violation(&pt));
            Err(matbp::Error::Contract("rank lemma violated".into()))
        }
    });
    if let Some(v) = violated.into_inner() {
        return Err(v);
    }
    let log = result.map_err(CliError::Training)?;
    for r in &log.records {
        check_epoch(r)?;
    }

    let mut final_j2_per_image = Vec::new();
    let mut final_rank_per_image = Vec::new();
    for s in &samples {
        let t = p.forward(&s.input, &s.target).map_err(CliError::Training)?;
        let d = p.loss.diagnostics(t.loss_cache());
        final_j2_per_image.push(t.loss);
        final_rank_per_image.push(d.get("rank_w").copied().unwrap_or(f64::NAN) as usize);
    }
    let ari = test_ari(&p, &test, cfg)?;
    let learned = SegmentationInstance::new(
        features(&p, &test[0].f)?,
        test[0].e.clone(),
        test[0].image_shape,
    )
    .map_err(|e| CliError::input("learned features", e))?;
    let trajectory = trajectory.into_inner();
    let summary = NcutsSummary {
        k: cfg.k,
        image_side: side,
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        seed: cfg.seed,
        initial_j2: log.records[0].loss,
        final_j2: log.final_loss().unwrap_or(f64::NAN),
        final_j2_per_image,
        final_rank_per_image,
        mean_test_ari: mean(&ari),
        test_ari: ari,
        baseline_mean_test_ari: mean(&baseline_test_ari),
        baseline_test_ari,
        iterates_checked: trajectory.len() + log.records.len() * samples.len(),
        iterates_with_lemma: trajectory.iter().filter(|p| p.lemma_applies).count(),
    };
    Ok(NcutsOutcome {
        summary,
        log,
        trajectory,
        learned_test_instance: learned,
    })
}
