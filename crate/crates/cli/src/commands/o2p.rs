//! Covariance-class classification through a trainable DeepO₂P pooling:
//! `Linear(d→k) → Rectifier → DeepO₂P → Flatten → Linear(k²→1) → Logistic`.
//!
//! The baseline keeps the first linear layer at its initialization and
//! trains only the classifier on the resulting fixed descriptors.

use matbp::linalg::RealMatrix;
use matbp::netgraph::{
    evaluate, sgd_train, DeepO2pLayer, Flatten, Layer, Linear, LogisticLoss, Pipeline, Rectifier,
    Sample, SgdConfig, TrainingLog,
};
use matbp::random::{gaussian, seeded};
use matbp::spectral::{MatrixFunctionSpec, O2pPath};
use serde::Serialize;

use crate::config::{DemoConfig, SpectralPath};
use crate::error::CliError;
use crate::synth::covariance_classes;

const INIT_STREAM: u64 = 0x1417;
/// Standard deviation of the initial classifier weights.
const CLASSIFIER_INIT: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct O2pSummary {
    pub path: SpectralPath,
    pub epochs: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub baseline_final_loss: f64,
    pub baseline_test_accuracy: f64,
}

pub struct O2pOutcome {
    pub summary: O2pSummary,
    pub log: TrainingLog,
    pub baseline_log: TrainingLog,
}

fn training(cfg: &DemoConfig) -> SgdConfig {
    SgdConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        seed: cfg.seed,
        ..SgdConfig::default()
    }
}

fn front(cfg: &DemoConfig, projection: Linear) -> Result<Vec<Box<dyn Layer>>, CliError> {
    let spec = MatrixFunctionSpec::log(cfg.epsilon).map_err(|e| CliError::input("epsilon", e))?;
    let path = match cfg.path {
        SpectralPath::Svd => O2pPath::Svd,
        SpectralPath::Eig => O2pPath::Eig,
    };
    Ok(vec![
        Box::new(projection),
        Box::new(Rectifier),
        Box::new(DeepO2pLayer::new(spec, path)),
        Box::new(Flatten),
    ])
}

fn accuracy(p: &Pipeline, data: &[Sample]) -> Result<f64, CliError> {
    let r = evaluate(p, data, 0).map_err(CliError::Training)?;
    Ok(r.aux.get("accuracy").copied().unwrap_or(f64::NAN))
}

/// Trains the pipeline and the fixed-feature baseline. Writes nothing.
pub fn run(cfg: &DemoConfig) -> Result<O2pOutcome, CliError> {
    cfg.validate()?;
    let (train, test) =
        covariance_classes(cfg.seed, cfg.m, cfg.d, cfg.train_samples, cfg.test_samples);
    let mut rng = seeded(cfg.seed ^ INIT_STREAM);
    let projection = Linear::new(
        gaussian(&mut rng, cfg.d, cfg.k).scale(1.0 / (cfg.d as f64).sqrt()),
        RealMatrix::zeros(1, cfg.k),
    )
    .map_err(|e| CliError::input("projection", e))?;
    let classifier = Linear::new(
        gaussian(&mut rng, cfg.k * cfg.k, 1).scale(CLASSIFIER_INIT),
        RealMatrix::zeros(1, 1),
    )
    .map_err(|e| CliError::input("classifier", e))?;

    // Baseline: descriptors from the untrained front, classifier only.
    let fixed = Pipeline::new(front(cfg, projection.clone())?, Box::new(LogisticLoss));
    let describe = |data: &[Sample]| -> Result<Vec<Sample>, CliError> {
        data.iter()
            .map(|s| {
                Ok(Sample {
                    input: fixed.predict(&s.input).map_err(CliError::Training)?,
                    target: s.target.clone(),
                })
            })
            .collect()
    };
    let (train_fixed, test_fixed) = (describe(&train)?, describe(&test)?);
    let mut baseline = Pipeline::new(vec![Box::new(classifier.clone())], Box::new(LogisticLoss));
    let baseline_log =
        sgd_train(&mut baseline, &train_fixed, &training(cfg)).map_err(CliError::Training)?;

    let mut layers = front(cfg, projection)?;
    layers.push(Box::new(classifier));
    let mut p = Pipeline::new(layers, Box::new(LogisticLoss));
    let log = sgd_train(&mut p, &train, &training(cfg)).map_err(CliError::Training)?;

    let summary = O2pSummary {
        path: cfg.path,
        epochs: cfg.epochs,
        learning_rate: cfg.learning_rate,
        epsilon: cfg.epsilon,
        seed: cfg.seed,
        initial_loss: log.records[0].loss,
        final_loss: log.final_loss().unwrap_or(f64::NAN),
        train_accuracy: accuracy(&p, &train)?,
        test_accuracy: accuracy(&p, &test)?,
        baseline_final_loss: baseline_log.final_loss().unwrap_or(f64::NAN),
        baseline_test_accuracy: accuracy(&baseline, &test_fixed)?,
    };
    Ok(O2pOutcome {
        summary,
        log,
        baseline_log,
    })
}
