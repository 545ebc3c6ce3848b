//! Normalized-cuts quantities of a user-supplied affinity (or features)
//! and partition.

use std::path::Path;

use matbp::linalg::io::read_csv;
use matbp::linalg::RealMatrix;
use matbp::ncuts::{
    affinity_forward, j1_forward, j2_forward, ncuts_criterion, rank_gap_check, validate_indicator,
    AffinityModel,
};
use serde::Serialize;

use crate::error::CliError;

pub enum AffinitySource<'a> {
    Affinity(&'a Path),
    Features {
        features: &'a Path,
        lambda: Option<&'a Path>,
    },
}

/// Values that are undefined for the input (e.g. a zero-degree pixel) are
/// `null`, with the reason in `notes`.
#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub pixels: usize,
    pub k: usize,
    pub criterion: Option<f64>,
    pub j1: Option<f64>,
    pub j2: Option<f64>,
    pub rank_w: usize,
    pub rank_target: usize,
    pub lemma_applies: bool,
    pub lemma_holds: bool,
    pub notes: Vec<String>,
}

fn load(path: &Path) -> Result<RealMatrix, CliError> {
    read_csv(path).map_err(|e| match e {
        matbp::Error::Io(m) => CliError::Io {
            path: path.display().to_string(),
            message: m,
        },
        other => CliError::input(path.display().to_string(), other),
    })
}

pub fn affinity(source: &AffinitySource) -> Result<RealMatrix, CliError> {
    match source {
        AffinitySource::Affinity(p) => load(p),
        AffinitySource::Features { features, lambda } => {
            let f = load(features)?;
            let lambda = match lambda {
                Some(p) => load(p)?,
                None => RealMatrix::identity(f.cols()),
            };
            let model =
                AffinityModel::new(lambda, false).map_err(|e| CliError::input("lambda", e))?;
            affinity_forward(&f, &model).map_err(|e| CliError::input("affinity", e))
        }
    }
}

pub fn evaluate(w: &RealMatrix, e: &RealMatrix) -> Result<EvalSummary, CliError> {
    if !w.is_square() || w.rows() != e.rows() {
        return Err(CliError::input(
            "eval",
            matbp::Error::Shape {
                op: "eval",
                detail: format!(
                    "W is {}x{}, E is {}x{}",
                    w.rows(),
                    w.cols(),
                    e.rows(),
                    e.cols()
                ),
            },
        ));
    }
    validate_indicator(e).map_err(|err| CliError::input("indicator", err))?;
    let gap = rank_gap_check(w, &e.matmul_t(e)).map_err(|err| CliError::input("rank", err))?;
    let mut notes = Vec::new();
    let mut keep = |name: &str, r: matbp::Result<f64>| match r {
        Ok(v) => Some(v),
        Err(err) => {
            notes.push(format!("{name}: {err}"));
            None
        }
    };
    let criterion = keep("criterion", ncuts_criterion(w, e));
    let j1 = keep("j1", j1_forward(w, e).map(|r| r.0));
    let j2 = keep("j2", j2_forward(w, e).map(|r| r.0));
    Ok(EvalSummary {
        pixels: w.rows(),
        k: e.cols(),
        criterion,
        j1,
        j2,
        rank_w: gap.rank_a,
        rank_target: gap.rank_b,
        lemma_applies: gap.applies,
        lemma_holds: gap.holds,
        notes,
    })
}

pub fn run(source: &AffinitySource, indicator: &Path) -> Result<EvalSummary, CliError> {
    let w = affinity(source)?;
    let e = load(indicator)?;
    evaluate(&w, &e)
}
