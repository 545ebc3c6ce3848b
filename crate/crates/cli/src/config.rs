//! Flat `key=value` demo configuration. Blank lines and lines starting
//! with `#` are ignored; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    O2p,
    Ncuts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralPath {
    Svd,
    Eig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemoConfig {
    pub task: Task,
    /// o2p: rows per feature matrix. ncuts: pixels per image (a square).
    pub m: usize,
    /// Input channels.
    pub d: usize,
    /// o2p: width of the learned projection. ncuts: number of regions.
    pub k: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// o2p only: which factorization the pooling layer differentiates.
    pub path: SpectralPath,
    /// o2p: feature matrices per split. ncuts: images per split.
    pub train_samples: usize,
    pub test_samples: usize,
}

impl DemoConfig {
    pub fn default_for(task: Task) -> Self {
        match task {
            Task::O2p => Self {
                task,
                m: 32,
                d: 8,
                k: 3,
                epochs: 30,
                learning_rate: O2P_LEARNING_RATE,
                epsilon: 1e-3,
                seed: 0,
                output_dir: PathBuf::from("out"),
                path: SpectralPath::Svd,
                train_samples: 200,
                test_samples: 200,
            },
            Task::Ncuts => Self {
                task,
                m: 256,
                d: 8,
                k: 3,
                epochs: 30,
                learning_rate: NCUTS_LEARNING_RATE,
                epsilon: 1e-3,
                seed: 0,
                output_dir: PathBuf::from("out"),
                path: SpectralPath::Svd,
                train_samples: 8,
                test_samples: 4,
            },
        }
    }

    /// Parses `text` on top of the defaults for `task`. A `task` key, if
    /// present, must agree with `task`.
    pub fn parse(text: &str, task: Task) -> Result<Self, CliError> {
        let mut cfg = Self::default_for(task);
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CliError::Config {
                line: n + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let int = || {
                value
                    .parse::<usize>()
                    .map_err(|e| err(format!("{key}: {e}")))
            };
            let real = || value.parse::<f64>().map_err(|e| err(format!("{key}: {e}")));
            match key {
                "task" => {
                    let t = match value {
                        "o2p" => Task::O2p,
                        "ncuts" => Task::Ncuts,
                        _ => return Err(err(format!("unknown task {value:?}"))),
                    };
                    if t != task {
                        return Err(err(format!("config is for task {value}")));
                    }
                }
                "m" => cfg.m = int()?,
                "d" => cfg.d = int()?,
                "k" => cfg.k = int()?,
                "epochs" => cfg.epochs = int()?,
                "learning_rate" => cfg.learning_rate = real()?,
                "epsilon" => cfg.epsilon = real()?,
                "seed" => cfg.seed = value.parse().map_err(|e| err(format!("seed: {e}")))?,
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "path" => {
                    cfg.path = match value {
                        "svd" => SpectralPath::Svd,
                        "eig" => SpectralPath::Eig,
                        _ => return Err(err(format!("unknown path {value:?}"))),
                    }
                }
                "train_samples" => cfg.train_samples = int()?,
                "test_samples" => cfg.test_samples = int()?,
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, task: Task) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, task)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let err = |message: String| Err(CliError::Config { line: 0, message });
        if self.m == 0
            || self.d == 0
            || self.k == 0
            || self.train_samples == 0
            || self.test_samples == 0
        {
            return err("m, d, k, train_samples and test_samples must be positive".into());
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return err(format!(
                "epsilon must be finite and nonnegative, got {}",
                self.epsilon
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return err(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.task == Task::Ncuts {
            let side = image_side(self.m);
            if side.is_none() {
                return err(format!(
                    "ncuts needs a square image, m = {} is not a square",
                    self.m
                ));
            }
            if self.k > self.m {
                return err(format!("k = {} exceeds the pixel count {}", self.k, self.m));
            }
        }
        Ok(())
    }
}

pub(crate) fn image_side(m: usize) -> Option<usize> {
    let s = (m as f64).sqrt().round() as usize;
    (s * s == m).then_some(s)
}

/// Step size of the o2p demo.
pub const O2P_LEARNING_RATE: f64 = 1e-3;
/// Step size of the ncuts demo.
pub const NCUTS_LEARNING_RATE: f64 = 1e-1;
