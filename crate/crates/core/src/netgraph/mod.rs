//! Sequential layer composition with per-sample forward and backward
//! passes, terminal losses, and momentum SGD.
//!
//! A sample is a single matrix (for example the `m × d` local features of
//! one image) and its target is another matrix whose meaning the loss
//! defines.

mod layers;
mod losses;
mod train;

use std::any::Any;
use std::collections::BTreeMap;

pub use layers::{AffinityLayer, DeepO2pLayer, Flatten, Linear, Rectifier};
pub use losses::{Alignment, AlignmentLoss, IdentityLoss, LogisticLoss, SquaredError};
pub use train::{
    evaluate, sgd_train, sgd_train_observed, EpochRecord, Sample, SgdConfig, StepRecord,
    TrainingLog,
};

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;

/// State a forward pass hands to its own backward pass.
pub type Cache = Box<dyn Any + Send + Sync>;

pub(crate) fn cache_ref<'a, T: 'static>(cache: &'a Cache, layer: &str) -> Result<&'a T> {
    cache.downcast_ref::<T>().ok_or_else(|| {
        Error::Contract(format!(
            "{layer}: backward received a cache from another layer"
        ))
    })
}

pub trait Layer: Send + Sync {
    fn name(&self) -> &str;

    fn forward(&self, x: &RealMatrix) -> Result<(RealMatrix, Cache)>;

    /// Returns the input gradient and one gradient per parameter, in the
    /// order of [`Layer::parameters`].
    fn backward(&self, cache: &Cache, g_out: &RealMatrix) -> Result<(RealMatrix, Vec<RealMatrix>)>;

    fn parameters(&self) -> Vec<&RealMatrix> {
        Vec::new()
    }

    fn parameters_mut(&mut self) -> Vec<&mut RealMatrix> {
        Vec::new()
    }
}

pub trait Loss: Send + Sync {
    fn name(&self) -> &str;

    fn forward(&self, x: &RealMatrix, target: &RealMatrix) -> Result<(f64, Cache)>;

    /// `∂L/∂x` for the input of the matching forward.
    fn backward(&self, cache: &Cache) -> Result<RealMatrix>;

    /// Named scalars recorded in the training log.
    fn diagnostics(&self, _cache: &Cache) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }
}

/// Everything a forward pass produced.
pub struct ForwardTrace {
    pub loss: f64,
    /// Output of the last layer (the loss input).
    pub output: RealMatrix,
    caches: Vec<Cache>,
    loss_cache: Cache,
}

impl ForwardTrace {
    pub fn loss_cache(&self) -> &Cache {
        &self.loss_cache
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub input: RealMatrix,
    /// `params[l][p]` is the gradient of parameter `p` of layer `l`.
    pub params: Vec<Vec<RealMatrix>>,
}

pub struct Pipeline {
    pub layers: Vec<Box<dyn Layer>>,
    pub loss: Box<dyn Loss>,
}

impl Pipeline {
    pub fn new(layers: Vec<Box<dyn Layer>>, loss: Box<dyn Loss>) -> Self {
        Self { layers, loss }
    }

    /// Output of the last layer, without the loss.
    pub fn predict(&self, x: &RealMatrix) -> Result<RealMatrix> {
        let mut out = x.clone();
        for layer in &self.layers {
            out = layer.forward(&out)?.0;
        }
        Ok(out)
    }

    pub fn forward(&self, x: &RealMatrix, target: &RealMatrix) -> Result<ForwardTrace> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut out = x.clone();
        for layer in &self.layers {
            let (next, cache) = layer.forward(&out)?;
            caches.push(cache);
            out = next;
        }
        let (loss, loss_cache) = self.loss.forward(&out, target)?;
        Ok(ForwardTrace {
            loss,
            output: out,
            caches,
            loss_cache,
        })
    }

    pub fn backward(&self, trace: &ForwardTrace) -> Result<Gradients> {
        let g = self.loss.backward(&trace.loss_cache)?;
        self.backward_from_output(trace, &g)
    }

    /// Backward pass seeded with an arbitrary gradient at the last layer's
    /// output.
    pub fn backward_from_output(
        &self,
        trace: &ForwardTrace,
        g_output: &RealMatrix,
    ) -> Result<Gradients> {
        if trace.caches.len() != self.layers.len() {
            return Err(Error::Contract(format!(
                "trace holds {} caches for {} layers",
                trace.caches.len(),
                self.layers.len()
            )));
        }
        let mut g = g_output.clone();
        let mut params = Vec::with_capacity(self.layers.len());
        for (layer, cache) in self.layers.iter().zip(&trace.caches).rev() {
            let (g_in, g_params) = layer.backward(cache, &g)?;
            let expected = layer.parameters();
            if g_params.len() != expected.len()
                || g_params
                    .iter()
                    .zip(&expected)
                    .any(|(a, b)| a.shape() != b.shape())
            {
                return Err(Error::Contract(format!(
                    "{}: parameter gradients do not match parameter shapes",
                    layer.name()
                )));
            }
            params.push(g_params);
            g = g_in;
        }
        params.reverse();
        Ok(Gradients { input: g, params })
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.parameters().len()).sum()
    }
}
