use super::{cache_ref, Cache, Layer};
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::ncuts::{affinity_backward, affinity_forward, AffinityModel};
use crate::spectral::{
    deep_o2p_backward, deep_o2p_forward, GapPolicy, MatrixFunctionSpec, O2pCache, O2pPath,
};

/// `F ↦ FW + 𝟙bᵀ`, `W` is `d_in × d_out`, `b` is stored as `1 × d_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: RealMatrix,
    pub bias: RealMatrix,
}

impl Linear {
    pub fn new(weight: RealMatrix, bias: RealMatrix) -> Result<Self> {
        if bias.shape() != (1, weight.cols()) {
            return Err(Error::shape(
                "Linear",
                format!(
                    "bias is {}x{}, expected 1x{}",
                    bias.rows(),
                    bias.cols(),
                    weight.cols()
                ),
            ));
        }
        Ok(Self { weight, bias })
    }

    pub fn without_bias(weight: RealMatrix) -> Self {
        let bias = RealMatrix::zeros(1, weight.cols());
        Self { weight, bias }
    }
}

impl Layer for Linear {
    fn name(&self) -> &str {
        "linear"
    }

    fn forward(&self, x: &RealMatrix) -> Result<(RealMatrix, Cache)> {
        if x.cols() != self.weight.rows() {
            return Err(Error::shape(
                "linear",
                format!(
                    "input has {} columns, weight has {} rows",
                    x.cols(),
                    self.weight.rows()
                ),
            ));
        }
        let b = self.bias.row(0);
        let y = RealMatrix::from_fn(x.rows(), self.weight.cols(), |_, j| b[j]);
        let y = &x.matmul(&self.weight) + &y;
        Ok((y, Box::new(x.clone())))
    }

    fn backward(&self, cache: &Cache, g: &RealMatrix) -> Result<(RealMatrix, Vec<RealMatrix>)> {
        let x: &RealMatrix = cache_ref(cache, "linear")?;
        if g.shape() != (x.rows(), self.weight.cols()) {
            return Err(Error::shape(
                "linear",
                "output gradient does not match output",
            ));
        }
        let g_x = g.matmul_t(&self.weight);
        let g_w = x.t_matmul(g);
        let sums: Vec<f64> = (0..g.cols()).map(|j| g.column(j).iter().sum()).collect();
        let g_b = RealMatrix::from_fn(1, g.cols(), |_, j| sums[j]);
        Ok((g_x, vec![g_w, g_b]))
    }

    fn parameters(&self) -> Vec<&RealMatrix> {
        vec![&self.weight, &self.bias]
    }

    fn parameters_mut(&mut self) -> Vec<&mut RealMatrix> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Entrywise `max(0, x)`; the derivative at 0 is taken as 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rectifier;

impl Layer for Rectifier {
    fn name(&self) -> &str {
        "rectifier"
    }

    fn forward(&self, x: &RealMatrix) -> Result<(RealMatrix, Cache)> {
        Ok((x.map(|v| v.max(0.0)), Box::new(x.clone())))
    }

    fn backward(&self, cache: &Cache, g: &RealMatrix) -> Result<(RealMatrix, Vec<RealMatrix>)> {
        let x: &RealMatrix = cache_ref(cache, "rectifier")?;
        if g.shape() != x.shape() {
            return Err(Error::shape(
                "rectifier",
                "output gradient does not match output",
            ));
        }
        Ok((
            x.zip_map(g, |v, d| if v > 0.0 { d } else { 0.0 }),
            Vec::new(),
        ))
    }
}

/// Row-major reshape to a single row.
#[derive(Debug, Clone, Copy, Default)]
pub struct Flatten;

impl Layer for Flatten {
    fn name(&self) -> &str {
        "flatten"
    }

    fn forward(&self, x: &RealMatrix) -> Result<(RealMatrix, Cache)> {
        Ok((x.reshape(1, x.rows() * x.cols()), Box::new(x.shape())))
    }

    fn backward(&self, cache: &Cache, g: &RealMatrix) -> Result<(RealMatrix, Vec<RealMatrix>)> {
        let &(r, c): &(usize, usize) = cache_ref(cache, "flatten")?;
        if g.shape() != (1, r * c) {
            return Err(Error::shape(
                "flatten",
                "output gradient does not match output",
            ));
        }
        Ok((g.reshape(r, c), Vec::new()))
    }
}

/// `F ↦ g(FᵀF + εI)`.
#[derive(Clone)]
pub struct DeepO2pLayer {
    pub spec: MatrixFunctionSpec,
    pub path: O2pPath,
    pub policy: GapPolicy,
}

impl DeepO2pLayer {
    pub fn new(spec: MatrixFunctionSpec, path: O2pPath) -> Self {
        Self {
            spec,
            path,
            policy: GapPolicy::default(),
        }
    }
}

struct O2pState {
    input: RealMatrix,
    factors: O2pCache,
}

impl Layer for DeepO2pLayer {
    fn name(&self) -> &str {
        "deep_o2p"
    }

    fn forward(&self, x: &RealMatrix) -> Result<(RealMatrix, Cache)> {
        let (c, factors) = deep_o2p_forward(x, &self.spec, self.path)?;
        Ok((
            c,
            Box::new(O2pState {
                input: x.clone(),
                factors,
            }),
        ))
    }

    fn backward(&self, cache: &Cache, g: &RealMatrix) -> Result<(RealMatrix, Vec<RealMatrix>)> {
        let s: &O2pState = cache_ref(cache, "deep_o2p")?;
        let g_x = deep_o2p_backward(&s.input, &s.factors, &self.spec, g, &self.policy)?;
        Ok((g_x, Vec::new()))
    }
}

/// `F ↦ W = FΛFᵀ`. A frozen layer exposes no parameters, so `Λ` stays
/// fixed during training.
#[derive(Debug, Clone)]
pub struct AffinityLayer {
    pub model: AffinityModel,
    pub trainable: bool,
}

impl AffinityLayer {
    pub fn new(model: AffinityModel) -> Self {
        Self {
            model,
            trainable: true,
        }
    }

    pub fn frozen(model: AffinityModel) -> Self {
        Self {
            model,
            trainable: false,
        }
    }
}

impl Layer for AffinityLayer {
    fn name(&self) -> &str {
        "affinity"
    }

    fn forward(&self, x: &RealMatrix) -> Result<(RealMatrix, Cache)> {
        Ok((affinity_forward(x, &self.model)?, Box::new(x.clone())))
    }

    fn backward(&self, cache: &Cache, g: &RealMatrix) -> Result<(RealMatrix, Vec<RealMatrix>)> {
        let x: &RealMatrix = cache_ref(cache, "affinity")?;
        let (g_lambda, g_f) = affinity_backward(x, &self.model, g)?;
        Ok((
            g_f,
            if self.trainable {
                vec![g_lambda]
            } else {
                Vec::new()
            },
        ))
    }

    fn parameters(&self) -> Vec<&RealMatrix> {
        if self.trainable {
            vec![&self.model.lambda]
        } else {
            Vec::new()
        }
    }

    fn parameters_mut(&mut self) -> Vec<&mut RealMatrix> {
        if self.trainable {
            vec![&mut self.model.lambda]
        } else {
            Vec::new()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectifier_negative_input() {
        let x = RealMatrix::from_rows(&[&[-1.0, 2.0]]).unwrap();
        let (y, c) = Rectifier.forward(&x).unwrap();
        assert_eq!(y, RealMatrix::from_rows(&[&[0.0, 2.0]]).unwrap());
        let (g, _) = Rectifier
            .backward(&c, &RealMatrix::from_rows(&[&[5.0, 5.0]]).unwrap())
            .unwrap();
        assert_eq!(g, RealMatrix::from_rows(&[&[0.0, 5.0]]).unwrap());
    }

    #[test]
    fn foreign_cache_rejected() {
        let (_, c) = Rectifier.forward(&RealMatrix::identity(2)).unwrap();
        assert!(matches!(
            Flatten.backward(&c, &RealMatrix::zeros(1, 4)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn flatten_round_trip() {
        let x = RealMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let (y, c) = Flatten.forward(&x).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(Flatten.backward(&c, &y).unwrap().0, x);
    }
}
