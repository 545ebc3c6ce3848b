//! Every operation with a backward pass, each paired with a seeded sampler
//! and a scalar loss around the sampled point.
//!
//! Losses on layer outputs are `colon(M, y) + ½‖y‖²_F` with a random `M`,
//! which has curvature even when the layer is linear.

use rand::Rng;

use crate::error::Result;
use crate::linalg::{eig_sym, svd_full, RealMatrix};
use crate::ncuts::{
    affinity_backward, affinity_forward, indicator_from_labels, j1_backward, j1_forward,
    j2_backward, j2_forward, projector_backward, projector_forward, AffinityModel,
};
use crate::netgraph::{
    AffinityLayer, Alignment, AlignmentLoss, DeepO2pLayer, Flatten, IdentityLoss, Layer, Linear,
    LogisticLoss, Loss, Pipeline, Rectifier, SquaredError,
};
use crate::random::{gaussian, orthonormal, seeded, symmetric_low_rank, uniform, SeededRng};
use crate::spectral::{
    deep_o2p, deep_o2p_backward, deep_o2p_forward, eig_layer_backward, matfun_eig_backward,
    matfun_eig_forward, matfun_svd_backward, matfun_svd_forward, svd_layer_backward, GapPolicy,
    MatrixFunctionSpec, O2pPath,
};

/// How the sampled point may be perturbed.
pub enum Perturbation {
    /// Every entry independently.
    Entrywise,
    /// Symmetric perturbations of a symmetric point.
    Symmetric,
    /// Rank-preserving curves `(I + tG) X (I + tG)ᵀ`, one per `G`.
    Congruence(Vec<RealMatrix>),
}

pub type LossFn = Box<dyn Fn(&RealMatrix) -> Result<f64> + Send + Sync>;

/// A sampled point, the scalar loss around it, and the analytic gradient.
pub struct GradProbe {
    pub point: RealMatrix,
    pub loss: LossFn,
    pub gradient: RealMatrix,
    pub perturbation: Perturbation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tolerance {
    /// `10⁻⁵`, for losses on factor entries and layer outputs.
    Element,
    /// `10⁻⁴`, for objectives composing two pseudoinverses.
    Projector,
}

impl Tolerance {
    pub fn value(self) -> f64 {
        match self {
            Tolerance::Element => 1e-5,
            Tolerance::Projector => 1e-4,
        }
    }
}

pub struct RegisteredOp {
    pub name: &'static str,
    pub family: &'static str,
    pub tolerance: Tolerance,
    pub build: fn(seed: u64, gap_floor: f64) -> Result<GradProbe>,
}

const CONGRUENCE_DIRECTIONS: usize = 12;

fn op(
    name: &'static str,
    family: &'static str,
    tolerance: Tolerance,
    build: fn(u64, f64) -> Result<GradProbe>,
) -> RegisteredOp {
    RegisteredOp {
        name,
        family,
        tolerance,
        build,
    }
}

pub fn registry() -> Vec<RegisteredOp> {
    use Tolerance::{Element, Projector};
    vec![
        op("svd_layer/sigma_max", "svd", Element, svd_sigma_max),
        op("svd_layer/right_vectors", "svd", Element, svd_right_vectors),
        op("svd_layer/left_vectors", "svd", Element, svd_left_vectors),
        op(
            "eig_layer/values_vectors",
            "eig",
            Element,
            eig_values_vectors,
        ),
        op(
            "matfun_svd/trace_log",
            "matfun",
            Element,
            matfun_svd_trace_log,
        ),
        op(
            "matfun_eig/log_colon",
            "matfun",
            Element,
            matfun_eig_log_colon,
        ),
        op("deep_o2p/svd", "o2p", Element, o2p_svd),
        op("deep_o2p/eig", "o2p", Element, o2p_eig),
        op("projector/colon", "ncuts", Projector, projector_colon),
        op("ncuts/j1", "ncuts", Projector, ncuts_j1),
        op("ncuts/j2", "ncuts", Projector, ncuts_j2),
        op(
            "affinity/j2_features",
            "ncuts",
            Element,
            affinity_j2_features,
        ),
        op(
            "affinity/j1_features",
            "ncuts",
            Projector,
            affinity_j1_features,
        ),
        op("affinity/j1_lambda", "ncuts", Projector, affinity_j1_lambda),
        op("netgraph/linear_input", "netgraph", Element, linear_input),
        op("netgraph/linear_weight", "netgraph", Element, linear_weight),
        op("netgraph/linear_bias", "netgraph", Element, linear_bias),
        op("netgraph/rectifier", "netgraph", Element, rectifier),
        op("netgraph/flatten", "netgraph", Element, flatten),
        op("netgraph/deep_o2p_svd", "netgraph", Element, o2p_layer_svd),
        op("netgraph/deep_o2p_eig", "netgraph", Element, o2p_layer_eig),
        op(
            "netgraph/affinity_input",
            "netgraph",
            Element,
            affinity_layer_input,
        ),
        op(
            "netgraph/affinity_lambda",
            "netgraph",
            Element,
            affinity_layer_lambda,
        ),
        op("netgraph/identity_loss", "netgraph", Element, identity_loss),
        op("netgraph/logistic_loss", "netgraph", Element, logistic_loss),
        op("netgraph/squared_error", "netgraph", Element, squared_error),
        op("netgraph/alignment_j1", "netgraph", Projector, alignment_j1),
        op("netgraph/alignment_j2", "netgraph", Projector, alignment_j2),
        op("netgraph/pipeline_o2p", "netgraph", Element, pipeline_o2p),
    ]
}

/// Descending positive values whose consecutive gaps are at least
/// `max(gap_floor, 0.5)`.
fn spread(rng: &mut SeededRng, n: usize, gap_floor: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    let mut acc = 0.5 + rng.random_range(0.0..0.5);
    for i in (0..n).rev() {
        v[i] = acc;
        acc += gap_floor.max(0.5 + rng.random_range(0.0..0.5));
    }
    v
}

fn with_sigma(rng: &mut SeededRng, m: usize, n: usize, gap_floor: f64) -> RealMatrix {
    let sigma = spread(rng, n, gap_floor);
    let u = orthonormal(rng, m, n);
    let v = orthonormal(rng, n, n);
    u.scale_cols(&sigma).matmul_t(&v)
}

fn with_eigs(rng: &mut SeededRng, n: usize, gap_floor: f64, shift: f64) -> RealMatrix {
    let q: Vec<f64> = spread(rng, n, gap_floor)
        .iter()
        .map(|x| x - shift)
        .collect();
    let u = orthonormal(rng, n, n);
    u.scale_cols(&q).matmul_t(&u).sym()
}

fn svd_backward(
    x: &RealMatrix,
    g_u: Option<RealMatrix>,
    g_s: Option<RealMatrix>,
    g_v: Option<RealMatrix>,
) -> Result<RealMatrix> {
    let (m, n) = x.shape();
    let f = svd_full(x)?;
    svd_layer_backward(
        x,
        &f,
        &g_u.unwrap_or_else(|| RealMatrix::zeros(m, m)),
        &g_s.unwrap_or_else(|| RealMatrix::zeros(m, n)),
        &g_v.unwrap_or_else(|| RealMatrix::zeros(n, n)),
        &GapPolicy::default(),
    )
}

fn svd_sigma_max(seed: u64, gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let x = with_sigma(&mut rng, 5, 3, gap_floor);
    let gradient = svd_backward(
        &x,
        None,
        Some(RealMatrix::rect_diag(5, 3, &[1.0, 0.0, 0.0])),
        None,
    )?;
    Ok(GradProbe {
        point: x,
        loss: Box::new(|m| Ok(svd_full(m)?.singular_values()[0])),
        gradient,
        perturbation: Perturbation::Entrywise,
    })
}

fn svd_right_vectors(seed: u64, gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let x = with_sigma(&mut rng, 6, 4, gap_floor);
    let mv = gaussian(&mut rng, 4, 4);
    let ms = gaussian(&mut rng, 6, 4).diag_part();
    let gradient = svd_backward(&x, None, Some(ms.clone()), Some(mv.clone()))?;
    Ok(GradProbe {
        point: x,
        loss: Box::new(move |m| {
            let f = svd_full(m)?;
            Ok(mv.colon(&f.v) + ms.colon(&f.s))
        }),
        gradient,
        perturbation: Perturbation::Entrywise,
    })
}

fn svd_left_vectors(seed: u64, gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let (m, n) = (6, 3);
    let x = with_sigma(&mut rng, m, n, gap_floor);
    let mu = gaussian(&mut rng, m, n);
    let mm = gaussian(&mut rng, m, m);
    let f = svd_full(&x)?;
    // colon(Mu, U₁) + colon(Mm, U₂U₂ᵀ)
    let g_u = mu.hstack(&(&mm + &mm.transpose()).matmul(&f.u.columns(n..m)));
    let gradient = svd_backward(&x, Some(g_u), None, None)?;
    Ok(GradProbe {
        point: x,
        loss: Box::new(move |a| {
            let f = svd_full(a)?;
            let u2 = f.u.columns(n..m);
            Ok(mu.colon(&f.u1()) + mm.colon(&u2.matmul_t(&u2)))
        }),
        gradient,
        perturbation: Perturbation::Entrywise,
    })
}

fn eig_values_vectors(seed: u64, gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let z = with_eigs(&mut rng, 5, gap_floor, 2.0);
    let mq = gaussian(&mut rng, 5, 5).diag_part();
    let mu = gaussian(&mut rng, 5, 5);
    let f = eig_sym(&z)?;
    let gradient = eig_layer_backward(&z, &f, &mu, &mq, &GapPolicy::default())?;
    Ok(GradProbe {
        point: z,
        loss: Box::new(move |m| {
            let f = eig_sym(m)?;
            Ok(mq.colon(&RealMatrix::diag_from(&f.eigenvalues())) + mu.colon(&f.u))
        }),
        gradient,
        perturbation: Perturbation::Symmetric,
    })
}

fn matfun_svd_trace_log(seed: u64, gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let spec = MatrixFunctionSpec::default();
    let x = with_sigma(&mut rng, 5, 3, gap_floor);
    let f = svd_full(&x)?;
    let (g_v, g_s) = matfun_svd_backward(&f, &spec, &RealMatrix::identity(3))?;
    let gradient = svd_backward(&x, None, Some(g_s), Some(g_v))?;
    Ok(GradProbe {
        point: x,
        loss: Box::new(move |m| Ok(matfun_svd_forward(&svd_full(m)?, &spec)?.trace())),
        gradient,
        perturbation: Perturbation::Entrywise,
    })
}

fn matfun_eig_log_colon(seed: u64, gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let spec = MatrixFunctionSpec::default();
    let z = with_eigs(&mut rng, 4, gap_floor, 0.0);
    let mc = gaussian(&mut rng, 4, 4);
    let f = eig_sym(&z)?;
    let (g_u, g_q) = matfun_eig_backward(&f, &spec, &mc)?;
    let gradient = eig_layer_backward(&z, &f, &g_u, &g_q, &GapPolicy::default())?;
    Ok(GradProbe {
        point: z,
        loss: Box::new(move |m| Ok(mc.colon(&matfun_eig_forward(&eig_sym(m)?, &spec)?))),
        gradient,
        perturbation: Perturbation::Symmetric,
    })
}

fn o2p_probe(seed: u64, gap_floor: f64, path: O2pPath) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let spec = MatrixFunctionSpec::default();
    let f = with_sigma(&mut rng, 8, 4, gap_floor);
    let mc = gaussian(&mut rng, 4, 4);
    let (_, cache) = deep_o2p_forward(&f, &spec, path)?;
    let gradient = deep_o2p_backward(&f, &cache, &spec, &mc, &GapPolicy::default())?;
    Ok(GradProbe {
        point: f,
        loss: Box::new(move |m| Ok(mc.colon(&deep_o2p(m, &spec, path)?))),
        gradient,
        perturbation: Perturbation::Entrywise,
    })
}

fn o2p_svd(seed: u64, gap_floor: f64) -> Result<GradProbe> {
    o2p_probe(seed, gap_floor, O2pPath::Svd)
}

fn o2p_eig(seed: u64, gap_floor: f64) -> Result<GradProbe> {
    o2p_probe(seed, gap_floor, O2pPath::Eig)
}

fn congruence_dirs(rng: &mut SeededRng, n: usize) -> Perturbation {
    Perturbation::Congruence(
        (0..CONGRUENCE_DIRECTIONS)
            .map(|_| gaussian(rng, n, n))
            .collect(),
    )
}

fn projector_colon(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let a = symmetric_low_rank(&mut rng, 5, 2, true);
    let mp = gaussian(&mut rng, 5, 5);
    let pi = projector_forward(&a)?;
    let gradient = projector_backward(&a, &pi, &mp)?;
    let perturbation = congruence_dirs(&mut rng, 5);
    Ok(GradProbe {
        point: a,
        loss: Box::new(move |m| Ok(mp.colon(&projector_forward(m)?))),
        gradient,
        perturbation,
    })
}

fn random_labels(rng: &mut SeededRng, m: usize, k: usize) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..m).map(|i| i % k).collect();
    for i in (1..m).rev() {
        labels.swap(i, rng.random_range(0..=i));
    }
    labels
}

/// Positive `F` (uniform in (0.1, 1)), SPD `Λ` with positive entries, and
/// a random balanced indicator.
fn positive_instance(
    rng: &mut SeededRng,
    m: usize,
    d: usize,
    k: usize,
) -> Result<(RealMatrix, AffinityModel, RealMatrix)> {
    let f = uniform(rng, m, d, 0.1, 1.0);
    let a = uniform(rng, d, d, 0.0, 1.0);
    let lambda = (&a.matmul_t(&a) + &RealMatrix::identity(d)).sym();
    let model = AffinityModel::new(lambda, true)?;
    let e = indicator_from_labels(&random_labels(rng, m, k), k)?;
    Ok((f, model, e))
}

fn ncuts_j1(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let (f, model, e) = positive_instance(&mut rng, 8, 3, 2)?;
    let w = affinity_forward(&f, &model)?;
    let gradient = j1_backward(&j1_forward(&w, &e)?.1)?;
    let perturbation = congruence_dirs(&mut rng, 8);
    Ok(GradProbe {
        point: w,
        loss: Box::new(move |m| Ok(j1_forward(m, &e)?.0)),
        gradient,
        perturbation,
    })
}

fn ncuts_j2(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let (f, model, e) = positive_instance(&mut rng, 8, 3, 3)?;
    let w = affinity_forward(&f, &model)?;
    let gradient = j2_backward(&j2_forward(&w, &e)?.1)?;
    let perturbation = congruence_dirs(&mut rng, 8);
    Ok(GradProbe {
        point: w,
        loss: Box::new(move |m| Ok(j2_forward(m, &e)?.0)),
        gradient,
        perturbation,
    })
}

fn affinity_j2_features(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let (f, model, e) = positive_instance(&mut rng, 9, 3, 3)?;
    let w = affinity_forward(&f, &model)?;
    let g_w = j2_backward(&j2_forward(&w, &e)?.1)?;
    let (_, gradient) = affinity_backward(&f, &model, &g_w)?;
    Ok(GradProbe {
        point: f,
        loss: Box::new(move |x| Ok(j2_forward(&affinity_forward(x, &model)?, &e)?.0)),
        gradient,
        perturbation: Perturbation::Entrywise,
    })
}

fn affinity_j1_features(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let (f, model, e) = positive_instance(&mut rng, 8, 3, 2)?;
    let w = affinity_forward(&f, &model)?;
    let g_w = j1_backward(&j1_forward(&w, &e)?.1)?;
    let (_, gradient) = affinity_backward(&f, &model, &g_w)?;
    Ok(GradProbe {
        point: f,
        loss: Box::new(move |x| Ok(j1_forward(&affinity_forward(x, &model)?, &e)?.0)),
        gradient,
        perturbation: Perturbation::Entrywise,
    })
}

fn affinity_j1_lambda(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let (f, model, e) = positive_instance(&mut rng, 8, 3, 2)?;
    let w = affinity_forward(&f, &model)?;
    let g_w = j1_backward(&j1_forward(&w, &e)?.1)?;
    let (gradient, _) = affinity_backward(&f, &model, &g_w)?;
    Ok(GradProbe {
        point: model.lambda.clone(),
        loss: Box::new(move |l| {
            let m = AffinityModel::new(l.clone(), false)?;
            Ok(j1_forward(&affinity_forward(&f, &m)?, &e)?.0)
        }),
        gradient,
        perturbation: Perturbation::Symmetric,
    })
}

/// Probe of `x ↦ colon(M, layer(x)) + ½‖layer(x)‖²`.
fn layer_input_probe(
    layer: Box<dyn Layer>,
    x: RealMatrix,
    rng: &mut SeededRng,
    perturbation: Perturbation,
) -> Result<GradProbe> {
    let (y, cache) = layer.forward(&x)?;
    let mm = gaussian(rng, y.rows(), y.cols());
    let (gradient, _) = layer.backward(&cache, &(&mm + &y))?;
    Ok(GradProbe {
        point: x,
        loss: Box::new(move |v| {
            let y = layer.forward(v)?.0;
            Ok(mm.colon(&y) + 0.5 * y.frobenius_norm().powi(2))
        }),
        gradient,
        perturbation,
    })
}

/// Builds a layer from one parameter value and the full parameter list.
type LayerFactory = fn(&RealMatrix, &[RealMatrix]) -> Result<Box<dyn Layer>>;

/// Probe of `θ ↦ colon(M, layer_θ(x)) + ½‖layer_θ(x)‖²` for parameter
/// `index`.
fn layer_param_probe(
    make: LayerFactory,
    params: Vec<RealMatrix>,
    index: usize,
    x: RealMatrix,
    rng: &mut SeededRng,
    perturbation: Perturbation,
) -> Result<GradProbe> {
    let layer = make(&params[index], &params)?;
    let (y, cache) = layer.forward(&x)?;
    let mm = gaussian(rng, y.rows(), y.cols());
    let (_, grads) = layer.backward(&cache, &(&mm + &y))?;
    let point = params[index].clone();
    Ok(GradProbe {
        point,
        loss: Box::new(move |theta| {
            let y = make(theta, &params)?.forward(&x)?.0;
            Ok(mm.colon(&y) + 0.5 * y.frobenius_norm().powi(2))
        }),
        gradient: grads[index].clone(),
        perturbation,
    })
}

fn linear_input(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let layer = Linear::new(gaussian(&mut rng, 4, 3), gaussian(&mut rng, 1, 3))?;
    let x = gaussian(&mut rng, 5, 4);
    layer_input_probe(Box::new(layer), x, &mut rng, Perturbation::Entrywise)
}

fn linear_weight(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let params = vec![gaussian(&mut rng, 4, 3), gaussian(&mut rng, 1, 3)];
    let x = gaussian(&mut rng, 5, 4);
    let make: LayerFactory = |w, p| Ok(Box::new(Linear::new(w.clone(), p[1].clone())?));
    layer_param_probe(make, params, 0, x, &mut rng, Perturbation::Entrywise)
}

fn linear_bias(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let params = vec![gaussian(&mut rng, 4, 3), gaussian(&mut rng, 1, 3)];
    let x = gaussian(&mut rng, 5, 4);
    let make: LayerFactory = |b, p| Ok(Box::new(Linear::new(p[0].clone(), b.clone())?));
    layer_param_probe(make, params, 1, x, &mut rng, Perturbation::Entrywise)
}

fn rectifier(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    // Keep entries away from the kink at 0.
    let x = gaussian(&mut rng, 5, 4).map(|v| {
        if v.abs() < 0.1 {
            v.signum() * 0.1 + v
        } else {
            v
        }
    });
    layer_input_probe(Box::new(Rectifier), x, &mut rng, Perturbation::Entrywise)
}

fn flatten(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let x = gaussian(&mut rng, 3, 4);
    layer_input_probe(Box::new(Flatten), x, &mut rng, Perturbation::Entrywise)
}

fn o2p_layer(seed: u64, gap_floor: f64, path: O2pPath) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let x = with_sigma(&mut rng, 7, 3, gap_floor);
    let layer = DeepO2pLayer::new(MatrixFunctionSpec::default(), path);
    layer_input_probe(Box::new(layer), x, &mut rng, Perturbation::Entrywise)
}

fn o2p_layer_svd(seed: u64, gap_floor: f64) -> Result<GradProbe> {
    o2p_layer(seed, gap_floor, O2pPath::Svd)
}

fn o2p_layer_eig(seed: u64, gap_floor: f64) -> Result<GradProbe> {
    o2p_layer(seed, gap_floor, O2pPath::Eig)
}

fn affinity_layer_input(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let (f, model, _) = positive_instance(&mut rng, 6, 3, 2)?;
    layer_input_probe(
        Box::new(AffinityLayer::new(model)),
        f,
        &mut rng,
        Perturbation::Entrywise,
    )
}

fn affinity_layer_lambda(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let (f, model, _) = positive_instance(&mut rng, 6, 3, 2)?;
    let make: LayerFactory = |l, _| {
        Ok(Box::new(AffinityLayer::new(AffinityModel::new(
            l.clone(),
            false,
        )?)))
    };
    layer_param_probe(
        make,
        vec![model.lambda],
        0,
        f,
        &mut rng,
        Perturbation::Symmetric,
    )
}

fn loss_probe(
    loss: Box<dyn Loss>,
    x: RealMatrix,
    target: RealMatrix,
    perturbation: Perturbation,
) -> Result<GradProbe> {
    let (_, cache) = loss.forward(&x, &target)?;
    let gradient = loss.backward(&cache)?;
    Ok(GradProbe {
        point: x,
        loss: Box::new(move |v| Ok(loss.forward(v, &target)?.0)),
        gradient,
        perturbation,
    })
}

fn identity_loss(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let x = gaussian(&mut rng, 1, 1);
    loss_probe(
        Box::new(IdentityLoss),
        x,
        RealMatrix::zeros(1, 1),
        Perturbation::Entrywise,
    )
}

fn logistic_loss(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let x = gaussian(&mut rng, 1, 1).scale(2.0);
    let y = RealMatrix::from_fn(1, 1, |_, _| (seed % 2) as f64);
    loss_probe(Box::new(LogisticLoss), x, y, Perturbation::Entrywise)
}

fn squared_error(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let x = gaussian(&mut rng, 3, 4);
    let t = gaussian(&mut rng, 3, 4);
    loss_probe(Box::new(SquaredError), x, t, Perturbation::Entrywise)
}

fn alignment(seed: u64, objective: Alignment, k: usize) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let (f, model, e) = positive_instance(&mut rng, 8, 3, k)?;
    let w = affinity_forward(&f, &model)?;
    let perturbation = congruence_dirs(&mut rng, 8);
    loss_probe(Box::new(AlignmentLoss { objective }), w, e, perturbation)
}

fn alignment_j1(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    alignment(seed, Alignment::J1, 2)
}

fn alignment_j2(seed: u64, _gap_floor: f64) -> Result<GradProbe> {
    alignment(seed, Alignment::J2, 3)
}

fn pipeline_o2p(seed: u64, gap_floor: f64) -> Result<GradProbe> {
    let mut rng = seeded(seed);
    let x = with_sigma(&mut rng, 6, 3, gap_floor);
    let w = gaussian(&mut rng, 9, 1).scale(0.3);
    let b = gaussian(&mut rng, 1, 1);
    let p = Pipeline::new(
        vec![
            Box::new(DeepO2pLayer::new(
                MatrixFunctionSpec::default(),
                O2pPath::Svd,
            )),
            Box::new(Flatten),
            Box::new(Linear::new(w, b)?),
        ],
        Box::new(LogisticLoss),
    );
    let y = RealMatrix::from_fn(1, 1, |_, _| (seed % 2) as f64);
    let gradient = p.backward(&p.forward(&x, &y)?)?.input;
    Ok(GradProbe {
        point: x,
        loss: Box::new(move |v| Ok(p.forward(v, &y)?.loss)),
        gradient,
        perturbation: Perturbation::Entrywise,
    })
}
