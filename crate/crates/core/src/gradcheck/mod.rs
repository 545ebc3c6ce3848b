//! Finite-difference oracle for every analytic derivative in the crate.
//!
//! [`fd_grad`] is a plain central-difference gradient and knows nothing about
//! the layers it checks. [`check`] drives a registered operation over seeds
//! and turns the comparison into [`GradReport`]s.

mod registry;

pub use registry::{registry, GradProbe, Perturbation, RegisteredOp, Tolerance};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::random::{gaussian, seeded};

/// Denominator floor of [`relative_error`].
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdMode {
    /// Perturb each entry on its own.
    Entrywise,
    /// Perturb `(i, j)` and `(j, i)` together; returns the gradient
    /// restricted to symmetric directions, i.e. `sym(∇f)`.
    Symmetric,
}

/// Default step `10⁻⁶ · (1 + ‖X‖_F)`.
pub fn default_step(x: &RealMatrix) -> f64 {
    1e-6 * (1.0 + x.frobenius_norm())
}

/// Central-difference gradient of `f` at `x`.
pub fn fd_grad<F>(f: F, x: &RealMatrix, h: f64, mode: FdMode) -> Result<RealMatrix>
where
    F: Fn(&RealMatrix) -> Result<f64>,
{
    let (m, n) = x.shape();
    let mut out = RealMatrix::zeros(m, n);
    let probe = |row: usize, col: usize, dx: &RealMatrix| -> Result<f64> {
        let plus = f(&(x + dx)).map_err(|e| probe_err(row, col, e))?;
        let minus = f(&(x - dx)).map_err(|e| probe_err(row, col, e))?;
        Ok((plus - minus) / (2.0 * h))
    };
    match mode {
        FdMode::Entrywise => {
            for i in 0..m {
                for j in 0..n {
                    let dx = RealMatrix::zeros(m, n).with_entry(i, j, h);
                    out.set(i, j, probe(i, j, &dx)?);
                }
            }
        }
        FdMode::Symmetric => {
            if m != n {
                return Err(Error::shape(
                    "fd_grad",
                    "symmetric mode needs a square point",
                ));
            }
            for i in 0..n {
                for j in i..n {
                    let mut dx = RealMatrix::zeros(n, n);
                    dx.set(i, j, h);
                    dx.set(j, i, h);
                    let d = probe(i, j, &dx)?;
                    if i == j {
                        out.set(i, i, d);
                    } else {
                        // d = ∇f_ij + ∇f_ji
                        out.set(i, j, 0.5 * d);
                        out.set(j, i, 0.5 * d);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn probe_err(row: usize, col: usize, e: Error) -> Error {
    Error::Probe {
        row,
        col,
        source: Box::new(e),
    }
}

/// Central difference of `t ↦ f(curve(t))` at `t = 0`.
pub fn fd_along<F, C>(f: &F, curve: &C, h: f64) -> Result<f64>
where
    F: Fn(&RealMatrix) -> Result<f64>,
    C: Fn(f64) -> RealMatrix,
{
    Ok((f(&curve(h))? - f(&curve(-h))?) / (2.0 * h))
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, floor)`.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(analytic).max(norm(numeric)).max(RELATIVE_ERROR_FLOOR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradReport {
    pub op: String,
    pub family: String,
    pub seed: u64,
    pub step: f64,
    pub relative_error: f64,
    /// `log₂(e(h)/e(h/2))` of the central-difference error along a random
    /// admissible direction; `None` when both errors sit at rounding level.
    pub order: Option<f64>,
    /// `log₂(r(h)/r(h/2))` of the first-order Taylor residual
    /// `|L(X + h·dX) − L(X) − h·∇L:dX|`.
    pub taylor_order: Option<f64>,
    pub pass: bool,
    pub tolerance: f64,
    pub error: Option<String>,
}

/// Step used for the order estimates, relative to `1 + ‖X‖_F` for
/// additive curves. Congruence curves are already relative, so their
/// parameter is used as is.
const ORDER_STEP: f64 = 1e-3;

/// Finite-difference step along a congruence curve.
const CONGRUENCE_STEP: f64 = 1e-6;

/// Runs `op` at every seed. Failures (analytic or probe errors included)
/// are recorded in the reports, never raised.
pub fn check(op: &RegisteredOp, seeds: &[u64], tolerance: f64, gap_floor: f64) -> Vec<GradReport> {
    seeds
        .iter()
        .map(|&seed| match run_probe(op, seed, gap_floor) {
            Ok(mut r) => {
                r.tolerance = tolerance;
                r.pass = r.relative_error <= tolerance;
                r
            }
            Err(e) => GradReport {
                op: op.name.to_string(),
                family: op.family.to_string(),
                seed,
                step: f64::NAN,
                relative_error: f64::INFINITY,
                order: None,
                taylor_order: None,
                pass: false,
                tolerance,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

fn run_probe(op: &RegisteredOp, seed: u64, gap_floor: f64) -> Result<GradReport> {
    let probe = (op.build)(seed, gap_floor)?;
    let x = &probe.point;
    let scale = 1.0 + x.frobenius_norm();
    let h = default_step(x);
    let loss = |m: &RealMatrix| (probe.loss)(m);

    let (analytic, numeric) = match &probe.perturbation {
        Perturbation::Entrywise | Perturbation::Symmetric => {
            let mode = if matches!(probe.perturbation, Perturbation::Symmetric) {
                FdMode::Symmetric
            } else {
                FdMode::Entrywise
            };
            let fd = fd_grad(loss, x, h, mode)?;
            let an = if mode == FdMode::Symmetric {
                probe.gradient.sym()
            } else {
                probe.gradient.clone()
            };
            (an.into_vec(), fd.into_vec())
        }
        Perturbation::Congruence(dirs) => {
            let mut an = Vec::with_capacity(dirs.len());
            let mut fd = Vec::with_capacity(dirs.len());
            for g in dirs {
                an.push(probe.gradient.colon(&congruence_tangent(x, g)));
                let step = CONGRUENCE_STEP / (1.0 + g.frobenius_norm());
                fd.push(fd_along(&loss, &|t| congruence(x, g, t), step)?);
            }
            (an, fd)
        }
    };
    let relative_error = relative_error(&analytic, &numeric);

    // Order estimates along one random admissible curve.
    let mut rng = seeded(seed ^ 0x0bde_5eed);
    let (curve, slope): (Box<dyn Fn(f64) -> RealMatrix>, f64) = match &probe.perturbation {
        Perturbation::Entrywise => {
            let d = unit(gaussian(&mut rng, x.rows(), x.cols()));
            let slope = probe.gradient.colon(&d);
            let xc = x.clone();
            (Box::new(move |t| &xc + &d.scale(t)), slope)
        }
        Perturbation::Symmetric => {
            let d = unit(gaussian(&mut rng, x.rows(), x.cols()).sym());
            let slope = probe.gradient.colon(&d);
            let xc = x.clone();
            (Box::new(move |t| &xc + &d.scale(t)), slope)
        }
        Perturbation::Congruence(dirs) => {
            let g = unit(dirs[0].clone());
            let slope = probe.gradient.colon(&congruence_tangent(x, &g));
            let xc = x.clone();
            (Box::new(move |t| congruence(&xc, &g, t)), slope)
        }
    };
    let ho = match probe.perturbation {
        Perturbation::Congruence(_) => ORDER_STEP,
        _ => ORDER_STEP * scale,
    };
    let l0 = loss(x)?;
    let fd_err = |t: f64| -> Result<f64> { Ok((fd_along(&loss, &curve, t)? - slope).abs()) };
    let taylor = |t: f64| -> Result<f64> { Ok((loss(&curve(t))? - l0 - t * slope).abs()) };
    let floor = 1e3 * f64::EPSILON * (1.0 + l0.abs());
    let order = order_from(fd_err(ho)?, fd_err(ho / 2.0)?, floor / ho);
    let taylor_order = order_from(taylor(ho)?, taylor(ho / 2.0)?, floor);

    Ok(GradReport {
        op: op.name.to_string(),
        family: op.family.to_string(),
        seed,
        step: h,
        relative_error,
        order,
        taylor_order,
        pass: false,
        tolerance: 0.0,
        error: None,
    })
}

fn order_from(e_h: f64, e_half: f64, floor: f64) -> Option<f64> {
    if e_h <= floor || e_half <= floor * 0.25 {
        None
    } else {
        Some((e_h / e_half).log2())
    }
}

fn unit(m: RealMatrix) -> RealMatrix {
    let n = m.frobenius_norm();
    m.scale(1.0 / n)
}

/// `(I + tG) X (I + tG)ᵀ`, a curve through `X` that preserves rank and
/// symmetry.
pub fn congruence(x: &RealMatrix, g: &RealMatrix, t: f64) -> RealMatrix {
    let n = x.rows();
    let a = &RealMatrix::identity(n) + &g.scale(t);
    a.matmul(x).matmul_t(&a).sym()
}

/// Tangent `GX + XGᵀ` of [`congruence`] at `t = 0`.
pub fn congruence_tangent(x: &RealMatrix, g: &RealMatrix) -> RealMatrix {
    let gx = g.matmul(x);
    &gx + &gx.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_gives_its_coefficients() {
        let a = RealMatrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]).unwrap();
        let x = RealMatrix::from_rows(&[&[0.3, 0.1], &[-0.2, 0.7]]).unwrap();
        let g = fd_grad(|m| Ok(a.colon(m)), &x, default_step(&x), FdMode::Entrywise).unwrap();
        assert!((&g - &a).frobenius_norm() < 1e-9);
    }

    #[test]
    fn half_squared_norm_gives_point() {
        let x = RealMatrix::from_rows(&[&[0.3, 0.1, 2.0], &[-0.2, 0.7, 1.0]]).unwrap();
        let f = |m: &RealMatrix| Ok(0.5 * m.frobenius_norm().powi(2));
        let g = fd_grad(f, &x, default_step(&x), FdMode::Entrywise).unwrap();
        assert!((&g - &x).frobenius_norm() < 1e-9);
    }

    #[test]
    fn symmetric_mode_returns_sym_gradient() {
        let a = RealMatrix::from_rows(&[&[1.0, 4.0], &[0.0, 3.0]]).unwrap();
        let x = RealMatrix::identity(2);
        let g = fd_grad(|m| Ok(a.colon(m)), &x, 1e-6, FdMode::Symmetric).unwrap();
        assert!((&g - &a.sym()).frobenius_norm() < 1e-9);
    }

    #[test]
    fn probe_failure_names_the_entry() {
        let x = RealMatrix::zeros(2, 2);
        let f = |m: &RealMatrix| {
            if m.get(1, 0) != 0.0 {
                Err(Error::Singular)
            } else {
                Ok(0.0)
            }
        };
        let err = fd_grad(f, &x, 1e-6, FdMode::Entrywise).unwrap_err();
        assert!(matches!(err, Error::Probe { row: 1, col: 0, .. }));
    }

    #[test]
    fn congruence_preserves_rank() {
        let x = RealMatrix::diag_from(&[2.0, 1.0, 0.0]);
        let g = RealMatrix::from_fn(3, 3, |i, j| (i as f64) - 0.5 * j as f64);
        let y = congruence(&x, &g, 0.1);
        assert_eq!(crate::linalg::numerical_rank(&y).unwrap(), 2);
    }
}
