use super::instance::validate_indicator;
use super::projector::projector_backward_with;
use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse, symmetry_tolerance, RealMatrix};

/// Degrees `d = W𝟙`, `M = D^(−1/2) W D^(−1/2)` and, given `E`,
/// `Ω = D^(1/2) E Eᵀ D^(1/2)`.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub degrees: Vec<f64>,
    pub m: RealMatrix,
    pub omega: Option<RealMatrix>,
}

fn check_symmetric(w: &RealMatrix, op: &'static str) -> Result<()> {
    if !w.is_square() {
        return Err(Error::shape(
            op,
            format!("W is {}x{}, expected square", w.rows(), w.cols()),
        ));
    }
    let (dev, tol) = (w.asymmetry(), symmetry_tolerance(w));
    if dev > tol {
        return Err(Error::Asymmetric {
            deviation: dev,
            tolerance: tol,
        });
    }
    Ok(())
}

fn check_indicator(w: &RealMatrix, e: &RealMatrix, op: &'static str) -> Result<()> {
    if e.rows() != w.rows() {
        return Err(Error::shape(
            op,
            format!("E has {} rows, W is {}x{}", e.rows(), w.rows(), w.cols()),
        ));
    }
    validate_indicator(e).map(|_| ())
}

pub fn degree_and_normalize(w: &RealMatrix, e: Option<&RealMatrix>) -> Result<Normalized> {
    check_symmetric(w, "degree_and_normalize")?;
    if let Some(e) = e {
        check_indicator(w, e, "degree_and_normalize")?;
    }
    let degrees = w.row_sums();
    if let Some(row) = degrees.iter().position(|d| d.is_nan() || *d <= 0.0) {
        return Err(Error::DisconnectedPixel { row });
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let m = w.scale_rows(&inv_sqrt).scale_cols(&inv_sqrt).sym();
    let omega = e.map(|e| {
        let sqrt: Vec<f64> = degrees.iter().map(|d| d.sqrt()).collect();
        let b = e.scale_rows(&sqrt);
        b.matmul_t(&b).sym()
    });
    Ok(Normalized { degrees, m, omega })
}

/// `Π_Ψ = E(EᵀE)⁻¹Eᵀ`: entry `(i, j)` is `1/|P|` when pixels `i` and `j`
/// share cluster `P`, else 0.
pub fn psi_projector(e: &RealMatrix) -> Result<RealMatrix> {
    let sizes = validate_indicator(e)?;
    let labels = super::labels_from_indicator(e)?;
    let m = e.rows();
    Ok(RealMatrix::from_fn(m, m, |i, j| {
        if labels[i] == labels[j] {
            1.0 / sizes[labels[i]] as f64
        } else {
            0.0
        }
    }))
}

/// Everything `J₁ = ½‖Π_M − Π_Ω‖²_F` needs for its backward pass.
#[derive(Debug, Clone)]
pub struct J1Cache {
    pub w: RealMatrix,
    pub normalized: Normalized,
    pub pi_m: RealMatrix,
    pub pi_omega: RealMatrix,
    pub m_pinv: RealMatrix,
    pub omega_pinv: RealMatrix,
    pub value: f64,
}

pub fn j1_forward(w: &RealMatrix, e: &RealMatrix) -> Result<(f64, J1Cache)> {
    let normalized = degree_and_normalize(w, Some(e))?;
    let pm = pseudo_inverse(&normalized.m)?;
    let omega = normalized.omega.as_ref().expect("omega requested");
    let po = pseudo_inverse(omega)?;
    let value = 0.5 * (&pm.projector - &po.projector).frobenius_norm().powi(2);
    let cache = J1Cache {
        w: w.clone(),
        normalized,
        pi_m: pm.projector,
        pi_omega: po.projector,
        m_pinv: pm.pinv,
        omega_pinv: po.pinv,
        value,
    };
    Ok((value, cache))
}

/// `∂J₁/∂W = D^(−1/2) gM D^(−1/2) + diag(D⁻¹Ω gΩ − D⁻¹M gM)𝟙ᵀ`,
/// symmetrized, with `gM` and `gΩ` from the projector backward.
pub fn j1_backward(cache: &J1Cache) -> Result<RealMatrix> {
    let diff = &cache.pi_m - &cache.pi_omega;
    let m = &cache.normalized.m;
    let omega = cache.normalized.omega.as_ref().expect("omega cached");
    let g_m = projector_backward_with(&cache.pi_m, &cache.m_pinv, &diff)?;
    let g_omega = projector_backward_with(&cache.pi_omega, &cache.omega_pinv, &diff.scale(-1.0))?;
    let d = &cache.normalized.degrees;
    let inv_sqrt: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
    let direct = g_m.scale_rows(&inv_sqrt).scale_cols(&inv_sqrt);
    // Both g's are already symmetric.
    let through_degrees: Vec<f64> = omega
        .matmul(&g_omega)
        .diagonal()
        .iter()
        .zip(m.matmul(&g_m).diagonal())
        .zip(d)
        .map(|((a, b), di)| (a - b) / di)
        .collect();
    let n = d.len();
    let rank_one = RealMatrix::from_fn(n, n, |i, _| through_degrees[i]);
    Ok((&direct + &rank_one).sym())
}

/// Everything `J₂ = ½‖Π_W − Π_Ψ‖²_F` needs for its backward pass.
#[derive(Debug, Clone)]
pub struct J2Cache {
    pub w: RealMatrix,
    pub pi_w: RealMatrix,
    pub w_pinv: RealMatrix,
    pub pi_psi: RealMatrix,
    pub rank: usize,
    pub value: f64,
}

pub fn j2_forward(w: &RealMatrix, e: &RealMatrix) -> Result<(f64, J2Cache)> {
    check_symmetric(w, "j2_forward")?;
    check_indicator(w, e, "j2_forward")?;
    let pw = pseudo_inverse(&w.sym())?;
    let pi_psi = psi_projector(e)?;
    let value = 0.5 * (&pw.projector - &pi_psi).frobenius_norm().powi(2);
    let cache = J2Cache {
        w: w.clone(),
        pi_w: pw.projector,
        w_pinv: pw.pinv,
        pi_psi,
        rank: pw.rank,
        value,
    };
    Ok((value, cache))
}

/// `∂J₂/∂W = −2 (I − Π_W) Π_Ψ W⁺`, symmetrized.
pub fn j2_backward(cache: &J2Cache) -> Result<RealMatrix> {
    let n = cache.w.rows();
    let complement = &RealMatrix::identity(n) - &cache.pi_w;
    Ok(complement
        .matmul(&cache.pi_psi)
        .matmul(&cache.w_pinv)
        .scale(-2.0)
        .sym())
}
