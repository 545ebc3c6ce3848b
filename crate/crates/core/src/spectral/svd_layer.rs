use super::{build_k, GapPolicy};
use crate::error::{Error, Result};
use crate::linalg::{RealMatrix, SvdFactors};

/// Gradient of `L ∘ svd` with respect to `X` (`m × n`, `m ≥ n`) given the
/// partial derivatives of `L` in the full factors:
///
/// ```text
/// ∂L/∂X = D Vᵀ + U (∂L/∂Σ − UᵀD)_diag Vᵀ
///       + 2 U Σ (Kᵀ ∘ (Vᵀ(∂L/∂V − V Dᵀ U Σ)))_sym Vᵀ
/// D     = (∂L/∂U)₁ Σₙ⁻¹ − U₂ (∂L/∂U)₂ᵀ U₁ Σₙ⁻¹
/// ```
///
/// `g_u` is the full `m × m` gradient; its first `n` columns are `(∂L/∂U)₁`.
/// `Σₙ⁻¹` is only formed when `g_u` is nonzero, so losses that do not touch
/// `U` are differentiable at rank-deficient `X`.
pub fn svd_layer_backward(
    x: &RealMatrix,
    f: &SvdFactors,
    g_u: &RealMatrix,
    g_s: &RealMatrix,
    g_v: &RealMatrix,
    policy: &GapPolicy,
) -> Result<RealMatrix> {
    let (m, n) = x.shape();
    check("U", f.u.shape(), (m, m))?;
    check("S", f.s.shape(), (m, n))?;
    check("V", f.v.shape(), (n, n))?;
    check("dL/dU", g_u.shape(), (m, m))?;
    check("dL/dS", g_s.shape(), (m, n))?;
    check("dL/dV", g_v.shape(), (n, n))?;

    let sigma = f.singular_values();
    let u = &f.u;
    let v = &f.v;

    let d = if g_u.is_zero() {
        RealMatrix::zeros(m, n)
    } else {
        let sigma_min = sigma[n - 1];
        if sigma_min <= policy.min_gap {
            return Err(Error::RankDeficient {
                sigma_min,
                min_gap: policy.min_gap,
            });
        }
        let inv: Vec<f64> = sigma.iter().map(|s| 1.0 / s).collect();
        let g_u1 = g_u.columns(0..n);
        let mut d = g_u1.scale_cols(&inv);
        if m > n {
            let u1 = u.columns(0..n);
            let u2 = u.columns(n..m);
            let g_u2 = g_u.columns(n..m);
            // U₂ (∂L/∂U)₂ᵀ U₁ Σₙ⁻¹
            let corr = u2.matmul(&g_u2.t_matmul(&u1)).scale_cols(&inv);
            d = &d - &corr;
        }
        d
    };

    let k = build_k(&sigma, policy)?;
    let u_sigma = u.matmul(&f.s); // m × n

    let term_d = d.matmul_t(v);
    let diag_inner = (g_s - &u.t_matmul(&d)).diag_part();
    let term_diag = u.matmul(&diag_inner).matmul_t(v);
    // Vᵀ (∂L/∂V − V Dᵀ U Σ)
    let v_dt_u_sigma = v.matmul(&d.t_matmul(&u_sigma));
    let inner = v.t_matmul(&(g_v - &v_dt_u_sigma));
    let coupled = k.transpose().hadamard(&inner).sym();
    let term_k = u_sigma.matmul(&coupled).matmul_t(v).scale(2.0);

    Ok(&(&term_d + &term_diag) + &term_k)
}

fn check(name: &str, got: (usize, usize), want: (usize, usize)) -> Result<()> {
    if got != want {
        return Err(Error::shape(
            "svd_layer_backward",
            format!(
                "{name} is {}x{}, expected {}x{}",
                got.0, got.1, want.0, want.1
            ),
        ));
    }
    Ok(())
}
