use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse, RealMatrix};

/// `Π_A = A A⁺`, exactly symmetric.
pub fn projector_forward(a: &RealMatrix) -> Result<RealMatrix> {
    Ok(pseudo_inverse(a)?.projector)
}

/// `∂L/∂A = 2 (I − Π_A)(∂L/∂Π)_sym A⁺`, symmetrized. Valid for symmetric
/// `A` and variations that keep its rank.
pub fn projector_backward(
    a: &RealMatrix,
    pi: &RealMatrix,
    g_pi: &RealMatrix,
) -> Result<RealMatrix> {
    let a_pinv = pseudo_inverse(a)?.pinv;
    projector_backward_with(pi, &a_pinv, g_pi)
}

/// [`projector_backward`] with `A⁺` already at hand.
pub fn projector_backward_with(
    pi: &RealMatrix,
    a_pinv: &RealMatrix,
    g_pi: &RealMatrix,
) -> Result<RealMatrix> {
    let n = pi.rows();
    for (name, s) in [
        ("Pi", pi.shape()),
        ("A+", a_pinv.shape()),
        ("dL/dPi", g_pi.shape()),
    ] {
        if s != (n, n) {
            return Err(Error::shape(
                "projector_backward",
                format!("{name} is {}x{}, expected {n}x{n}", s.0, s.1),
            ));
        }
    }
    let complement = &RealMatrix::identity(n) - pi;
    Ok(complement
        .matmul(&g_pi.sym())
        .matmul(a_pinv)
        .scale(2.0)
        .sym())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_projector() {
        let p = projector_forward(&RealMatrix::diag_from(&[1.0, 0.0])).unwrap();
        assert_eq!(p, RealMatrix::diag_from(&[1.0, 0.0]));
    }

    #[test]
    fn full_rank_has_zero_gradient() {
        let a = RealMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]).unwrap();
        let p = projector_forward(&a).unwrap();
        let g = projector_backward(
            &a,
            &p,
            &RealMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap(),
        )
        .unwrap();
        assert!(g.max_abs() < 1e-14);
    }
}
