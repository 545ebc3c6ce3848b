use super::instance::validate_indicator;
use crate::error::{Error, Result};
use crate::linalg::ops::inverse;
use crate::linalg::RealMatrix;

/// `Tr(EᵀWE (EᵀDE)⁻¹)`: the summed fraction of each cluster's degree that
/// stays inside the cluster. Equals `k` for a perfect partition.
pub fn ncuts_criterion(w: &RealMatrix, e: &RealMatrix) -> Result<f64> {
    if !w.is_square() || e.rows() != w.rows() {
        return Err(Error::shape(
            "ncuts_criterion",
            format!(
                "W is {}x{}, E is {}x{}",
                w.rows(),
                w.cols(),
                e.rows(),
                e.cols()
            ),
        ));
    }
    validate_indicator(e)?;
    let degrees = w.row_sums();
    let assoc = e.t_matmul(&w.matmul(e));
    let vol = e.t_matmul(&e.scale_rows(&degrees));
    if let Some(cluster) = vol.diagonal().iter().position(|v| v.is_nan() || *v <= 0.0) {
        return Err(Error::EmptyCluster { cluster });
    }
    let inv = inverse(&vol).map_err(|_| Error::EmptyCluster { cluster: 0 })?;
    Ok(assoc.matmul(&inv).trace())
}
