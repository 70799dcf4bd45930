use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RogError};
use crate::linalg::SpdFactor;

/// `(x - mean)^T (cov + ridge I)^{-1} (x - mean)`.
pub fn mahalanobis(
    x: &DVector<f64>,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    ridge: f64,
) -> Result<f64> {
    if x.len() != mean.len() || cov.nrows() != mean.len() {
        return Err(RogError::Dimension(format!(
            "point has length {}, mean {}, covariance {}x{}",
            x.len(),
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    let factor = SpdFactor::new(cov, ridge)?;
    Ok(factor.mahalanobis(&(x - mean)))
}
