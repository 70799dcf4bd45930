use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RogError};
use crate::estimators::{mcd_fit_class, ClassStats, McdConfig};
use crate::linalg;

/// Every coordinate of a replaced row is set to this value.
pub const ADVERSARIAL_MAGNITUDE: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub enum BreakdownEstimator {
    Sample,
    Mcd(McdConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownPoint {
    pub fraction: f64,
    pub replaced: usize,
    /// `||mu(Y_M) - mu(Y)||_2`.
    pub displacement: f64,
    /// `||mu(Y_M) - mu_true||_2`.
    pub error: f64,
    /// `ln(lambda_max / lambda_min)` of the covariance estimate.
    pub log_eigen_range: f64,
}

fn estimate(points: &DMatrix<f64>, est: &BreakdownEstimator) -> Result<ClassStats> {
    match est {
        BreakdownEstimator::Sample => Ok(ClassStats::from_rows(points)),
        BreakdownEstimator::Mcd(cfg) => Ok(mcd_fit_class(points, cfg, 0)?.stats),
    }
}

/// Replaces the first `round(f N)` rows of `base` with the far point
/// `ADVERSARIAL_MAGNITUDE * 1` for each fraction `f` and re-estimates.
pub fn breakdown_sweep(
    base: &DMatrix<f64>,
    true_mean: &DVector<f64>,
    estimator: &BreakdownEstimator,
    fractions: &[f64],
) -> Result<Vec<BreakdownPoint>> {
    let (n, d) = base.shape();
    if true_mean.len() != d {
        return Err(RogError::Dimension(format!("true mean has length {}, points {d}", true_mean.len())));
    }
    let clean = estimate(base, estimator)?;
    fractions
        .iter()
        .map(|&f| {
            if !(0.0..=1.0).contains(&f) {
                return Err(RogError::Config(format!("contamination {f} must be in [0, 1]")));
            }
            let m = (f * n as f64).round() as usize;
            let mut pts = base.clone();
            pts.rows_mut(0, m).fill(ADVERSARIAL_MAGNITUDE);
            let s = estimate(&pts, estimator)?;
            let eig = linalg::symmetric_eigenvalues(&s.covariance);
            let (lo, hi) = (eig[0], eig[d - 1]);
            Ok(BreakdownPoint {
                fraction: f,
                replaced: m,
                displacement: (&s.mean - &clean.mean).norm(),
                error: (&s.mean - true_mean).norm(),
                log_eigen_range: if lo > 0.0 { (hi / lo).ln() } else { f64::INFINITY },
            })
        })
        .collect()
}

/// Smallest swept fraction whose error exceeds `factor` times the error at
/// the first point, `None` if the estimator never breaks down.
pub fn breakdown_fraction(curve: &[BreakdownPoint], factor: f64) -> Option<f64> {
    let clean = curve.first()?.error;
    curve.iter().find(|p| p.error > factor * clean).map(|p| p.fraction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_mean_moves_by_r_over_n() {
        let base = DMatrix::zeros(50, 1);
        let curve = breakdown_sweep(&base, &DVector::zeros(1), &BreakdownEstimator::Sample, &[0.0, 0.02]).unwrap();
        assert_eq!(curve[0].displacement, 0.0);
        assert_eq!(curve[1].replaced, 1);
        assert!((curve[1].displacement - ADVERSARIAL_MAGNITUDE / 50.0).abs() < 1e-9);
    }

    #[test]
    fn no_contamination_no_displacement() {
        let base = DMatrix::from_fn(30, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 * 0.1);
        let cfg = McdConfig {
            seed: 4,
            ..Default::default()
        };
        for est in [BreakdownEstimator::Sample, BreakdownEstimator::Mcd(cfg)] {
            let curve = breakdown_sweep(&base, &DVector::zeros(2), &est, &[0.0]).unwrap();
            assert_eq!(curve[0].displacement, 0.0);
        }
    }

    #[test]
    fn fraction_lookup() {
        let pts = |e: &[f64]| -> Vec<BreakdownPoint> {
            e.iter()
                .enumerate()
                .map(|(i, &error)| BreakdownPoint {
                    fraction: i as f64 * 0.1,
                    replaced: i,
                    displacement: 0.0,
                    error,
                    log_eigen_range: 0.0,
                })
                .collect()
        };
        assert_eq!(breakdown_fraction(&pts(&[1.0, 2.0, 11.0]), 10.0), Some(0.2));
        assert_eq!(breakdown_fraction(&pts(&[1.0, 2.0, 3.0]), 10.0), None);
    }
}
