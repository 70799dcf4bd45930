//! Location and scatter estimators for labeled feature sets.
//!
//! * [`sample_estimate`]: per-class means, covariance pooled over all rows.
//! * [`mcd_estimate`]: Minimum Covariance Determinant per class via
//!   concentration steps, pooled into a tied covariance.
//! * [`lts_mean`]: least-trimmed-squares location.
//! * [`trimmed_kmeans`]: trimmed k-means seeded from the noisy class means.

mod mahalanobis;
mod mcd;
mod lts;
mod sample;
mod tkm;

pub use lts::{lts_mean, LtsConfig};
pub use mahalanobis::mahalanobis;
pub use mcd::{
    default_subset_size, mcd_estimate, mcd_fit_class, McdClassFit, McdClassReport, McdConfig,
    McdEstimate, McdFit, McdMode, McdStart, EXACT_ENUMERATION_CAP,
};
pub use sample::{sample_estimate, SampleEstimate};
pub use tkm::{trimmed_kmeans, TkmConfig, TkmFit};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg;

/// Mean and covariance of the rows an estimator used for one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub mean: DVector<f64>,
    /// Maximum-likelihood covariance (divides by `count`), without ridge.
    pub covariance: DMatrix<f64>,
    pub count: usize,
}

impl ClassStats {
    pub fn from_rows(points: &DMatrix<f64>) -> Self {
        let (mean, covariance) = linalg::mean_and_covariance(points);
        Self {
            mean,
            covariance,
            count: points.nrows(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// How class priors are set from a fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    /// `1 / C` for every class.
    #[default]
    Uniform,
    /// Proportional to the number of rows the estimator kept per class.
    Proportional,
}

pub(crate) fn priors_from_counts(counts: &[usize], kind: PriorKind) -> Vec<f64> {
    let c = counts.len() as f64;
    match kind {
        PriorKind::Uniform => vec![1.0 / c; counts.len()],
        PriorKind::Proportional => {
            let total: usize = counts.iter().sum();
            counts.iter().map(|&k| k as f64 / total as f64).collect()
        }
    }
}

/// `sum_c w_c cov_c / sum_c w_c`.
pub(crate) fn pool_covariances(stats: &[ClassStats], weights: &[f64]) -> DMatrix<f64> {
    let d = stats[0].dim();
    let total: f64 = weights.iter().sum();
    let mut pooled = DMatrix::zeros(d, d);
    for (s, &w) in stats.iter().zip(weights) {
        pooled += &s.covariance * (w / total);
    }
    linalg::symmetrize(&mut pooled);
    pooled
}
