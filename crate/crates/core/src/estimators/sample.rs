use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ClassStats;
use crate::data::FeatureSet;
use crate::error::{Result, RogError};
use crate::linalg;

/// Plain class means, covariance pooled over every row, priors `N_c / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEstimate {
    pub classes: Vec<ClassStats>,
    pub tied_covariance: DMatrix<f64>,
    pub priors: Vec<f64>,
}

/// Each row is centered at its own class mean and the scatter is divided by
/// the total count `N`, so the tied covariance equals the `N_c`-weighted
/// average of per-class covariances.
pub fn sample_estimate(ds: &FeatureSet) -> Result<SampleEstimate> {
    let n = ds.len();
    let d = ds.dim();
    let mut classes = Vec::with_capacity(ds.num_classes());
    let mut tied = DMatrix::zeros(d, d);
    for c in 0..ds.num_classes() {
        let rows = ds.class_rows(c);
        if rows.nrows() == 0 {
            return Err(RogError::EmptyClass(c));
        }
        let mean = linalg::column_mean(&rows);
        let scatter = linalg::scatter(&rows, &mean);
        tied += &scatter;
        classes.push(ClassStats {
            covariance: scatter / rows.nrows() as f64,
            count: rows.nrows(),
            mean,
        });
    }
    tied /= n as f64;
    let priors = classes.iter().map(|s| s.count as f64 / n as f64).collect();
    Ok(SampleEstimate {
        classes,
        tied_covariance: tied,
        priors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_evaluated_example() {
        let ds = FeatureSet::from_rows(
            &[vec![0.0], vec![2.0], vec![10.0], vec![12.0]],
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        let est = sample_estimate(&ds).unwrap();
        assert_eq!(est.classes[0].mean[0], 1.0);
        assert_eq!(est.classes[1].mean[0], 11.0);
        assert_eq!(est.tied_covariance[(0, 0)], 1.0);
        assert_eq!(est.priors, vec![0.5, 0.5]);
    }

    #[test]
    fn identical_class_contributes_nothing() {
        let ds = FeatureSet::from_rows(
            &[vec![3.0, 3.0], vec![3.0, 3.0], vec![0.0, 1.0], vec![2.0, 1.0]],
            vec![0, 0, 1, 1],
            2,
        )
        .unwrap();
        let est = sample_estimate(&ds).unwrap();
        assert_eq!(est.classes[0].mean.as_slice(), &[3.0, 3.0]);
        assert!(est.classes[0].covariance.iter().all(|v| *v == 0.0));
        // class 1 scatter is diag(2, 0); divided by N = 4
        assert_eq!(est.tied_covariance[(0, 0)], 0.5);
        assert_eq!(est.tied_covariance[(1, 1)], 0.0);
    }

    #[test]
    fn empty_class() {
        let ds = FeatureSet::from_rows(&[vec![0.0], vec![1.0]], vec![0, 0], 2).unwrap();
        assert!(matches!(sample_estimate(&ds), Err(RogError::EmptyClass(1))));
    }
}
