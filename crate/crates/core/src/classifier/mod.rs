//! Posterior computation and prediction.
//!
//! [`GaussianClassifierParams`] is the tied-covariance Gaussian (LDA) model
//! whose means and covariance come from any estimator; [`SoftmaxParams`] is
//! the linear head used both as a logistic baseline and to express the
//! Gaussian model as weights and biases.

mod gaussian;
mod logistic;
mod softmax;

pub use gaussian::{fit_gaussian, CovarianceKind, Estimator, FitConfig, GaussianClassifierParams};
pub use logistic::{fit_logistic_baseline, logistic_loss_and_grad, LogisticConfig};
pub use softmax::{softmax_posterior, to_softmax, SoftmaxParams};

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RogError};
use crate::linalg;

/// A model that yields a class posterior for every row of a feature matrix.
pub trait Posterior {
    fn num_classes(&self) -> usize;
    fn dim(&self) -> usize;

    /// Unnormalized log-scores, one row per input row.
    fn logits(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>>;

    /// Log-posteriors, normalized per row with a max-shifted log-sum-exp.
    fn log_posteriors(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut l = self.logits(x)?;
        normalize_log_rows(&mut l);
        Ok(l)
    }

    fn posteriors(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.log_posteriors(x)?.map(f64::exp))
    }
}

pub(crate) fn check_input(x: &DMatrix<f64>, dim: usize) -> Result<()> {
    if x.ncols() != dim {
        return Err(RogError::Dimension(format!(
            "input has {} columns, model expects {dim}",
            x.ncols()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(RogError::Validation("input contains non-finite values".into()));
    }
    Ok(())
}

pub(crate) fn normalize_log_rows(l: &mut DMatrix<f64>) {
    let mut buf = Vec::with_capacity(l.ncols());
    for mut row in l.row_iter_mut() {
        buf.clear();
        buf.extend(row.iter().copied());
        let z = linalg::log_sum_exp(&buf);
        for v in row.iter_mut() {
            *v -= z;
        }
    }
}

/// Posterior of a single point under the Gaussian model.
pub fn posterior(params: &GaussianClassifierParams, x: &DVector<f64>) -> Result<DVector<f64>> {
    let p = params.posteriors(&DMatrix::from_row_slice(1, x.len(), x.as_slice()))?;
    Ok(p.row(0).transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<usize>,
    pub log_posteriors: DMatrix<f64>,
}

impl Prediction {
    pub fn posteriors(&self) -> DMatrix<f64> {
        self.log_posteriors.map(f64::exp)
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in row.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn predict<P: Posterior + ?Sized>(model: &P, x: &DMatrix<f64>) -> Result<Prediction> {
    let log_posteriors = model.log_posteriors(x)?;
    Ok(Prediction {
        labels: labels_from_log_posteriors(&log_posteriors),
        log_posteriors,
    })
}

pub fn labels_from_log_posteriors(lp: &DMatrix<f64>) -> Vec<usize> {
    lp.row_iter().map(|r| argmax(r.iter().copied())).collect()
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() || truth.is_empty() {
        return Err(RogError::Dimension(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Accuracy restricted to rows whose true label is `c`, `None` for absent classes.
pub fn per_class_accuracy(predicted: &[usize], truth: &[usize], num_classes: usize) -> Vec<Option<f64>> {
    let mut hits = vec![0usize; num_classes];
    let mut totals = vec![0usize; num_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        totals[t] += 1;
        hits[t] += usize::from(p == t);
    }
    hits.iter()
        .zip(&totals)
        .map(|(&h, &n)| (n > 0).then(|| h as f64 / n as f64))
        .collect()
}

/// Mean negative log-likelihood of the true labels.
pub fn nll(log_posteriors: &DMatrix<f64>, truth: &[usize]) -> Result<f64> {
    if log_posteriors.nrows() != truth.len() || truth.is_empty() {
        return Err(RogError::Dimension(format!(
            "{} posterior rows for {} labels",
            log_posteriors.nrows(),
            truth.len()
        )));
    }
    let total: f64 = truth
        .iter()
        .enumerate()
        .map(|(i, &y)| -log_posteriors[(i, y)])
        .sum();
    Ok(total / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0], &[0, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 1, 1], &[0, 1, 1, 0]).unwrap(), 0.75);
        assert!(accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn per_class() {
        let acc = per_class_accuracy(&[0, 1, 1, 1], &[0, 1, 1, 0], 3);
        assert_eq!(acc, vec![Some(0.5), Some(1.0), None]);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax([0.5, 0.5]), 0);
        assert_eq!(argmax([0.1, 0.7, 0.7]), 1);
    }

    #[test]
    fn uniform_nll() {
        let lp = DMatrix::from_element(4, 10, (0.1f64).ln());
        let v = nll(&lp, &[0, 3, 9, 2]).unwrap();
        assert!((v - 10f64.ln()).abs() < 1e-12);
    }
}
