use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_input, GaussianClassifierParams, Posterior};
use crate::error::{Result, RogError};

/// Linear head: `logit_c = w_c^T x + b_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxParams {
    /// `C x d`, one weight vector per row.
    pub weights: DMatrix<f64>,
    pub biases: DVector<f64>,
}

impl SoftmaxParams {
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        Self {
            weights: DMatrix::zeros(num_classes, dim),
            biases: DVector::zeros(num_classes),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.nrows() != self.biases.len() {
            return Err(RogError::Dimension(format!(
                "{} weight rows, {} biases",
                self.weights.nrows(),
                self.biases.len()
            )));
        }
        if self.weights.iter().chain(self.biases.iter()).any(|v| !v.is_finite()) {
            return Err(RogError::Validation("softmax parameters must be finite".into()));
        }
        Ok(())
    }
}

impl Posterior for SoftmaxParams {
    fn num_classes(&self) -> usize {
        self.weights.nrows()
    }

    fn dim(&self) -> usize {
        self.weights.ncols()
    }

    fn logits(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_input(x, self.weights.ncols())?;
        let mut l = x * self.weights.transpose();
        for mut row in l.row_iter_mut() {
            row += self.biases.transpose();
        }
        Ok(l)
    }
}

/// Weights `Sigma^{-1} mu_c` and biases `-mu_c^T Sigma^{-1} mu_c / 2 + log beta_c`.
pub fn to_softmax(params: &GaussianClassifierParams) -> SoftmaxParams {
    let weights = &params.means * &params.tied_precision;
    let biases = DVector::from_fn(params.means.nrows(), |c, _| {
        -0.5 * weights.row(c).dot(&params.means.row(c)) + params.log_priors[c]
    });
    SoftmaxParams { weights, biases }
}

pub fn softmax_posterior(params: &SoftmaxParams, x: &DVector<f64>) -> Result<DVector<f64>> {
    let p = params.posteriors(&DMatrix::from_row_slice(1, x.len(), x.as_slice()))?;
    Ok(p.row(0).transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::posterior;

    #[test]
    fn zero_head_is_uniform() {
        let p = SoftmaxParams::zeros(4, 3);
        let post = softmax_posterior(&p, &DVector::from_vec(vec![1.0, -5.0, 2.0])).unwrap();
        assert!(post.iter().all(|v| (v - 0.25).abs() < 1e-15));
    }

    #[test]
    fn shift_invariance() {
        let mut p = SoftmaxParams {
            weights: DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 2.0, 0.5, 0.5]),
            biases: DVector::from_vec(vec![0.1, -0.3, 0.0]),
        };
        let x = DVector::from_vec(vec![0.7, -1.2]);
        let before = softmax_posterior(&p, &x).unwrap();
        p.biases.add_scalar_mut(123.0);
        let after = softmax_posterior(&p, &x).unwrap();
        assert!((before - after).abs().max() < 1e-12);
    }

    #[test]
    fn huge_logits_stay_normalized() {
        let p = SoftmaxParams {
            weights: DMatrix::zeros(3, 1),
            biases: DVector::from_vec(vec![1e4, -1e4, 9999.0]),
        };
        let post = softmax_posterior(&p, &DVector::zeros(1)).unwrap();
        assert!(post.iter().all(|v| v.is_finite()));
        assert!((post.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_gaussian_form() {
        let m = vec![
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![2.0, -1.0]),
            DVector::from_vec(vec![-1.0, 0.5]),
        ];
        let cov = DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.8]);
        let g = GaussianClassifierParams::tied(&m, &cov, &[0.2, 0.5, 0.3], 0.0).unwrap();
        let s = to_softmax(&g);
        for x in [[0.0, 0.0], [3.0, -2.0], [-1.5, 4.0]] {
            let x = DVector::from_vec(x.to_vec());
            let a = posterior(&g, &x).unwrap();
            let b = softmax_posterior(&s, &x).unwrap();
            assert!((a - b).abs().max() < 1e-12);
        }
    }
}
