use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Posterior, SoftmaxParams};
use crate::data::FeatureSet;
use crate::error::{Result, RogError};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// Penalty `l2 / 2 * ||W||_F^2`; biases are not penalized.
    pub l2: f64,
    pub epochs: usize,
    /// Fixed step. Defaults to the inverse of a smoothness bound of the loss.
    pub step: Option<f64>,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            l2: 1e-3,
            epochs: 1000,
            step: None,
        }
    }
}

/// Mean cross-entropy plus the weight penalty, and its gradient.
pub fn logistic_loss_and_grad(params: &SoftmaxParams, ds: &FeatureSet, l2: f64) -> Result<(f64, SoftmaxParams)> {
    let x = ds.features();
    let n = ds.len() as f64;
    let lp = params.log_posteriors(x)?;
    let mut resid = lp.map(f64::exp);
    let mut loss = 0.0;
    for (i, &y) in ds.labels().iter().enumerate() {
        loss -= lp[(i, y)];
        resid[(i, y)] -= 1.0;
    }
    loss = loss / n + 0.5 * l2 * params.weights.norm_squared();
    let weights = resid.transpose() * x / n + &params.weights * l2;
    let biases = DVector::from_iterator(resid.ncols(), resid.column_iter().map(|c| c.sum() / n));
    Ok((loss, SoftmaxParams { weights, biases }))
}

/// Multinomial logistic regression by full-batch gradient descent from zero.
pub fn fit_logistic_baseline(ds: &FeatureSet, cfg: &LogisticConfig) -> Result<SoftmaxParams> {
    if !(cfg.l2 >= 0.0 && cfg.l2.is_finite()) {
        return Err(RogError::Config(format!("l2 {} must be >= 0", cfg.l2)));
    }
    let step = match cfg.step {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(RogError::Config(format!("step {s} must be positive"))),
        None => {
            // Hessian of the mean cross-entropy is bounded by E[x~ x~^T] / 2
            let n = ds.len();
            let d = ds.dim();
            let mut aug = DMatrix::from_element(n, d + 1, 1.0);
            aug.columns_mut(0, d).copy_from(ds.features());
            let second = aug.transpose() * &aug / n as f64;
            let top = linalg::symmetric_eigenvalues(&second).last().copied().unwrap_or(1.0);
            1.0 / (0.5 * top + cfg.l2)
        }
    };
    let mut params = SoftmaxParams::zeros(ds.num_classes(), ds.dim());
    for _ in 0..cfg.epochs {
        let (_, g) = logistic_loss_and_grad(&params, ds, cfg.l2)?;
        params.weights -= g.weights * step;
        params.biases -= g.biases * step;
    }
    params.validate()?;
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{accuracy, predict};

    fn small() -> FeatureSet {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.7).sin(), (t * 1.3).cos() - 0.2, 0.1 * t - 0.4]
            })
            .collect();
        FeatureSet::from_rows(&rows, vec![0, 1, 2, 0, 1, 2, 0, 0, 1, 2], 3).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ds = small();
        let l2 = 0.1;
        let cfg = LogisticConfig {
            l2,
            epochs: 25,
            step: None,
        };
        let params = fit_logistic_baseline(&ds, &cfg).unwrap();
        let (_, g) = logistic_loss_and_grad(&params, &ds, l2).unwrap();
        let h = 1e-5;
        let loss = |p: &SoftmaxParams| logistic_loss_and_grad(p, &ds, l2).unwrap().0;
        let mut worst: f64 = 0.0;
        for idx in 0..params.weights.len() {
            let mut plus = params.clone();
            plus.weights[idx] += h;
            let mut minus = params.clone();
            minus.weights[idx] -= h;
            worst = worst.max(((loss(&plus) - loss(&minus)) / (2.0 * h) - g.weights[idx]).abs());
        }
        for idx in 0..params.biases.len() {
            let mut plus = params.clone();
            plus.biases[idx] += h;
            let mut minus = params.clone();
            minus.biases[idx] -= h;
            worst = worst.max(((loss(&plus) - loss(&minus)) / (2.0 * h) - g.biases[idx]).abs());
        }
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn separable_line() {
        let rows: Vec<Vec<f64>> = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0].iter().map(|&v| vec![v]).collect();
        let ds = FeatureSet::from_rows(&rows, vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let p = fit_logistic_baseline(&ds, &LogisticConfig::default()).unwrap();
        let pred = predict(&p, ds.features()).unwrap();
        assert_eq!(accuracy(&pred.labels, ds.labels()).unwrap(), 1.0);
    }

    #[test]
    fn stronger_penalty_shrinks_weights() {
        let ds = small();
        let norms: Vec<f64> = [0.01, 0.1, 1.0]
            .iter()
            .map(|&l2| {
                let cfg = LogisticConfig {
                    l2,
                    epochs: 3000,
                    step: None,
                };
                fit_logistic_baseline(&ds, &cfg).unwrap().weights.norm()
            })
            .collect();
        assert!(norms[0] > norms[1] && norms[1] > norms[2], "{norms:?}");
    }

    #[test]
    fn loss_decreases() {
        let ds = small();
        let zero = SoftmaxParams::zeros(3, 3);
        let (l0, _) = logistic_loss_and_grad(&zero, &ds, 0.01).unwrap();
        assert!((l0 - 3f64.ln()).abs() < 1e-12);
        let fitted = fit_logistic_baseline(&ds, &LogisticConfig { l2: 0.01, ..Default::default() }).unwrap();
        let (l1, _) = logistic_loss_and_grad(&fitted, &ds, 0.01).unwrap();
        assert!(l1 < l0);
    }
}
