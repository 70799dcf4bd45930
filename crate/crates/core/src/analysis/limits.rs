use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{synthesize, SynthSpec};
use crate::error::Result;
use crate::estimators::{mcd_fit_class, ClassStats, McdConfig};

/// Large-sample limits for one contaminated class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLimits {
    pub class: usize,
    /// `(1 - delta) mu + delta mu_out`.
    pub mix_mean: DVector<f64>,
    /// Isotropic part `(1 - delta) sigma2 + delta out_sigma2`.
    pub mix_scale: f64,
    /// Rank-one part `delta (1 - delta) v v^T` with `v = mu - mu_out`.
    pub rank_one_coef: f64,
    pub direction: DVector<f64>,
    /// Limits of the robust estimate: the clean mean and `sigma2 I`.
    pub mcd_mean: DVector<f64>,
    pub mcd_scale: f64,
    sigma2: f64,
    out_sigma2: f64,
}

impl ClassLimits {
    pub fn mix_covariance(&self) -> DMatrix<f64> {
        self.covariance_at(self.rank_one_coef, self.mix_scale)
    }

    fn covariance_at(&self, coef: f64, scale: f64) -> DMatrix<f64> {
        let d = self.direction.len();
        DMatrix::identity(d, d) * scale + &self.direction * self.direction.transpose() * coef
    }

    /// Covariance of the mixture with outlier fraction `q`.
    pub fn sigma_q(&self, q: f64) -> DMatrix<f64> {
        self.covariance_at(q * (1.0 - q), (1.0 - q) * self.sigma2 + q * self.out_sigma2)
    }

    /// `det(sigma_q)` as a polynomial in `q`.
    pub fn det_q(&self, q: f64) -> f64 {
        let d = self.direction.len() as i32;
        let s = (1.0 - q) * self.sigma2 + q * self.out_sigma2;
        s.powi(d - 1) * (s + q * (1.0 - q) * self.direction.norm_squared())
    }
}

pub fn lemma1_limits(spec: &SynthSpec) -> Result<Vec<ClassLimits>> {
    spec.validate()?;
    let delta = spec.delta_out;
    let out = spec.out_mean_vec();
    Ok((0..spec.num_classes())
        .map(|c| {
            let mu = spec.class_mean(c);
            ClassLimits {
                class: c,
                mix_mean: &mu * (1.0 - delta) + &out * delta,
                mix_scale: (1.0 - delta) * spec.sigma2 + delta * spec.out_sigma2,
                rank_one_coef: delta * (1.0 - delta),
                direction: &mu - &out,
                mcd_scale: spec.sigma2,
                mcd_mean: mu,
                sigma2: spec.sigma2,
                out_sigma2: spec.out_sigma2,
            }
        })
        .collect())
}

/// One line of the closed-form versus empirical comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRow {
    pub class: usize,
    pub quantity: String,
    pub closed_form: f64,
    pub empirical: f64,
}

/// Draws `spec`, then compares per-class sample and MCD means and variances
/// with their limits.
pub fn lemma1_table(spec: &SynthSpec, cfg: &McdConfig) -> Result<Vec<LimitRow>> {
    let limits = lemma1_limits(spec)?;
    let (ds, _) = synthesize(spec)?;
    let mut rows = Vec::new();
    for lim in &limits {
        let c = lim.class;
        let points = ds.class_rows(c);
        let sample = ClassStats::from_rows(&points);
        let mcd = mcd_fit_class(&points, cfg, c)?.stats;
        let mix_cov = lim.mix_covariance();
        for j in 0..spec.dim() {
            let mut push = |quantity: String, closed_form: f64, empirical: f64| {
                rows.push(LimitRow {
                    class: c,
                    quantity,
                    closed_form,
                    empirical,
                })
            };
            push(format!("sample_mean[{j}]"), lim.mix_mean[j], sample.mean[j]);
            push(format!("sample_var[{j}]"), mix_cov[(j, j)], sample.covariance[(j, j)]);
            push(format!("mcd_mean[{j}]"), lim.mcd_mean[j], mcd.mean[j]);
            push(format!("mcd_var[{j}]"), lim.mcd_scale, mcd.covariance[(j, j)]);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(means: Vec<Vec<f64>>, out: Vec<f64>, delta: f64, sigma2: f64, out_sigma2: f64) -> SynthSpec {
        SynthSpec {
            class_means: means,
            sigma2,
            out_mean: out,
            out_sigma2,
            delta_out: delta,
            n_per_class: 10,
            seed: 0,
        }
    }

    #[test]
    fn one_dimensional_values() {
        let s = spec(vec![vec![2.0], vec![-1.0]], vec![0.0], 0.25, 1.0, 4.0);
        let l = &lemma1_limits(&s).unwrap()[0];
        assert!((l.mix_mean[0] - 1.5).abs() < 1e-15);
        assert!((l.mix_covariance()[(0, 0)] - 2.5).abs() < 1e-15);
    }

    #[test]
    fn clean_limits() {
        let s = spec(vec![vec![2.0, 1.0], vec![-1.0, 0.0]], vec![0.0, 0.0], 0.0, 1.5, 4.0);
        let l = &lemma1_limits(&s).unwrap()[0];
        assert_eq!(l.mix_mean, l.mcd_mean);
        assert_eq!(l.mix_covariance(), DMatrix::identity(2, 2) * 1.5);
        assert!((l.det_q(0.0) - 1.5f64.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn determinant_grows_with_contamination() {
        let s = spec(vec![vec![2.0, -1.0, 0.5], vec![0.0; 3]], vec![0.3, 0.0, 0.0], 0.1, 1.0, 3.0);
        let l = &lemma1_limits(&s).unwrap()[0];
        let base = l.det_q(0.0);
        for k in 1..=100 {
            assert!(l.det_q(k as f64 / 100.0) > base);
        }
    }

    proptest! {
        #[test]
        fn determinant_polynomial_matches_matrix(
            d in 1usize..=5,
            mu in prop::collection::vec(-3.0f64..3.0, 5),
            out in prop::collection::vec(-3.0f64..3.0, 5),
            sigma2 in 0.1f64..4.0,
            out_sigma2 in 0.1f64..9.0,
            q in 0.0f64..1.0,
        ) {
            let s = spec(vec![mu[..d].to_vec(), vec![0.0; d]], out[..d].to_vec(), 0.2, sigma2, out_sigma2);
            let l = &lemma1_limits(&s).unwrap()[0];
            let direct = l.sigma_q(q).determinant();
            let poly = l.det_q(q);
            prop_assert!((direct - poly).abs() <= 1e-9 * poly.abs().max(1e-300));
        }
    }
}
