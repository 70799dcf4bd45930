use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_input, Posterior};
use crate::data::FeatureSet;
use crate::error::{Result, RogError};
use crate::estimators::{
    lts_mean, mcd_estimate, sample_estimate, trimmed_kmeans, LtsConfig, McdConfig, McdEstimate,
    SampleEstimate, TkmConfig, TkmFit,
};
use crate::linalg::{self, SpdFactor};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    #[default]
    Tied,
    /// Covariance fixed to the identity: nearest mean with prior offsets.
    Identity,
}

/// Class means, one shared covariance and class priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianClassifierParams {
    /// `C x d`, one mean per row.
    pub means: DMatrix<f64>,
    /// Shared covariance including its ridge.
    pub tied_covariance: DMatrix<f64>,
    pub tied_precision: DMatrix<f64>,
    pub log_priors: Vec<f64>,
    pub covariance_kind: CovarianceKind,
}

fn check_priors(priors: &[f64], c: usize) -> Result<Vec<f64>> {
    if priors.len() != c {
        return Err(RogError::Dimension(format!("{} priors for {c} classes", priors.len())));
    }
    if priors.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(RogError::Validation("priors must be positive and finite".into()));
    }
    let total: f64 = priors.iter().sum();
    Ok(priors.iter().map(|p| (p / total).ln()).collect())
}

fn means_matrix(means: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let d = means.first().map(|m| m.len()).unwrap_or(0);
    if means.len() < 2 || d == 0 || means.iter().any(|m| m.len() != d) {
        return Err(RogError::Dimension(
            "need at least two class means of one common positive length".into(),
        ));
    }
    Ok(DMatrix::from_fn(means.len(), d, |c, j| means[c][j]))
}

impl GaussianClassifierParams {
    /// Tied model. `ridge` is relative: `ridge * trace(cov) / d` is added to
    /// the diagonal before inversion. Priors are normalized to sum to one.
    pub fn tied(means: &[DVector<f64>], covariance: &DMatrix<f64>, priors: &[f64], ridge: f64) -> Result<Self> {
        let means = means_matrix(means)?;
        let d = means.ncols();
        if covariance.shape() != (d, d) {
            return Err(RogError::Dimension(format!(
                "covariance is {}x{}, means have length {d}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let log_priors = check_priors(priors, means.nrows())?;
        let eps = linalg::trace_ridge(covariance, ridge);
        let mut cov = covariance.clone();
        for i in 0..d {
            cov[(i, i)] += eps;
        }
        linalg::symmetrize(&mut cov);
        let tied_precision = SpdFactor::new(&cov, 0.0)?.inverse();
        Ok(Self {
            means,
            tied_covariance: cov,
            tied_precision,
            log_priors,
            covariance_kind: CovarianceKind::Tied,
        })
    }

    pub fn identity(means: &[DVector<f64>], priors: &[f64]) -> Result<Self> {
        let means = means_matrix(means)?;
        let d = means.ncols();
        Ok(Self {
            log_priors: check_priors(priors, means.nrows())?,
            means,
            tied_covariance: DMatrix::identity(d, d),
            tied_precision: DMatrix::identity(d, d),
            covariance_kind: CovarianceKind::Identity,
        })
    }

    pub fn from_sample(est: &SampleEstimate, ridge: f64) -> Result<Self> {
        let means: Vec<_> = est.classes.iter().map(|s| s.mean.clone()).collect();
        Self::tied(&means, &est.tied_covariance, &est.priors, ridge)
    }

    pub fn from_mcd(est: &McdEstimate, ridge: f64) -> Result<Self> {
        let means: Vec<_> = est.fit.classes.iter().map(|f| f.stats.mean.clone()).collect();
        Self::tied(&means, &est.tied_covariance, &est.priors, ridge)
    }

    pub fn from_tkm(fit: &TkmFit, ridge: f64) -> Result<Self> {
        let means: Vec<_> = fit.classes.iter().map(|s| s.mean.clone()).collect();
        Self::tied(&means, &fit.tied_covariance, &fit.priors, ridge)
    }

    pub fn mean(&self, c: usize) -> DVector<f64> {
        self.means.row(c).transpose()
    }

    pub fn priors(&self) -> Vec<f64> {
        self.log_priors.iter().map(|l| l.exp()).collect()
    }

    /// Checks shapes and that the stored precision inverts the covariance.
    pub fn validate(&self) -> Result<()> {
        let (c, d) = self.means.shape();
        if c < 2
            || self.log_priors.len() != c
            || self.tied_covariance.shape() != (d, d)
            || self.tied_precision.shape() != (d, d)
        {
            return Err(RogError::Dimension("inconsistent classifier parameter shapes".into()));
        }
        let total: f64 = self.log_priors.iter().map(|l| l.exp()).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(RogError::Validation(format!("priors sum to {total}")));
        }
        let err = (&self.tied_precision * &self.tied_covariance - DMatrix::identity(d, d)).abs().max();
        if !(err <= 1e-6) {
            return Err(RogError::Validation(format!(
                "precision does not invert covariance (max error {err:e})"
            )));
        }
        Ok(())
    }

    /// `(x - mu_c)^T Sigma^{-1} (x - mu_c)` for every row and class.
    pub fn mahalanobis_all(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_input(x, self.means.ncols())?;
        let factor = SpdFactor::new(&self.tied_covariance, 0.0)?;
        let mut out = DMatrix::zeros(x.nrows(), self.means.nrows());
        for c in 0..self.means.nrows() {
            let dist = factor.mahalanobis_rows(x, &self.mean(c));
            out.set_column(c, &DVector::from_vec(dist));
        }
        Ok(out)
    }
}

impl Posterior for GaussianClassifierParams {
    fn num_classes(&self) -> usize {
        self.means.nrows()
    }

    fn dim(&self) -> usize {
        self.means.ncols()
    }

    /// `-(x - mu_c)^T Sigma^{-1} (x - mu_c) / 2 + log beta_c`. The term
    /// `x^T Sigma^{-1} x / 2` is shared by all classes and cancels on
    /// normalization.
    fn logits(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut l = self.mahalanobis_all(x)?;
        for (c, mut col) in l.column_iter_mut().enumerate() {
            let lp = self.log_priors[c];
            for v in col.iter_mut() {
                *v = -0.5 * *v + lp;
            }
        }
        Ok(l)
    }
}

/// Which estimator parameterizes a Gaussian classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Sample,
    Mcd,
    /// LTS class means with identity covariance.
    LtsEuclid,
    Tkm,
}

impl FromStr for Estimator {
    type Err = RogError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sample" => Ok(Estimator::Sample),
            "mcd" => Ok(Estimator::Mcd),
            "lts-euclid" => Ok(Estimator::LtsEuclid),
            "tkm" => Ok(Estimator::Tkm),
            _ => Err(RogError::Config(format!(
                "unknown estimator `{s}` (expected sample, mcd, lts-euclid or tkm)"
            ))),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Sample => "sample",
            Estimator::Mcd => "mcd",
            Estimator::LtsEuclid => "lts-euclid",
            Estimator::Tkm => "tkm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub mcd: McdConfig,
    pub lts: LtsConfig,
    pub tkm: TkmConfig,
    /// Relative ridge on the shared covariance.
    pub ridge: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            mcd: McdConfig::default(),
            lts: LtsConfig::default(),
            tkm: TkmConfig::default(),
            ridge: linalg::DEFAULT_RIDGE,
        }
    }
}

pub fn fit_gaussian(ds: &FeatureSet, estimator: Estimator, cfg: &FitConfig) -> Result<GaussianClassifierParams> {
    match estimator {
        Estimator::Sample => GaussianClassifierParams::from_sample(&sample_estimate(ds)?, cfg.ridge),
        Estimator::Mcd => GaussianClassifierParams::from_mcd(&mcd_estimate(ds, &cfg.mcd)?, cfg.ridge),
        Estimator::Tkm => GaussianClassifierParams::from_tkm(&trimmed_kmeans(ds, &cfg.tkm)?, cfg.ridge),
        Estimator::LtsEuclid => {
            let mut means = Vec::with_capacity(ds.num_classes());
            for c in 0..ds.num_classes() {
                let rows = ds.class_rows(c);
                if rows.nrows() == 0 {
                    return Err(RogError::EmptyClass(c));
                }
                let lts = LtsConfig {
                    seed: crate::rng::mix(cfg.lts.seed, c as u64),
                    ..cfg.lts.clone()
                };
                means.push(lts_mean(&rows, &lts)?);
            }
            GaussianClassifierParams::identity(&means, &vec![1.0; ds.num_classes()])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{posterior, predict};

    fn one_d(means: &[f64], var: f64) -> GaussianClassifierParams {
        let m: Vec<_> = means.iter().map(|&v| DVector::from_vec(vec![v])).collect();
        GaussianClassifierParams::tied(&m, &DMatrix::from_element(1, 1, var), &vec![1.0; means.len()], 0.0).unwrap()
    }

    #[test]
    fn hand_evaluated_posteriors() {
        let p = one_d(&[0.0, 2.0], 1.0);
        let at0 = posterior(&p, &DVector::from_vec(vec![0.0])).unwrap();
        assert!((at0[0] - 0.880_797_077_977_882_3).abs() < 1e-12);
        assert!((at0[1] - 0.119_202_922_022_117_7).abs() < 1e-12);
        let at1 = posterior(&p, &DVector::from_vec(vec![1.0])).unwrap();
        assert!((at1[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn symmetric_means_at_origin() {
        let m = vec![DVector::from_vec(vec![1.0, -2.0]), DVector::from_vec(vec![-1.0, 2.0])];
        let p = GaussianClassifierParams::tied(&m, &DMatrix::identity(2, 2), &[1.0, 1.0], 0.0).unwrap();
        let post = posterior(&p, &DVector::zeros(2)).unwrap();
        assert!((post[0] - 0.5).abs() < 1e-15 && (post[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identical_classes_tie_to_zero() {
        let p = one_d(&[1.0, 1.0], 2.0);
        let x = DMatrix::from_column_slice(3, 1, &[-4.0, 1.0, 7.0]);
        let pred = predict(&p, &x).unwrap();
        assert_eq!(pred.labels, vec![0, 0, 0]);
        assert!(pred.posteriors().iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn far_point_is_confident() {
        let p = one_d(&[0.0, 10.0, -10.0], 1.0);
        let x = DMatrix::from_column_slice(1, 1, &[10.0]);
        let pred = predict(&p, &x).unwrap();
        assert_eq!(pred.labels, vec![1]);
        assert!(pred.posteriors()[(0, 1)] > 0.999);
    }

    #[test]
    fn prior_scaling_is_irrelevant() {
        let m = vec![DVector::from_vec(vec![0.0]), DVector::from_vec(vec![1.0])];
        let cov = DMatrix::from_element(1, 1, 1.0);
        let a = GaussianClassifierParams::tied(&m, &cov, &[1.0, 3.0], 0.0).unwrap();
        let b = GaussianClassifierParams::tied(&m, &cov, &[0.25, 0.75], 0.0).unwrap();
        let x = DMatrix::from_column_slice(4, 1, &[-1.0, 0.3, 0.6, 2.0]);
        assert_eq!(predict(&a, &x).unwrap(), predict(&b, &x).unwrap());
    }

    #[test]
    fn precision_inverts_covariance() {
        let m = vec![DVector::zeros(2), DVector::from_vec(vec![1.0, 1.0])];
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let p = GaussianClassifierParams::tied(&m, &cov, &[1.0, 1.0], linalg::DEFAULT_RIDGE).unwrap();
        p.validate().unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: GaussianClassifierParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn bad_input_shape() {
        let p = one_d(&[0.0, 1.0], 1.0);
        assert!(matches!(p.logits(&DMatrix::zeros(2, 3)), Err(RogError::Dimension(_))));
        assert!(matches!(
            p.logits(&DMatrix::from_element(1, 1, f64::NAN)),
            Err(RogError::Validation(_))
        ));
    }

    #[test]
    fn estimator_names() {
        for e in [Estimator::Sample, Estimator::Mcd, Estimator::LtsEuclid, Estimator::Tkm] {
            assert_eq!(e.to_string().parse::<Estimator>().unwrap(), e);
        }
        assert!(matches!("bogus".parse::<Estimator>(), Err(RogError::Config(_))));
    }
}
