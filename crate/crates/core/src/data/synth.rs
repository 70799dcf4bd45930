//! Contaminated isotropic Gaussian classes.
//!
//! Each class holds `floor((1 - delta_out) * n_per_class)` clean rows drawn
//! from `N(mu_c, sigma2 I)` followed by outlier rows from
//! `N(mu_out, out_sigma2 I)`. All rows carry the class label, and the mask marks
//! the outliers.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::FeatureSet;
use crate::error::{Result, RogError};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// One mean per class, each of length `d`.
    pub class_means: Vec<Vec<f64>>,
    pub sigma2: f64,
    pub out_mean: Vec<f64>,
    pub out_sigma2: f64,
    pub delta_out: f64,
    pub n_per_class: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn num_classes(&self) -> usize {
        self.class_means.len()
    }

    pub fn dim(&self) -> usize {
        self.out_mean.len()
    }

    pub fn class_mean(&self, c: usize) -> DVector<f64> {
        DVector::from_column_slice(&self.class_means[c])
    }

    pub fn out_mean_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.out_mean)
    }

    /// Clean rows per class.
    pub fn n_clean(&self) -> usize {
        ((1.0 - self.delta_out) * self.n_per_class as f64).floor() as usize
    }

    /// Outliers more widely scattered than clean samples.
    pub fn outliers_wider(&self) -> bool {
        self.out_sigma2 > self.sigma2
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(RogError::Spec(format!("sigma2 = {} must be positive", self.sigma2)));
        }
        if !(self.out_sigma2 > 0.0 && self.out_sigma2.is_finite()) {
            return Err(RogError::Spec(format!(
                "out_sigma2 = {} must be positive",
                self.out_sigma2
            )));
        }
        if !(0.0..1.0).contains(&self.delta_out) {
            return Err(RogError::Spec(format!(
                "delta_out = {} must lie in [0, 1)",
                self.delta_out
            )));
        }
        if self.n_per_class == 0 {
            return Err(RogError::Spec("n_per_class must be positive".into()));
        }
        let d = self.dim();
        if d == 0 {
            return Err(RogError::Spec("dimension must be positive".into()));
        }
        if self.class_means.len() < 2 {
            return Err(RogError::Spec("need at least two class means".into()));
        }
        if let Some(c) = self.class_means.iter().position(|m| m.len() != d) {
            return Err(RogError::Spec(format!(
                "class mean {c} has length {}, expected {d}",
                self.class_means[c].len()
            )));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.out_mean) || !self.class_means.iter().all(|m| finite(m)) {
            return Err(RogError::Spec("means must be finite".into()));
        }
        Ok(())
    }
}

fn isotropic_rows(mean: &DVector<f64>, sigma2: f64, n: usize, rng: &mut Rng) -> DMatrix<f64> {
    let sd = sigma2.sqrt();
    let d = mean.len();
    let mut out = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            let z: f64 = StandardNormal.sample(rng);
            out[(i, j)] = mean[j] + sd * z;
        }
    }
    out
}

/// One contaminated class: `floor((1 - delta) n)` clean rows then outliers.
pub fn sample_contaminated(
    mean: &DVector<f64>,
    sigma2: f64,
    out_mean: &DVector<f64>,
    out_sigma2: f64,
    delta: f64,
    n: usize,
    rng: &mut Rng,
) -> (DMatrix<f64>, Vec<bool>) {
    let n_clean = ((1.0 - delta) * n as f64).floor() as usize;
    let clean = isotropic_rows(mean, sigma2, n_clean, rng);
    let outliers = isotropic_rows(out_mean, out_sigma2, n - n_clean, rng);
    let d = mean.len();
    let mut rows = DMatrix::zeros(n, d);
    rows.rows_mut(0, n_clean).copy_from(&clean);
    rows.rows_mut(n_clean, n - n_clean).copy_from(&outliers);
    let mask = (0..n).map(|i| i >= n_clean).collect();
    (rows, mask)
}

/// `classes` mean vectors with i.i.d. `N(0, scale^2)` coordinates.
pub fn random_class_means(classes: usize, dim: usize, scale: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, u64::MAX);
    (0..classes)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                })
                .collect()
        })
        .collect()
}

/// Draws the full labeled set. Class `c` uses random stream `c` of `spec.seed`,
/// so rows are grouped by class and outliers sit at the end of each group.
pub fn synthesize(spec: &SynthSpec) -> Result<(FeatureSet, Vec<bool>)> {
    spec.validate()?;
    let (c_count, d, n) = (spec.num_classes(), spec.dim(), spec.n_per_class);
    let out_mean = spec.out_mean_vec();
    let mut features = DMatrix::zeros(c_count * n, d);
    let mut labels = Vec::with_capacity(c_count * n);
    let mut mask = Vec::with_capacity(c_count * n);
    for c in 0..c_count {
        let mut rng = rng::stream(spec.seed, c as u64);
        let (rows, m) = sample_contaminated(
            &spec.class_mean(c),
            spec.sigma2,
            &out_mean,
            spec.out_sigma2,
            spec.delta_out,
            n,
            &mut rng,
        );
        features.rows_mut(c * n, n).copy_from(&rows);
        labels.extend(std::iter::repeat_n(c, n));
        mask.extend(m);
    }
    Ok((FeatureSet::new(features, labels, c_count)?, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(delta: f64) -> SynthSpec {
        SynthSpec {
            class_means: vec![vec![2.0, 0.0], vec![-2.0, 1.0]],
            sigma2: 1.0,
            out_mean: vec![0.0, 0.0],
            out_sigma2: 4.0,
            delta_out: delta,
            n_per_class: 10,
            seed: 3,
        }
    }

    #[test]
    fn layout_and_mask() {
        let (ds, mask) = synthesize(&spec(0.25)).unwrap();
        assert_eq!(ds.len(), 20);
        assert_eq!(ds.labels()[..10], [0; 10]);
        // floor(0.75 * 10) = 7 clean rows per class.
        let expected: Vec<bool> = (0..20).map(|i| i % 10 >= 7).collect();
        assert_eq!(mask, expected);
    }

    #[test]
    fn deterministic() {
        assert_eq!(synthesize(&spec(0.3)).unwrap(), synthesize(&spec(0.3)).unwrap());
        let mut other = spec(0.3);
        other.seed = 4;
        assert_ne!(synthesize(&spec(0.3)).unwrap().0, synthesize(&other).unwrap().0);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = spec(0.1);
        s.sigma2 = 0.0;
        assert!(matches!(synthesize(&s), Err(RogError::Spec(_))));
        let mut s = spec(0.1);
        s.out_sigma2 = -1.0;
        assert!(matches!(synthesize(&s), Err(RogError::Spec(_))));
        assert!(matches!(synthesize(&spec(1.0)), Err(RogError::Spec(_))));
        let mut s = spec(0.1);
        s.class_means[1].push(0.0);
        assert!(matches!(synthesize(&s), Err(RogError::Spec(_))));
    }
}
