//! Multi-layer ensembles of Gaussian classifiers.
//!
//! Each layer gets its own tied-covariance model. Validation rows far from
//! their labeled class under the deepest layer's robust fit are dropped, and
//! layer weights on the simplex are fitted by minimizing the mixture NLL of
//! the remaining rows.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{fit_gaussian, Estimator, FitConfig, GaussianClassifierParams, Posterior};
use crate::data::FeatureSet;
use crate::error::{Result, RogError};
use crate::linalg;

pub const DEFAULT_KEEP: usize = 500;
pub const EG_STEP: f64 = 0.5;
pub const EG_ITERS: usize = 500;

/// Several feature views of the same rows, shallow to deep.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredFeatureSet {
    ids: Vec<String>,
    layers: Vec<FeatureSet>,
}

impl LayeredFeatureSet {
    pub fn new(layers: Vec<(String, FeatureSet)>) -> Result<Self> {
        let Some((_, first)) = layers.first() else {
            return Err(RogError::Validation("at least one layer is required".into()));
        };
        for (id, l) in &layers[1..] {
            if l.len() != first.len() || l.labels() != first.labels() || l.num_classes() != first.num_classes() {
                return Err(RogError::Validation(format!(
                    "layer `{id}` does not share rows and labels with the first layer"
                )));
            }
        }
        let (ids, layers) = layers.into_iter().unzip();
        Ok(Self { ids, layers })
    }

    pub fn single(ds: FeatureSet) -> Self {
        Self {
            ids: vec!["0".into()],
            layers: vec![ds],
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn len(&self) -> usize {
        self.layers[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers[0].is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        self.layers[0].labels()
    }

    pub fn num_classes(&self) -> usize {
        self.layers[0].num_classes()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn layer(&self, l: usize) -> &FeatureSet {
        &self.layers[l]
    }

    pub fn layers(&self) -> &[FeatureSet] {
        &self.layers
    }

    pub fn last(&self) -> &FeatureSet {
        self.layers.last().expect("non-empty")
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            ids: self.ids.clone(),
            layers: self.layers.iter().map(|l| l.subset(indices)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub id: String,
    pub params: GaussianClassifierParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub layers: Vec<Layer>,
    /// On the probability simplex.
    pub weights: Vec<f64>,
}

impl EnsembleModel {
    pub fn new(layers: Vec<Layer>, weights: Vec<f64>) -> Result<Self> {
        let m = Self { layers, weights };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() || self.layers.len() != self.weights.len() {
            return Err(RogError::Validation(format!(
                "{} layers with {} weights",
                self.layers.len(),
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(RogError::Validation("ensemble weights must lie on the simplex".into()));
        }
        let c = self.layers[0].params.num_classes();
        if self.layers.iter().any(|l| l.params.num_classes() != c) {
            return Err(RogError::Validation("layers disagree on the number of classes".into()));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.layers[0].params.num_classes()
    }

    fn check_inputs(&self, inputs: &[&DMatrix<f64>]) -> Result<()> {
        if inputs.len() != self.layers.len() {
            return Err(RogError::Dimension(format!(
                "{} inputs for {} layers",
                inputs.len(),
                self.layers.len()
            )));
        }
        if inputs.iter().any(|x| x.nrows() != inputs[0].nrows()) {
            return Err(RogError::Dimension("layer inputs differ in row count".into()));
        }
        Ok(())
    }

    pub fn layer_log_posteriors(&self, inputs: &[&DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
        self.check_inputs(inputs)?;
        self.layers
            .iter()
            .zip(inputs)
            .map(|(l, x)| l.params.log_posteriors(x))
            .collect()
    }

    /// `log sum_l alpha_l P_l(c | x)` per row and class.
    pub fn log_posteriors(&self, inputs: &[&DMatrix<f64>]) -> Result<DMatrix<f64>> {
        let per_layer = self.layer_log_posteriors(inputs)?;
        Ok(mix_log_posteriors(&per_layer, &self.weights))
    }

    pub fn inputs_of<'a>(&self, data: &'a LayeredFeatureSet) -> Vec<&'a DMatrix<f64>> {
        data.layers().iter().map(|l| l.features()).collect()
    }
}

/// Convex combination of per-layer posteriors, carried out in log space.
pub fn mix_log_posteriors(per_layer: &[DMatrix<f64>], weights: &[f64]) -> DMatrix<f64> {
    let (n, c) = per_layer[0].shape();
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let mut buf = vec![0.0; per_layer.len()];
    DMatrix::from_fn(n, c, |i, k| {
        for (l, lp) in per_layer.iter().enumerate() {
            buf[l] = log_w[l] + lp[(i, k)];
        }
        linalg::log_sum_exp(&buf)
    })
}

/// Probability-space ensemble posterior.
pub fn ensemble_posterior(model: &EnsembleModel, inputs: &[&DMatrix<f64>]) -> Result<DMatrix<f64>> {
    Ok(model.log_posteriors(inputs)?.map(f64::exp))
}

/// Indices of the `keep` rows closest to their own labeled class mean under
/// `params`, ascending. Ties go to the lower index.
pub fn filter_indices(val: &FeatureSet, params: &GaussianClassifierParams, keep: usize) -> Result<Vec<usize>> {
    if keep > val.len() {
        return Err(RogError::Config(format!(
            "cannot keep {keep} of {} validation rows",
            val.len()
        )));
    }
    let dist = params.mahalanobis_all(val.features())?;
    let own: Vec<f64> = val.labels().iter().enumerate().map(|(i, &y)| dist[(i, y)]).collect();
    Ok(linalg::k_smallest(&own, keep))
}

pub fn filter_validation(val: &FeatureSet, params: &GaussianClassifierParams, keep: usize) -> Result<FeatureSet> {
    Ok(val.subset(&filter_indices(val, params, keep)?))
}

/// Mean mixture NLL, given `a[l][i] = log P_l(y_i | x_i)`.
pub fn mixture_nll(a: &[Vec<f64>], weights: &[f64]) -> f64 {
    let n = a[0].len();
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    let mut buf = vec![0.0; a.len()];
    let mut total = 0.0;
    for i in 0..n {
        for l in 0..a.len() {
            buf[l] = log_w[l] + a[l][i];
        }
        total -= linalg::log_sum_exp(&buf);
    }
    total / n as f64
}

/// Simplex weights minimizing the mixture NLL of the true labels, by
/// exponentiated gradient from the uniform point. A single layer whose NLL
/// is strictly lower than the iterate's is returned instead.
pub fn fit_weights(layer_log_posteriors: &[DMatrix<f64>], labels: &[usize]) -> Result<Vec<f64>> {
    let l_count = layer_log_posteriors.len();
    if l_count == 0 || labels.is_empty() {
        return Err(RogError::Validation("weight fitting needs at least one layer and one row".into()));
    }
    if layer_log_posteriors.iter().any(|lp| lp.nrows() != labels.len()) {
        return Err(RogError::Dimension("posterior rows do not match labels".into()));
    }
    let n = labels.len();
    let a: Vec<Vec<f64>> = layer_log_posteriors
        .iter()
        .map(|lp| labels.iter().enumerate().map(|(i, &y)| lp[(i, y)]).collect())
        .collect();
    for i in 0..n {
        if a.iter().all(|al| al[i] == f64::NEG_INFINITY) {
            return Err(RogError::Degenerate(format!(
                "row {i} has zero likelihood under every layer"
            )));
        }
    }
    if l_count == 1 {
        return Ok(vec![1.0]);
    }

    let mut log_w = vec![-(l_count as f64).ln(); l_count];
    let mut buf = vec![0.0; l_count];
    let mut grad = vec![0.0; l_count];
    for _ in 0..EG_ITERS {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for i in 0..n {
            for l in 0..l_count {
                buf[l] = log_w[l] + a[l][i];
            }
            let m = linalg::log_sum_exp(&buf);
            for l in 0..l_count {
                grad[l] -= (a[l][i] - m).exp();
            }
        }
        for l in 0..l_count {
            log_w[l] -= EG_STEP * grad[l] / n as f64;
        }
        let z = linalg::log_sum_exp(&log_w);
        log_w.iter_mut().for_each(|v| *v -= z);
    }
    let mut weights: Vec<f64> = log_w.iter().map(|v| v.exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);

    let mut best = mixture_nll(&a, &weights);
    for l in 0..l_count {
        let mut vertex = vec![0.0; l_count];
        vertex[l] = 1.0;
        let v = mixture_nll(&a, &vertex);
        if v < best - 1e-12 * best.abs().max(1.0) {
            best = v;
            weights = vertex;
        }
    }
    Ok(weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RogConfig {
    pub estimator: Estimator,
    pub fit: FitConfig,
    /// Validation rows kept after filtering, capped at the validation size.
    pub keep: usize,
}

impl Default for RogConfig {
    fn default() -> Self {
        Self {
            estimator: Estimator::Mcd,
            fit: FitConfig::default(),
            keep: DEFAULT_KEEP,
        }
    }
}

/// Fits one classifier per layer on `train`, filters `val` with the last
/// layer's model and fits the layer weights on what remains.
pub fn build_rog(train: &LayeredFeatureSet, val: &LayeredFeatureSet, cfg: &RogConfig) -> Result<EnsembleModel> {
    if train.num_layers() != val.num_layers()
        || train.num_classes() != val.num_classes()
        || train.layers().iter().zip(val.layers()).any(|(a, b)| a.dim() != b.dim())
    {
        return Err(RogError::Dimension("training and validation layers do not line up".into()));
    }
    let params: Vec<GaussianClassifierParams> = train
        .layers()
        .par_iter()
        .map(|ds| fit_gaussian(ds, cfg.estimator, &cfg.fit))
        .collect::<Result<_>>()?;
    let layers: Vec<Layer> = train
        .ids()
        .iter()
        .cloned()
        .zip(params)
        .map(|(id, params)| Layer { id, params })
        .collect();
    let keep = cfg.keep.min(val.len());
    let kept = filter_indices(val.last(), &layers.last().expect("non-empty").params, keep)?;
    let filtered = val.subset(&kept);
    let per_layer: Vec<DMatrix<f64>> = layers
        .iter()
        .zip(filtered.layers())
        .map(|(l, ds)| l.params.log_posteriors(ds.features()))
        .collect::<Result<_>>()?;
    let weights = fit_weights(&per_layer, filtered.labels())?;
    EnsembleModel::new(layers, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn lp(rows: &[&[f64]]) -> DMatrix<f64> {
        let c = rows[0].len();
        DMatrix::from_fn(rows.len(), c, |i, k| rows[i][k].ln())
    }

    #[test]
    fn single_layer_gets_all_weight() {
        let a = lp(&[&[0.7, 0.3], &[0.4, 0.6]]);
        assert_eq!(fit_weights(&[a], &[0, 1]).unwrap(), vec![1.0]);
    }

    #[test]
    fn perfect_layer_dominates() {
        let perfect = lp(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let uniform = DMatrix::from_element(3, 3, (1.0f64 / 3.0).ln());
        let w = fit_weights(&[perfect, uniform], &[0, 1, 2]).unwrap();
        assert!(w[0] >= 0.99, "{w:?}");
    }

    #[test]
    fn identical_layers_stay_uniform() {
        let a = lp(&[&[0.7, 0.3], &[0.4, 0.6], &[0.2, 0.8]]);
        let w = fit_weights(&[a.clone(), a.clone(), a], &[0, 1, 0]).unwrap();
        for v in &w {
            assert!((v - 1.0 / 3.0).abs() < 1e-12, "{w:?}");
        }
    }

    #[test]
    fn beats_a_fine_grid() {
        let a = lp(&[&[0.9, 0.1], &[0.3, 0.7], &[0.6, 0.4], &[0.2, 0.8]]);
        let b = lp(&[&[0.5, 0.5], &[0.1, 0.9], &[0.1, 0.9], &[0.45, 0.55]]);
        let labels = [0, 1, 0, 1];
        let w = fit_weights(&[a.clone(), b.clone()], &labels).unwrap();
        let cols: Vec<Vec<f64>> = [&a, &b]
            .iter()
            .map(|m| labels.iter().enumerate().map(|(i, &y)| m[(i, y)]).collect())
            .collect();
        let fitted = mixture_nll(&cols, &w);
        let grid = (0..=100)
            .map(|k| mixture_nll(&cols, &[k as f64 / 100.0, 1.0 - k as f64 / 100.0]))
            .fold(f64::INFINITY, f64::min);
        assert!(fitted <= grid + 1e-9, "{fitted} vs {grid}");
    }

    #[test]
    fn mixing_examples() {
        let a = lp(&[&[1.0, 0.0]]);
        let b = lp(&[&[0.0, 1.0]]);
        let mixed = mix_log_posteriors(&[a.clone(), b.clone()], &[0.5, 0.5]).map(f64::exp);
        assert!((mixed[(0, 0)] - 0.5).abs() < 1e-15 && (mixed[(0, 1)] - 0.5).abs() < 1e-15);
        let one_hot = mix_log_posteriors(&[a.clone(), b], &[1.0, 0.0]);
        assert_eq!(one_hot, a);
    }

    #[test]
    fn filter_keeps_the_closest() {
        let ds = FeatureSet::from_rows(&[vec![0.1], vec![5.0], vec![0.2]], vec![0, 0, 0], 2).unwrap();
        let m = vec![DVector::from_vec(vec![0.0]), DVector::from_vec(vec![100.0])];
        let p = GaussianClassifierParams::tied(&m, &DMatrix::identity(1, 1), &[1.0, 1.0], 0.0).unwrap();
        assert_eq!(filter_indices(&ds, &p, 2).unwrap(), vec![0, 2]);
        assert_eq!(filter_validation(&ds, &p, 3).unwrap(), ds);
        assert!(matches!(filter_indices(&ds, &p, 4), Err(RogError::Config(_))));
    }

    #[test]
    fn layered_sets_must_agree() {
        let a = FeatureSet::from_rows(&[vec![0.0], vec![1.0]], vec![0, 1], 2).unwrap();
        let b = FeatureSet::from_rows(&[vec![0.0, 2.0], vec![1.0, 3.0]], vec![1, 0], 2).unwrap();
        assert!(LayeredFeatureSet::new(vec![("a".into(), a.clone()), ("b".into(), b)]).is_err());
        let c = FeatureSet::from_rows(&[vec![0.0, 2.0], vec![1.0, 3.0]], vec![0, 1], 2).unwrap();
        let l = LayeredFeatureSet::new(vec![("a".into(), a), ("c".into(), c)]).unwrap();
        assert_eq!(l.num_layers(), 2);
        assert!(LayeredFeatureSet::new(vec![]).is_err());
    }
}
