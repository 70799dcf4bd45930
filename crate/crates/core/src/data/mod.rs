//! Feature sets and everything that produces or transforms them.

mod io;
mod noise;
mod pool;
mod split;
mod synth;

pub use io::{
    decode_rogf, encode_rogf, load_feature_set, load_mask, mask_path, save_feature_set,
    save_mask, Format, ROGF_MAGIC, ROGF_VERSION,
};
pub use noise::{inject_noise, NoiseKind, NoiseSpec};
pub use pool::{average_pool, Tensor4};
pub use split::split;
pub use synth::{random_class_means, sample_contaminated, synthesize, SynthSpec};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RogError};

/// `N x d` features with one class label per row.
///
/// Immutable once built. Every feature is finite and every label is below
/// `num_classes`. Sets loaded from disk or built with [`FeatureSet::new`] have
/// at least one row; [`FeatureSet::subset`] may produce an empty set (for
/// example an empty validation split).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    features: DMatrix<f64>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl FeatureSet {
    pub fn new(features: DMatrix<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(RogError::Validation("feature set has no rows".into()));
        }
        Self::with_rows(features, labels, num_classes)
    }

    fn with_rows(features: DMatrix<f64>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.ncols() == 0 {
            return Err(RogError::Validation("feature dimension must be >= 1".into()));
        }
        if num_classes < 2 {
            return Err(RogError::Validation(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if features.nrows() != labels.len() {
            return Err(RogError::Dimension(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            let n = features.nrows();
            return Err(RogError::Validation(format!(
                "non-finite feature at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(RogError::Validation(format!(
                "label {y} at row {i} is out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
        })
    }

    /// Builds a set from row slices.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(RogError::Dimension(format!(
                "row {i} has {} values, expected {d}",
                rows[i].len()
            )));
        }
        let features = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(features, labels, num_classes)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.features.row(i).transpose()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Row indices labeled `class`, ascending.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &y)| y == class)
            .map(|(i, _)| i)
            .collect()
    }

    /// Rows labeled `class` as their own matrix.
    pub fn class_rows(&self, class: usize) -> DMatrix<f64> {
        self.features.select_rows(&self.class_indices(class))
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> FeatureSet {
        FeatureSet {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// Same features with replacement labels.
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<FeatureSet> {
        Self::with_rows(self.features.clone(), labels, self.num_classes)
    }

    /// Same labels with replacement features (the dimension may change).
    pub fn with_features(&self, features: DMatrix<f64>) -> Result<FeatureSet> {
        Self::with_rows(features, self.labels.clone(), self.num_classes)
    }

    pub fn into_parts(self) -> (DMatrix<f64>, Vec<usize>, usize) {
        (self.features, self.labels, self.num_classes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_sets() {
        let f = DMatrix::from_row_slice(2, 1, &[0.0, f64::NAN]);
        assert!(matches!(
            FeatureSet::new(f, vec![0, 1], 2),
            Err(RogError::Validation(_))
        ));
        let f = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(matches!(
            FeatureSet::new(f.clone(), vec![0, 2], 2),
            Err(RogError::Validation(_))
        ));
        assert!(matches!(
            FeatureSet::new(f.clone(), vec![0, 0], 1),
            Err(RogError::Validation(_))
        ));
        assert!(matches!(
            FeatureSet::new(f, vec![0], 2),
            Err(RogError::Dimension(_))
        ));
        assert!(matches!(
            FeatureSet::from_rows(&[vec![1.0, 2.0], vec![1.0]], vec![0, 1], 2),
            Err(RogError::Dimension(_))
        ));
    }

    #[test]
    fn class_views() {
        let ds = FeatureSet::from_rows(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            vec![1, 0, 1, 1],
            3,
        )
        .unwrap();
        assert_eq!(ds.class_counts(), vec![1, 3, 0]);
        assert_eq!(ds.class_indices(1), vec![0, 2, 3]);
        assert_eq!(ds.class_rows(1).as_slice(), &[0.0, 2.0, 3.0]);
        let sub = ds.subset(&[3, 1]);
        assert_eq!(sub.labels(), &[1, 0]);
        assert_eq!(sub.features().as_slice(), &[3.0, 1.0]);
        assert!(ds.subset(&[]).is_empty());
    }
}
