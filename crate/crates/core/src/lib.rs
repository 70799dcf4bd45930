//! Robust generative classifiers for features learned under noisy labels.
//!
//! The crate fits linear-discriminant (tied covariance) Gaussian classifiers on
//! exported feature vectors. Class parameters come from either the plain sample
//! estimator or the Minimum Covariance Determinant (MCD) estimator, which keeps
//! only the most concentrated subset of each class and so ignores mislabeled
//! samples that sit away from the class cluster. Per-layer classifiers can be
//! combined into a weighted posterior ensemble.
//!
//! Modules:
//!
//! * [`data`]: feature sets, file formats, label corruption, synthetic data.
//! * [`estimators`]: sample, MCD, LTS and trimmed k-means estimators.
//! * [`classifier`]: generative and softmax posteriors, logistic baseline.
//! * [`ensemble`]: validation filtering, weight fitting, layer ensembles.
//! * [`analysis`]: condition-number factor, contamination limits, breakdown sweeps.
//! * [`bench`]: the synthetic estimator-by-noise-rate benchmark.

pub mod analysis;
pub mod bench;
pub mod classifier;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod rng;

pub use error::{Result, RogError};
