use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pool_covariances, priors_from_counts, ClassStats, PriorKind};
use crate::data::FeatureSet;
use crate::error::{Result, RogError};
use crate::linalg::{self, SpdFactor};
use crate::rng;

/// Largest number of subsets exact enumeration will visit.
pub const EXACT_ENUMERATION_CAP: u128 = 1_000_000;

/// Relative determinant decrease below which concentration stops.
const MIN_RELATIVE_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McdMode {
    /// Random restarts followed by concentration steps.
    #[default]
    CStep,
    /// Visit every subset of the requested size.
    Exact,
}

/// How each restart picks its first subset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McdStart {
    /// A uniformly random subset of size `K`.
    #[default]
    RandomSubset,
    /// A random `(d + 1)`-subset whose estimate ranks all points; the `K`
    /// closest form the first subset.
    Elemental,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McdConfig {
    /// Subset size `K`. Defaults to `floor((N_c + d + 1) / 2)` per class.
    pub subset_size: Option<usize>,
    pub max_iters: usize,
    pub restarts: usize,
    /// Ridge relative to a robust per-class scale, held fixed while the
    /// subset changes.
    pub ridge: f64,
    pub mode: McdMode,
    pub start: McdStart,
    pub priors: PriorKind,
    pub seed: u64,
}

impl Default for McdConfig {
    fn default() -> Self {
        Self {
            subset_size: None,
            max_iters: 2,
            restarts: 10,
            ridge: linalg::DEFAULT_RIDGE,
            mode: McdMode::CStep,
            start: McdStart::RandomSubset,
            priors: PriorKind::Uniform,
            seed: 0,
        }
    }
}

impl McdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(RogError::Config("restarts must be at least 1".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(RogError::Config(format!("ridge {} must be >= 0", self.ridge)));
        }
        Ok(())
    }
}

pub fn default_subset_size(n: usize, d: usize) -> usize {
    (n + d + 1) / 2
}

/// Result of fitting one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McdClassFit {
    pub class: usize,
    /// Row indices of the selected subset, ascending.
    pub indices: Vec<usize>,
    pub stats: ClassStats,
    /// Log-determinant of the subset covariance plus `ridge * I`.
    pub log_det: f64,
    pub ridge: f64,
    /// Per restart: log-determinant after the first subset and after each
    /// concentration step. Empty in exact mode and for restarts whose first
    /// subset was singular.
    pub traces: Vec<Vec<f64>>,
    pub best_restart: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McdFit {
    pub classes: Vec<McdClassFit>,
}

/// Flat view of one class fit for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McdClassReport {
    pub class: usize,
    pub indices: Vec<usize>,
    pub mean: Vec<f64>,
    /// Row-major.
    pub covariance: Vec<Vec<f64>>,
    pub log_det: f64,
}

impl McdFit {
    pub fn report(&self) -> Vec<McdClassReport> {
        self.classes
            .iter()
            .map(|f| McdClassReport {
                class: f.class,
                indices: f.indices.clone(),
                mean: f.stats.mean.iter().copied().collect(),
                covariance: f
                    .stats
                    .covariance
                    .row_iter()
                    .map(|r| r.iter().copied().collect())
                    .collect(),
                log_det: f.log_det,
            })
            .collect()
    }

    pub fn stats(&self) -> Vec<ClassStats> {
        self.classes.iter().map(|f| f.stats.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McdEstimate {
    pub fit: McdFit,
    /// `sum_c K_c cov_c / sum_c K_c`.
    pub tied_covariance: DMatrix<f64>,
    pub priors: Vec<f64>,
}

struct Candidate {
    indices: Vec<usize>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    factor: SpdFactor,
}

fn evaluate(points: &DMatrix<f64>, indices: Vec<usize>, ridge: f64) -> Result<Candidate> {
    let sub = points.select_rows(indices.iter());
    let (mean, cov) = linalg::mean_and_covariance(&sub);
    let factor = SpdFactor::new(&cov, ridge)?;
    Ok(Candidate {
        indices,
        mean,
        cov,
        factor,
    })
}

fn c_step(points: &DMatrix<f64>, from: &Candidate, k: usize, ridge: f64) -> Result<Candidate> {
    let dist = from.factor.mahalanobis_rows(points, &from.mean);
    evaluate(points, linalg::k_smallest(&dist, k), ridge)
}

fn binomial_capped(n: usize, k: usize, cap: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap {
            return None;
        }
    }
    Some(acc)
}

/// Advances `idx` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Fits MCD to the rows of `points`. `class` only selects the random stream
/// and labels the result.
pub fn mcd_fit_class(points: &DMatrix<f64>, cfg: &McdConfig, class: usize) -> Result<McdClassFit> {
    cfg.validate()?;
    let n = points.nrows();
    let d = points.ncols();
    if n == 0 {
        return Err(RogError::EmptyClass(class));
    }
    let k = cfg.subset_size.unwrap_or_else(|| default_subset_size(n, d));
    if n <= d {
        return Err(RogError::Config(format!(
            "class {class} has {n} rows, needs more than d = {d}"
        )));
    }
    if k <= d || k > n {
        return Err(RogError::Config(format!(
            "subset size {k} for class {class} must satisfy {d} < K <= {n}"
        )));
    }
    let scale = linalg::robust_scale(points);
    let ridge = if scale > 0.0 { cfg.ridge * scale } else { cfg.ridge };

    let (best, traces, best_restart) = match cfg.mode {
        McdMode::Exact => (exact(points, k, ridge, class)?, Vec::new(), 0),
        McdMode::CStep => {
            let mut best: Option<(Candidate, usize)> = None;
            let mut traces = Vec::with_capacity(cfg.restarts);
            let mut failure = None;
            for r in 0..cfg.restarts {
                let mut rng = rng::stream(cfg.seed, rng::mix(class as u64, r as u64));
                let (cand, trace) = match concentrate(points, k, ridge, cfg, &mut rng) {
                    Ok(found) => found,
                    Err(e @ RogError::SingularCovariance(_)) => {
                        failure = Some(e);
                        traces.push(Vec::new());
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                traces.push(trace);
                if best
                    .as_ref()
                    .is_none_or(|(b, _)| cand.factor.log_det() < b.factor.log_det())
                {
                    best = Some((cand, r));
                }
            }
            let Some((b, r)) = best else {
                return Err(failure.expect("every restart failed"));
            };
            (b, traces, r)
        }
    };
    Ok(McdClassFit {
        class,
        log_det: best.factor.log_det(),
        stats: ClassStats {
            mean: best.mean,
            covariance: best.cov,
            count: k,
        },
        indices: best.indices,
        ridge,
        traces,
        best_restart,
    })
}

fn concentrate(
    points: &DMatrix<f64>,
    k: usize,
    ridge: f64,
    cfg: &McdConfig,
    rng: &mut rng::Rng,
) -> Result<(Candidate, Vec<f64>)> {
    let n = points.nrows();
    let first = match cfg.start {
        McdStart::RandomSubset => {
            let mut idx = index::sample(rng, n, k).into_vec();
            idx.sort_unstable();
            idx
        }
        McdStart::Elemental => {
            // grow a random (d + 1)-subset until its covariance is invertible
            let d = points.ncols();
            let order = index::sample(rng, n, n).into_vec();
            let mut size = (d + 1).min(n);
            let seed = loop {
                let mut idx = order[..size].to_vec();
                idx.sort_unstable();
                match evaluate(points, idx, ridge) {
                    Ok(c) => break c,
                    Err(RogError::SingularCovariance(_)) if size < n => size += 1,
                    Err(e) => return Err(e),
                }
            };
            let dist = seed.factor.mahalanobis_rows(points, &seed.mean);
            linalg::k_smallest(&dist, k)
        }
    };
    let mut cur = evaluate(points, first, ridge)?;
    let mut trace = vec![cur.factor.log_det()];
    for _ in 0..cfg.max_iters {
        let next = match c_step(points, &cur, k, ridge) {
            Ok(next) => next,
            Err(RogError::SingularCovariance(_)) => break,
            Err(e) => return Err(e),
        };
        if next.indices == cur.indices {
            break;
        }
        let step = next.factor.log_det() - cur.factor.log_det();
        trace.push(next.factor.log_det());
        let decrease = -step.exp_m1();
        cur = next;
        if decrease < MIN_RELATIVE_DECREASE {
            break;
        }
    }
    Ok((cur, trace))
}

fn exact(points: &DMatrix<f64>, k: usize, ridge: f64, class: usize) -> Result<Candidate> {
    let n = points.nrows();
    if binomial_capped(n, k, EXACT_ENUMERATION_CAP).is_none() {
        return Err(RogError::Config(format!(
            "exact search over C({n}, {k}) subsets for class {class} exceeds {EXACT_ENUMERATION_CAP}"
        )));
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best: Option<Candidate> = None;
    loop {
        match evaluate(points, idx.clone(), ridge) {
            Ok(c) => {
                if best
                    .as_ref()
                    .is_none_or(|b| c.factor.log_det() < b.factor.log_det())
                {
                    best = Some(c);
                }
            }
            Err(RogError::SingularCovariance(_)) => {}
            Err(e) => return Err(e),
        }
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    best.ok_or_else(|| {
        RogError::SingularCovariance(format!("every {k}-subset of class {class} is singular"))
    })
}

/// Per-class MCD, pooled into a tied covariance weighted by subset sizes.
pub fn mcd_estimate(ds: &FeatureSet, cfg: &McdConfig) -> Result<McdEstimate> {
    cfg.validate()?;
    let classes: Vec<McdClassFit> = (0..ds.num_classes())
        .into_par_iter()
        .map(|c| {
            let idx = ds.class_indices(c);
            if idx.is_empty() {
                return Err(RogError::EmptyClass(c));
            }
            let mut fit = mcd_fit_class(&ds.features().select_rows(idx.iter()), cfg, c)?;
            for i in fit.indices.iter_mut() {
                *i = idx[*i];
            }
            Ok(fit)
        })
        .collect::<Result<_>>()?;
    let counts: Vec<usize> = classes.iter().map(|f| f.stats.count).collect();
    let weights: Vec<f64> = counts.iter().map(|&k| k as f64).collect();
    let fit = McdFit { classes };
    let tied_covariance = pool_covariances(&fit.stats(), &weights);
    Ok(McdEstimate {
        tied_covariance,
        priors: priors_from_counts(&counts, cfg.priors),
        fit,
    })
}
