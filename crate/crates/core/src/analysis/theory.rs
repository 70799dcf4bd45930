use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{generalization_bound_term, phi};
use crate::classifier::GaussianClassifierParams;
use crate::data::{synthesize, SynthSpec};
use crate::error::{Result, RogError};
use crate::estimators::{default_subset_size, mcd_estimate, sample_estimate, McdConfig};
use crate::linalg::DEFAULT_RIDGE;
use crate::rng;

/// A modeling assumption the synthetic spec does not meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssumptionWarning {
    /// Outlier variance does not exceed the clean variance.
    OutliersNotWider,
    /// `delta_out >= 1 - K_c / N_c`.
    TooManyOutliers,
    /// `K_c / N_c <= d / N_c`.
    SubsetTooSmall,
}

impl fmt::Display for AssumptionWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssumptionWarning::OutliersNotWider => "outlier variance is not larger than the clean variance",
            AssumptionWarning::TooManyOutliers => "outlier fraction reaches the untrimmed fraction",
            AssumptionWarning::SubsetTooSmall => "subset fraction does not exceed d / N_c",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub n_samples: usize,
    pub delta_out: f64,
    pub delta_mcd: f64,
    /// `||mu_c - mu_hat_c||_1` per class.
    pub mean_error_mcd: Vec<f64>,
    pub mean_error_sample: Vec<f64>,
    /// Limit of the sample error, `delta_out ||mu_c - mu_out||_1`.
    pub expected_error_sample: Vec<f64>,
    pub phi_mcd: f64,
    pub phi_sample: f64,
    pub margin_ratio: f64,
    pub bound_mcd: f64,
    pub bound_sample: f64,
    pub warnings: Vec<AssumptionWarning>,
}

/// Flat CSV row, class errors averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryRow {
    pub n: usize,
    pub delta_out: f64,
    pub err_mcd_l1: f64,
    pub err_sample_l1: f64,
    pub phi_mcd: f64,
    pub phi_sample: f64,
    pub margin_ratio: f64,
    pub bound_mcd: f64,
    pub bound_sample: f64,
}

impl TheoryReport {
    pub fn row(&self) -> TheoryRow {
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        TheoryRow {
            n: self.n_samples,
            delta_out: self.delta_out,
            err_mcd_l1: avg(&self.mean_error_mcd),
            err_sample_l1: avg(&self.mean_error_sample),
            phi_mcd: self.phi_mcd,
            phi_sample: self.phi_sample,
            margin_ratio: self.margin_ratio,
            bound_mcd: self.bound_mcd,
            bound_sample: self.bound_sample,
        }
    }
}

fn warnings_for(spec: &SynthSpec, delta_mcd: f64) -> Vec<AssumptionWarning> {
    let mut w = Vec::new();
    if !spec.outliers_wider() {
        w.push(AssumptionWarning::OutliersNotWider);
    }
    if spec.delta_out >= 1.0 - delta_mcd {
        w.push(AssumptionWarning::TooManyOutliers);
    }
    if delta_mcd <= spec.dim() as f64 / spec.n_per_class as f64 {
        w.push(AssumptionWarning::SubsetTooSmall);
    }
    w
}

fn single_report(spec: &SynthSpec, cfg: &McdConfig) -> Result<TheoryReport> {
    let (ds, _) = synthesize(spec)?;
    let n = spec.n_per_class;
    let k = cfg.subset_size.unwrap_or_else(|| default_subset_size(n, spec.dim()));
    let delta_mcd = k as f64 / n as f64;

    let sample = GaussianClassifierParams::from_sample(&sample_estimate(&ds)?, DEFAULT_RIDGE)?;
    let robust = GaussianClassifierParams::from_mcd(&mcd_estimate(&ds, cfg)?, DEFAULT_RIDGE)?;
    let out = spec.out_mean_vec();
    let l1 = |p: &GaussianClassifierParams, c: usize| (p.mean(c) - spec.class_mean(c)).lp_norm(1);
    let c_count = spec.num_classes();
    let phi_mcd = phi(&robust.tied_covariance)?;
    let phi_sample = phi(&sample.tied_covariance)?;

    let mut ratio = 0.0;
    let mut pairs = 0;
    for a in 0..c_count {
        for b in a + 1..c_count {
            let num = phi_mcd * (robust.mean(a) - robust.mean(b)).norm();
            let den = phi_sample * (sample.mean(a) - sample.mean(b)).norm();
            ratio += num / den;
            pairs += 1;
        }
    }
    let margin_ratio = ratio / pairs as f64;
    if !margin_ratio.is_finite() {
        return Err(RogError::Degenerate("sample class means coincide".into()));
    }

    Ok(TheoryReport {
        n_samples: n,
        delta_out: spec.delta_out,
        delta_mcd,
        mean_error_mcd: (0..c_count).map(|c| l1(&robust, c)).collect(),
        mean_error_sample: (0..c_count).map(|c| l1(&sample, c)).collect(),
        expected_error_sample: (0..c_count)
            .map(|c| spec.delta_out * (spec.class_mean(c) - &out).lp_norm(1))
            .collect(),
        phi_mcd,
        phi_sample,
        margin_ratio,
        bound_mcd: generalization_bound_term(&robust, spec.sigma2)?,
        bound_sample: generalization_bound_term(&sample, spec.sigma2)?,
        warnings: warnings_for(spec, delta_mcd),
    })
}

fn cell_spec(spec: &SynthSpec, n: usize, delta: f64, seed: u64) -> SynthSpec {
    SynthSpec {
        n_per_class: n,
        delta_out: delta,
        seed: rng::mix(seed, rng::mix(n as u64, delta.to_bits())),
        ..spec.clone()
    }
}

/// Sample versus MCD comparison at each per-class sample size in `n_grid`.
pub fn theorem1_report(spec: &SynthSpec, cfg: &McdConfig, n_grid: &[usize], seed: u64) -> Result<Vec<TheoryReport>> {
    theory_grid(spec, cfg, n_grid, &[spec.delta_out], seed)
}

/// One report per `(n, delta_out)` cell, `n` varying fastest.
pub fn theory_grid(
    spec: &SynthSpec,
    cfg: &McdConfig,
    n_grid: &[usize],
    delta_grid: &[f64],
    seed: u64,
) -> Result<Vec<TheoryReport>> {
    spec.validate()?;
    let cells: Vec<(f64, usize)> = delta_grid
        .iter()
        .flat_map(|&d| n_grid.iter().map(move |&n| (d, n)))
        .collect();
    cells
        .par_iter()
        .map(|&(delta, n)| {
            let s = cell_spec(spec, n, delta, seed);
            let c = McdConfig {
                seed: s.seed,
                ..cfg.clone()
            };
            single_report(&s, &c)
        })
        .collect()
}

pub fn write_theory_csv(reports: &[TheoryReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in reports {
        w.serialize(r.row()).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| RogError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> RogError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => RogError::io(path, io),
        other => RogError::Validation(format!("csv output {}: {other:?}", path.display())),
    }
}

pub fn theory_json(reports: &[TheoryReport]) -> Result<String> {
    Ok(serde_json::to_string_pretty(reports)?)
}
