//! Synthetic benchmark: accuracy and NLL of each classifier as the outlier
//! fraction grows.
//!
//! Two feature views are drawn per row. The deep view has well separated
//! class means, the shallow view the same layout at a smaller scale. Both
//! views place outliers in the same rows. Training and validation data are
//! contaminated; test data is clean.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    fit_gaussian, fit_logistic_baseline, labels_from_log_posteriors, nll, accuracy, Estimator, FitConfig,
    LogisticConfig, Posterior,
};
use crate::data::{random_class_means, synthesize, FeatureSet, SynthSpec};
use crate::ensemble::{build_rog, LayeredFeatureSet, RogConfig};
use crate::error::Result;
use crate::estimators::McdConfig;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub classes: usize,
    pub dim: usize,
    pub n_per_class: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
    pub deltas: Vec<f64>,
    pub sigma2: f64,
    pub out_sigma2: f64,
    /// Standard deviation of the deep view's class-mean coordinates.
    pub mean_scale: f64,
    pub shallow_mean_scale: f64,
    pub keep: usize,
    pub mcd: McdConfig,
    pub logistic: LogisticConfig,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            classes: 10,
            dim: 16,
            n_per_class: 2000,
            val_per_class: 100,
            test_per_class: 1000,
            deltas: vec![0.0, 0.2, 0.4, 0.6],
            sigma2: 1.0,
            out_sigma2: 9.0,
            mean_scale: 1.0,
            shallow_mean_scale: 0.5,
            keep: 500,
            mcd: McdConfig::default(),
            logistic: LogisticConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RogEnsemble,
    RogSingle,
    SampleGenerative,
    TkmGenerative,
    Logistic,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::RogEnsemble,
        Method::RogSingle,
        Method::SampleGenerative,
        Method::TkmGenerative,
        Method::Logistic,
    ];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::RogEnsemble => "rog-ensemble",
            Method::RogSingle => "rog-single",
            Method::SampleGenerative => "sample-generative",
            Method::TkmGenerative => "tkm-generative",
            Method::Logistic => "logistic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub delta_out: f64,
    pub method: Method,
    pub accuracy: f64,
    pub nll: f64,
}

struct Views {
    deep: Vec<Vec<f64>>,
    shallow: Vec<Vec<f64>>,
}

fn layered(cfg: &BenchConfig, views: &Views, delta: f64, n: usize, seed: u64) -> Result<LayeredFeatureSet> {
    let spec = |means: &Vec<Vec<f64>>, s: u64| SynthSpec {
        class_means: means.clone(),
        sigma2: cfg.sigma2,
        out_mean: vec![0.0; cfg.dim],
        out_sigma2: cfg.out_sigma2,
        delta_out: delta,
        n_per_class: n,
        seed: s,
    };
    let (shallow, _) = synthesize(&spec(&views.shallow, rng::mix(seed, 1)))?;
    let (deep, _) = synthesize(&spec(&views.deep, rng::mix(seed, 2)))?;
    LayeredFeatureSet::new(vec![("shallow".into(), shallow), ("deep".into(), deep)])
}

fn score<P: Posterior>(model: &P, test: &FeatureSet) -> Result<(f64, f64)> {
    let lp = model.log_posteriors(test.features())?;
    Ok((accuracy(&labels_from_log_posteriors(&lp), test.labels())?, nll(&lp, test.labels())?))
}

fn run_delta(cfg: &BenchConfig, views: &Views, delta: f64) -> Result<Vec<BenchRow>> {
    let seed = rng::mix(cfg.seed, delta.to_bits());
    let train = layered(cfg, views, delta, cfg.n_per_class, rng::mix(seed, 10))?;
    let val = layered(cfg, views, delta, cfg.val_per_class, rng::mix(seed, 20))?;
    let test = layered(cfg, views, 0.0, cfg.test_per_class, rng::mix(seed, 30))?;
    let fit = FitConfig {
        mcd: McdConfig {
            seed,
            ..cfg.mcd.clone()
        },
        ..FitConfig::default()
    };

    let rog = build_rog(
        &train,
        &val,
        &RogConfig {
            estimator: Estimator::Mcd,
            fit: fit.clone(),
            keep: cfg.keep,
        },
    )?;
    let lp = rog.log_posteriors(&rog.inputs_of(&test))?;
    let ens = (accuracy(&labels_from_log_posteriors(&lp), test.labels())?, nll(&lp, test.labels())?);

    let deep_train = train.last();
    let deep_test = test.last();
    let single = score(&rog.layers.last().expect("layers").params, deep_test)?;
    let sample = score(&fit_gaussian(deep_train, Estimator::Sample, &fit)?, deep_test)?;
    let tkm = score(&fit_gaussian(deep_train, Estimator::Tkm, &fit)?, deep_test)?;
    let logistic = score(&fit_logistic_baseline(deep_train, &cfg.logistic)?, deep_test)?;

    Ok(Method::ALL
        .iter()
        .zip([ens, single, sample, tkm, logistic])
        .map(|(&method, (accuracy, nll))| BenchRow {
            delta_out: delta,
            method,
            accuracy,
            nll,
        })
        .collect())
}

/// Rows ordered by outlier fraction, then by [`Method::ALL`].
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let deep = random_class_means(cfg.classes, cfg.dim, cfg.mean_scale, cfg.seed);
    let shallow = deep
        .iter()
        .map(|m| m.iter().map(|v| v * cfg.shallow_mean_scale / cfg.mean_scale).collect())
        .collect();
    let views = Views { deep, shallow };
    let per_delta: Vec<Vec<BenchRow>> = cfg
        .deltas
        .par_iter()
        .map(|&d| run_delta(cfg, &views, d))
        .collect::<Result<_>>()?;
    Ok(per_delta.into_iter().flatten().collect())
}

pub fn bench_rows_for(rows: &[BenchRow], delta: f64) -> Vec<&BenchRow> {
    rows.iter().filter(|r| r.delta_out == delta).collect()
}

/// Method by outlier-fraction accuracy table, in percent.
pub fn bench_markdown(rows: &[BenchRow]) -> String {
    let mut deltas: Vec<f64> = Vec::new();
    for r in rows {
        if !deltas.contains(&r.delta_out) {
            deltas.push(r.delta_out);
        }
    }
    let mut out = String::from("| method |");
    for d in &deltas {
        let _ = write!(out, " {:.0}% |", d * 100.0);
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(deltas.len()));
    out.push('\n');
    for m in Method::ALL {
        let _ = write!(out, "| {m} |");
        for d in &deltas {
            match rows.iter().find(|r| r.method == m && r.delta_out == *d) {
                Some(r) => {
                    let _ = write!(out, " {:.2} |", 100.0 * r.accuracy);
                }
                None => out.push_str(" - |"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn bench_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| crate::error::RogError::Validation(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::error::RogError::Validation(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchConfig {
        BenchConfig {
            classes: 3,
            dim: 4,
            n_per_class: 120,
            val_per_class: 30,
            test_per_class: 50,
            deltas: vec![0.0, 0.3],
            keep: 45,
            mean_scale: 3.0,
            shallow_mean_scale: 1.0,
            logistic: LogisticConfig {
                epochs: 100,
                ..Default::default()
            },
            seed: 9,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_and_complete() {
        let a = run_bench(&tiny()).unwrap();
        let b = run_bench(&tiny()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(a.iter().all(|r| (0.0..=1.0).contains(&r.accuracy) && r.nll.is_finite()));
        let md = bench_markdown(&a);
        assert!(md.contains("| rog-ensemble |"));
        assert!(md.contains("30%"));
        let csv = bench_csv(&a).unwrap();
        assert!(csv.starts_with("delta_out,method,accuracy,nll\n"));
        assert_eq!(csv.lines().count(), 11);
    }
}
