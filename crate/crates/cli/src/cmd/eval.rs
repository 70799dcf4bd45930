use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use rog_core::classifier::{accuracy, labels_from_log_posteriors, nll, per_class_accuracy};
use rog_core::RogError;
use serde::{Deserialize, Serialize};

use super::load_layers;
use crate::model;
use crate::output::{load_config, OutDir};
use crate::Common;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Evaluation features, one per model layer.
    #[arg(long = "layer")]
    layers: Vec<PathBuf>,
    /// Name written to the `split` column.
    #[arg(long)]
    split: Option<String>,
    /// Noise kind the model was trained under, for the metrics table.
    #[arg(long)]
    noise: Option<String>,
    /// Noise rate the model was trained under, for the metrics table.
    #[arg(long)]
    rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub model: Option<PathBuf>,
    pub layers: Vec<PathBuf>,
    pub split: String,
    pub noise: String,
    pub rate: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            model: None,
            layers: Vec::new(),
            split: "test".into(),
            noise: "none".into(),
            rate: 0.0,
        }
    }
}

#[derive(Debug, Serialize)]
struct Metrics<'a> {
    split: &'a str,
    estimator: &'a str,
    noise_kind: &'a str,
    rate: f64,
    rows: usize,
    accuracy: f64,
    nll: f64,
    per_class_accuracy: Vec<Option<f64>>,
}

pub fn run(args: Args) -> Result<()> {
    let mut cfg: EvalConfig = load_config(args.common.config.as_deref())?;
    if args.model.is_some() {
        cfg.model = args.model;
    }
    if !args.layers.is_empty() {
        cfg.layers = args.layers;
    }
    if let Some(s) = args.split {
        cfg.split = s;
    }
    if let Some(n) = args.noise {
        cfg.noise = n;
    }
    if let Some(r) = args.rate {
        cfg.rate = r;
    }
    let path = cfg.model.clone().ok_or_else(|| RogError::Config("--model is required".into()))?;
    let loaded = model::load(&path)?;
    let data = load_layers(&cfg.layers)?;
    let inputs: Vec<_> = data.layers().iter().map(|l| l.features()).collect();
    let lp = loaded.model.log_posteriors(&inputs)?;
    let predicted = labels_from_log_posteriors(&lp);
    let metrics = Metrics {
        split: &cfg.split,
        estimator: &loaded.bundle.estimator,
        noise_kind: &cfg.noise,
        rate: cfg.rate,
        rows: data.len(),
        accuracy: accuracy(&predicted, data.labels())?,
        nll: nll(&lp, data.labels())?,
        per_class_accuracy: per_class_accuracy(&predicted, data.labels(), loaded.model.num_classes()),
    };

    let out = OutDir::create(&args.common.out)?;
    out.record("eval", &cfg)?;
    out.write_json("metrics.json", &metrics)?;
    out.write(
        "metrics.csv",
        format!(
            "split,estimator,noise_kind,rate,accuracy,nll\n{},{},{},{},{},{}\n",
            metrics.split, metrics.estimator, metrics.noise_kind, metrics.rate, metrics.accuracy, metrics.nll
        ),
    )?;
    let mut report = format!(
        "# eval\n\n- model: {}\n- rows: {}\n- accuracy: {:.4}\n- nll: {:.4}\n\n| class | accuracy |\n|---|---:|\n",
        path.display(),
        metrics.rows,
        metrics.accuracy,
        metrics.nll
    );
    for (c, a) in metrics.per_class_accuracy.iter().enumerate() {
        match a {
            Some(a) => writeln!(report, "| {c} | {a:.4} |")?,
            None => writeln!(report, "| {c} | - |")?,
        }
    }
    out.write("report.md", report)?;
    println!("accuracy {:.4}  nll {:.4}", metrics.accuracy, metrics.nll);
    Ok(())
}
