use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use rog_core::classifier::labels_from_log_posteriors;
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
    /// Model bundle, or a directory holding one.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Feature files, one per model layer.
    #[arg(long = "layer")]
    layers: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictConfig {
    pub model: Option<PathBuf>,
    pub layers: Vec<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let mut cfg: PredictConfig = load_config(args.common.config.as_deref())?;
    if args.model.is_some() {
        cfg.model = args.model;
    }
    if !args.layers.is_empty() {
        cfg.layers = args.layers;
    }
    let path = cfg.model.clone().ok_or_else(|| RogError::Config("--model is required".into()))?;
    let loaded = model::load(&path)?;
    let data = load_layers(&cfg.layers)?;
    let inputs: Vec<_> = data.layers().iter().map(|l| l.features()).collect();
    let lp = loaded.model.log_posteriors(&inputs)?;
    let labels = labels_from_log_posteriors(&lp);

    let out = OutDir::create(&args.common.out)?;
    out.record("predict", &cfg)?;
    let mut csv = String::from("row,label,predicted");
    for c in 0..lp.ncols() {
        let _ = write!(csv, ",p{c}");
    }
    csv.push('\n');
    for (i, (&y, &p)) in data.labels().iter().zip(&labels).enumerate() {
        let _ = write!(csv, "{i},{y},{p}");
        for c in 0..lp.ncols() {
            let _ = write!(csv, ",{}", lp[(i, c)].exp());
        }
        csv.push('\n');
    }
    out.write("predictions.csv", csv)?;
    Ok(())
}
