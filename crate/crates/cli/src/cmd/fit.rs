use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use clap::ValueEnum;
use rog_core::classifier::{
    accuracy, fit_logistic_baseline, labels_from_log_posteriors, Estimator, FitConfig, LogisticConfig,
};
use rog_core::ensemble::{build_rog, RogConfig, DEFAULT_KEEP};
use rog_core::estimators::{McdMode, PriorKind};
use rog_core::RogError;
use serde::{Deserialize, Serialize};

use super::load_layers;
use crate::model;
use crate::output::OutDir;
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    Sample,
    Mcd,
    LtsEuclid,
    Tkm,
    Logistic,
}

impl EstimatorArg {
    fn generative(self) -> Option<Estimator> {
        match self {
            EstimatorArg::Sample => Some(Estimator::Sample),
            EstimatorArg::Mcd => Some(Estimator::Mcd),
            EstimatorArg::LtsEuclid => Some(Estimator::LtsEuclid),
            EstimatorArg::Tkm => Some(Estimator::Tkm),
            EstimatorArg::Logistic => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            EstimatorArg::Sample => "sample",
            EstimatorArg::Mcd => "mcd",
            EstimatorArg::LtsEuclid => "lts-euclid",
            EstimatorArg::Tkm => "tkm",
            EstimatorArg::Logistic => "logistic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PriorArg {
    Uniform,
    Proportional,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[command(flatten)]
    common: Common,
    /// Training features, shallow to deep. Repeat for several layers.
    #[arg(long = "layer")]
    layers: Vec<PathBuf>,
    /// Validation features for weighting layers, same order as --layer.
    /// The training layers are used when absent.
    #[arg(long = "val-layer")]
    val_layers: Vec<PathBuf>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
    /// Random restarts of the concentration steps.
    #[arg(long)]
    restarts: Option<usize>,
    /// Concentration steps per restart.
    #[arg(long)]
    imax: Option<usize>,
    /// Enumerate every subset instead (small classes only).
    #[arg(long)]
    exact: bool,
    /// Subset size per class.
    #[arg(long)]
    subset_size: Option<usize>,
    /// Validation rows kept for weight fitting.
    #[arg(long)]
    keep: Option<usize>,
    #[arg(long, value_enum)]
    prior: Option<PriorArg>,
    /// Logistic baseline penalty.
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FitRun {
    pub layers: Vec<PathBuf>,
    pub val_layers: Vec<PathBuf>,
    pub estimator: EstimatorArg,
    pub keep: usize,
    pub fit: FitConfig,
    pub logistic: LogisticConfig,
    pub seed: u64,
}

impl Default for FitRun {
    fn default() -> Self {
        Self {
            layers: Vec::new(),
            val_layers: Vec::new(),
            estimator: EstimatorArg::Mcd,
            keep: DEFAULT_KEEP,
            fit: FitConfig::default(),
            logistic: LogisticConfig::default(),
            seed: 0,
        }
    }
}

pub fn run(args: Args) -> Result<()> {
    let mut cfg: FitRun = crate::output::load_config(args.common.config.as_deref())?;
    if !args.layers.is_empty() {
        cfg.layers = args.layers;
    }
    if !args.val_layers.is_empty() {
        cfg.val_layers = args.val_layers;
    }
    if let Some(e) = args.estimator {
        cfg.estimator = e;
    }
    if let Some(s) = args.common.seed {
        cfg.seed = s;
    }
    let mcd = &mut cfg.fit.mcd;
    if let Some(r) = args.restarts {
        mcd.restarts = r;
    }
    if let Some(i) = args.imax {
        mcd.max_iters = i;
    }
    if args.exact {
        mcd.mode = McdMode::Exact;
    }
    if args.subset_size.is_some() {
        mcd.subset_size = args.subset_size;
    }
    if let Some(p) = args.prior {
        mcd.priors = match p {
            PriorArg::Uniform => PriorKind::Uniform,
            PriorArg::Proportional => PriorKind::Proportional,
        };
        cfg.fit.tkm.priors = mcd.priors;
    }
    mcd.seed = cfg.seed;
    cfg.fit.lts.seed = cfg.seed;
    if let Some(k) = args.keep {
        cfg.keep = k;
    }
    if let Some(l2) = args.l2 {
        cfg.logistic.l2 = l2;
    }
    if let Some(e) = args.epochs {
        cfg.logistic.epochs = e;
    }

    let train = load_layers(&cfg.layers)?;
    let out = OutDir::create(&args.common.out)?;
    let mut report = format!("# fit\n\n- estimator: {}\n- layers: {}\n", cfg.estimator.name(), train.num_layers());

    match cfg.estimator.generative() {
        None => {
            if train.num_layers() != 1 {
                return Err(RogError::Config("the logistic baseline takes exactly one --layer".into()).into());
            }
            let params = fit_logistic_baseline(train.last(), &cfg.logistic)?;
            out.record("fit", &cfg)?;
            model::save_logistic(&out, &train.ids()[0], &params)?;
            let lp = rog_core::classifier::Posterior::log_posteriors(&params, train.last().features())?;
            let acc = accuracy(&labels_from_log_posteriors(&lp), train.last().labels())?;
            let _ = writeln!(report, "- training accuracy: {acc:.4}");
        }
        Some(estimator) => {
            let val = if cfg.val_layers.is_empty() {
                train.clone()
            } else {
                load_layers(&cfg.val_layers)?
            };
            let rog = build_rog(
                &train,
                &val,
                &RogConfig {
                    estimator,
                    fit: cfg.fit.clone(),
                    keep: cfg.keep,
                },
            )?;
            out.record("fit", &cfg)?;
            model::save_ensemble(&out, cfg.estimator.name(), &rog)?;
            let lp = rog.log_posteriors(&rog.inputs_of(&train))?;
            let acc = accuracy(&labels_from_log_posteriors(&lp), train.labels())?;
            report.push_str("\n| layer | weight |\n|---|---:|\n");
            for (l, w) in rog.layers.iter().zip(&rog.weights) {
                let _ = writeln!(report, "| {} | {w:.4} |", l.id);
            }
            let _ = writeln!(report, "\n- training accuracy: {acc:.4}");
        }
    }
    out.write("report.md", report)?;
    Ok(())
}
