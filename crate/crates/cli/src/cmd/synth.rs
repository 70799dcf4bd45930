use anyhow::Result;
use rog_core::data::{encode_rogf, mask_path, random_class_means, save_mask, synthesize, SynthSpec};
use rog_core::rng;
use serde::{Deserialize, Serialize};

use crate::output::{load_config, OutDir};
use crate::Common;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    n_per_class: Option<usize>,
    #[arg(long)]
    val_per_class: Option<usize>,
    #[arg(long)]
    test_per_class: Option<usize>,
    /// Outlier fraction of the training and validation sets.
    #[arg(long)]
    delta_out: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    out_sigma2: Option<f64>,
    /// Standard deviation of the random class-mean coordinates.
    #[arg(long)]
    mean_scale: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub classes: usize,
    pub dim: usize,
    pub n_per_class: usize,
    pub val_per_class: usize,
    pub test_per_class: usize,
    pub delta_out: f64,
    pub sigma2: f64,
    pub out_sigma2: f64,
    pub mean_scale: f64,
    /// Explicit class means; drawn from `N(0, mean_scale^2)` when absent.
    pub class_means: Option<Vec<Vec<f64>>>,
    pub out_mean: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: 10,
            dim: 16,
            n_per_class: 1000,
            val_per_class: 100,
            test_per_class: 500,
            delta_out: 0.0,
            sigma2: 1.0,
            out_sigma2: 4.0,
            mean_scale: 1.0,
            class_means: None,
            out_mean: None,
            seed: 0,
        }
    }
}

pub fn run(args: Args) -> Result<()> {
    let mut cfg: SynthConfig = load_config(args.common.config.as_deref())?;
    macro_rules! take {
        ($($f:ident),*) => { $(if let Some(v) = args.$f { cfg.$f = v; })* };
    }
    take!(classes, dim, n_per_class, val_per_class, test_per_class, delta_out, sigma2, out_sigma2, mean_scale);
    if let Some(s) = args.common.seed {
        cfg.seed = s;
    }

    let means = match &cfg.class_means {
        Some(m) => m.clone(),
        None => random_class_means(cfg.classes, cfg.dim, cfg.mean_scale, cfg.seed),
    };
    let base = SynthSpec {
        out_mean: cfg.out_mean.clone().unwrap_or_else(|| vec![0.0; means.first().map_or(cfg.dim, Vec::len)]),
        class_means: means,
        sigma2: cfg.sigma2,
        out_sigma2: cfg.out_sigma2,
        delta_out: cfg.delta_out,
        n_per_class: cfg.n_per_class,
        seed: rng::mix(cfg.seed, 1),
    };
    base.validate()?;
    let val = SynthSpec {
        n_per_class: cfg.val_per_class,
        seed: rng::mix(cfg.seed, 2),
        ..base.clone()
    };
    let test = SynthSpec {
        n_per_class: cfg.test_per_class,
        delta_out: 0.0,
        seed: rng::mix(cfg.seed, 3),
        ..base.clone()
    };

    let out = OutDir::create(&args.common.out)?;
    out.record("synth", &cfg)?;
    let mut lines = vec!["# synth".to_string(), String::new()];
    for (name, spec) in [("train", &base), ("val", &val), ("test", &test)] {
        let (ds, mask) = synthesize(spec)?;
        let path = out.write(&format!("{name}.rogf"), encode_rogf(&ds))?;
        if name == "train" {
            save_mask(&mask_path(&path), &mask)?;
        }
        let outliers = mask.iter().filter(|&&m| m).count();
        lines.push(format!("- {name}: {} rows, d = {}, {outliers} outliers", ds.len(), ds.dim()));
    }
    lines.push(String::new());
    out.write("report.md", lines.join("\n"))?;
    Ok(())
}
