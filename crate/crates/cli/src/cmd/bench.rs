use anyhow::Result;
use clap::ValueEnum;
use rog_core::bench::{bench_csv, bench_markdown, run_bench, BenchConfig};
use serde::{Deserialize, Serialize};

use crate::output::{load_config, parse_list, OutDir};
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Synthetic,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "synthetic")]
    suite: Suite,
    #[arg(long)]
    n_per_class: Option<usize>,
    /// Outlier fractions, comma separated.
    #[arg(long)]
    delta_grid: Option<String>,
    #[arg(long)]
    keep: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    imax: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
struct BenchRun {
    suite: Option<Suite>,
    bench: BenchConfig,
}

pub fn run(args: Args) -> Result<()> {
    let mut cfg: BenchRun = load_config(args.common.config.as_deref())?;
    cfg.suite = Some(args.suite);
    let b = &mut cfg.bench;
    if let Some(n) = args.n_per_class {
        b.n_per_class = n;
    }
    if let Some(raw) = &args.delta_grid {
        b.deltas = parse_list(raw, "delta grid")?;
    }
    if let Some(k) = args.keep {
        b.keep = k;
    }
    if let Some(r) = args.restarts {
        b.mcd.restarts = r;
    }
    if let Some(i) = args.imax {
        b.mcd.max_iters = i;
    }
    if let Some(s) = args.common.seed {
        b.seed = s;
    }

    let rows = run_bench(&cfg.bench)?;
    let out = OutDir::create(&args.common.out)?;
    out.record("bench", &cfg)?;
    out.write("bench.csv", bench_csv(&rows)?)?;
    let table = bench_markdown(&rows);
    out.write("report.md", format!("# bench\n\nTest accuracy (%) by outlier fraction.\n\n{table}"))?;
    print!("{table}");
    Ok(())
}
