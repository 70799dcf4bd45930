use std::fmt::Write as _;

use anyhow::Result;
use clap::ValueEnum;
use nalgebra::{DMatrix, DVector};
use rog_core::analysis::{
    breakdown_fraction, breakdown_sweep, lemma1_table, theory_grid, theory_json, write_theory_csv,
    BreakdownEstimator, BreakdownPoint,
};
use rog_core::data::{sample_contaminated, SynthSpec};
use rog_core::estimators::{McdConfig, McdMode, McdStart};
use rog_core::rng;
use serde::{Deserialize, Serialize};

use crate::output::{load_config, parse_list, OutDir};
use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Sample versus MCD errors, margins and bound terms over a grid.
    Theorem1,
    /// Closed-form contamination limits against one large draw.
    Lemma1,
    /// Mean displacement as far points replace more and more rows.
    Breakdown,
}

#[derive(Debug, clap::Args)]
pub struct Args {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    check: Option<Check>,
    /// Per-class sample sizes, comma separated.
    #[arg(long)]
    n_grid: Option<String>,
    /// Outlier fractions, comma separated.
    #[arg(long)]
    delta_grid: Option<String>,
    /// Single outlier fraction; shorthand for a one-entry --delta-grid.
    #[arg(long)]
    delta_out: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    imax: Option<usize>,
    #[arg(long)]
    exact: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TheoryConfig {
    pub check: Check,
    pub class_means: Vec<Vec<f64>>,
    pub sigma2: f64,
    pub out_mean: Vec<f64>,
    pub out_sigma2: f64,
    pub n_grid: Vec<usize>,
    pub delta_grid: Vec<f64>,
    pub mcd: McdConfig,
    pub breakdown_rows: usize,
    pub breakdown_fractions: Vec<f64>,
    pub breakdown_restarts: usize,
    pub seed: u64,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            check: Check::Theorem1,
            class_means: vec![vec![6.0, 2.0], vec![2.0, 6.0]],
            sigma2: 1.0,
            out_mean: vec![0.0, 0.0],
            out_sigma2: 4.0,
            n_grid: vec![1_000, 10_000, 100_000],
            delta_grid: vec![0.25],
            mcd: McdConfig {
                max_iters: 10,
                ..McdConfig::default()
            },
            breakdown_rows: 100,
            breakdown_fractions: (0..=9).map(|k| k as f64 * 0.05).collect(),
            breakdown_restarts: 50,
            seed: 0,
        }
    }
}

pub fn run(args: Args) -> Result<()> {
    let mut cfg: TheoryConfig = load_config(args.common.config.as_deref())?;
    if let Some(c) = args.check {
        cfg.check = c;
    }
    if let Some(raw) = &args.n_grid {
        cfg.n_grid = parse_list(raw, "n grid")?;
    }
    if let Some(raw) = &args.delta_grid {
        cfg.delta_grid = parse_list(raw, "delta grid")?;
    }
    if let Some(d) = args.delta_out {
        cfg.delta_grid = vec![d];
    }
    if let Some(r) = args.restarts {
        cfg.mcd.restarts = r;
        cfg.breakdown_restarts = r;
    }
    if let Some(i) = args.imax {
        cfg.mcd.max_iters = i;
    }
    if args.exact {
        cfg.mcd.mode = McdMode::Exact;
    }
    if let Some(s) = args.common.seed {
        cfg.seed = s;
    }
    cfg.mcd.seed = cfg.seed;
    if cfg.n_grid.is_empty() || cfg.delta_grid.is_empty() {
        return Err(rog_core::RogError::Config("n and delta grids must be non-empty".into()).into());
    }

    let spec = SynthSpec {
        class_means: cfg.class_means.clone(),
        sigma2: cfg.sigma2,
        out_mean: cfg.out_mean.clone(),
        out_sigma2: cfg.out_sigma2,
        delta_out: cfg.delta_grid[0],
        n_per_class: cfg.n_grid[0],
        seed: cfg.seed,
    };
    spec.validate()?;
    let out = OutDir::create(&args.common.out)?;
    out.record("theory", &cfg)?;
    let report = match cfg.check {
        Check::Theorem1 => run_grid(&cfg, &spec, &out)?,
        Check::Lemma1 => run_limits(&cfg, &spec, &out)?,
        Check::Breakdown => run_breakdown(&cfg, &spec, &out)?,
    };
    print!("{report}");
    out.write("report.md", report)?;
    Ok(())
}

fn run_grid(cfg: &TheoryConfig, spec: &SynthSpec, out: &OutDir) -> Result<String> {
    let reports = theory_grid(spec, &cfg.mcd, &cfg.n_grid, &cfg.delta_grid, cfg.seed)?;
    write_theory_csv(&reports, &out.path("theory.csv"))?;
    out.write("theory.json", theory_json(&reports)? + "\n")?;
    let mut s = String::from(
        "# theory\n\n| n | delta_out | err_mcd_l1 | err_sample_l1 | phi_mcd | phi_sample | margin_ratio | bound_mcd | bound_sample |\n|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n",
    );
    for r in &reports {
        let row = r.row();
        writeln!(
            s,
            "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |",
            row.n,
            row.delta_out,
            row.err_mcd_l1,
            row.err_sample_l1,
            row.phi_mcd,
            row.phi_sample,
            row.margin_ratio,
            row.bound_mcd,
            row.bound_sample
        )?;
    }
    for r in reports.iter().filter(|r| !r.warnings.is_empty()) {
        for w in &r.warnings {
            writeln!(s, "\nwarning (n = {}, delta_out = {}): {w}", r.n_samples, r.delta_out)?;
        }
    }
    Ok(s)
}

fn run_limits(cfg: &TheoryConfig, spec: &SynthSpec, out: &OutDir) -> Result<String> {
    let big = SynthSpec {
        n_per_class: *cfg.n_grid.iter().max().expect("non-empty"),
        ..spec.clone()
    };
    let rows = lemma1_table(&big, &cfg.mcd)?;
    let mut csv = String::from("class,quantity,closed_form,empirical\n");
    let mut s = format!(
        "# contamination limits\n\nn = {}, delta_out = {}\n\n| class | quantity | closed form | empirical |\n|---:|---|---:|---:|\n",
        big.n_per_class, big.delta_out
    );
    for r in &rows {
        writeln!(csv, "{},{},{},{}", r.class, r.quantity, r.closed_form, r.empirical)?;
        writeln!(s, "| {} | {} | {:.4} | {:.4} |", r.class, r.quantity, r.closed_form, r.empirical)?;
    }
    out.write("lemma1.csv", csv)?;
    Ok(s)
}

fn run_breakdown(cfg: &TheoryConfig, spec: &SynthSpec, out: &OutDir) -> Result<String> {
    let d = spec.dim();
    let truth = DVector::zeros(d);
    let mut rng = rng::stream(cfg.seed, 7);
    let (base, _): (DMatrix<f64>, _) = sample_contaminated(&truth, spec.sigma2, &truth, spec.sigma2, 0.0, cfg.breakdown_rows, &mut rng);
    let mcd = McdConfig {
        start: McdStart::Elemental,
        restarts: cfg.breakdown_restarts,
        ..cfg.mcd.clone()
    };
    let curves: Vec<(&str, Vec<BreakdownPoint>)> = vec![
        ("sample", breakdown_sweep(&base, &truth, &BreakdownEstimator::Sample, &cfg.breakdown_fractions)?),
        ("mcd", breakdown_sweep(&base, &truth, &BreakdownEstimator::Mcd(mcd), &cfg.breakdown_fractions)?),
    ];
    let mut csv = String::from("estimator,fraction,replaced,displacement,error,log_eigen_range\n");
    let mut s = String::from("# breakdown\n\n| estimator | fraction | displacement | error | log eigen range |\n|---|---:|---:|---:|---:|\n");
    for (name, curve) in &curves {
        for p in curve {
            writeln!(
                csv,
                "{name},{},{},{},{},{}",
                p.fraction, p.replaced, p.displacement, p.error, p.log_eigen_range
            )?;
            writeln!(
                s,
                "| {name} | {:.2} | {:.4e} | {:.4e} | {:.3} |",
                p.fraction, p.displacement, p.error, p.log_eigen_range
            )?;
        }
    }
    s.push('\n');
    for (name, curve) in &curves {
        match breakdown_fraction(curve, 10.0) {
            Some(f) => writeln!(s, "- {name}: error exceeds 10x clean error at fraction {f:.2}")?,
            None => writeln!(s, "- {name}: error stays within 10x clean error on the grid")?,
        }
    }
    out.write("breakdown.csv", csv)?;
    Ok(s)
}
