use std::path::PathBuf;

use anyhow::Result;
use rog_core::data::{inject_noise, mask_path, save_feature_set, save_mask, Format, NoiseKind, NoiseSpec};
use rog_core::RogError;
use serde::{Deserialize, Serialize};

use crate::output::{load_any, load_config, parse_list, OutDir};
use crate::Common;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[command(flatten)]
    common: Common,
    /// Feature file to corrupt.
    #[arg(long)]
    input: Option<PathBuf>,
    /// uniform, flip or open-set.
    #[arg(long)]
    noise: Option<NoiseKind>,
    #[arg(long)]
    rate: Option<f64>,
    /// Target class per source class, comma separated. Defaults to `c + 1 mod C`.
    #[arg(long)]
    flip_map: Option<String>,
    /// Rows whose features replace corrupted rows under open-set noise.
    #[arg(long)]
    donor: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CorruptConfig {
    pub input: Option<PathBuf>,
    pub noise: Option<NoiseKind>,
    pub rate: f64,
    pub flip_map: Option<Vec<usize>>,
    pub donor: Option<PathBuf>,
    pub seed: u64,
}

pub fn run(args: Args) -> Result<()> {
    let mut cfg: CorruptConfig = load_config(args.common.config.as_deref())?;
    if args.input.is_some() {
        cfg.input = args.input;
    }
    if args.noise.is_some() {
        cfg.noise = args.noise;
    }
    if let Some(r) = args.rate {
        cfg.rate = r;
    }
    if let Some(raw) = &args.flip_map {
        cfg.flip_map = Some(parse_list(raw, "flip map")?);
    }
    if args.donor.is_some() {
        cfg.donor = args.donor;
    }
    if let Some(s) = args.common.seed {
        cfg.seed = s;
    }
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| RogError::Config("--input is required".into()))?;
    let kind = cfg.noise.unwrap_or(NoiseKind::Uniform);
    cfg.noise = Some(kind);

    let ds = load_any(&input)?;
    let spec = match kind {
        NoiseKind::Uniform => NoiseSpec::uniform(cfg.rate, cfg.seed),
        NoiseKind::OpenSet => NoiseSpec::open_set(cfg.rate, cfg.seed),
        NoiseKind::Flip => {
            let map = cfg
                .flip_map
                .clone()
                .unwrap_or_else(|| (0..ds.num_classes()).map(|c| (c + 1) % ds.num_classes()).collect());
            cfg.flip_map = Some(map.clone());
            NoiseSpec::flip(cfg.rate, map, cfg.seed)
        }
    };
    let donor = cfg.donor.as_deref().map(load_any).transpose()?;
    let (noisy, mask) = inject_noise(&ds, &spec, donor.as_ref())?;

    let out = OutDir::create(&args.common.out)?;
    out.record("corrupt", &cfg)?;
    let name = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corrupted".into());
    let path = out.path(&format!("{name}.rogf"));
    save_feature_set(&noisy, &path, Format::Rogf)?;
    save_mask(&mask_path(&path), &mask)?;
    let changed = mask.iter().filter(|&&m| m).count();
    out.write(
        "report.md",
        format!(
            "# corrupt\n\n- input: {}\n- noise: {kind}, rate {}\n- corrupted rows: {changed} of {}\n",
            input.display(),
            cfg.rate,
            noisy.len()
        ),
    )?;
    Ok(())
}
