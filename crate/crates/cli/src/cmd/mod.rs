pub mod bench;
pub mod corrupt;
pub mod eval;
pub mod fit;
pub mod predict;
pub mod synth;
pub mod theory;

use std::path::PathBuf;

use rog_core::data::FeatureSet;
use rog_core::ensemble::LayeredFeatureSet;
use rog_core::{Result, RogError};

use crate::output::{layer_ids, load_any};

pub(crate) fn load_layers(paths: &[PathBuf]) -> Result<LayeredFeatureSet> {
    if paths.is_empty() {
        return Err(RogError::Config("at least one --layer is required".into()));
    }
    let sets: Vec<FeatureSet> = paths.iter().map(|p| load_any(p)).collect::<Result<_>>()?;
    LayeredFeatureSet::new(layer_ids(paths).into_iter().zip(sets).collect())
}
