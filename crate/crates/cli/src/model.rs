//! On-disk model bundle: `model.json` lists the layers and their weights,
//! each layer's parameters live in their own file next to it.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rog_core::classifier::{GaussianClassifierParams, Posterior, SoftmaxParams};
use rog_core::ensemble::{EnsembleModel, Layer};
use rog_core::{Result, RogError};
use serde::{Deserialize, Serialize};

use crate::output::OutDir;

pub const BUNDLE_FILE: &str = "model.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Generative,
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    pub id: String,
    pub file: String,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub kind: ModelKind,
    pub estimator: String,
    pub num_classes: usize,
    pub layers: Vec<LayerEntry>,
    pub weights: Vec<f64>,
}

pub enum Model {
    Ensemble(EnsembleModel),
    Logistic(SoftmaxParams),
}

pub struct Loaded {
    pub bundle: Bundle,
    pub model: Model,
}

fn layer_file(k: usize) -> String {
    format!("layer_{k}.json")
}

pub fn save_ensemble(out: &OutDir, estimator: &str, model: &EnsembleModel) -> Result<()> {
    let mut layers = Vec::with_capacity(model.layers.len());
    for (k, l) in model.layers.iter().enumerate() {
        out.write_json(&format!("model/{}", layer_file(k)), &l.params)?;
        layers.push(LayerEntry {
            id: l.id.clone(),
            file: layer_file(k),
            dim: l.params.dim(),
        });
    }
    let bundle = Bundle {
        kind: ModelKind::Generative,
        estimator: estimator.into(),
        num_classes: model.num_classes(),
        layers,
        weights: model.weights.clone(),
    };
    out.write_json(&format!("model/{BUNDLE_FILE}"), &bundle)?;
    Ok(())
}

pub fn save_logistic(out: &OutDir, id: &str, params: &SoftmaxParams) -> Result<()> {
    out.write_json(&format!("model/{}", layer_file(0)), params)?;
    let bundle = Bundle {
        kind: ModelKind::Logistic,
        estimator: "logistic".into(),
        num_classes: params.num_classes(),
        layers: vec![LayerEntry {
            id: id.into(),
            file: layer_file(0),
            dim: params.dim(),
        }],
        weights: vec![1.0],
    };
    out.write_json(&format!("model/{BUNDLE_FILE}"), &bundle)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| RogError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| RogError::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Accepts the bundle file itself, a `model/` directory or a run directory.
fn resolve(path: &Path) -> PathBuf {
    if path.is_dir() {
        let direct = path.join(BUNDLE_FILE);
        if direct.exists() {
            return direct;
        }
        return path.join("model").join(BUNDLE_FILE);
    }
    path.to_path_buf()
}

pub fn load(path: &Path) -> Result<Loaded> {
    let bundle_path = resolve(path);
    let bundle: Bundle = read_json(&bundle_path)?;
    let dir = bundle_path.parent().unwrap_or(Path::new("."));
    let model = match bundle.kind {
        ModelKind::Logistic => {
            let entry = bundle
                .layers
                .first()
                .ok_or_else(|| RogError::Validation("logistic bundle lists no layer".into()))?;
            let p: SoftmaxParams = read_json(&dir.join(&entry.file))?;
            p.validate()?;
            Model::Logistic(p)
        }
        ModelKind::Generative => {
            let mut layers = Vec::with_capacity(bundle.layers.len());
            for e in &bundle.layers {
                let params: GaussianClassifierParams = read_json(&dir.join(&e.file))?;
                params.validate()?;
                layers.push(Layer {
                    id: e.id.clone(),
                    params,
                });
            }
            Model::Ensemble(EnsembleModel::new(layers, bundle.weights.clone())?)
        }
    };
    Ok(Loaded { bundle, model })
}

impl Model {
    pub fn num_layers(&self) -> usize {
        match self {
            Model::Ensemble(m) => m.layers.len(),
            Model::Logistic(_) => 1,
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Model::Ensemble(m) => m.num_classes(),
            Model::Logistic(p) => p.num_classes(),
        }
    }

    pub fn log_posteriors(&self, inputs: &[&DMatrix<f64>]) -> Result<DMatrix<f64>> {
        if inputs.len() != self.num_layers() {
            return Err(RogError::Config(format!(
                "model has {} layers, got {} inputs",
                self.num_layers(),
                inputs.len()
            )));
        }
        match self {
            Model::Ensemble(m) => m.log_posteriors(inputs),
            Model::Logistic(p) => p.log_posteriors(inputs[0]),
        }
    }
}
