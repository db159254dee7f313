//! Versioned JSON model files for the built-in learners.
//!
//! Format: `{"format_version":1,"kind":"linear|forest|knn",...}`. External
//! predictors are processes, not state, and cannot be serialized.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use bbfi_core::models::{ForestModel, KnnModel, LinearModel, Predictor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u64 = 1;

/// A loadable/savable built-in model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuiltinModel {
    Linear(LinearModel),
    Forest(ForestModel),
    Knn(KnnModel),
}

impl BuiltinModel {
    pub fn as_predictor(&self) -> &dyn Predictor {
        match self {
            BuiltinModel::Linear(m) => m,
            BuiltinModel::Forest(m) => m,
            BuiltinModel::Knn(m) => m,
        }
    }
}

#[derive(Serialize)]
struct ModelFileOut<'a> {
    format_version: u64,
    #[serde(flatten)]
    model: &'a BuiltinModel,
}

pub fn save_model(path: &Path, model: &BuiltinModel) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &ModelFileOut { format_version: FORMAT_VERSION, model })?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<BuiltinModel> {
    let file = File::open(path)
        .map_err(|e| Error::ModelFile(format!("cannot open {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_reader(BufReader::new(file))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::ModelFile("missing format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFile(format!(
            "format version mismatch: file has {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    let kind = value
        .get("kind")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::ModelFile("missing kind".into()))?;
    if !matches!(kind, "linear" | "forest" | "knn") {
        return Err(Error::ModelFile(format!("unknown kind '{kind}'")));
    }
    Ok(serde_json::from_value(value)?)
}
