//! Model checkpoints: a JSON index (`<stem>.json`) holding the scorer
//! configuration and tensor layout, next to a flat little-endian f32 blob
//! (`<stem>.bin`).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use temporal_probe_core::models::{ScorerConfig, ScorerModel};
use temporal_probe_core::Tensor;

use crate::format::FormatError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset in f32 elements from the start of the blob.
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsIndex {
    pub config: ScorerConfig,
    pub blob: String,
    pub tensors: Vec<TensorEntry>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn blob_path(index: &Path) -> PathBuf {
    index.with_extension("bin")
}

/// Writes named tensors, which must be in `ScorerModel::parameters` order.
pub fn save_weights(
    index_path: &Path,
    config: &ScorerConfig,
    names: &[String],
    values: &[Tensor],
) -> Result<(), FormatError> {
    let blob = blob_path(index_path);
    let mut bytes = Vec::new();
    let mut tensors = Vec::with_capacity(values.len());
    let mut offset = 0;
    for (name, t) in names.iter().zip(values) {
        tensors.push(TensorEntry {
            name: name.clone(),
            shape: t.shape().to_vec(),
            offset,
        });
        offset += t.len();
        for v in t.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(&blob, bytes).map_err(io(&blob))?;
    let index = WeightsIndex {
        config: config.clone(),
        blob: blob
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        tensors,
    };
    let text = serde_json::to_string_pretty(&index).map_err(|source| FormatError::Json {
        path: index_path.to_path_buf(),
        source,
    })?;
    fs::write(index_path, text + "\n").map_err(io(index_path))
}

pub fn save_model(index_path: &Path, model: &ScorerModel) -> Result<(), FormatError> {
    let params = model.parameters();
    let names: Vec<String> = params.iter().map(|p| p.name.clone()).collect();
    let values: Vec<Tensor> = params.iter().map(|p| p.value.clone()).collect();
    save_weights(index_path, model.config(), &names, &values)
}

pub fn load_model(index_path: &Path) -> Result<ScorerModel, FormatError> {
    let text = fs::read_to_string(index_path).map_err(io(index_path))?;
    let index: WeightsIndex = serde_json::from_str(&text).map_err(|source| FormatError::Json {
        path: index_path.to_path_buf(),
        source,
    })?;
    let blob = index_path.with_file_name(&index.blob);
    let bytes = fs::read(&blob).map_err(io(&blob))?;
    let floats: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4-byte chunk")))
        .collect();
    let bad = |reason: String| FormatError::Video {
        video: index_path.display().to_string(),
        field: "weights",
        reason,
    };
    if bytes.len() % 4 != 0 {
        return Err(bad(format!(
            "blob length {} is not a multiple of 4",
            bytes.len()
        )));
    }
    let mut model = ScorerModel::build(index.config.clone(), 0)?;
    let names: Vec<String> = model.parameters().iter().map(|p| p.name.clone()).collect();
    if names.len() != index.tensors.len() {
        return Err(bad(format!(
            "index lists {} tensors, configuration needs {}",
            index.tensors.len(),
            names.len()
        )));
    }
    let mut values = Vec::with_capacity(names.len());
    for (entry, name) in index.tensors.iter().zip(&names) {
        if &entry.name != name {
            return Err(bad(format!("expected tensor {name}, found {}", entry.name)));
        }
        let len: usize = entry.shape.iter().product();
        let data = floats
            .get(entry.offset..entry.offset + len)
            .ok_or_else(|| bad(format!("tensor {name} runs past the end of the blob")))?;
        values.push(Tensor::from_vec(&entry.shape, data.to_vec())?);
    }
    model.load_values(values)?;
    Ok(model)
}
