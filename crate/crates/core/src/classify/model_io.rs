//! Text model file.
//!
//! ```text
//! forgelens-model 1
//! pipeline dctlbp-mlp
//! setting canvas 128
//! ...
//! kind mlp
//! input_dim 256
//! hidden_dim 64
//! scaling_min <input_dim values>
//! scaling_max <input_dim values>
//! hidden_weights <hidden_dim * input_dim values, row-major>
//! hidden_bias <hidden_dim values>
//! output_weights <hidden_dim values>
//! output_bias <value>
//! checksum <crc32 hex>
//! ```
//!
//! SVM files carry `weights`, `bias` and `lambda` instead of the MLP arrays.
//! Reals are written with 17 significant digits so every `f64` roundtrips
//! bit-exactly. The checksum is CRC-32 over the little-endian bytes of every
//! real-valued array in file order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{LinearSvmModel, MlpModel, Model, ModelKind};
use crate::error::{Error, Result};
use crate::features::ScalingParams;

pub const FORMAT_MAGIC: &str = "forgelens-model";
const FORMAT_VERSION: u32 = 1;

/// Everything needed to reproduce predictions without the training flags.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub pipeline: String,
    /// Feature extractor settings, in write order.
    pub settings: Vec<(String, String)>,
    pub scaling: ScalingParams,
    pub model: Model,
}

fn fmt_reals(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    for v in values {
        write!(out, " {v:.16e}").unwrap();
    }
    out.push('\n');
}

/// Real-valued arrays in file order.
fn arrays(saved: &SavedModel) -> Vec<(&'static str, Vec<f64>)> {
    let mut v = vec![
        ("scaling_min", saved.scaling.min.clone()),
        ("scaling_max", saved.scaling.max.clone()),
    ];
    match &saved.model {
        Model::Svm(m) => {
            v.push(("weights", m.weights.clone()));
            v.push(("bias", vec![m.bias]));
            v.push(("lambda", vec![m.lambda]));
        }
        Model::Mlp(m) => {
            v.push(("hidden_weights", m.hidden_weights.clone()));
            v.push(("hidden_bias", m.hidden_bias.clone()));
            v.push(("output_weights", m.output_weights.clone()));
            v.push(("output_bias", vec![m.output_bias]));
        }
    }
    v
}

fn checksum<'a>(arrays: impl IntoIterator<Item = &'a [f64]>) -> u32 {
    let mut h = crc32fast::Hasher::new();
    for a in arrays {
        for v in a {
            h.update(&v.to_le_bytes());
        }
    }
    h.finalize()
}

pub fn write_model(saved: &SavedModel) -> String {
    let mut out = String::new();
    writeln!(out, "{FORMAT_MAGIC} {FORMAT_VERSION}").unwrap();
    writeln!(out, "pipeline {}", saved.pipeline).unwrap();
    for (k, v) in &saved.settings {
        writeln!(out, "setting {k} {v}").unwrap();
    }
    writeln!(out, "kind {}", saved.model.kind()).unwrap();
    writeln!(out, "input_dim {}", saved.model.input_dim()).unwrap();
    if let Model::Mlp(m) = &saved.model {
        writeln!(out, "hidden_dim {}", m.hidden_dim).unwrap();
    }
    let arrays = arrays(saved);
    for (key, values) in &arrays {
        fmt_reals(&mut out, key, values);
    }
    let sum = checksum(arrays.iter().map(|(_, v)| v.as_slice()));
    writeln!(out, "checksum {sum:08x}").unwrap();
    out
}

pub fn save_model(saved: &SavedModel, path: &Path) -> Result<()> {
    std::fs::write(path, write_model(saved)).map_err(|e| Error::io(path, e))
}

fn truncated(what: &str) -> Error {
    Error::ChecksumMismatch(format!("file truncated or damaged: {what}"))
}

pub fn read_model(text: &str) -> Result<SavedModel> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let mut parts = header.split_whitespace();
    if parts.next() != Some(FORMAT_MAGIC) {
        return Err(Error::FormatVersionMismatch(format!(
            "expected {FORMAT_MAGIC:?} header, found {header:?}"
        )));
    }
    let version = parts.next().unwrap_or_default();
    if version != FORMAT_VERSION.to_string() {
        return Err(Error::FormatVersionMismatch(format!(
            "unsupported version {version:?}"
        )));
    }

    let mut pipeline = None;
    let mut settings = Vec::new();
    let mut scalars: HashMap<&str, &str> = HashMap::new();
    let mut reals: HashMap<&str, Vec<f64>> = HashMap::new();
    let mut stored_sum = None;
    for line in lines {
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "pipeline" => pipeline = Some(rest.to_string()),
            "setting" => {
                let (k, v) = rest.split_once(' ').ok_or_else(|| truncated("setting"))?;
                settings.push((k.to_string(), v.to_string()));
            }
            "kind" | "input_dim" | "hidden_dim" => {
                scalars.insert(key, rest);
            }
            "checksum" => {
                stored_sum = Some(u32::from_str_radix(rest.trim(), 16).map_err(|_| truncated("checksum"))?)
            }
            "" => {}
            _ => {
                let values = rest
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| truncated(key))?;
                reals.insert(key, values);
            }
        }
    }
    let stored_sum = stored_sum.ok_or_else(|| truncated("missing checksum"))?;
    let pipeline = pipeline.ok_or_else(|| truncated("missing pipeline"))?;
    let kind: ModelKind = scalars
        .get("kind")
        .ok_or_else(|| truncated("missing kind"))?
        .parse()?;
    let dim = |key: &str| -> Result<usize> {
        scalars
            .get(key)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| truncated(key))
    };
    let input_dim = dim("input_dim")?;
    let mut take = |key: &str, len: usize| -> Result<Vec<f64>> {
        let v = reals.remove(key).ok_or_else(|| truncated(key))?;
        if v.len() != len {
            return Err(truncated(key));
        }
        Ok(v)
    };
    let scaling = ScalingParams {
        min: take("scaling_min", input_dim)?,
        max: take("scaling_max", input_dim)?,
    };
    let model = match kind {
        ModelKind::Svm => Model::Svm(LinearSvmModel {
            weights: take("weights", input_dim)?,
            bias: take("bias", 1)?[0],
            lambda: take("lambda", 1)?[0],
        }),
        ModelKind::Mlp => {
            let hidden_dim = dim("hidden_dim")?;
            Model::Mlp(MlpModel {
                input_dim,
                hidden_dim,
                hidden_weights: take("hidden_weights", hidden_dim * input_dim)?,
                hidden_bias: take("hidden_bias", hidden_dim)?,
                output_weights: take("output_weights", hidden_dim)?,
                output_bias: take("output_bias", 1)?[0],
            })
        }
    };
    let saved = SavedModel {
        pipeline,
        settings,
        scaling,
        model,
    };
    let actual = checksum(arrays(&saved).iter().map(|(_, v)| v.as_slice()));
    if actual != stored_sum {
        return Err(Error::ChecksumMismatch(format!(
            "stored {stored_sum:08x}, computed {actual:08x}"
        )));
    }
    Ok(saved)
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::FormatVersionMismatch("model file is not UTF-8 text".into()))?;
    read_model(&text)
}
