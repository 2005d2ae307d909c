//! Checkpoint container: `TACK` magic, `u32` LE header length, a JSON header,
//! then every parameter as little-endian `f32` values in header order.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::atomic_write;
use crate::error::{Error, Result};
use crate::models::{param_schema, ModelConfig, ModelKind, ModelParams};
use crate::numkernel::{ParamSet, Tensor};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"TACK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    model_config: ModelConfig,
    params: Vec<(String, Vec<usize>)>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

/// A loaded checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub metadata: BTreeMap<String, String>,
}

/// Writes `params` with `cfg` and free-form `metadata`. No timestamps are
/// added, so equal inputs give byte-identical files.
pub fn save_checkpoint(
    path: &Path,
    cfg: &ModelConfig,
    params: &ModelParams,
    metadata: &BTreeMap<String, String>,
) -> Result<()> {
    // Re-validate against the schema so a mismatched pair is never written.
    let params = ModelParams::from_tensors(cfg, params.tensors().clone())
        .map_err(|e| Error::Checkpoint(format!("refusing to save: {e}")))?;
    let mut metadata = metadata.clone();
    metadata
        .entry("writer".into())
        .or_insert_with(|| format!("tempact {}", env!("CARGO_PKG_VERSION")));
    let header = Header {
        format_version: CHECKPOINT_VERSION,
        model_config: cfg.clone(),
        params: params
            .tensors()
            .iter()
            .map(|(k, t)| (k.clone(), t.shape().to_vec()))
            .collect(),
        metadata,
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let header_len = u32::try_from(json.len()).map_err(|_| Error::Checkpoint("header too large".into()))?;
    atomic_write(path, |w| {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&header_len.to_le_bytes())?;
        w.write_all(&json)?;
        for t in params.tensors().values() {
            for v in t.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    })
}

/// Reads a checkpoint, optionally insisting on a model kind.
pub fn load_checkpoint(path: &Path, expected_kind: Option<ModelKind>) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::Checkpoint(format!("{}: {msg}", path.display()));
    if bytes.len() < 8 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(bad("not a checkpoint (bad magic)".into()));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let body = bytes
        .get(8..8 + header_len)
        .ok_or_else(|| bad("truncated header".into()))?;
    let version: serde_json::Value = serde_json::from_slice(body).map_err(|e| bad(format!("header: {e}")))?;
    match version.get("format_version").and_then(serde_json::Value::as_u64) {
        Some(v) if v == CHECKPOINT_VERSION as u64 => {}
        Some(v) => {
            return Err(bad(format!(
                "format version {v}, this build reads {CHECKPOINT_VERSION}"
            )))
        }
        None => return Err(bad("header has no format_version".into())),
    }
    let header: Header = serde_json::from_value(version).map_err(|e| bad(format!("header: {e}")))?;
    let cfg = header.model_config;
    if let Some(kind) = expected_kind {
        if cfg.kind != kind {
            return Err(bad(format!("checkpoint holds a {} model, expected {kind}", cfg.kind)));
        }
    }
    cfg.validate().map_err(|e| bad(e.to_string()))?;

    let table: BTreeMap<&str, &[usize]> = header.params.iter().map(|(n, s)| (n.as_str(), s.as_slice())).collect();
    for spec in param_schema(&cfg) {
        match table.get(spec.name.as_str()) {
            None => return Err(bad(format!("missing parameter `{}`", spec.name))),
            Some(shape) if *shape != spec.shape.as_slice() => {
                return Err(bad(format!(
                    "parameter `{}` has shape {shape:?}, config implies {:?}",
                    spec.name, spec.shape
                )))
            }
            Some(_) => {}
        }
    }
    if table.len() != header.params.len() {
        return Err(bad("duplicate parameter names".into()));
    }

    let mut offset = 8 + header_len;
    let mut tensors = ParamSet::new();
    for (name, shape) in header.params {
        let n: usize = shape.iter().product();
        let raw = bytes
            .get(offset..offset + 4 * n)
            .ok_or_else(|| bad(format!("payload truncated in parameter `{name}`")))?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        offset += 4 * n;
        tensors.insert(name, Tensor::new(shape, data)?);
    }
    if offset != bytes.len() {
        return Err(bad(format!("{} trailing bytes after payload", bytes.len() - offset)));
    }
    let params = ModelParams::from_tensors(&cfg, tensors).map_err(|e| bad(e.to_string()))?;
    if let Some((name, _)) = params.tensors().iter().find(|(_, t)| !t.is_finite()) {
        return Err(bad(format!("parameter `{name}` holds non-finite values")));
    }
    Ok(Checkpoint {
        config: cfg,
        params,
        metadata: header.metadata,
    })
}
