//! `FSQ1` feature files: 4 ASCII magic bytes, `u32` LE frame count, `u32` LE
//! feature dimension, then `T * D` little-endian `f32` values, frame-major.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::atomic_write;
use crate::error::{Error, Result};
use crate::numkernel::Tensor;

pub const FEATURE_MAGIC: &[u8; 4] = b"FSQ1";
const HEADER_LEN: usize = 12;

/// A `T × D` matrix of per-frame features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSequence {
    frames: usize,
    dim: usize,
    values: Vec<f32>,
}

impl FeatureSequence {
    pub fn new(frames: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if frames == 0 || dim == 0 {
            return Err(Error::data(format!(
                "feature sequence must be at least 1x1, got {frames}x{dim}"
            )));
        }
        if values.len() != frames * dim {
            return Err(Error::data(format!(
                "feature sequence {frames}x{dim} needs {} values, got {}",
                frames * dim,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "non-finite feature at frame {} dim {}",
                i / dim,
                i % dim
            )));
        }
        Ok(FeatureSequence { frames, dim, values })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::data(format!(
                "frame {bad} has {} features, expected {dim}",
                rows[bad].len()
            )));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.values[t * self.dim..(t + 1) * self.dim]
    }

    /// Frames `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<Self> {
        if len == 0 || start + len > self.frames {
            return Err(Error::data(format!(
                "window [{start}, {}) outside {} frames",
                start + len,
                self.frames
            )));
        }
        Ok(FeatureSequence {
            frames: len,
            dim: self.dim,
            values: self.values[start * self.dim..(start + len) * self.dim].to_vec(),
        })
    }

    /// `[T, D]` tensor.
    pub fn to_tensor(&self) -> Tensor<f32> {
        Tensor::from_parts(vec![self.frames, self.dim], self.values.clone())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.values.len() * 4);
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&(self.frames as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses an `FSQ1` buffer; `origin` names the source in errors.
    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self> {
        let fail = |offset: usize, msg: String| Error::Format {
            path: origin.to_string(),
            offset: offset as u64,
            msg,
        };
        if bytes.len() < 4 || &bytes[..4] != FEATURE_MAGIC {
            return Err(fail(0, "bad magic, expected \"FSQ1\"".into()));
        }
        if bytes.len() < HEADER_LEN {
            return Err(fail(bytes.len(), "truncated header".into()));
        }
        let frames = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if frames == 0 || dim == 0 {
            return Err(fail(4, format!("empty shape {frames}x{dim}")));
        }
        let expected = frames
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| fail(4, format!("shape {frames}x{dim} overflows")))?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != expected {
            return Err(fail(
                HEADER_LEN + payload.len().min(expected),
                format!(
                    "payload is {} bytes, header {frames}x{dim} requires {expected}",
                    payload.len()
                ),
            ));
        }
        let mut values = Vec::with_capacity(frames * dim);
        for (i, chunk) in payload.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(fail(HEADER_LEN + i * 4, format!("non-finite value {v}")));
            }
            values.push(v);
        }
        Ok(FeatureSequence { frames, dim, values })
    }
}

pub fn write_features(path: &Path, seq: &FeatureSequence) -> Result<()> {
    atomic_write(path, |f| f.write_all(&seq.to_bytes()))
}

pub fn read_features(path: &Path) -> Result<FeatureSequence> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureSequence::from_bytes(&bytes, &path.display().to_string())
}
