use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One person detection on one frame. `bbox` is `[x, y, width, height]` in
/// pixels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CropRecord {
    pub frame_index: usize,
    pub bbox: [f64; 4],
    pub confidence: f64,
}

impl CropRecord {
    pub fn area(&self) -> f64 {
        self.bbox[2].max(0.0) * self.bbox[3].max(0.0)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::data(format!(
                "frame {}: confidence {} outside [0, 1]",
                self.frame_index, self.confidence
            )));
        }
        if self.bbox.iter().any(|v| !v.is_finite()) || self.bbox[2] < 0.0 || self.bbox[3] < 0.0 {
            return Err(Error::data(format!(
                "frame {}: invalid bbox {:?}",
                self.frame_index, self.bbox
            )));
        }
        Ok(())
    }
}

/// Reads a JSON array of crop records.
pub fn load_crop_records(path: &Path) -> Result<Vec<CropRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let recs: Vec<CropRecord> = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.display().to_string(),
        offset: 0,
        msg: e.to_string(),
    })?;
    for r in &recs {
        r.validate()?;
    }
    Ok(recs)
}

/// Picks the target among one frame's detections: highest confidence, then
/// larger area, then earlier position in the list.
pub fn select_target_box(detections: &[CropRecord]) -> Result<CropRecord> {
    let mut best: Option<&CropRecord> = None;
    for d in detections {
        best = match best {
            None => Some(d),
            Some(b) if d.confidence > b.confidence || (d.confidence == b.confidence && d.area() > b.area()) => Some(d),
            keep => keep,
        };
    }
    best.cloned().ok_or_else(|| Error::data("no detections for frame"))
}

/// An image as `height × width × channels` row-major reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl Frame {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 || data.len() != height * width * channels {
            return Err(Error::data(format!(
                "frame {height}x{width}x{channels} with {} values",
                data.len()
            )));
        }
        Ok(Frame {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn at(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Decodes a portable pixel/gray map into luminance in `[0, 1]`.
    pub fn load_gray(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::data(format!("cannot decode {}: {e}", path.display())))?
            .to_luma8();
        let (w, h) = img.dimensions();
        let data = img.into_raw().into_iter().map(|v| v as f32 / 255.0).collect();
        Frame::new(h as usize, w as usize, 1, data)
    }
}

/// Expands the box by `margin_fraction` of its size on every side, clamps it
/// to the frame, crops, and bilinearly resizes to `out_size × out_size`
/// (corner-aligned sampling).
pub fn apply_crop(frame: &Frame, crop: &CropRecord, margin_fraction: f64, out_size: usize) -> Result<Frame> {
    if margin_fraction < 0.0 || !margin_fraction.is_finite() {
        return Err(Error::data(format!("margin fraction {margin_fraction} must be >= 0")));
    }
    if out_size == 0 {
        return Err(Error::data("crop output size must be positive"));
    }
    crop.validate()?;
    let [bx, by, bw, bh] = crop.bbox;
    let x0 = (bx - margin_fraction * bw).clamp(0.0, frame.width as f64).floor() as usize;
    let x1 = (bx + bw + margin_fraction * bw).clamp(0.0, frame.width as f64).ceil() as usize;
    let y0 = (by - margin_fraction * bh).clamp(0.0, frame.height as f64).floor() as usize;
    let y1 = (by + bh + margin_fraction * bh).clamp(0.0, frame.height as f64).ceil() as usize;
    if x1 <= x0 || y1 <= y0 {
        return Err(Error::data(format!(
            "frame {}: bbox {:?} is empty after clamping to {}x{}",
            crop.frame_index, crop.bbox, frame.width, frame.height
        )));
    }
    let (cw, ch) = (x1 - x0, y1 - y0);
    let src_coord = |i: usize, len: usize| -> f64 {
        if out_size == 1 {
            (len - 1) as f64 / 2.0
        } else {
            (i * (len - 1)) as f64 / (out_size - 1) as f64
        }
    };
    let mut data = Vec::with_capacity(out_size * out_size * frame.channels);
    for oy in 0..out_size {
        let sy = src_coord(oy, ch);
        let (ya, fy) = (sy.floor() as usize, sy - sy.floor());
        let yb = (ya + 1).min(ch - 1);
        for ox in 0..out_size {
            let sx = src_coord(ox, cw);
            let (xa, fx) = (sx.floor() as usize, sx - sx.floor());
            let xb = (xa + 1).min(cw - 1);
            for c in 0..frame.channels {
                let p = |y: usize, x: usize| frame.at(y0 + y, x0 + x, c) as f64;
                let top = p(ya, xa) * (1.0 - fx) + p(ya, xb) * fx;
                let bottom = p(yb, xa) * (1.0 - fx) + p(yb, xb) * fx;
                data.push((top * (1.0 - fy) + bottom * fy) as f32);
            }
        }
    }
    Frame::new(out_size, out_size, frame.channels, data)
}
