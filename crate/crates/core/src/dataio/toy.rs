use super::{FeatureSequence, Frame};
use crate::error::{Error, Result};

fn pool(frame: &Frame, grid: usize) -> Vec<f32> {
    let span = |i: usize, len: usize| {
        let start = i * len / grid;
        let end = ((i + 1) * len / grid).max(start + 1).min(len);
        (start.min(len - 1), end)
    };
    let mut out = Vec::with_capacity(grid * grid);
    for gy in 0..grid {
        let (y0, y1) = span(gy, frame.height);
        for gx in 0..grid {
            let (x0, x1) = span(gx, frame.width);
            let mut acc = 0.0f64;
            for y in y0..y1 {
                for x in x0..x1 {
                    acc += frame.at(y, x, 0).clamp(0.0, 1.0) as f64;
                }
            }
            out.push((acc / ((y1 - y0) * (x1 - x0)) as f64) as f32);
        }
    }
    out
}

/// Motion-aware stand-in for a CNN backbone over grayscale frames with
/// values in `[0, 1]`.
///
/// Each frame becomes `2 * grid²` features: the `grid × grid` average-pooled
/// image, then the absolute difference to the previous frame's pooled image
/// (zeros for the first frame).
pub fn toy_extract(frames: &[Frame], grid: usize) -> Result<FeatureSequence> {
    let first = frames
        .first()
        .ok_or_else(|| Error::data("toy_extract needs at least one frame"))?;
    if grid == 0 {
        return Err(Error::data("grid must be positive"));
    }
    let g2 = grid * grid;
    let mut values = Vec::with_capacity(frames.len() * 2 * g2);
    let mut prev: Option<Vec<f32>> = None;
    for (i, f) in frames.iter().enumerate() {
        if f.channels != 1 {
            return Err(Error::data(format!(
                "frame {i} has {} channels, expected grayscale",
                f.channels
            )));
        }
        if (f.height, f.width) != (first.height, first.width) {
            return Err(Error::data(format!(
                "frame {i} is {}x{}, expected {}x{}",
                f.height, f.width, first.height, first.width
            )));
        }
        let pooled = pool(f, grid);
        values.extend_from_slice(&pooled);
        match &prev {
            Some(p) => values.extend(pooled.iter().zip(p).map(|(a, b)| (a - b).abs())),
            None => values.extend(std::iter::repeat_n(0.0, g2)),
        }
        prev = Some(pooled);
    }
    FeatureSequence::new(frames.len(), 2 * g2, values)
}
