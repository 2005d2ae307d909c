//! The four temporal classifiers: bidirectional LSTM, single-block TCN,
//! multi-stage TCN and MS-TCN++ with dual-dilation layers.

mod config;
mod net;
mod params;

pub use config::{ModelConfig, ModelKind, Pooling};
pub use net::{
    build_forward, build_frames, dilated_residual_layer, dual_dilation_layer, BoundParams, DualDilationWeights,
    FrameOutput, ModelOutput, ResidualWeights,
};
pub use params::{build_model, param_schema, ModelParams, ParamSpec};

use serde::{Deserialize, Serialize};

use crate::dataio::FeatureSequence;
use crate::error::{Error, Result};
use crate::numkernel::Graph;

/// Clip-level output of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub log_probs: Vec<f32>,
    pub predicted_label: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_stage_log_probs: Option<Vec<Vec<f32>>>,
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl Prediction {
    pub fn from_log_probs(log_probs: Vec<f32>, per_stage_log_probs: Option<Vec<Vec<f32>>>) -> Self {
        Prediction {
            predicted_label: argmax(&log_probs),
            log_probs,
            per_stage_log_probs,
        }
    }
}

/// Classifies one clip. Pure: the same inputs always give the same bits.
pub fn forward_clip(cfg: &ModelConfig, params: &ModelParams<f32>, features: &FeatureSequence) -> Result<Prediction> {
    if features.dim() != cfg.input_dim {
        return Err(Error::data(format!(
            "feature dimension {} does not match model input_dim {}",
            features.dim(),
            cfg.input_dim
        )));
    }
    let mut g = Graph::<f32>::new();
    let bound = BoundParams::bind(&mut g, params);
    let x = g.input(features.to_tensor().reshape(&[1, features.frames(), features.dim()])?);
    let out = build_forward(&mut g, cfg, &bound, x)?;
    let log_probs = g.value(out.log_probs).data().to_vec();
    let stages = cfg.kind.is_multi_stage().then(|| {
        out.stage_log_probs
            .iter()
            .map(|&v| g.value(v).data().to_vec())
            .collect()
    });
    Ok(Prediction::from_log_probs(log_probs, stages))
}

/// Number of input frames, counting the current one, that can influence the
/// final frame's representation.
///
/// A block with kernel `k` and `L` levels of doubling dilation reaches
/// `(k-1)(2^L - 1)` frames back; stages add up. Dual-dilation layers reach as
/// far as their wider branch. Acausal convolutions only look back half as far.
pub fn receptive_field(cfg: &ModelConfig) -> Result<usize> {
    if !cfg.kind.is_convolutional() {
        return Err(Error::config(
            "receptive_field is defined for convolutional models only",
        ));
    }
    cfg.validate()?;
    let levels = cfg.levels_per_block;
    let dilation_sum: usize = (0..levels)
        .map(|l| match cfg.kind {
            ModelKind::MstcnPp => (1usize << l).max(1 << (levels - 1 - l)),
            _ => 1 << l,
        })
        .sum();
    let taps_back = if cfg.causal {
        cfg.kernel_size - 1
    } else {
        (cfg.kernel_size - 1) / 2
    };
    Ok(1 + cfg.num_stages * taps_back * dilation_sum)
}

#[cfg(test)]
mod tests;
