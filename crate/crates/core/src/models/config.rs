use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lstm,
    Tcn,
    Mstcn,
    MstcnPp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Lstm, ModelKind::Tcn, ModelKind::Mstcn, ModelKind::MstcnPp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lstm => "lstm",
            ModelKind::Tcn => "tcn",
            ModelKind::Mstcn => "mstcn",
            ModelKind::MstcnPp => "mstcn_pp",
        }
    }

    pub fn is_multi_stage(self) -> bool {
        matches!(self, ModelKind::Mstcn | ModelKind::MstcnPp)
    }

    pub fn is_convolutional(self) -> bool {
        !matches!(self, ModelKind::Lstm)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "lstm" => Ok(ModelKind::Lstm),
            "tcn" => Ok(ModelKind::Tcn),
            "mstcn" | "ms_tcn" => Ok(ModelKind::Mstcn),
            "mstcn_pp" | "ms_tcn_pp" | "mstcn++" | "ms_tcn++" => Ok(ModelKind::MstcnPp),
            other => Err(Error::config(format!(
                "unknown model kind `{other}` (expected lstm, tcn, mstcn or mstcn_pp)"
            ))),
        }
    }
}

/// How per-frame representations are summarized before the classifier head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Mean,
    Last,
}

impl FromStr for Pooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Pooling::Mean),
            "last" => Ok(Pooling::Last),
            other => Err(Error::config(format!(
                "unknown pooling `{other}` (expected mean or last)"
            ))),
        }
    }
}

/// Architecture hyperparameters for one of the four temporal classifiers.
///
/// [`ModelConfig::new`] fills in the published configuration for each kind:
/// three bidirectional 512-unit LSTM layers with a 128-unit head, or dilated
/// TCN blocks with kernel 5 and 5 levels (dilations 1..16) and a 256-unit
/// head; the multi-stage variants stack 5 such stages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub num_classes: usize,
    pub kernel_size: usize,
    pub levels_per_block: usize,
    pub num_stages: usize,
    pub hidden_channels: usize,
    pub lstm_hidden: usize,
    pub lstm_layers: usize,
    pub head_hidden: usize,
    pub causal: bool,
    pub temporal_pooling: Pooling,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, input_dim: usize) -> Self {
        ModelConfig {
            kind,
            input_dim,
            num_classes: 3,
            kernel_size: 5,
            levels_per_block: 5,
            num_stages: if kind.is_multi_stage() { 5 } else { 1 },
            hidden_channels: 64,
            lstm_hidden: 512,
            lstm_layers: 3,
            head_hidden: if kind == ModelKind::Lstm { 128 } else { 256 },
            causal: true,
            temporal_pooling: Pooling::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("input_dim", self.input_dim),
            ("num_classes", self.num_classes),
            ("head_hidden", self.head_hidden),
        ];
        let mut checks: Vec<(&str, usize)> = positive.to_vec();
        match self.kind {
            ModelKind::Lstm => {
                checks.push(("lstm_hidden", self.lstm_hidden));
                checks.push(("lstm_layers", self.lstm_layers));
            }
            _ => {
                checks.push(("kernel_size", self.kernel_size));
                checks.push(("levels_per_block", self.levels_per_block));
                checks.push(("hidden_channels", self.hidden_channels));
                checks.push(("num_stages", self.num_stages));
            }
        }
        if let Some((name, _)) = checks.iter().find(|(_, v)| *v == 0) {
            return Err(Error::config(format!("{name} must be positive")));
        }
        if self.kind.is_convolutional() {
            if self.levels_per_block > 20 {
                return Err(Error::config(format!(
                    "levels_per_block {} too large (max 20)",
                    self.levels_per_block
                )));
            }
            if self.kind == ModelKind::Tcn && self.num_stages != 1 {
                return Err(Error::config("a plain tcn has exactly one stage; use mstcn for more"));
            }
            // Dilation 1 appears in every block, so (k-1) must be even.
            if !self.causal && !(self.kernel_size - 1).is_multiple_of(2) {
                return Err(Error::config(format!(
                    "acausal convolutions need an odd kernel size, got {}",
                    self.kernel_size
                )));
            }
        }
        Ok(())
    }

    /// Channel width of the per-frame representation fed to the head.
    pub fn frame_features(&self) -> usize {
        match self.kind {
            ModelKind::Lstm => 2 * self.lstm_hidden,
            _ => self.hidden_channels,
        }
    }
}
