use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataio::{SynthSpec, DEFAULT_KEYFRAMES};
use crate::error::{Error, Result};
use crate::models::{ModelConfig, ModelKind, Pooling};
use crate::streaming::StreamConfig;
use crate::training::TrainConfig;

/// Model settings that may be left open until the data fixes `input_dim`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub kind: Option<ModelKind>,
    pub num_classes: Option<usize>,
    pub kernel_size: Option<usize>,
    pub levels_per_block: Option<usize>,
    pub num_stages: Option<usize>,
    pub hidden_channels: Option<usize>,
    pub lstm_hidden: Option<usize>,
    pub lstm_layers: Option<usize>,
    pub head_hidden: Option<usize>,
    pub causal: Option<bool>,
    pub temporal_pooling: Option<Pooling>,
}

impl ModelSection {
    /// Kind defaults to MS-TCN; unset fields take that kind's defaults.
    pub fn resolve(&self, input_dim: usize) -> Result<ModelConfig> {
        let mut c = ModelConfig::new(self.kind.unwrap_or(ModelKind::Mstcn), input_dim);
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = self.$f { c.$f = v; } )*};
        }
        set!(
            num_classes,
            kernel_size,
            levels_per_block,
            num_stages,
            hidden_channels,
            lstm_hidden,
            lstm_layers,
            head_hidden,
            causal,
            temporal_pooling
        );
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractSection {
    pub grid: usize,
    pub crop_size: usize,
    pub margin: f64,
    pub keyframes: usize,
}

impl Default for ExtractSection {
    fn default() -> Self {
        ExtractSection {
            grid: 4,
            crop_size: 64,
            margin: 0.1,
            keyframes: DEFAULT_KEYFRAMES,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSection {
    pub folds: usize,
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection { folds: 5 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsSection {
    pub manifest: Option<PathBuf>,
    pub val_manifest: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub frames_dir: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

/// Everything a command can be configured with. A top-level `seed`, when
/// given, replaces the seeds of the training, fold and synthesis sections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub jobs: usize,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub stream: StreamConfig,
    pub synth: SynthSpec,
    pub extract: ExtractSection,
    pub cv: CvSection,
    pub paths: PathsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            out_dir: None,
            jobs: 1,
            model: ModelSection::default(),
            train: TrainConfig::default(),
            stream: StreamConfig::default(),
            synth: SynthSpec::default(),
            extract: ExtractSection::default(),
            cv: CvSection::default(),
            paths: PathsSection::default(),
        }
    }
}

impl RunConfig {
    /// Reads TOML, or JSON when the file name ends in `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.train.seed = seed;
        self.synth.seed = seed;
    }

    /// Seed used for fold planning.
    pub fn fold_seed(&self) -> u64 {
        self.seed.unwrap_or(self.train.seed)
    }
}
