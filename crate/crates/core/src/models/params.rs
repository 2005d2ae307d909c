//! Parameter naming schema and seeded initialization.
//!
//! Names are dotted paths. Convolutional kinds:
//!
//! ```text
//! tcn.input.{weight,bias}                          [H, D, 1], [H]
//! tcn.layers.{l}.dilated.{weight,bias}             [H, H, k], [H]
//! tcn.layers.{l}.pointwise.{weight,bias}           [H, H, 1], [H]
//! stages.{s}.input.{weight,bias}                   [H, D or C, 1], [H]
//! stages.{s}.layers.{l}.dilated.*                  (mstcn)
//! stages.{s}.layers.{l}.branch_up.*                [H, H, k]  dilation 2^l      (mstcn_pp)
//! stages.{s}.layers.{l}.branch_down.*              [H, H, k]  dilation 2^(L-1-l)
//! stages.{s}.layers.{l}.fuse.*                     [H, 2H, 1]
//! stages.{s}.layers.{l}.pointwise.*                [H, H, 1]
//! stages.{s}.output.{weight,bias}                  [C, H, 1], [C]
//! ```
//!
//! LSTM: `lstm.{layer}.{forward,backward}.{w_ih,w_hh,bias}` with shapes
//! `[4U, Din]`, `[4U, U]`, `[4U]`. Every kind ends in
//! `head.hidden.{weight,bias}` and `head.out.{weight,bias}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::numkernel::{ParamSet, Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Init {
    /// U(-1/sqrt(fan_in), 1/sqrt(fan_in))
    FanIn(usize),
    /// U(-1/sqrt(hidden), 1/sqrt(hidden))
    Recurrent(usize),
    Zeros,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    init: Init,
}

fn conv(out: &mut Vec<ParamSpec>, prefix: &str, cout: usize, cin: usize, k: usize) {
    out.push(ParamSpec {
        name: format!("{prefix}.weight"),
        shape: vec![cout, cin, k],
        init: Init::FanIn(cin * k),
    });
    out.push(ParamSpec {
        name: format!("{prefix}.bias"),
        shape: vec![cout],
        init: Init::Zeros,
    });
}

fn dense(out: &mut Vec<ParamSpec>, prefix: &str, dout: usize, din: usize) {
    out.push(ParamSpec {
        name: format!("{prefix}.weight"),
        shape: vec![dout, din],
        init: Init::FanIn(din),
    });
    out.push(ParamSpec {
        name: format!("{prefix}.bias"),
        shape: vec![dout],
        init: Init::Zeros,
    });
}

fn residual_layers(out: &mut Vec<ParamSpec>, prefix: &str, cfg: &ModelConfig, dual: bool) {
    let (h, k) = (cfg.hidden_channels, cfg.kernel_size);
    for l in 0..cfg.levels_per_block {
        let p = format!("{prefix}.layers.{l}");
        if dual {
            conv(out, &format!("{p}.branch_up"), h, h, k);
            conv(out, &format!("{p}.branch_down"), h, h, k);
            conv(out, &format!("{p}.fuse"), h, 2 * h, 1);
        } else {
            conv(out, &format!("{p}.dilated"), h, h, k);
        }
        conv(out, &format!("{p}.pointwise"), h, h, 1);
    }
}

/// Names, shapes and order of every parameter for `cfg`.
pub fn param_schema(cfg: &ModelConfig) -> Vec<ParamSpec> {
    let mut out = Vec::new();
    let h = cfg.hidden_channels;
    match cfg.kind {
        ModelKind::Tcn => {
            conv(&mut out, "tcn.input", h, cfg.input_dim, 1);
            residual_layers(&mut out, "tcn", cfg, false);
        }
        ModelKind::Mstcn | ModelKind::MstcnPp => {
            for s in 0..cfg.num_stages {
                let p = format!("stages.{s}");
                let cin = if s == 0 { cfg.input_dim } else { cfg.num_classes };
                conv(&mut out, &format!("{p}.input"), h, cin, 1);
                residual_layers(&mut out, &p, cfg, cfg.kind == ModelKind::MstcnPp);
                conv(&mut out, &format!("{p}.output"), cfg.num_classes, h, 1);
            }
        }
        ModelKind::Lstm => {
            let u = cfg.lstm_hidden;
            for layer in 0..cfg.lstm_layers {
                let din = if layer == 0 { cfg.input_dim } else { 2 * u };
                for dir in ["forward", "backward"] {
                    let p = format!("lstm.{layer}.{dir}");
                    out.push(ParamSpec {
                        name: format!("{p}.w_ih"),
                        shape: vec![4 * u, din],
                        init: Init::Recurrent(u),
                    });
                    out.push(ParamSpec {
                        name: format!("{p}.w_hh"),
                        shape: vec![4 * u, u],
                        init: Init::Recurrent(u),
                    });
                    out.push(ParamSpec {
                        name: format!("{p}.bias"),
                        shape: vec![4 * u],
                        init: Init::Zeros,
                    });
                }
            }
        }
    }
    dense(&mut out, "head.hidden", cfg.head_hidden, cfg.frame_features());
    dense(&mut out, "head.out", cfg.num_classes, cfg.head_hidden);
    out
}

/// Learned tensors of one model, keyed by schema name in schema order.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<F: Real = f32> {
    tensors: ParamSet<F>,
}

impl<F: Real> ModelParams<F> {
    /// Wraps `tensors` after checking names and shapes against `cfg`.
    pub fn from_tensors(cfg: &ModelConfig, mut tensors: ParamSet<F>) -> Result<Self> {
        let schema = param_schema(cfg);
        let mut ordered = ParamSet::with_capacity(schema.len());
        for spec in &schema {
            let t = tensors
                .swap_remove(&spec.name)
                .ok_or_else(|| Error::config(format!("missing parameter `{}`", spec.name)))?;
            if t.shape() != spec.shape.as_slice() {
                return Err(Error::config(format!(
                    "parameter `{}` has shape {:?}, expected {:?}",
                    spec.name,
                    t.shape(),
                    spec.shape
                )));
            }
            ordered.insert(spec.name.clone(), t);
        }
        if let Some(extra) = tensors.keys().next() {
            return Err(Error::config(format!("unexpected parameter `{extra}`")));
        }
        Ok(ModelParams { tensors: ordered })
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<F>> {
        self.tensors.get(name)
    }

    pub fn tensors(&self) -> &ParamSet<F> {
        &self.tensors
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut ParamSet<F> {
        &mut self.tensors
    }

    pub fn into_tensors(self) -> ParamSet<F> {
        self.tensors
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.keys().map(String::as_str)
    }

    /// Number of tensors.
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn cast<G: Real>(&self) -> ModelParams<G> {
        ModelParams {
            tensors: self.tensors.iter().map(|(k, v)| (k.clone(), v.cast())).collect(),
        }
    }
}

/// Seeded initialization: fan-in scaled uniform weights, uniform recurrent
/// matrices, zero biases.
pub fn build_model(cfg: &ModelConfig, seed: u64) -> Result<ModelParams<f32>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = ParamSet::new();
    for spec in param_schema(cfg) {
        let n: usize = spec.shape.iter().product();
        let data = match spec.init {
            Init::Zeros => vec![0.0f32; n],
            Init::FanIn(fan) | Init::Recurrent(fan) => {
                let bound = 1.0 / (fan as f32).sqrt();
                (0..n).map(|_| rng.gen_range(-bound..bound)).collect()
            }
        };
        tensors.insert(spec.name, Tensor::new(spec.shape, data)?);
    }
    Ok(ModelParams { tensors })
}
