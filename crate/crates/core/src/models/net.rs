//! Graph construction for the four classifiers over `[B, T, D]` input.

use indexmap::IndexMap;

use super::{ModelConfig, ModelKind, ModelParams, Pooling};
use crate::error::{Error, Result};
use crate::numkernel::{Graph, LstmWeights, Real, Var};

/// Parameters placed on a graph as trainable leaves.
#[derive(Clone, Debug)]
pub struct BoundParams {
    vars: IndexMap<String, Var>,
}

impl BoundParams {
    pub fn bind<F: Real>(g: &mut Graph<F>, params: &ModelParams<F>) -> Self {
        let vars = params
            .tensors()
            .iter()
            .map(|(name, t)| (name.clone(), g.param(t.clone())))
            .collect();
        BoundParams { vars }
    }

    pub fn from_vars(vars: IndexMap<String, Var>) -> Self {
        BoundParams { vars }
    }

    pub fn get(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::config(format!("missing parameter `{name}`")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var)> {
        self.vars.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn conv(&self, prefix: &str) -> Result<(Var, Var)> {
        Ok((
            self.get(&format!("{prefix}.weight"))?,
            self.get(&format!("{prefix}.bias"))?,
        ))
    }
}

/// Weights of a residual layer: dilated conv → relu → 1×1 conv → add.
#[derive(Clone, Copy, Debug)]
pub struct ResidualWeights {
    pub dilated: (Var, Var),
    pub pointwise: (Var, Var),
}

/// Weights of a dual-dilation residual layer.
#[derive(Clone, Copy, Debug)]
pub struct DualDilationWeights {
    pub branch_up: (Var, Var),
    pub branch_down: (Var, Var),
    pub fuse: (Var, Var),
    pub pointwise: (Var, Var),
}

pub fn dilated_residual_layer<F: Real>(
    g: &mut Graph<F>,
    x: Var,
    w: &ResidualWeights,
    dilation: usize,
    causal: bool,
) -> Result<Var> {
    let h = g.conv1d_dilated(x, w.dilated.0, w.dilated.1, dilation, causal)?;
    let h = g.relu(h)?;
    let h = g.conv1d_dilated(h, w.pointwise.0, w.pointwise.1, 1, causal)?;
    g.add(x, h)
}

/// Layer `layer` of `levels`: parallel convolutions with dilations
/// `2^layer` and `2^(levels-1-layer)`, concatenated on channels, fused by a
/// 1×1 convolution, relu, a second 1×1 convolution and a residual add.
pub fn dual_dilation_layer<F: Real>(
    g: &mut Graph<F>,
    x: Var,
    layer: usize,
    levels: usize,
    w: &DualDilationWeights,
    causal: bool,
) -> Result<Var> {
    if layer >= levels {
        return Err(Error::config(format!(
            "dual dilation layer {layer} outside {levels} levels"
        )));
    }
    let up = g.conv1d_dilated(x, w.branch_up.0, w.branch_up.1, 1 << layer, causal)?;
    let down = g.conv1d_dilated(x, w.branch_down.0, w.branch_down.1, 1 << (levels - 1 - layer), causal)?;
    let cat = g.concat(&[up, down])?;
    let h = g.conv1d_dilated(cat, w.fuse.0, w.fuse.1, 1, causal)?;
    let h = g.relu(h)?;
    let h = g.conv1d_dilated(h, w.pointwise.0, w.pointwise.1, 1, causal)?;
    g.add(x, h)
}

/// One TCN block: 1×1 input projection followed by the residual layers.
fn tcn_block<F: Real>(g: &mut Graph<F>, cfg: &ModelConfig, p: &BoundParams, prefix: &str, x: Var) -> Result<Var> {
    let (w, b) = p.conv(&format!("{prefix}.input"))?;
    let mut h = g.conv1d_dilated(x, w, b, 1, cfg.causal)?;
    let levels = cfg.levels_per_block;
    for l in 0..levels {
        let lp = format!("{prefix}.layers.{l}");
        h = if cfg.kind == ModelKind::MstcnPp {
            let w = DualDilationWeights {
                branch_up: p.conv(&format!("{lp}.branch_up"))?,
                branch_down: p.conv(&format!("{lp}.branch_down"))?,
                fuse: p.conv(&format!("{lp}.fuse"))?,
                pointwise: p.conv(&format!("{lp}.pointwise"))?,
            };
            dual_dilation_layer(g, h, l, levels, &w, cfg.causal)?
        } else {
            let w = ResidualWeights {
                dilated: p.conv(&format!("{lp}.dilated"))?,
                pointwise: p.conv(&format!("{lp}.pointwise"))?,
            };
            dilated_residual_layer(g, h, &w, 1 << l, cfg.causal)?
        };
    }
    Ok(h)
}

/// Per-frame representation and, for multi-stage kinds, each stage's
/// per-frame class logits.
#[derive(Clone, Debug)]
pub struct FrameOutput {
    pub frames: Var,
    pub stage_logits: Vec<Var>,
}

pub fn build_frames<F: Real>(g: &mut Graph<F>, cfg: &ModelConfig, p: &BoundParams, x: Var) -> Result<FrameOutput> {
    match cfg.kind {
        ModelKind::Tcn => Ok(FrameOutput {
            frames: tcn_block(g, cfg, p, "tcn", x)?,
            stage_logits: Vec::new(),
        }),
        ModelKind::Mstcn | ModelKind::MstcnPp => {
            let mut input = x;
            let mut stage_logits = Vec::with_capacity(cfg.num_stages);
            let mut frames = x;
            for s in 0..cfg.num_stages {
                let prefix = format!("stages.{s}");
                frames = tcn_block(g, cfg, p, &prefix, input)?;
                let (w, b) = p.conv(&format!("{prefix}.output"))?;
                let logits = g.conv1d_dilated(frames, w, b, 1, cfg.causal)?;
                stage_logits.push(logits);
                if s + 1 < cfg.num_stages {
                    input = g.softmax(logits)?;
                }
            }
            Ok(FrameOutput { frames, stage_logits })
        }
        ModelKind::Lstm => {
            let mut h = x;
            for layer in 0..cfg.lstm_layers {
                let dir = |d: &str| -> Result<LstmWeights> {
                    let pre = format!("lstm.{layer}.{d}");
                    Ok(LstmWeights {
                        w_ih: p.get(&format!("{pre}.w_ih"))?,
                        w_hh: p.get(&format!("{pre}.w_hh"))?,
                        bias: p.get(&format!("{pre}.bias"))?,
                    })
                };
                h = g.lstm_layer(h, dir("forward")?, Some(dir("backward")?))?;
            }
            Ok(FrameOutput {
                frames: h,
                stage_logits: Vec::new(),
            })
        }
    }
}

fn pool<F: Real>(g: &mut Graph<F>, x: Var, pooling: Pooling) -> Result<Var> {
    match pooling {
        Pooling::Mean => g.mean_time(x),
        Pooling::Last => g.last_time(x),
    }
}

/// Graph outputs: `[B, C]` log-probabilities, one `[B, C]` pooled
/// log-probability node per stage (multi-stage kinds only), and the
/// per-frame representation.
#[derive(Clone, Debug)]
pub struct ModelOutput {
    pub log_probs: Var,
    pub stage_log_probs: Vec<Var>,
    pub frames: Var,
}

pub fn build_forward<F: Real>(g: &mut Graph<F>, cfg: &ModelConfig, p: &BoundParams, x: Var) -> Result<ModelOutput> {
    let out = build_frames(g, cfg, p, x)?;
    let pooled = pool(g, out.frames, cfg.temporal_pooling)?;
    let (w, b) = p.conv("head.hidden")?;
    let h = g.dense(pooled, w, b)?;
    let h = g.relu(h)?;
    let (w, b) = p.conv("head.out")?;
    let logits = g.dense(h, w, b)?;
    let log_probs = g.log_softmax(logits)?;
    let mut stage_log_probs = Vec::with_capacity(out.stage_logits.len());
    for logits in out.stage_logits {
        let pooled = pool(g, logits, cfg.temporal_pooling)?;
        stage_log_probs.push(g.log_softmax(pooled)?);
    }
    Ok(ModelOutput {
        log_probs,
        stage_log_probs,
        frames: out.frames,
    })
}
