//! Minibatch Adam training with cross-entropy loss, and checkpoint files.

mod checkpoint;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::{FeatureSequence, Manifest};
use crate::error::{Error, Result};
use crate::evaluation::weighted_f1;
use crate::models::{build_forward, build_model, forward_clip, BoundParams, ModelConfig, ModelParams, Prediction};
use crate::numkernel::{adam_step, AdamState, Graph, ParamSet, Real, Tensor, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Adds the mean per-stage cross-entropy for multi-stage kinds.
    pub stage_supervision: bool,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 16,
            learning_rate: 1e-3,
            seed: 0,
            stage_supervision: true,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("epochs and batch_size must be positive"));
        }
        // Zero is accepted so a run can be checked for side effects.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning_rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// A clip in memory with its class index.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledClip {
    pub clip_id: String,
    pub label: usize,
    pub features: FeatureSequence,
}

/// Reads every clip of `manifest`, ordered by clip id so that manifest row
/// order never affects training.
pub fn load_clips(manifest: &Manifest) -> Result<Vec<LabeledClip>> {
    let mut clips = Vec::with_capacity(manifest.len());
    for rec in manifest.records() {
        let features = manifest.load_features(rec)?;
        if features.frames() != rec.n_frames {
            return Err(Error::data(format!(
                "clip `{}`: manifest says {} frames, feature file has {}",
                rec.clip_id,
                rec.n_frames,
                features.frames()
            )));
        }
        clips.push(LabeledClip {
            clip_id: rec.clip_id.clone(),
            label: rec.label.index(),
            features,
        });
    }
    clips.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
    Ok(clips)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean minibatch loss per epoch.
    pub epoch_loss: Vec<f64>,
    /// Weighted F1 on the validation clips after each epoch; empty without
    /// validation data.
    pub val_weighted_f1: Vec<f64>,
    pub epoch_seconds: Vec<f64>,
    /// Validation predictions of the final parameters, by clip id.
    pub val_predictions: Vec<(String, Prediction)>,
}

/// Builds the training loss of one minibatch on `g`.
///
/// Clips of equal length share one batched forward pass; each group's mean
/// cross-entropy is weighted by its share of the batch, so the result is the
/// mean over all clips.
pub fn batch_loss<F: Real>(
    g: &mut Graph<F>,
    cfg: &ModelConfig,
    params: &BoundParams,
    batch: &[&LabeledClip],
    stage_supervision: bool,
) -> Result<Var> {
    if batch.is_empty() {
        return Err(Error::Training("empty minibatch".into()));
    }
    let mut groups: BTreeMap<usize, Vec<&LabeledClip>> = BTreeMap::new();
    for clip in batch {
        if clip.features.dim() != cfg.input_dim {
            return Err(Error::data(format!(
                "clip `{}` has feature dimension {}, model expects {}",
                clip.clip_id,
                clip.features.dim(),
                cfg.input_dim
            )));
        }
        groups.entry(clip.features.frames()).or_default().push(clip);
    }
    let mut total: Option<Var> = None;
    for (frames, clips) in groups {
        let mut data = Vec::with_capacity(clips.len() * frames * cfg.input_dim);
        for c in &clips {
            data.extend(c.features.values().iter().map(|&v| F::from_f64(v as f64)));
        }
        let x = g.input(Tensor::new(vec![clips.len(), frames, cfg.input_dim], data)?);
        let labels: Vec<usize> = clips.iter().map(|c| c.label).collect();
        let out = build_forward(g, cfg, params, x)?;
        let mut loss = g.cross_entropy(out.log_probs, &labels)?;
        if stage_supervision && !out.stage_log_probs.is_empty() {
            let n = out.stage_log_probs.len();
            let mut stages = g.cross_entropy(out.stage_log_probs[0], &labels)?;
            for &s in &out.stage_log_probs[1..] {
                let l = g.cross_entropy(s, &labels)?;
                stages = g.add(stages, l)?;
            }
            let stages = g.scale(stages, F::from_f64(1.0 / n as f64))?;
            loss = g.add(loss, stages)?;
        }
        let weighted = g.scale(loss, F::from_f64(clips.len() as f64 / batch.len() as f64))?;
        total = Some(match total {
            Some(t) => g.add(t, weighted)?,
            None => weighted,
        });
    }
    Ok(total.expect("non-empty batch has a group"))
}

/// Loss value and gradients for one minibatch, keyed by parameter name.
pub fn batch_gradients<F: Real>(
    cfg: &ModelConfig,
    params: &ModelParams<F>,
    batch: &[&LabeledClip],
    stage_supervision: bool,
) -> Result<(f64, ParamSet<F>)> {
    let mut g = Graph::<F>::new();
    let bound = BoundParams::bind(&mut g, params);
    let loss = batch_loss(&mut g, cfg, &bound, batch, stage_supervision)?;
    let value = g.value(loss).data()[0].as_f64();
    let mut grads = g.backward(loss)?;
    let mut out = ParamSet::new();
    for (name, var) in bound.iter() {
        if let Some(t) = grads.take(var) {
            out.insert(name.to_string(), t);
        }
    }
    Ok((value, out))
}

/// Class predictions for each clip, in order.
pub fn predict_clips(cfg: &ModelConfig, params: &ModelParams, clips: &[LabeledClip]) -> Result<Vec<Prediction>> {
    clips.iter().map(|c| forward_clip(cfg, params, &c.features)).collect()
}

/// Trains from seeded initialization on the clips of `train_manifest`.
pub fn train(
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    train_manifest: &Manifest,
    val_manifest: Option<&Manifest>,
) -> Result<(ModelParams, TrainHistory)> {
    if train_manifest.is_empty() {
        return Err(Error::config("training manifest is empty"));
    }
    let clips = load_clips(train_manifest)?;
    let val = val_manifest.map(load_clips).transpose()?;
    train_on_clips(cfg, tcfg, &clips, val.as_deref())
}

/// [`train`] over clips already in memory.
pub fn train_on_clips(
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    clips: &[LabeledClip],
    val: Option<&[LabeledClip]>,
) -> Result<(ModelParams, TrainHistory)> {
    tcfg.validate()?;
    cfg.validate()?;
    if clips.is_empty() {
        return Err(Error::config("no training clips"));
    }
    let mut params = build_model(cfg, tcfg.seed)?;
    let mut adam = AdamState::<f32>::new(tcfg.learning_rate);
    let mut history = TrainHistory::default();
    let mut order: Vec<usize> = (0..clips.len()).collect();
    let mut shuffler = ChaCha8Rng::seed_from_u64(tcfg.seed);

    for epoch in 0..tcfg.epochs {
        let started = Instant::now();
        if tcfg.shuffle {
            order.sort_unstable();
            shuffler.set_stream(epoch as u64 + 1);
            shuffler.set_word_pos(0);
            order.shuffle(&mut shuffler);
        }
        let mut loss_sum = 0.0;
        let mut batches = 0;
        for (b, idx) in order.chunks(tcfg.batch_size).enumerate() {
            let batch: Vec<&LabeledClip> = idx.iter().map(|&i| &clips[i]).collect();
            let context = |e: Error| match e {
                Error::NonFinite(what) => {
                    Error::Training(format!("epoch {epoch} batch {b}: non-finite value in {what}"))
                }
                Error::Training(msg) => Error::Training(format!("epoch {epoch} batch {b}: {msg}")),
                other => other,
            };
            let (loss, grads) = batch_gradients(cfg, &params, &batch, tcfg.stage_supervision).map_err(context)?;
            if !loss.is_finite() {
                return Err(Error::Training(format!("epoch {epoch} batch {b}: loss is {loss}")));
            }
            adam_step(params.tensors_mut(), &grads, &mut adam).map_err(context)?;
            loss_sum += loss;
            batches += 1;
        }
        history.epoch_loss.push(loss_sum / batches as f64);
        if let Some(val) = val.filter(|v| !v.is_empty()) {
            let preds = predict_clips(cfg, &params, val)?;
            let truth: Vec<usize> = val.iter().map(|c| c.label).collect();
            let guess: Vec<usize> = preds.iter().map(|p| p.predicted_label).collect();
            history
                .val_weighted_f1
                .push(weighted_f1(&truth, &guess, cfg.num_classes)?.weighted_f1);
            if epoch + 1 == tcfg.epochs {
                history.val_predictions = val.iter().map(|c| c.clip_id.clone()).zip(preds).collect();
            }
        }
        history.epoch_seconds.push(started.elapsed().as_secs_f64());
    }
    Ok((params, history))
}
