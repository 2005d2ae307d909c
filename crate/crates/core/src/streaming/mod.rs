//! Sliding-window inference over a frame-by-frame feature stream.
//!
//! Frames enter a FIFO buffer of `window` frames. Every `hop` frames once
//! the buffer is full, the buffered window is classified with
//! [`forward_clip`], so a streamed prediction is bit-identical to classifying
//! the same slice offline. Bidirectional LSTM models are accepted but are not
//! frame-causal: each window is classified as a whole once it is complete.

mod latency;

pub use latency::{latency_report, nearest_rank, parse_latency_json, LatencyStats};

use std::borrow::Cow;
use std::collections::VecDeque;
use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataio::{read_features, FeatureSequence};
use crate::error::{Error, Result};
use crate::models::{forward_clip, ModelConfig, ModelParams, Prediction};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitPolicy {
    /// Emit at every hop boundary.
    #[default]
    EveryHop,
    /// Emit only when the predicted label differs from the last emission.
    OnChange,
}

impl std::str::FromStr for EmitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "every_hop" => Ok(EmitPolicy::EveryHop),
            "on_change" => Ok(EmitPolicy::OnChange),
            _ => Err(Error::config(format!(
                "unknown emit policy `{s}` (every_hop, on_change)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StreamConfig {
    pub window: usize,
    pub hop: usize,
    pub emit_policy: EmitPolicy,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            window: 50,
            hop: 1,
            emit_policy: EmitPolicy::EveryHop,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.hop == 0 || self.hop > self.window {
            return Err(Error::config(format!(
                "stream needs 1 <= hop <= window, got hop {} window {}",
                self.hop, self.window
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    /// Index of the newest frame in the window.
    pub end_index: usize,
    /// Index of the oldest frame in the window.
    pub start_index: usize,
    pub prediction: Prediction,
    /// Milliseconds from the newest frame's arrival to emission.
    pub latency_ms: f64,
}

pub struct StreamEngine<'a> {
    model: Cow<'a, ModelConfig>,
    params: Cow<'a, ModelParams>,
    config: StreamConfig,
    buffer: VecDeque<Vec<f32>>,
    pushed: usize,
    last_label: Option<usize>,
}

impl StreamEngine<'static> {
    /// An engine that owns its model, for callers that cannot keep one alive.
    pub fn owned(model: ModelConfig, params: ModelParams, config: StreamConfig) -> Result<Self> {
        Self::build(Cow::Owned(model), Cow::Owned(params), config)
    }
}

impl<'a> StreamEngine<'a> {
    pub fn new(model: &'a ModelConfig, params: &'a ModelParams, config: StreamConfig) -> Result<Self> {
        Self::build(Cow::Borrowed(model), Cow::Borrowed(params), config)
    }

    fn build(model: Cow<'a, ModelConfig>, params: Cow<'a, ModelParams>, config: StreamConfig) -> Result<Self> {
        config.validate()?;
        model.validate()?;
        Ok(StreamEngine {
            model,
            params,
            buffer: VecDeque::with_capacity(config.window),
            config,
            pushed: 0,
            last_label: None,
        })
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    /// Frames pushed so far.
    pub fn frames_seen(&self) -> usize {
        self.pushed
    }

    /// Stream indices currently buffered, oldest first.
    pub fn resident(&self) -> std::ops::Range<usize> {
        self.pushed - self.buffer.len()..self.pushed
    }

    /// Appends one frame. `arrival` is when the frame became available; the
    /// reported latency is measured from it.
    pub fn push(&mut self, frame: &[f32], arrival: Instant) -> Result<Option<WindowResult>> {
        if frame.len() != self.model.input_dim {
            return Err(Error::Stream(format!(
                "frame {} has {} features, model expects {}",
                self.pushed,
                frame.len(),
                self.model.input_dim
            )));
        }
        if let Some(i) = frame.iter().position(|v| !v.is_finite()) {
            return Err(Error::Stream(format!(
                "frame {} feature {i} is not finite",
                self.pushed
            )));
        }
        if self.buffer.len() == self.config.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(frame.to_vec());
        self.pushed += 1;

        let w = self.config.window;
        if self.pushed < w || !(self.pushed - w).is_multiple_of(self.config.hop) {
            return Ok(None);
        }
        let values: Vec<f32> = self.buffer.iter().flatten().copied().collect();
        let window = FeatureSequence::new(w, self.model.input_dim, values)?;
        let prediction = forward_clip(&self.model, &self.params, &window)?;
        let label = prediction.predicted_label;
        let changed = self.last_label != Some(label);
        self.last_label = Some(label);
        if self.config.emit_policy == EmitPolicy::OnChange && !changed {
            return Ok(None);
        }
        Ok(Some(WindowResult {
            end_index: self.pushed - 1,
            start_index: self.pushed - w,
            prediction,
            latency_ms: arrival.elapsed().as_secs_f64() * 1e3,
        }))
    }
}

/// Everything a replay produced.
#[derive(Clone, Debug)]
pub struct StreamRun {
    pub results: Vec<WindowResult>,
    pub frames: usize,
    /// `None` when nothing was emitted.
    pub stats: Option<LatencyStats>,
}

/// Replays a feature file through `engine` as fast as inference allows.
pub fn stream_file(engine: &mut StreamEngine<'_>, path: &Path) -> Result<StreamRun> {
    let seq = read_features(path)?;
    stream_sequence(engine, &seq)
}

pub fn stream_sequence(engine: &mut StreamEngine<'_>, seq: &FeatureSequence) -> Result<StreamRun> {
    let started = Instant::now();
    let mut results = Vec::new();
    for t in 0..seq.frames() {
        if let Some(r) = engine.push(seq.row(t), Instant::now())? {
            results.push(r);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let latencies: Vec<f64> = results.iter().map(|r| r.latency_ms).collect();
    Ok(StreamRun {
        stats: LatencyStats::from_latencies(&latencies, seq.frames(), elapsed),
        frames: seq.frames(),
        results,
    })
}

/// Runs ingestion and inference on separate threads.
///
/// `frames` is drained on a producer thread into a channel holding at most
/// one window of frames; when inference falls that far behind, the producer
/// blocks instead of dropping frames. `on_result` runs on the calling thread
/// for every emission. A producer error stops the stream and is returned.
pub fn stream_pipelined<I>(
    engine: &mut StreamEngine<'_>,
    frames: I,
    mut on_result: impl FnMut(&WindowResult) -> Result<()>,
) -> Result<StreamRun>
where
    I: Iterator<Item = Result<Vec<f32>>> + Send,
{
    let started = Instant::now();
    let (tx, rx) = mpsc::sync_channel::<Result<(Vec<f32>, Instant)>>(engine.config().window);
    let mut results = Vec::new();
    let mut count = 0;
    std::thread::scope(|s| -> Result<()> {
        s.spawn(move || {
            for f in frames {
                let stop = f.is_err();
                if tx.send(f.map(|v| (v, Instant::now()))).is_err() || stop {
                    break;
                }
            }
        });
        for msg in rx {
            let (frame, arrival) = msg?;
            count += 1;
            if let Some(r) = engine.push(&frame, arrival)? {
                on_result(&r)?;
                results.push(r);
            }
        }
        Ok(())
    })?;
    let latencies: Vec<f64> = results.iter().map(|r| r.latency_ms).collect();
    Ok(StreamRun {
        stats: LatencyStats::from_latencies(&latencies, count, started.elapsed().as_secs_f64()),
        frames: count,
        results,
    })
}
