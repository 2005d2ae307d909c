//! C interface to tempact.
//!
//! Handles are opaque pointers created by `ta_*_new`/`ta_*_load` and released
//! with the matching `ta_*_free`. Every fallible call returns a [`TaStatus`];
//! on failure, [`ta_last_error`] describes what went wrong on the calling
//! thread. Panics never cross the boundary and are reported as
//! `TA_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use tempact::dataio::FeatureSequence;
use tempact::evaluation::weighted_f1;
use tempact::models::{forward_clip, ModelConfig, ModelParams};
use tempact::streaming::{EmitPolicy, StreamConfig, StreamEngine};
use tempact::training::load_checkpoint;
use tempact::Error;

/// Result of a call. Numeric values match the command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaStatus {
    Ok = 0,
    Config = 2,
    Data = 3,
    Training = 4,
    Checkpoint = 5,
    Io = 6,
    /// A required pointer was null or a size argument was inconsistent.
    InvalidArgument = 7,
    /// A Rust panic was caught.
    Internal = 8,
}

/// A loaded model.
pub struct TaModel {
    config: ModelConfig,
    params: ModelParams,
}

/// A sliding-window stream over one model.
pub struct TaStream {
    engine: StreamEngine<'static>,
    num_classes: usize,
}

/// One emitted window.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TaWindowResult {
    pub start_index: usize,
    pub end_index: usize,
    pub label: usize,
    pub latency_ms: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> TaStatus {
    match e.exit_code() {
        2 => TaStatus::Config,
        3 => TaStatus::Data,
        4 => TaStatus::Training,
        5 => TaStatus::Checkpoint,
        6 => TaStatus::Io,
        _ => TaStatus::Internal,
    }
}

struct Fail(TaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(TaStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TaStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            TaStatus::Internal
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(invalid(format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    ptr.as_mut().ok_or_else(|| invalid(format!("{what} is null")))
}

/// Message for the last failed call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ta_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Loads a checkpoint from `path` (UTF-8, NUL-terminated).
///
/// # Safety
/// `path` must be a valid C string and `out_model` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ta_model_load(path: *const c_char, out_model: *mut *mut TaModel) -> TaStatus {
    guard(|| {
        let out_model = out(out_model, "out_model")?;
        *out_model = std::ptr::null_mut();
        if path.is_null() {
            return Err(invalid("path is null"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let ckpt = load_checkpoint(Path::new(path), None)?;
        *out_model = Box::into_raw(Box::new(TaModel {
            config: ckpt.config,
            params: ckpt.params,
        }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`ta_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ta_model_free(model: *mut TaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Feature dimension the model expects, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ta_model_input_dim(model: *const TaModel) -> usize {
    model.as_ref().map_or(0, |m| m.config.input_dim)
}

/// Number of classes, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ta_model_num_classes(model: *const TaModel) -> usize {
    model.as_ref().map_or(0, |m| m.config.num_classes)
}

/// Classifies a clip of `frames` rows of `dim` features, row-major.
/// Writes the label and, if `out_log_probs` is not null, `num_classes`
/// log-probabilities.
///
/// # Safety
/// `features` must hold `frames * dim` floats and `out_log_probs`, when not
/// null, room for `num_classes` floats.
#[no_mangle]
pub unsafe extern "C" fn ta_model_predict(
    model: *const TaModel,
    features: *const f32,
    frames: usize,
    dim: usize,
    out_label: *mut usize,
    out_log_probs: *mut f32,
    num_classes: usize,
) -> TaStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| invalid("model is null"))?;
        let out_label = out(out_label, "out_label")?;
        let n = frames
            .checked_mul(dim)
            .ok_or_else(|| invalid("frames * dim overflows"))?;
        let values = slice(features, n, "features")?.to_vec();
        let seq = FeatureSequence::new(frames, dim, values)?;
        let pred = forward_clip(&m.config, &m.params, &seq)?;
        if !out_log_probs.is_null() {
            if num_classes != pred.log_probs.len() {
                return Err(invalid(format!(
                    "num_classes is {num_classes}, model has {}",
                    pred.log_probs.len()
                )));
            }
            std::slice::from_raw_parts_mut(out_log_probs, num_classes).copy_from_slice(&pred.log_probs);
        }
        *out_label = pred.predicted_label;
        Ok(())
    })
}

/// Starts a stream over a copy of `model`; the model may be freed afterwards.
///
/// # Safety
/// `model` must be a live handle and `out_stream` writable.
#[no_mangle]
pub unsafe extern "C" fn ta_stream_new(
    model: *const TaModel,
    window: usize,
    hop: usize,
    emit_on_change: bool,
    out_stream: *mut *mut TaStream,
) -> TaStatus {
    guard(|| {
        let out_stream = out(out_stream, "out_stream")?;
        *out_stream = std::ptr::null_mut();
        let m = model.as_ref().ok_or_else(|| invalid("model is null"))?;
        let config = StreamConfig {
            window,
            hop,
            emit_policy: if emit_on_change {
                EmitPolicy::OnChange
            } else {
                EmitPolicy::EveryHop
            },
        };
        let engine = StreamEngine::owned(m.config.clone(), m.params.clone(), config)?;
        *out_stream = Box::into_raw(Box::new(TaStream {
            engine,
            num_classes: m.config.num_classes,
        }));
        Ok(())
    })
}

/// Pushes one frame of `dim` features. Sets `*out_emitted` and, when a
/// window was emitted, fills `out_result` and (if not null) `out_log_probs`.
///
/// # Safety
/// `frame` must hold `dim` floats; `out_log_probs`, when not null, room for
/// `num_classes` floats.
#[no_mangle]
pub unsafe extern "C" fn ta_stream_push(
    stream: *mut TaStream,
    frame: *const f32,
    dim: usize,
    out_emitted: *mut bool,
    out_result: *mut TaWindowResult,
    out_log_probs: *mut f32,
    num_classes: usize,
) -> TaStatus {
    let arrival = Instant::now();
    guard(|| {
        let s = stream.as_mut().ok_or_else(|| invalid("stream is null"))?;
        let emitted = out(out_emitted, "out_emitted")?;
        *emitted = false;
        let result = out(out_result, "out_result")?;
        if !out_log_probs.is_null() && num_classes != s.num_classes {
            return Err(invalid(format!(
                "num_classes is {num_classes}, model has {}",
                s.num_classes
            )));
        }
        let frame = slice(frame, dim, "frame")?;
        if let Some(w) = s.engine.push(frame, arrival)? {
            *result = TaWindowResult {
                start_index: w.start_index,
                end_index: w.end_index,
                label: w.prediction.predicted_label,
                latency_ms: w.latency_ms,
            };
            if !out_log_probs.is_null() {
                std::slice::from_raw_parts_mut(out_log_probs, num_classes).copy_from_slice(&w.prediction.log_probs);
            }
            *emitted = true;
        }
        Ok(())
    })
}

/// Frames pushed so far, or 0 for a null handle.
///
/// # Safety
/// `stream` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ta_stream_frames_seen(stream: *const TaStream) -> usize {
    stream.as_ref().map_or(0, |s| s.engine.frames_seen())
}

/// Releases a stream. Null is ignored.
///
/// # Safety
/// `stream` must come from [`ta_stream_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ta_stream_free(stream: *mut TaStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Support-weighted F1 of `n` predictions over `num_classes` labels.
///
/// # Safety
/// `truth` and `pred` must each hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn ta_weighted_f1(
    truth: *const usize,
    pred: *const usize,
    n: usize,
    num_classes: usize,
    out_f1: *mut f64,
) -> TaStatus {
    guard(|| {
        let out_f1 = out(out_f1, "out_f1")?;
        let truth = slice(truth, n, "truth")?;
        let pred = slice(pred, n, "pred")?;
        *out_f1 = weighted_f1(truth, pred, num_classes)?.weighted_f1;
        Ok(())
    })
}
