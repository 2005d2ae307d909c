//! `tempact` command line: dataset synthesis, feature extraction, training,
//! evaluation, cross-validation, streaming and report printing.
//!
//! Machine-readable output is JSON (files in the run directory, or NDJSON on
//! standard output for `stream`); human summaries go to standard error.

mod config;

pub use config::{CvSection, ExtractSection, ModelSection, PathsSection, RunConfig};

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dataio::{
    apply_crop, atomic_write, generate_synthetic, load_crop_records, sample_keyframes, select_target_box, toy_extract,
    write_features, ActionLabel, ClipRecord, CropRecord, Frame, Manifest,
};
use crate::error::{Error, Result};
use crate::evaluation::{cross_validate, make_folds, weighted_f1};
use crate::models::{ModelKind, Pooling};
use crate::streaming::{
    latency_report, parse_latency_json, stream_file, stream_pipelined, EmitPolicy, StreamEngine, StreamRun,
};
use crate::training::{load_checkpoint, load_clips, predict_clips, save_checkpoint, train, TrainHistory};

const COMPLETE_MARKER: &str = "COMPLETE";
const RESOLVED_CONFIG: &str = "resolved_config.json";

#[derive(Parser, Debug)]
#[command(
    name = "tempact",
    version,
    about = "Temporal action classification over per-frame features"
)]
pub struct Cli {
    /// TOML or JSON run configuration; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Run directory (defaults to ./tempact-<command>).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Parallel cross-validation folds.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the synthetic three-class dataset.
    Synth(SynthArgs),
    /// Turn directories of grayscale frames into feature files and a manifest.
    Extract(ExtractArgs),
    /// Train one model on a manifest.
    Train(TrainArgs),
    /// Score a checkpoint on a manifest.
    Eval(EvalArgs),
    /// Subject-wise K-fold cross-validation.
    Cv(CvArgs),
    /// Sliding-window inference over a feature file or NDJSON on stdin.
    Stream(StreamArgs),
    /// Print a summary of a JSON report written by another command.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default)]
pub struct SynthArgs {
    #[arg(long)]
    pub n_subjects: Option<usize>,
    #[arg(long)]
    pub clips_per_subject: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub subject_effect_sigma: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct ExtractArgs {
    /// Directory holding `clips.jsonl` and one frame folder per clip.
    #[arg(long)]
    pub frames_dir: Option<PathBuf>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub crop_size: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub keyframes: Option<usize>,
}

#[derive(Args, Debug, Default)]
pub struct ModelArgs {
    /// lstm, tcn, mstcn or mstcn_pp.
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub hidden_channels: Option<usize>,
    #[arg(long)]
    pub num_stages: Option<usize>,
    #[arg(long)]
    pub lstm_hidden: Option<usize>,
    /// mean or last.
    #[arg(long)]
    pub pooling: Option<Pooling>,
}

#[derive(Args, Debug, Default)]
pub struct TrainFlags {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Turn off the auxiliary per-stage loss.
    #[arg(long)]
    pub no_stage_supervision: bool,
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub val_manifest: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Args, Debug, Default)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Fail unless the checkpoint holds this model kind.
    #[arg(long)]
    pub model: Option<ModelKind>,
}

#[derive(Args, Debug, Default)]
pub struct CvArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Args, Debug, Default)]
pub struct StreamArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Feature file, or `-` for one JSON array of features per line on stdin.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub hop: Option<usize>,
    /// every_hop or on_change.
    #[arg(long)]
    pub emit_policy: Option<EmitPolicy>,
}

#[derive(Args, Debug, Default)]
pub struct ReportArgs {
    /// A cv_report.json, metrics.json, history.json or latency.json.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Extract(_) => "extract",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Cv(_) => "cv",
            Command::Stream(_) => "stream",
            Command::Report(_) => "report",
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut rc = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed.or(rc.seed) {
        rc.apply_seed(seed);
    }
    if let Some(j) = cli.jobs {
        rc.jobs = j;
    }
    if rc.jobs == 0 {
        return Err(Error::config("--jobs must be positive"));
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| rc.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("tempact-{}", cli.command.name())));
    rc.out_dir = Some(out_dir.clone());
    match cli.command {
        Command::Synth(a) => cmd_synth(rc, &out_dir, a),
        Command::Extract(a) => cmd_extract(rc, &out_dir, a),
        Command::Train(a) => cmd_train(rc, &out_dir, a),
        Command::Eval(a) => cmd_eval(rc, &out_dir, a),
        Command::Cv(a) => cmd_cv(rc, &out_dir, a),
        Command::Stream(a) => cmd_stream(rc, &out_dir, a),
        Command::Report(a) => cmd_report(a),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    atomic_write(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.display().to_string(),
        offset: 0,
        msg: e.to_string(),
    })
}

/// Opens a run directory that must not hold a finished run.
fn begin_run(out_dir: &Path) -> Result<()> {
    if out_dir.join(COMPLETE_MARKER).exists() {
        return Err(Error::config(format!(
            "{} holds a completed run; choose another --out-dir",
            out_dir.display()
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))
}

fn finish_run(out_dir: &Path) -> Result<()> {
    let p = out_dir.join(COMPLETE_MARKER);
    std::fs::write(&p, b"").map_err(|e| Error::io(&p, e))
}

fn require(path: Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    path.ok_or_else(|| Error::config(format!("missing --{flag}")))
}

fn apply_model_args(rc: &mut RunConfig, m: &ModelArgs) {
    let s = &mut rc.model;
    s.kind = m.model.or(s.kind);
    s.hidden_channels = m.hidden_channels.or(s.hidden_channels);
    s.num_stages = m.num_stages.or(s.num_stages);
    s.lstm_hidden = m.lstm_hidden.or(s.lstm_hidden);
    s.temporal_pooling = m.pooling.or(s.temporal_pooling);
}

fn apply_train_flags(rc: &mut RunConfig, t: &TrainFlags) {
    let c = &mut rc.train;
    c.epochs = t.epochs.unwrap_or(c.epochs);
    c.batch_size = t.batch_size.unwrap_or(c.batch_size);
    c.learning_rate = t.learning_rate.unwrap_or(c.learning_rate);
    if t.no_stage_supervision {
        c.stage_supervision = false;
    }
}

/// Feature dimension of a manifest's first clip.
fn manifest_dim(m: &Manifest) -> Result<usize> {
    let first = m
        .records()
        .first()
        .ok_or_else(|| Error::config("manifest has no clips"))?;
    Ok(m.load_features(first)?.dim())
}

fn cmd_synth(mut rc: RunConfig, out_dir: &Path, a: SynthArgs) -> Result<()> {
    let s = &mut rc.synth;
    s.n_subjects = a.n_subjects.unwrap_or(s.n_subjects);
    s.clips_per_subject = a.clips_per_subject.unwrap_or(s.clips_per_subject);
    s.frames = a.frames.unwrap_or(s.frames);
    s.dim = a.dim.unwrap_or(s.dim);
    s.noise_sigma = a.noise_sigma.unwrap_or(s.noise_sigma);
    s.subject_effect_sigma = a.subject_effect_sigma.unwrap_or(s.subject_effect_sigma);
    rc.synth.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_json(&out_dir.join(RESOLVED_CONFIG), &rc)?;
    let m = generate_synthetic(&rc.synth, out_dir)?;
    let h = m.label_histogram();
    eprintln!(
        "{} clips from {} subjects, class counts {h:?}",
        m.len(),
        m.subject_counts().len()
    );
    println!("{}", out_dir.join("manifest.jsonl").display());
    Ok(())
}

/// One row of `clips.jsonl` in an extraction input directory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClipSource {
    clip_id: String,
    subject_id: String,
    label: ActionLabel,
    /// Frame folder, relative to the input directory.
    dir: String,
    #[serde(default)]
    source_note: Option<String>,
}

fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut frames = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        let image = p
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| matches!(e, "pgm" | "ppm" | "pnm" | "pbm" | "pam"));
        if image {
            frames.push(p);
        }
    }
    frames.sort();
    Ok(frames)
}

/// Crops every selected frame around its target detection. A frame without
/// detections reuses the most recent box before it, or the first box after
/// it when none came earlier.
fn crop_frames(frames: Vec<Frame>, indices: &[usize], crops: &[CropRecord], ex: &ExtractSection) -> Result<Vec<Frame>> {
    let mut by_frame: BTreeMap<usize, Vec<CropRecord>> = BTreeMap::new();
    for c in crops {
        by_frame.entry(c.frame_index).or_default().push(c.clone());
    }
    if by_frame.is_empty() {
        return Ok(frames);
    }
    frames
        .iter()
        .zip(indices)
        .map(|(f, &idx)| {
            let dets = by_frame
                .range(..=idx)
                .next_back()
                .or_else(|| by_frame.range(idx..).next())
                .map(|(_, d)| d)
                .expect("non-empty map");
            let target = select_target_box(dets)?;
            apply_crop(f, &target, ex.margin, ex.crop_size)
        })
        .collect()
}

fn cmd_extract(mut rc: RunConfig, out_dir: &Path, a: ExtractArgs) -> Result<()> {
    let input = require(a.frames_dir.or(rc.paths.frames_dir.clone()), "frames-dir")?;
    rc.paths.frames_dir = Some(input.clone());
    let ex = &mut rc.extract;
    ex.grid = a.grid.unwrap_or(ex.grid);
    ex.crop_size = a.crop_size.unwrap_or(ex.crop_size);
    ex.margin = a.margin.unwrap_or(ex.margin);
    ex.keyframes = a.keyframes.unwrap_or(ex.keyframes);
    if ex.grid == 0 || ex.crop_size == 0 || ex.keyframes == 0 {
        return Err(Error::config("grid, crop size and keyframes must be positive"));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_json(&out_dir.join(RESOLVED_CONFIG), &rc)?;
    let ex = &rc.extract;

    let index = input.join("clips.jsonl");
    let text = std::fs::read_to_string(&index).map_err(|e| Error::io(&index, e))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let src: ClipSource = serde_json::from_str(line).map_err(|e| Error::Format {
            path: index.display().to_string(),
            offset: 0,
            msg: format!("line {}: {e}", i + 1),
        })?;
        let clip_dir = input.join(&src.dir);
        let paths = list_frames(&clip_dir)?;
        if paths.is_empty() {
            return Err(Error::data(format!(
                "clip `{}`: no frames in {}",
                src.clip_id,
                clip_dir.display()
            )));
        }
        let indices = sample_keyframes(paths.len(), ex.keyframes);
        let frames = indices
            .iter()
            .map(|&i| Frame::load_gray(&paths[i]))
            .collect::<Result<Vec<_>>>()?;
        let crops_path = clip_dir.join("crops.json");
        let frames = if crops_path.exists() {
            crop_frames(frames, &indices, &load_crop_records(&crops_path)?, ex)?
        } else {
            frames
        };
        let features =
            toy_extract(&frames, ex.grid).map_err(|e| Error::data(format!("clip `{}`: {e}", src.clip_id)))?;
        let feature_path = format!("features/{}.fsq", src.clip_id);
        write_features(&out_dir.join(&feature_path), &features)?;
        records.push(ClipRecord {
            clip_id: src.clip_id,
            subject_id: src.subject_id,
            label: src.label,
            feature_path,
            n_frames: features.frames(),
            source_note: src.source_note,
        });
    }
    let m = Manifest::new(out_dir, records)?;
    m.save(&out_dir.join("manifest.jsonl"))?;
    eprintln!("extracted {} clips", m.len());
    println!("{}", out_dir.join("manifest.jsonl").display());
    Ok(())
}

fn cmd_train(mut rc: RunConfig, out_dir: &Path, a: TrainArgs) -> Result<()> {
    begin_run(out_dir)?;
    let manifest_path = require(a.manifest.or(rc.paths.manifest.clone()), "manifest")?;
    rc.paths.manifest = Some(manifest_path.clone());
    let val_path = a.val_manifest.or(rc.paths.val_manifest.clone());
    rc.paths.val_manifest = val_path.clone();
    apply_model_args(&mut rc, &a.model);
    apply_train_flags(&mut rc, &a.train);
    let manifest = Manifest::load(&manifest_path)?;
    let cfg = rc.model.resolve(manifest_dim(&manifest)?)?;
    rc.train.validate()?;
    write_json(
        &out_dir.join(RESOLVED_CONFIG),
        &serde_json::json!({ "run": rc, "model_config": cfg }),
    )?;

    let val = val_path.as_deref().map(Manifest::load).transpose()?;
    let (params, history) = train(&cfg, &rc.train, &manifest, val.as_ref())?;
    let meta = BTreeMap::from([
        ("train_seed".to_string(), rc.train.seed.to_string()),
        ("epochs".to_string(), rc.train.epochs.to_string()),
        ("train_clips".to_string(), manifest.len().to_string()),
    ]);
    save_checkpoint(&out_dir.join("model.ckpt"), &cfg, &params, &meta)?;
    write_json(&out_dir.join("history.json"), &history)?;
    eprintln!(
        "{} epochs, final loss {:.6}{}",
        history.epoch_loss.len(),
        history.epoch_loss.last().copied().unwrap_or(f64::NAN),
        history
            .val_weighted_f1
            .last()
            .map(|f| format!(", validation weighted F1 {f:.4}"))
            .unwrap_or_default()
    );
    finish_run(out_dir)
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    clip_id: &'a str,
    label: usize,
    predicted_label: usize,
    log_probs: &'a [f32],
}

fn cmd_eval(mut rc: RunConfig, out_dir: &Path, a: EvalArgs) -> Result<()> {
    begin_run(out_dir)?;
    let ckpt = require(a.checkpoint.or(rc.paths.checkpoint.clone()), "checkpoint")?;
    let manifest_path = require(a.manifest.or(rc.paths.manifest.clone()), "manifest")?;
    rc.paths.checkpoint = Some(ckpt.clone());
    rc.paths.manifest = Some(manifest_path.clone());
    let expected = a.model.or(rc.model.kind);
    rc.model.kind = expected;
    let ck = load_checkpoint(&ckpt, expected)?;
    write_json(
        &out_dir.join(RESOLVED_CONFIG),
        &serde_json::json!({ "run": rc, "model_config": ck.config }),
    )?;
    let manifest = Manifest::load(&manifest_path)?;
    let clips = load_clips(&manifest)?;
    let preds = predict_clips(&ck.config, &ck.params, &clips)?;
    let truth: Vec<usize> = clips.iter().map(|c| c.label).collect();
    let guess: Vec<usize> = preds.iter().map(|p| p.predicted_label).collect();
    let report = weighted_f1(&truth, &guess, ck.config.num_classes)?;
    write_json(&out_dir.join("metrics.json"), &report)?;
    atomic_write(&out_dir.join("predictions.jsonl"), |w| {
        for (c, p) in clips.iter().zip(&preds) {
            let row = PredictionRow {
                clip_id: &c.clip_id,
                label: c.label,
                predicted_label: p.predicted_label,
                log_probs: &p.log_probs,
            };
            serde_json::to_writer(&mut *w, &row)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })?;
    eprintln!("{} clips, weighted F1 {:.4}", clips.len(), report.weighted_f1);
    finish_run(out_dir)
}

fn cmd_cv(mut rc: RunConfig, out_dir: &Path, a: CvArgs) -> Result<()> {
    begin_run(out_dir)?;
    let manifest_path = require(a.manifest.or(rc.paths.manifest.clone()), "manifest")?;
    rc.paths.manifest = Some(manifest_path.clone());
    rc.cv.folds = a.folds.unwrap_or(rc.cv.folds);
    apply_model_args(&mut rc, &a.model);
    apply_train_flags(&mut rc, &a.train);
    let manifest = Manifest::load(&manifest_path)?;
    let cfg = rc.model.resolve(manifest_dim(&manifest)?)?;
    rc.train.validate()?;
    write_json(
        &out_dir.join(RESOLVED_CONFIG),
        &serde_json::json!({ "run": rc, "model_config": cfg }),
    )?;
    let plan = make_folds(&manifest, rc.cv.folds, rc.fold_seed())?;
    write_json(&out_dir.join("folds.json"), &plan)?;
    let report = cross_validate(&cfg, &rc.train, &manifest, &plan, rc.jobs)?;
    write_json(&out_dir.join("cv_report.json"), &report)?;
    for f in &report.per_fold {
        eprintln!(
            "fold {}: weighted F1 {:.4} ({} test clips)",
            f.fold,
            f.weighted_f1,
            f.test_clips.len()
        );
    }
    eprintln!(
        "{}: mean weighted F1 {:.4} ± {:.4} over {} folds, {:.1} s",
        cfg.kind,
        report.mean_weighted_f1,
        report.std_weighted_f1,
        report.per_fold.len(),
        report.wall_time_s
    );
    finish_run(out_dir)
}

/// One JSON array of features per line; blank lines are skipped.
fn stdin_frames() -> impl Iterator<Item = Result<Vec<f32>>> + Send {
    let stdin = std::io::stdin();
    let mut line_no = 0;
    std::iter::from_fn(move || loop {
        let mut line = String::new();
        line_no += 1;
        match stdin.read_line(&mut line) {
            Ok(0) => return None,
            Ok(_) if line.trim().is_empty() => continue,
            Ok(_) => {
                return Some(
                    serde_json::from_str::<Vec<f32>>(&line)
                        .map_err(|e| Error::Stream(format!("stdin line {line_no}: {e}"))),
                )
            }
            Err(e) => return Some(Err(Error::io("<stdin>", e))),
        }
    })
}

fn cmd_stream(mut rc: RunConfig, out_dir: &Path, a: StreamArgs) -> Result<()> {
    let ckpt = require(a.checkpoint.or(rc.paths.checkpoint.clone()), "checkpoint")?;
    let input = require(a.input.or(rc.paths.input.clone()), "input")?;
    rc.paths.checkpoint = Some(ckpt.clone());
    rc.paths.input = Some(input.clone());
    let s = &mut rc.stream;
    s.window = a.window.unwrap_or(s.window);
    s.hop = a.hop.unwrap_or(s.hop);
    s.emit_policy = a.emit_policy.unwrap_or(s.emit_policy);
    rc.stream.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ck = load_checkpoint(&ckpt, rc.model.kind)?;
    write_json(
        &out_dir.join(RESOLVED_CONFIG),
        &serde_json::json!({ "run": rc, "model_config": ck.config }),
    )?;
    if ck.config.kind == ModelKind::Lstm {
        eprintln!("note: the bidirectional LSTM classifies each complete window; it is not frame-causal");
    }
    let mut engine = StreamEngine::new(&ck.config, &ck.params, rc.stream.clone())?;
    let stdout = std::io::stdout();
    let emit = |out: &mut std::io::StdoutLock<'_>, r: &crate::streaming::WindowResult| -> Result<()> {
        serde_json::to_writer(&mut *out, r).map_err(|e| Error::Stream(e.to_string()))?;
        writeln!(out).map_err(|e| Error::io("<stdout>", e))
    };
    let run: StreamRun = if input.as_os_str() == "-" {
        let mut out = stdout.lock();
        stream_pipelined(&mut engine, stdin_frames(), |r| emit(&mut out, r))?
    } else {
        let run = stream_file(&mut engine, &input)?;
        let mut out = stdout.lock();
        for r in &run.results {
            emit(&mut out, r)?;
        }
        run
    };
    match &run.stats {
        Some(stats) => {
            let (text, _) = latency_report(stats);
            eprintln!("{text}");
            write_json(&out_dir.join("latency.json"), stats)?;
        }
        None => eprintln!(
            "note: {} frames is fewer than the window of {}; nothing was emitted",
            run.frames, rc.stream.window
        ),
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let path = require(a.input, "input")?;
    let value: serde_json::Value = read_json(&path)?;
    let has = |k: &str| value.get(k).is_some();
    if has("per_fold") {
        let r: crate::evaluation::CvReport = read_json(&path)?;
        println!("model {}  folds {}", r.model_config.kind, r.per_fold.len());
        for f in &r.per_fold {
            println!(
                "  fold {}  weighted F1 {:.4}  test clips {}",
                f.fold,
                f.weighted_f1,
                f.test_clips.len()
            );
        }
        println!(
            "mean weighted F1 {:.4}  std {:.4}  wall time {:.1} s",
            r.mean_weighted_f1, r.std_weighted_f1, r.wall_time_s
        );
    } else if has("p95_ms") {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        println!("{}", latency_report(&parse_latency_json(&text)?).0);
    } else if has("epoch_loss") {
        let h: TrainHistory = read_json(&path)?;
        println!(
            "epochs {}  first loss {:.6}  final loss {:.6}  total {:.1} s",
            h.epoch_loss.len(),
            h.epoch_loss.first().copied().unwrap_or(f64::NAN),
            h.epoch_loss.last().copied().unwrap_or(f64::NAN),
            h.epoch_seconds.iter().sum::<f64>()
        );
        if let Some(f) = h.val_weighted_f1.last() {
            println!("final validation weighted F1 {f:.4}");
        }
    } else if has("weighted_f1") && has("confusion") {
        let m: crate::evaluation::MetricsReport = read_json(&path)?;
        println!("weighted F1 {:.4}", m.weighted_f1);
        for (c, row) in m.confusion.iter().enumerate() {
            let name = ActionLabel::from_index(c).map_or_else(|| c.to_string(), |l| l.to_string());
            println!("  {name:<14} {row:?}  f1 {:.4}", m.per_class[c].f1);
        }
    } else {
        return Err(Error::Format {
            path: path.display().to_string(),
            offset: 0,
            msg: "not a report written by tempact".into(),
        });
    }
    Ok(())
}
