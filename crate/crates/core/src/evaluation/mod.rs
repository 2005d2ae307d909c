//! Weighted F1 and per-class metrics, subject-wise fold planning and
//! cross-validation.

mod folds;
mod metrics;

pub use folds::{make_folds, Fold, FoldPlan};
pub use metrics::{weighted_f1, ClassMetrics, MetricsReport};

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataio::Manifest;
use crate::error::{Error, Result};
use crate::models::ModelConfig;
use crate::training::{load_clips, predict_clips, train_on_clips, LabeledClip, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_clips: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub weighted_f1: f64,
    pub train_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    pub per_fold: Vec<FoldReport>,
    pub mean_weighted_f1: f64,
    /// Sample standard deviation across folds (0 for a single fold).
    pub std_weighted_f1: f64,
    pub wall_time_s: f64,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_fold(
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    clips: &HashMap<&str, &LabeledClip>,
    plan: &FoldPlan,
    fold: usize,
) -> Result<FoldReport> {
    let pick = |ids: &[String]| -> Result<Vec<LabeledClip>> {
        ids.iter()
            .map(|id| {
                clips
                    .get(id.as_str())
                    .map(|c| (*c).clone())
                    .ok_or_else(|| Error::data(format!("fold plan names unknown clip `{id}`")))
            })
            .collect()
    };
    let train = pick(&plan.train_clips(fold))?;
    let test = pick(&plan.folds[fold].test_clips)?;
    let started = Instant::now();
    let (params, _) = train_on_clips(cfg, tcfg, &train, None)?;
    let train_seconds = started.elapsed().as_secs_f64();
    let preds = predict_clips(cfg, &params, &test)?;
    let truth: Vec<usize> = test.iter().map(|c| c.label).collect();
    let guess: Vec<usize> = preds.iter().map(|p| p.predicted_label).collect();
    let m = weighted_f1(&truth, &guess, cfg.num_classes)?;
    Ok(FoldReport {
        fold,
        test_clips: plan.folds[fold].test_clips.clone(),
        confusion: m.confusion,
        per_class: m.per_class,
        weighted_f1: m.weighted_f1,
        train_seconds,
    })
}

/// Trains one model per fold on the other folds' clips and scores it on the
/// held-out subjects. Up to `jobs` folds run at once; results do not depend
/// on `jobs`.
pub fn cross_validate(
    cfg: &ModelConfig,
    tcfg: &TrainConfig,
    manifest: &Manifest,
    plan: &FoldPlan,
    jobs: usize,
) -> Result<CvReport> {
    let started = Instant::now();
    cfg.validate()?;
    tcfg.validate()?;
    if plan.k() == 0 {
        return Err(Error::config("fold plan is empty"));
    }
    let all = load_clips(manifest)?;
    let by_id: HashMap<&str, &LabeledClip> = all.iter().map(|c| (c.clip_id.as_str(), c)).collect();

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<FoldReport>>>> = Mutex::new((0..plan.k()).map(|_| None).collect());
    let workers = jobs.clamp(1, plan.k());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let fold = next.fetch_add(1, Ordering::SeqCst);
                if fold >= plan.k() {
                    break;
                }
                let r = run_fold(cfg, tcfg, &by_id, plan, fold).map_err(|e| Error::Fold {
                    fold,
                    source: Box::new(e),
                });
                results.lock().expect("no worker panics while holding the lock")[fold] = Some(r);
            });
        }
    });
    let per_fold = results
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every fold ran"))
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = per_fold.iter().map(|f| f.weighted_f1).collect();
    let (mean, std) = mean_std(&scores);
    Ok(CvReport {
        model_config: cfg.clone(),
        train_config: tcfg.clone(),
        per_fold,
        mean_weighted_f1: mean,
        std_weighted_f1: std,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_standard_deviation() {
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }
}
