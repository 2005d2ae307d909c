use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyStats {
    pub windows: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    /// Frames ingested per second of wall time.
    pub throughput_fps: f64,
}

/// Nearest-rank percentile: the smallest value with at least `p` percent of
/// the sample at or below it.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

impl LatencyStats {
    /// `None` for an empty sample.
    pub fn from_latencies(latencies_ms: &[f64], frames: usize, elapsed_s: f64) -> Option<Self> {
        if latencies_ms.is_empty() {
            return None;
        }
        let mut sorted = latencies_ms.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(LatencyStats {
            windows: sorted.len(),
            mean_ms: sorted.iter().sum::<f64>() / sorted.len() as f64,
            p50_ms: nearest_rank(&sorted, 50.0),
            p95_ms: nearest_rank(&sorted, 95.0),
            max_ms: sorted[sorted.len() - 1],
            throughput_fps: if elapsed_s > 0.0 {
                frames as f64 / elapsed_s
            } else {
                0.0
            },
        })
    }
}

/// Human-readable summary and a single-line JSON document.
pub fn latency_report(stats: &LatencyStats) -> (String, String) {
    let text = format!(
        "windows {}  mean {:.3} ms  p50 {:.3} ms  p95 {:.3} ms  max {:.3} ms  throughput {:.1} frames/s",
        stats.windows, stats.mean_ms, stats.p50_ms, stats.p95_ms, stats.max_ms, stats.throughput_fps
    );
    let json = serde_json::to_string(stats).expect("plain struct serializes");
    (text, json)
}

pub fn parse_latency_json(s: &str) -> Result<LatencyStats> {
    serde_json::from_str(s).map_err(|e| Error::Stream(format!("latency report: {e}")))
}
