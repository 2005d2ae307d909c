use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{write_features, ActionLabel, ClipRecord, FeatureSequence, Manifest};
use crate::error::{Error, Result};

/// Parameters of the synthetic three-class dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n_subjects: usize,
    pub clips_per_subject: usize,
    #[serde(rename = "T")]
    pub frames: usize,
    #[serde(rename = "D")]
    pub dim: usize,
    pub noise_sigma: f64,
    pub subject_effect_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_subjects: 30,
            clips_per_subject: 6,
            frames: 20,
            dim: 64,
            noise_sigma: 0.3,
            subject_effect_sigma: 0.2,
            seed: 1,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 || self.clips_per_subject == 0 || self.frames == 0 || self.dim == 0 {
            return Err(Error::config(
                "synthetic subjects, clips, frames and dim must be positive",
            ));
        }
        // Zero noise is allowed: it gives a perfectly separable dataset.
        for (name, v) in [
            ("noise_sigma", self.noise_sigma),
            ("subject_effect_sigma", self.subject_effect_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthClip {
    pub record: ClipRecord,
    pub features: FeatureSequence,
}

/// Generates the dataset in memory.
///
/// Class `c` has a random unit direction `u_c` and motif
/// `sin(2π (c+1) t / T)`. A clip of class `c` from subject `s` is
/// `motif_c(t) u_c + offset_s + noise`, with `offset_s ~ N(0, σ_s² I)` fixed per
/// subject and i.i.d. `N(0, σ²)` noise per element. Labels cycle through the
/// classes so every subject sees all of them.
pub fn synthesize(spec: &SynthSpec) -> Result<Vec<SynthClip>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (t_len, d) = (spec.frames, spec.dim);
    let directions: Vec<Vec<f64>> = (0..ActionLabel::ALL.len())
        .map(|_| loop {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect();
    let normal = |sigma: f64| Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()));
    let offset_dist = normal(spec.subject_effect_sigma)?;
    let noise_dist = normal(spec.noise_sigma)?;

    let mut clips = Vec::with_capacity(spec.n_subjects * spec.clips_per_subject);
    for s in 0..spec.n_subjects {
        let offset: Vec<f64> = (0..d).map(|_| offset_dist.sample(&mut rng)).collect();
        for j in 0..spec.clips_per_subject {
            let class = (s * spec.clips_per_subject + j) % ActionLabel::ALL.len();
            let u = &directions[class];
            let mut values = Vec::with_capacity(t_len * d);
            for t in 0..t_len {
                let m = (2.0 * PI * (class + 1) as f64 * t as f64 / t_len as f64).sin();
                for k in 0..d {
                    values.push((m * u[k] + offset[k] + noise_dist.sample(&mut rng)) as f32);
                }
            }
            let clip_id = format!("s{s:03}_c{j:02}");
            clips.push(SynthClip {
                record: ClipRecord {
                    feature_path: format!("features/{clip_id}.fsq"),
                    clip_id,
                    subject_id: format!("subject_{s:03}"),
                    label: ActionLabel::ALL[class],
                    n_frames: t_len,
                    source_note: Some("synthetic".into()),
                },
                features: FeatureSequence::new(t_len, d, values)?,
            });
        }
    }
    Ok(clips)
}

/// Writes the dataset under `out_dir` as `manifest.jsonl` plus one feature
/// file per clip in `features/`.
pub fn generate_synthetic(spec: &SynthSpec, out_dir: &Path) -> Result<Manifest> {
    let clips = synthesize(spec)?;
    let mut records = Vec::with_capacity(clips.len());
    for c in clips {
        write_features(&out_dir.join(&c.record.feature_path), &c.features)?;
        records.push(c.record);
    }
    let manifest = Manifest::new(out_dir, records)?;
    manifest.save(&out_dir.join("manifest.jsonl"))?;
    Ok(manifest)
}
