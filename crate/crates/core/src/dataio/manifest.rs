//! Newline-delimited JSON clip index.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{atomic_write, read_features, FeatureSequence};
use crate::error::{Error, Result};

/// The closed three-class behavior vocabulary. Class index follows
/// declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionLabel {
    ArmFlapping,
    Headbanging,
    Spinning,
}

impl ActionLabel {
    pub const ALL: [ActionLabel; 3] = [
        ActionLabel::ArmFlapping,
        ActionLabel::Headbanging,
        ActionLabel::Spinning,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActionLabel::ArmFlapping => "arm_flapping",
            ActionLabel::Headbanging => "headbanging",
            ActionLabel::Spinning => "spinning",
        }
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::data(format!("unknown action label `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipRecord {
    pub clip_id: String,
    pub subject_id: String,
    pub label: ActionLabel,
    /// Relative paths resolve against the manifest's directory.
    pub feature_path: String,
    pub n_frames: usize,
    #[serde(default)]
    pub source_note: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    base_dir: PathBuf,
    records: Vec<ClipRecord>,
}

impl Manifest {
    pub fn new(base_dir: impl Into<PathBuf>, records: Vec<ClipRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.clip_id.as_str()) {
                return Err(Error::data(format!("duplicate clip_id `{}`", r.clip_id)));
            }
        }
        Ok(Manifest {
            base_dir: base_dir.into(),
            records,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut records = Vec::new();
        let mut offset = 0u64;
        for (lineno, line) in text.split_inclusive('\n').enumerate() {
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                let rec: ClipRecord = serde_json::from_str(trimmed).map_err(|e| Error::Format {
                    path: path.display().to_string(),
                    offset,
                    msg: format!("line {}: {e}", lineno + 1),
                })?;
                records.push(rec);
            }
            offset += line.len() as u64;
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(base, records)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, |w| {
            for r in &self.records {
                serde_json::to_writer(&mut *w, r)?;
                w.write_all(b"\n")?;
            }
            Ok(())
        })
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn records(&self) -> &[ClipRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_path(&self, rec: &ClipRecord) -> PathBuf {
        let p = Path::new(&rec.feature_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn load_features(&self, rec: &ClipRecord) -> Result<FeatureSequence> {
        read_features(&self.feature_path(rec))
    }

    /// Clip count per subject, ordered by subject id.
    pub fn subject_counts(&self) -> BTreeMap<&str, usize> {
        let mut m = BTreeMap::new();
        for r in &self.records {
            *m.entry(r.subject_id.as_str()).or_insert(0) += 1;
        }
        m
    }

    pub fn label_histogram(&self) -> [usize; 3] {
        let mut h = [0; 3];
        for r in &self.records {
            h[r.label.index()] += 1;
        }
        h
    }

    /// Records passing `keep`, same base directory.
    pub fn filter(&self, mut keep: impl FnMut(&ClipRecord) -> bool) -> Manifest {
        Manifest {
            base_dir: self.base_dir.clone(),
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }
}
