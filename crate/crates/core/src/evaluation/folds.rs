use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Manifest;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    /// Sorted subject ids held out in this fold.
    pub subjects: Vec<String>,
    /// Sorted clip ids of those subjects.
    pub test_clips: Vec<String>,
}

/// Subject-disjoint K-fold split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Clip ids used for training when `fold` is held out, sorted.
    pub fn train_clips(&self, fold: usize) -> Vec<String> {
        let mut ids: Vec<String> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != fold)
            .flat_map(|(_, f)| f.test_clips.iter().cloned())
            .collect();
        ids.sort();
        ids
    }
}

/// Greedy subject-wise split.
///
/// Subjects are taken in order of decreasing clip count (ties by id) and each
/// goes to the fold currently holding the fewest clips. Among equally small
/// folds one is picked with a generator seeded by `seed`.
pub fn make_folds(manifest: &Manifest, k: usize, seed: u64) -> Result<FoldPlan> {
    if k == 0 {
        return Err(Error::config("number of folds must be positive"));
    }
    let counts = manifest.subject_counts();
    if counts.len() < k {
        return Err(Error::config(format!(
            "{} subjects cannot fill {k} subject-disjoint folds",
            counts.len()
        )));
    }
    let mut subjects: Vec<(&str, usize)> = counts.into_iter().collect();
    subjects.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sizes = vec![0usize; k];
    let mut members: Vec<Vec<String>> = vec![Vec::new(); k];
    for (subject, n) in subjects {
        let smallest = *sizes.iter().min().expect("k > 0");
        let candidates: Vec<usize> = (0..k).filter(|&i| sizes[i] == smallest).collect();
        let pick = candidates[rng.gen_range(0..candidates.len())];
        sizes[pick] += n;
        members[pick].push(subject.to_string());
    }

    let mut by_subject: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for r in manifest.records() {
        by_subject.entry(&r.subject_id).or_default().push(r.clip_id.clone());
    }
    let folds = members
        .into_iter()
        .map(|mut subjects| {
            subjects.sort();
            let mut test_clips: Vec<String> = subjects
                .iter()
                .flat_map(|s| by_subject[s.as_str()].iter().cloned())
                .collect();
            test_clips.sort();
            Fold { subjects, test_clips }
        })
        .collect();
    Ok(FoldPlan { folds })
}
