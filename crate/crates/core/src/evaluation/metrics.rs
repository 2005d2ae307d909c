use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Share of all samples whose true label is this class.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<ClassMetrics>,
    pub weighted_f1: f64,
}

/// Support-weighted mean of per-class F1 scores.
///
/// Undefined ratios are zero: a class never predicted has precision 0, and
/// `p + r = 0` gives F1 0. Classes without support get weight 0.
pub fn weighted_f1(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<MetricsReport> {
    if truth.is_empty() {
        return Err(Error::Metrics("no samples".into()));
    }
    if truth.len() != predicted.len() {
        return Err(Error::Metrics(format!(
            "{} true labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= num_classes || p >= num_classes {
            return Err(Error::Metrics(format!(
                "label pair ({t}, {p}) outside {num_classes} classes"
            )));
        }
        confusion[t][p] += 1;
    }
    let total = truth.len() as f64;
    let mut per_class = Vec::with_capacity(num_classes);
    let mut weighted = 0.0;
    for c in 0..num_classes {
        let tp = confusion[c][c] as f64;
        let support: usize = confusion[c].iter().sum();
        let predicted_c: usize = confusion.iter().map(|row| row[c]).sum();
        let ratio = |num: f64, den: usize| if den == 0 { 0.0 } else { num / den as f64 };
        let precision = ratio(tp, predicted_c);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let weight = support as f64 / total;
        weighted += weight * f1;
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            support,
            weight,
        });
    }
    Ok(MetricsReport {
        confusion,
        per_class,
        weighted_f1: weighted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Per-class counting without a confusion matrix.
    fn brute_force(truth: &[usize], pred: &[usize], c: usize) -> f64 {
        let n = truth.len() as f64;
        (0..c)
            .map(|k| {
                let tp = truth.iter().zip(pred).filter(|(t, p)| **t == k && **p == k).count() as f64;
                let fp = truth.iter().zip(pred).filter(|(t, p)| **t != k && **p == k).count() as f64;
                let fn_ = truth.iter().zip(pred).filter(|(t, p)| **t == k && **p != k).count() as f64;
                let p = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
                let r = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
                let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
                f * (tp + fn_) / n
            })
            .sum()
    }

    #[test]
    fn hand_computed_cases() {
        assert_eq!(weighted_f1(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap().weighted_f1, 1.0);
        let r = weighted_f1(&[0, 0, 1, 2], &[0, 1, 1, 2], 3).unwrap();
        assert!((r.weighted_f1 - 0.75).abs() < 1e-12);
        assert_eq!(r.confusion, vec![vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!((r.per_class[0].precision, r.per_class[0].recall), (1.0, 0.5));
        let all_zero = weighted_f1(&[0, 0, 1, 1, 2, 2], &[0; 6], 3).unwrap();
        assert!((all_zero.weighted_f1 - 1.0 / 6.0).abs() < 1e-12);
        assert_eq!(all_zero.per_class[1].precision, 0.0);
    }

    #[test]
    fn bad_input_is_a_metrics_error() {
        assert!(matches!(weighted_f1(&[], &[], 3), Err(Error::Metrics(_))));
        assert!(matches!(weighted_f1(&[0], &[0, 1], 3), Err(Error::Metrics(_))));
        assert!(matches!(weighted_f1(&[3], &[0], 3), Err(Error::Metrics(_))));
    }

    fn labels() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (1usize..40).prop_flat_map(|n| (prop::collection::vec(0usize..3, n), prop::collection::vec(0usize..3, n)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn agrees_with_brute_force((t, p) in labels()) {
            let r = weighted_f1(&t, &p, 3).unwrap();
            prop_assert!((r.weighted_f1 - brute_force(&t, &p, 3)).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&r.weighted_f1));
            let wsum: f64 = r.per_class.iter().map(|c| c.weight).sum();
            prop_assert!((wsum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sample_order_does_not_matter((t, p) in labels(), rot in 0usize..40) {
            let k = rot % t.len();
            let (mut t2, mut p2) = (t.clone(), p.clone());
            t2.rotate_left(k);
            p2.rotate_left(k);
            t2.reverse();
            p2.reverse();
            let a = weighted_f1(&t, &p, 3).unwrap().weighted_f1;
            let b = weighted_f1(&t2, &p2, 3).unwrap().weighted_f1;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn relabeling_both_sides_is_invariant(reps in 1usize..6, p in prop::collection::vec(0usize..3, 3..=18), perm in 0usize..6) {
            let truth: Vec<usize> = (0..3 * reps).map(|i| i % 3).collect();
            let pred: Vec<usize> = (0..3 * reps).map(|i| p[i % p.len()]).collect();
            let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let m = perms[perm];
            let t2: Vec<usize> = truth.iter().map(|&v| m[v]).collect();
            let p2: Vec<usize> = pred.iter().map(|&v| m[v]).collect();
            let a = weighted_f1(&truth, &pred, 3).unwrap().weighted_f1;
            let b = weighted_f1(&t2, &p2, 3).unwrap().weighted_f1;
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
