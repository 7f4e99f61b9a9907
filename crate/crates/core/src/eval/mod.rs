//! Confusion matrices and macro-averaged classification metrics.

pub mod experiment;

use serde::Serialize;

use crate::error::{Error, Result};

/// Gold-by-predicted counts: cell `(g, p)` counts examples with gold class
/// `g` predicted as `p`.
pub fn confusion_matrix(preds: &[usize], golds: &[usize], c: usize) -> Result<Vec<Vec<usize>>> {
    if preds.len() != golds.len() {
        return Err(Error::LengthMismatch { preds: preds.len(), golds: golds.len() });
    }
    let mut confusion = vec![vec![0usize; c]; c];
    for (&p, &g) in preds.iter().zip(golds) {
        if p >= c {
            return Err(Error::IdOutOfRange { id: p, size: c });
        }
        if g >= c {
            return Err(Error::IdOutOfRange { id: g, size: c });
        }
        confusion[g][p] += 1;
    }
    Ok(confusion)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Accuracy plus per-class and macro precision/recall/F1.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub n_examples: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Metrics from a confusion matrix. Degenerate 0/0 ratios are 0, and absent
/// classes contribute zeros to the macro means, penalizing ignored classes.
pub fn metrics(confusion: &[Vec<usize>]) -> MetricsReport {
    let c = confusion.len();
    let n: usize = confusion.iter().map(|row| row.iter().sum::<usize>()).sum();
    let trace: usize = (0..c).map(|i| confusion[i][i]).sum();
    let mut per_class = Vec::with_capacity(c);
    for (class, row) in confusion.iter().enumerate() {
        let tp = row[class] as f64;
        let fp: f64 = (0..c).filter(|&g| g != class).map(|g| confusion[g][class] as f64).sum();
        let fn_: f64 = (0..c).filter(|&p| p != class).map(|p| row[p] as f64).sum();
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        per_class.push(ClassMetrics { precision, recall, f1 });
    }
    let macro_of = |f: fn(&ClassMetrics) -> f64| {
        if c == 0 {
            0.0
        } else {
            per_class.iter().map(f).sum::<f64>() / c as f64
        }
    };
    MetricsReport {
        confusion: confusion.to_vec(),
        accuracy: ratio(trace as f64, n as f64),
        macro_precision: macro_of(|m| m.precision),
        macro_recall: macro_of(|m| m.recall),
        macro_f1: macro_of(|m| m.f1),
        per_class,
        n_examples: n,
    }
}

/// Convenience: confusion matrix plus metrics in one step.
pub fn evaluate(preds: &[usize], golds: &[usize], c: usize) -> Result<MetricsReport> {
    Ok(metrics(&confusion_matrix(preds, golds, c)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_diagonal_for_perfect_predictions() {
        let m = confusion_matrix(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(m, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
    }

    #[test]
    fn confusion_hand_count() {
        let m = confusion_matrix(&[0, 1, 1, 2], &[0, 0, 1, 2], 3).unwrap();
        assert_eq!(m[0][0], 1);
        assert_eq!(m[0][1], 1);
        assert_eq!(m[1][1], 1);
        assert_eq!(m[2][2], 1);
        assert_eq!(m.iter().flatten().sum::<usize>(), 4);
    }

    #[test]
    fn confusion_empty_input_is_zero_matrix() {
        let m = confusion_matrix(&[], &[], 2).unwrap();
        assert_eq!(m, vec![vec![0, 0], vec![0, 0]]);
    }

    #[test]
    fn confusion_rejects_mismatched_lengths_and_bad_ids() {
        assert!(matches!(
            confusion_matrix(&[0], &[0, 1], 2),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(confusion_matrix(&[5], &[0], 2).is_err());
    }

    #[test]
    fn metrics_hand_case() {
        // golds [0,0,1,2], preds [0,1,1,2]
        let report = evaluate(&[0, 1, 1, 2], &[0, 0, 1, 2], 3).unwrap();
        assert!((report.accuracy - 0.75).abs() < 1e-12);
        assert!((report.per_class[0].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((report.per_class[1].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((report.per_class[2].f1 - 1.0).abs() < 1e-12);
        assert!((report.macro_f1 - 7.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one() {
        let report = evaluate(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_precision, 1.0);
        assert_eq!(report.macro_recall, 1.0);
        assert_eq!(report.macro_f1, 1.0);
    }

    #[test]
    fn absent_class_counts_as_zero_in_macro_mean() {
        // Class 2 never appears as gold or prediction.
        let report = evaluate(&[0, 1], &[0, 1], 3).unwrap();
        assert_eq!(report.per_class[2].precision, 0.0);
        assert_eq!(report.per_class[2].recall, 0.0);
        assert_eq!(report.per_class[2].f1, 0.0);
        assert!((report.macro_f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_and_antidiagonal_confusions() {
        let identity = vec![vec![2, 0], vec![0, 3]];
        let report = metrics(&identity);
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f1, 1.0);

        let anti = vec![vec![0, 2], vec![3, 0]];
        let report = metrics(&anti);
        assert_eq!(report.accuracy, 0.0);
        assert_eq!(report.macro_f1, 0.0);
    }
}
