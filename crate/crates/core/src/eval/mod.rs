//! Micro-averaged F1 and the comparison experiments built on it.

mod protocol;

pub use protocol::{
    format_table, run_ablation, run_size_sweep, subsample_train_mask, summarize, Method,
    ResultRow, SummaryCell, DEFAULT_FRACTIONS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

/// Pooled confusion counts over (node, class) cells and the resulting F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub micro_f1: f64,
}

impl MetricReport {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let denom = 2 * tp + fp + fn_;
        // Nothing positive anywhere counts as a perfect score.
        let micro_f1 = if denom == 0 {
            1.0
        } else {
            (2 * tp) as f64 / denom as f64
        };
        Self {
            tp,
            fp,
            fn_,
            micro_f1,
        }
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.micro_f1
    }
}

/// Micro-F1 over the rows selected by `mask`. Cells above 0.5 count as
/// positive in both matrices.
pub fn micro_f1(pred: &DenseMatrix, truth: &DenseMatrix, mask: &[bool]) -> Result<MetricReport> {
    if pred.shape() != truth.shape() || mask.len() != pred.rows() {
        return Err(Error::shape(
            "micro_f1",
            format!("{}x{} with {} mask entries", truth.rows(), truth.cols(), truth.rows()),
            format!("{}x{} with {} mask entries", pred.rows(), pred.cols(), mask.len()),
        ));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::Validation("micro_f1 needs a non-empty mask".into()));
    }
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for i in (0..pred.rows()).filter(|&i| mask[i]) {
        for (&p, &t) in pred.row(i).iter().zip(truth.row(i)) {
            match (p > 0.5, t > 0.5) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    Ok(MetricReport::from_counts(tp, fp, fn_))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_empty_predictions() {
        let truth = DenseMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let all = [true, true];
        assert_eq!(micro_f1(&truth, &truth, &all).unwrap().micro_f1, 1.0);
        let zero = DenseMatrix::zeros(2, 2);
        assert_eq!(micro_f1(&zero, &truth, &all).unwrap().micro_f1, 0.0);
    }

    #[test]
    fn hand_counted_example() {
        let truth = DenseMatrix::from_rows(&[&[1.0, 1.0], &[1.0, 0.0]]);
        let pred = DenseMatrix::from_rows(&[&[1.0, 0.0], &[1.0, 1.0]]);
        let r = micro_f1(&pred, &truth, &[true, true]).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (2, 1, 1));
        assert!((r.micro_f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn vacuous_case_is_one() {
        let z = DenseMatrix::zeros(3, 4);
        assert_eq!(micro_f1(&z, &z, &[true, false, true]).unwrap().micro_f1, 1.0);
    }

    #[test]
    fn mask_selects_rows() {
        let truth = DenseMatrix::from_rows(&[&[1.0], &[1.0]]);
        let pred = DenseMatrix::from_rows(&[&[1.0], &[0.0]]);
        assert_eq!(micro_f1(&pred, &truth, &[true, false]).unwrap().micro_f1, 1.0);
        assert!(micro_f1(&pred, &truth, &[false, false]).is_err());
    }

    #[test]
    fn serializes_with_fn_field() {
        let j = serde_json::to_string(&MetricReport::from_counts(2, 1, 1)).unwrap();
        assert!(j.contains("\"fn\":1"), "{j}");
    }
}
