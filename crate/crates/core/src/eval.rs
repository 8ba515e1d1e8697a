//! Classification metrics in the layout of the detection tables:
//! accuracy, per-class F1 and the support-weighted F1.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Binary confusion counts; class 1 (tampered) is positive.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tp: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tn + self.fp + self.fn_ + self.tp
    }
}

pub fn confusion(preds: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: preds.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in preds.iter().zip(truth) {
        match (p, t) {
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fp += 1,
            (0, 1) => cm.fn_ += 1,
            (1, 1) => cm.tp += 1,
            _ => return Err(Error::InvalidParam(format!("labels must be 0/1, got ({p}, {t})"))),
        }
    }
    Ok(cm)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub pipeline: String,
    pub ablation: String,
    pub accuracy: f64,
    pub f_class0: f64,
    pub f_class1: f64,
    pub weighted_f: f64,
    pub support0: usize,
    pub support1: usize,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    // F1 = 2tp / (2tp + fp + fn), 0 when precision + recall = 0
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Accuracy, per-class F1 and support-weighted F1. Pipeline and ablation tags are left empty.
pub fn scores(cm: &ConfusionMatrix) -> EvalReport {
    let total = cm.total();
    let support0 = cm.tn + cm.fp;
    let support1 = cm.tp + cm.fn_;
    let f_class1 = f1(cm.tp, cm.fp, cm.fn_);
    let f_class0 = f1(cm.tn, cm.fn_, cm.fp);
    let accuracy = if total == 0 {
        0.0
    } else {
        (cm.tp + cm.tn) as f64 / total as f64
    };
    let weighted_f = if total == 0 {
        0.0
    } else {
        (support0 as f64 * f_class0 + support1 as f64 * f_class1) / total as f64
    };
    EvalReport {
        pipeline: String::new(),
        ablation: String::new(),
        accuracy,
        f_class0,
        f_class1,
        weighted_f,
        support0,
        support1,
    }
}

pub const REPORT_HEADER: [&str; 8] = [
    "pipeline", "ablation", "accuracy", "f0", "f1", "weighted", "support0", "support1",
];

/// Header plus one row per report, scores at 4 decimals.
pub fn report_csv_string(reports: &[EvalReport]) -> String {
    let mut out = REPORT_HEADER.join(",");
    out.push('\n');
    for r in reports {
        writeln!(
            out,
            "{},{},{:.4},{:.4},{:.4},{:.4},{},{}",
            r.pipeline, r.ablation, r.accuracy, r.f_class0, r.f_class1, r.weighted_f, r.support0, r.support1
        )
        .unwrap();
    }
    out
}

pub fn report_csv(reports: &[EvalReport], path: &Path) -> Result<()> {
    std::fs::write(path, report_csv_string(reports)).map_err(|e| Error::io(path, e))
}

pub fn read_report_csv(path: &Path) -> Result<Vec<EvalReport>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::InvalidParam(format!("bad report field {i}")))
        };
        out.push(EvalReport {
            pipeline: row.get(0).unwrap_or_default().to_string(),
            ablation: row.get(1).unwrap_or_default().to_string(),
            accuracy: num(2)?,
            f_class0: num(3)?,
            f_class1: num(4)?,
            weighted_f: num(5)?,
            support0: num(6)? as usize,
            support1: num(7)? as usize,
        });
    }
    Ok(out)
}

/// Fixed-width text table for terminals.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut out = format!(
        "{:<14} {:<14} {:>8} {:>10} {:>10} {:>14}\n",
        "Model", "Ablation", "Accuracy", "F-Score 0", "F-Score 1", "Weighted Score"
    );
    for r in reports {
        writeln!(
            out,
            "{:<14} {:<14} {:>8.2} {:>10.2} {:>10.2} {:>14.2}",
            r.pipeline, r.ablation, r.accuracy, r.f_class0, r.f_class1, r.weighted_f
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_examples() {
        let cm = confusion(&[0, 1, 0, 1], &[0, 1, 0, 1]).unwrap();
        assert_eq!((cm.tn, cm.tp, cm.fp, cm.fn_), (2, 2, 0, 0));
        assert_eq!(confusion(&[1; 5], &[0; 5]).unwrap().fp, 5);
        let cm = confusion(&[1, 0, 1], &[1, 1, 0]).unwrap();
        assert_eq!((cm.tp, cm.fn_, cm.fp, cm.tn), (1, 1, 1, 0));
        assert!(matches!(confusion(&[1], &[1, 0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(confusion(&[], &[]), Err(Error::Empty)));
    }

    #[test]
    fn scores_examples() {
        let perfect = scores(&ConfusionMatrix { tn: 50, fp: 0, fn_: 0, tp: 50 });
        assert_eq!((perfect.accuracy, perfect.f_class0, perfect.f_class1, perfect.weighted_f), (1.0, 1.0, 1.0, 1.0));

        let r = scores(&ConfusionMatrix { tn: 45, fp: 5, fn_: 10, tp: 40 });
        assert!((r.accuracy - 0.85).abs() < 1e-12);
        assert!((r.f_class1 - 80.0 / 95.0).abs() < 1e-12);
        assert!((r.f_class0 - 90.0 / 105.0).abs() < 1e-12);

        let none = scores(&ConfusionMatrix { tn: 7, fp: 0, fn_: 0, tp: 0 });
        assert_eq!((none.f_class1, none.accuracy), (0.0, 1.0));
    }

    #[test]
    fn csv_header_rows_and_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        report_csv(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 1);

        let mut r = scores(&ConfusionMatrix { tn: 45, fp: 5, fn_: 10, tp: 40 });
        r.pipeline = "dctlbp-mlp".into();
        r.ablation = "blur".into();
        report_csv(std::slice::from_ref(&r), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back = read_report_csv(&p).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].pipeline, "dctlbp-mlp");
        assert!((back[0].f_class1 - r.f_class1).abs() < 5e-5);
        assert!((back[0].weighted_f - r.weighted_f).abs() < 5e-5);
        assert_eq!((back[0].support0, back[0].support1), (50, 50));
    }

    fn pairs() -> impl Strategy<Value = Vec<(u8, u8)>> {
        proptest::collection::vec((0u8..2, 0u8..2), 1..60)
    }

    proptest! {
        #[test]
        fn metric_invariants(p in pairs(), rot in 0usize..60) {
            let (preds, truth): (Vec<u8>, Vec<u8>) = p.iter().copied().unzip();
            let r = scores(&confusion(&preds, &truth).unwrap());
            for v in [r.accuracy, r.f_class0, r.f_class1, r.weighted_f] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            prop_assert!(r.weighted_f >= r.f_class0.min(r.f_class1) - 1e-12);
            prop_assert!(r.weighted_f <= r.f_class0.max(r.f_class1) + 1e-12);

            let mut rotated = p.clone();
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            let (rp, rt): (Vec<u8>, Vec<u8>) = rotated.into_iter().unzip();
            prop_assert_eq!(scores(&confusion(&rp, &rt).unwrap()), r.clone());

            let sp: Vec<u8> = preds.iter().map(|v| 1 - v).collect();
            let st: Vec<u8> = truth.iter().map(|v| 1 - v).collect();
            let s = scores(&confusion(&sp, &st).unwrap());
            prop_assert_eq!(s.f_class0, r.f_class1);
            prop_assert_eq!(s.f_class1, r.f_class0);
            prop_assert_eq!(s.accuracy, r.accuracy);
        }
    }
}
