//! Decision rule and positive-class metrics.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{ClassLabel, Discriminator, Head};

/// Argmax over the five supervised probabilities; ties go to the earlier class
/// in `D < N < H < R < U`.
pub fn argmax_label(probs: &[f64]) -> ClassLabel {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().take(ClassLabel::COUNT) {
        if p > probs[best] {
            best = i;
        }
    }
    ClassLabel::from_index(best).unwrap_or(ClassLabel::Dormant)
}

pub fn classify(disc: &Discriminator, x: &Matrix) -> Result<Vec<ClassLabel>> {
    let out = disc.forward(x, Head::Supervised)?;
    let probs = out.sup.ok_or(Error::MissingForward("supervised head"))?;
    Ok(probs.row_iter().map(argmax_label).collect())
}

/// Counts indexed `[true][predicted]` in head order.
pub type Confusion = [[u64; ClassLabel::COUNT]; ClassLabel::COUNT];

/// `R` against everything else.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// No sample was predicted positive; precision is reported as 0.
    pub no_positive_predictions: bool,
    /// No positive sample was evaluated; recall is reported as 0.
    pub no_positive_samples: bool,
    /// Fraction of samples predicted positive.
    pub verbosity: f64,
    /// Fraction of samples predicted `U`.
    pub unknown_occupancy: f64,
    pub total: u64,
}

impl MetricsReport {
    pub fn from_confusion(confusion: Confusion) -> Result<Self> {
        let total: u64 = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(Error::Empty("evaluation set"));
        }
        let r = ClassLabel::Risky.index();
        let tp = confusion[r][r];
        let predicted_pos: u64 = confusion.iter().map(|row| row[r]).sum();
        let actual_pos: u64 = confusion[r].iter().sum();
        let predicted_u: u64 = confusion.iter().map(|row| row[ClassLabel::Unknown.index()]).sum();
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, predicted_pos);
        let recall = ratio(tp, actual_pos);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Ok(Self {
            confusion,
            precision,
            recall,
            f1,
            no_positive_predictions: predicted_pos == 0,
            no_positive_samples: actual_pos == 0,
            verbosity: ratio(predicted_pos, total),
            unknown_occupancy: ratio(predicted_u, total),
            total,
        })
    }

    pub fn from_predictions(truth: &[ClassLabel], predicted: &[ClassLabel]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Shape {
                op: "evaluate",
                left: (truth.len(), 1),
                right: (predicted.len(), 1),
            });
        }
        let mut confusion = [[0u64; ClassLabel::COUNT]; ClassLabel::COUNT];
        for (t, p) in truth.iter().zip(predicted) {
            confusion[t.index()][p.index()] += 1;
        }
        Self::from_confusion(confusion)
    }

    /// Per-class population of the evaluated samples.
    pub fn class_totals(&self) -> [u64; ClassLabel::COUNT] {
        let mut out = [0; ClassLabel::COUNT];
        for (o, row) in out.iter_mut().zip(&self.confusion) {
            *o = row.iter().sum();
        }
        out
    }
}

pub fn evaluate(disc: &Discriminator, x: &Matrix, truth: &[ClassLabel]) -> Result<MetricsReport> {
    if x.rows() == 0 {
        return Err(Error::Empty("evaluation set"));
    }
    let predicted = classify(disc, x)?;
    MetricsReport::from_predictions(truth, &predicted)
}
