//! A labeled prior, an unlabeled pool and a held-out test set, plus a
//! single train-and-evaluate run over them.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricsReport};
use crate::matrix::Matrix;
use crate::model::ClassLabel;
use crate::scale::MinMax;
use crate::synthetic::{generate_synthetic, SyntheticSpec};
use crate::trainer::{train, LabeledPrior, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub prior: LabeledPrior,
    pub unlabeled: Matrix,
    pub test_x: Matrix,
    pub test_truth: Vec<ClassLabel>,
}

impl Task {
    pub fn width(&self) -> usize {
        self.prior.width()
    }
}

pub fn run_task(cfg: &TrainConfig, task: &Task) -> Result<(MetricsReport, TrainOutcome)> {
    let outcome = train(cfg, &task.prior, &task.unlabeled)?;
    let report = evaluate(outcome.disc(), &task.test_x, &task.test_truth)?;
    Ok((report, outcome))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTaskSpec {
    pub data: SyntheticSpec,
    /// Labeled samples per observed negative subclass.
    pub labeled_negative: usize,
    pub labeled_positive: usize,
    pub unlabeled: usize,
    pub test: usize,
}

impl SyntheticTaskSpec {
    pub fn new(label_noise: f64) -> Self {
        Self {
            data: SyntheticSpec::five_class(label_noise),
            labeled_negative: 300,
            labeled_positive: 100,
            unlabeled: 6000,
            test: 6000,
        }
    }
}

/// Labeled rows are taken by observed label from their own draw, so label
/// noise reaches the prior; `U` rows are never labeled. All splits are
/// min-max scaled with bounds fitted on the prior and the unlabeled pool.
pub fn build_synthetic_task(spec: &SyntheticTaskSpec, seed: u64) -> Result<Task> {
    let per_class = [
        (ClassLabel::Dormant, spec.labeled_negative),
        (ClassLabel::Normal, spec.labeled_negative),
        (ClassLabel::Heavy, spec.labeled_negative),
        (ClassLabel::Risky, spec.labeled_positive),
    ];
    let rarest = per_class
        .iter()
        .map(|(l, _)| spec.data.class_fraction(*l))
        .fold(f64::INFINITY, f64::min);
    if rarest <= 0.0 {
        return Err(Error::Config("every labeled class needs a synthetic component".into()));
    }
    let want = per_class.iter().map(|(_, k)| *k).max().unwrap_or(0);
    // Enough draws that the rarest class fills its quota with overwhelming probability.
    let draws = ((want as f64 / rarest) * 2.0) as usize + 1000;
    let source = generate_synthetic(&spec.data, draws, seed.wrapping_mul(3).wrapping_add(1))?;
    let mut classes = Vec::new();
    for (label, k) in per_class {
        let rows: Vec<usize> = (0..draws).filter(|&i| source.observed[i] == label).take(k).collect();
        if rows.len() < k {
            return Err(Error::EmptyClass(label.code()));
        }
        classes.push((label, source.x.select_rows(&rows)));
    }
    let unlabeled = generate_synthetic(&spec.data, spec.unlabeled, seed.wrapping_mul(3).wrapping_add(2))?;
    let test = generate_synthetic(&spec.data, spec.test, seed.wrapping_mul(3).wrapping_add(3))?;

    let mut fit_rows = unlabeled.x.clone();
    for (_, m) in &classes {
        fit_rows = fit_rows.vstack(m)?;
    }
    let scaler = MinMax::fit(&fit_rows)?;
    let mut scaled = Vec::new();
    for (label, m) in classes {
        scaled.push((label, scaler.transform(&m)?));
    }
    Ok(Task {
        prior: LabeledPrior::new(scaled)?,
        unlabeled: scaler.transform(&unlabeled.x)?,
        test_x: scaler.transform(&test.x)?,
        test_truth: test.truth,
    })
}
