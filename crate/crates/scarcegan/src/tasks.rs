//! Rare-class and imbalance tasks over encoded KDD data.
//!
//! Splits are built from row indices into the encoded train set, so every
//! labeled, unlabeled and held-out sample can be traced back to its line.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use scarcegan_core::model::{ClassLabel, ModelRng};
use scarcegan_core::task::Task;
use scarcegan_core::trainer::LabeledPrior;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::encode::{hex, EncodedDataset};
use crate::error::{Error, Result};
use crate::kdd::KddCategory;

/// Positive rows labeled, of the 999 in the reference R2L recipe.
pub const RECIPE_LABELED_POSITIVE: usize = 900;
pub const RECIPE_UNLABELED_POSITIVE: usize = 99;
pub const RECIPE_LABELED_NEGATIVE: usize = 30_000;
/// Normal population the 30k negative prior was drawn from.
pub const RECIPE_NEGATIVE_POPULATION: usize = 97_278;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub positive: Vec<KddCategory>,
    pub negative: Vec<KddCategory>,
    pub labeled_positive: usize,
    pub labeled_negative: usize,
    /// `None` puts every remaining row of the class in the unlabeled pool.
    pub unlabeled_positive: Option<usize>,
    pub unlabeled_negative: Option<usize>,
    pub batch_size: usize,
}

impl TaskSpec {
    /// R2L against normal traffic: 900/30k prior, 99 positives and the
    /// remaining normal rows unlabeled, batches of 64.
    pub fn kdd_r2l() -> Self {
        Self {
            name: "kdd-r2l".into(),
            positive: vec![KddCategory::R2l],
            negative: vec![KddCategory::Normal],
            labeled_positive: RECIPE_LABELED_POSITIVE,
            labeled_negative: RECIPE_LABELED_NEGATIVE,
            unlabeled_positive: Some(RECIPE_UNLABELED_POSITIVE),
            unlabeled_negative: None,
            batch_size: 64,
        }
    }

    /// Normal traffic as the positive class against every intrusion, with
    /// the R2L recipe's labeled fractions applied to the actual populations.
    pub fn kdd_imbalance(positive_population: usize, negative_population: usize) -> Self {
        let recipe_pos = (RECIPE_LABELED_POSITIVE + RECIPE_UNLABELED_POSITIVE) as f64;
        let labeled_positive = (positive_population as f64 * RECIPE_LABELED_POSITIVE as f64 / recipe_pos).round() as usize;
        let labeled_negative = (negative_population as f64 * RECIPE_LABELED_NEGATIVE as f64
            / RECIPE_NEGATIVE_POPULATION as f64)
            .round() as usize;
        Self {
            name: "kdd-imbalance".into(),
            positive: vec![KddCategory::Normal],
            negative: vec![KddCategory::Dos, KddCategory::Probe, KddCategory::R2l, KddCategory::U2r],
            labeled_positive: labeled_positive.max(1),
            labeled_negative: labeled_negative.max(1),
            unlabeled_positive: None,
            unlabeled_negative: None,
            batch_size: 64,
        }
    }

    fn validate(&self) -> Result<()> {
        let pos: BTreeSet<_> = self.positive.iter().collect();
        if pos.is_empty() || self.negative.is_empty() {
            return Err(Error::Infeasible("positive and negative classes must be non-empty".into()));
        }
        if self.negative.iter().any(|c| pos.contains(c)) {
            return Err(Error::Infeasible("a category is both positive and negative".into()));
        }
        if self.labeled_positive == 0 || self.labeled_negative == 0 {
            return Err(Error::Infeasible("labeled counts must be positive".into()));
        }
        Ok(())
    }
}

/// Flat record of how a task was cut, written next to every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskManifest {
    pub task: String,
    pub split_seed: u64,
    pub subsample: Option<f64>,
    pub positive: String,
    pub negative: String,
    pub train_rows: usize,
    pub train_rows_after_subsample: usize,
    pub positive_population: usize,
    pub negative_population: usize,
    pub labeled_positive: usize,
    pub labeled_negative: usize,
    pub unlabeled_positive: usize,
    pub unlabeled_negative: usize,
    pub test_positive: usize,
    pub test_negative: usize,
    pub batch_size: usize,
    pub prior_ids_sha256: String,
    pub unlabeled_ids_sha256: String,
}

impl TaskManifest {
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn from_text(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Row indices into the encoded train set (prior, unlabeled) and test set.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub prior_positive: Vec<usize>,
    pub prior_negative: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct KddTask {
    pub task: Task,
    pub split: Split,
    pub manifest: TaskManifest,
}

fn names(c: &[KddCategory]) -> String {
    c.iter().map(|c| c.name()).collect::<Vec<_>>().join("+")
}

fn ids_digest(ids: &[usize]) -> String {
    let mut h = Sha256::new();
    for i in ids {
        h.update((*i as u64).to_le_bytes());
    }
    hex(&h.finalize())
}

/// Rows kept after thinning every category outside `keep` to `fraction`.
/// Rows of `keep` categories all survive; the result is in ascending order.
pub fn subsample(categories: &[KddCategory], fraction: f64, keep: &[KddCategory], seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("subsample fraction {fraction} outside (0, 1]")));
    }
    let mut rng = ModelRng::seed_from_u64(seed ^ 0x5ab5_a3b1_e000_0001);
    let mut out: Vec<usize> = Vec::new();
    for cat in KddCategory::ALL {
        let rows: Vec<usize> = (0..categories.len()).filter(|&i| categories[i] == cat).collect();
        if keep.contains(&cat) || fraction == 1.0 {
            out.extend(rows);
        } else {
            let k = (rows.len() as f64 * fraction).round() as usize;
            out.extend(rows.choose_multiple(&mut rng, k).copied());
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Cuts a labeled prior (positives as `R`, negatives as `N`), an unlabeled
/// pool and a test set. Test rows are those of the test file whose category
/// appears in `spec.positive` or `spec.negative`, with truth `R` or `N` accordingly.
pub fn build_rare_class_task(
    train: &EncodedDataset,
    test: &EncodedDataset,
    spec: &TaskSpec,
    subsample_fraction: Option<f64>,
    seed: u64,
) -> Result<KddTask> {
    spec.validate()?;
    let pool = match subsample_fraction {
        Some(f) => subsample(&train.categories, f, &spec.positive, seed)?,
        None => (0..train.len()).collect(),
    };
    let mut rng = ModelRng::seed_from_u64(seed);
    let mut pos: Vec<usize> = pool
        .iter()
        .copied()
        .filter(|&i| spec.positive.contains(&train.categories[i]))
        .collect();
    let mut neg: Vec<usize> = pool
        .iter()
        .copied()
        .filter(|&i| spec.negative.contains(&train.categories[i]))
        .collect();
    let need = |labeled: usize, unlabeled: Option<usize>| labeled + unlabeled.unwrap_or(0);
    if need(spec.labeled_positive, spec.unlabeled_positive) > pos.len() {
        return Err(Error::Infeasible(format!(
            "{} needs {} positive rows, {} available",
            spec.name,
            need(spec.labeled_positive, spec.unlabeled_positive),
            pos.len()
        )));
    }
    if need(spec.labeled_negative, spec.unlabeled_negative) > neg.len() {
        return Err(Error::Infeasible(format!(
            "{} needs {} negative rows, {} available",
            spec.name,
            need(spec.labeled_negative, spec.unlabeled_negative),
            neg.len()
        )));
    }
    let (pos_pop, neg_pop) = (pos.len(), neg.len());
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let prior_positive = pos[..spec.labeled_positive].to_vec();
    let prior_negative = neg[..spec.labeled_negative].to_vec();
    let rest_pos = &pos[spec.labeled_positive..];
    let rest_neg = &neg[spec.labeled_negative..];
    let unl_pos = &rest_pos[..spec.unlabeled_positive.unwrap_or(rest_pos.len())];
    let unl_neg = &rest_neg[..spec.unlabeled_negative.unwrap_or(rest_neg.len())];
    let mut unlabeled: Vec<usize> = unl_pos.iter().chain(unl_neg).copied().collect();
    unlabeled.shuffle(&mut rng);
    if unlabeled.is_empty() {
        return Err(Error::Infeasible(format!("{} leaves no unlabeled rows", spec.name)));
    }

    let mut test_ids = Vec::new();
    let mut truth = Vec::new();
    for (i, c) in test.categories.iter().enumerate() {
        if spec.positive.contains(c) {
            test_ids.push(i);
            truth.push(ClassLabel::Risky);
        } else if spec.negative.contains(c) {
            test_ids.push(i);
            truth.push(ClassLabel::Normal);
        }
    }
    if test_ids.is_empty() {
        return Err(Error::Infeasible(format!("{} has no test rows", spec.name)));
    }
    let test_positive = truth.iter().filter(|l| **l == ClassLabel::Risky).count();

    let prior = LabeledPrior::new(vec![
        (ClassLabel::Normal, train.x.select_rows(&prior_negative)),
        (ClassLabel::Risky, train.x.select_rows(&prior_positive)),
    ])?;
    let mut prior_ids: Vec<usize> = prior_positive.iter().chain(&prior_negative).copied().collect();
    prior_ids.sort_unstable();
    let mut sorted_unlabeled = unlabeled.clone();
    sorted_unlabeled.sort_unstable();
    let manifest = TaskManifest {
        task: spec.name.clone(),
        split_seed: seed,
        subsample: subsample_fraction,
        positive: names(&spec.positive),
        negative: names(&spec.negative),
        train_rows: train.len(),
        train_rows_after_subsample: pool.len(),
        positive_population: pos_pop,
        negative_population: neg_pop,
        labeled_positive: prior_positive.len(),
        labeled_negative: prior_negative.len(),
        unlabeled_positive: unl_pos.len(),
        unlabeled_negative: unl_neg.len(),
        test_positive,
        test_negative: test_ids.len() - test_positive,
        batch_size: spec.batch_size,
        prior_ids_sha256: ids_digest(&prior_ids),
        unlabeled_ids_sha256: ids_digest(&sorted_unlabeled),
    };
    Ok(KddTask {
        task: Task {
            prior,
            unlabeled: train.x.select_rows(&unlabeled),
            test_x: test.x.select_rows(&test_ids),
            test_truth: truth,
        },
        split: Split {
            prior_positive,
            prior_negative,
            unlabeled,
            test: test_ids,
        },
        manifest,
    })
}

/// Normal traffic against every intrusion category, sized from the
/// populations that survive subsampling.
pub fn build_imbalance_task(
    train: &EncodedDataset,
    test: &EncodedDataset,
    subsample_fraction: Option<f64>,
    seed: u64,
) -> Result<KddTask> {
    let probe = TaskSpec::kdd_imbalance(0, 0);
    let pool = match subsample_fraction {
        Some(f) => subsample(&train.categories, f, &probe.positive, seed)?,
        None => (0..train.len()).collect(),
    };
    let pos = pool.iter().filter(|&&i| probe.positive.contains(&train.categories[i])).count();
    let neg = pool.iter().filter(|&&i| probe.negative.contains(&train.categories[i])).count();
    let spec = TaskSpec::kdd_imbalance(pos, neg);
    build_rare_class_task(train, test, &spec, subsample_fraction, seed)
}
