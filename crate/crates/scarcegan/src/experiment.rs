//! Seeded experiment runs: task preparation, parallel training and a
//! deterministic report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use scarcegan_core::task::{build_synthetic_task, run_task, SyntheticTaskSpec, Task};
use scarcegan_core::trainer::TrainOutcome;

use crate::config::{RunConfig, TaskKind, TrainSettings};
use crate::encode::{encode_split, EncodedDataset, Encoder};
use crate::error::{Error, Result};
use crate::kdd::{load_kdd, KddData};
use crate::report::{config_digest, Environment, ExperimentReport, MeanMetrics, Metrics, RunRecord, SCHEMA_VERSION};
use crate::tasks::{build_imbalance_task, build_rare_class_task, TaskManifest, TaskSpec};

/// Directory searched for KDD files when a config names none.
pub const KDD_DIR_VAR: &str = "SCARCEGAN_KDD_DIR";
pub const KDD_TRAIN_FILE: &str = "kddcup.data_10_percent";
pub const KDD_FULL_TRAIN_FILE: &str = "kddcup.data";
pub const KDD_TEST_FILE: &str = "corrected";

/// `dir/name` or `dir/name.gz`, whichever exists.
pub fn find_kdd_file(dir: &Path, name: &str) -> Option<PathBuf> {
    [dir.join(name), dir.join(format!("{name}.gz"))]
        .into_iter()
        .find(|p| p.is_file())
}

pub fn kdd_dir(cfg: &RunConfig) -> Option<PathBuf> {
    cfg.data_dir
        .clone()
        .or_else(|| std::env::var_os(KDD_DIR_VAR).map(PathBuf::from))
}

#[derive(Debug, Clone)]
pub struct PreparedKdd {
    pub encoder: Encoder,
    pub train: EncodedDataset,
    pub test: EncodedDataset,
}

impl PreparedKdd {
    pub fn from_data(train: &KddData, test: &KddData) -> Result<Self> {
        let (encoder, train, test) = encode_split(&train.records, &test.records)?;
        Ok(Self { encoder, train, test })
    }

    pub fn load(dir: &Path, dedup: bool) -> Result<Self> {
        let missing = |name: &str| Error::Config(format!("{name}[.gz] not found in {}", dir.display()));
        let train = find_kdd_file(dir, KDD_TRAIN_FILE).ok_or_else(|| missing(KDD_TRAIN_FILE))?;
        let test = find_kdd_file(dir, KDD_TEST_FILE).ok_or_else(|| missing(KDD_TEST_FILE))?;
        Self::from_data(&load_kdd(train, dedup)?, &load_kdd(test, false)?)
    }
}

/// Data shared by every run of an experiment.
#[derive(Debug, Clone)]
pub enum Prepared {
    Synthetic(SyntheticTaskSpec),
    Kdd(PreparedKdd),
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    match cfg.task {
        TaskKind::Synthetic => Ok(Prepared::Synthetic(SyntheticTaskSpec::new(cfg.label_noise))),
        TaskKind::KddR2l | TaskKind::KddImbalance => {
            let dir = kdd_dir(cfg).ok_or_else(|| {
                Error::Config(format!("{} needs data_dir or the {KDD_DIR_VAR} variable", cfg.task.name()))
            })?;
            Ok(Prepared::Kdd(PreparedKdd::load(&dir, cfg.dedup)?))
        }
    }
}

/// The task of the run with `seed`; KDD splits are re-cut per seed.
pub fn build_task(cfg: &RunConfig, prepared: &Prepared, seed: u64) -> Result<(Task, Option<TaskManifest>)> {
    match (cfg.task, prepared) {
        (TaskKind::Synthetic, Prepared::Synthetic(spec)) => Ok((build_synthetic_task(spec, seed)?, None)),
        (TaskKind::KddR2l, Prepared::Kdd(d)) => {
            let t = build_rare_class_task(&d.train, &d.test, &TaskSpec::kdd_r2l(), cfg.subsample, seed)?;
            Ok((t.task, Some(t.manifest)))
        }
        (TaskKind::KddImbalance, Prepared::Kdd(d)) => {
            let t = build_imbalance_task(&d.train, &d.test, cfg.subsample, seed)?;
            Ok((t.task, Some(t.manifest)))
        }
        _ => Err(Error::Config("prepared data does not match the task".into())),
    }
}

/// Trains and evaluates the run with `seed`.
pub fn run_one(cfg: &RunConfig, prepared: &Prepared, seed: u64) -> Result<(RunRecord, TrainOutcome)> {
    let start = Instant::now();
    let train_cfg = cfg.train_config(seed)?;
    let (task, manifest) = build_task(cfg, prepared, seed)?;
    let (metrics, outcome) = run_task(&train_cfg, &task)?;
    let elapsed = start.elapsed().as_secs_f64();
    log::info!(
        "{} seed {seed}: precision {:.4} recall {:.4} f1 {:.4} in {elapsed:.1}s",
        cfg.task.name(),
        metrics.precision,
        metrics.recall,
        metrics.f1
    );
    Ok((
        RunRecord {
            seed,
            steps: train_cfg.steps,
            metrics: Metrics::from(&metrics),
            manifest,
            elapsed_seconds: elapsed,
        },
        outcome,
    ))
}

/// Runs every seed (concurrently) over already prepared data. Records are
/// merged in seed order; the first failing seed in that order is reported.
pub fn run_prepared(cfg: &RunConfig, prepared: &Prepared) -> Result<ExperimentReport> {
    cfg.validate()?;
    let results: Vec<Result<RunRecord>> = cfg
        .seeds()
        .into_par_iter()
        .map(|seed| {
            run_one(cfg, prepared, seed).map(|(r, _)| r).map_err(|e| Error::Run {
                seed,
                source: Box::new(e),
            })
        })
        .collect();
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        task: cfg.task.name().into(),
        config: cfg.clone(),
        train_config: TrainSettings::from_config(&cfg.train_config(cfg.seed)?).to_toml()?,
        config_digest: config_digest(cfg)?,
        mean: MeanMetrics::of(&runs),
        runs,
        environment: Environment::current(),
    })
}

pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    run_prepared(cfg, &prepare(cfg)?)
}
