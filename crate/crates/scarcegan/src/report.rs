//! Versioned JSON experiment reports. See `docs/report-schema.md`.

use scarcegan_core::eval::{Confusion, MetricsReport};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::encode::hex;
use crate::error::{Error, Result};
use crate::tasks::TaskManifest;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub verbosity: f64,
    pub unknown_occupancy: f64,
    pub no_positive_predictions: bool,
    pub no_positive_samples: bool,
    pub total: u64,
    /// Rows are true classes, columns predicted classes, both in `D,N,H,R,U` order.
    pub confusion: Confusion,
}

impl From<&MetricsReport> for Metrics {
    fn from(m: &MetricsReport) -> Self {
        Self {
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            verbosity: m.verbosity,
            unknown_occupancy: m.unknown_occupancy,
            no_positive_predictions: m.no_positive_predictions,
            no_positive_samples: m.no_positive_samples,
            total: m.total,
            confusion: m.confusion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub verbosity: f64,
    pub unknown_occupancy: f64,
}

impl MeanMetrics {
    pub fn of(runs: &[RunRecord]) -> Self {
        let n = runs.len().max(1) as f64;
        let mean = |f: fn(&Metrics) -> f64| runs.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
        Self {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
            verbosity: mean(|m| m.verbosity),
            unknown_occupancy: mean(|m| m.unknown_occupancy),
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.precision, self.recall, self.f1, self.verbosity, self.unknown_occupancy]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub steps: u64,
    pub metrics: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<TaskManifest>,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package_version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            package_version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub task: String,
    pub config: RunConfig,
    /// Resolved training settings of the first run, as flat TOML.
    pub train_config: String,
    /// SHA-256 of `config` serialized as TOML.
    pub config_digest: String,
    pub runs: Vec<RunRecord>,
    pub mean: MeanMetrics,
    pub environment: Environment,
}

pub fn config_digest(cfg: &RunConfig) -> Result<String> {
    Ok(hex(&Sha256::digest(cfg.to_toml()?.as_bytes())))
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        if r.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "report schema {} unsupported (expected {SCHEMA_VERSION})",
                r.schema_version
            )));
        }
        Ok(r)
    }

    /// Re-derives every metric from the embedded confusion matrices and the
    /// means from the per-run values; fails on any disagreement above `tol`.
    pub fn check_consistency(&self, tol: f64) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= tol;
        for run in &self.runs {
            let m = &run.metrics;
            let again = Metrics::from(&MetricsReport::from_confusion(m.confusion)?);
            let pairs = [
                (m.precision, again.precision),
                (m.recall, again.recall),
                (m.f1, again.f1),
                (m.verbosity, again.verbosity),
                (m.unknown_occupancy, again.unknown_occupancy),
            ];
            if pairs.iter().any(|(a, b)| !close(*a, *b)) || m.total != again.total {
                return Err(Error::Config(format!("seed {}: metrics disagree with confusion", run.seed)));
            }
        }
        let mean = MeanMetrics::of(&self.runs);
        if mean.as_array().iter().zip(self.mean.as_array()).any(|(a, b)| !close(*a, b)) {
            return Err(Error::Config("mean disagrees with per-run values".into()));
        }
        if self.config_digest != config_digest(&self.config)? {
            return Err(Error::Config("config digest does not match the embedded config".into()));
        }
        Ok(())
    }

    /// Largest absolute difference between any metric of two reports, or
    /// `None` when their run structure differs.
    pub fn max_metric_difference(&self, other: &ExperimentReport) -> Option<f64> {
        if self.runs.len() != other.runs.len() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for (a, b) in self.runs.iter().zip(&other.runs) {
            if a.seed != b.seed || a.metrics.confusion != b.metrics.confusion {
                return None;
            }
            let (a, b) = (&a.metrics, &b.metrics);
            for (x, y) in [
                (a.precision, b.precision),
                (a.recall, b.recall),
                (a.f1, b.f1),
                (a.verbosity, b.verbosity),
                (a.unknown_occupancy, b.unknown_occupancy),
            ] {
                worst = worst.max((x - y).abs());
            }
        }
        for (x, y) in self.mean.as_array().iter().zip(other.mean.as_array()) {
            worst = worst.max((x - y).abs());
        }
        Some(worst)
    }

    /// Plain-text table of per-run and mean metrics.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "task {}  runs {}  config {}\n{:>6} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
            self.task,
            self.runs.len(),
            &self.config_digest[..12.min(self.config_digest.len())],
            "seed",
            "precision",
            "recall",
            "f1",
            "verbosity",
            "unknown"
        );
        for r in &self.runs {
            let m = &r.metrics;
            s += &format!(
                "{:>6} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}\n",
                r.seed, m.precision, m.recall, m.f1, m.verbosity, m.unknown_occupancy
            );
        }
        let m = &self.mean;
        s += &format!(
            "{:>6} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}\n",
            "mean", m.precision, m.recall, m.f1, m.verbosity, m.unknown_occupancy
        );
        s
    }
}

/// Percent value rounded half-up to an integer, for comparison with
/// integer-percent reference tables.
pub fn percent_half_up(v: f64) -> i64 {
    (v * 100.0 + 0.5).floor() as i64
}
