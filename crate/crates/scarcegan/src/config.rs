//! Flat TOML for training settings, run configurations and synthetic specs.

use std::path::{Path, PathBuf};

use scarcegan_core::losses::{GenLossConfig, LeewayConfig};
use scarcegan_core::nn::LrSchedule;
use scarcegan_core::trainer::{Ablation, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every [`TrainConfig`] field as an optional key. Missing keys keep the
/// value of the config being overlaid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pull_away_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub low_density_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_matching_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_steps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disc_base_widths: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gen_hidden: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_tap: Option<usize>,
}

impl TrainSettings {
    /// Every field of `cfg`, explicitly.
    pub fn from_config(cfg: &TrainConfig) -> Self {
        Self {
            batch_size: Some(cfg.batch_size),
            steps: Some(cfg.steps),
            seed: Some(cfg.seed),
            alpha: Some(cfg.leeway.alpha()),
            alpha_end: cfg.alpha_end,
            epsilon: Some(cfg.gen_cfg.epsilon),
            pull_away_weight: Some(cfg.gen_cfg.pull_away_weight),
            low_density_weight: Some(cfg.gen_cfg.low_density_weight),
            feature_matching_weight: Some(cfg.gen_cfg.feature_matching_weight),
            reward_weight: Some(cfg.reward_weight),
            learning_rate: Some(cfg.lr_schedule.initial_rate),
            decay_rate: Some(cfg.lr_schedule.decay_rate),
            decay_steps: Some(cfg.lr_schedule.decay_steps),
            ablation: Some(cfg.ablation.name().into()),
            disc_base_widths: Some(cfg.disc_base_widths.clone()),
            noise_dim: cfg.noise_dim,
            gen_hidden: Some(cfg.gen_hidden),
            feature_tap: cfg.feature_tap,
        }
    }

    /// `self` layered over `other`: keys set here win.
    pub fn or(&self, other: &TrainSettings) -> TrainSettings {
        macro_rules! pick {
            ($($f:ident),*) => {
                TrainSettings { $($f: self.$f.clone().or_else(|| other.$f.clone())),* }
            };
        }
        pick!(
            batch_size,
            steps,
            seed,
            alpha,
            alpha_end,
            epsilon,
            pull_away_weight,
            low_density_weight,
            feature_matching_weight,
            reward_weight,
            learning_rate,
            decay_rate,
            decay_steps,
            ablation,
            disc_base_widths,
            noise_dim,
            gen_hidden,
            feature_tap
        )
    }

    pub fn apply(&self, base: &TrainConfig) -> Result<TrainConfig> {
        let mut c = base.clone();
        if let Some(v) = self.batch_size {
            c.batch_size = v;
        }
        if let Some(v) = self.steps {
            c.steps = v;
        }
        if let Some(v) = self.seed {
            check_seed(v)?;
            c.seed = v;
        }
        if let Some(v) = self.alpha {
            c.leeway = LeewayConfig::new(v)?;
        }
        if self.alpha_end.is_some() {
            c.alpha_end = self.alpha_end;
        }
        let g = &mut c.gen_cfg;
        *g = GenLossConfig {
            epsilon: self.epsilon.unwrap_or(g.epsilon),
            pull_away_weight: self.pull_away_weight.unwrap_or(g.pull_away_weight),
            low_density_weight: self.low_density_weight.unwrap_or(g.low_density_weight),
            feature_matching_weight: self.feature_matching_weight.unwrap_or(g.feature_matching_weight),
        };
        if let Some(v) = self.reward_weight {
            c.reward_weight = v;
        }
        let s = &mut c.lr_schedule;
        *s = LrSchedule {
            initial_rate: self.learning_rate.unwrap_or(s.initial_rate),
            decay_rate: self.decay_rate.unwrap_or(s.decay_rate),
            decay_steps: self.decay_steps.unwrap_or(s.decay_steps),
        };
        if let Some(a) = &self.ablation {
            c.ablation = Ablation::parse(a).ok_or_else(|| Error::Config(format!("unknown ablation {a:?}")))?;
        }
        if let Some(v) = &self.disc_base_widths {
            c.disc_base_widths = v.clone();
        }
        if self.noise_dim.is_some() {
            c.noise_dim = self.noise_dim;
        }
        if let Some(v) = self.gen_hidden {
            c.gen_hidden = v;
        }
        if self.feature_tap.is_some() {
            c.feature_tap = self.feature_tap;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

pub fn train_config_from_toml(s: &str) -> Result<TrainConfig> {
    TrainSettings::from_toml(s)?.apply(&TrainConfig::default())
}

pub fn train_config_to_toml(cfg: &TrainConfig) -> Result<String> {
    TrainSettings::from_config(cfg).to_toml()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Synthetic,
    KddR2l,
    KddImbalance,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Synthetic => "synthetic",
            TaskKind::KddR2l => "kdd-r2l",
            TaskKind::KddImbalance => "kdd-imbalance",
        }
    }

    /// Training settings each task starts from before user overrides.
    pub fn defaults(self) -> TrainSettings {
        match self {
            TaskKind::Synthetic => TrainSettings {
                steps: Some(1500),
                ..Default::default()
            },
            TaskKind::KddR2l | TaskKind::KddImbalance => TrainSettings {
                batch_size: Some(64),
                steps: Some(3000),
                ..Default::default()
            },
        }
    }
}

/// One experiment: which task, where its data lives, how many seeded runs,
/// and training overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample: Option<f64>,
    /// Drop repeated identical lines when loading KDD files.
    #[serde(default)]
    pub dedup: bool,
    /// Negative-label noise of the synthetic task.
    #[serde(default = "default_noise")]
    pub label_noise: f64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Runs use seeds `seed, seed + 1, ...`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub train: TrainSettings,
}

fn default_noise() -> f64 {
    0.3
}

fn default_runs() -> usize {
    5
}

impl RunConfig {
    pub fn new(task: TaskKind) -> Self {
        Self {
            task,
            data_dir: None,
            subsample: None,
            dedup: false,
            label_noise: default_noise(),
            runs: default_runs(),
            seed: 0,
            train: TrainSettings::default(),
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|i| self.seed + i).collect()
    }

    /// Training config of the run with `seed`: task defaults, then overrides.
    pub fn train_config(&self, seed: u64) -> Result<TrainConfig> {
        let mut cfg = self.train.or(&self.task.defaults()).apply(&TrainConfig::default())?;
        cfg.seed = seed;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if let Some(f) = self.subsample {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("subsample {f} outside (0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return Err(Error::Config(format!("label_noise {} outside [0, 1]", self.label_noise)));
        }
        check_seed(self.seed.saturating_add(self.runs as u64 - 1))?;
        self.train_config(self.seed).map(|_| ())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read_text(path)?)
    }
}

/// Parameters of the synthetic five-class generator exposed on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSettings {
    #[serde(default)]
    pub label_noise: f64,
}

impl SynthSettings {
    pub fn from_toml(s: &str) -> Result<Self> {
        let v: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        if !(0.0..=1.0).contains(&v.label_noise) {
            return Err(Error::Config(format!("label_noise {} outside [0, 1]", v.label_noise)));
        }
        Ok(v)
    }
}

/// Seeds travel through TOML, whose integers are signed 64-bit.
fn check_seed(seed: u64) -> Result<()> {
    if seed > i64::MAX as u64 {
        return Err(Error::Config(format!("seed {seed} exceeds {}", i64::MAX)));
    }
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
