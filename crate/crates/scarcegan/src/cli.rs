//! Command-line entry points.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use scarcegan_core::eval::evaluate;
use scarcegan_core::longitudinal::FitConfig;
use scarcegan_core::synthetic::{generate_synthetic, SyntheticSpec};

use crate::config::{read_text, RunConfig, SynthSettings, TaskKind};
use crate::error::{Error, Result};
use crate::experiment::{build_task, prepare, run_one, run_prepared};
use crate::io;
use crate::report::{ExperimentReport, Metrics};

#[derive(Debug, Parser)]
#[command(name = "scarcegan", version, about = "Rare-class semi-supervised GAN experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one seeded run and write its checkpoint.
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
        /// Per-step loss history as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
        /// Task manifest as flat key-value text (KDD tasks).
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on the test split of its task.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train and evaluate several seeded runs and write a JSON report.
    Experiment {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn per-counter daily series into fitted-model statistics.
    Featurize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the synthetic five-class dataset.
    Synth {
        /// Flat key-value settings, e.g. `label_noise = 0.3`.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a JSON report and print its summary table.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run configuration file; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub task: Option<TaskKind>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long)]
    pub dedup: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub ablation: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub label_noise: Option<f64>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::new(
                self.task
                    .ok_or_else(|| Error::Config("either --config or --task is required".into()))?,
            ),
        };
        if let Some(t) = self.task {
            cfg.task = t;
        }
        if self.data_dir.is_some() {
            cfg.data_dir = self.data_dir.clone();
        }
        if self.subsample.is_some() {
            cfg.subsample = self.subsample;
        }
        cfg.dedup |= self.dedup;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.label_noise {
            cfg.label_noise = n;
        }
        if self.steps.is_some() {
            cfg.train.steps = self.steps;
        }
        if self.ablation.is_some() {
            cfg.train.ablation = self.ablation.clone();
        }
        if self.alpha.is_some() {
            cfg.train.alpha = self.alpha;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 1 on failure, 2 on usage errors.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train {
            run,
            out,
            history,
            manifest,
        } => {
            let cfg = run.resolve()?;
            let prepared = prepare(&cfg)?;
            let (record, outcome) = run_one(&cfg, &prepared, cfg.seed)?;
            io::save_checkpoint(&out, &outcome.state)?;
            if let Some(h) = history {
                io::write_history_csv(&h, outcome.history())?;
            }
            if let (Some(path), Some(m)) = (manifest, &record.manifest) {
                io::write_text(&path, &m.to_text())?;
            }
            println!(
                "seed {}: precision {:.4} recall {:.4} f1 {:.4}",
                record.seed, record.metrics.precision, record.metrics.recall, record.metrics.f1
            );
        }
        Command::Eval { run, checkpoint, out } => {
            let cfg = run.resolve()?;
            let prepared = prepare(&cfg)?;
            let (task, _) = build_task(&cfg, &prepared, cfg.seed)?;
            let state = io::load_checkpoint(&checkpoint)?;
            let m = Metrics::from(&evaluate(&state.disc, &task.test_x, &task.test_truth)?);
            io::write_text(&out, &serde_json::to_string_pretty(&m)?)?;
            println!("precision {:.4} recall {:.4} f1 {:.4}", m.precision, m.recall, m.f1);
        }
        Command::Experiment { run, runs, out } => {
            let mut cfg = run.resolve()?;
            if let Some(n) = runs {
                cfg.runs = n;
            }
            let report = run_prepared(&cfg, &prepare(&cfg)?)?;
            io::write_text(&out, &report.to_json())?;
            print!("{}", report.summary());
        }
        Command::Featurize { input, out } => {
            let table = io::read_series_csv(&input)?;
            let (names, rows) = io::featurize_table(&table, &FitConfig::default())?;
            io::write_features_csv(&out, &names, &rows)?;
            println!("{} samples, {} features", rows.len(), names.len());
        }
        Command::Synth { spec, n, seed, out } => {
            let settings = match spec {
                Some(p) => SynthSettings::from_toml(&read_text(&p)?)?,
                None => SynthSettings { label_noise: 0.0 },
            };
            let data = generate_synthetic(&SyntheticSpec::five_class(settings.label_noise), n, seed)?;
            io::write_synthetic_csv(&out, &data)?;
            println!("{n} samples written");
        }
        Command::Report { input, out } => {
            let report = ExperimentReport::from_json(&read_text(&input)?)?;
            report.check_consistency(1e-9)?;
            let text = report.summary();
            match out {
                Some(p) => io::write_text(&p, &text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
