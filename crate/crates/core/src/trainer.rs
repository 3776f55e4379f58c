//! ScarceGAN training: equal-class supervised batches, then the unsupervised
//! real/fake discriminator update, then the generator update with the
//! discriminator frozen.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::losses::{
    cce, gen_feature_matching, gen_low_density, gen_pull_away, gen_total_loss, loss_sup_negative,
    loss_sup_positive, loss_unsup_fake, loss_unsup_real, loss_unsup_total, scatter_rows, GenLossConfig,
    LeewayConfig, Loss,
};
use crate::matrix::Matrix;
use crate::model::{gaussian_matrix, ClassLabel, Discriminator, Generator, Head, ModelRng, UnsupLabel};
use crate::nn::{adam_step, AdamState, LrSchedule, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ablation {
    Full,
    /// Plain CCE on the prior, K-vs-F unsupervised targets, feature-matching generator.
    VanillaSsgan,
    /// D/N/H collapsed into a single negative class.
    TwoClass,
    /// Generator trained with CCE toward `K` on its own samples.
    NoBadGenerator,
    /// α fixed to 1 everywhere.
    NoLeeway,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::Full,
        Ablation::VanillaSsgan,
        Ablation::TwoClass,
        Ablation::NoBadGenerator,
        Ablation::NoLeeway,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::VanillaSsgan => "vanilla_ssgan",
            Ablation::TwoClass => "two_class",
            Ablation::NoBadGenerator => "no_bad_generator",
            Ablation::NoLeeway => "no_leeway",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl fmt::Display for Ablation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub steps: u64,
    pub seed: u64,
    pub leeway: LeewayConfig,
    /// When set, α moves linearly from `leeway.alpha()` to this value over the run.
    pub alpha_end: Option<f64>,
    pub gen_cfg: GenLossConfig,
    pub reward_weight: f64,
    pub lr_schedule: LrSchedule,
    pub ablation: Ablation,
    pub disc_base_widths: Vec<usize>,
    /// Defaults to the data feature width.
    pub noise_dim: Option<usize>,
    pub gen_hidden: usize,
    /// Defaults to the last base layer.
    pub feature_tap: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            steps: 2000,
            seed: 0,
            leeway: LeewayConfig::default(),
            alpha_end: None,
            gen_cfg: GenLossConfig::default(),
            reward_weight: 1.0,
            lr_schedule: LrSchedule::default(),
            ablation: Ablation::Full,
            disc_base_widths: vec![128, 64, 32],
            noise_dim: None,
            gen_hidden: 64,
            feature_tap: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.gen_cfg.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !self.lr_schedule.is_valid() {
            return Err(Error::Config("invalid learning-rate schedule".into()));
        }
        if let Some(a) = self.alpha_end {
            LeewayConfig::new(a)?;
        }
        if self.disc_base_widths.is_empty() {
            return Err(Error::Config("discriminator needs at least one base layer".into()));
        }
        if let Some(t) = self.feature_tap {
            if t >= self.disc_base_widths.len() {
                return Err(Error::Config(alloc::format!("feature_tap {t} out of range")));
            }
        }
        Ok(())
    }

    /// α in force at `step`, after ablation overrides.
    pub fn alpha_at(&self, step: u64) -> LeewayConfig {
        match self.ablation {
            Ablation::NoLeeway | Ablation::VanillaSsgan => LeewayConfig::new(1.0).expect("1 is in range"),
            _ => match self.alpha_end {
                None => self.leeway,
                Some(end) => {
                    let frac = if self.steps <= 1 {
                        0.0
                    } else {
                        (step as f64 / (self.steps - 1) as f64).min(1.0)
                    };
                    let a = self.leeway.alpha() + (end - self.leeway.alpha()) * frac;
                    LeewayConfig::new(a.clamp(0.0, 1.0)).expect("clamped")
                }
            },
        }
    }

    fn reward(&self) -> f64 {
        match self.ablation {
            Ablation::VanillaSsgan => 0.0,
            _ => self.reward_weight,
        }
    }
}

/// Labeled samples per class. `U` never appears.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPrior {
    classes: Vec<(ClassLabel, Matrix)>,
}

impl LabeledPrior {
    pub fn new(mut classes: Vec<(ClassLabel, Matrix)>) -> Result<Self> {
        classes.sort_by_key(|(l, _)| *l);
        let width = classes.first().map(|(_, m)| m.cols());
        for (i, (label, m)) in classes.iter().enumerate() {
            if *label == ClassLabel::Unknown {
                return Err(Error::InvalidLabel {
                    label: 'U',
                    context: "labeled prior",
                });
            }
            if i > 0 && classes[i - 1].0 == *label {
                return Err(Error::Config(alloc::format!("class {label} given twice")));
            }
            if m.rows() == 0 {
                return Err(Error::EmptyClass(label.code()));
            }
            if Some(m.cols()) != width {
                return Err(Error::Shape {
                    op: "labeled_prior",
                    left: (0, width.unwrap_or(0)),
                    right: m.shape(),
                });
            }
        }
        if !classes.iter().any(|(l, _)| *l == ClassLabel::Risky) {
            return Err(Error::EmptyClass('R'));
        }
        if !classes.iter().any(|(l, _)| l.is_known_negative()) {
            return Err(Error::Config("labeled prior needs at least one negative class".into()));
        }
        Ok(Self { classes })
    }

    /// Builds a prior from row-aligned samples and labels.
    pub fn from_labeled(x: &Matrix, labels: &[ClassLabel]) -> Result<Self> {
        if labels.len() != x.rows() {
            return Err(Error::Shape {
                op: "labeled_prior",
                left: x.shape(),
                right: (labels.len(), 1),
            });
        }
        let mut classes = Vec::new();
        for label in ClassLabel::ALL {
            let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
            if !rows.is_empty() {
                classes.push((label, x.select_rows(&rows)));
            }
        }
        Self::new(classes)
    }

    pub fn classes(&self) -> &[(ClassLabel, Matrix)] {
        &self.classes
    }

    pub fn width(&self) -> usize {
        self.classes[0].1.cols()
    }

    pub fn len(&self) -> usize {
        self.classes.iter().map(|(_, m)| m.rows()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Merges `D`, `N` and `H` into a single `N` class.
    pub fn collapse_negatives(&self) -> Result<Self> {
        let mut neg: Option<Matrix> = None;
        let mut out = Vec::new();
        for (label, m) in &self.classes {
            if label.is_known_negative() {
                neg = Some(match neg {
                    None => m.clone(),
                    Some(acc) => acc.vstack(m)?,
                });
            } else {
                out.push((*label, m.clone()));
            }
        }
        if let Some(n) = neg {
            out.push((ClassLabel::Normal, n));
        }
        Self::new(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledBatch {
    pub x: Matrix,
    pub labels: Vec<ClassLabel>,
}

/// `batch_size / k` rows from each of the prior's `k` classes, shuffled.
/// Classes with fewer rows than needed contribute every row once and fill the
/// rest by sampling with replacement.
pub fn compose_supervised_batch<R: Rng + ?Sized>(
    prior: &LabeledPrior,
    batch_size: usize,
    rng: &mut R,
) -> Result<LabeledBatch> {
    let k = prior.classes.len();
    if batch_size == 0 || batch_size % k != 0 {
        return Err(Error::Config(alloc::format!(
            "batch size {batch_size} not divisible by {k} supervised classes"
        )));
    }
    let per = batch_size / k;
    let mut picks: Vec<(usize, usize)> = Vec::with_capacity(batch_size);
    for (ci, (label, m)) in prior.classes.iter().enumerate() {
        let n = m.rows();
        if n == 0 {
            return Err(Error::EmptyClass(label.code()));
        }
        if n >= per {
            picks.extend(sample(rng, n, per).into_iter().map(|r| (ci, r)));
        } else {
            picks.extend((0..n).map(|r| (ci, r)));
            picks.extend((n..per).map(|_| (ci, rng.random_range(0..n))));
        }
    }
    picks.shuffle(rng);
    let mut data = Vec::with_capacity(batch_size * prior.width());
    let mut labels = Vec::with_capacity(batch_size);
    for (ci, r) in picks {
        let (label, m) = &prior.classes[ci];
        data.extend_from_slice(m.row(r));
        labels.push(*label);
    }
    Ok(LabeledBatch {
        x: Matrix::from_vec(batch_size, prior.width(), data)?,
        labels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Supervised,
    UnsupReal,
    UnsupFake,
    Generator,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Supervised => "supervised",
            Phase::UnsupReal => "unsup_real",
            Phase::UnsupFake => "unsup_fake",
            Phase::Generator => "generator",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub step: u64,
    pub phase: Phase,
    pub term: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory {
    pub entries: Vec<HistoryEntry>,
}

impl LossHistory {
    fn push(&mut self, step: u64, phase: Phase, term: &'static str, value: f64) {
        self.entries.push(HistoryEntry {
            step,
            phase,
            term,
            value,
        });
    }

    /// Values of one term in step order.
    pub fn series(&self, term: &str) -> Vec<f64> {
        self.entries.iter().filter(|e| e.term == term).map(|e| e.value).collect()
    }
}

/// Per-term losses of one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepLosses {
    pub sup_positive: f64,
    pub sup_negative: f64,
    pub sup_total: f64,
    pub unsup_real: f64,
    pub unsup_fake: f64,
    pub unsup_total: f64,
    pub gen_pull_away: f64,
    pub gen_low_density: f64,
    pub gen_feature_matching: f64,
    pub gen_total: f64,
}

#[derive(Debug, Clone)]
pub struct TrainState {
    pub disc: Discriminator,
    pub gen: Generator,
    pub adam_disc: AdamState,
    pub adam_gen: AdamState,
    pub step: u64,
    pub rng: ModelRng,
    pub history: LossHistory,
    /// Shuffled unlabeled-pool order for the current epoch, and the next position in it.
    pub epoch_order: Vec<usize>,
    pub epoch_cursor: usize,
}

impl TrainState {
    pub fn init(cfg: &TrainConfig, input_width: usize) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ModelRng::seed_from_u64(cfg.seed);
        let mut disc = Discriminator::new(input_width, &cfg.disc_base_widths, &mut rng)?;
        if let Some(t) = cfg.feature_tap {
            disc.feature_tap = t;
        }
        disc.validate()?;
        let noise_dim = cfg.noise_dim.unwrap_or(input_width);
        let gen = Generator::new(noise_dim, cfg.gen_hidden, input_width, &mut rng)?;
        let adam_disc = AdamState::new(&disc.param_sizes());
        let adam_gen = AdamState::new(&gen.param_sizes());
        Ok(Self {
            disc,
            gen,
            adam_disc,
            adam_gen,
            step: 0,
            rng,
            history: LossHistory::default(),
            epoch_order: Vec::new(),
            epoch_cursor: 0,
        })
    }

    /// Next `batch` rows of the unlabeled pool, reshuffling at epoch boundaries.
    pub fn next_unlabeled_batch(&mut self, unlabeled: &Matrix, batch: usize) -> Result<Matrix> {
        let n = unlabeled.rows();
        if n == 0 {
            return Err(Error::Empty("unlabeled pool"));
        }
        let mut rows = Vec::with_capacity(batch);
        while rows.len() < batch {
            if self.epoch_cursor >= self.epoch_order.len() || self.epoch_order.len() != n {
                self.epoch_order = (0..n).collect();
                self.epoch_order.shuffle(&mut self.rng);
                self.epoch_cursor = 0;
            }
            rows.push(self.epoch_order[self.epoch_cursor]);
            self.epoch_cursor += 1;
        }
        Ok(unlabeled.select_rows(&rows))
    }
}

fn finite(term: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteLoss(term))
    }
}

/// Supervised objective `L_S = L_S+ + L_S-` on a labeled batch, with its
/// gradient w.r.t. the supervised probabilities.
pub fn supervised_objective(
    sup_probs: &Matrix,
    labels: &[ClassLabel],
    leeway: LeewayConfig,
    reward_weight: f64,
    plain_cce: bool,
) -> Result<(Loss, f64, f64)> {
    if plain_cce {
        let targets: Vec<usize> = labels.iter().map(|l| l.index()).collect();
        let l = cce(sup_probs, &targets)?;
        let v = l.value;
        return Ok((l, 0.0, v));
    }
    let n = sup_probs.rows();
    let pos: Vec<bool> = labels.iter().map(|&l| l == ClassLabel::Risky).collect();
    let neg_rows: Vec<usize> = (0..n).filter(|&i| !pos[i]).collect();
    let mut total = Loss {
        value: 0.0,
        grad: Matrix::zeros(n, sup_probs.cols()),
    };
    let mut lp = 0.0;
    if pos.iter().any(|&p| p) {
        let l = loss_sup_positive(sup_probs, &pos, reward_weight)?;
        lp = l.value;
        total = total.combine(1.0, l, 1.0)?;
    }
    let mut ln = 0.0;
    if !neg_rows.is_empty() {
        let sub = sup_probs.select_rows(&neg_rows);
        let sub_labels: Vec<ClassLabel> = neg_rows.iter().map(|&i| labels[i]).collect();
        let l = loss_sup_negative(&sub, &sub_labels, leeway)?;
        ln = l.value;
        total.value += l.value;
        total.grad.add_scaled(&scatter_rows(&l.grad, &neg_rows, n), 1.0)?;
    }
    Ok((total, lp, ln))
}

/// Generator objective evaluated on a taped discriminator pass over `G(z)`.
/// Returns the loss terms and the gradients w.r.t. (sup probs, unsup probs, features).
pub struct GeneratorObjective {
    pub pull_away: f64,
    pub low_density: f64,
    pub feature_matching: f64,
    pub total: f64,
    pub grad_sup: Option<Matrix>,
    pub grad_unsup: Option<Matrix>,
    pub grad_features: Option<Matrix>,
}

pub fn generator_objective(
    fake_sup: Option<&Matrix>,
    fake_unsup: Option<&Matrix>,
    fake_features: &Matrix,
    real_features: &Matrix,
    ablation: Ablation,
    gen_cfg: &GenLossConfig,
) -> Result<GeneratorObjective> {
    match ablation {
        Ablation::NoBadGenerator => {
            let unsup = fake_unsup.ok_or(Error::MissingForward("unsupervised head"))?;
            let targets = vec![UnsupLabel::Known.index(); unsup.rows()];
            let l = cce(unsup, &targets)?;
            Ok(GeneratorObjective {
                pull_away: 0.0,
                low_density: 0.0,
                feature_matching: 0.0,
                total: l.value,
                grad_sup: None,
                grad_unsup: Some(l.grad),
                grad_features: None,
            })
        }
        Ablation::VanillaSsgan => {
            let fm = gen_feature_matching(fake_features, real_features)?;
            Ok(GeneratorObjective {
                pull_away: 0.0,
                low_density: 0.0,
                feature_matching: fm.value,
                total: fm.value,
                grad_sup: None,
                grad_unsup: None,
                grad_features: Some(fm.grad_fake),
            })
        }
        Ablation::Full | Ablation::TwoClass | Ablation::NoLeeway => {
            let sup = fake_sup.ok_or(Error::MissingForward("supervised head"))?;
            let pa = match gen_pull_away(fake_features) {
                Ok(l) => l,
                Err(Error::Empty(_)) => Loss {
                    value: 0.0,
                    grad: Matrix::zeros(fake_features.rows(), fake_features.cols()),
                },
                Err(e) => return Err(e),
            };
            let ld = gen_low_density(sup, gen_cfg)?;
            let fm = gen_feature_matching(fake_features, real_features)?;
            let total = gen_total_loss(pa.value, ld.value, fm.value, gen_cfg);
            let mut gf = pa.grad;
            gf.scale(gen_cfg.pull_away_weight);
            gf.add_scaled(&fm.grad_fake, gen_cfg.feature_matching_weight)?;
            let mut gs = ld.grad;
            gs.scale(gen_cfg.low_density_weight);
            Ok(GeneratorObjective {
                pull_away: pa.value,
                low_density: ld.value,
                feature_matching: fm.value,
                total,
                grad_sup: Some(gs),
                grad_unsup: None,
                grad_features: Some(gf),
            })
        }
    }
}

/// Phase 1: discriminator update on `L_S = L_S+ + L_S-`.
pub fn supervised_update(
    state: &mut TrainState,
    sup_batch: &LabeledBatch,
    cfg: &TrainConfig,
    out: &mut StepLosses,
) -> Result<()> {
    let step = state.step;
    let pass = state.disc.forward_train(&sup_batch.x, Head::Supervised)?;
    let sup_probs = pass.output.sup.as_ref().ok_or(Error::MissingForward("supervised head"))?;
    let plain = cfg.ablation == Ablation::VanillaSsgan;
    let (ls, lp, ln) =
        supervised_objective(sup_probs, &sup_batch.labels, cfg.alpha_at(step), cfg.reward(), plain)?;
    out.sup_positive = finite("sup_positive", lp)?;
    out.sup_negative = finite("sup_negative", ln)?;
    out.sup_total = finite("sup_total", ls.value)?;
    let mut grads = state.disc.zero_grads();
    state.disc.backward(&pass, Some(&ls.grad), None, None, &mut grads)?;
    adam_step(&mut state.disc.params_mut(), &grads, &mut state.adam_disc, cfg.lr_schedule.rate(step))?;
    state.history.push(step, Phase::Supervised, "sup_positive", out.sup_positive);
    state.history.push(step, Phase::Supervised, "sup_negative", out.sup_negative);
    state.history.push(step, Phase::Supervised, "sup_total", out.sup_total);
    Ok(())
}

/// Phase 2: discriminator update on `L_US = 0.5 (L_US_real + L_US_fake)`, real
/// batch first, then a freshly generated batch.
pub fn unsupervised_update(
    state: &mut TrainState,
    unsup_batch: &Matrix,
    cfg: &TrainConfig,
    out: &mut StepLosses,
) -> Result<()> {
    let step = state.step;
    let mut grads = state.disc.zero_grads();
    let real_pass = state.disc.forward_train(unsup_batch, Head::Unsupervised)?;
    let real_probs = real_pass.output.unsup.as_ref().ok_or(Error::MissingForward("unsupervised head"))?;
    let mut l_real = loss_unsup_real(real_probs, cfg.alpha_at(step))?;
    out.unsup_real = finite("unsup_real", l_real.value)?;
    l_real.grad.scale(0.5);
    state.disc.backward(&real_pass, None, Some(&l_real.grad), None, &mut grads)?;
    state.history.push(step, Phase::UnsupReal, "unsup_real", out.unsup_real);

    let z = gaussian_matrix(&mut state.rng, unsup_batch.rows(), state.gen.noise_dim());
    let fake = state.gen.forward(&z, Mode::Train)?;
    let fake_pass = state.disc.forward_train(&fake, Head::Unsupervised)?;
    let fake_probs = fake_pass.output.unsup.as_ref().ok_or(Error::MissingForward("unsupervised head"))?;
    let mut l_fake = loss_unsup_fake(fake_probs)?;
    out.unsup_fake = finite("unsup_fake", l_fake.value)?;
    l_fake.grad.scale(0.5);
    state.disc.backward(&fake_pass, None, Some(&l_fake.grad), None, &mut grads)?;
    out.unsup_total = loss_unsup_total(out.unsup_real, out.unsup_fake);
    adam_step(&mut state.disc.params_mut(), &grads, &mut state.adam_disc, cfg.lr_schedule.rate(step))?;
    state.history.push(step, Phase::UnsupFake, "unsup_fake", out.unsup_fake);
    state.history.push(step, Phase::UnsupFake, "unsup_total", out.unsup_total);
    Ok(())
}

/// Phase 3: generator update with the discriminator frozen.
pub fn generator_update(
    state: &mut TrainState,
    unsup_batch: &Matrix,
    cfg: &TrainConfig,
    out: &mut StepLosses,
) -> Result<()> {
    let step = state.step;
    let z = gaussian_matrix(&mut state.rng, unsup_batch.rows(), state.gen.noise_dim());
    let (fake, gen_tape) = state.gen.forward_train(&z)?;
    let head = match cfg.ablation {
        Ablation::NoBadGenerator => Head::Unsupervised,
        _ => Head::Supervised,
    };
    let disc = &state.disc;
    let gpass = disc.forward_train(&fake, head)?;
    let real_features = disc.forward(unsup_batch, Head::Supervised)?.features;
    let obj = generator_objective(
        gpass.output.sup.as_ref(),
        gpass.output.unsup.as_ref(),
        &gpass.output.features,
        &real_features,
        cfg.ablation,
        &cfg.gen_cfg,
    )?;
    out.gen_pull_away = finite("gen_pull_away", obj.pull_away)?;
    out.gen_low_density = finite("gen_low_density", obj.low_density)?;
    out.gen_feature_matching = finite("gen_feature_matching", obj.feature_matching)?;
    out.gen_total = finite("gen_total", obj.total)?;
    let mut scratch = disc.zero_grads();
    let dx = disc.backward(
        &gpass,
        obj.grad_sup.as_ref(),
        obj.grad_unsup.as_ref(),
        obj.grad_features.as_ref(),
        &mut scratch,
    )?;
    let mut ggrads = state.gen.zero_grads();
    state.gen.backward(&gen_tape, &dx, &mut ggrads)?;
    if !ggrads.is_finite() {
        return Err(Error::NonFiniteLoss("generator gradient"));
    }
    adam_step(&mut state.gen.net.params_mut(), &ggrads, &mut state.adam_gen, cfg.lr_schedule.rate(step))?;
    state.history.push(step, Phase::Generator, "gen_pull_away", out.gen_pull_away);
    state.history.push(step, Phase::Generator, "gen_low_density", out.gen_low_density);
    state.history.push(step, Phase::Generator, "gen_feature_matching", out.gen_feature_matching);
    state.history.push(step, Phase::Generator, "gen_total", out.gen_total);
    Ok(())
}

/// One ScarceGAN step: supervised D update, unsupervised D update (real then
/// fake, averaged), generator update with D frozen.
pub fn train_step(
    state: &mut TrainState,
    sup_batch: &LabeledBatch,
    unsup_batch: &Matrix,
    cfg: &TrainConfig,
) -> Result<StepLosses> {
    let mut out = StepLosses::default();
    supervised_update(state, sup_batch, cfg, &mut out)?;
    unsupervised_update(state, unsup_batch, cfg, &mut out)?;
    generator_update(state, unsup_batch, cfg, &mut out)?;
    state.step += 1;
    Ok(out)
}

/// Trained networks plus the full per-step loss history.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: TrainState,
}

impl TrainOutcome {
    pub fn disc(&self) -> &Discriminator {
        &self.state.disc
    }

    pub fn history(&self) -> &LossHistory {
        &self.state.history
    }
}

/// Runs `cfg.steps` training steps from a fresh seeded initialization.
pub fn train(cfg: &TrainConfig, prior: &LabeledPrior, unlabeled: &Matrix) -> Result<TrainOutcome> {
    let mut state = TrainState::init(cfg, prior.width())?;
    resume(&mut state, cfg, prior, unlabeled, cfg.steps)?;
    Ok(TrainOutcome { state })
}

/// Continues training an existing state until `state.step == until`.
pub fn resume(
    state: &mut TrainState,
    cfg: &TrainConfig,
    prior: &LabeledPrior,
    unlabeled: &Matrix,
    until: u64,
) -> Result<()> {
    if unlabeled.rows() == 0 {
        return Err(Error::Empty("unlabeled pool"));
    }
    if unlabeled.cols() != prior.width() {
        return Err(Error::Shape {
            op: "train",
            left: unlabeled.shape(),
            right: (0, prior.width()),
        });
    }
    let collapsed;
    let prior = if cfg.ablation == Ablation::TwoClass {
        collapsed = prior.collapse_negatives()?;
        &collapsed
    } else {
        prior
    };
    if cfg.batch_size % prior.classes().len() != 0 {
        return Err(Error::Config(alloc::format!(
            "batch size {} not divisible by {} supervised classes",
            cfg.batch_size,
            prior.classes().len()
        )));
    }
    while state.step < until {
        let sup = compose_supervised_batch(prior, cfg.batch_size, &mut state.rng)?;
        let unsup = state.next_unlabeled_batch(unlabeled, cfg.batch_size)?;
        train_step(state, &sup, &unsup, cfg)?;
    }
    Ok(())
}

/// Steps needed for `epochs` passes over an unlabeled pool of `pool` rows.
pub fn steps_for_epochs(epochs: u64, pool: usize, batch_size: usize) -> u64 {
    epochs * (pool.div_ceil(batch_size.max(1)) as u64)
}

pub fn describe(cfg: &TrainConfig) -> String {
    alloc::format!(
        "ablation={} batch={} steps={} seed={} alpha={}",
        cfg.ablation,
        cfg.batch_size,
        cfg.steps,
        cfg.seed,
        cfg.leeway.alpha()
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::gaussian_matrix;

    fn toy_prior(rng: &mut ModelRng, per_class: usize) -> LabeledPrior {
        let mut classes = Vec::new();
        for (k, label) in [ClassLabel::Dormant, ClassLabel::Normal, ClassLabel::Heavy, ClassLabel::Risky]
            .into_iter()
            .enumerate()
        {
            let mut m = gaussian_matrix(rng, per_class, 4);
            m.scale(0.2);
            for r in 0..per_class {
                m[(r, k)] += 2.0;
            }
            classes.push((label, m));
        }
        LabeledPrior::new(classes).unwrap()
    }

    #[test]
    fn batch_has_equal_class_counts() {
        let mut rng = ModelRng::seed_from_u64(1);
        let prior = toy_prior(&mut rng, 20);
        let b = compose_supervised_batch(&prior, 32, &mut rng).unwrap();
        for label in [ClassLabel::Dormant, ClassLabel::Normal, ClassLabel::Heavy, ClassLabel::Risky] {
            assert_eq!(b.labels.iter().filter(|&&l| l == label).count(), 8);
        }
        let two = prior.collapse_negatives().unwrap();
        let b = compose_supervised_batch(&two, 32, &mut rng).unwrap();
        assert_eq!(b.labels.iter().filter(|&&l| l == ClassLabel::Risky).count(), 16);
        assert_eq!(b.labels.iter().filter(|&&l| l == ClassLabel::Normal).count(), 16);
        assert!(compose_supervised_batch(&prior, 30, &mut rng).is_err());
    }

    #[test]
    fn undersupplied_class_uses_every_row() {
        let mut rng = ModelRng::seed_from_u64(2);
        let mut classes = vec![];
        for (i, label) in [ClassLabel::Dormant, ClassLabel::Normal, ClassLabel::Heavy].into_iter().enumerate() {
            classes.push((label, Matrix::filled(10, 1, i as f64)));
        }
        let r = Matrix::from_rows(&[[10.0], [11.0], [12.0]]).unwrap();
        classes.push((ClassLabel::Risky, r));
        let prior = LabeledPrior::new(classes).unwrap();
        for _ in 0..20 {
            let b = compose_supervised_batch(&prior, 32, &mut rng).unwrap();
            let rs: Vec<f64> = (0..32).filter(|&i| b.labels[i] == ClassLabel::Risky).map(|i| b.x[(i, 0)]).collect();
            assert_eq!(rs.len(), 8);
            for v in [10.0, 11.0, 12.0] {
                assert!(rs.contains(&v));
            }
        }
    }

    #[test]
    fn prior_rejects_unknown_and_empty() {
        assert!(matches!(
            LabeledPrior::new(vec![(ClassLabel::Unknown, Matrix::zeros(1, 2))]),
            Err(Error::InvalidLabel { label: 'U', .. })
        ));
        assert_eq!(
            LabeledPrior::new(vec![
                (ClassLabel::Risky, Matrix::zeros(1, 2)),
                (ClassLabel::Normal, Matrix::zeros(0, 2)),
            ])
            .unwrap_err(),
            Error::EmptyClass('N')
        );
    }

    #[test]
    fn zero_steps_returns_initialization() {
        let mut rng = ModelRng::seed_from_u64(3);
        let prior = toy_prior(&mut rng, 10);
        let pool = gaussian_matrix(&mut rng, 50, 4);
        let cfg = TrainConfig {
            steps: 0,
            disc_base_widths: vec![8, 8],
            gen_hidden: 8,
            seed: 5,
            ..TrainConfig::default()
        };
        let out = train(&cfg, &prior, &pool).unwrap();
        let init = TrainState::init(&cfg, 4).unwrap();
        assert_eq!(out.state.disc, init.disc);
        assert_eq!(out.state.gen, init.gen);
    }

    #[test]
    fn generator_step_leaves_discriminator_untouched() {
        let mut rng = ModelRng::seed_from_u64(4);
        let prior = toy_prior(&mut rng, 10);
        let pool = gaussian_matrix(&mut rng, 64, 4);
        for ablation in Ablation::ALL {
            let cfg = TrainConfig {
                disc_base_widths: vec![8, 8],
                gen_hidden: 8,
                ablation,
                ..TrainConfig::default()
            };
            let mut state = TrainState::init(&cfg, 4).unwrap();
            let unsup = pool.select_rows(&(0..32).collect::<Vec<_>>());
            let mut out = StepLosses::default();
            let disc_before = state.disc.clone();
            let adam_before = state.adam_disc.clone();
            let gen_before = state.gen.clone();
            generator_update(&mut state, &unsup, &cfg, &mut out).unwrap();
            assert_eq!(state.disc, disc_before, "{ablation}");
            assert_eq!(state.adam_disc, adam_before);
            assert_ne!(state.gen, gen_before);
        }
        let _ = prior;
    }

    #[test]
    fn phases_run_in_order() {
        let mut rng = ModelRng::seed_from_u64(5);
        let prior = toy_prior(&mut rng, 10);
        let pool = gaussian_matrix(&mut rng, 40, 4);
        let cfg = TrainConfig {
            steps: 3,
            disc_base_widths: vec![8, 8],
            gen_hidden: 8,
            ..TrainConfig::default()
        };
        let out = train(&cfg, &prior, &pool).unwrap();
        for step in 0..3 {
            let phases: Vec<Phase> = out
                .history()
                .entries
                .iter()
                .filter(|e| e.step == step)
                .map(|e| e.phase)
                .collect();
            let mut sorted = phases.clone();
            sorted.sort();
            assert_eq!(phases, sorted);
            assert_eq!(phases.first(), Some(&Phase::Supervised));
        }
    }
}
