//! Discriminator and generator objectives.
//!
//! Every loss returns its value together with the gradient w.r.t. its matrix
//! input (probabilities or features), so the trainer can push it back through
//! the softmax heads. Probabilities are clamped to `[PROB_FLOOR, 1]` before
//! the log; the clamp has zero derivative below the floor.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{ClassLabel, UnsupLabel};

pub const PROB_FLOOR: f64 = 1e-12;

/// A scalar objective and its gradient w.r.t. the evaluated matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Loss {
    pub value: f64,
    pub grad: Matrix,
}

impl Loss {
    fn zero_like(m: &Matrix) -> Self {
        Self {
            value: 0.0,
            grad: Matrix::zeros(m.rows(), m.cols()),
        }
    }

    /// `self * a + other * b`, both evaluated on the same matrix.
    pub fn combine(self, a: f64, other: Loss, b: f64) -> Result<Loss> {
        let mut grad = self.grad;
        grad.scale(a);
        grad.add_scaled(&other.grad, b)?;
        Ok(Loss {
            value: a * self.value + b * other.value,
            grad,
        })
    }
}

/// Known-negative weight α; the forced-Unknown term gets `1 - α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeewayConfig {
    alpha: f64,
}

impl LeewayConfig {
    pub const DEFAULT_ALPHA: f64 = 0.65;

    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(alloc::format!("leeway alpha {alpha} outside [0, 1]")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }

    /// `(α, 1 - α)`.
    pub fn weights(self) -> (f64, f64) {
        (self.alpha, 1.0 - self.alpha)
    }
}

impl Default for LeewayConfig {
    fn default() -> Self {
        Self {
            alpha: Self::DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenLossConfig {
    /// Confidence threshold of the low-density indicator.
    pub epsilon: f64,
    pub pull_away_weight: f64,
    pub low_density_weight: f64,
    pub feature_matching_weight: f64,
}

impl Default for GenLossConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.75,
            pull_away_weight: 1.0,
            low_density_weight: 1.0,
            feature_matching_weight: 1.0,
        }
    }
}

impl GenLossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config(alloc::format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        Ok(())
    }
}

fn check_cols(m: &Matrix, cols: usize, op: &'static str) -> Result<()> {
    if m.cols() != cols {
        return Err(Error::Shape {
            op,
            left: m.shape(),
            right: (m.rows(), cols),
        });
    }
    Ok(())
}

/// Mean of `-ln max(p[row, target], floor)` over `(row, target)` pairs.
fn cce_pairs(probs: &Matrix, pairs: impl Iterator<Item = (usize, usize)> + Clone) -> Result<Loss> {
    let n = pairs.clone().count();
    let mut loss = Loss::zero_like(probs);
    if n == 0 {
        return Ok(loss);
    }
    let inv_n = 1.0 / n as f64;
    for (r, t) in pairs {
        if t >= probs.cols() {
            return Err(Error::TargetOutOfRange {
                index: t,
                classes: probs.cols(),
            });
        }
        let p = probs[(r, t)];
        if p >= PROB_FLOOR {
            loss.value -= libm::log(p) * inv_n;
            loss.grad[(r, t)] -= inv_n / p;
        } else {
            loss.value -= libm::log(PROB_FLOOR) * inv_n;
        }
    }
    Ok(loss)
}

/// Categorical cross-entropy `-(1/N) Σ ln P[y_i]`.
pub fn cce(probs: &Matrix, targets: &[usize]) -> Result<Loss> {
    if targets.len() != probs.rows() {
        return Err(Error::Shape {
            op: "cce",
            left: probs.shape(),
            right: (targets.len(), 1),
        });
    }
    cce_pairs(probs, targets.iter().copied().enumerate())
}

fn mask_rows(mask: &[bool], probs: &Matrix, op: &'static str) -> Result<Vec<usize>> {
    if mask.len() != probs.rows() {
        return Err(Error::Shape {
            op,
            left: probs.shape(),
            right: (mask.len(), 1),
        });
    }
    let rows: Vec<usize> = mask.iter().enumerate().filter_map(|(i, &m)| m.then_some(i)).collect();
    if rows.is_empty() {
        return Err(Error::Empty("positive rows"));
    }
    Ok(rows)
}

/// Differentiable recall surrogate: mean `P(R)` over the masked rows.
pub fn soft_positive_recall(sup_probs: &Matrix, positive_rows: &[bool]) -> Result<Loss> {
    check_cols(sup_probs, ClassLabel::COUNT, "soft_positive_recall")?;
    let rows = mask_rows(positive_rows, sup_probs, "soft_positive_recall")?;
    let r = ClassLabel::Risky.index();
    let inv = 1.0 / rows.len() as f64;
    let mut loss = Loss::zero_like(sup_probs);
    for &i in &rows {
        loss.value += sup_probs[(i, r)] * inv;
        loss.grad[(i, r)] = inv;
    }
    Ok(loss)
}

/// Hard recall: fraction of masked rows whose argmax is `R`.
pub fn hard_positive_recall(sup_probs: &Matrix, positive_rows: &[bool]) -> Result<f64> {
    let rows = mask_rows(positive_rows, sup_probs, "hard_positive_recall")?;
    let hits = rows
        .iter()
        .filter(|&&i| crate::eval::argmax_label(sup_probs.row(i)) == ClassLabel::Risky)
        .count();
    Ok(hits as f64 / rows.len() as f64)
}

/// Positive-class objective: CCE toward `R` on positive rows minus
/// `reward_weight` times the soft recall.
pub fn loss_sup_positive(sup_probs: &Matrix, positive_rows: &[bool], reward_weight: f64) -> Result<Loss> {
    check_cols(sup_probs, ClassLabel::COUNT, "loss_sup_positive")?;
    let rows = mask_rows(positive_rows, sup_probs, "loss_sup_positive")?;
    let r = ClassLabel::Risky.index();
    let ce = cce_pairs(sup_probs, rows.iter().map(|&i| (i, r)))?;
    if reward_weight == 0.0 {
        return Ok(ce);
    }
    let recall = soft_positive_recall(sup_probs, positive_rows)?;
    ce.combine(1.0, recall, -reward_weight)
}

/// Leeway-weighted negative objective over rows labeled `D`, `N` or `H`:
/// `α CCE(true subclass) + (1 - α) CCE(U)`.
pub fn loss_sup_negative(sup_probs: &Matrix, labels: &[ClassLabel], cfg: LeewayConfig) -> Result<Loss> {
    check_cols(sup_probs, ClassLabel::COUNT, "loss_sup_negative")?;
    if labels.len() != sup_probs.rows() {
        return Err(Error::Shape {
            op: "loss_sup_negative",
            left: sup_probs.shape(),
            right: (labels.len(), 1),
        });
    }
    if let Some(bad) = labels.iter().find(|l| !l.is_known_negative()) {
        return Err(Error::InvalidLabel {
            label: bad.code(),
            context: "negative supervised loss",
        });
    }
    let (a, b) = cfg.weights();
    let known = cce_pairs(sup_probs, labels.iter().map(|l| l.index()).enumerate())?;
    if b == 0.0 {
        return Ok(known);
    }
    let u = ClassLabel::Unknown.index();
    let forced = cce_pairs(sup_probs, (0..sup_probs.rows()).map(|i| (i, u)))?;
    known.combine(a, forced, b)
}

/// Real unlabeled rows: `α CCE(K) + (1 - α) CCE(U)` on the K/U/F head.
pub fn loss_unsup_real(unsup_probs: &Matrix, cfg: LeewayConfig) -> Result<Loss> {
    check_cols(unsup_probs, UnsupLabel::COUNT, "loss_unsup_real")?;
    let (a, b) = cfg.weights();
    let n = unsup_probs.rows();
    let k = cce_pairs(unsup_probs, (0..n).map(|i| (i, UnsupLabel::Known.index())))?;
    if b == 0.0 {
        return Ok(k);
    }
    let u = cce_pairs(unsup_probs, (0..n).map(|i| (i, UnsupLabel::Unknown.index())))?;
    k.combine(a, u, b)
}

/// Generated rows: CCE toward `F`.
pub fn loss_unsup_fake(unsup_probs: &Matrix) -> Result<Loss> {
    check_cols(unsup_probs, UnsupLabel::COUNT, "loss_unsup_fake")?;
    cce_pairs(unsup_probs, (0..unsup_probs.rows()).map(|i| (i, UnsupLabel::Fake.index())))
}

pub fn loss_unsup_total(real: f64, fake: f64) -> f64 {
    0.5 * (real + fake)
}

/// Mean squared cosine similarity over ordered pairs of distinct rows.
/// Zero-norm rows are dropped (with a warning).
pub fn gen_pull_away(features: &Matrix) -> Result<Loss> {
    let norms: Vec<f64> = features
        .row_iter()
        .map(|r| libm::sqrt(r.iter().map(|v| v * v).sum::<f64>()))
        .collect();
    let valid: Vec<usize> = (0..features.rows()).filter(|&i| norms[i] > 0.0).collect();
    if valid.len() < features.rows() {
        log::warn!(
            "pull-away: excluded {} zero-norm feature rows",
            features.rows() - valid.len()
        );
    }
    if valid.len() < 2 {
        return Err(Error::Empty("pull-away needs at least two non-zero feature rows"));
    }
    let m = valid.len() as f64;
    let pair_scale = 1.0 / (m * (m - 1.0));
    let mut loss = Loss::zero_like(features);
    let width = features.cols();
    let mut gi = vec![0.0; width];
    for (ai, &i) in valid.iter().enumerate() {
        let xi = features.row(i);
        gi.iter_mut().for_each(|v| *v = 0.0);
        for (aj, &j) in valid.iter().enumerate() {
            if ai == aj {
                continue;
            }
            let xj = features.row(j);
            let dot: f64 = xi.iter().zip(xj).map(|(a, b)| a * b).sum();
            let c = dot / (norms[i] * norms[j]);
            loss.value += c * c * pair_scale;
            // c_ij appears in both (i, j) and (j, i)
            let k1 = 4.0 * pair_scale * c / (norms[i] * norms[j]);
            let k2 = 4.0 * pair_scale * c * c / (norms[i] * norms[i]);
            for d in 0..width {
                gi[d] += k1 * xj[d] - k2 * xi[d];
            }
        }
        loss.grad.row_mut(i).copy_from_slice(&gi);
    }
    Ok(loss)
}

/// `mean_x [ ln p(x) · 1[p(x) > ε] ]` with `p(x)` the maximum supervised class
/// probability. Always `<= 0`; minimizing it lowers over-confident rows.
pub fn gen_low_density(sup_probs: &Matrix, cfg: &GenLossConfig) -> Result<Loss> {
    check_cols(sup_probs, ClassLabel::COUNT, "gen_low_density")?;
    let mut loss = Loss::zero_like(sup_probs);
    if sup_probs.rows() == 0 {
        return Ok(loss);
    }
    let inv_n = 1.0 / sup_probs.rows() as f64;
    for r in 0..sup_probs.rows() {
        let row = sup_probs.row(r);
        let (c, p) = row
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
        if p > cfg.epsilon {
            loss.value += libm::log(p) * inv_n;
            loss.grad[(r, c)] = inv_n / p;
        }
    }
    Ok(loss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatching {
    pub value: f64,
    pub grad_fake: Matrix,
    pub grad_real: Matrix,
}

/// `‖mean(f_fake) - mean(f_real)‖²`.
pub fn gen_feature_matching(f_fake: &Matrix, f_real: &Matrix) -> Result<FeatureMatching> {
    if f_fake.cols() != f_real.cols() {
        return Err(Error::Shape {
            op: "gen_feature_matching",
            left: f_fake.shape(),
            right: f_real.shape(),
        });
    }
    if f_fake.rows() == 0 || f_real.rows() == 0 {
        return Err(Error::Empty("feature matching batch"));
    }
    let mf = f_fake.column_means();
    let mr = f_real.column_means();
    let diff: Vec<f64> = mf.iter().zip(&mr).map(|(a, b)| a - b).collect();
    let value = diff.iter().map(|d| d * d).sum();
    let mut grad_fake = Matrix::zeros(f_fake.rows(), f_fake.cols());
    let kf = 2.0 / f_fake.rows() as f64;
    for r in 0..grad_fake.rows() {
        for (g, d) in grad_fake.row_mut(r).iter_mut().zip(&diff) {
            *g = kf * d;
        }
    }
    let mut grad_real = Matrix::zeros(f_real.rows(), f_real.cols());
    let kr = -2.0 / f_real.rows() as f64;
    for r in 0..grad_real.rows() {
        for (g, d) in grad_real.row_mut(r).iter_mut().zip(&diff) {
            *g = kr * d;
        }
    }
    Ok(FeatureMatching {
        value,
        grad_fake,
        grad_real,
    })
}

/// Weighted sum of the three complementary-generator terms.
pub fn gen_total_loss(pull_away: f64, low_density: f64, feature_matching: f64, cfg: &GenLossConfig) -> f64 {
    cfg.pull_away_weight * pull_away
        + cfg.low_density_weight * low_density
        + cfg.feature_matching_weight * feature_matching
}

/// Places the rows of `sub` at `rows` in a zero `(total x cols)` matrix.
pub fn scatter_rows(sub: &Matrix, rows: &[usize], total: usize) -> Matrix {
    let mut out = Matrix::zeros(total, sub.cols());
    for (k, &r) in rows.iter().enumerate() {
        for (o, v) in out.row_mut(r).iter_mut().zip(sub.row(k)) {
            *o += v;
        }
    }
    out
}
