//! Central finite-difference oracle for every training objective, evaluated
//! through randomly initialized 8-unit networks. Independent of the analytic
//! backward path except for the forward pass it perturbs.

use rand::{Rng, SeedableRng};
use scarcegan_core::losses::{
    cce, gen_feature_matching, gen_low_density, gen_pull_away, loss_sup_negative, loss_sup_positive,
    loss_unsup_fake, loss_unsup_real, loss_unsup_total, soft_positive_recall, GenLossConfig, LeewayConfig,
};
use scarcegan_core::model::{gaussian_matrix, ClassLabel, Discriminator, Generator, Head, ModelRng};
use scarcegan_core::nn::{Gradients, Mode};
use scarcegan_core::trainer::{generator_objective, supervised_objective, Ablation};
use scarcegan_core::Matrix;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

/// `‖a - n‖ / max(‖a‖, ‖n‖)`, or 0 when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n) * (a - n)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    let scale = na.max(nn);
    if scale < 1e-10 {
        0.0
    } else {
        diff / scale
    }
}

fn fd_disc(d: &Discriminator, f: &dyn Fn(&Discriminator) -> f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut probe = d.clone();
    let sizes = d.param_sizes();
    for (t, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            let orig = probe.params_mut()[t][i];
            probe.params_mut()[t][i] = orig + STEP;
            let up = f(&probe);
            probe.params_mut()[t][i] = orig - STEP;
            let down = f(&probe);
            probe.params_mut()[t][i] = orig;
            out.push((up - down) / (2.0 * STEP));
        }
    }
    out
}

fn fd_gen(g: &Generator, f: &dyn Fn(&Generator) -> f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut probe = g.clone();
    let sizes = g.param_sizes();
    for (t, &n) in sizes.iter().enumerate() {
        for i in 0..n {
            let orig = probe.net.params_mut()[t][i];
            probe.net.params_mut()[t][i] = orig + STEP;
            let up = f(&probe);
            probe.net.params_mut()[t][i] = orig - STEP;
            let down = f(&probe);
            probe.net.params_mut()[t][i] = orig;
            out.push((up - down) / (2.0 * STEP));
        }
    }
    out
}

pub struct Case {
    pub d: Discriminator,
    pub g: Generator,
    pub x: Matrix,
    pub z: Matrix,
    pub real: Matrix,
    pub labels: Vec<ClassLabel>,
    pub targets: Vec<usize>,
    pub alpha: f64,
    pub gen_cfg: GenLossConfig,
}

/// A random configuration; the supervised head is sharpened so that some
/// generated rows clear the low-density threshold.
pub fn random_case(seed: u64) -> Case {
    let mut rng = ModelRng::seed_from_u64(seed);
    let input = rng.random_range(3..7);
    let noise = rng.random_range(2..5);
    let mut d = Discriminator::new(input, &[8, 8], &mut rng).unwrap();
    d.feature_tap = rng.random_range(0..2);
    let sharpen = rng.random_range(4.0..8.0);
    d.sup_head.weights.scale(sharpen);
    let mut g = Generator::new(noise, 8, input, &mut rng).unwrap();
    // Zero biases put all-zero generated rows exactly on the leaky kink.
    jitter_biases(&mut d.params_mut(), &mut rng);
    jitter_biases(&mut g.net.params_mut(), &mut rng);
    let rows = 6;
    let x = gaussian_matrix(&mut rng, rows, input);
    let z = gaussian_matrix(&mut rng, rows, noise);
    let real = gaussian_matrix(&mut rng, rows, input);
    let mut labels = vec![ClassLabel::Risky, ClassLabel::Dormant];
    for _ in 2..rows {
        labels.push(ClassLabel::ALL[rng.random_range(0..4)]);
    }
    let targets = (0..rows).map(|_| rng.random_range(0..5)).collect();
    Case {
        d,
        g,
        x,
        z,
        real,
        labels,
        targets,
        alpha: rng.random_range(0.0..1.0),
        gen_cfg: GenLossConfig {
            epsilon: 0.75,
            pull_away_weight: rng.random_range(0.5..1.5),
            low_density_weight: rng.random_range(0.5..1.5),
            feature_matching_weight: rng.random_range(0.5..1.5),
        },
    }
}

fn jitter_biases(params: &mut [&mut [f64]], rng: &mut ModelRng) {
    for t in params.iter_mut().skip(1).step_by(2) {
        for b in t.iter_mut() {
            *b += rng.random_range(-0.3..0.3);
        }
    }
}

/// Whether any generated row sits within `margin` of the indicator threshold,
/// where finite differences straddle the discontinuity.
pub fn near_threshold(c: &Case, margin: f64) -> bool {
    let fake = c.g.forward(&c.z, Mode::Train).unwrap();
    let sup = c.d.forward(&fake, Head::Supervised).unwrap().sup.unwrap();
    let near = sup.row_iter().any(|r| {
        let p = r.iter().copied().fold(f64::MIN, f64::max);
        (p - c.gen_cfg.epsilon).abs() < margin
    });
    near
}

/// Relative error of the discriminator-parameter gradient of a head-level loss.
fn check_disc(
    c: &Case,
    input: &Matrix,
    head: Head,
    loss: &dyn Fn(&Matrix) -> (f64, Matrix),
) -> f64 {
    let pass = c.d.forward_train(input, head).unwrap();
    let probs = match head {
        Head::Unsupervised => pass.output.unsup.clone().unwrap(),
        _ => pass.output.sup.clone().unwrap(),
    };
    let (_, grad) = loss(&probs);
    let mut grads: Gradients = c.d.zero_grads();
    match head {
        Head::Unsupervised => c.d.backward(&pass, None, Some(&grad), None, &mut grads).unwrap(),
        _ => c.d.backward(&pass, Some(&grad), None, None, &mut grads).unwrap(),
    };
    let numeric = fd_disc(&c.d, &|d| {
        let out = d.forward(input, head).unwrap();
        let p = match head {
            Head::Unsupervised => out.unsup.unwrap(),
            _ => out.sup.unwrap(),
        };
        loss(&p).0
    });
    relative_error(&grads.flatten(), &numeric)
}

/// Relative error of the generator-parameter gradient of a generator objective.
fn check_gen(c: &Case, ablation: Ablation, pick: &dyn Fn(&scarcegan_core::trainer::GeneratorObjective) -> f64, weights: GenLossConfig) -> f64 {
    let head = if ablation == Ablation::NoBadGenerator { Head::Unsupervised } else { Head::Supervised };
    let real_f = c.d.forward(&c.real, Head::Supervised).unwrap().features;
    let mut g = c.g.clone();
    let (fake, tape) = g.forward_train(&c.z).unwrap();
    let pass = c.d.forward_train(&fake, head).unwrap();
    let obj = generator_objective(
        pass.output.sup.as_ref(),
        pass.output.unsup.as_ref(),
        &pass.output.features,
        &real_f,
        ablation,
        &weights,
    )
    .unwrap();
    let mut scratch = c.d.zero_grads();
    let dx = c
        .d
        .backward(&pass, obj.grad_sup.as_ref(), obj.grad_unsup.as_ref(), obj.grad_features.as_ref(), &mut scratch)
        .unwrap();
    let mut gg = g.zero_grads();
    g.backward(&tape, &dx, &mut gg).unwrap();
    let numeric = fd_gen(&c.g, &|gen| {
        let fake = gen.forward(&c.z, Mode::Train).unwrap();
        let out = c.d.forward(&fake, head).unwrap();
        let o = generator_objective(out.sup.as_ref(), out.unsup.as_ref(), &out.features, &real_f, ablation, &weights)
            .unwrap();
        pick(&o)
    });
    relative_error(&gg.flatten(), &numeric)
}

/// Runs every objective's check on one case, returning `(name, relative error)`.
pub fn check_all(c: &Case) -> Vec<(&'static str, f64)> {
    let leeway = LeewayConfig::new(c.alpha).unwrap();
    let pos: Vec<bool> = c.labels.iter().map(|&l| l == ClassLabel::Risky).collect();
    let neg_rows: Vec<usize> = (0..c.labels.len()).filter(|&i| !pos[i]).collect();
    let neg_x = c.x.select_rows(&neg_rows);
    let neg_labels: Vec<ClassLabel> = neg_rows.iter().map(|&i| c.labels[i]).collect();
    let fake = c.g.forward(&c.z, Mode::Train).unwrap();
    let mut out = Vec::new();

    out.push(("cce", check_disc(c, &c.x, Head::Supervised, &|p| {
        let l = cce(p, &c.targets).unwrap();
        (l.value, l.grad)
    })));
    out.push(("soft_positive_recall", check_disc(c, &c.x, Head::Supervised, &|p| {
        let l = soft_positive_recall(p, &pos).unwrap();
        (l.value, l.grad)
    })));
    out.push(("loss_sup_positive", check_disc(c, &c.x, Head::Supervised, &|p| {
        let l = loss_sup_positive(p, &pos, 1.0).unwrap();
        (l.value, l.grad)
    })));
    out.push(("loss_sup_negative", check_disc(c, &neg_x, Head::Supervised, &|p| {
        let l = loss_sup_negative(p, &neg_labels, leeway).unwrap();
        (l.value, l.grad)
    })));
    out.push(("supervised_total", check_disc(c, &c.x, Head::Supervised, &|p| {
        let (l, _, _) = supervised_objective(p, &c.labels, leeway, 1.0, false).unwrap();
        (l.value, l.grad)
    })));
    out.push(("loss_unsup_real", check_disc(c, &c.real, Head::Unsupervised, &|p| {
        let l = loss_unsup_real(p, leeway).unwrap();
        (l.value, l.grad)
    })));
    out.push(("loss_unsup_fake", check_disc(c, &fake, Head::Unsupervised, &|p| {
        let l = loss_unsup_fake(p).unwrap();
        (l.value, l.grad)
    })));
    // L_US over a stacked real+fake batch: rows split so each half is averaged separately.
    let stacked = c.real.vstack(&fake).unwrap();
    let n_real = c.real.rows();
    out.push(("loss_unsup_total", check_disc(c, &stacked, Head::Unsupervised, &|p| {
        let idx_r: Vec<usize> = (0..n_real).collect();
        let idx_f: Vec<usize> = (n_real..p.rows()).collect();
        let lr = loss_unsup_real(&p.select_rows(&idx_r), leeway).unwrap();
        let lf = loss_unsup_fake(&p.select_rows(&idx_f)).unwrap();
        let mut grad = scarcegan_core::losses::scatter_rows(&lr.grad, &idx_r, p.rows());
        grad.add_scaled(&scarcegan_core::losses::scatter_rows(&lf.grad, &idx_f, p.rows()), 1.0).unwrap();
        grad.scale(0.5);
        (loss_unsup_total(lr.value, lf.value), grad)
    })));

    let only = |pa: f64, ld: f64, fm: f64| GenLossConfig {
        epsilon: c.gen_cfg.epsilon,
        pull_away_weight: pa,
        low_density_weight: ld,
        feature_matching_weight: fm,
    };
    out.push(("gen_pull_away", check_gen(c, Ablation::Full, &|o| o.pull_away, only(1.0, 0.0, 0.0))));
    out.push(("gen_low_density", check_gen(c, Ablation::Full, &|o| o.low_density, only(0.0, 1.0, 0.0))));
    out.push(("gen_feature_matching", check_gen(c, Ablation::Full, &|o| o.feature_matching, only(0.0, 0.0, 1.0))));
    out.push(("gen_total", check_gen(c, Ablation::Full, &|o| o.total, c.gen_cfg)));
    out.push(("gen_fooling_cce", check_gen(c, Ablation::NoBadGenerator, &|o| o.total, c.gen_cfg)));

    // Direct checks of the feature-level losses w.r.t. their matrix inputs.
    let feats = c.d.forward(&fake, Head::Supervised).unwrap().features;
    let real_f = c.d.forward(&c.real, Head::Supervised).unwrap().features;
    out.push(("gen_pull_away_input", check_matrix(&feats, &|m| {
        let l = gen_pull_away(m).unwrap();
        (l.value, l.grad)
    })));
    out.push(("gen_feature_matching_input", check_matrix(&feats, &|m| {
        let l = gen_feature_matching(m, &real_f).unwrap();
        (l.value, l.grad_fake)
    })));
    let sup = c.d.forward(&fake, Head::Supervised).unwrap().sup.unwrap();
    out.push(("gen_low_density_input", check_matrix(&sup, &|m| {
        let l = gen_low_density(m, &c.gen_cfg).unwrap();
        (l.value, l.grad)
    })));
    out
}

fn check_matrix(m: &Matrix, f: &dyn Fn(&Matrix) -> (f64, Matrix)) -> f64 {
    let (_, grad) = f(m);
    let mut probe = m.clone();
    let mut numeric = Vec::new();
    for i in 0..m.as_slice().len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + STEP;
        let up = f(&probe).0;
        probe.as_mut_slice()[i] = orig - STEP;
        let down = f(&probe).0;
        probe.as_mut_slice()[i] = orig;
        numeric.push((up - down) / (2.0 * STEP));
    }
    relative_error(grad.as_slice(), &numeric)
}

/// The first `n` seeds whose cases keep every generated row at least
/// `1e-3` away from the indicator threshold.
pub fn cases(n: usize) -> Vec<(u64, Case)> {
    let mut out = Vec::new();
    let mut seed = 1000;
    while out.len() < n {
        let c = random_case(seed);
        if !near_threshold(&c, 1e-3) {
            out.push((seed, c));
        }
        seed += 1;
    }
    out
}
