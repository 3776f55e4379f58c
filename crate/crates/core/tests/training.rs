use rand::SeedableRng;
use scarcegan_core::losses::LeewayConfig;
use scarcegan_core::model::{gaussian_matrix, ClassLabel, ModelRng};
use scarcegan_core::trainer::{
    compose_supervised_batch, train, Ablation, LabeledPrior, Phase, TrainConfig, TrainState,
};
use scarcegan_core::Matrix;

/// Four well separated unit-variance blobs in 6 dimensions.
fn separable(per_class: usize, seed: u64) -> (LabeledPrior, Matrix) {
    let mut rng = ModelRng::seed_from_u64(seed);
    let labels = [ClassLabel::Dormant, ClassLabel::Normal, ClassLabel::Heavy, ClassLabel::Risky];
    let mut classes = Vec::new();
    let mut pool = Vec::new();
    for (k, label) in labels.into_iter().enumerate() {
        let mut m = gaussian_matrix(&mut rng, per_class, 6);
        for r in 0..per_class {
            m.row_mut(r)[k] += 6.0;
        }
        pool.extend_from_slice(m.as_slice());
        classes.push((label, m));
    }
    let unlabeled = Matrix::from_vec(4 * per_class, 6, pool).unwrap();
    (LabeledPrior::new(classes).unwrap(), unlabeled)
}

fn small_cfg(steps: u64, seed: u64, ablation: Ablation) -> TrainConfig {
    TrainConfig {
        steps,
        seed,
        ablation,
        disc_base_widths: vec![32, 16],
        gen_hidden: 16,
        ..TrainConfig::default()
    }
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn same_seed_replays_bitwise() {
    let (prior, pool) = separable(40, 1);
    let cfg = small_cfg(60, 9, Ablation::Full);
    let a = train(&cfg, &prior, &pool).unwrap();
    let b = train(&cfg, &prior, &pool).unwrap();
    assert_eq!(a.history(), b.history());
    for (x, y) in a.disc().params().iter().zip(b.disc().params()) {
        assert_eq!(bits(x), bits(y));
    }
    for (x, y) in a.state.gen.net.params().iter().zip(b.state.gen.net.params()) {
        assert_eq!(bits(x), bits(y));
    }
}

#[test]
fn different_seeds_differ() {
    let (prior, pool) = separable(40, 1);
    let a = train(&small_cfg(5, 1, Ablation::Full), &prior, &pool).unwrap();
    let b = train(&small_cfg(5, 2, Ablation::Full), &prior, &pool).unwrap();
    assert_ne!(a.history(), b.history());
}

#[test]
fn no_leeway_equals_full_at_alpha_one() {
    let (prior, pool) = separable(40, 2);
    let ablated = train(&small_cfg(50, 4, Ablation::NoLeeway), &prior, &pool).unwrap();
    let mut full = small_cfg(50, 4, Ablation::Full);
    full.leeway = LeewayConfig::new(1.0).unwrap();
    let full = train(&full, &prior, &pool).unwrap();
    assert_eq!(ablated.history(), full.history());
    for (x, y) in ablated.disc().params().iter().zip(full.disc().params()) {
        assert_eq!(bits(x), bits(y));
    }
}

#[test]
fn supervised_loss_halves_within_200_steps() {
    let (prior, pool) = separable(100, 3);
    let out = train(&small_cfg(200, 5, Ablation::Full), &prior, &pool).unwrap();
    let ls = out.history().series("sup_total");
    assert_eq!(ls.len(), 200);
    // The recall reward puts L_S's lower bound at -w, so the drop is measured
    // on L_S + w (w = 1).
    let first: f64 = ls[..10].iter().sum::<f64>() / 10.0 + 1.0;
    let last: f64 = ls[190..].iter().sum::<f64>() / 10.0 + 1.0;
    assert!(last <= 0.5 * first, "first {first} last {last}");
}

#[test]
fn phases_run_in_order_every_step() {
    let (prior, pool) = separable(20, 4);
    let out = train(&small_cfg(15, 1, Ablation::Full), &prior, &pool).unwrap();
    let entries = &out.history().entries;
    for step in 0..15 {
        let phases: Vec<Phase> = entries.iter().filter(|e| e.step == step).map(|e| e.phase).collect();
        assert!(phases.windows(2).all(|w| w[0] <= w[1]), "step {step}: {phases:?}");
        assert_eq!(phases.first(), Some(&Phase::Supervised));
        assert_eq!(phases.last(), Some(&Phase::Generator));
    }
}

#[test]
fn batches_stay_balanced_over_a_run() {
    let (prior, _) = separable(7, 5);
    let mut rng = ModelRng::seed_from_u64(0);
    for _ in 0..200 {
        let b = compose_supervised_batch(&prior, 32, &mut rng).unwrap();
        for label in [ClassLabel::Dormant, ClassLabel::Normal, ClassLabel::Heavy, ClassLabel::Risky] {
            assert_eq!(b.labels.iter().filter(|l| **l == label).count(), 8);
        }
    }
}

#[test]
fn zero_steps_is_initialization() {
    let (prior, pool) = separable(10, 6);
    let cfg = small_cfg(0, 3, Ablation::Full);
    let out = train(&cfg, &prior, &pool).unwrap();
    let init = TrainState::init(&cfg, prior.width()).unwrap();
    assert_eq!(out.disc(), &init.disc);
    assert!(out.history().entries.is_empty());
}

#[test]
fn every_ablation_trains() {
    let (prior, pool) = separable(20, 7);
    for ab in Ablation::ALL {
        let mut cfg = small_cfg(10, 1, ab);
        if ab == Ablation::TwoClass {
            cfg.batch_size = 32;
        }
        let out = train(&cfg, &prior, &pool).unwrap();
        assert_eq!(out.history().series("gen_total").len(), 10, "{ab}");
    }
}

#[test]
fn indivisible_batch_rejected() {
    let (prior, pool) = separable(10, 8);
    let mut cfg = small_cfg(1, 1, Ablation::Full);
    cfg.batch_size = 30;
    assert!(train(&cfg, &prior, &pool).is_err());
}

#[test]
fn two_class_batches_split_evenly() {
    let (prior, _) = separable(20, 9);
    let collapsed = prior.collapse_negatives().unwrap();
    let mut rng = ModelRng::seed_from_u64(1);
    let b = compose_supervised_batch(&collapsed, 32, &mut rng).unwrap();
    assert_eq!(b.labels.iter().filter(|l| **l == ClassLabel::Risky).count(), 16);
    assert_eq!(b.labels.iter().filter(|l| **l == ClassLabel::Normal).count(), 16);
}

#[test]
fn no_leeway_pins_alpha_every_step() {
    let mut cfg = small_cfg(100, 0, Ablation::NoLeeway);
    cfg.alpha_end = Some(0.2);
    for step in 0..100 {
        assert_eq!(cfg.alpha_at(step).alpha(), 1.0);
    }
}
