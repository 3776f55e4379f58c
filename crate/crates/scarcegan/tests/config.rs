use proptest::prelude::*;
use scarcegan::config::{train_config_from_toml, train_config_to_toml, RunConfig, TaskKind, TrainSettings};
use scarcegan_core::trainer::{Ablation, TrainConfig};

#[test]
fn default_train_config_round_trips() {
    let c = TrainConfig::default();
    assert_eq!(train_config_from_toml(&train_config_to_toml(&c).unwrap()).unwrap(), c);
}

#[test]
fn every_field_is_serialized() {
    let text = train_config_to_toml(&TrainConfig::default()).unwrap();
    for key in [
        "batch_size",
        "steps",
        "seed",
        "alpha",
        "epsilon",
        "pull_away_weight",
        "low_density_weight",
        "feature_matching_weight",
        "reward_weight",
        "learning_rate",
        "decay_rate",
        "decay_steps",
        "ablation",
        "disc_base_widths",
        "gen_hidden",
    ] {
        assert!(text.contains(&format!("{key} = ")), "{key} missing from\n{text}");
    }
}

#[test]
fn unknown_keys_rejected() {
    assert!(train_config_from_toml("batch_size = 32\nbatchsize = 4\n").is_err());
    assert!(RunConfig::from_toml("task = \"synthetic\"\nrunz = 3\n").is_err());
}

#[test]
fn seeds_beyond_toml_integers_rejected() {
    let s = TrainSettings {
        seed: Some(u64::MAX),
        ..Default::default()
    };
    assert!(s.apply(&TrainConfig::default()).is_err());
    let c = TrainConfig {
        seed: u64::MAX,
        ..TrainConfig::default()
    };
    assert!(train_config_to_toml(&c).is_err());
}

#[test]
fn invalid_values_rejected() {
    assert!(train_config_from_toml("alpha = 1.5").is_err());
    assert!(train_config_from_toml("ablation = \"half\"").is_err());
    assert!(train_config_from_toml("batch_size = 0").is_err());
    assert!(RunConfig::from_toml("task = \"synthetic\"\nruns = 0\n").is_err());
    assert!(RunConfig::from_toml("task = \"kdd-r2l\"\nsubsample = 1.5\n").is_err());
}

#[test]
fn run_config_layers_task_defaults_then_overrides() {
    let cfg = RunConfig::from_toml(
        "task = \"kdd-r2l\"\nruns = 2\nseed = 10\n[train]\nsteps = 7\nablation = \"no_leeway\"\n",
    )
    .unwrap();
    assert_eq!(cfg.seeds(), vec![10, 11]);
    let t = cfg.train_config(11).unwrap();
    assert_eq!(t.batch_size, 64);
    assert_eq!(t.steps, 7);
    assert_eq!(t.seed, 11);
    assert_eq!(t.ablation, Ablation::NoLeeway);
    assert_eq!(RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
}

#[test]
fn synthetic_defaults() {
    let cfg = RunConfig::new(TaskKind::Synthetic);
    assert_eq!(cfg.label_noise, 0.3);
    assert_eq!(cfg.runs, 5);
    assert_eq!(cfg.train_config(0).unwrap().batch_size, 32);
}

proptest! {
    #[test]
    fn arbitrary_settings_round_trip(
        batch in 1usize..8, steps in 0u64..5000, seed in 0..=i64::MAX as u64, alpha in 0.0f64..=1.0,
        lr in 1e-5f64..1e-1, ab in 0usize..5, widths in prop::collection::vec(1usize..64, 1..4),
    ) {
        let c = TrainSettings {
            batch_size: Some(batch * 4),
            steps: Some(steps),
            seed: Some(seed),
            alpha: Some(alpha),
            learning_rate: Some(lr),
            ablation: Some(Ablation::ALL[ab].name().into()),
            disc_base_widths: Some(widths),
            ..Default::default()
        }
        .apply(&TrainConfig::default())
        .unwrap();
        prop_assert_eq!(train_config_from_toml(&train_config_to_toml(&c).unwrap()).unwrap(), c);
    }
}
