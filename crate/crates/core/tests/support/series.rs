//! Featurizer scenarios with known ground truth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use scarcegan_core::longitudinal::{fit_series, forecast, periodogram, FeatureSeries, FitConfig};
use std::f64::consts::PI;

pub const WEEKLY_FIT_DAYS: usize = 35;
pub const WEEKLY_HORIZON: usize = 7;

/// Upward trend with a weekly cycle, sampled on day `t`.
pub fn weekly_truth(t: f64) -> f64 {
    100.0 + 0.8 * t + 10.0 * (2.0 * PI * t / 7.0 + 0.3).sin()
}

pub fn mape(actual: &[f64], predicted: &[f64]) -> f64 {
    assert_eq!(actual.len(), predicted.len());
    actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| ((a - p) / a).abs())
        .sum::<f64>()
        / actual.len() as f64
}

/// MAPE of a 7-day forecast against held-out observations, where every
/// observation carries multiplicative Gaussian noise of relative size `noise`.
pub fn weekly_forecast_mape(noise: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let obs: Vec<f64> = (0..WEEKLY_FIT_DAYS + WEEKLY_HORIZON)
        .map(|t| {
            let e: f64 = StandardNormal.sample(&mut rng);
            weekly_truth(t as f64) * (1.0 + noise * e)
        })
        .collect();
    let s = FeatureSeries::daily("weekly", 0, &obs[..WEEKLY_FIT_DAYS]).unwrap();
    let fit = fit_series(&s, &FitConfig::default()).unwrap();
    let pred = forecast(&fit.trend, &fit.seasonal, WEEKLY_HORIZON);
    mape(&obs[WEEKLY_FIT_DAYS..], &pred)
}

/// Frequency of the strongest fitted harmonic on a 45-day series with a
/// sinusoid of the given period at signal-to-noise power ratio `snr`.
pub fn top_harmonic_frequency(period: f64, snr: f64, seed: u64) -> f64 {
    let amp = 3.0;
    let sigma = (amp * amp / 2.0 / snr).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..45)
        .map(|t| {
            let e: f64 = StandardNormal.sample(&mut rng);
            20.0 + 0.1 * t as f64 + amp * (2.0 * PI * t as f64 / period).sin() + sigma * e
        })
        .collect();
    let s = FeatureSeries::daily("h", 0, &y).unwrap();
    let fit = fit_series(&s, &FitConfig::default()).unwrap();
    fit.seasonal.harmonics[0].frequency
}

/// `|Σ power - variance| / variance` for the periodogram of `values`.
pub fn parseval_error(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let total: f64 = periodogram(values).iter().map(|(_, p)| p).sum();
    (total - var).abs() / var
}

pub fn random_series(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut rng);
            10.0 + 3.0 * e
        })
        .collect()
}
