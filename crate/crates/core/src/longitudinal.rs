//! Trend plus seasonality fitting of short daily counter series, and the
//! ten per-series statistics derived from the fit.
//!
//! The model is
//!
//! ```text
//! y(t) = a + k t + Σ_j δ_j (t - s_j)_+ + Σ_i (c_i cos 2π f_i t + d_i sin 2π f_i t) + Σ_w r_w 1[dow(t) = w]
//! ```
//!
//! with `t` in days from the first observation and changepoints `s_j` on a
//! fixed grid. Rate deltas `δ` get a Laplace prior and are estimated jointly
//! with the noise variance (a lasso whose weight tracks the residual
//! variance); everything else is ordinary least squares.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MIN_LEN: usize = 15;
pub const MAX_LEN: usize = 45;
pub const STATS_PER_SERIES: usize = 10;

pub const STAT_NAMES: [&str; STATS_PER_SERIES] = [
    "harmonic_power_1",
    "harmonic_power_2",
    "harmonic_power_3",
    "laplace_scale",
    "change_rate_mean",
    "change_rate_std",
    "growth_rate",
    "dominant_frequency",
    "residual_std",
    "regressor_magnitude",
];

const SINGULAR_TOL: f64 = 1e-10;

/// A daily counter series on consecutive days. Gaps in the input are filled
/// by linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    counter: String,
    first_day: i64,
    values: Vec<f64>,
}

impl FeatureSeries {
    pub fn new(counter: impl Into<String>, days: &[i64], values: &[f64]) -> Result<Self> {
        let counter = counter.into();
        if days.len() != values.len() {
            return Err(Error::InvalidSeries {
                counter,
                reason: "day and value counts differ",
            });
        }
        if days.is_empty() {
            return Err(Error::SeriesLength(0));
        }
        if days.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::UnorderedDays);
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidSeries {
                counter,
                reason: "values must be finite and non-negative",
            });
        }
        let span = (days[days.len() - 1] - days[0]) as usize + 1;
        if !(MIN_LEN..=MAX_LEN).contains(&span) {
            return Err(Error::SeriesLength(span));
        }
        let mut dense = Vec::with_capacity(span);
        for (w, v) in days.windows(2).zip(values.windows(2)) {
            let gap = (w[1] - w[0]) as f64;
            for step in 0..(w[1] - w[0]) {
                let frac = step as f64 / gap;
                dense.push(v[0] + (v[1] - v[0]) * frac);
            }
        }
        dense.push(values[values.len() - 1]);
        Ok(Self {
            counter,
            first_day: days[0],
            values: dense,
        })
    }

    /// Series on consecutive days starting at `first_day`.
    pub fn daily(counter: impl Into<String>, first_day: i64, values: &[f64]) -> Result<Self> {
        let days: Vec<i64> = (0..values.len() as i64).map(|i| first_day + i).collect();
        Self::new(counter, &days, values)
    }

    pub fn counter(&self) -> &str {
        &self.counter
    }

    pub fn first_day(&self) -> i64 {
        self.first_day
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Changepoint candidates every this many days.
    pub changepoint_spacing: usize,
    /// Fraction of the window, from its start, that may hold changepoints.
    pub changepoint_range: f64,
    /// Laplace prior scale of the rate deltas; smaller is sparser, 0 removes them.
    pub prior_scale: f64,
    pub harmonics: usize,
    pub peak_selection: PeakSelection,
    /// Fit day-of-week indicator regressors.
    pub weekday_regressors: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            changepoint_spacing: 5,
            changepoint_range: 0.8,
            prior_scale: 0.05,
            harmonics: 3,
            peak_selection: PeakSelection::Strongest,
            weekday_regressors: false,
        }
    }
}

/// How seasonal frequencies are picked from the residual periodogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakSelection {
    /// Strongest local maxima.
    Strongest,
    /// Lowest-frequency bins with at least two cycles in the window.
    Lowest,
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.changepoint_spacing == 0 {
            return Err(Error::Config("changepoint_spacing must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.changepoint_range) {
            return Err(Error::Config("changepoint_range must lie in [0, 1]".into()));
        }
        if !(self.prior_scale.is_finite() && self.prior_scale >= 0.0) {
            return Err(Error::Config("prior_scale must be finite and non-negative".into()));
        }
        Ok(())
    }

    fn changepoints(&self, n: usize) -> Vec<f64> {
        let limit = (self.changepoint_range * n as f64).min(n.saturating_sub(1) as f64);
        (1..)
            .map(|j| (j * self.changepoint_spacing) as f64)
            .take_while(|&s| s < limit)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendFit {
    pub first_day: i64,
    pub len: usize,
    pub intercept: f64,
    pub growth_rate: f64,
    /// Changepoint positions in days from `first_day`.
    pub changepoints: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl TrendFit {
    pub fn value_at(&self, t: f64) -> f64 {
        let mut y = self.intercept + self.growth_rate * t;
        for (s, d) in self.changepoints.iter().zip(&self.deltas) {
            if t > *s {
                y += d * (t - s);
            }
        }
        y
    }

    /// Slope of each segment, starting with the one before the first changepoint.
    pub fn segment_slopes(&self) -> Vec<f64> {
        let mut out = vec![self.growth_rate];
        let mut k = self.growth_rate;
        for d in &self.deltas {
            k += d;
            out.push(k);
        }
        out
    }

    /// Fitted slope between each pair of consecutive observed days.
    pub fn daily_rates(&self) -> Vec<f64> {
        (0..self.len.saturating_sub(1))
            .map(|t| {
                let t = t as f64;
                self.growth_rate
                    + self
                        .changepoints
                        .iter()
                        .zip(&self.deltas)
                        .filter(|(s, _)| t >= **s)
                        .map(|(_, d)| d)
                        .sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    /// Cycles per day.
    pub frequency: f64,
    pub cos_coef: f64,
    pub sin_coef: f64,
}

impl Harmonic {
    pub fn amplitude(&self) -> f64 {
        libm::hypot(self.cos_coef, self.sin_coef)
    }

    /// Mean power `A² / 2` of the sinusoid.
    pub fn power(&self) -> f64 {
        0.5 * (self.cos_coef * self.cos_coef + self.sin_coef * self.sin_coef)
    }

    fn value_at(&self, t: f64) -> f64 {
        let w = 2.0 * PI * self.frequency * t;
        self.cos_coef * libm::cos(w) + self.sin_coef * libm::sin(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalFit {
    /// Sorted by descending power.
    pub harmonics: Vec<Harmonic>,
    /// Day-of-week offsets for weekdays 1..=6 relative to weekday 0.
    pub regressors: Option<[f64; 6]>,
}

impl SeasonalFit {
    pub fn value_at(&self, t: f64, day: i64) -> f64 {
        let mut y: f64 = self.harmonics.iter().map(|h| h.value_at(t)).sum();
        if let Some(r) = &self.regressors {
            let w = day.rem_euclid(7) as usize;
            if w > 0 {
                y += r[w - 1];
            }
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFit {
    pub trend: TrendFit,
    pub seasonal: SeasonalFit,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThirdOrderStats(pub [f64; STATS_PER_SERIES]);

impl ThirdOrderStats {
    pub fn harmonic_powers(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }
    pub fn laplace_scale(&self) -> f64 {
        self.0[3]
    }
    pub fn change_rate_mean(&self) -> f64 {
        self.0[4]
    }
    pub fn change_rate_std(&self) -> f64 {
        self.0[5]
    }
    pub fn growth_rate(&self) -> f64 {
        self.0[6]
    }
    pub fn dominant_frequency(&self) -> f64 {
        self.0[7]
    }
    pub fn residual_std(&self) -> f64 {
        self.0[8]
    }
    pub fn regressor_magnitude(&self) -> f64 {
        self.0[9]
    }
}

/// One-sided power spectrum of the mean-removed series at the Fourier
/// frequencies `k / n`, `k = 1..=n/2`. Powers sum to the population variance.
pub fn periodogram(values: &[f64]) -> Vec<(f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let nf = n as f64;
    (1..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in values.iter().enumerate() {
                let w = 2.0 * PI * ((k * t) % n) as f64 / nf;
                re += (v - mean) * libm::cos(w);
                im -= (v - mean) * libm::sin(w);
            }
            let mag = (re * re + im * im) / (nf * nf);
            let power = if 2 * k == n { mag } else { 2.0 * mag };
            (k as f64 / nf, power)
        })
        .collect()
}

/// Numerical rank from singular values; only the rank decision uses the SVD.
fn check_rank(a: &DMatrix<f64>) -> Result<()> {
    let sv = a.clone().singular_values();
    let smax = sv.max();
    let rank = sv.iter().filter(|s| **s > SINGULAR_TOL * smax.max(1.0)).count();
    if rank < a.ncols() {
        return Err(Error::RankDeficient {
            rank,
            cols: a.ncols(),
            rows: a.nrows(),
        });
    }
    Ok(())
}

/// Least-squares solution by Householder QR, after a rank check.
fn lstsq(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_rank(a)?;
    let qr = a.clone().qr();
    let qty = qr.q().transpose() * y;
    qr.r()
        .solve_upper_triangular(&qty)
        .ok_or(Error::NonFinite("least squares"))
}

/// Orthonormal basis of the column space of `a`.
fn column_basis(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_rank(a)?;
    Ok(a.clone().qr().q())
}

fn hinge(t: f64, s: f64) -> f64 {
    if t > s {
        t - s
    } else {
        0.0
    }
}

/// Columns fitted without penalty: intercept, slope, harmonics, weekday indicators.
fn base_columns(n: usize, first_day: i64, freqs: &[f64], weekday: bool) -> DMatrix<f64> {
    let cols = 2 + 2 * freqs.len() + if weekday { 6 } else { 0 };
    DMatrix::from_fn(n, cols, |t, c| {
        let tf = t as f64;
        if c == 0 {
            return 1.0;
        }
        if c == 1 {
            return tf;
        }
        let c = c - 2;
        if c < 2 * freqs.len() {
            let w = 2.0 * PI * freqs[c / 2] * tf;
            return if c % 2 == 0 { libm::cos(w) } else { libm::sin(w) };
        }
        let dow = (first_day + t as i64).rem_euclid(7) as usize;
        if dow == c - 2 * freqs.len() + 1 {
            1.0
        } else {
            0.0
        }
    })
}

fn hinge_columns(n: usize, changepoints: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(n, changepoints.len(), |t, j| hinge(t as f64, changepoints[j]))
}

struct JointFit {
    base_coef: Vec<f64>,
    deltas: Vec<f64>,
    residuals: Vec<f64>,
}

impl JointFit {
    fn active(&self) -> Vec<bool> {
        self.deltas.iter().map(|d| *d != 0.0).collect()
    }
}

/// Rate deltas under a Laplace prior of scale `prior_scale`, with the series
/// scaled to unit absolute maximum and time to `[0, 1]`. The unpenalized block
/// is profiled out, and the noise variance is re-estimated from the residual
/// between lasso solves, so the L1 weight is `σ² / prior_scale`.
fn map_deltas(base: &DMatrix<f64>, hinges: &DMatrix<f64>, y: &DVector<f64>, prior_scale: f64) -> Result<Vec<f64>> {
    let (n, m) = (y.len(), hinges.ncols());
    if m == 0 {
        return Ok(Vec::new());
    }
    let q = column_basis(base)?;
    let project = |v: &DVector<f64>| v - &q * (q.transpose() * v);
    let y_scale = y.amax();
    let t_scale = (n.max(2) - 1) as f64;
    let target = project(y);
    let spread = (y - DVector::from_element(n, y.mean())).norm();
    // Already explained to round-off: nothing for a changepoint to capture.
    if target.norm() <= 1e-9 * spread || y_scale == 0.0 {
        return Ok(vec![0.0; m]);
    }
    if prior_scale == 0.0 {
        return Ok(vec![0.0; m]);
    }
    let target = target / y_scale;
    let cols: Vec<DVector<f64>> = (0..m).map(|j| project(&hinges.column(j).into_owned()) / t_scale).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.norm_squared()).collect();

    let mut full = DMatrix::zeros(n, m);
    for (j, c) in cols.iter().enumerate() {
        full.set_column(j, c);
    }
    let mut sigma2 = match lstsq(&full, &target) {
        Ok(coef) => (&target - &full * coef).norm_squared() / n as f64,
        Err(_) => target.norm_squared() / n as f64,
    };
    let mut delta = vec![0.0; m];
    let mut resid = target.clone();
    for _ in 0..200 {
        let lambda = sigma2 / prior_scale;
        for _ in 0..10_000 {
            let mut max_change: f64 = 0.0;
            for j in 0..m {
                if norms[j] <= SINGULAR_TOL {
                    continue;
                }
                let rho = cols[j].dot(&resid) + norms[j] * delta[j];
                let new = if rho > lambda {
                    (rho - lambda) / norms[j]
                } else if rho < -lambda {
                    (rho + lambda) / norms[j]
                } else {
                    0.0
                };
                let change = new - delta[j];
                if change != 0.0 {
                    resid.axpy(-change, &cols[j], 1.0);
                    max_change = max_change.max(change.abs() * libm::sqrt(norms[j]));
                    delta[j] = new;
                }
            }
            if max_change <= 1e-13 {
                break;
            }
        }
        let next = resid.norm_squared() / n as f64;
        let settled = (next - sigma2).abs() <= 1e-12 * sigma2.max(f64::MIN_POSITIVE);
        sigma2 = next;
        if settled {
            break;
        }
    }
    Ok(delta.iter().map(|d| d * y_scale / t_scale).collect())
}

/// MAP changepoint deltas, then least squares for the unpenalized block.
fn joint_fit(
    y: &[f64],
    first_day: i64,
    changepoints: &[f64],
    freqs: &[f64],
    weekday: bool,
    prior_scale: f64,
) -> Result<JointFit> {
    let n = y.len();
    let offset = y.iter().sum::<f64>() / n as f64;
    let yv = DVector::from_iterator(n, y.iter().map(|v| v - offset));
    let base = base_columns(n, first_day, freqs, weekday);
    let hinges = hinge_columns(n, changepoints);
    let deltas = map_deltas(&base, &hinges, &yv, prior_scale)?;
    let trend_part = &hinges * DVector::from_column_slice(&deltas);
    let coef = lstsq(&base, &(&yv - &trend_part))?;
    let resid = &yv - &trend_part - &base * &coef;
    let mut base_coef: Vec<f64> = coef.iter().copied().collect();
    base_coef[0] += offset;
    Ok(JointFit {
        base_coef,
        deltas,
        residuals: resid.iter().copied().collect(),
    })
}

/// Unpenalized fit with the changepoints in `active` free: coefficients (base
/// block first) and residuals.
fn fit_active(
    yv: &DVector<f64>,
    base: &DMatrix<f64>,
    hinges: &DMatrix<f64>,
    active: &[bool],
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = yv.len();
    let picked: Vec<usize> = (0..active.len()).filter(|&j| active[j]).collect();
    let mut design = DMatrix::zeros(n, base.ncols() + picked.len());
    design.columns_mut(0, base.ncols()).copy_from(base);
    for (c, &j) in picked.iter().enumerate() {
        design.column_mut(base.ncols() + c).copy_from(&hinges.column(j));
    }
    let coef = lstsq(&design, yv)?;
    let resid = yv - &design * &coef;
    Ok((coef, resid))
}

fn evenly_spaced(n: usize, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|j| libm::round((j * n) as f64 / (count + 1) as f64))
        .collect()
}

/// Piecewise-linear trend with `n_changepoints` evenly spaced candidates.
pub fn fit_piecewise_trend(series: &FeatureSeries, n_changepoints: usize, prior_scale: f64) -> Result<TrendFit> {
    let n = series.len();
    if 3 * n_changepoints >= n {
        return Err(Error::Config(alloc::format!(
            "{n_changepoints} changepoints need more than {} points, got {n}",
            3 * n_changepoints
        )));
    }
    let cps = evenly_spaced(n, n_changepoints);
    let fit = joint_fit(series.values(), series.first_day(), &cps, &[], false, prior_scale)?;
    Ok(TrendFit {
        first_day: series.first_day(),
        len: n,
        intercept: fit.base_coef[0],
        growth_rate: fit.base_coef[1],
        changepoints: cps,
        deltas: fit.deltas,
    })
}

/// Indices of the strongest local maxima of a spectrum, strongest first.
fn top_peaks(spectrum: &[(f64, f64)], count: usize, floor: f64) -> Vec<usize> {
    let len = spectrum.len();
    let mut peaks: Vec<usize> = (0..len)
        .filter(|&i| {
            let p = spectrum[i].1;
            let left = i == 0 || p > spectrum[i - 1].1;
            let right = i + 1 == len || p >= spectrum[i + 1].1;
            left && right && p > floor
        })
        .collect();
    peaks.sort_by(|&a, &b| spectrum[b].1.total_cmp(&spectrum[a].1).then(a.cmp(&b)));
    peaks.truncate(count);
    peaks
}

fn golden_section(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let ratio = (libm::sqrt(5.0) - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..40 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

/// Full fit: trend, then the strongest periodogram peaks of its residual with
/// frequencies refined by golden-section search on the joint least-squares
/// fit, then a final joint fit of everything.
pub fn fit_series(series: &FeatureSeries, cfg: &FitConfig) -> Result<SeriesFit> {
    cfg.validate()?;
    let n = series.len();
    let nf = n as f64;
    // Fitting the centered series makes every statistic blind to a constant offset.
    let offset = series.values().iter().sum::<f64>() / nf;
    let centered: Vec<f64> = series.values().iter().map(|v| v - offset).collect();
    let y = &centered[..];
    let day0 = series.first_day();
    let cps = cfg.changepoints(n);
    let yv = DVector::from_column_slice(y);

    let stage1 = joint_fit(y, day0, &cps, &[], cfg.weekday_regressors, cfg.prior_scale)?;
    let spectrum = periodogram(&stage1.residuals);
    let variance = y.iter().map(|v| v * v).sum::<f64>() / nf;
    let floor = 1e-12 * variance.max(f64::MIN_POSITIVE);
    // A harmonic must complete two cycles in the window to be told apart from
    // the trend; the Nyquist bin has no sine component. Both are left out.
    let min_freq = 2.0 / nf;
    let end = if n % 2 == 0 { spectrum.len() - 1 } else { spectrum.len() };
    let usable = &spectrum[1..end];
    let mut freqs: Vec<f64> = match cfg.peak_selection {
        PeakSelection::Strongest => top_peaks(usable, cfg.harmonics, floor).iter().map(|&i| usable[i].0).collect(),
        PeakSelection::Lowest => usable
            .iter()
            .filter(|(f, p)| *f >= min_freq - 1e-12 && *p > floor)
            .take(cfg.harmonics)
            .map(|(f, _)| *f)
            .collect(),
    };

    let hinges = hinge_columns(n, &cps);
    let active = stage1.active();
    let fit_at = |fs: &[f64]| {
        let base = base_columns(n, day0, fs, cfg.weekday_regressors);
        fit_active(&yv, &base, &hinges, &active)
    };
    let rss = |fs: &[f64]| fit_at(fs).map_or(f64::INFINITY, |(_, r)| r.norm_squared());
    // -dRSS/df_i / 2 at the least-squares coefficients (envelope theorem).
    let slope = |fs: &[f64], i: usize| -> Option<f64> {
        let (coef, resid) = fit_at(fs).ok()?;
        let (a, b) = (coef[2 + 2 * i], coef[3 + 2 * i]);
        let w = 2.0 * PI * fs[i];
        Some(
            resid
                .iter()
                .enumerate()
                .map(|(t, r)| {
                    let t = t as f64;
                    r * 2.0 * PI * t * (b * libm::cos(w * t) - a * libm::sin(w * t))
                })
                .sum(),
        )
    };
    let (lo_bound, hi_bound) = (min_freq, 0.5 - 0.5 / nf);
    for i in 0..freqs.len() {
        let lo = (freqs[i] - 1.0 / nf).max(lo_bound);
        let hi = (freqs[i] + 1.0 / nf).min(hi_bound);
        let mut trial = freqs.clone();
        let best = golden_section(lo, hi, |f| {
            trial[i] = f;
            rss(&trial)
        });
        // RSS is flat at its minimum, so polish on the sign change of its derivative.
        let h = 1e-6 / nf;
        let (mut a, mut b) = ((best - h).max(lo), (best + h).min(hi));
        trial[i] = a;
        let ga = slope(&trial, i);
        trial[i] = b;
        let gb = slope(&trial, i);
        freqs[i] = best;
        if let (Some(mut ga), Some(gb)) = (ga, gb) {
            if ga * gb < 0.0 {
                for _ in 0..60 {
                    let mid = 0.5 * (a + b);
                    trial[i] = mid;
                    let Some(gm) = slope(&trial, i) else { break };
                    if gm * ga > 0.0 {
                        a = mid;
                        ga = gm;
                    } else {
                        b = mid;
                    }
                }
                freqs[i] = 0.5 * (a + b);
            }
        }
    }
    let mut kept: Vec<f64> = Vec::new();
    for f in freqs {
        if kept.iter().all(|k| (k - f).abs() >= 0.5 / nf) {
            kept.push(f);
        }
    }

    let fit = loop {
        match joint_fit(y, day0, &cps, &kept, cfg.weekday_regressors, cfg.prior_scale) {
            Ok(f) => break f,
            Err(Error::RankDeficient { .. }) if !kept.is_empty() => {
                kept.pop();
            }
            Err(e) => return Err(e),
        }
    };
    let mut harmonics: Vec<Harmonic> = kept
        .iter()
        .enumerate()
        .map(|(i, &f)| Harmonic {
            frequency: f,
            cos_coef: fit.base_coef[2 + 2 * i],
            sin_coef: fit.base_coef[3 + 2 * i],
        })
        .collect();
    harmonics.sort_by(|a, b| b.power().total_cmp(&a.power()).then(a.frequency.total_cmp(&b.frequency)));
    let regressors = cfg.weekday_regressors.then(|| {
        let off = 2 + 2 * kept.len();
        let mut r = [0.0; 6];
        r.copy_from_slice(&fit.base_coef[off..off + 6]);
        r
    });
    Ok(SeriesFit {
        trend: TrendFit {
            first_day: day0,
            len: n,
            intercept: fit.base_coef[0] + offset,
            growth_rate: fit.base_coef[1],
            changepoints: cps,
            deltas: fit.deltas,
        },
        seasonal: SeasonalFit { harmonics, regressors },
        residuals: fit.residuals,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

pub fn stats_from_fit(fit: &SeriesFit) -> ThirdOrderStats {
    let mut s = [0.0; STATS_PER_SERIES];
    for (slot, h) in s.iter_mut().zip(&fit.seasonal.harmonics) {
        *slot = h.power();
    }
    let deltas = &fit.trend.deltas;
    s[3] = if deltas.is_empty() {
        0.0
    } else {
        deltas.iter().map(|d| d.abs()).sum::<f64>() / deltas.len() as f64
    };
    let (m, sd) = mean_std(&fit.trend.daily_rates());
    s[4] = m;
    s[5] = sd;
    s[6] = fit.trend.growth_rate;
    s[7] = fit.seasonal.harmonics.first().map_or(0.0, |h| h.frequency);
    s[8] = mean_std(&fit.residuals).1;
    s[9] = fit
        .seasonal
        .regressors
        .map_or(0.0, |r| libm::sqrt(r.iter().map(|x| x * x).sum()));
    ThirdOrderStats(s)
}

pub fn extract_third_order_stats(series: &FeatureSeries, cfg: &FitConfig) -> Result<ThirdOrderStats> {
    Ok(stats_from_fit(&fit_series(series, cfg)?))
}

/// Trend plus seasonality for the `horizon` days after the fitted window.
pub fn forecast(trend: &TrendFit, seasonal: &SeasonalFit, horizon: usize) -> Vec<f64> {
    (0..horizon)
        .map(|h| {
            let t = (trend.len + h) as f64;
            let day = trend.first_day + (trend.len + h) as i64;
            trend.value_at(t) + seasonal.value_at(t, day)
        })
        .collect()
}

/// Column names of a featurized sample, counters in sorted order.
pub fn feature_names(counters: &[String]) -> Vec<String> {
    let mut sorted: Vec<&String> = counters.iter().collect();
    sorted.sort();
    sorted
        .iter()
        .flat_map(|c| STAT_NAMES.iter().map(move |s| alloc::format!("{c}_{s}")))
        .collect()
}

/// Concatenated statistics of every expected counter, ordered by counter name.
pub fn featurize_sample(series: &[FeatureSeries], counters: &[String], cfg: &FitConfig) -> Result<Vec<f64>> {
    let mut sorted: Vec<&String> = counters.iter().collect();
    sorted.sort();
    for (i, s) in series.iter().enumerate() {
        if series[..i].iter().any(|o| o.counter() == s.counter()) {
            return Err(Error::DuplicateCounter(s.counter().into()));
        }
    }
    let mut out = Vec::with_capacity(STATS_PER_SERIES * sorted.len());
    for name in sorted {
        let s = series
            .iter()
            .find(|s| s.counter() == name)
            .ok_or_else(|| Error::MissingCounter(name.clone()))?;
        out.extend_from_slice(&extract_third_order_stats(s, cfg)?.0);
    }
    Ok(out)
}
