//! Five-class Gaussian data with a rare positive class nested inside the
//! negative support, for experiments where the real data is unavailable.
//!
//! Each dimension has a role describing how the known negative subclasses
//! `D`, `N`, `H` relate on it. `U` is a broad negative component that matches
//! none of them, and `R` sits on top of `N` except on the signal dimensions.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{ClassLabel, ModelRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimRole {
    /// Same distribution for every known negative subclass.
    Overlapping,
    /// Means of neighbouring subclasses closer than two pooled std.
    Partial,
    /// Subclass means at least four pooled std apart.
    Separated,
    /// Negatives centred at 0; the positive class is shifted.
    Signal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub label: ClassLabel,
    pub weight: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub roles: Vec<DimRole>,
    pub components: Vec<Component>,
    /// Fraction of `D`/`N`/`H` samples whose observed label is replaced by
    /// one of the other two subclasses.
    pub label_noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub x: Matrix,
    pub truth: Vec<ClassLabel>,
    /// Labels after noise; equal to `truth` outside `D`/`N`/`H`.
    pub observed: Vec<ClassLabel>,
}

fn comp(label: ClassLabel, weight: f64, mean: [f64; 8], std: [f64; 8]) -> Component {
    Component {
        label,
        weight,
        mean: mean.to_vec(),
        std: std.to_vec(),
    }
}

impl SyntheticSpec {
    pub fn five_class(label_noise: f64) -> Self {
        use ClassLabel::*;
        use DimRole::*;
        let unit = [1.0; 8];
        Self {
            roles: vec![Overlapping, Overlapping, Partial, Partial, Separated, Separated, Signal, Signal],
            components: vec![
                comp(Dormant, 0.30, [0.0, 0.0, 0.0, 0.0, 0.0, 10.0, 0.0, 0.0], unit),
                comp(Normal, 0.35, [0.0, 0.0, 1.5, 1.5, 5.0, 5.0, 0.0, 0.0], unit),
                comp(Heavy, 0.20, [0.0, 0.0, 3.0, 0.0, 10.0, 0.0, 0.0, 0.0], unit),
                comp(
                    Unknown,
                    0.13,
                    [0.0, 0.0, 1.5, 1.0, 5.0, 5.0, 0.0, 0.0],
                    [1.0, 1.0, 1.5, 1.5, 3.0, 3.0, 1.0, 1.0],
                ),
                comp(
                    Risky,
                    0.02,
                    [0.0, 0.0, 1.5, 1.5, 5.0, 5.0, 1.0, 1.0],
                    [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.6, 0.6],
                ),
            ],
            label_noise,
        }
    }

    pub fn dims(&self) -> usize {
        self.roles.len()
    }

    pub fn component(&self, label: ClassLabel) -> Option<&Component> {
        self.components.iter().find(|c| c.label == label)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims();
        if d == 0 || self.components.is_empty() {
            return Err(Error::Config("synthetic spec needs dimensions and components".into()));
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return Err(Error::Config("label_noise must lie in [0, 1]".into()));
        }
        for (i, c) in self.components.iter().enumerate() {
            if c.mean.len() != d || c.std.len() != d {
                return Err(Error::Config(alloc::format!("component {} has wrong width", c.label)));
            }
            if !(c.weight > 0.0 && c.weight.is_finite()) || c.std.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(Error::Config(alloc::format!("component {} needs positive weight and std", c.label)));
            }
            if self.components[..i].iter().any(|o| o.label == c.label) {
                return Err(Error::Config(alloc::format!("duplicate component {}", c.label)));
            }
        }
        Ok(())
    }

    /// `|μ_a - μ_b| / sqrt((σ_a² + σ_b²) / 2)` on dimension `dim`.
    pub fn separation(&self, dim: usize, a: ClassLabel, b: ClassLabel) -> Option<f64> {
        let (ca, cb) = (self.component(a)?, self.component(b)?);
        let pooled = libm::sqrt((ca.std[dim] * ca.std[dim] + cb.std[dim] * cb.std[dim]) / 2.0);
        Some((ca.mean[dim] - cb.mean[dim]).abs() / pooled)
    }

    pub fn dims_with_role(&self, role: DimRole) -> Vec<usize> {
        (0..self.dims()).filter(|&d| self.roles[d] == role).collect()
    }

    pub fn class_fraction(&self, label: ClassLabel) -> f64 {
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        self.component(label).map_or(0.0, |c| c.weight / total)
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec, n: usize, seed: u64) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ModelRng::seed_from_u64(seed);
    let total: f64 = spec.components.iter().map(|c| c.weight).sum();
    let d = spec.dims();
    let mut data = Vec::with_capacity(n * d);
    let mut truth = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = rng.random::<f64>() * total;
        let mut pick = spec.components.len() - 1;
        for (i, c) in spec.components.iter().enumerate() {
            if u < c.weight {
                pick = i;
                break;
            }
            u -= c.weight;
        }
        let c = &spec.components[pick];
        for j in 0..d {
            let dist = Normal::new(c.mean[j], c.std[j]).map_err(|_| Error::NonFinite("synthetic component"))?;
            data.push(dist.sample(&mut rng));
        }
        truth.push(c.label);
        let mut label = c.label;
        if label.is_known_negative() && spec.label_noise > 0.0 && rng.random::<f64>() < spec.label_noise {
            let others: Vec<ClassLabel> = ClassLabel::NEGATIVE.iter().copied().filter(|l| *l != label).collect();
            label = others[rng.random_range(0..others.len())];
        }
        observed.push(label);
    }
    Ok(SyntheticData {
        x: Matrix::from_vec(n, d, data)?,
        truth,
        observed,
    })
}
