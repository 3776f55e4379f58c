//! The ScarceGAN network pair.
//!
//! The discriminator is a shared leaky-relu base feeding two softmax heads: a
//! 5-way supervised head over `D, N, H, R, U` and a 3-way unsupervised head over
//! `K, U, F`. One base layer is tapped as the feature map `f(x)` used by the
//! generator's feature-matching and pull-away terms. The generator is
//! `dense(leaky) -> batch norm -> dense(relu)`.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{Activation, BatchNorm, DenseLayer, Gradients, Layer, Mode, Sequential, Tape};

pub type ModelRng = ChaCha8Rng;

/// Supervised output classes, in head column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClassLabel {
    Dormant,
    Normal,
    Heavy,
    Risky,
    Unknown,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::Dormant,
        ClassLabel::Normal,
        ClassLabel::Heavy,
        ClassLabel::Risky,
        ClassLabel::Unknown,
    ];
    pub const NEGATIVE: [ClassLabel; 3] = [ClassLabel::Dormant, ClassLabel::Normal, ClassLabel::Heavy];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn code(self) -> char {
        match self {
            ClassLabel::Dormant => 'D',
            ClassLabel::Normal => 'N',
            ClassLabel::Heavy => 'H',
            ClassLabel::Risky => 'R',
            ClassLabel::Unknown => 'U',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        Self::ALL.into_iter().find(|l| l.code() == c)
    }

    pub fn is_known_negative(self) -> bool {
        matches!(self, ClassLabel::Dormant | ClassLabel::Normal | ClassLabel::Heavy)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Unsupervised head classes: known-real, unknown-real, fake.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnsupLabel {
    Known,
    Unknown,
    Fake,
}

impl UnsupLabel {
    pub const ALL: [UnsupLabel; 3] = [UnsupLabel::Known, UnsupLabel::Unknown, UnsupLabel::Fake];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> char {
        match self {
            UnsupLabel::Known => 'K',
            UnsupLabel::Unknown => 'U',
            UnsupLabel::Fake => 'F',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Supervised,
    Unsupervised,
    Both,
}

impl Head {
    fn sup(self) -> bool {
        matches!(self, Head::Supervised | Head::Both)
    }

    fn unsup(self) -> bool {
        matches!(self, Head::Unsupervised | Head::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscOutput {
    pub sup: Option<Matrix>,
    pub unsup: Option<Matrix>,
    pub features: Matrix,
}

/// A taped discriminator pass, needed for [`Discriminator::backward`].
#[derive(Debug, Clone)]
pub struct DiscPass {
    pub output: DiscOutput,
    base: Tape,
    sup: Option<crate::nn::DenseCache>,
    unsup: Option<crate::nn::DenseCache>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub base: Sequential,
    pub sup_head: DenseLayer,
    pub unsup_head: DenseLayer,
    /// Index of the base layer whose activations serve as `f(x)`.
    pub feature_tap: usize,
}

impl Discriminator {
    /// Leaky-relu base with the given widths; tap on the last base layer.
    pub fn new<R: Rng + ?Sized>(input: usize, base_widths: &[usize], rng: &mut R) -> Result<Self> {
        if base_widths.is_empty() || base_widths.contains(&0) || input == 0 {
            return Err(Error::Config("discriminator needs non-empty, non-zero widths".into()));
        }
        let mut layers = Vec::with_capacity(base_widths.len());
        let mut prev = input;
        for &w in base_widths {
            layers.push(Layer::Dense(DenseLayer::init(prev, w, Activation::leaky(), rng)));
            prev = w;
        }
        let sup_head = DenseLayer::init(prev, ClassLabel::COUNT, Activation::Softmax, rng);
        let unsup_head = DenseLayer::init(prev, UnsupLabel::COUNT, Activation::Softmax, rng);
        Ok(Self {
            base: Sequential::new(layers),
            sup_head,
            unsup_head,
            feature_tap: base_widths.len() - 1,
        })
    }

    pub fn input_width(&self) -> usize {
        self.base.input_width().unwrap_or(0)
    }

    pub fn feature_width(&self) -> usize {
        self.base.layers[self.feature_tap].output_width()
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_tap >= self.base.layers.len() {
            return Err(Error::Config(alloc::format!(
                "feature tap {} out of range for {} base layers",
                self.feature_tap,
                self.base.layers.len()
            )));
        }
        let w = self.base.output_width().unwrap_or(0);
        if self.sup_head.inputs() != w
            || self.unsup_head.inputs() != w
            || self.sup_head.outputs() != ClassLabel::COUNT
            || self.unsup_head.outputs() != UnsupLabel::COUNT
        {
            return Err(Error::Config("head shapes do not match the base".into()));
        }
        Ok(())
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_width() {
            return Err(Error::Shape {
                op: "disc_forward",
                left: x.shape(),
                right: (x.rows(), self.input_width()),
            });
        }
        Ok(())
    }

    /// Read-only evaluation, safe to share across threads.
    pub fn forward(&self, x: &Matrix, head: Head) -> Result<DiscOutput> {
        self.check_input(x)?;
        let mut h = x.clone();
        let mut features = None;
        for (i, l) in self.base.layers.iter().enumerate() {
            h = match l {
                Layer::Dense(d) => d.forward(&h)?,
                Layer::BatchNorm(b) => b.forward_inference(&h)?,
            };
            if i == self.feature_tap {
                features = Some(h.clone());
            }
        }
        let sup = if head.sup() { Some(self.sup_head.forward(&h)?) } else { None };
        let unsup = if head.unsup() { Some(self.unsup_head.forward(&h)?) } else { None };
        Ok(DiscOutput {
            sup,
            unsup,
            features: features.ok_or(Error::MissingForward("feature tap"))?,
        })
    }

    pub fn forward_train(&self, x: &Matrix, head: Head) -> Result<DiscPass> {
        self.check_input(x)?;
        let base = self.base.forward_tape_frozen(x)?;
        let top = base.output().ok_or(Error::MissingForward("discriminator base"))?;
        let (sup_out, sup) = if head.sup() {
            let (o, c) = self.sup_head.forward_cached(top)?;
            (Some(o), Some(c))
        } else {
            (None, None)
        };
        let (unsup_out, unsup) = if head.unsup() {
            let (o, c) = self.unsup_head.forward_cached(top)?;
            (Some(o), Some(c))
        } else {
            (None, None)
        };
        let features = base
            .layer_output(self.feature_tap)
            .ok_or(Error::MissingForward("feature tap"))?
            .clone();
        Ok(DiscPass {
            output: DiscOutput {
                sup: sup_out,
                unsup: unsup_out,
                features,
            },
            base,
            sup,
            unsup,
        })
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        let mut s = self.base.param_sizes();
        s.push(self.sup_head.weights.as_slice().len());
        s.push(self.sup_head.bias.len());
        s.push(self.unsup_head.weights.as_slice().len());
        s.push(self.unsup_head.bias.len());
        s
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut p = self.base.params();
        p.push(self.sup_head.weights.as_slice());
        p.push(&self.sup_head.bias);
        p.push(self.unsup_head.weights.as_slice());
        p.push(&self.unsup_head.bias);
        p
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut p = self.base.params_mut();
        p.push(self.sup_head.weights.as_mut_slice());
        p.push(&mut self.sup_head.bias);
        p.push(self.unsup_head.weights.as_mut_slice());
        p.push(&mut self.unsup_head.bias);
        p
    }

    pub fn zero_grads(&self) -> Gradients {
        Gradients::zeros(&self.param_sizes())
    }

    /// Backpropagates gradients w.r.t. the supervised probabilities, the
    /// unsupervised probabilities and/or the tapped features. Shared base
    /// gradients accumulate contributions from every supplied path. Returns the
    /// gradient w.r.t. the discriminator input.
    pub fn backward(
        &self,
        pass: &DiscPass,
        grad_sup: Option<&Matrix>,
        grad_unsup: Option<&Matrix>,
        grad_features: Option<&Matrix>,
        grads: &mut Gradients,
    ) -> Result<Matrix> {
        if grads.sizes() != self.param_sizes() {
            return Err(Error::Shape {
                op: "disc_backward",
                left: (grads.tensors.len(), 0),
                right: (self.param_sizes().len(), 0),
            });
        }
        let n_base = self.base.layers.len();
        let base_params = 2 * n_base;
        let top = pass.base.output().ok_or(Error::MissingForward("discriminator base"))?;
        let mut g_top = Matrix::zeros(top.rows(), top.cols());
        let mut base_grads = Gradients {
            tensors: core::mem::take(&mut grads.tensors),
        };
        let head_grads = base_grads.tensors.split_off(base_params);
        let mut head_grads = Gradients { tensors: head_grads };
        if let Some(g) = grad_sup {
            let cache = pass.sup.as_ref().ok_or(Error::MissingForward("supervised head"))?;
            let (w, b) = head_grads.tensors[0..2].split_at_mut(1);
            let gi = self.sup_head.backward(cache, g, &mut w[0], &mut b[0])?;
            g_top.add_scaled(&gi, 1.0)?;
        }
        if let Some(g) = grad_unsup {
            let cache = pass.unsup.as_ref().ok_or(Error::MissingForward("unsupervised head"))?;
            let (w, b) = head_grads.tensors[2..4].split_at_mut(1);
            let gi = self.unsup_head.backward(cache, g, &mut w[0], &mut b[0])?;
            g_top.add_scaled(&gi, 1.0)?;
        }
        let result = (|| {
            let mut g = self
                .base
                .backward_range(&pass.base, self.feature_tap + 1, n_base, &g_top, &mut base_grads)?;
            if let Some(gf) = grad_features {
                g.add_scaled(gf, 1.0)?;
            }
            self.base
                .backward_range(&pass.base, 0, self.feature_tap + 1, &g, &mut base_grads)
        })();
        base_grads.tensors.append(&mut head_grads.tensors);
        grads.tensors = base_grads.tensors;
        result
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub net: Sequential,
}

impl Generator {
    pub fn new<R: Rng + ?Sized>(
        noise_dim: usize,
        hidden: usize,
        output_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if noise_dim == 0 || hidden == 0 || output_dim == 0 {
            return Err(Error::Config("generator widths must be non-zero".into()));
        }
        Ok(Self {
            net: Sequential::new(alloc::vec![
                Layer::Dense(DenseLayer::init(noise_dim, hidden, Activation::leaky(), rng)),
                Layer::BatchNorm(BatchNorm::new(hidden)),
                Layer::Dense(DenseLayer::init(hidden, output_dim, Activation::Relu, rng)),
            ]),
        })
    }

    pub fn noise_dim(&self) -> usize {
        self.net.input_width().unwrap_or(0)
    }

    pub fn output_dim(&self) -> usize {
        self.net.output_width().unwrap_or(0)
    }

    /// Checks the `dense -> batch norm -> dense` layout.
    pub fn validate(&self) -> Result<()> {
        match self.net.layers.as_slice() {
            [Layer::Dense(a), Layer::BatchNorm(b), Layer::Dense(c)]
                if a.outputs() == b.width() && b.width() == c.inputs() =>
            {
                Ok(())
            }
            _ => Err(Error::Config("generator must be dense -> batch norm -> dense".into())),
        }
    }

    fn check(&self, z: &Matrix) -> Result<()> {
        if z.cols() != self.noise_dim() {
            return Err(Error::Shape {
                op: "gen_forward",
                left: z.shape(),
                right: (z.rows(), self.noise_dim()),
            });
        }
        Ok(())
    }

    /// Read-only evaluation. Train mode normalizes with batch statistics without
    /// updating the running averages.
    pub fn forward(&self, z: &Matrix, mode: Mode) -> Result<Matrix> {
        self.check(z)?;
        match mode {
            Mode::Inference => self.net.forward(z),
            Mode::Train => {
                let tape = self.net.forward_tape_frozen(z)?;
                Ok(tape.output().cloned().unwrap_or_else(|| z.clone()))
            }
        }
    }

    /// Train-mode taped pass that also updates batch-norm running statistics.
    pub fn forward_train(&mut self, z: &Matrix) -> Result<(Matrix, Tape)> {
        self.check(z)?;
        let tape = self.net.forward_tape(z)?;
        let out = tape.output().cloned().ok_or(Error::MissingForward("generator"))?;
        Ok((out, tape))
    }

    pub fn backward(&self, tape: &Tape, upstream: &Matrix, grads: &mut Gradients) -> Result<Matrix> {
        self.net.backward(tape, upstream, grads)
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        self.net.param_sizes()
    }

    pub fn zero_grads(&self) -> Gradients {
        Gradients::zeros(&self.param_sizes())
    }
}

/// Standard multivariate Gaussian noise source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSpec {
    pub dim: usize,
    pub seed: u64,
}

pub fn sample_noise(n: usize, spec: NoiseSpec) -> Matrix {
    use rand::SeedableRng;
    let mut rng = ModelRng::seed_from_u64(spec.seed);
    gaussian_matrix(&mut rng, n, spec.dim)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_vec(rows, cols, data).expect("length matches by construction")
}
