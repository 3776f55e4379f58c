//! A fixed stack of dense and batch-norm layers with an explicit forward tape.

use alloc::vec;
use alloc::vec::Vec;

use super::batchnorm::{BatchNorm, BatchNormCache};
use super::dense::{DenseCache, DenseLayer};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(DenseLayer),
    BatchNorm(BatchNorm),
}

impl Layer {
    pub fn output_width(&self) -> usize {
        match self {
            Layer::Dense(d) => d.outputs(),
            Layer::BatchNorm(b) => b.width(),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::Dense(d) => d.weights.as_slice().len() + d.bias.len(),
            Layer::BatchNorm(b) => 2 * b.width(),
        }
    }

    fn param_sizes(&self, out: &mut Vec<usize>) {
        match self {
            Layer::Dense(d) => {
                out.push(d.weights.as_slice().len());
                out.push(d.bias.len());
            }
            Layer::BatchNorm(b) => {
                out.push(b.gamma.len());
                out.push(b.beta.len());
            }
        }
    }
}

#[derive(Debug, Clone)]
enum LayerCache {
    Dense(DenseCache),
    BatchNorm(BatchNormCache),
}

/// Activations recorded by a forward pass, consumed by [`Sequential::backward`].
#[derive(Debug, Clone, Default)]
pub struct Tape {
    caches: Vec<LayerCache>,
    outputs: Vec<Matrix>,
}

impl Tape {
    /// Output of layer `i` (after its activation).
    pub fn layer_output(&self, i: usize) -> Option<&Matrix> {
        self.outputs.get(i)
    }

    pub fn output(&self) -> Option<&Matrix> {
        self.outputs.last()
    }

    pub fn is_empty(&self) -> bool {
        self.caches.is_empty()
    }
}

/// One gradient buffer per learnable tensor, in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros(sizes: &[usize]) -> Self {
        Self {
            tensors: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.tensors.iter().map(Vec::len).collect()
    }

    pub fn scale(&mut self, k: f64) {
        for t in &mut self.tensors {
            t.iter_mut().for_each(|v| *v *= k);
        }
    }

    pub fn add_scaled(&mut self, other: &Gradients, k: f64) -> Result<()> {
        if self.sizes() != other.sizes() {
            return Err(Error::Shape {
                op: "gradients_add",
                left: (self.tensors.len(), 0),
                right: (other.tensors.len(), 0),
            });
        }
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += k * y;
            }
        }
        Ok(())
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.tensors.iter().flatten().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sequential {
    pub layers: Vec<Layer>,
}

impl Sequential {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    pub fn input_width(&self) -> Option<usize> {
        self.layers.iter().find_map(|l| match l {
            Layer::Dense(d) => Some(d.inputs()),
            Layer::BatchNorm(_) => None,
        })
    }

    pub fn output_width(&self) -> Option<usize> {
        self.layers.last().map(Layer::output_width)
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for l in &self.layers {
            l.param_sizes(&mut sizes);
        }
        sizes
    }

    pub fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Dense(d) => {
                    out.push(d.weights.as_slice());
                    out.push(&d.bias);
                }
                Layer::BatchNorm(b) => {
                    out.push(&b.gamma);
                    out.push(&b.beta);
                }
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            match l {
                Layer::Dense(d) => {
                    out.push(d.weights.as_mut_slice());
                    out.push(&mut d.bias);
                }
                Layer::BatchNorm(b) => {
                    out.push(&mut b.gamma);
                    out.push(&mut b.beta);
                }
            }
        }
        out
    }

    /// Read-only forward pass; batch-norm layers use running statistics.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut h = x.clone();
        for l in &self.layers {
            h = match l {
                Layer::Dense(d) => d.forward(&h)?,
                Layer::BatchNorm(b) => b.forward_inference(&h)?,
            };
        }
        Ok(h)
    }

    /// Taped forward pass. Batch-norm layers use batch statistics and update
    /// their running averages.
    pub fn forward_tape(&mut self, x: &Matrix) -> Result<Tape> {
        let mut tape = Tape::default();
        let mut h = x.clone();
        for l in &mut self.layers {
            let (out, cache) = match l {
                Layer::Dense(d) => {
                    let (o, c) = d.forward_cached(&h)?;
                    (o, LayerCache::Dense(c))
                }
                Layer::BatchNorm(b) => {
                    let (o, c) = b.forward_train(&h)?;
                    (o, LayerCache::BatchNorm(c))
                }
            };
            tape.caches.push(cache);
            tape.outputs.push(out.clone());
            h = out;
        }
        Ok(tape)
    }

    /// Read-only taped forward (batch statistics, running averages untouched).
    pub fn forward_tape_frozen(&self, x: &Matrix) -> Result<Tape> {
        let mut tape = Tape::default();
        let mut h = x.clone();
        for l in &self.layers {
            let (out, cache) = match l {
                Layer::Dense(d) => {
                    let (o, c) = d.forward_cached(&h)?;
                    (o, LayerCache::Dense(c))
                }
                Layer::BatchNorm(b) => {
                    let (o, c, _, _) = b.forward_batch(&h)?;
                    (o, LayerCache::BatchNorm(c))
                }
            };
            tape.caches.push(cache);
            tape.outputs.push(out.clone());
            h = out;
        }
        Ok(tape)
    }

    /// Backpropagates `upstream` (gradient w.r.t. the final output), accumulating
    /// into `grads` and returning the gradient w.r.t. the network input.
    pub fn backward(&self, tape: &Tape, upstream: &Matrix, grads: &mut Gradients) -> Result<Matrix> {
        self.backward_range(tape, 0, self.layers.len(), upstream, grads)
    }

    /// Backpropagates a gradient w.r.t. the output of layer `end - 1` down
    /// through layers `start..end`, returning the gradient w.r.t. the input of
    /// layer `start`.
    pub fn backward_range(
        &self,
        tape: &Tape,
        start: usize,
        end: usize,
        upstream: &Matrix,
        grads: &mut Gradients,
    ) -> Result<Matrix> {
        if tape.caches.len() != self.layers.len() {
            return Err(Error::MissingForward("sequential network"));
        }
        if grads.sizes() != self.param_sizes() {
            return Err(Error::Shape {
                op: "sequential_backward",
                left: (grads.tensors.len(), 0),
                right: (2 * self.layers.len(), 0),
            });
        }
        let mut g = upstream.clone();
        for i in (start..end).rev() {
            let (a, b) = grads.tensors[2 * i..2 * i + 2].split_at_mut(1);
            g = match (&self.layers[i], &tape.caches[i]) {
                (Layer::Dense(d), LayerCache::Dense(c)) => d.backward(c, &g, &mut a[0], &mut b[0])?,
                (Layer::BatchNorm(bn), LayerCache::BatchNorm(c)) => {
                    bn.backward(c, &g, &mut a[0], &mut b[0])?
                }
                _ => return Err(Error::MissingForward("sequential layer")),
            };
        }
        Ok(g)
    }
}
