use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use super::activation::Activation;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Fully connected layer computing `act(x W + b)` with `W` stored `in x out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    input: Matrix,
    pre: Matrix,
    output: Matrix,
}

impl DenseCache {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(inputs, outputs),
            bias: vec![0.0; outputs],
            activation,
        }
    }

    /// Uniform init in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn init<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let bound = libm::sqrt(6.0 / (inputs + outputs) as f64);
        let mut layer = Self::zeros(inputs, outputs, activation);
        for w in layer.weights.as_mut_slice() {
            *w = rng.random_range(-bound..bound);
        }
        layer
    }

    pub fn inputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.cols()
    }

    fn affine(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.inputs() {
            return Err(Error::Shape {
                op: "dense_forward",
                left: x.shape(),
                right: self.weights.shape(),
            });
        }
        let mut pre = x.matmul(&self.weights)?;
        for r in 0..pre.rows() {
            for (v, b) in pre.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(pre)
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let pre = self.affine(x)?;
        self.activation.apply(&pre)
    }

    pub fn forward_cached(&self, x: &Matrix) -> Result<(Matrix, DenseCache)> {
        let pre = self.affine(x)?;
        let output = self.activation.apply(&pre)?;
        Ok((
            output.clone(),
            DenseCache {
                input: x.clone(),
                pre,
                output,
            },
        ))
    }

    /// Accumulates parameter gradients into `weight_grad`/`bias_grad` and returns
    /// the gradient with respect to the layer input.
    pub fn backward(
        &self,
        cache: &DenseCache,
        grad_out: &Matrix,
        weight_grad: &mut [f64],
        bias_grad: &mut [f64],
    ) -> Result<Matrix> {
        if grad_out.shape() != cache.output.shape() {
            return Err(Error::Shape {
                op: "dense_backward",
                left: grad_out.shape(),
                right: cache.output.shape(),
            });
        }
        let dpre = self.activation.backward(&cache.pre, &cache.output, grad_out);
        let dw = cache.input.t_matmul(&dpre)?;
        for (g, d) in weight_grad.iter_mut().zip(dw.as_slice()) {
            *g += d;
        }
        for row in dpre.row_iter() {
            for (g, d) in bias_grad.iter_mut().zip(row) {
                *g += d;
            }
        }
        dpre.matmul_t(&self.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_zero_bias_identity() {
        let mut layer = DenseLayer::zeros(4, 3, Activation::Identity);
        layer.weights.as_mut_slice().iter_mut().enumerate().for_each(|(i, w)| *w = i as f64);
        let out = layer.forward(&Matrix::zeros(1, 4)).unwrap();
        assert_eq!(out.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn identity_weights_plus_bias() {
        let layer = DenseLayer {
            weights: Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            bias: vec![1.0, 1.0],
            activation: Activation::Identity,
        };
        let x = Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().as_slice(), &[2.0, 3.0]);
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let layer = DenseLayer::zeros(3, 2, Activation::Identity);
        let err = layer.forward(&Matrix::zeros(1, 4)).unwrap_err();
        assert_eq!(
            err,
            Error::Shape {
                op: "dense_forward",
                left: (1, 4),
                right: (3, 2)
            }
        );
    }

    #[test]
    fn sum_loss_weight_gradient_is_input_outer_ones() {
        // loss = sum(x W + b) for a 2x2 identity layer: dL/dW[i][j] = sum_rows x[r][i]
        let layer = DenseLayer {
            weights: Matrix::from_vec(2, 2, vec![0.3, -0.1, 0.7, 0.2]).unwrap(),
            bias: vec![0.0, 0.0],
            activation: Activation::Identity,
        };
        let x = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 5.0]).unwrap();
        let (_, cache) = layer.forward_cached(&x).unwrap();
        let mut wg = vec![0.0; 4];
        let mut bg = vec![0.0; 2];
        let gin = layer
            .backward(&cache, &Matrix::filled(2, 2, 1.0), &mut wg, &mut bg)
            .unwrap();
        assert_eq!(wg, vec![4.0, 4.0, 7.0, 7.0]);
        assert_eq!(bg, vec![2.0, 2.0]);
        // dL/dx[r][i] = sum_j W[i][j]
        assert!((gin[(0, 0)] - 0.2).abs() < 1e-15);
        assert!((gin[(1, 1)] - 0.9).abs() < 1e-15);
    }
}
