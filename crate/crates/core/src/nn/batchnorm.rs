use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics; running statistics are updated.
    Train,
    /// Running statistics.
    Inference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct BatchNormCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
}

impl BatchNorm {
    pub fn new(width: usize) -> Self {
        Self {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
            momentum: 0.1,
            epsilon: 1e-5,
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.width() {
            return Err(Error::Shape {
                op: "batch_norm",
                left: x.shape(),
                right: (1, self.width()),
            });
        }
        Ok(())
    }

    pub fn forward_inference(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                let inv = 1.0 / libm::sqrt(self.running_var[j] + self.epsilon);
                *v = self.gamma[j] * (*v - self.running_mean[j]) * inv + self.beta[j];
            }
        }
        Ok(out)
    }

    /// Train-mode normalization without touching the running statistics.
    pub fn forward_batch(&self, x: &Matrix) -> Result<(Matrix, BatchNormCache, Vec<f64>, Vec<f64>)> {
        self.check(x)?;
        if x.rows() == 0 {
            return Err(Error::Empty("batch_norm batch"));
        }
        let n = x.rows() as f64;
        let mean = x.column_means();
        let mut var = vec![0.0; self.width()];
        let mut centered = x.clone();
        for r in 0..centered.rows() {
            for (j, v) in centered.row_mut(r).iter_mut().enumerate() {
                *v -= mean[j];
                var[j] += *v * *v;
            }
        }
        var.iter_mut().for_each(|v| *v /= n);
        let inv_std: Vec<f64> = var
            .iter()
            .map(|v| 1.0 / libm::sqrt(v + self.epsilon))
            .collect();
        let mut normalized = centered.clone();
        let mut out = centered;
        for r in 0..out.rows() {
            let nr = normalized.row_mut(r);
            for (j, v) in nr.iter_mut().enumerate() {
                *v *= inv_std[j];
            }
            let nr = normalized.row(r).to_vec();
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = self.gamma[j] * nr[j] + self.beta[j];
            }
        }
        Ok((
            out,
            BatchNormCache {
                normalized,
                inv_std,
            },
            mean,
            var,
        ))
    }

    pub fn forward_train(&mut self, x: &Matrix) -> Result<(Matrix, BatchNormCache)> {
        let (out, cache, mean, var) = self.forward_batch(x)?;
        let m = self.momentum;
        for j in 0..self.width() {
            self.running_mean[j] = (1.0 - m) * self.running_mean[j] + m * mean[j];
            self.running_var[j] = (1.0 - m) * self.running_var[j] + m * var[j];
        }
        Ok((out, cache))
    }

    pub fn backward(
        &self,
        cache: &BatchNormCache,
        grad_out: &Matrix,
        gamma_grad: &mut [f64],
        beta_grad: &mut [f64],
    ) -> Result<Matrix> {
        if grad_out.shape() != cache.normalized.shape() {
            return Err(Error::Shape {
                op: "batch_norm_backward",
                left: grad_out.shape(),
                right: cache.normalized.shape(),
            });
        }
        let n = grad_out.rows() as f64;
        let w = self.width();
        let mut sum_dxhat = vec![0.0; w];
        let mut sum_dxhat_xhat = vec![0.0; w];
        for r in 0..grad_out.rows() {
            let g = grad_out.row(r);
            let xh = cache.normalized.row(r);
            for j in 0..w {
                gamma_grad[j] += g[j] * xh[j];
                beta_grad[j] += g[j];
                let dxhat = g[j] * self.gamma[j];
                sum_dxhat[j] += dxhat;
                sum_dxhat_xhat[j] += dxhat * xh[j];
            }
        }
        // dx = inv_std / n * (n dxhat - sum(dxhat) - xhat sum(dxhat xhat))
        let mut dx = Matrix::zeros(grad_out.rows(), w);
        for r in 0..grad_out.rows() {
            let g = grad_out.row(r);
            let xh = cache.normalized.row(r);
            for (j, d) in dx.row_mut(r).iter_mut().enumerate() {
                let dxhat = g[j] * self.gamma[j];
                *d = cache.inv_std[j] / n * (n * dxhat - sum_dxhat[j] - xh[j] * sum_dxhat_xhat[j]);
            }
        }
        Ok(dx)
    }
}
