use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Slope of the negative half of leaky-relu.
pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    LeakyRelu(f64),
    Relu,
    Softmax,
    Identity,
}

impl Activation {
    pub fn leaky() -> Self {
        Activation::LeakyRelu(LEAKY_SLOPE)
    }

    pub fn tag(self) -> u8 {
        match self {
            Activation::LeakyRelu(_) => 0,
            Activation::Relu => 1,
            Activation::Softmax => 2,
            Activation::Identity => 3,
        }
    }

    pub fn from_tag(tag: u8, slope: f64) -> Option<Self> {
        match tag {
            0 => Some(Activation::LeakyRelu(slope)),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Softmax),
            3 => Some(Activation::Identity),
            _ => None,
        }
    }

    pub fn slope(self) -> f64 {
        match self {
            Activation::LeakyRelu(s) => s,
            _ => 0.0,
        }
    }

    pub fn apply(self, pre: &Matrix) -> Result<Matrix> {
        Ok(match self {
            Activation::LeakyRelu(s) => pre.map(|v| if v > 0.0 { v } else { s * v }),
            Activation::Relu => pre.map(|v| if v > 0.0 { v } else { 0.0 }),
            Activation::Identity => pre.clone(),
            Activation::Softmax => softmax(pre)?,
        })
    }

    /// Maps the gradient w.r.t. the activation output back to the pre-activation.
    pub(crate) fn backward(self, pre: &Matrix, out: &Matrix, grad_out: &Matrix) -> Matrix {
        match self {
            Activation::LeakyRelu(s) => {
                let mut g = grad_out.clone();
                for (gv, &p) in g.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                    if p <= 0.0 {
                        *gv *= s;
                    }
                }
                g
            }
            Activation::Relu => {
                let mut g = grad_out.clone();
                for (gv, &p) in g.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                    if p <= 0.0 {
                        *gv = 0.0;
                    }
                }
                g
            }
            Activation::Identity => grad_out.clone(),
            Activation::Softmax => {
                // dz_j = y_j (g_j - sum_k g_k y_k)
                let mut g = Matrix::zeros(out.rows(), out.cols());
                for r in 0..out.rows() {
                    let y = out.row(r);
                    let go = grad_out.row(r);
                    let dot: f64 = y.iter().zip(go).map(|(a, b)| a * b).sum();
                    for ((gz, &yj), &gj) in g.row_mut(r).iter_mut().zip(y).zip(go) {
                        *gz = yj * (gj - dot);
                    }
                }
                g
            }
        }
    }
}

/// Row-wise softmax, stabilized by subtracting the row maximum.
pub fn softmax(logits: &Matrix) -> Result<Matrix> {
    if !logits.is_finite() {
        return Err(Error::NonFinite("softmax logits"));
    }
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = libm::exp(*v - max);
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(out)
}
