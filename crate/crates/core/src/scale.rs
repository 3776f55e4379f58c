use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Per-column min-max scaling to `[0, 1]` with train-fitted bounds. Constant
/// columns map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMax {
    pub fn fit(x: &Matrix) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::Empty("scaler fit"));
        }
        let mut min = x.row(0).to_vec();
        let mut max = min.clone();
        for row in x.row_iter() {
            for (j, v) in row.iter().enumerate() {
                min[j] = min[j].min(*v);
                max[j] = max[j].max(*v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn scale_value(&self, j: usize, v: f64) -> f64 {
        let range = self.max[j] - self.min[j];
        if range > 0.0 {
            (v - self.min[j]) / range
        } else {
            0.0
        }
    }

    /// Values outside the fitted range extrapolate past `[0, 1]`.
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.min.len() {
            return Err(Error::Shape {
                op: "min-max transform",
                left: x.shape(),
                right: (0, self.min.len()),
            });
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (j, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = self.scale_value(j, *v);
            }
        }
        Ok(out)
    }
}
