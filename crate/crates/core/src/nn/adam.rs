use alloc::vec::Vec;

use super::network::Gradients;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
}

impl AdamState {
    /// Zeroed state with β1 = 0.5, β2 = 0.9.
    pub fn new(sizes: &[usize]) -> Self {
        Self::with_betas(sizes, 0.5, 0.9)
    }

    pub fn with_betas(sizes: &[usize], beta1: f64, beta2: f64) -> Self {
        Self {
            beta1,
            beta2,
            epsilon: 1e-8,
            step: 0,
            first_moment: Gradients::zeros(sizes).tensors,
            second_moment: Gradients::zeros(sizes).tensors,
        }
    }

    fn sizes(&self) -> Vec<usize> {
        self.first_moment.iter().map(Vec::len).collect()
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(
    params: &mut [&mut [f64]],
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    let param_sizes: Vec<usize> = params.iter().map(|p| p.len()).collect();
    if param_sizes != grads.sizes() || param_sizes != state.sizes() {
        return Err(Error::Shape {
            op: "adam_step",
            left: (param_sizes.len(), param_sizes.iter().sum()),
            right: (grads.tensors.len(), grads.sizes().iter().sum()),
        });
    }
    if !(lr > 0.0) {
        return Err(Error::Config(alloc::format!("learning rate must be positive, got {lr}")));
    }
    state.step += 1;
    let t = state.step as f64;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - libm::pow(b1, t);
    let c2 = 1.0 - libm::pow(b2, t);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(&grads.tensors)
        .zip(&mut state.first_moment)
        .zip(&mut state.second_moment)
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.5, -2.0];
        let g = Gradients { tensors: vec![vec![0.0, 0.0]] };
        let mut st = AdamState::new(&[2]);
        adam_step(&mut [&mut p], &g, &mut st, 0.01).unwrap();
        assert_eq!(p, vec![1.5, -2.0]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn single_unit_gradient_step() {
        // m̂ = 1, v̂ = 1 after bias correction, so the step is lr / (1 + eps).
        let mut p = vec![0.0];
        let g = Gradients { tensors: vec![vec![1.0]] };
        let mut st = AdamState::new(&[1]);
        adam_step(&mut [&mut p], &g, &mut st, 0.01).unwrap();
        assert!((p[0] + 0.01).abs() < 1e-9);
    }

    #[test]
    fn constant_gradient_step_tends_to_lr() {
        let mut p = vec![0.0];
        let g = Gradients { tensors: vec![vec![-3.0]] };
        let mut st = AdamState::new(&[1]);
        let mut prev = 0.0;
        let mut last_step = 0.0;
        for _ in 0..200 {
            adam_step(&mut [&mut p], &g, &mut st, 0.01).unwrap();
            last_step = p[0] - prev;
            prev = p[0];
        }
        assert!((last_step - 0.01).abs() < 1e-8);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = vec![0.0; 3];
        let g = Gradients { tensors: vec![vec![1.0; 2]] };
        let mut st = AdamState::new(&[2]);
        assert!(adam_step(&mut [&mut p], &g, &mut st, 0.01).is_err());
    }
}
