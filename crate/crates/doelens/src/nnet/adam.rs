//! Adam with bias correction and a cosine-annealing learning-rate schedule.

use super::model::{GradSet, ModelParams};
use super::Scalar;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

pub struct Adam<F> {
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
    t: usize,
}

impl<F: Scalar> Adam<F> {
    pub fn new(params: &ModelParams<F>) -> Self {
        let shapes: Vec<usize> = params.param_slices().iter().map(|(_, s)| s.len()).collect();
        Self {
            m: shapes.iter().map(|&n| vec![F::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![F::zero(); n]).collect(),
            t: 0,
        }
    }

    /// One update with learning rate `lr`.
    pub fn step(&mut self, params: &mut ModelParams<F>, grads: &GradSet<F>, lr: f64) {
        self.t += 1;
        let b1 = F::from_f64(BETA1).unwrap();
        let b2 = F::from_f64(BETA2).unwrap();
        let eps = F::from_f64(ADAM_EPS).unwrap();
        let one = F::one();
        let corr1 = one - F::from_f64(BETA1.powi(self.t as i32)).unwrap();
        let corr2 = one - F::from_f64(BETA2.powi(self.t as i32)).unwrap();
        let lr = F::from_f64(lr).unwrap();

        let grad_slices = grads.slices();
        let mut param_slices = params.param_slices_mut();
        debug_assert_eq!(grad_slices.len(), param_slices.len());
        for (idx, (_, p)) in param_slices.iter_mut().enumerate() {
            let g = grad_slices[idx];
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let m_hat = m[i] / corr1;
                let v_hat = v[i] / corr2;
                p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Cosine annealing from `base` toward zero over `total` steps.
pub fn cosine_lr(base: f64, step: usize, total: usize) -> f64 {
    if total == 0 {
        return base;
    }
    let t = (step.min(total) as f64) / total as f64;
    base * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
}
