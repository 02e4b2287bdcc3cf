//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::param::ParamSet;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self { lr, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &ParamSet) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.tensor.shape())).collect();
        Self { config, t: 0, m: zeros.clone(), v: zeros }
    }

    pub fn first_moments(&self) -> &[Tensor] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Tensor] {
        &self.v
    }

    /// One update from the gradient buffers in `params`. Gradients are
    /// validated before anything is mutated.
    pub fn step(&mut self, params: &mut ParamSet) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::InvalidArgument(format!(
                "optimizer tracks {} parameters, got {}",
                self.m.len(),
                params.len()
            )));
        }
        for (p, m) in params.iter().zip(&self.m) {
            if p.grad.shape() != m.shape() {
                return Err(Error::ShapeMismatch {
                    op: "adam_step",
                    left: m.shape().to_vec(),
                    right: p.grad.shape().to_vec(),
                });
            }
            if !p.grad.is_finite() {
                return Err(Error::NonFiniteGradient(p.name.clone()));
            }
        }

        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for ((p, m), v) in params.iter_mut().zip(&mut self.m).zip(&mut self.v) {
            let theta = p.tensor.values_mut();
            let g = p.grad.values();
            for (((th, mi), vi), &gi) in theta.iter_mut().zip(m.values_mut()).zip(v.values_mut()).zip(g) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *th -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_set(theta: f64, grad: f64) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.push("theta", Tensor::scalar(theta).unwrap());
        ps.get_mut(0).grad = Tensor::scalar(grad).unwrap();
        ps
    }

    #[test]
    fn zero_gradient_is_noop_but_counts() {
        let mut ps = scalar_set(2.5, 0.0);
        let mut opt = AdamState::new(AdamConfig::default(), &ps);
        opt.step(&mut ps).unwrap();
        assert_eq!(ps.tensor(0).item(), 2.5);
        assert_eq!(opt.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = 1, v_hat = 1 after bias correction.
        let mut ps = scalar_set(1.0, 1.0);
        let mut opt = AdamState::new(AdamConfig::default(), &ps);
        opt.step(&mut ps).unwrap();
        assert_abs_diff_eq!(ps.tensor(0).item(), 1.0 - 1e-3 / (1.0 + 1e-8), epsilon = 1e-15);
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut ps = scalar_set(-0.75, 3.0);
        let mut opt = AdamState::new(AdamConfig::with_lr(0.0), &ps);
        for _ in 0..10 {
            opt.step(&mut ps).unwrap();
        }
        assert_eq!(ps.tensor(0).item(), -0.75);
        assert!(opt.second_moments()[0].values()[0] >= 0.0);
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut ps = scalar_set(1.0, 0.0);
        ps.get_mut(0).grad.values_mut()[0] = f64::NAN;
        let mut opt = AdamState::new(AdamConfig::default(), &ps);
        let err = opt.step(&mut ps).unwrap_err();
        assert!(matches!(&err, Error::NonFiniteGradient(n) if n == "theta"));
        assert_eq!(opt.t, 0);
    }
}
