//! Elementwise activations and their derivatives.

use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;

/// ELU scale for the negative branch.
pub const ELU_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Elu,
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Elu => {
                if v > 0.0 {
                    v
                } else {
                    ELU_ALPHA * v.exp_m1()
                }
            }
            Activation::Relu => v.max(0.0),
            Activation::Sigmoid => sigmoid(v),
            Activation::Tanh => v.tanh(),
        }
    }

    /// Derivative at `v` (the pre-activation). ReLU uses 0 at the kink.
    pub fn derivative(self, v: f64) -> f64 {
        match self {
            Activation::Elu => {
                if v > 0.0 {
                    1.0
                } else {
                    ELU_ALPHA * v.exp()
                }
            }
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(v);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = v.tanh();
                1.0 - t * t
            }
        }
    }

    pub fn forward(self, x: &Tensor) -> Tensor {
        x.map(|v| self.apply(v))
    }

    pub fn backward(self, x: &Tensor) -> Tensor {
        x.map(|v| self.derivative(v))
    }
}

/// Logistic function, evaluated on the branch that cannot overflow.
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}
