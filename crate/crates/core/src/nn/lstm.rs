//! Standard LSTM cell:
//!
//! ```text
//! i  = σ(x·W_i + h·U_i + b_i)
//! f  = σ(x·W_f + h·U_f + b_f)
//! o  = σ(x·W_o + h·U_o + b_o)
//! c~ = tanh(x·W_c + h·U_c + b_c)
//! c' = f ⊙ c + i ⊙ c~
//! h' = o ⊙ tanh(c')
//! ```
//!
//! Input weights are `D×H`, recurrent weights `H×H`, biases `H`.

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::nn::activation::Activation;
use crate::nn::param::{Init, ParamSet};
use crate::rng::Rng;
use crate::tensor::Tensor;

const GATES: [(&str, Activation); 4] =
    [("i", Activation::Sigmoid), ("f", Activation::Sigmoid), ("o", Activation::Sigmoid), ("c", Activation::Tanh)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Gate {
    input: usize,
    hidden: usize,
    bias: usize,
}

/// Indices of the twelve LSTM tensors inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmWeights {
    pub input_size: usize,
    pub hidden_size: usize,
    gates: [Gate; 4],
}

impl LstmWeights {
    pub fn register(
        params: &mut ParamSet,
        name: &str,
        input_size: usize,
        hidden_size: usize,
        init: Init,
        rng: &mut Rng,
    ) -> Self {
        let gates = GATES.map(|(g, _)| Gate {
            input: params.push(format!("{name}.w_{g}"), init.sample(&[input_size, hidden_size], rng)),
            hidden: params.push(format!("{name}.u_{g}"), init.sample(&[hidden_size, hidden_size], rng)),
            bias: params.push(format!("{name}.b_{g}"), init.sample(&[hidden_size], rng)),
        });
        Self { input_size, hidden_size, gates }
    }

    /// One cell step on the graph. `bound` comes from [`ParamSet::bind`].
    pub fn step(&self, g: &mut Graph, bound: &[Var], x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        let h_shape = [self.hidden_size];
        if g.value(x).shape() != [self.input_size] {
            return Err(Error::ShapeMismatch {
                op: "lstm_cell input",
                left: vec![self.input_size],
                right: g.value(x).shape().to_vec(),
            });
        }
        for v in [h, c] {
            if g.value(v).shape() != h_shape {
                return Err(Error::ShapeMismatch {
                    op: "lstm_cell state",
                    left: h_shape.to_vec(),
                    right: g.value(v).shape().to_vec(),
                });
            }
        }
        let mut acts = [x; 4];
        for (slot, (gate, (_, act))) in acts.iter_mut().zip(self.gates.iter().zip(GATES)) {
            let xi = g.vecmat(x, bound[gate.input])?;
            let hi = g.vecmat(h, bound[gate.hidden])?;
            let pre = g.add_n(&[xi, hi, bound[gate.bias]])?;
            *slot = g.activation(pre, act)?;
        }
        let [i, f, o, cand] = acts;
        let keep = g.mul(f, c)?;
        let write = g.mul(i, cand)?;
        let c_next = g.add(keep, write)?;
        let squashed = g.activation(c_next, Activation::Tanh)?;
        let h_next = g.mul(o, squashed)?;
        Ok((h_next, c_next))
    }
}

/// Evaluates one cell step outside of any training graph.
pub fn lstm_cell(
    x: &Tensor,
    h: &Tensor,
    c: &Tensor,
    params: &ParamSet,
    weights: &LstmWeights,
) -> Result<(Tensor, Tensor)> {
    let mut g = Graph::new();
    let bound = params.bind(&mut g, false);
    let (x, h, c) = (g.input(x.clone()), g.input(h.clone()), g.input(c.clone()));
    let (h2, c2) = weights.step(&mut g, &bound, x, h, c)?;
    Ok((g.value(h2).clone(), g.value(c2).clone()))
}
