use crate::autodiff::{Graph, Var};
use crate::error::Result;
use crate::nn::param::{Init, ParamSet};
use crate::rng::Rng;

/// Affine layer `W x + b` whose weights live in a shared [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub weight: usize,
    pub bias: usize,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn register(
        params: &mut ParamSet,
        name: &str,
        in_dim: usize,
        out_dim: usize,
        init: Init,
        rng: &mut Rng,
    ) -> Self {
        let weight = params.push(format!("{name}.weight"), init.sample(&[out_dim, in_dim], rng));
        let bias = params.push(format!("{name}.bias"), init.sample(&[out_dim], rng));
        Self { weight, bias, in_dim, out_dim }
    }

    pub fn forward(&self, g: &mut Graph, bound: &[Var], x: Var) -> Result<Var> {
        g.linear(bound[self.weight], bound[self.bias], x)
    }
}
