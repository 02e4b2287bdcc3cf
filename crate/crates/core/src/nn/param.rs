use rand::Rng as _;

use crate::autodiff::{Gradients, Graph, Var};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// A named trainable tensor with its gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub tensor: Tensor,
    pub grad: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, tensor: Tensor) -> Self {
        let grad = Tensor::zeros(tensor.shape());
        Self { name: name.into(), tensor, grad }
    }
}

/// Weight initialisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    Zeros,
    /// Uniform in `(-a, a)`.
    Uniform(f64),
    /// Uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    FanIn(usize),
}

impl Init {
    pub fn sample(self, shape: &[usize], rng: &mut Rng) -> Tensor {
        let bound = match self {
            Init::Zeros => return Tensor::zeros(shape),
            Init::Uniform(a) => a,
            Init::FanIn(n) => 1.0 / (n.max(1) as f64).sqrt(),
        };
        if bound == 0.0 {
            return Tensor::zeros(shape);
        }
        let n = shape.iter().product();
        let values = (0..n).map(|_| rng.gen_range(-bound..bound)).collect();
        Tensor::from_parts(shape.to_vec(), values)
    }
}

/// An ordered collection of parameters. Layers refer to entries by index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    params: Vec<Parameter>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) -> usize {
        self.params.push(Parameter::new(name, tensor));
        self.params.len() - 1
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, Parameter> {
        self.params.iter_mut()
    }

    pub fn get(&self, idx: usize) -> &Parameter {
        &self.params[idx]
    }

    pub fn get_mut(&mut self, idx: usize) -> &mut Parameter {
        &mut self.params[idx]
    }

    pub fn by_name(&self, name: &str) -> Option<&Parameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn tensor(&self, idx: usize) -> &Tensor {
        &self.params[idx].tensor
    }

    pub fn tensors(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| p.tensor.clone()).collect()
    }

    /// Replaces every tensor; shapes must match.
    pub fn set_tensors(&mut self, tensors: Vec<Tensor>) -> Result<()> {
        if tensors.len() != self.params.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} tensors, got {}",
                self.params.len(),
                tensors.len()
            )));
        }
        for (p, t) in self.params.iter_mut().zip(tensors) {
            if p.tensor.shape() != t.shape() {
                return Err(Error::ShapeMismatch {
                    op: "set_tensors",
                    left: p.tensor.shape().to_vec(),
                    right: t.shape().to_vec(),
                });
            }
            p.tensor = t;
        }
        Ok(())
    }

    /// Places every parameter on the graph, as tracked leaves when
    /// `trainable` and as constants otherwise.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> Vec<Var> {
        self.params
            .iter()
            .map(|p| if trainable { g.leaf(p.tensor.clone()) } else { g.input(p.tensor.clone()) })
            .collect()
    }

    pub fn zero_grad(&mut self) {
        for p in &mut self.params {
            p.grad = Tensor::zeros(p.tensor.shape());
        }
    }

    /// Adds the adjoints of `bound` (as returned by [`ParamSet::bind`]) into
    /// the gradient buffers.
    pub fn accumulate(&mut self, bound: &[Var], grads: &Gradients) {
        for (p, &v) in self.params.iter_mut().zip(bound) {
            if let Some(g) = grads.get(v) {
                p.grad.add_assign(g);
            }
        }
    }

    pub fn grads(&self) -> Vec<Tensor> {
        self.params.iter().map(|p| p.grad.clone()).collect()
    }

    pub fn checksum(&self) -> u64 {
        self.params.iter().fold(0u64, |acc, p| acc.rotate_left(7) ^ p.tensor.checksum())
    }
}
