use crate::autodiff::{Graph, Var};
use crate::error::Result;
use crate::gan::config::GanConfig;
use crate::nn::checkpoint::{self, Checkpoint};
use crate::nn::{Activation, Init, Linear, ParamSet};
use crate::rng;
use crate::tensor::Tensor;

/// Noise → ELU → sigmoid → `T·d` values in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub params: ParamSet,
    layers: [Linear; 3],
    paper_literal: bool,
}

impl Generator {
    pub const PREFIX: &'static str = "generator.";

    pub fn new(cfg: &GanConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng::substream(cfg.seed, "generator");
        let mut params = ParamSet::new();
        let (z, h, out) = (cfg.noise_dim, cfg.gen_hidden, cfg.output_dim());
        let layers = [
            Linear::register(&mut params, "l1", z, h, Init::FanIn(z), &mut rng),
            Linear::register(&mut params, "l2", h, h, Init::FanIn(h), &mut rng),
            Linear::register(&mut params, "l3", h, out, Init::FanIn(h), &mut rng),
        ];
        Ok(Self { params, layers, paper_literal: cfg.paper_literal_generator })
    }

    pub fn noise_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[2].out_dim
    }

    pub fn forward_graph(&self, g: &mut Graph, bound: &[Var], z: Var) -> Result<Var> {
        let a = self.layers[0].forward(g, bound, z)?;
        let a = g.activation(a, Activation::Elu)?;
        let a = self.layers[1].forward(g, bound, a)?;
        let a = g.activation(a, Activation::Sigmoid)?;
        let a = self.layers[2].forward(g, bound, a)?;
        if self.paper_literal {
            g.clamp(a, 0.0, 1.0)
        } else {
            g.activation(a, Activation::Sigmoid)
        }
    }

    pub fn forward(&self, z: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let bound = self.params.bind(&mut g, false);
        let z = g.input(z.clone());
        let out = self.forward_graph(&mut g, &bound, z)?;
        Ok(g.value(out).clone())
    }
}

/// `T·d` values → ELU → ELU → probability of being real.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub params: ParamSet,
    layers: [Linear; 3],
}

impl Discriminator {
    pub const PREFIX: &'static str = "discriminator.";

    pub fn new(cfg: &GanConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = rng::substream(cfg.seed, "discriminator");
        let mut params = ParamSet::new();
        let (x, h) = (cfg.output_dim(), cfg.disc_hidden);
        let layers = [
            Linear::register(&mut params, "l1", x, h, Init::FanIn(x), &mut rng),
            Linear::register(&mut params, "l2", h, h, Init::FanIn(h), &mut rng),
            Linear::register(&mut params, "l3", h, 1, Init::FanIn(h), &mut rng),
        ];
        Ok(Self { params, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn forward_graph(&self, g: &mut Graph, bound: &[Var], x: Var) -> Result<Var> {
        let a = self.layers[0].forward(g, bound, x)?;
        let a = g.activation(a, Activation::Elu)?;
        let a = self.layers[1].forward(g, bound, a)?;
        let a = g.activation(a, Activation::Elu)?;
        let a = self.layers[2].forward(g, bound, a)?;
        g.activation(a, Activation::Sigmoid)
    }

    pub fn forward(&self, x: &Tensor) -> Result<f64> {
        let mut g = Graph::new();
        let bound = self.params.bind(&mut g, false);
        let x = g.input(x.clone());
        let out = self.forward_graph(&mut g, &bound, x)?;
        Ok(g.value(out).item())
    }
}

/// Both networks under their `generator.` / `discriminator.` prefixes.
pub(crate) fn export_pair(gen: &Generator, disc: &Discriminator) -> Checkpoint {
    let mut ckpt = Checkpoint::new();
    checkpoint::export(&mut ckpt, Generator::PREFIX, &gen.params);
    checkpoint::export(&mut ckpt, Discriminator::PREFIX, &disc.params);
    ckpt
}

impl Generator {
    pub fn from_checkpoint(ckpt: &Checkpoint, cfg: &GanConfig) -> Result<Self> {
        let mut gen = Self::new(cfg)?;
        checkpoint::import(ckpt, Self::PREFIX, &mut gen.params)?;
        Ok(gen)
    }
}

impl Discriminator {
    pub fn from_checkpoint(ckpt: &Checkpoint, cfg: &GanConfig) -> Result<Self> {
        let mut disc = Self::new(cfg)?;
        checkpoint::import(ckpt, Self::PREFIX, &mut disc.params)?;
        Ok(disc)
    }
}
