//! Weighted least-squares fit of word vectors to log co-occurrence counts,
//! optimised with AdaGrad.

use log::{debug, warn};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::glove::cooccurrence::CooccurrenceMatrix;
use crate::glove::table::EmbeddingTable;
use crate::rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GloveConfig {
    pub dim: usize,
    pub epochs: usize,
    pub lr: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for GloveConfig {
    fn default() -> Self {
        Self { dim: 50, epochs: 300, lr: 0.05, x_max: 100.0, alpha: 0.75, seed: 0 }
    }
}

/// Weighting `f(x) = (x / x_max)^alpha` below `x_max`, 1 above.
pub fn glove_weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x < x_max {
        (x / x_max).powf(alpha)
    } else {
        1.0
    }
}

/// Main vectors `w`, context vectors `w~` and both bias vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GloveParams {
    pub main: Tensor,
    pub context: Tensor,
    pub main_bias: Tensor,
    pub context_bias: Tensor,
}

impl GloveParams {
    /// Uniform in `(-0.5/d, 0.5/d)`.
    pub fn init(vocab_size: usize, dim: usize, seed: u64) -> Self {
        let mut rng = rng::substream(seed, "init");
        let bound = 0.5 / dim as f64;
        let mut sample = |shape: &[usize]| {
            let n = shape.iter().product();
            Tensor::from_parts(shape.to_vec(), (0..n).map(|_| rng.gen_range(-bound..bound)).collect())
        };
        Self {
            main: sample(&[vocab_size, dim]),
            context: sample(&[vocab_size, dim]),
            main_bias: sample(&[vocab_size]),
            context_bias: sample(&[vocab_size]),
        }
    }

    pub fn dim(&self) -> usize {
        self.main.shape()[1]
    }

    pub fn vocab_size(&self) -> usize {
        self.main.shape()[0]
    }

    pub fn to_tensors(&self) -> Vec<Tensor> {
        vec![self.main.clone(), self.context.clone(), self.main_bias.clone(), self.context_bias.clone()]
    }

    pub fn from_tensors(mut t: Vec<Tensor>) -> Result<Self> {
        if t.len() != 4 {
            return Err(Error::InvalidArgument(format!("expected 4 tensors, got {}", t.len())));
        }
        let context_bias = t.pop().expect("len 4");
        let main_bias = t.pop().expect("len 4");
        let context = t.pop().expect("len 4");
        let main = t.pop().expect("len 4");
        Ok(Self { main, context, main_bias, context_bias })
    }

    fn residual(&self, i: usize, j: usize, x: f64) -> f64 {
        let d = self.dim();
        let wi = &self.main.values()[i * d..(i + 1) * d];
        let wj = &self.context.values()[j * d..(j + 1) * d];
        let dot: f64 = wi.iter().zip(wj).map(|(a, b)| a * b).sum();
        dot + self.main_bias.values()[i] + self.context_bias.values()[j] - x.ln()
    }

    /// `Σ f(X_ij) (w_i·w~_j + b_i + b~_j - ln X_ij)^2` over stored entries.
    pub fn objective(&self, m: &CooccurrenceMatrix, x_max: f64, alpha: f64) -> f64 {
        m.entries()
            .map(|(i, j, x)| {
                let r = self.residual(i, j, x);
                glove_weight(x, x_max, alpha) * r * r
            })
            .sum()
    }

    /// Objective and its gradient, in [`GloveParams::to_tensors`] order.
    pub fn objective_and_gradient(&self, m: &CooccurrenceMatrix, x_max: f64, alpha: f64) -> (f64, Vec<Tensor>) {
        let d = self.dim();
        let mut grads: Vec<Tensor> = self.to_tensors().iter().map(|t| Tensor::zeros(t.shape())).collect();
        let mut total = 0.0;
        for (i, j, x) in m.entries() {
            let f = glove_weight(x, x_max, alpha);
            let r = self.residual(i, j, x);
            total += f * r * r;
            let coef = 2.0 * f * r;
            for k in 0..d {
                grads[0].values_mut()[i * d + k] += coef * self.context.values()[j * d + k];
                grads[1].values_mut()[j * d + k] += coef * self.main.values()[i * d + k];
            }
            grads[2].values_mut()[i] += coef;
            grads[3].values_mut()[j] += coef;
        }
        (total, grads)
    }
}

/// Result of [`train_glove`].
#[derive(Debug, Clone)]
pub struct GloveTraining {
    pub params: GloveParams,
    /// Objective over the full matrix after each epoch.
    pub objective: Vec<f64>,
}

/// Stochastic AdaGrad over the stored entries, visited in a seeded shuffled
/// order each epoch. Accumulators start at 1.
pub fn fit(m: &CooccurrenceMatrix, cfg: &GloveConfig) -> Result<GloveTraining> {
    if m.is_empty() {
        return Err(Error::NoData("co-occurrence matrix is empty".into()));
    }
    if cfg.dim == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
    }
    if !(cfg.lr >= 0.0 && cfg.x_max > 0.0 && cfg.alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("invalid GloVe hyperparameters {cfg:?}")));
    }
    let d = cfg.dim;
    let mut p = GloveParams::init(m.vocab_size, d, cfg.seed);
    let mut acc_main = vec![1.0; m.vocab_size * d];
    let mut acc_context = vec![1.0; m.vocab_size * d];
    let mut acc_main_bias = vec![1.0; m.vocab_size];
    let mut acc_context_bias = vec![1.0; m.vocab_size];

    let mut entries: Vec<(usize, usize, f64)> = m.entries().collect();
    let mut order_rng = rng::substream(cfg.seed, "glove-order");
    let mut objective = Vec::with_capacity(cfg.epochs);
    let mut grad_i = vec![0.0; d];
    let mut grad_j = vec![0.0; d];

    for epoch in 0..cfg.epochs {
        entries.shuffle(&mut order_rng);
        for &(i, j, x) in &entries {
            let r = p.residual(i, j, x);
            let coef = 2.0 * glove_weight(x, cfg.x_max, cfg.alpha) * r;
            {
                let wi = &p.main.values()[i * d..(i + 1) * d];
                let wj = &p.context.values()[j * d..(j + 1) * d];
                for k in 0..d {
                    grad_i[k] = coef * wj[k];
                    grad_j[k] = coef * wi[k];
                }
            }
            let main = p.main.values_mut();
            for k in 0..d {
                let a = &mut acc_main[i * d + k];
                *a += grad_i[k] * grad_i[k];
                main[i * d + k] -= cfg.lr * grad_i[k] / a.sqrt();
            }
            let context = p.context.values_mut();
            for k in 0..d {
                let a = &mut acc_context[j * d + k];
                *a += grad_j[k] * grad_j[k];
                context[j * d + k] -= cfg.lr * grad_j[k] / a.sqrt();
            }
            acc_main_bias[i] += coef * coef;
            p.main_bias.values_mut()[i] -= cfg.lr * coef / acc_main_bias[i].sqrt();
            acc_context_bias[j] += coef * coef;
            p.context_bias.values_mut()[j] -= cfg.lr * coef / acc_context_bias[j].sqrt();
        }
        let j = p.objective(m, cfg.x_max, cfg.alpha);
        if !j.is_finite() {
            return Err(Error::Diverged { side: "glove", step: epoch });
        }
        if let Some(&prev) = objective.last() {
            if j > prev + 1e-9 {
                warn!("GloVe objective rose from {prev} to {j} at epoch {}", epoch + 1);
            }
        }
        debug!("glove epoch {} objective {j}", epoch + 1);
        objective.push(j);
    }
    Ok(GloveTraining { params: p, objective })
}

/// Trains vectors on `m` and returns the embedding table `e = w + w~`, with
/// the OOV row set to the mean of the known words' vectors.
pub fn train_glove(
    m: &CooccurrenceMatrix,
    vocab: &Vocabulary,
    cfg: &GloveConfig,
) -> Result<(EmbeddingTable, Vec<f64>)> {
    if m.vocab_size != vocab.len() {
        return Err(Error::InvalidArgument(format!(
            "matrix covers {} indices, vocabulary has {}",
            m.vocab_size,
            vocab.len()
        )));
    }
    let trained = fit(m, cfg)?;
    let table = EmbeddingTable::from_glove(vocab.clone(), &trained.params)?;
    Ok((table, trained.objective))
}
