//! LSTM popularity classifier with per-timestep predictions.
//!
//! Every step's hidden state is projected to class logits by a shared linear
//! head. By default the hidden state handed to the next step goes through a
//! ReLU first. A sequence prediction either ensembles all steps (mean of
//! log-softmax, or majority vote) or reads the final step only, and training
//! uses the matching loss: mean per-step cross-entropy or final-step
//! cross-entropy.

use std::fmt::Write as _;

use log::warn;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Var};
use crate::corpus::{tokenize, ListingRecord, PopularityLabel, SplitDataset};
use crate::error::{Error, Result};
use crate::glove::EmbeddingTable;
use crate::nn::checkpoint::{self, Checkpoint};
use crate::nn::loss::log_softmax;
use crate::nn::{Activation, AdamConfig, AdamState, Init, Linear, LstmWeights, ParamSet};
use crate::rng;
use crate::tensor::Tensor;

pub const NUM_CLASSES: usize = 3;

/// What happens to the hidden state between steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recurrence {
    /// ReLU on the hidden state before it enters the next step.
    #[default]
    Relu,
    /// Plain LSTM recurrence.
    Identity,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    #[default]
    MeanLogProb,
    MajorityVote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub max_len: usize,
    pub ensemble: bool,
    pub ensemble_mode: EnsembleMode,
    pub recurrence: Recurrence,
    pub epochs: usize,
    pub lr: f64,
    /// Weights start uniform in `(-init_scale, init_scale)`.
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 16,
            max_len: 50,
            ensemble: true,
            ensemble_mode: EnsembleMode::MeanLogProb,
            recurrence: Recurrence::Relu,
            epochs: 10,
            lr: 1e-3,
            init_scale: 0.01,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.max_len == 0 {
            return Err(Error::InvalidArgument("hidden units and max_len must be at least 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) || !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidArgument("lr and init_scale must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Embedded description: `max_len` step vectors (zero-padded) and the
/// number of real tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedSequence {
    pub steps: Vec<Tensor>,
    pub length: usize,
}

/// Looks up the first `max_len` tokens (OOV vector for misses) and pads
/// with zero vectors.
pub fn encode_description(tokens: &[String], table: &EmbeddingTable, max_len: usize) -> EncodedSequence {
    let d = table.dim();
    let length = tokens.len().min(max_len);
    let mut steps: Vec<Tensor> =
        tokens[..length].iter().map(|t| Tensor::from_parts(vec![d], table.lookup(t).to_vec())).collect();
    steps.resize(max_len, Tensor::zeros(&[d]));
    EncodedSequence { steps, length }
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Argmax of the mean per-step log-softmax; ties go to the lowest class.
pub fn ensemble_predict(per_step_logits: &[Tensor]) -> usize {
    let c = per_step_logits.first().map_or(0, Tensor::len);
    let mut mean = vec![0.0; c];
    for z in per_step_logits {
        for (m, lp) in mean.iter_mut().zip(log_softmax(z.values())) {
            *m += lp;
        }
    }
    for m in &mut mean {
        *m /= per_step_logits.len() as f64;
    }
    argmax_lowest(&mean)
}

/// Most frequent per-step argmax; ties go to the lowest class.
pub fn majority_vote_predict(per_step_logits: &[Tensor]) -> usize {
    let c = per_step_logits.first().map_or(0, Tensor::len);
    let mut votes = vec![0.0; c];
    for z in per_step_logits {
        votes[argmax_lowest(z.values())] += 1.0;
    }
    argmax_lowest(&votes)
}

/// Argmax of the last step's logits; ties go to the lowest class.
pub fn final_state_predict(per_step_logits: &[Tensor]) -> usize {
    per_step_logits.last().map_or(0, |z| argmax_lowest(z.values()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

pub const METRICS_HEADER: &str = "epoch,train_loss,train_acc,test_acc";

pub fn metrics_to_csv(rows: &[EpochMetrics]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.epoch, r.train_loss, r.train_acc, r.test_acc).expect("writing to a String");
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub params: ParamSet,
    pub lstm: LstmWeights,
    pub head: Linear,
    pub config: ClassifierConfig,
}

impl Classifier {
    pub fn new(input_dim: usize, config: ClassifierConfig) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        let mut rng = rng::substream(config.seed, "init");
        let init = Init::Uniform(config.init_scale);
        let mut params = ParamSet::new();
        let lstm = LstmWeights::register(&mut params, "lstm", input_dim, config.hidden, init, &mut rng);
        let head = Linear::register(&mut params, "head", config.hidden, NUM_CLASSES, init, &mut rng);
        Ok(Self { params, lstm, head, config })
    }

    pub fn input_dim(&self) -> usize {
        self.lstm.input_size
    }

    /// Per-step logits for the `length` real steps of `seq`, on `g`.
    pub fn forward_graph(&self, g: &mut Graph, bound: &[Var], seq: &EncodedSequence) -> Result<Vec<Var>> {
        if seq.length == 0 {
            return Err(Error::InvalidArgument("cannot classify a zero-length sequence".into()));
        }
        let hdim = self.lstm.hidden_size;
        let mut h = g.input(Tensor::zeros(&[hdim]));
        let mut c = g.input(Tensor::zeros(&[hdim]));
        let mut logits = Vec::with_capacity(seq.length);
        for x in &seq.steps[..seq.length] {
            let x = g.input(x.clone());
            let (h_out, c_next) = self.lstm.step(g, bound, x, h, c)?;
            logits.push(self.head.forward(g, bound, h_out)?);
            h = match self.config.recurrence {
                Recurrence::Relu => g.activation(h_out, Activation::Relu)?,
                Recurrence::Identity => h_out,
            };
            c = c_next;
        }
        Ok(logits)
    }

    pub fn forward(&self, seq: &EncodedSequence) -> Result<Vec<Tensor>> {
        let mut g = Graph::new();
        let bound = self.params.bind(&mut g, false);
        let logits = self.forward_graph(&mut g, &bound, seq)?;
        Ok(logits.into_iter().map(|v| g.value(v).clone()).collect())
    }

    /// Sequence-level class under the configured prediction mode.
    pub fn predict_logits(&self, per_step: &[Tensor]) -> usize {
        match (self.config.ensemble, self.config.ensemble_mode) {
            (false, _) => final_state_predict(per_step),
            (true, EnsembleMode::MeanLogProb) => ensemble_predict(per_step),
            (true, EnsembleMode::MajorityVote) => majority_vote_predict(per_step),
        }
    }

    pub fn predict(&self, seq: &EncodedSequence) -> Result<usize> {
        Ok(self.predict_logits(&self.forward(seq)?))
    }

    /// Training loss on `g`: mean per-step cross-entropy when ensembling,
    /// final-step cross-entropy otherwise.
    pub fn loss_graph(&self, g: &mut Graph, logits: &[Var], class: usize) -> Result<Var> {
        if self.config.ensemble {
            let terms = logits.iter().map(|&z| g.cross_entropy(z, class)).collect::<Result<Vec<_>>>()?;
            let total = g.add_n(&terms)?;
            g.scale(total, 1.0 / terms.len() as f64)
        } else {
            let last = *logits.last().expect("non-empty");
            g.cross_entropy(last, class)
        }
    }

    /// Loss and gradients (in parameter order) for one labelled sequence.
    pub fn loss_and_gradient(&self, seq: &EncodedSequence, class: usize) -> Result<(f64, Vec<Tensor>, Vec<Tensor>)> {
        let mut g = Graph::new();
        let bound = self.params.bind(&mut g, true);
        let logits = self.forward_graph(&mut g, &bound, seq)?;
        let loss = self.loss_graph(&mut g, &logits, class)?;
        let mut grads = g.backward(loss)?;
        let per_param = bound
            .iter()
            .zip(self.params.iter())
            .map(|(&v, p)| grads.take(v).unwrap_or_else(|| Tensor::zeros(p.tensor.shape())))
            .collect();
        let logit_values = logits.iter().map(|&v| g.value(v).clone()).collect();
        Ok((g.value(loss).item(), per_param, logit_values))
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::new();
        checkpoint::export(&mut ckpt, "", &self.params);
        ckpt
    }

    /// Rebuilds a model whose layer sizes are read from the checkpoint.
    pub fn from_checkpoint(ckpt: &Checkpoint, mut config: ClassifierConfig) -> Result<Self> {
        let shape = checkpoint::shape_of(ckpt, "lstm.w_i")?;
        let &[input_dim, hidden] = shape else {
            return Err(Error::Format(format!("lstm.w_i has shape {shape:?}")));
        };
        config.hidden = hidden;
        let mut model = Self::new(input_dim, config)?;
        checkpoint::import(ckpt, "", &mut model.params)?;
        Ok(model)
    }
}

/// A description ready for the classifier.
#[derive(Debug, Clone)]
pub struct Example {
    pub sequence: EncodedSequence,
    pub class: usize,
}

/// Tokenises and embeds labelled records. Empty descriptions are dropped
/// with a warning.
pub fn encode_records(
    records: &[(ListingRecord, PopularityLabel)],
    table: &EmbeddingTable,
    max_len: usize,
) -> Vec<Example> {
    records
        .iter()
        .filter_map(|(r, label)| {
            let sequence = encode_description(&tokenize(&r.description), table, max_len);
            if sequence.length == 0 {
                warn!("listing {} has an empty description; skipped", r.id);
                return None;
            }
            Some(Example { sequence, class: label.index() })
        })
        .collect()
}

pub fn accuracy(model: &Classifier, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let hits = examples
        .par_iter()
        .map(|ex| model.predict(&ex.sequence).map(|p| usize::from(p == ex.class)))
        .collect::<Result<Vec<_>>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / examples.len() as f64)
}

/// Mean training loss of `model` over `examples`, without updating it.
pub fn mean_loss(model: &Classifier, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::NoData("no examples to score".into()));
    }
    let losses = examples
        .par_iter()
        .map(|ex| model.loss_and_gradient(&ex.sequence, ex.class).map(|(l, _, _)| l))
        .collect::<Result<Vec<_>>>()?;
    Ok(losses.iter().sum::<f64>() / examples.len() as f64)
}

/// Trains with Adam, one update per record, records visited in a seeded
/// shuffled order each epoch. `train_loss` and `train_acc` are running
/// values over the epoch (measured before each update); `test_acc` is
/// measured after the epoch.
pub fn train_classifier(
    split: &SplitDataset<(ListingRecord, PopularityLabel)>,
    table: &EmbeddingTable,
    config: &ClassifierConfig,
) -> Result<(Classifier, Vec<EpochMetrics>)> {
    config.validate()?;
    let train = encode_records(&split.train, table, config.max_len);
    let test = encode_records(&split.test, table, config.max_len);
    if train.is_empty() {
        return Err(Error::NoData("training set is empty".into()));
    }
    let mut model = Classifier::new(table.dim(), config.clone())?;
    let mut adam = AdamState::new(AdamConfig::with_lr(config.lr), &model.params);
    let mut order_rng = rng::substream(config.seed, "classifier-order");
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut metrics = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut order_rng);
        // Summed in record order so the mean does not depend on the shuffle.
        let mut losses = vec![0.0; train.len()];
        let mut hits = 0usize;
        for &i in &order {
            let ex = &train[i];
            let (loss, grads, logits) = model.loss_and_gradient(&ex.sequence, ex.class)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { side: "classifier", step: epoch });
            }
            losses[i] = loss;
            hits += usize::from(model.predict_logits(&logits) == ex.class);
            for (p, g) in model.params.iter_mut().zip(grads) {
                p.grad = g;
            }
            adam.step(&mut model.params)?;
        }
        let row = EpochMetrics {
            epoch,
            train_loss: losses.iter().sum::<f64>() / train.len() as f64,
            train_acc: hits as f64 / train.len() as f64,
            test_acc: accuracy(&model, &test)?,
        };
        log::info!(
            "epoch {epoch}: loss {:.4} train acc {:.3} test acc {:.3}",
            row.train_loss,
            row.train_acc,
            row.test_acc
        );
        metrics.push(row);
    }
    Ok((model, metrics))
}
