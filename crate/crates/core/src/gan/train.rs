use std::fmt::Write as _;

use log::{debug, info};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::autodiff::Graph;
use crate::corpus::{tokenize, ListingRecord, PopularityLabel};
use crate::error::{Error, Result};
use crate::gan::config::{GanConfig, KeywordSet};
use crate::gan::dmk::KeywordTarget;
use crate::gan::model::{export_pair, Discriminator, Generator};
use crate::glove::{fit_minmax, EmbeddingTable, ScalingParams};
use crate::nn::checkpoint::Checkpoint;
use crate::nn::{AdamConfig, AdamState};
use crate::rng::{self, Rng};
use crate::tensor::Tensor;

/// Real sequences for the discriminator: each listing's first `T` tokens,
/// embedded and min-max scaled, padded with the scaled OOV vector.
#[derive(Debug, Clone)]
pub struct RealSampler {
    sequences: Vec<Tensor>,
}

impl RealSampler {
    pub fn new<'a>(
        records: impl IntoIterator<Item = &'a ListingRecord>,
        table: &EmbeddingTable,
        scaling: &ScalingParams,
        seq_len: usize,
    ) -> Result<Self> {
        let pad = scaling.scale(table.oov_vector())?;
        let mut sequences = Vec::new();
        for r in records {
            let tokens = tokenize(&r.description);
            let mut flat = Vec::with_capacity(seq_len * table.dim());
            for t in tokens.iter().take(seq_len) {
                flat.extend(scaling.scale(table.lookup(t))?);
            }
            for _ in tokens.len().min(seq_len)..seq_len {
                flat.extend_from_slice(&pad);
            }
            sequences.push(Tensor::new(vec![flat.len()], flat)?);
        }
        if sequences.is_empty() {
            return Err(Error::NoData("no listings to draw real sequences from".into()));
        }
        Ok(Self { sequences })
    }

    /// High-popularity listings only, unless `include_all` is set.
    pub fn from_labeled(
        records: &[(ListingRecord, PopularityLabel)],
        include_all: bool,
        table: &EmbeddingTable,
        scaling: &ScalingParams,
        seq_len: usize,
    ) -> Result<Self> {
        Self::new(
            records.iter().filter(|(_, l)| include_all || *l == PopularityLabel::High).map(|(r, _)| r),
            table,
            scaling,
            seq_len,
        )
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Tensor {
        &self.sequences[idx]
    }

    pub fn sample(&self, rng: &mut Rng) -> &Tensor {
        &self.sequences[rng.gen_range(0..self.sequences.len())]
    }
}

/// Uniform `(0, 1)` noise.
pub(crate) fn noise(dim: usize, rng: &mut Rng) -> Tensor {
    Tensor::from_parts(vec![dim], (0..dim).map(|_| rng.gen::<f64>()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Discriminator,
    Generator,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Discriminator => "discriminator",
            Phase::Generator => "generator",
        }
    }
}

/// One optimiser step. Discriminator rows carry `loss_d`; generator rows
/// carry `loss_g` and `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub cycle: usize,
    pub phase: Phase,
    /// 1-based within the phase.
    pub step: usize,
    pub loss_d: Option<f64>,
    pub loss_g: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: f64,
}

pub const STEP_LOG_HEADER: &str = "cycle,phase,step,loss_d,loss_g,delta,gamma";

pub fn step_log_to_csv(log: &[StepRecord]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = format!("{STEP_LOG_HEADER}\n");
    for r in log {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.cycle,
            r.phase.as_str(),
            r.step,
            opt(r.loss_d),
            opt(r.loss_g),
            opt(r.delta),
            r.gamma
        )
        .expect("writing to a String");
    }
    out
}

/// Trained networks plus everything needed to sample and decode.
#[derive(Debug, Clone)]
pub struct GanRun {
    pub config: GanConfig,
    pub generator: Generator,
    pub discriminator: Discriminator,
    pub scaling: ScalingParams,
    pub log: Vec<StepRecord>,
}

impl GanRun {
    pub fn checkpoint(&self) -> Checkpoint {
        export_pair(&self.generator, &self.discriminator)
    }
}

/// Alternating trainer: each cycle runs `disc_steps` discriminator updates
/// with the generator frozen, then `gen_steps` generator updates against
/// the frozen discriminator.
pub struct GanTrainer<'a> {
    pub config: GanConfig,
    pub generator: Generator,
    pub discriminator: Discriminator,
    sampler: &'a RealSampler,
    target: Option<KeywordTarget>,
    adam_g: AdamState,
    adam_d: AdamState,
    noise_rng: Rng,
    real_rng: Rng,
    steps_done: usize,
    pub log: Vec<StepRecord>,
}

impl<'a> GanTrainer<'a> {
    /// `target` may be `None` only when `gamma` is 0.
    pub fn new(config: GanConfig, sampler: &'a RealSampler, target: Option<KeywordTarget>) -> Result<Self> {
        config.validate()?;
        if config.gamma > 0.0 && target.as_ref().is_none_or(|t| t.vectors.is_empty()) {
            return Err(Error::InvalidArgument("a positive gamma needs at least one keyword".into()));
        }
        if let Some(t) = &target {
            if t.dim() != config.dim {
                return Err(Error::ShapeMismatch {
                    op: "keyword vectors",
                    left: vec![t.dim()],
                    right: vec![config.dim],
                });
            }
        }
        if sampler.get(0).len() != config.output_dim() {
            return Err(Error::ShapeMismatch {
                op: "real sequences",
                left: vec![sampler.get(0).len()],
                right: vec![config.output_dim()],
            });
        }
        let generator = Generator::new(&config)?;
        let discriminator = Discriminator::new(&config)?;
        let adam = AdamConfig::with_lr(config.lr);
        Ok(Self {
            adam_g: AdamState::new(adam, &generator.params),
            adam_d: AdamState::new(adam, &discriminator.params),
            noise_rng: rng::substream(config.seed, "noise"),
            real_rng: rng::substream(config.seed, "real"),
            generator,
            discriminator,
            sampler,
            target,
            config,
            steps_done: 0,
            log: Vec::new(),
        })
    }

    /// BCE on one real (label 1) and one generated (label 0) sample.
    pub fn discriminator_step(&mut self, cycle: usize, step: usize) -> Result<f64> {
        let z = noise(self.config.noise_dim, &mut self.noise_rng);
        let fake = self.generator.forward(&z)?;
        let real = self.sampler.sample(&mut self.real_rng).clone();

        let mut g = Graph::new();
        let bound = self.discriminator.params.bind(&mut g, true);
        let xr = g.input(real);
        let xf = g.input(fake);
        let pr = self.discriminator.forward_graph(&mut g, &bound, xr)?;
        let pf = self.discriminator.forward_graph(&mut g, &bound, xf)?;
        let lr = g.bce(pr, 1.0)?;
        let lf = g.bce(pf, 0.0)?;
        let loss = g.add(lr, lf)?;
        let value = g.value(loss).item();
        self.steps_done += 1;
        if !value.is_finite() {
            return Err(Error::Diverged { side: "discriminator", step: self.steps_done });
        }
        let grads = g.backward(loss)?;
        self.discriminator.params.zero_grad();
        self.discriminator.params.accumulate(&bound, &grads);
        self.adam_d.step(&mut self.discriminator.params)?;
        self.log.push(StepRecord {
            cycle,
            phase: Phase::Discriminator,
            step,
            loss_d: Some(value),
            loss_g: None,
            delta: None,
            gamma: self.config.gamma,
        });
        Ok(value)
    }

    /// `BCE(D(G(z)), 1) - γ δ(G(z), k)` on a fresh noise draw.
    pub fn generator_step(&mut self, cycle: usize, step: usize) -> Result<f64> {
        let z = noise(self.config.noise_dim, &mut self.noise_rng);
        let mut g = Graph::new();
        let gen_bound = self.generator.params.bind(&mut g, true);
        let disc_bound = self.discriminator.params.bind(&mut g, false);
        let z = g.input(z);
        let out = self.generator.forward_graph(&mut g, &gen_bound, z)?;
        let p = self.discriminator.forward_graph(&mut g, &disc_bound, out)?;
        let bce = g.bce(p, 1.0)?;
        let (loss, delta) = match &self.target {
            Some(t) => {
                let delta = t.delta_graph(&mut g, out)?;
                let weighted = g.scale(delta, self.config.gamma)?;
                (g.sub(bce, weighted)?, g.value(delta).item())
            }
            None => (bce, 0.0),
        };
        let value = g.value(loss).item();
        self.steps_done += 1;
        if !value.is_finite() {
            return Err(Error::Diverged { side: "generator", step: self.steps_done });
        }
        let grads = g.backward(loss)?;
        self.generator.params.zero_grad();
        self.generator.params.accumulate(&gen_bound, &grads);
        self.adam_g.step(&mut self.generator.params)?;
        self.log.push(StepRecord {
            cycle,
            phase: Phase::Generator,
            step,
            loss_d: None,
            loss_g: Some(value),
            delta: Some(delta),
            gamma: self.config.gamma,
        });
        Ok(value)
    }

    pub fn run_cycle(&mut self, cycle: usize) -> Result<()> {
        let mut last_d = f64::NAN;
        for step in 1..=self.config.disc_steps {
            last_d = self.discriminator_step(cycle, step)?;
        }
        let mut last_g = f64::NAN;
        for step in 1..=self.config.gen_steps {
            last_g = self.generator_step(cycle, step)?;
        }
        info!("gan cycle {cycle}: last loss_d {last_d:.4}, last loss_g {last_g:.4}");
        Ok(())
    }

    pub fn finish(self, scaling: ScalingParams) -> GanRun {
        GanRun {
            config: self.config,
            generator: self.generator,
            discriminator: self.discriminator,
            scaling,
            log: self.log,
        }
    }
}

/// Trains on `records` (High listings only unless the config says
/// otherwise), with the scaling fitted to `table`. Keywords may be empty
/// when `gamma` is 0.
pub fn train_gan(
    config: &GanConfig,
    records: &[(ListingRecord, PopularityLabel)],
    table: &EmbeddingTable,
    keywords: &KeywordSet,
) -> Result<GanRun> {
    train_gan_with_scaling(config, records, table, &fit_minmax(table)?, keywords)
}

pub fn train_gan_with_scaling(
    config: &GanConfig,
    records: &[(ListingRecord, PopularityLabel)],
    table: &EmbeddingTable,
    scaling: &ScalingParams,
    keywords: &KeywordSet,
) -> Result<GanRun> {
    if table.dim() != config.dim || scaling.dim() != config.dim {
        return Err(Error::InvalidArgument(format!(
            "config dim {} does not match embedding dim {} / scaling dim {}",
            config.dim,
            table.dim(),
            scaling.dim()
        )));
    }
    let sampler = RealSampler::from_labeled(records, config.include_all_labels, table, scaling, config.seq_len)?;
    let target = if keywords.is_empty() {
        None
    } else {
        Some(KeywordTarget::resolve(keywords, table, scaling, config.delta_space)?)
    };
    debug!("gan: {} real sequences, keywords {:?}", sampler.len(), keywords.words);
    let mut trainer = GanTrainer::new(config.clone(), &sampler, target)?;
    for cycle in 1..=config.cycles {
        trainer.run_cycle(cycle)?;
    }
    Ok(trainer.finish(scaling.clone()))
}

/// Fraction of `n` real and `n` generated sequences the discriminator
/// classifies correctly at threshold 0.5.
pub fn discriminator_accuracy(
    disc: &Discriminator,
    gen: &Generator,
    real: &RealSampler,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("accuracy needs at least one sample".into()));
    }
    let mut real_rng = rng::substream(seed, "eval-real");
    let mut noise_rng = rng::substream(seed, "eval-noise");
    let mut hits = 0usize;
    for _ in 0..n {
        hits += usize::from(disc.forward(real.sample(&mut real_rng))? > 0.5);
        let fake = gen.forward(&noise(gen.noise_dim(), &mut noise_rng))?;
        hits += usize::from(disc.forward(&fake)? < 0.5);
    }
    Ok(hits as f64 / (2 * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;

    fn record(id: &str, description: &str) -> ListingRecord {
        ListingRecord {
            id: id.into(),
            description: description.into(),
            price: 100.0,
            bedrooms: 1,
            bathrooms: 1.0,
            zipcode: "10001".into(),
            occupancy_rate: 0.5,
        }
    }

    fn setup() -> (EmbeddingTable, ScalingParams) {
        let vocab = Vocabulary::from_words(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let table = EmbeddingTable::with_mean_oov(vocab, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, -1.0]).unwrap();
        let scaling = fit_minmax(&table).unwrap();
        (table, scaling)
    }

    #[test]
    fn real_sequences_truncate_and_pad() {
        let (table, scaling) = setup();
        let s = RealSampler::new([&record("1", "a b c a b"), &record("2", "c a")], &table, &scaling, 3).unwrap();
        let first = s.get(0).values();
        assert_eq!(first.len(), 6);
        assert!(first.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(&first[..2], scaling.scale(table.lookup("a")).unwrap().as_slice());
        let pad = scaling.scale(table.oov_vector()).unwrap();
        assert_eq!(&s.get(1).values()[4..], pad.as_slice());

        let mut r1 = rng::from_seed(3);
        let mut r2 = rng::from_seed(3);
        for _ in 0..5 {
            assert_eq!(s.sample(&mut r1), s.sample(&mut r2));
        }
    }

    #[test]
    fn no_high_records_is_an_error() {
        let (table, scaling) = setup();
        let rows = vec![(record("1", "a b"), PopularityLabel::Low)];
        assert!(RealSampler::from_labeled(&rows, false, &table, &scaling, 2).is_err());
        assert!(RealSampler::from_labeled(&rows, true, &table, &scaling, 2).is_ok());
    }

    #[test]
    fn csv_layout() {
        let log = vec![
            StepRecord {
                cycle: 1,
                phase: Phase::Discriminator,
                step: 1,
                loss_d: Some(1.25),
                loss_g: None,
                delta: None,
                gamma: 0.5,
            },
            StepRecord {
                cycle: 1,
                phase: Phase::Generator,
                step: 1,
                loss_d: None,
                loss_g: Some(0.5),
                delta: Some(2.0),
                gamma: 0.5,
            },
        ];
        assert_eq!(
            step_log_to_csv(&log),
            "cycle,phase,step,loss_d,loss_g,delta,gamma\n1,discriminator,1,1.25,,,0.5\n1,generator,1,,0.5,2,0.5\n"
        );
    }
}
