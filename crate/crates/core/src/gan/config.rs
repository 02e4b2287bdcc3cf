use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which embedding space the keyword vectors live in when computing `δ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaSpace {
    /// Min-max scaled, the same space as the generator output.
    Scaled,
    /// GloVe vectors as trained.
    #[default]
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanConfig {
    pub gamma: f64,
    /// Word slots per generated sequence.
    pub seq_len: usize,
    /// Must match the embedding table.
    pub dim: usize,
    pub noise_dim: usize,
    pub gen_hidden: usize,
    pub disc_hidden: usize,
    pub disc_steps: usize,
    pub gen_steps: usize,
    pub cycles: usize,
    pub lr: f64,
    pub seed: u64,
    /// Leave the generator's last layer without a sigmoid and clamp its
    /// output to `[0, 1]` instead.
    pub paper_literal_generator: bool,
    pub delta_space: DeltaSpace,
    /// Feed the discriminator every listing rather than only High ones.
    pub include_all_labels: bool,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            gamma: 0.00045,
            seq_len: 12,
            dim: 50,
            noise_dim: 64,
            gen_hidden: 128,
            disc_hidden: 128,
            disc_steps: 2000,
            gen_steps: 50,
            cycles: 5,
            lr: 3e-3,
            seed: 0,
            paper_literal_generator: false,
            delta_space: DeltaSpace::Raw,
            include_all_labels: false,
        }
    }
}

impl GanConfig {
    pub fn output_dim(&self) -> usize {
        self.seq_len * self.dim
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {}", self.gamma)));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("lr must be finite and >= 0, got {}", self.lr)));
        }
        for (name, v) in [
            ("seq_len", self.seq_len),
            ("dim", self.dim),
            ("noise_dim", self.noise_dim),
            ("gen_hidden", self.gen_hidden),
            ("disc_hidden", self.disc_hidden),
        ] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// Keywords the generator is pushed toward, in order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub words: Vec<String>,
}

impl KeywordSet {
    pub fn new<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Self {
        Self { words: words.into_iter().map(Into::into).collect() }
    }

    /// Comma- or whitespace-separated list; words are lowercased.
    pub fn parse(s: &str) -> Self {
        Self::new(s.split(|c: char| c == ',' || c.is_whitespace()).filter(|w| !w.is_empty()).map(str::to_lowercase))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}
