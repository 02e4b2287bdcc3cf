//! JSON run configuration. Every section is optional; missing fields take
//! the library defaults, and command-line flags override whatever is here.

use std::path::{Path, PathBuf};

use anyhow::Result;
use serde::{Deserialize, Serialize};

use dmk_core::classifier::ClassifierConfig;
use dmk_core::corpus::DEFAULT_BIN_WIDTH;
use dmk_core::gan::GanConfig;
use dmk_core::glove::GloveConfig;

use crate::io::read_input_string;
use crate::InputError;

pub const SEED_ENV: &str = "DMK_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusOptions {
    pub bin_width: f64,
    pub min_count: usize,
    pub window: usize,
    pub split_ratio: f64,
    pub synthetic_records: usize,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self { bin_width: DEFAULT_BIN_WIDTH, min_count: 2, window: 5, split_ratio: 0.7, synthetic_records: 300 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub gammas: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { gammas: vec![0.0002, 0.00045, 0.0007], seeds: vec![1, 2, 3, 4, 5] }
    }
}

/// Input and output locations; flags of the same name take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub scaling: Option<PathBuf>,
    pub classifier_checkpoint: Option<PathBuf>,
    pub gan_checkpoint: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub paths: Paths,
    pub corpus: CorpusOptions,
    pub glove: GloveConfig,
    pub classifier: ClassifierConfig,
    pub gan: GanConfig,
    pub keywords: Vec<String>,
    pub sweep: SweepOptions,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_input_string(path)?;
        serde_json::from_str(&text).map_err(|e| InputError(format!("{}: {e}", path.display())).into())
    }

    /// Flag, then config file, then `DMK_SEED`, then 0.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => {
                v.trim().parse().map_err(|_| InputError(format!("{SEED_ENV}={v:?} is not an unsigned integer")).into())
            }
            Err(_) => Ok(0),
        }
    }

    /// Range checks shared by every command, run before any work starts.
    pub fn validate(&self) -> Result<()> {
        let c = &self.corpus;
        if !(c.bin_width > 0.0 && c.bin_width.is_finite()) {
            return Err(InputError(format!("bin_width must be positive, got {}", c.bin_width)).into());
        }
        if c.min_count == 0 || c.window == 0 {
            return Err(InputError("min_count and window must be at least 1".into()).into());
        }
        if !(c.split_ratio > 0.0 && c.split_ratio < 1.0) {
            return Err(InputError(format!("split_ratio must be in (0, 1), got {}", c.split_ratio)).into());
        }
        let g = &self.glove;
        if g.dim == 0 || !(g.lr >= 0.0 && g.x_max > 0.0 && g.alpha >= 0.0) {
            return Err(InputError(format!("invalid GloVe options {g:?}")).into());
        }
        if self.classifier.hidden == 0 || self.classifier.max_len == 0 {
            return Err(InputError("classifier hidden and max_len must be at least 1".into()).into());
        }
        self.classifier.validate().map_err(|e| InputError(e.to_string()))?;
        self.gan.validate().map_err(|e| InputError(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_keeps_defaults() {
        let c: RunConfig =
            serde_json::from_str(r#"{"seed": 9, "glove": {"dim": 10}, "gan": {"gamma": 0.001}}"#).unwrap();
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.glove.dim, 10);
        assert_eq!(c.glove.epochs, GloveConfig::default().epochs);
        assert_eq!(c.gan.gamma, 0.001);
        assert_eq!(c.gan.seq_len, 12);
        assert_eq!(c.corpus, CorpusOptions::default());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 1}"#).is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let mut c = RunConfig::default();
        c.corpus.split_ratio = 1.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.gan.gamma = -1.0;
        assert!(c.validate().is_err());
    }
}
