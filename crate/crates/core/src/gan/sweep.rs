use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ListingRecord, PopularityLabel};
use crate::error::{Error, Result};
use crate::gan::config::{GanConfig, KeywordSet};
use crate::gan::model::Generator;
use crate::gan::train::{noise, train_gan_with_scaling};
use crate::glove::{Decoder, EmbeddingTable, Metric, ScalingParams};
use crate::rng;
use crate::tensor::Tensor;

/// Samples decoded per (γ, seed) run.
pub const SWEEP_SAMPLES: usize = 20;

/// Nearest word (scaled space, Euclidean) for each `d`-wide slot of `g`.
pub fn decode_sequence(g: &Tensor, table: &EmbeddingTable, scaling: &ScalingParams) -> Result<Vec<String>> {
    let decoder = Decoder::new(table, Some(scaling), Metric::Euclidean)?;
    decode_with(&decoder, table, g)
}

fn decode_with(decoder: &Decoder, table: &EmbeddingTable, g: &Tensor) -> Result<Vec<String>> {
    let d = decoder.dim();
    if !g.len().is_multiple_of(d) {
        return Err(Error::ShapeMismatch { op: "decode_sequence", left: vec![g.len()], right: vec![d] });
    }
    g.values().chunks(d).map(|slot| Ok(table.vocab().word(decoder.nearest(slot)?).to_owned())).collect()
}

/// Occurrences of each keyword in `words`, in keyword order.
pub fn keyword_count(words: &[String], keywords: &KeywordSet) -> Vec<usize> {
    keywords.words.iter().map(|k| words.iter().filter(|w| *w == k).count()).collect()
}

/// Decodes `n` generator outputs, with noise drawn from the "samples"
/// stream of `seed`.
pub fn generate_samples(
    gen: &Generator,
    table: &EmbeddingTable,
    scaling: &ScalingParams,
    n: usize,
    seed: u64,
    metric: Metric,
) -> Result<Vec<Vec<String>>> {
    let decoder = Decoder::new(table, Some(scaling), metric)?;
    let mut r = rng::substream(seed, "samples");
    (0..n)
        .map(|_| {
            let g = gen.forward(&noise(gen.noise_dim(), &mut r))?;
            decode_with(&decoder, table, &g)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub gamma: f64,
    pub seed: u64,
    /// Mean occurrences per decoded sample.
    pub mean_keyword_count: BTreeMap<String, f64>,
    pub samples: Vec<String>,
}

impl SweepEntry {
    /// Mean occurrences of any keyword per sample.
    pub fn total(&self) -> f64 {
        self.mean_keyword_count.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    /// Distinct γ values in report order.
    pub fn gammas(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.gamma) {
                out.push(e.gamma);
            }
        }
        out
    }

    /// Median over seeds of the total mean keyword count, per γ.
    pub fn median_by_gamma(&self) -> Vec<(f64, f64)> {
        self.gammas()
            .into_iter()
            .map(|gamma| {
                let mut v: Vec<f64> = self.entries.iter().filter(|e| e.gamma == gamma).map(SweepEntry::total).collect();
                v.sort_by(f64::total_cmp);
                let n = v.len();
                let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
                (gamma, median)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// γ, seed, keyword count and the first sample, one row per run,
    /// followed by the per-γ medians.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{:<10} {:>6} {:>9}  sample output", "gamma", "seed", "keywords").expect("String write");
        for e in &self.entries {
            let sample = e.samples.first().map(String::as_str).unwrap_or("");
            writeln!(out, "{:<10} {:>6} {:>9.3}  {sample}", e.gamma, e.seed, e.total()).expect("String write");
        }
        out.push('\n');
        writeln!(out, "{:<10} {:>16}", "gamma", "median keywords").expect("String write");
        for (gamma, median) in self.median_by_gamma() {
            writeln!(out, "{gamma:<10} {median:>16.3}").expect("String write");
        }
        out
    }
}

/// Trains one model per (γ, seed) pair, in parallel, and decodes
/// [`SWEEP_SAMPLES`] outputs from each. Entries come back ordered by γ,
/// then seed, as given.
pub fn gamma_sweep(
    gammas: &[f64],
    seeds: &[u64],
    config: &GanConfig,
    records: &[(ListingRecord, PopularityLabel)],
    table: &EmbeddingTable,
    scaling: &ScalingParams,
    keywords: &KeywordSet,
) -> Result<SweepReport> {
    if gammas.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one gamma and one seed".into()));
    }
    if gammas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(format!("gamma values must be strictly ascending: {gammas:?}")));
    }
    if keywords.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one keyword".into()));
    }
    let runs: Vec<(f64, u64)> = gammas.iter().flat_map(|&g| seeds.iter().map(move |&s| (g, s))).collect();
    let entries = runs
        .par_iter()
        .map(|&(gamma, seed)| {
            let cfg = GanConfig { gamma, seed, ..config.clone() };
            let run = train_gan_with_scaling(&cfg, records, table, scaling, keywords)?;
            let samples = generate_samples(&run.generator, table, scaling, SWEEP_SAMPLES, seed, Metric::Euclidean)?;
            let mut totals = vec![0usize; keywords.len()];
            for s in &samples {
                for (t, c) in totals.iter_mut().zip(keyword_count(s, keywords)) {
                    *t += c;
                }
            }
            let mean_keyword_count = keywords
                .words
                .iter()
                .zip(&totals)
                .map(|(k, &t)| (k.clone(), t as f64 / samples.len() as f64))
                .collect();
            let entry =
                SweepEntry { gamma, seed, mean_keyword_count, samples: samples.iter().map(|s| s.join(" ")).collect() };
            info!("sweep gamma {gamma} seed {seed}: {:.3} keywords per sample", entry.total());
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::glove::fit_minmax;

    fn setup() -> (EmbeddingTable, ScalingParams) {
        let vocab = Vocabulary::from_words(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let table = EmbeddingTable::with_mean_oov(vocab, 2, vec![0.0, 0.0, 1.0, 2.0, 4.0, 1.0]).unwrap();
        let scaling = fit_minmax(&table).unwrap();
        (table, scaling)
    }

    #[test]
    fn decode_exact_slots() {
        let (table, scaling) = setup();
        let mut flat = Vec::new();
        for w in ["c", "a", "b", "c"] {
            flat.extend(scaling.scale(table.lookup(w)).unwrap());
        }
        let words = decode_sequence(&Tensor::vector(flat).unwrap(), &table, &scaling).unwrap();
        assert_eq!(words, ["c", "a", "b", "c"]);
    }

    #[test]
    fn decode_center_point() {
        let (table, scaling) = setup();
        let words = decode_sequence(&Tensor::full(&[6], 0.5), &table, &scaling).unwrap();
        // Brute-force scan over the scaled rows.
        let best = table
            .vocab()
            .words()
            .take(3)
            .min_by(|a, b| {
                let d = |w: &str| -> f64 {
                    scaling.scale(table.lookup(w)).unwrap().iter().map(|v| (v - 0.5) * (v - 0.5)).sum()
                };
                d(a).total_cmp(&d(b))
            })
            .unwrap();
        assert_eq!(words, vec![best.to_owned(); 3]);
        assert!(decode_sequence(&Tensor::full(&[5], 0.5), &table, &scaling).is_err());
    }

    #[test]
    fn counting() {
        let words: Vec<String> = ["parking", "loft", "parking"].iter().map(|s| s.to_string()).collect();
        assert_eq!(keyword_count(&words, &KeywordSet::new(["parking", "subway"])), [2, 0]);
    }

    #[test]
    fn medians() {
        let entry = |gamma, seed, c| SweepEntry {
            gamma,
            seed,
            mean_keyword_count: BTreeMap::from([("k".to_string(), c)]),
            samples: vec![],
        };
        let r = SweepReport {
            entries: vec![
                entry(0.1, 1, 3.0),
                entry(0.1, 2, 1.0),
                entry(0.1, 3, 2.0),
                entry(0.2, 1, 4.0),
                entry(0.2, 2, 6.0),
            ],
        };
        assert_eq!(r.median_by_gamma(), [(0.1, 2.0), (0.2, 5.0)]);
        assert!(r.to_text().contains("median"));
    }
}
