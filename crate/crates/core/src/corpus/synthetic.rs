//! Deterministic synthetic listing corpora with known popularity classes.
//!
//! Each class owns a disjoint set of marker words and a disjoint occupancy
//! range, so both stratification and text classification have a known
//! ceiling. Classes are assigned round-robin (High, Medium, Low, ...).

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::record::{ListingRecord, PopularityLabel};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub high_markers: Vec<String>,
    pub medium_markers: Vec<String>,
    pub low_markers: Vec<String>,
    pub filler: Vec<String>,
    pub min_words: usize,
    pub max_words: usize,
    pub markers_per_record: usize,
    /// Inclusive integer range of nightly price per bedroom.
    pub price_per_bedroom: (u32, u32),
    pub max_bedrooms: u32,
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            high_markers: words("subway parking renovated rooftop spacious doorman"),
            medium_markers: words("cozy quiet charming bright garden balcony"),
            low_markers: words("basement noisy shared tiny walkup futon"),
            filler: words(
                "apartment room bed kitchen bathroom street block the a in with and near to \
                 of for our lovely unit perfect travelers laundry entire accommodation manhattan \
                 park restaurants close minutes place home stay guests comfortable clean view \
                 location city shops train",
            ),
            min_words: 8,
            max_words: 14,
            markers_per_record: 3,
            // One 30-wide bin: [120, 150).
            price_per_bedroom: (121, 149),
            max_bedrooms: 3,
        }
    }
}

impl SyntheticSpec {
    pub fn markers(&self, label: PopularityLabel) -> &[String] {
        match label {
            PopularityLabel::High => &self.high_markers,
            PopularityLabel::Medium => &self.medium_markers,
            PopularityLabel::Low => &self.low_markers,
        }
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for label in PopularityLabel::ALL {
            let m = self.markers(label);
            if m.is_empty() {
                return Err(Error::InvalidArgument(format!("no markers for class {label}")));
            }
            for w in m {
                if !seen.insert(w.as_str()) {
                    return Err(Error::InvalidArgument(format!("marker `{w}` appears in more than one class")));
                }
            }
        }
        if self.filler.is_empty() {
            return Err(Error::InvalidArgument("filler vocabulary is empty".into()));
        }
        if self.markers_per_record == 0 || self.min_words < self.markers_per_record || self.max_words < self.min_words {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= markers_per_record ({}) <= min_words ({}) <= max_words ({})",
                self.markers_per_record, self.min_words, self.max_words
            )));
        }
        let (lo, hi) = self.price_per_bedroom;
        if lo > hi || self.max_bedrooms == 0 {
            return Err(Error::InvalidArgument("empty price or bedroom range".into()));
        }
        Ok(())
    }
}

/// Occupancy range drawn for each generating class.
pub fn occupancy_range(label: PopularityLabel) -> (f64, f64) {
    match label {
        PopularityLabel::High => (0.7, 1.0),
        PopularityLabel::Medium => (0.35, 0.65),
        PopularityLabel::Low => (0.0, 0.3),
    }
}

/// Records together with the class that generated them.
pub fn generate_labeled(spec: &SyntheticSpec, n: usize, seed: u64) -> Result<Vec<(ListingRecord, PopularityLabel)>> {
    spec.validate()?;
    if n < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 records, got {n}")));
    }
    let mut rng = rng::substream(seed, "corpus");
    let width = n.to_string().len().max(4);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let label = PopularityLabel::ALL[i % 3];
        let len = rng.gen_range(spec.min_words..=spec.max_words);
        let mut tokens: Vec<&str> =
            (0..len).map(|_| spec.filler.choose(&mut rng).expect("non-empty").as_str()).collect();
        let mut slots: Vec<usize> = (0..len).collect();
        slots.shuffle(&mut rng);
        for &slot in &slots[..spec.markers_per_record] {
            tokens[slot] = spec.markers(label).choose(&mut rng).expect("non-empty");
        }
        let mut description = tokens.join(" ");
        description.push('.');

        let bedrooms = rng.gen_range(1..=spec.max_bedrooms);
        let ppb = rng.gen_range(spec.price_per_bedroom.0..=spec.price_per_bedroom.1);
        let (lo, hi) = occupancy_range(label);
        // Occupancy on a 1e-4 grid keeps the CSV form short and exact.
        let occ = (rng.gen_range(lo..=hi) * 1e4).round() / 1e4;
        out.push((
            ListingRecord {
                id: format!("S{i:0width$}"),
                description,
                price: f64::from(ppb * bedrooms),
                bedrooms,
                bathrooms: f64::from(rng.gen_range(1..=2u32)),
                zipcode: format!("100{:02}", rng.gen_range(1..40u32)),
                occupancy_rate: occ,
            },
            label,
        ));
    }
    Ok(out)
}

pub fn generate_synthetic_corpus(spec: &SyntheticSpec, n: usize, seed: u64) -> Result<Vec<ListingRecord>> {
    Ok(generate_labeled(spec, n, seed)?.into_iter().map(|(r, _)| r).collect())
}
