use std::collections::BTreeMap;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Sparse symmetric co-occurrence counts, keyed `(i, j)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CooccurrenceMatrix {
    counts: BTreeMap<(usize, usize), f64>,
    pub window: usize,
    pub vocab_size: usize,
}

impl CooccurrenceMatrix {
    /// Accumulates `1/distance` for every pair of positions at most `window`
    /// apart within a sequence, into both `X[a][b]` and `X[b][a]`.
    /// Sequences are vocabulary indices (OOV included).
    pub fn build(sequences: &[Vec<usize>], vocab_size: usize, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidArgument("co-occurrence window must be at least 1".into()));
        }
        let mut counts = BTreeMap::new();
        for seq in sequences {
            for (p, &a) in seq.iter().enumerate() {
                for (dist, &b) in seq[p + 1..].iter().take(window).enumerate() {
                    let w = 1.0 / (dist + 1) as f64;
                    *counts.entry((a, b)).or_insert(0.0) += w;
                    *counts.entry((b, a)).or_insert(0.0) += w;
                }
            }
        }
        Ok(Self { counts, window, vocab_size })
    }

    pub fn from_tokens(token_lists: &[Vec<String>], vocab: &Vocabulary, window: usize) -> Result<Self> {
        let seqs: Vec<Vec<usize>> = token_lists.iter().map(|t| vocab.encode(t)).collect();
        Self::build(&seqs, vocab.len(), window)
    }

    /// Builds directly from entries; used for tests and preset objectives.
    pub fn from_entries(entries: impl IntoIterator<Item = ((usize, usize), f64)>, vocab_size: usize) -> Self {
        Self { counts: entries.into_iter().collect(), window: 0, vocab_size }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.counts.get(&(i, j)).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Entries in `(i, j)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.counts.iter().map(|(&(i, j), &x)| (i, j, x))
    }
}
