use std::collections::HashMap;

use crate::error::{Error, Result};

/// Token used for the out-of-vocabulary slot. The tokenizer strips `<` and
/// `>` from token edges, so no corpus token can collide with it.
pub const OOV_TOKEN: &str = "<unk>";

/// Lowercases, splits on whitespace and strips non-alphanumeric characters
/// from both ends of every token. Empty tokens are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Retained tokens in index order, followed by the OOV slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<usize>,
    min_count: usize,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Keeps tokens seen at least `min_count` times, ordered by descending
    /// frequency then lexicographically.
    pub fn build<S: AsRef<str>>(token_lists: &[Vec<S>], min_count: usize) -> Result<Self> {
        if min_count == 0 {
            return Err(Error::InvalidArgument("min_count must be at least 1".into()));
        }
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for t in token_lists.iter().flatten() {
            *freq.entry(t.as_ref()).or_default() += 1;
        }
        let mut kept: Vec<(&str, usize)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let (tokens, counts) = kept.into_iter().map(|(t, c)| (t.to_owned(), c)).unzip();
        Ok(Self::assemble(tokens, counts, min_count))
    }

    /// A vocabulary over `words` in the given order (e.g. from an embedding
    /// file). A trailing [`OOV_TOKEN`] entry is treated as the OOV slot.
    pub fn from_words(mut words: Vec<String>) -> Result<Self> {
        if words.last().map(String::as_str) == Some(OOV_TOKEN) {
            words.pop();
        }
        let n = words.len();
        let v = Self::assemble(words, vec![0; n], 1);
        if v.index.len() != n {
            return Err(Error::Format("duplicate word in vocabulary".into()));
        }
        if v.tokens.iter().any(|t| t == OOV_TOKEN) {
            return Err(Error::Format(format!("`{OOV_TOKEN}` must be the last word")));
        }
        Ok(v)
    }

    fn assemble(tokens: Vec<String>, counts: Vec<usize>, min_count: usize) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, counts, min_count, index }
    }

    /// Number of indices including OOV.
    pub fn len(&self) -> usize {
        self.tokens.len() + 1
    }

    /// Number of retained (non-OOV) tokens.
    pub fn known(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn oov(&self) -> usize {
        self.tokens.len()
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or the OOV index.
    pub fn index(&self, token: &str) -> usize {
        self.get(token).unwrap_or_else(|| self.oov())
    }

    pub fn word(&self, idx: usize) -> &str {
        self.tokens.get(idx).map(String::as_str).unwrap_or(OOV_TOKEN)
    }

    pub fn count(&self, idx: usize) -> usize {
        self.counts.get(idx).copied().unwrap_or(0)
    }

    /// All words in index order, OOV last.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str).chain(std::iter::once(OOV_TOKEN))
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.index(t)).collect()
    }
}
