//! Embedding lookup, nearest-word decoding and the text export format.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Vocabulary, OOV_TOKEN};
use crate::error::{Error, Result};
use crate::glove::scaling::ScalingParams;
use crate::glove::train::GloveParams;

/// One `dim`-vector per vocabulary index, OOV row last.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vocab: Vocabulary,
    dim: usize,
    vectors: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(vocab: Vocabulary, dim: usize, vectors: Vec<f64>) -> Result<Self> {
        if dim == 0 || vectors.len() != vocab.len() * dim {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form {} vectors of dimension {dim}",
                vectors.len(),
                vocab.len()
            )));
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding table".into()));
        }
        Ok(Self { vocab, dim, vectors })
    }

    /// Builds from known-word vectors; the OOV row is their mean.
    pub fn with_mean_oov(vocab: Vocabulary, dim: usize, mut known: Vec<f64>) -> Result<Self> {
        let n = vocab.known();
        if known.len() != n * dim {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form {n} vectors of dimension {dim}",
                known.len()
            )));
        }
        let mut mean = vec![0.0; dim];
        if n > 0 {
            for row in known.chunks(dim) {
                for (m, v) in mean.iter_mut().zip(row) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= n as f64;
            }
        }
        known.extend(mean);
        Self::new(vocab, dim, known)
    }

    /// `e = w + w~` for every known word.
    pub fn from_glove(vocab: Vocabulary, params: &GloveParams) -> Result<Self> {
        let d = params.dim();
        let n = vocab.known();
        let known =
            params.main.values()[..n * d].iter().zip(&params.context.values()[..n * d]).map(|(a, b)| a + b).collect();
        Self::with_mean_oov(vocab, d, known)
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vector(&self, idx: usize) -> &[f64] {
        &self.vectors[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Vector of `word`, or the OOV vector.
    pub fn lookup(&self, word: &str) -> &[f64] {
        self.vector(self.vocab.index(word))
    }

    pub fn oov_vector(&self) -> &[f64] {
        self.vector(self.vocab.oov())
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks(self.dim)
    }

    /// Text export: one `word v_1 ... v_d` line per index (OOV last), values
    /// at 9 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (word, row) in self.vocab.words().zip(self.rows()) {
            out.push_str(word);
            for v in row {
                write!(out, " {v:.8e}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text export. A missing `<unk>` line gets the mean vector.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut words = Vec::new();
        let mut values = Vec::new();
        let mut dim = None;
        for (ln, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let row: Vec<f64> = parts
                .map(|p| p.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", ln + 1)))?;
            match dim {
                None if row.is_empty() => return Err(Error::Format(format!("line {}: no values", ln + 1))),
                None => dim = Some(row.len()),
                Some(d) if d != row.len() => {
                    return Err(Error::Format(format!("line {}: expected {d} values, found {}", ln + 1, row.len())))
                }
                Some(_) => {}
            }
            words.push(word.to_owned());
            values.extend(row);
        }
        let dim = dim.ok_or_else(|| Error::NoData("embedding file has no vectors".into()))?;
        let has_oov = words.last().map(String::as_str) == Some(OOV_TOKEN);
        let vocab = Vocabulary::from_words(words)?;
        if has_oov {
            Self::new(vocab, dim, values)
        } else {
            Self::with_mean_oov(vocab, dim, values)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

/// Nearest-word search over the known words (OOV excluded), optionally in
/// min-max scaled space. Ties go to the lower index.
#[derive(Debug, Clone)]
pub struct Decoder {
    rows: Vec<Vec<f64>>,
    norms: Vec<f64>,
    metric: Metric,
}

impl Decoder {
    pub fn new(table: &EmbeddingTable, scaling: Option<&ScalingParams>, metric: Metric) -> Result<Self> {
        let n = table.vocab().known();
        if n == 0 {
            return Err(Error::NoData("embedding table has no words to decode".into()));
        }
        let rows: Vec<Vec<f64>> = table
            .rows()
            .take(n)
            .map(|r| match scaling {
                Some(s) => s.scale(r),
                None => Ok(r.to_vec()),
            })
            .collect::<Result<_>>()?;
        let norms = rows.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
        Ok(Self { rows, norms, metric })
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    /// Index of the nearest known word to `v`.
    pub fn nearest(&self, v: &[f64]) -> Result<usize> {
        if v.len() != self.dim() {
            return Err(Error::ShapeMismatch { op: "nearest_word", left: vec![self.dim()], right: vec![v.len()] });
        }
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut best = (0, f64::INFINITY);
        for (i, row) in self.rows.iter().enumerate() {
            let score = match self.metric {
                Metric::Euclidean => row.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
                Metric::Cosine => {
                    let dot: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
                    let denom = self.norms[i] * vnorm;
                    if denom > 0.0 {
                        -dot / denom
                    } else {
                        0.0
                    }
                }
            };
            if score < best.1 {
                best = (i, score);
            }
        }
        Ok(best.0)
    }
}

/// The known word nearest to `v` by Euclidean distance; when `scaling` is
/// given, `v` is taken to be in scaled space.
pub fn nearest_word<'a>(v: &[f64], table: &'a EmbeddingTable, scaling: Option<&ScalingParams>) -> Result<&'a str> {
    let idx = Decoder::new(table, scaling, Metric::Euclidean)?.nearest(v)?;
    Ok(table.vocab().word(idx))
}
