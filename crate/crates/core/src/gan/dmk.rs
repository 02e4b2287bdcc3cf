use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::gan::config::{DeltaSpace, KeywordSet};
use crate::glove::{EmbeddingTable, ScalingParams};
use crate::nn::loss::bce_loss;
use crate::tensor::Tensor;

/// Keyword vectors resolved against a table, ready for the `δ` term.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordTarget {
    /// One vector per keyword.
    pub vectors: Vec<Vec<f64>>,
    /// Their sum.
    pub total: Vec<f64>,
}

impl KeywordTarget {
    /// Errors on a keyword with no vector of its own (OOV).
    pub fn resolve(
        keywords: &KeywordSet,
        table: &EmbeddingTable,
        scaling: &ScalingParams,
        space: DeltaSpace,
    ) -> Result<Self> {
        let mut vectors = Vec::with_capacity(keywords.len());
        for w in &keywords.words {
            let idx = table.vocab().get(w).ok_or_else(|| Error::UnknownKeyword(w.clone()))?;
            let raw = table.vector(idx);
            vectors.push(match space {
                DeltaSpace::Scaled => scaling.scale(raw)?,
                DeltaSpace::Raw => raw.to_vec(),
            });
        }
        let mut total = vec![0.0; table.dim()];
        for v in &vectors {
            for (t, x) in total.iter_mut().zip(v) {
                *t += x;
            }
        }
        Ok(Self { vectors, total })
    }

    pub fn dim(&self) -> usize {
        self.total.len()
    }

    /// `Σ_i Σ_j g_j · e(k_i)` over the slots of `g`.
    pub fn delta(&self, g: &[f64]) -> Result<f64> {
        let d = self.dim();
        if d == 0 || !g.len().is_multiple_of(d) {
            return Err(Error::ShapeMismatch { op: "delta_attention", left: vec![g.len()], right: vec![d] });
        }
        let mut total = 0.0;
        for e in &self.vectors {
            for slot in g.chunks(d) {
                total += slot.iter().zip(e).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        Ok(total)
    }

    /// `δ` on the graph, as `g · tile(Σ_i e(k_i))`.
    pub fn delta_graph(&self, graph: &mut Graph, g: Var) -> Result<Var> {
        let n = graph.value(g).len();
        let d = self.dim();
        if d == 0 || !n.is_multiple_of(d) {
            return Err(Error::ShapeMismatch { op: "delta_attention", left: vec![n], right: vec![d] });
        }
        let tiled: Vec<f64> = self.total.iter().copied().cycle().take(n).collect();
        let k = graph.input(Tensor::new(vec![n], tiled)?);
        graph.dot(g, k)
    }
}

/// `δ(g, k)` with keyword vectors taken in scaled space.
pub fn delta_attention(
    g: &Tensor,
    keywords: &KeywordSet,
    table: &EmbeddingTable,
    scaling: &ScalingParams,
) -> Result<f64> {
    KeywordTarget::resolve(keywords, table, scaling, DeltaSpace::Scaled)?.delta(g.values())
}

/// `BCE(pred, label) - γ δ`.
pub fn dmk_loss(pred: f64, label: f64, delta: f64, gamma: f64) -> Result<f64> {
    Ok(bce_loss(pred, label)? - gamma * delta)
}
