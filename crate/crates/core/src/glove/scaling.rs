use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glove::table::EmbeddingTable;

/// Per-dimension min-max map of the embedding space onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingParams {
    /// Fits over every row of `table`, OOV included.
    pub fn fit(table: &EmbeddingTable) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::NoData("min-max scaling needs at least 2 words".into()));
        }
        let d = table.dim();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for row in table.rows() {
            for k in 0..d {
                min[k] = min[k].min(row[k]);
                max[k] = max[k].max(row[k]);
            }
        }
        let s = Self { min, max };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min.len() != self.max.len() {
            return Err(Error::Format("scaling min and max differ in length".into()));
        }
        match self.min.iter().zip(&self.max).position(|(lo, hi)| !(hi > lo)) {
            Some(k) => Err(Error::DegenerateDimension(k)),
            None => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::ShapeMismatch { op: "scaling", left: vec![self.dim()], right: vec![v.len()] });
        }
        Ok(())
    }

    pub fn scale(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(v.iter().zip(self.min.iter().zip(&self.max)).map(|(x, (lo, hi))| (x - lo) / (hi - lo)).collect())
    }

    pub fn unscale(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        Ok(u.iter().zip(self.min.iter().zip(&self.max)).map(|(x, (lo, hi))| lo + x * (hi - lo)).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.validate()?;
        Ok(p)
    }
}

/// Fits min-max parameters to `table`.
pub fn fit_minmax(table: &EmbeddingTable) -> Result<ScalingParams> {
    ScalingParams::fit(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use proptest::prelude::*;

    fn table(rows: &[[f64; 2]]) -> EmbeddingTable {
        let words = (0..rows.len()).map(|i| format!("w{i}")).collect();
        let vocab = Vocabulary::from_words(words).unwrap();
        EmbeddingTable::with_mean_oov(vocab, 2, rows.iter().flatten().copied().collect()).unwrap()
    }

    #[test]
    fn midpoint_and_bounds() {
        let s = fit_minmax(&table(&[[-2.0, 1.0], [2.0, 3.0], [0.0, 2.5]])).unwrap();
        assert_eq!(s.scale(&[0.0, 1.0]).unwrap(), vec![0.5, 0.0]);
        assert_eq!(s.scale(&[-2.0, 1.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(s.scale(&[2.0, 3.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn constant_dimension_named() {
        let err = fit_minmax(&table(&[[1.0, 5.0], [2.0, 5.0]])).unwrap_err();
        assert!(matches!(err, Error::DegenerateDimension(1)));
        assert!(fit_minmax(&table(&[])).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(rows in prop::collection::vec(prop::array::uniform2(-5.0f64..5.0), 3..20), u in prop::array::uniform2(0.0f64..1.0)) {
            prop_assume!(rows.iter().any(|r| r[0] != rows[0][0]) && rows.iter().any(|r| r[1] != rows[0][1]));
            let t = table(&rows);
            let s = fit_minmax(&t).unwrap();
            for row in t.rows() {
                let scaled = s.scale(row).unwrap();
                prop_assert!(scaled.iter().all(|x| (0.0..=1.0).contains(x)));
                let back = s.unscale(&scaled).unwrap();
                for (a, b) in back.iter().zip(row) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
            let there = s.scale(&s.unscale(&u).unwrap()).unwrap();
            for (a, b) in there.iter().zip(&u) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
