//! JSON parameter checkpoints: `{ name: { shape, values } }`.
//!
//! Values are written in shortest round-trip decimal form, so a save/load
//! cycle is bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::param::ParamSet;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

pub type Checkpoint = BTreeMap<String, Entry>;

/// Adds every parameter of `params` to `ckpt`, with names prefixed by
/// `prefix` (empty for none).
pub fn export(ckpt: &mut Checkpoint, prefix: &str, params: &ParamSet) {
    for p in params.iter() {
        ckpt.insert(
            format!("{prefix}{}", p.name),
            Entry { shape: p.tensor.shape().to_vec(), values: p.tensor.values().to_vec() },
        );
    }
}

/// Loads the tensors named `prefix + name` into `params`; every parameter
/// must be present with a matching shape.
pub fn import(ckpt: &Checkpoint, prefix: &str, params: &mut ParamSet) -> Result<()> {
    let mut tensors = Vec::with_capacity(params.len());
    for p in params.iter() {
        let key = format!("{prefix}{}", p.name);
        let e = ckpt.get(&key).ok_or_else(|| Error::Format(format!("checkpoint is missing `{key}`")))?;
        tensors.push(Tensor::new(e.shape.clone(), e.values.clone())?);
    }
    params.set_tensors(tensors)
}

pub fn to_json(ckpt: &Checkpoint) -> Result<String> {
    Ok(serde_json::to_string_pretty(ckpt)?)
}

pub fn from_json(s: &str) -> Result<Checkpoint> {
    Ok(serde_json::from_str(s)?)
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    from_json(&std::fs::read_to_string(path)?)
}

/// Shape of a named entry, used to recover layer widths from a checkpoint.
pub fn shape_of<'a>(ckpt: &'a Checkpoint, key: &str) -> Result<&'a [usize]> {
    ckpt.get(key).map(|e| e.shape.as_slice()).ok_or_else(|| Error::Format(format!("checkpoint is missing `{key}`")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(values in prop::collection::vec(-1e12f64..1e12, 1..40)) {
            let mut ps = ParamSet::new();
            ps.push("w", Tensor::vector(values.clone()).unwrap());
            ps.push("tiny", Tensor::vector(values.iter().map(|v| v * 1e-290).collect()).unwrap());
            let mut ckpt = Checkpoint::new();
            export(&mut ckpt, "m.", &ps);
            let back = from_json(&to_json(&ckpt).unwrap()).unwrap();
            let mut restored = ps.clone();
            restored.zero_grad();
            for p in restored.iter_mut() {
                p.tensor = Tensor::zeros(p.tensor.shape());
            }
            import(&back, "m.", &mut restored).unwrap();
            for (a, b) in ps.iter().zip(restored.iter()) {
                let ab: Vec<u64> = a.tensor.values().iter().map(|v| v.to_bits()).collect();
                let bb: Vec<u64> = b.tensor.values().iter().map(|v| v.to_bits()).collect();
                prop_assert_eq!(ab, bb);
            }
        }
    }

    #[test]
    fn missing_entry_is_an_error() {
        let mut ps = ParamSet::new();
        ps.push("w", Tensor::zeros(&[2]));
        assert!(import(&Checkpoint::new(), "", &mut ps).is_err());
    }
}
