//! Scalar losses: binary and categorical cross-entropy.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-7;

fn check_label(y: f64) -> Result<()> {
    if y == 0.0 || y == 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("binary label must be 0 or 1, got {y}")))
    }
}

/// Non-negative binary cross-entropy `-[y ln x + (1-y) ln(1-x)]`.
pub fn bce_loss(x: f64, y: f64) -> Result<f64> {
    check_label(y)?;
    if !x.is_finite() {
        return Err(Error::NonFinite("bce prediction".into()));
    }
    let p = x.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    Ok(-(y * p.ln() + (1.0 - y) * (1.0 - p).ln()))
}

/// d bce / d x. Zero outside the clamp window.
pub fn bce_grad(x: f64, y: f64) -> Result<f64> {
    check_label(y)?;
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&x) {
        return Ok(0.0);
    }
    Ok(-y / x + (1.0 - y) / (1.0 - x))
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - max - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// `-log softmax(logits)[class]`.
pub fn cross_entropy(logits: &Tensor, class: usize) -> Result<f64> {
    let z = logits.values();
    if z.len() < 2 {
        return Err(Error::InvalidArgument(format!("cross-entropy needs at least 2 classes, got {}", z.len())));
    }
    if class >= z.len() {
        return Err(Error::InvalidArgument(format!("class {class} out of range for {} logits", z.len())));
    }
    Ok(-log_softmax(z)[class])
}

/// `softmax(logits) - onehot(class)`.
pub fn cross_entropy_grad(logits: &Tensor, class: usize) -> Result<Tensor> {
    cross_entropy(logits, class)?;
    let mut g = softmax(logits.values());
    g[class] -= 1.0;
    Ok(Tensor::from_parts(logits.shape().to_vec(), g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bce_values() {
        assert_abs_diff_eq!(bce_loss(1.0, 1.0).unwrap(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(bce_loss(0.5, 1.0).unwrap(), std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(bce_loss(0.2, 0.0).unwrap(), 0.223_143_551_314_209_7, epsilon = 1e-12);
        assert!(bce_loss(0.0, 1.0).unwrap().is_finite());
        assert!(bce_loss(0.3, 0.5).is_err());
    }

    #[test]
    fn cross_entropy_values() {
        let z = Tensor::vector(vec![0.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(cross_entropy(&z, 0).unwrap(), 3f64.ln(), epsilon = 1e-12);
        let big = Tensor::vector(vec![1000.0, 0.0, 0.0]).unwrap();
        let l = cross_entropy(&big, 0).unwrap();
        assert!(l.is_finite() && l.abs() < 1e-12);
        assert!(cross_entropy(&z, 3).is_err());
        assert!(cross_entropy(&Tensor::vector(vec![1.0]).unwrap(), 0).is_err());
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[3.0, -1.0, 0.5, 700.0]);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }
}
