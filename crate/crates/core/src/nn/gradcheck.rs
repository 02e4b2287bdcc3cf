//! Central finite-difference gradient checking.

use crate::error::Result;
use crate::tensor::Tensor;

/// Large enough that roundoff in `L` stays well below near-zero gradients;
/// truncation error is still around 1e-9 relative.
pub const DEFAULT_PROBE_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// (parameter index, entry index) of the worst entry.
    pub worst: Option<(usize, usize)>,
    pub entries: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares the analytic gradient returned by `loss_fn` at `params` against
/// `(L(θ+ε) - L(θ-ε)) / 2ε` for every entry of every parameter.
///
/// `loss_fn` returns the loss and one gradient tensor per parameter.
pub fn gradient_check<F>(mut loss_fn: F, params: &[Tensor], probe_eps: f64) -> Result<GradCheckReport>
where
    F: FnMut(&[Tensor]) -> Result<(f64, Vec<Tensor>)>,
{
    let (_, analytic) = loss_fn(params)?;
    let mut probe = params.to_vec();
    let mut report = GradCheckReport { max_rel_error: 0.0, worst: None, entries: 0 };
    for (pi, grad) in analytic.iter().enumerate() {
        for ei in 0..params[pi].len() {
            let orig = params[pi].values()[ei];
            probe[pi].values_mut()[ei] = orig + probe_eps;
            let (plus, _) = loss_fn(&probe)?;
            probe[pi].values_mut()[ei] = orig - probe_eps;
            let (minus, _) = loss_fn(&probe)?;
            probe[pi].values_mut()[ei] = orig;

            let numeric = (plus - minus) / (2.0 * probe_eps);
            let err = relative_error(grad.values()[ei], numeric);
            report.entries += 1;
            if report.worst.is_none() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((pi, ei));
            }
        }
    }
    Ok(report)
}
