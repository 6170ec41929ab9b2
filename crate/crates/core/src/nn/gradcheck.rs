//! Central finite-difference checks of analytic parameter gradients.

use ndarray::Array2;

use super::params::ParamSet;

pub const FD_STEP: f64 = 1e-5;

/// Relative errors use `max(|a|, |n|, floor)` as the denominator so that
/// near-zero components are compared absolutely.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(tensor name, max relative error in that tensor)`.
    pub per_param_errors: Vec<(String, f64)>,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error <= tol
    }

    pub fn merge(mut self, other: GradCheckReport) -> GradCheckReport {
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
        self.per_param_errors.extend(other.per_param_errors);
        self
    }
}

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compare `analytic` against central differences of `loss` over every
/// element of `params`. Names in the report get `prefix` prepended.
pub fn check_gradients<F>(prefix: &str, params: &ParamSet, analytic: &[Array2<f64>], mut loss: F) -> GradCheckReport
where
    F: FnMut(&ParamSet) -> f64,
{
    assert_eq!(params.len(), analytic.len());
    let mut probe = params.clone();
    let mut per = Vec::with_capacity(params.len());
    let mut worst = 0.0f64;
    for (i, g) in analytic.iter().enumerate() {
        let mut max_err = 0.0f64;
        for (idx, a) in g.indexed_iter() {
            let orig = probe.tensors[i].1[idx];
            probe.tensors[i].1[idx] = orig + FD_STEP;
            let up = loss(&probe);
            probe.tensors[i].1[idx] = orig - FD_STEP;
            let down = loss(&probe);
            probe.tensors[i].1[idx] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            max_err = max_err.max(rel_error(*a, numeric));
        }
        worst = worst.max(max_err);
        per.push((format!("{prefix}{}", params.tensors[i].0), max_err));
    }
    GradCheckReport { max_rel_error: worst, per_param_errors: per }
}
