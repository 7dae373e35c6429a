//! Central finite-difference gradient checker.

use super::Tensor;

/// Outcome of comparing analytic gradients against finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// `(tensor index, element index)` of the worst entry.
    pub worst: (usize, usize),
}

/// Denominator floor for the relative error; below it the check is absolute.
pub const REL_ERROR_FLOOR: f64 = 1e-5;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Perturbs every entry of `params` by `±step` and compares
/// `(f(+) - f(-)) / 2 step` with `analytic`.
pub fn check_gradients<F>(mut loss: F, params: &mut [Tensor], analytic: &[Tensor], step: f64) -> GradCheckReport
where
    F: FnMut(&[Tensor]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "one gradient per parameter tensor");
    let mut report = GradCheckReport { checked: 0, max_rel_error: 0.0, worst: (0, 0) };
    for t in 0..params.len() {
        assert_eq!(params[t].shape(), analytic[t].shape(), "gradient {t} shape");
        for e in 0..params[t].len() {
            let orig = params[t].data()[e];
            params[t].data_mut()[e] = orig + step;
            let plus = loss(params);
            params[t].data_mut()[e] = orig - step;
            let minus = loss(params);
            params[t].data_mut()[e] = orig;
            let numeric = (plus - minus) / (2.0 * step);
            let err = relative_error(analytic[t].data()[e], numeric);
            report.checked += 1;
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = (t, e);
            }
        }
    }
    report
}
