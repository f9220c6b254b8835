use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use super::{CiMethod, ConfidenceInterval};
use crate::error::{Error, Result};

/// `k ln m - m - ln k!`.
pub fn poisson_count_loglik(count: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if count == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if !(mean > 0.0) {
        return f64::NEG_INFINITY;
    }
    let k = count as f64;
    k * mean.ln() - mean - ln_gamma(k + 1.0)
}

/// Annual Poisson intensity `count / span` with the exact (chi-square)
/// interval for the count, scaled by the span.
pub fn fit_poisson_intensity(
    count: u64,
    span_years: f64,
    level: f64,
) -> Result<(f64, ConfidenceInterval)> {
    if !(span_years > 0.0) {
        return Err(Error::param("span_years", span_years, "must be positive"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", level, "must lie in (0, 1)"));
    }
    let alpha = 1.0 - level;
    let k = count as f64;
    let lower = if count == 0 {
        0.0
    } else {
        chi2_quantile(alpha / 2.0, 2.0 * k) / 2.0
    };
    let upper = chi2_quantile(1.0 - alpha / 2.0, 2.0 * k + 2.0) / 2.0;
    let rate = k / span_years;
    Ok((
        rate,
        ConfidenceInterval {
            estimate: rate,
            lower: lower / span_years,
            upper: upper / span_years,
            level,
            method: CiMethod::Exact,
            lower_open: false,
            upper_open: false,
        },
    ))
}

fn chi2_quantile(p: f64, dof: f64) -> f64 {
    ChiSquared::new(dof)
        .expect("positive degrees of freedom")
        .inverse_cdf(p)
}
