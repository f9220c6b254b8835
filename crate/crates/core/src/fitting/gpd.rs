use serde::{Deserialize, Serialize};

use super::{maximize, FitResult, FitStatus, LogLikelihood};
use crate::distributions::{GpdParams, SHAPE_ZERO_TOL};
use crate::error::{Error, Result};
use crate::fitting::poisson_count_loglik;

/// Exceedances of a threshold, stored as excesses `Y_j = X_j - u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessSample {
    threshold: f64,
    excesses: Vec<f64>,
    span_years: f64,
}

impl ExcessSample {
    pub fn new(threshold: f64, excesses: Vec<f64>, span_years: f64) -> Result<Self> {
        if let Some(&y) = excesses.iter().find(|y| !(**y > 0.0 && y.is_finite())) {
            return Err(Error::param(
                "excess",
                y,
                "excesses must be positive and finite",
            ));
        }
        if !(span_years > 0.0) {
            return Err(Error::param("span_years", span_years, "must be positive"));
        }
        Ok(Self {
            threshold,
            excesses,
            span_years,
        })
    }

    /// Keep the observations strictly above `threshold`.
    pub fn from_observations(
        observations: &[f64],
        threshold: f64,
        span_years: f64,
    ) -> Result<Self> {
        let excesses = observations
            .iter()
            .filter(|&&x| x > threshold)
            .map(|&x| x - threshold)
            .collect();
        Self::new(threshold, excesses, span_years)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn excesses(&self) -> &[f64] {
        &self.excesses
    }

    pub fn span_years(&self) -> f64 {
        self.span_years
    }

    /// Number of exceedances `N_u`.
    pub fn count(&self) -> usize {
        self.excesses.len()
    }
}

/// `-N ln β - (1 + 1/ξ) Σ ln(1 + ξ y / β)`, or `-inf` off the feasible set.
pub(crate) fn gpd_loglik_raw(shape: f64, scale: f64, excesses: &[f64]) -> f64 {
    if !(scale > 0.0) || !shape.is_finite() {
        return f64::NEG_INFINITY;
    }
    let n = excesses.len() as f64;
    if shape.abs() < SHAPE_ZERO_TOL {
        return -n * scale.ln() - excesses.iter().sum::<f64>() / scale;
    }
    let mut acc = 0.0;
    for &y in excesses {
        let t = shape * y / scale;
        if t <= -1.0 {
            return f64::NEG_INFINITY;
        }
        acc += t.ln_1p();
    }
    -n * scale.ln() - (1.0 + 1.0 / shape) * acc
}

/// GPD log-likelihood of the excesses.
pub fn gpd_loglik(params: &GpdParams, sample: &ExcessSample) -> f64 {
    gpd_loglik_raw(params.shape, params.scale, &sample.excesses)
}

/// Log-likelihood of the marked Poisson process: Poisson count of
/// exceedances over the observation span plus independent GPD marks.
pub fn marked_process_loglik(rate_per_year: f64, params: &GpdParams, sample: &ExcessSample) -> f64 {
    poisson_count_loglik(sample.count() as u64, rate_per_year * sample.span_years)
        + gpd_loglik(params, sample)
}

/// `(ξ, β)` likelihood over a set of excesses, restricted to `ξ > -1`
/// where the likelihood is bounded.
#[derive(Debug, Clone, Copy)]
pub struct GpdLikelihood<'a> {
    pub excesses: &'a [f64],
}

impl LogLikelihood for GpdLikelihood<'_> {
    fn param_names(&self) -> Vec<&'static str> {
        vec!["xi", "beta"]
    }

    fn loglik(&self, theta: &[f64]) -> f64 {
        if theta[0] <= -1.0 {
            return f64::NEG_INFINITY;
        }
        gpd_loglik_raw(theta[0], theta[1], self.excesses)
    }
}

fn moment_start(excesses: &[f64]) -> (f64, f64) {
    let n = excesses.len() as f64;
    let mean = excesses.iter().sum::<f64>() / n;
    let var = excesses.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let xi = (0.5 * (1.0 - mean * mean / var)).clamp(-0.45, 0.45);
    (xi, mean * (1.0 - xi))
}

/// Maximum-likelihood GPD fit; requires at least five exceedances.
pub fn fit_gpd(sample: &ExcessSample) -> Result<FitResult> {
    let ys = sample.excesses();
    if ys.len() < 5 {
        return Err(Error::InsufficientData {
            needed: 5,
            got: ys.len(),
        });
    }
    let model = GpdLikelihood { excesses: ys };
    let max = ys.iter().copied().fold(f64::MIN, f64::max);
    let min = ys.iter().copied().fold(f64::MAX, f64::min);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    if max - min <= 1e-12 * max {
        return Ok(FitResult {
            names: model.param_names().iter().map(|s| s.to_string()).collect(),
            params: vec![0.0, mean],
            loglik: model.loglik(&[0.0, mean]),
            covariance: None,
            status: FitStatus::Degenerate,
            iterations: 0,
        });
    }
    let (xi0, beta0) = moment_start(ys);
    let starts = vec![
        vec![xi0, beta0],
        vec![0.1, 0.9 * mean],
        vec![0.5, 0.5 * mean],
        vec![0.9, 0.2 * mean],
    ];
    let mut fit = maximize(&model, &starts)?;
    if fit.status == FitStatus::Converged && fit.params[0] < -0.5 {
        // Below -1/2 the MLE loses its usual asymptotics; at -1 the likelihood is unbounded.
        fit.status = FitStatus::Boundary;
    }
    Ok(fit)
}
