//! Maximum-likelihood estimation and confidence intervals.

mod gpd;
mod intervals;
mod negbin;
mod poisson;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub(crate) use gpd::gpd_loglik_raw;
pub use gpd::{fit_gpd, gpd_loglik, marked_process_loglik, ExcessSample, GpdLikelihood};
pub use intervals::{
    asymptotic_ci, asymptotic_ci_scaled, profile_ci, profile_ci_with, CiMethod, ConfidenceInterval,
    ProfileOptions, WaldScale,
};
pub(crate) use intervals::{check_level, normal_quantile};
pub use negbin::{fit_truncated_negbin, TruncatedNegBinLikelihood};
pub use poisson::{fit_poisson_intensity, poisson_count_loglik};

use crate::error::Result;
use crate::optimize::{simplex_maximize, SimplexOptions};

/// A log-likelihood over a flat parameter vector.
///
/// Infeasible parameter vectors must evaluate to `-inf`.
pub trait LogLikelihood {
    fn param_names(&self) -> Vec<&'static str>;

    fn loglik(&self, theta: &[f64]) -> f64;

    fn dim(&self) -> usize {
        self.param_names().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    /// The simplex hit its iteration limit.
    NotConverged,
    /// The data cannot identify the parameters (e.g. zero variance).
    Degenerate,
    /// The maximum sits on or near the edge of the parameter space.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    pub loglik: f64,
    /// Inverse observed information; `None` when the Hessian is not negative definite.
    pub covariance: Option<Vec<Vec<f64>>>,
    pub status: FitStatus,
    pub iterations: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.params[i])
    }

    pub fn std_error(&self, index: usize) -> Option<f64> {
        self.covariance
            .as_ref()
            .map(|c| c[index][index].max(0.0).sqrt())
    }

    pub fn is_usable(&self) -> bool {
        matches!(self.status, FitStatus::Converged | FitStatus::Boundary)
    }
}

/// Maximize `model` from each of `starts`, keeping the best optimum, and
/// attach the observed-information covariance.
pub fn maximize<L: LogLikelihood + ?Sized>(model: &L, starts: &[Vec<f64>]) -> Result<FitResult> {
    let options = SimplexOptions::default();
    let mut best: Option<crate::optimize::SimplexResult> = None;
    let mut last_err = None;
    for start in starts {
        match simplex_maximize(|t| model.loglik(t), start, |_| true, &options) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.max > b.max) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let best = match (best, last_err) {
        (Some(b), _) => b,
        (None, Some(e)) => return Err(e),
        (None, None) => {
            return Err(crate::Error::Config("no starting points supplied".into()));
        }
    };
    let covariance = observed_covariance(model, &best.argmax);
    Ok(FitResult {
        names: model.param_names().iter().map(|s| s.to_string()).collect(),
        params: best.argmax,
        loglik: best.max,
        covariance,
        status: if best.converged {
            FitStatus::Converged
        } else {
            FitStatus::NotConverged
        },
        iterations: best.iterations,
    })
}

/// Central finite-difference Hessian with steps `1e-5 (1 + |θ_i|)`.
pub fn numerical_hessian<L: LogLikelihood + ?Sized>(model: &L, theta: &[f64]) -> DMatrix<f64> {
    let n = theta.len();
    let h: Vec<f64> = theta.iter().map(|t| 1e-5 * (1.0 + t.abs())).collect();
    let f = |d: &[(usize, f64)]| {
        let mut x = theta.to_vec();
        for &(i, s) in d {
            x[i] += s;
        }
        model.loglik(&x)
    };
    let f0 = model.loglik(theta);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let fp = f(&[(i, h[i])]);
        let fm = f(&[(i, -h[i])]);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let fpp = f(&[(i, h[i]), (j, h[j])]);
            let fpm = f(&[(i, h[i]), (j, -h[j])]);
            let fmp = f(&[(i, -h[i]), (j, h[j])]);
            let fmm = f(&[(i, -h[i]), (j, -h[j])]);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

fn observed_covariance<L: LogLikelihood + ?Sized>(
    model: &L,
    theta: &[f64],
) -> Option<Vec<Vec<f64>>> {
    let info = -numerical_hessian(model, theta);
    if info.iter().any(|v| !v.is_finite()) {
        return None;
    }
    // Cholesky succeeds only for positive-definite information.
    let cov = info.cholesky()?.inverse();
    let n = theta.len();
    Some(
        (0..n)
            .map(|i| (0..n).map(|j| 0.5 * (cov[(i, j)] + cov[(j, i)])).collect())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic;
    impl LogLikelihood for Quadratic {
        fn param_names(&self) -> Vec<&'static str> {
            vec!["a", "b"]
        }
        fn loglik(&self, t: &[f64]) -> f64 {
            -0.5 * ((t[0] - 1.0).powi(2) / 4.0 + (t[1] - 2.0).powi(2) / 0.25)
        }
    }

    #[test]
    fn covariance_of_gaussian_loglik() {
        let fit = maximize(&Quadratic, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(fit.status, FitStatus::Converged);
        let c = fit.covariance.unwrap();
        assert!((c[0][0] - 4.0).abs() < 1e-3);
        assert!((c[1][1] - 0.25).abs() < 1e-4);
        assert!(c[0][1].abs() < 1e-4);
        assert_eq!(c[0][1], c[1][0]);
    }
}
