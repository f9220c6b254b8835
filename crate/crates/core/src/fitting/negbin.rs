use super::{maximize, FitResult, FitStatus, LogLikelihood};
use crate::distributions::NegBinParams;
use crate::error::{Error, Result};

/// Negative binomial likelihood for counts observed only above `lower`,
/// i.e. conditioned on `N > lower`. Parameters are `(r, p)`.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedNegBinLikelihood<'a> {
    pub counts: &'a [u64],
    pub lower: u64,
}

impl LogLikelihood for TruncatedNegBinLikelihood<'_> {
    fn param_names(&self) -> Vec<&'static str> {
        vec!["r", "p"]
    }

    fn loglik(&self, theta: &[f64]) -> f64 {
        let Ok(nb) = NegBinParams::new(theta[0], theta[1]) else {
            return f64::NEG_INFINITY;
        };
        let tail = nb.sf_at(self.lower);
        if !(tail > 0.0) {
            return f64::NEG_INFINITY;
        }
        let n = self.counts.len() as f64;
        self.counts.iter().map(|&k| nb.ln_pmf(k)).sum::<f64>() - n * tail.ln()
    }
}

/// Fit `(r, p)` to counts that were only recorded when they exceed `lower`.
pub fn fit_truncated_negbin(counts: &[u64], lower: u64) -> Result<FitResult> {
    if counts.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if let Some(&k) = counts.iter().find(|&&k| k <= lower) {
        return Err(Error::domain(format!(
            "count {k} is not above the truncation point {lower}"
        )));
    }
    let model = TruncatedNegBinLikelihood { counts, lower };
    if counts.iter().all(|&k| k == counts[0]) {
        // A single repeated value pushes the conditional mass onto one point: p -> 1.
        let theta = [1.0, 1.0 - 1e-9];
        return Ok(FitResult {
            names: model.param_names().iter().map(|s| s.to_string()).collect(),
            params: theta.to_vec(),
            loglik: model.loglik(&theta),
            covariance: None,
            status: FitStatus::Boundary,
            iterations: 0,
        });
    }

    let n = counts.len() as f64;
    let mean = counts.iter().map(|&k| k as f64).sum::<f64>() / n;
    let var = counts
        .iter()
        .map(|&k| (k as f64 - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0).max(1.0);
    let mut starts = vec![vec![1.0, 0.2], vec![2.0, 0.3], vec![0.5, 0.1]];
    if var > mean {
        let p = (mean / var).clamp(0.01, 0.99);
        starts.insert(0, vec![(mean * p / (1.0 - p)).max(0.05), p]);
    }
    let mut fit = maximize(&model, &starts)?;
    let (r, p) = (fit.params[0], fit.params[1]);
    if fit.status == FitStatus::Converged && (p > 1.0 - 1e-6 || p < 1e-6 || r < 1e-6 || r > 1e6) {
        fit.status = FitStatus::Boundary;
    }
    Ok(fit)
}
