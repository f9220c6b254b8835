use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::{FitResult, LogLikelihood};
use crate::error::{Error, Result};
use crate::optimize::{simplex_maximize, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Asymptotic,
    AsymptoticLog,
    Profile,
    Delta,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: CiMethod,
    /// The profile never crossed the cutoff below the estimate within the search bracket.
    pub lower_open: bool,
    pub upper_open: bool,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Scale on which a Wald interval is symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaldScale {
    Linear,
    /// Symmetric in `ln θ` (for positive parameters such as scales).
    Log,
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::param("level", level, "must lie in (0, 1)"))
    }
}

pub(crate) fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// `θ̂ ± z SE` from the fit's covariance.
pub fn asymptotic_ci(fit: &FitResult, index: usize, level: f64) -> Result<ConfidenceInterval> {
    asymptotic_ci_scaled(fit, index, level, WaldScale::Linear)
}

pub fn asymptotic_ci_scaled(
    fit: &FitResult,
    index: usize,
    level: f64,
    scale: WaldScale,
) -> Result<ConfidenceInterval> {
    check_level(level)?;
    let est = *fit
        .params
        .get(index)
        .ok_or_else(|| Error::Config(format!("parameter index {index} out of range")))?;
    let se = fit
        .std_error(index)
        .ok_or_else(|| Error::Degenerate("fit has no covariance matrix".into()))?;
    let z = normal_quantile(0.5 + level / 2.0);
    let (lower, upper, method) = match scale {
        WaldScale::Linear => (est - z * se, est + z * se, CiMethod::Asymptotic),
        WaldScale::Log => {
            if !(est > 0.0) {
                return Err(Error::domain(
                    "log-scale interval needs a positive estimate",
                ));
            }
            let f = (z * se / est).exp();
            (est / f, est * f, CiMethod::AsymptoticLog)
        }
    };
    Ok(ConfidenceInterval {
        estimate: est,
        lower,
        upper,
        level,
        method,
        lower_open: false,
        upper_open: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Search half-width in asymptotic standard errors.
    pub bracket_se: f64,
    /// Explicit search limits; override `bracket_se` when set.
    pub lower_limit: Option<f64>,
    pub upper_limit: Option<f64>,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            bracket_se: 20.0,
            lower_limit: None,
            upper_limit: None,
        }
    }
}

/// Profile-likelihood interval: the set of values whose profile deviance
/// `2 (l̂ - l_p(θ_i))` stays below the χ²₁ quantile at `level`.
pub fn profile_ci<L: LogLikelihood + ?Sized>(
    model: &L,
    fit: &FitResult,
    index: usize,
    level: f64,
) -> Result<ConfidenceInterval> {
    profile_ci_with(model, fit, index, level, &ProfileOptions::default())
}

pub fn profile_ci_with<L: LogLikelihood + ?Sized>(
    model: &L,
    fit: &FitResult,
    index: usize,
    level: f64,
    options: &ProfileOptions,
) -> Result<ConfidenceInterval> {
    check_level(level)?;
    if index >= fit.params.len() {
        return Err(Error::Config(format!(
            "parameter index {index} out of range"
        )));
    }
    if !fit.is_usable() {
        return Err(Error::Degenerate(format!(
            "profile needs a converged fit, status is {:?}",
            fit.status
        )));
    }
    let crit = ChiSquared::new(1.0).unwrap().inverse_cdf(level);
    let est = fit.params[index];
    let half = fit
        .std_error(index)
        .filter(|s| *s > 0.0)
        .map(|s| options.bracket_se * s)
        .unwrap_or(options.bracket_se * est.abs().max(1.0));
    let lower_limit = options.lower_limit.unwrap_or(est - half);
    let upper_limit = options.upper_limit.unwrap_or(est + half);

    let mut profiler = Profiler::new(model, fit, index);
    let (lower, lower_open) = profiler.crossing(lower_limit, crit);
    let (upper, upper_open) = profiler.crossing(upper_limit, crit);
    Ok(ConfidenceInterval {
        estimate: est,
        lower: lower.min(est),
        upper: upper.max(est),
        level,
        method: CiMethod::Profile,
        lower_open,
        upper_open,
    })
}

struct Profiler<'a, L: ?Sized> {
    model: &'a L,
    index: usize,
    mle: Vec<f64>,
    max_loglik: f64,
    warm: Vec<f64>,
}

impl<'a, L: LogLikelihood + ?Sized> Profiler<'a, L> {
    fn new(model: &'a L, fit: &FitResult, index: usize) -> Self {
        let warm = nuisance(&fit.params, index);
        Self {
            model,
            index,
            mle: fit.params.clone(),
            max_loglik: fit.loglik,
            warm,
        }
    }

    fn full(&self, value: f64, nuisance: &[f64]) -> Vec<f64> {
        let mut theta = Vec::with_capacity(nuisance.len() + 1);
        theta.extend_from_slice(&nuisance[..self.index]);
        theta.push(value);
        theta.extend_from_slice(&nuisance[self.index..]);
        theta
    }

    /// Profile log-likelihood at `value`, with the maximizing nuisance vector.
    fn evaluate(&self, value: f64) -> (f64, Vec<f64>) {
        if self.mle.len() == 1 {
            return (self.model.loglik(&[value]), Vec::new());
        }
        let mle_nuisance = nuisance(&self.mle, self.index);
        let mut starts = vec![self.warm.clone(), mle_nuisance.clone()];
        for factor in [2.0, 5.0, 20.0] {
            starts.push(mle_nuisance.iter().map(|v| v * factor).collect());
        }
        let options = SimplexOptions::default();
        let mut best = (f64::NEG_INFINITY, self.warm.clone());
        for start in starts {
            let f = |x: &[f64]| self.model.loglik(&self.full(value, x));
            if let Ok(r) = simplex_maximize(f, &start, |_| true, &options) {
                if r.max > best.0 {
                    best = (r.max, r.argmax);
                }
                // The first feasible start that ends near the optimum is usually enough.
                if best.0.is_finite() && best.0 >= self.max_loglik - 50.0 {
                    break;
                }
            }
        }
        best
    }

    fn deviance_excess(&mut self, value: f64, crit: f64) -> f64 {
        let (lp, nuis) = self.evaluate(value);
        let g = 2.0 * (self.max_loglik - lp) - crit;
        if g < 0.0 && lp.is_finite() {
            self.warm = nuis;
        }
        if g.is_nan() {
            f64::INFINITY
        } else {
            g
        }
    }

    /// Bisection between the MLE and `limit` for the deviance crossing.
    fn crossing(&mut self, limit: f64, crit: f64) -> (f64, bool) {
        let est = self.mle[self.index];
        self.warm = nuisance(&self.mle, self.index);
        if self.deviance_excess(limit, crit) <= 0.0 {
            return (limit, true);
        }
        self.warm = nuisance(&self.mle, self.index);
        let (mut inside, mut outside) = (est, limit);
        let tol = 1e-8 * (1.0 + est.abs());
        for _ in 0..200 {
            if (outside - inside).abs() <= tol {
                break;
            }
            let mid = 0.5 * (inside + outside);
            if self.deviance_excess(mid, crit) <= 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        (0.5 * (inside + outside), false)
    }
}

fn nuisance(params: &[f64], index: usize) -> Vec<f64> {
    params
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, v)| *v)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::{maximize, FitStatus};

    struct Gaussian {
        sd: [f64; 2],
        rho: f64,
    }

    impl LogLikelihood for Gaussian {
        fn param_names(&self) -> Vec<&'static str> {
            vec!["a", "b"]
        }
        fn loglik(&self, t: &[f64]) -> f64 {
            let (za, zb) = ((t[0] - 1.0) / self.sd[0], (t[1] + 3.0) / self.sd[1]);
            -0.5 * (za * za - 2.0 * self.rho * za * zb + zb * zb) / (1.0 - self.rho * self.rho)
        }
    }

    #[test]
    fn profile_equals_wald_for_quadratic_loglik() {
        let model = Gaussian {
            sd: [2.0, 0.5],
            rho: 0.6,
        };
        let fit = maximize(&model, &[vec![0.0, 0.0]]).unwrap();
        for i in 0..2 {
            let p = profile_ci(&model, &fit, i, 0.95).unwrap();
            let w = asymptotic_ci(&fit, i, 0.95).unwrap();
            assert!((p.lower - w.lower).abs() < 1e-4, "{p:?} {w:?}");
            assert!((p.upper - w.upper).abs() < 1e-4, "{p:?} {w:?}");
            assert!(!p.lower_open && !p.upper_open);
        }
    }

    fn fit_with_se(params: Vec<f64>, se: Vec<f64>) -> FitResult {
        let n = params.len();
        FitResult {
            names: (0..n).map(|i| format!("p{i}")).collect(),
            params,
            loglik: 0.0,
            covariance: Some(
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| if i == j { se[i] * se[i] } else { 0.0 })
                            .collect()
                    })
                    .collect(),
            ),
            status: FitStatus::Converged,
            iterations: 0,
        }
    }

    #[test]
    fn asymptotic_intervals_from_reference_standard_errors() {
        // standard errors implied by the reference Wald intervals
        let z = normal_quantile(0.975);
        let se_xi = (1.69 - 0.189) / (2.0 * z);
        let se_log_beta = (27.7f64 / 6.01).ln() / (2.0 * z);
        let fit = fit_with_se(vec![0.938, 12.9], vec![se_xi, se_log_beta * 12.9]);
        let xi = asymptotic_ci(&fit, 0, 0.95).unwrap();
        assert!((xi.lower - 0.189).abs() < 0.005 && (xi.upper - 1.69).abs() < 0.005);
        let beta = asymptotic_ci_scaled(&fit, 1, 0.95, WaldScale::Log).unwrap();
        assert!(
            (beta.lower - 6.01).abs() < 0.05 && (beta.upper - 27.7).abs() < 0.1,
            "{beta:?}"
        );
        assert_eq!(beta.method, CiMethod::AsymptoticLog);
    }

    #[test]
    fn zero_variance_gives_degenerate_interval() {
        let fit = fit_with_se(vec![2.5], vec![0.0]);
        let ci = asymptotic_ci(&fit, 0, 0.95).unwrap();
        assert_eq!((ci.lower, ci.upper), (2.5, 2.5));
    }

    #[test]
    fn open_ended_profile_is_flagged() {
        // flat in `a` beyond the bracket: deviance never reaches the cutoff
        struct Flat;
        impl LogLikelihood for Flat {
            fn param_names(&self) -> Vec<&'static str> {
                vec!["a"]
            }
            fn loglik(&self, t: &[f64]) -> f64 {
                -1e-6 * t[0] * t[0]
            }
        }
        let fit = fit_with_se(vec![0.0], vec![1.0]);
        let ci = profile_ci(&Flat, &fit, 0, 0.95).unwrap();
        assert!(ci.lower_open && ci.upper_open);
        assert_eq!((ci.lower, ci.upper), (-20.0, 20.0));
    }

    #[test]
    fn bad_level_rejected() {
        let fit = fit_with_se(vec![0.0], vec![1.0]);
        assert!(asymptotic_ci(&fit, 0, 1.5).is_err());
    }
}
