//! Return levels, return periods, VaR and expected shortfall for a
//! threshold model: exceedances of `u` arrive as a Poisson process with
//! annual rate `λ_u` and carry GPD excesses.

use serde::{Deserialize, Serialize};

use crate::distributions::{GpdParams, SHAPE_ZERO_TOL};
use crate::error::{Error, Result};
use crate::fitting::{
    gpd_loglik, maximize, profile_ci_with, CiMethod, ConfidenceInterval, ExcessSample, FitStatus,
    LogLikelihood, ProfileOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    pub threshold: f64,
    pub gpd: GpdParams,
    /// Annual exceedance intensity `λ_u`.
    pub rate: f64,
}

impl TailModel {
    pub fn new(threshold: f64, gpd: GpdParams, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::param("rate", rate, "must be positive and finite"));
        }
        Ok(Self {
            threshold,
            gpd,
            rate,
        })
    }

    /// `P(X > u) = 1 - exp(-λ_u)`.
    pub fn exceedance_prob(&self) -> f64 {
        -(-self.rate).exp_m1()
    }

    /// `P(X > x)` for `x >= u`.
    pub fn tail_prob(&self, x: f64) -> Result<f64> {
        if x < self.threshold {
            return Err(Error::domain(format!(
                "level {x} lies below the threshold {}",
                self.threshold
            )));
        }
        Ok(self.exceedance_prob() * self.gpd.sf(x - self.threshold))
    }
}

/// `u + (β/ξ) [((1-α)/p̄)^(-ξ) - 1]`, the `α`-quantile above the threshold.
fn quantile_above(threshold: f64, shape: f64, scale: f64, pbar: f64, alpha: f64) -> f64 {
    let log_ratio = ((1.0 - alpha) / pbar).ln();
    if shape.abs() < SHAPE_ZERO_TOL {
        threshold - scale * log_ratio
    } else {
        threshold + scale / shape * (-shape * log_ratio).exp_m1()
    }
}

fn check_alpha(alpha: f64, m: &TailModel) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "confidence level {alpha} outside (0, 1)"
        )));
    }
    let pbar = m.exceedance_prob();
    // allow α = 1 - p̄ up to rounding, where the quantile is the threshold itself
    if 1.0 - alpha > pbar * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "level {alpha} falls below the threshold: 1 - α = {} exceeds P(X > u) = {pbar}",
            1.0 - alpha
        )));
    }
    Ok(())
}

/// Value-at-Risk at confidence level `alpha`.
pub fn var(alpha: f64, m: &TailModel) -> Result<f64> {
    check_alpha(alpha, m)?;
    let pbar = m.exceedance_prob();
    let alpha = alpha.max(1.0 - pbar);
    Ok(quantile_above(
        m.threshold,
        m.gpd.shape,
        m.gpd.scale,
        pbar,
        alpha,
    ))
}

/// Expected shortfall `VaR/(1-ξ) + (β - ξu)/(1-ξ)`; undefined for `ξ >= 1`.
pub fn es(alpha: f64, m: &TailModel) -> Result<f64> {
    let xi = m.gpd.shape;
    if xi >= 1.0 {
        return Err(Error::domain(format!(
            "expected shortfall needs a finite mean, but ξ = {xi} >= 1"
        )));
    }
    let v = var(alpha, m)?;
    Ok(v / (1.0 - xi) + (m.gpd.scale - xi * m.threshold) / (1.0 - xi))
}

/// The `t`-year return level, `VaR_{1 - 1/t}`.
pub fn return_level(period: f64, m: &TailModel) -> Result<f64> {
    if !(period > 1.0) {
        return Err(Error::domain(format!(
            "return period {period} must exceed 1 year"
        )));
    }
    var(1.0 - 1.0 / period, m).map_err(|_| {
        Error::domain(format!(
            "return period {period} is shorter than the threshold's own return period {:.4}",
            1.0 / m.exceedance_prob()
        ))
    })
}

/// Mean recurrence time of an event larger than `x`.
pub fn return_period(x: f64, m: &TailModel) -> Result<f64> {
    Ok(1.0 / m.tail_prob(x)?)
}

/// Round to `digits` significant figures.
pub fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - mag);
    (x * factor).round() / factor
}

/// Joint covariance of `(λ_u, ξ, β)`: the Poisson rate estimate is
/// independent of the GPD marks, with variance `λ_u / n_y`.
pub fn tail_covariance(rate: f64, span_years: f64, gpd_covariance: &[Vec<f64>]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    c[0][0] = rate / span_years;
    for i in 0..2 {
        for j in 0..2 {
            c[i + 1][j + 1] = gpd_covariance[i][j];
        }
    }
    c
}

/// Uncertainty source for return-level intervals.
#[derive(Debug, Clone, Copy)]
pub enum ReturnLevelUncertainty<'a> {
    /// Delta method with the covariance of `(λ_u, ξ, β)`.
    Delta { covariance: &'a [[f64; 3]; 3] },
    /// Profile likelihood over the excesses the model was fitted to.
    Profile { sample: &'a ExcessSample },
}

pub fn return_level_ci(
    period: f64,
    m: &TailModel,
    source: ReturnLevelUncertainty<'_>,
    level: f64,
) -> Result<ConfidenceInterval> {
    match source {
        ReturnLevelUncertainty::Delta { covariance } => {
            return_level_ci_delta(period, m, covariance, level)
        }
        ReturnLevelUncertainty::Profile { sample } => {
            return_level_ci_profile(period, m, sample, level)
        }
    }
}

/// Delta-method interval; lower limits may go negative and are kept as is.
pub fn return_level_ci_delta(
    period: f64,
    m: &TailModel,
    covariance: &[[f64; 3]; 3],
    level: f64,
) -> Result<ConfidenceInterval> {
    crate::fitting::check_level(level)?;
    let estimate = return_level(period, m)?;
    let theta = [m.rate, m.gpd.shape, m.gpd.scale];
    let level_at = |t: &[f64; 3]| -> f64 {
        let pbar = -(-t[0]).exp_m1();
        quantile_above(m.threshold, t[1], t[2], pbar, 1.0 - 1.0 / period)
    };
    let mut grad = [0.0; 3];
    for i in 0..3 {
        let h = 1e-6 * theta[i].abs().max(1e-3);
        let (mut up, mut down) = (theta, theta);
        up[i] += h;
        down[i] -= h;
        grad[i] = (level_at(&up) - level_at(&down)) / (2.0 * h);
    }
    let mut variance = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            variance += grad[i] * covariance[i][j] * grad[j];
        }
    }
    let z = crate::fitting::normal_quantile(0.5 + level / 2.0);
    let half = z * variance.max(0.0).sqrt();
    Ok(ConfidenceInterval {
        estimate,
        lower: estimate - half,
        upper: estimate + half,
        level,
        method: CiMethod::Delta,
        lower_open: false,
        upper_open: false,
    })
}

/// GPD likelihood reparametrized by `(x_t, ξ)`, with the exceedance
/// probability held at its estimate.
pub struct ReturnLevelLikelihood<'a> {
    pub excesses: &'a [f64],
    pub threshold: f64,
    pub exceedance_prob: f64,
    pub period: f64,
}

impl ReturnLevelLikelihood<'_> {
    /// Scale implied by a return level and shape.
    pub fn scale_for(&self, level: f64, shape: f64) -> f64 {
        let log_ratio = (1.0 / (self.period * self.exceedance_prob)).ln();
        let excess = level - self.threshold;
        if shape.abs() < SHAPE_ZERO_TOL {
            -excess / log_ratio
        } else {
            excess * shape / (-shape * log_ratio).exp_m1()
        }
    }
}

impl LogLikelihood for ReturnLevelLikelihood<'_> {
    fn param_names(&self) -> Vec<&'static str> {
        vec!["return_level", "xi"]
    }

    fn loglik(&self, theta: &[f64]) -> f64 {
        let (level, shape) = (theta[0], theta[1]);
        if !(level > self.threshold) || shape <= -1.0 {
            return f64::NEG_INFINITY;
        }
        let scale = self.scale_for(level, shape);
        match GpdParams::new(shape, scale) {
            Ok(g) => crate::fitting::gpd_loglik_raw(g.shape, g.scale, self.excesses),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Profile-likelihood interval for the `t`-year return level.
pub fn return_level_ci_profile(
    period: f64,
    m: &TailModel,
    sample: &ExcessSample,
    level: f64,
) -> Result<ConfidenceInterval> {
    let estimate = return_level(period, m)?;
    let model = ReturnLevelLikelihood {
        excesses: sample.excesses(),
        threshold: m.threshold,
        exceedance_prob: m.exceedance_prob(),
        period,
    };
    let mut fit = maximize(&model, &[vec![estimate, m.gpd.shape]])?;
    if fit.status == FitStatus::NotConverged {
        return Err(Error::Degenerate(
            "return-level likelihood did not converge".into(),
        ));
    }
    // keep the reported point estimate tied to the supplied model
    if model.loglik(&[estimate, m.gpd.shape]) >= fit.loglik - 1e-6 {
        fit.params = vec![estimate, m.gpd.shape];
        fit.loglik = model.loglik(&fit.params);
    }
    let excess = fit.params[0] - m.threshold;
    let options = ProfileOptions {
        lower_limit: Some(m.threshold + 1e-9 * excess),
        upper_limit: Some(m.threshold + 1e4 * excess),
        ..ProfileOptions::default()
    };
    let mut ci = profile_ci_with(&model, &fit, 0, level, &options)?;
    ci.estimate = estimate;
    ci.lower = ci.lower.min(estimate);
    ci.upper = ci.upper.max(estimate);
    Ok(ci)
}

/// GPD log-likelihood of the sample's excesses under the model.
pub fn sample_loglik(m: &TailModel, sample: &ExcessSample) -> f64 {
    gpd_loglik(&m.gpd, sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn reference() -> TailModel {
        TailModel::new(20.0, GpdParams::new(0.938, 12.9).unwrap(), 0.15).unwrap()
    }

    #[test]
    fn reference_return_levels() {
        let m = reference();
        for (t, expect) in [
            (10.0, 25.0),
            (100.0, 170.0),
            (200.0, 320.0),
            (1000.0, 1400.0),
        ] {
            let x = return_level(t, &m).unwrap();
            assert_eq!(round_significant(x, 2), expect, "t = {t}: {x}");
        }
    }

    #[test]
    fn reference_var_and_es() {
        let m = reference();
        for (a, v, e) in [
            (0.90, 25.0, 310.0),
            (0.99, 170.0, 2600.0),
            (0.995, 320.0, 5000.0),
            (0.999, 1400.0, 23000.0),
        ] {
            assert_eq!(round_significant(var(a, &m).unwrap(), 2), v);
            assert_eq!(round_significant(es(a, &m).unwrap(), 2), e);
        }
    }

    #[test]
    fn threshold_quantile() {
        let m = reference();
        let pbar = m.exceedance_prob();
        assert!((var(1.0 - pbar, &m).unwrap() - 20.0).abs() < 1e-9);
        assert!((return_level(1.0 / pbar, &m).unwrap() - 20.0).abs() < 1e-6);
        assert!((return_period(20.0, &m).unwrap() - 7.18).abs() < 0.01);
        assert!(var(0.5, &m).is_err());
        assert!(return_level(5.0, &m).is_err());
        assert!(return_period(10.0, &m).is_err());
    }

    #[test]
    fn es_needs_finite_mean() {
        let m = TailModel::new(20.0, GpdParams::new(1.0, 12.9).unwrap(), 0.15).unwrap();
        assert!(es(0.99, &m).is_err());
        let near = TailModel::new(20.0, GpdParams::new(0.999_999, 12.9).unwrap(), 0.15).unwrap();
        assert!(es(0.99, &near).unwrap() > 1e7);
    }

    #[test]
    fn hundred_year_event_period() {
        let m = reference();
        let t = return_period(170.0, &m).unwrap();
        assert!((t - 100.0).abs() < 2.0, "{t}");
    }

    #[test]
    fn return_level_and_period_invert() {
        let m = reference();
        for t in [10.0, 50.0, 100.0, 333.0, 1000.0, 1e5] {
            let x = return_level(t, &m).unwrap();
            let back = return_period(x, &m).unwrap();
            assert!((back - t).abs() < 1e-8 * t);
        }
    }

    #[test]
    fn var_monotone_and_below_es() {
        let m = reference();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..200 {
            let a = 0.87 + 0.13 * i as f64 / 200.0;
            let v = var(a, &m).unwrap();
            assert!(v > prev);
            assert!(es(a, &m).unwrap() > v);
            prev = v;
        }
    }

    #[test]
    fn shape_continuity() {
        let m0 = TailModel::new(20.0, GpdParams::new(0.0, 12.9).unwrap(), 0.15).unwrap();
        let m1 = TailModel::new(20.0, GpdParams::new(1e-8, 12.9).unwrap(), 0.15).unwrap();
        for a in [0.9, 0.99, 0.999] {
            let (v0, v1) = (var(a, &m0).unwrap(), var(a, &m1).unwrap());
            assert!((v0 - v1).abs() < 1e-5 * v0);
        }
    }

    #[test]
    fn simulated_years_match_return_levels() {
        // A year exceeds u with probability p̄ and then carries one GPD excess,
        // which is the annual model behind the closed-form quantile.
        let m = reference();
        let pbar = m.exceedance_prob();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 10_000_000usize;
        let mut years: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < pbar {
                    m.threshold + m.gpd.sample(&mut rng)
                } else {
                    0.0
                }
            })
            .collect();
        years.sort_by(f64::total_cmp);
        for t in [10.0, 50.0, 100.0] {
            let idx = ((1.0 - 1.0 / t) * n as f64).ceil() as usize - 1;
            let empirical = years[idx];
            let exact = return_level(t, &m).unwrap();
            assert!(
                (empirical - exact).abs() < 0.03 * exact,
                "t={t}: {empirical} vs {exact}"
            );
        }
    }

    #[test]
    fn delta_interval_symmetric_and_can_go_negative() {
        let m = reference();
        let cov = tail_covariance(0.15, 100.0, &[vec![0.146, -1.5], vec![-1.5, 24.0]]);
        let ci = return_level_ci_delta(1000.0, &m, &cov, 0.95).unwrap();
        assert!((ci.upper - ci.estimate - (ci.estimate - ci.lower)).abs() < 1e-9);
        assert!(ci.lower < 0.0);
        assert_eq!(ci.method, CiMethod::Delta);
    }

    #[test]
    fn profile_interval_contains_estimate_and_is_skewed() {
        let g = GpdParams::new(0.6, 12.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ys: Vec<f64> = (0..60).map(|_| g.sample(&mut rng)).collect();
        let sample = ExcessSample::new(20.0, ys, 100.0).unwrap();
        let fit = crate::fitting::fit_gpd(&sample).unwrap();
        let m = TailModel::new(
            20.0,
            GpdParams::new(fit.params[0], fit.params[1]).unwrap(),
            0.6,
        )
        .unwrap();
        let ci = return_level_ci_profile(100.0, &m, &sample, 0.95).unwrap();
        assert!(ci.lower > 20.0);
        assert!(ci.lower < ci.estimate && ci.estimate < ci.upper);
        assert!(ci.upper - ci.estimate > ci.estimate - ci.lower);
        // the interval endpoints sit on the χ²₁ cutoff
        let model = ReturnLevelLikelihood {
            excesses: sample.excesses(),
            threshold: 20.0,
            exceedance_prob: m.exceedance_prob(),
            period: 100.0,
        };
        let best = sample_loglik(&m, &sample);
        let prof = |x: f64| {
            crate::optimize::simplex_maximize(
                |s| model.loglik(&[x, s[0]]),
                &[fit.params[0]],
                |_| true,
                &Default::default(),
            )
            .unwrap()
            .max
        };
        for x in [ci.lower, ci.upper] {
            let dev = 2.0 * (best - prof(x));
            assert!((dev - 3.8415).abs() < 0.01, "deviance {dev} at {x}");
        }
    }
}
