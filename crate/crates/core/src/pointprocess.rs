//! Two-dimensional Poisson point-process view of threshold exceedances,
//! with optional linear time trends.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::distributions::{GpdParams, SHAPE_ZERO_TOL};
use crate::error::{Error, Result};
use crate::fitting::{fit_gpd, maximize, ExcessSample, FitResult, FitStatus, LogLikelihood};

const SIMPSON_INTERVALS: usize = 1024;

/// Exceedances of a threshold within an observation window `(start, end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotData {
    times: Vec<f64>,
    sizes: Vec<f64>,
    threshold: f64,
    start: f64,
    end: f64,
}

impl PotData {
    /// Times in years from the window start `0`, window length `span`.
    pub fn new(times: Vec<f64>, sizes: Vec<f64>, threshold: f64, span: f64) -> Result<Self> {
        Self::with_window(times, sizes, threshold, 0.0, span)
    }

    pub fn with_window(
        times: Vec<f64>,
        sizes: Vec<f64>,
        threshold: f64,
        start: f64,
        end: f64,
    ) -> Result<Self> {
        if !(end > start) {
            return Err(Error::param(
                "window end",
                end,
                "must exceed the window start",
            ));
        }
        if times.len() != sizes.len() {
            return Err(Error::Config(format!(
                "{} times but {} sizes",
                times.len(),
                sizes.len()
            )));
        }
        if let Some(&t) = times.iter().find(|&&t| !(t > start && t <= end)) {
            return Err(Error::param(
                "exceedance time",
                t,
                "must lie inside the window",
            ));
        }
        if let Some(&x) = sizes.iter().find(|&&x| !(x > threshold)) {
            return Err(Error::param(
                "exceedance size",
                x,
                "must exceed the threshold",
            ));
        }
        Ok(Self {
            times,
            sizes,
            threshold,
            start,
            end,
        })
    }

    /// Keep the observations above `threshold`.
    pub fn from_observations(
        times: &[f64],
        sizes: &[f64],
        threshold: f64,
        start: f64,
        end: f64,
    ) -> Result<Self> {
        let (t, x): (Vec<f64>, Vec<f64>) = times
            .iter()
            .zip(sizes)
            .filter(|(_, &x)| x > threshold)
            .map(|(&t, &x)| (t, x))
            .unzip();
        Self::with_window(t, x, threshold, start, end)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn window(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn span(&self) -> f64 {
        self.end - self.start
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn excess_sample(&self) -> Result<ExcessSample> {
        ExcessSample::new(
            self.threshold,
            self.sizes.iter().map(|x| x - self.threshold).collect(),
            self.span(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    None,
    /// `μ(t) = κ₀ + κ₁ t`.
    Location,
    /// `σ(t) = exp(κ₀ + κ₁ t)`.
    LogScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotParams {
    pub shape: f64,
    /// `μ`, or `κ₀` under a location trend.
    pub location: f64,
    /// `σ`, or `exp(κ₀)` under a log-scale trend.
    pub scale: f64,
    pub trend: Trend,
    /// `κ₁`; ignored without a trend.
    pub slope: f64,
}

impl PotParams {
    pub fn homogeneous(shape: f64, location: f64, scale: f64) -> Self {
        Self {
            shape,
            location,
            scale,
            trend: Trend::None,
            slope: 0.0,
        }
    }

    pub fn location_at(&self, t: f64) -> f64 {
        match self.trend {
            Trend::Location => self.location + self.slope * t,
            _ => self.location,
        }
    }

    pub fn scale_at(&self, t: f64) -> f64 {
        match self.trend {
            Trend::LogScale => self.scale * (self.slope * t).exp(),
            _ => self.scale,
        }
    }

    /// `ln(1 + ξ (x - μ)/σ) / ξ` at time `t`, or `None` outside the support.
    fn log_term(&self, x: f64, t: f64) -> Option<f64> {
        let (mu, sigma) = (self.location_at(t), self.scale_at(t));
        if !(sigma > 0.0) || !sigma.is_finite() {
            return None;
        }
        let z = (x - mu) / sigma;
        if self.shape.abs() < SHAPE_ZERO_TOL {
            return Some(z);
        }
        let s = self.shape * z;
        (s > -1.0).then(|| s.ln_1p() / self.shape)
    }

    /// Exceedance rate `τ_t(x) = (1 + ξ (x - μ(t))/σ(t))^(-1/ξ)`.
    pub fn rate_at(&self, x: f64, t: f64) -> Option<f64> {
        match self.log_term(x, t) {
            Some(l) => Some((-l).exp()),
            // below the lower endpoint the rate is infinite, above the upper it is zero
            None if self.shape < 0.0 && x > self.location_at(t) => Some(0.0),
            None => None,
        }
    }
}

fn simpson<F: Fn(f64) -> Option<f64>>(f: F, a: f64, b: f64) -> Option<f64> {
    let n = SIMPSON_INTERVALS;
    let h = (b - a) / n as f64;
    let mut acc = f(a)? + f(b)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h)?;
    }
    Some(acc * h / 3.0)
}

/// Point-process log-likelihood; `-inf` when any point or the volume term
/// violates the support condition.
pub fn pot_loglik(params: &PotParams, data: &PotData) -> f64 {
    let u = data.threshold;
    let (a, b) = data.window();
    let volume = match params.trend {
        Trend::None => params.rate_at(u, a).map(|r| r * (b - a)),
        _ => simpson(|t| params.rate_at(u, t), a, b),
    };
    let Some(volume) = volume.filter(|v| v.is_finite()) else {
        return f64::NEG_INFINITY;
    };
    let mut ll = -volume;
    for (&t, &x) in data.times.iter().zip(&data.sizes) {
        match params.log_term(x, t) {
            Some(l) => ll -= params.scale_at(t).ln() + (1.0 + params.shape) * l,
            None => return f64::NEG_INFINITY,
        }
    }
    ll
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotModel {
    M0,
    M1,
    M2,
}

impl PotModel {
    pub fn trend(self) -> Trend {
        match self {
            PotModel::M0 => Trend::None,
            PotModel::M1 => Trend::Location,
            PotModel::M2 => Trend::LogScale,
        }
    }
}

/// The POT likelihood for one model over a flat parameter vector:
/// M0 `(ξ, μ, σ)`, M1 `(ξ, κ₀, κ₁, σ)`, M2 `(ξ, μ, κ₀, κ₁)`.
pub struct PotLikelihood<'a> {
    pub data: &'a PotData,
    pub model: PotModel,
}

impl PotLikelihood<'_> {
    pub fn params_from(&self, theta: &[f64]) -> PotParams {
        match self.model {
            PotModel::M0 => PotParams::homogeneous(theta[0], theta[1], theta[2]),
            PotModel::M1 => PotParams {
                shape: theta[0],
                location: theta[1],
                scale: theta[3],
                trend: Trend::Location,
                slope: theta[2],
            },
            PotModel::M2 => PotParams {
                shape: theta[0],
                location: theta[1],
                scale: theta[2].exp(),
                trend: Trend::LogScale,
                slope: theta[3],
            },
        }
    }

    pub fn theta_from(&self, p: &PotParams) -> Vec<f64> {
        match self.model {
            PotModel::M0 => vec![p.shape, p.location, p.scale],
            PotModel::M1 => vec![p.shape, p.location, p.slope, p.scale],
            PotModel::M2 => vec![p.shape, p.location, p.scale.ln(), p.slope],
        }
    }
}

impl LogLikelihood for PotLikelihood<'_> {
    fn param_names(&self) -> Vec<&'static str> {
        match self.model {
            PotModel::M0 => vec!["xi", "mu", "sigma"],
            PotModel::M1 => vec!["xi", "kappa0", "kappa1", "sigma"],
            PotModel::M2 => vec!["xi", "mu", "kappa0", "kappa1"],
        }
    }

    fn loglik(&self, theta: &[f64]) -> f64 {
        if theta[0] <= -1.0 {
            return f64::NEG_INFINITY;
        }
        pot_loglik(&self.params_from(theta), self.data)
    }
}

/// Homogeneous POT parameters matching a GPD fit and an exceedance rate.
pub fn gpd_to_pot(gpd: &GpdParams, rate: f64, threshold: f64) -> PotParams {
    let (xi, beta) = (gpd.shape, gpd.scale);
    if xi.abs() < SHAPE_ZERO_TOL {
        PotParams::homogeneous(xi, threshold + beta * rate.ln(), beta)
    } else {
        let sigma = beta * rate.powf(xi);
        PotParams::homogeneous(xi, threshold - (beta - sigma) / xi, sigma)
    }
}

/// Maximum-likelihood fit of M0, M1 or M2. Trend models start from the
/// homogeneous optimum so that their maximum is never below it.
pub fn fit_pot(data: &PotData, model: PotModel) -> Result<FitResult> {
    if data.count() < 5 {
        return Err(Error::InsufficientData {
            needed: 5,
            got: data.count(),
        });
    }
    let m0 = PotLikelihood {
        data,
        model: PotModel::M0,
    };
    let gpd = fit_gpd(&data.excess_sample()?)?;
    let rate = data.count() as f64 / data.span();
    let mut starts = vec![];
    if gpd.is_usable() {
        if let Ok(g) = GpdParams::new(gpd.params[0], gpd.params[1]) {
            starts.push(m0.theta_from(&gpd_to_pot(&g, rate, data.threshold)));
        }
    }
    let mean = data.excess_sample()?.excesses().iter().sum::<f64>() / data.count() as f64;
    for xi in [0.1, 0.5] {
        let g = GpdParams::new(xi, mean * (1.0 - xi))?;
        starts.push(m0.theta_from(&gpd_to_pot(&g, rate, data.threshold)));
    }
    let homogeneous = maximize(&m0, &starts)?;
    if model == PotModel::M0 {
        return Ok(homogeneous);
    }
    let base = m0.params_from(&homogeneous.params);
    let lik = PotLikelihood { data, model };
    let mid = 0.5 * (data.start + data.end);
    let mut trend_starts = vec![lik.theta_from(&PotParams {
        trend: model.trend(),
        slope: 0.0,
        ..base
    })];
    // a start centred on the window, which is better conditioned for long windows
    let mut centred = PotParams {
        trend: model.trend(),
        slope: 1e-3,
        ..base
    };
    match model {
        PotModel::M1 => centred.location -= centred.slope * mid,
        _ => centred.scale *= (-centred.slope * mid).exp(),
    }
    trend_starts.push(lik.theta_from(&centred));
    let mut fit = maximize(&lik, &trend_starts)?;
    if fit.loglik < homogeneous.loglik && fit.status == FitStatus::Converged {
        fit.status = FitStatus::NotConverged;
    }
    Ok(fit)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrTest {
    pub statistic: f64,
    pub p_value: f64,
    pub df: usize,
}

/// Likelihood-ratio test of a restricted model nested in a general one.
pub fn lr_test(restricted: &FitResult, general: &FitResult, df: usize) -> Result<LrTest> {
    if df == 0 {
        return Err(Error::param("df", 0.0, "must be positive"));
    }
    let raw = 2.0 * (general.loglik - restricted.loglik);
    if raw < -1e-6 {
        return Err(Error::Degenerate(format!(
            "general model fits worse than the restricted one (statistic {raw:.3e}); the optimizer failed"
        )));
    }
    let statistic = raw.max(0.0);
    let chi2 = ChiSquared::new(df as f64).map_err(|e| Error::Config(e.to_string()))?;
    Ok(LrTest {
        statistic,
        p_value: chi2.sf(statistic),
        df,
    })
}

/// GPD parameters of the excesses over `u`, and the exceedance rate `τ(u)`.
pub fn pot_to_gpd(params: &PotParams, threshold: f64) -> Result<(GpdParams, f64)> {
    if params.trend != Trend::None && params.slope != 0.0 {
        return Err(Error::domain("the GPD bridge needs a homogeneous model"));
    }
    let (xi, mu, sigma) = (params.shape, params.location, params.scale);
    let beta = if xi.abs() < SHAPE_ZERO_TOL {
        sigma
    } else {
        sigma + xi * (threshold - mu)
    };
    if !(beta > 0.0) {
        return Err(Error::domain(format!(
            "implied GPD scale {beta} is not positive at threshold {threshold}"
        )));
    }
    let rate = params
        .rate_at(threshold, 0.0)
        .ok_or_else(|| Error::domain("threshold lies outside the support"))?;
    Ok((GpdParams::new(xi, beta)?, rate))
}
