use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{log1p_ratio, Univariate, SHAPE_ZERO_TOL};
use crate::error::{Error, Result};

/// Generalized Pareto law of excesses over a threshold.
///
/// `G(x) = 1 - (1 + ξ x / β)^(-1/ξ)`, with the exponential limit at `ξ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    pub shape: f64,
    pub scale: f64,
}

impl GpdParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !shape.is_finite() {
            return Err(Error::param("shape", shape, "must be finite"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param("scale", scale, "must be positive and finite"));
        }
        Ok(Self { shape, scale })
    }

    /// Right endpoint of the support: `-β/ξ` for `ξ < 0`, else `+inf`.
    pub fn upper_endpoint(&self) -> f64 {
        if self.shape < -SHAPE_ZERO_TOL {
            -self.scale / self.shape
        } else {
            f64::INFINITY
        }
    }

    pub fn in_support(&self, x: f64) -> bool {
        x >= 0.0 && x <= self.upper_endpoint()
    }

    pub fn try_cdf(&self, x: f64) -> Result<f64> {
        if !self.in_support(x) {
            return Err(Error::domain(format!(
                "x = {x} outside GPD support [0, {}]",
                self.upper_endpoint()
            )));
        }
        Ok(self.cdf(x))
    }

    pub fn try_quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::domain(format!("probability {p} outside [0, 1)")));
        }
        Ok(self.quantile(p))
    }

    /// Survival function `1 - G(x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x >= self.upper_endpoint() {
            return 0.0;
        }
        (-log1p_ratio(self.shape, x / self.scale)).exp()
    }

    /// Log-density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !(x >= 0.0) {
            return f64::NEG_INFINITY;
        }
        let z = x / self.scale;
        if self.shape.abs() < SHAPE_ZERO_TOL {
            return -self.scale.ln() - z;
        }
        let t = self.shape * z;
        if t <= -1.0 {
            return f64::NEG_INFINITY;
        }
        -self.scale.ln() - (1.0 + 1.0 / self.shape) * t.ln_1p()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Mean excess `β / (1 - ξ)`; infinite for `ξ >= 1`.
    pub fn mean(&self) -> f64 {
        if self.shape >= 1.0 {
            f64::INFINITY
        } else {
            self.scale / (1.0 - self.shape)
        }
    }

    /// Inverse-transform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }
}

impl Univariate for GpdParams {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= self.upper_endpoint() {
            return 1.0;
        }
        -(-log1p_ratio(self.shape, x / self.scale)).exp_m1()
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return self.upper_endpoint();
        }
        // -ln(1 - p)
        let e = -(-p).ln_1p();
        if self.shape.abs() < SHAPE_ZERO_TOL {
            self.scale * e
        } else {
            self.scale / self.shape * (self.shape * e).exp_m1()
        }
    }
}

/// GPD distribution function; errors outside the support.
pub fn gpd_cdf(x: f64, params: &GpdParams) -> Result<f64> {
    params.try_cdf(x)
}

/// GPD quantile for `p` in `[0, 1)`.
pub fn gpd_quantile(p: f64, params: &GpdParams) -> Result<f64> {
    params.try_quantile(p)
}
