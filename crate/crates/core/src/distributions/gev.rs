use serde::{Deserialize, Serialize};

use super::{log1p_ratio, Univariate, SHAPE_ZERO_TOL};
use crate::error::{Error, Result};

/// Generalized extreme value law `H(x) = exp(-(1 + ξ (x-μ)/σ)^(-1/ξ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub shape: f64,
    pub location: f64,
    pub scale: f64,
}

impl GevParams {
    pub fn new(shape: f64, location: f64, scale: f64) -> Result<Self> {
        if !shape.is_finite() {
            return Err(Error::param("shape", shape, "must be finite"));
        }
        if !location.is_finite() {
            return Err(Error::param("location", location, "must be finite"));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::param("scale", scale, "must be positive and finite"));
        }
        Ok(Self {
            shape,
            location,
            scale,
        })
    }

    /// `1 + ξ (x - μ) / σ`; the law is supported where this is positive.
    pub fn support_term(&self, x: f64) -> f64 {
        if self.shape.abs() < SHAPE_ZERO_TOL {
            1.0
        } else {
            1.0 + self.shape * (x - self.location) / self.scale
        }
    }

    /// `-ln H(x)`, the exceedance rate of level `x` in the point-process view.
    /// Returns `None` outside the support.
    pub fn tau(&self, x: f64) -> Option<f64> {
        if self.support_term(x) <= 0.0 {
            return None;
        }
        let z = (x - self.location) / self.scale;
        Some((-log1p_ratio(self.shape, z)).exp())
    }

    pub fn try_cdf(&self, x: f64) -> Result<f64> {
        self.tau(x)
            .map(|t| (-t).exp())
            .ok_or_else(|| Error::domain(format!("x = {x} outside GEV support")))
    }
}

impl Univariate for GevParams {
    fn cdf(&self, x: f64) -> f64 {
        match self.tau(x) {
            Some(t) => (-t).exp(),
            // Below the lower endpoint when ξ > 0, above the upper one when ξ < 0.
            None if self.shape > 0.0 => 0.0,
            None => 1.0,
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return if self.shape > 0.0 {
                self.location - self.scale / self.shape
            } else {
                f64::NEG_INFINITY
            };
        }
        if p >= 1.0 {
            return if self.shape < 0.0 {
                self.location - self.scale / self.shape
            } else {
                f64::INFINITY
            };
        }
        let y = -(-p.ln()).ln();
        if self.shape.abs() < SHAPE_ZERO_TOL {
            self.location + self.scale * y
        } else {
            self.location + self.scale * (self.shape * y).exp_m1() / self.shape
        }
    }
}

/// GEV distribution function; errors outside the support.
pub fn gev_cdf(x: f64, params: &GevParams) -> Result<f64> {
    params.try_cdf(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gumbel_at_location() {
        let g = GevParams::new(0.0, 0.0, 1.0).unwrap();
        assert!((gev_cdf(0.0, &g).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn frechet_at_location() {
        let g = GevParams::new(1.0, 0.0, 1.0).unwrap();
        assert!((gev_cdf(0.0, &g).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn closed_form_hand_value() {
        let g = GevParams::new(0.5, 10.0, 5.0).unwrap();
        let v = gev_cdf(20.0, &g).unwrap();
        assert!((v - (-0.25f64).exp()).abs() < 1e-14);
        assert!((v - 0.7788).abs() < 1e-4);
    }

    #[test]
    fn outside_support_is_error() {
        let g = GevParams::new(0.5, 10.0, 5.0).unwrap();
        // lower endpoint is μ - σ/ξ = 0
        assert!(gev_cdf(-1.0, &g).is_err());
        assert_eq!(g.cdf(-1.0), 0.0);
    }

    #[test]
    fn continuous_in_shape() {
        let a = GevParams::new(0.0, 1.0, 2.0).unwrap();
        let b = GevParams::new(1e-7, 1.0, 2.0).unwrap();
        for i in -50..50 {
            let x = i as f64 * 0.3;
            assert!((a.cdf(x) - b.cdf(x)).abs() < 1e-5);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let g = GevParams::new(0.3, 2.0, 1.5).unwrap();
        for i in 1..100 {
            let p = i as f64 / 100.0;
            assert!((g.cdf(g.quantile(p)) - p).abs() < 1e-12);
        }
    }
}
