use rand::Rng;

use super::Univariate;
use crate::error::{Error, Result};

/// A base law restricted to `[a, b]` (to `(a, b]`, i.e. `[a+1, b]`, for counts).
///
/// `F(x) = (G(clamp(x, a, b)) - G(a)) / (G(b) - G(a))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncated<D> {
    base: D,
    lower: f64,
    upper: f64,
    cdf_lower: f64,
    mass: f64,
}

impl<D: Univariate> Truncated<D> {
    pub fn new(base: D, lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) {
            return Err(Error::Config(format!(
                "truncation bounds must satisfy a < b, got [{lower}, {upper}]"
            )));
        }
        let cdf_lower = base.cdf(lower);
        let mass = base.cdf(upper) - cdf_lower;
        if !(mass > 0.0) {
            return Err(Error::Degenerate(format!(
                "base law puts no mass on ({lower}, {upper}]"
            )));
        }
        Ok(Self {
            base,
            lower,
            upper,
            cdf_lower,
            mass,
        })
    }

    pub fn base(&self) -> &D {
        &self.base
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    /// Probability mass of the base law inside the truncation interval.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Inverse-transform draw using `p` in `(0, 1]`, so that discrete bases
    /// never return the excluded lower bound.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(1.0 - u)
    }
}

impl<D: Univariate> Univariate for Truncated<D> {
    fn cdf(&self, x: f64) -> f64 {
        let xc = x.clamp(self.lower, self.upper);
        ((self.base.cdf(xc) - self.cdf_lower) / self.mass).clamp(0.0, 1.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        if p == 0.0 {
            return self.lower;
        }
        if p == 1.0 {
            return self.upper;
        }
        self.base
            .quantile(self.cdf_lower + p * self.mass)
            .clamp(self.lower, self.upper)
    }
}

pub fn truncated_cdf<D: Univariate>(x: f64, t: &Truncated<D>) -> f64 {
    t.cdf(x)
}

pub fn truncated_quantile<D: Univariate>(p: f64, t: &Truncated<D>) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(t.quantile(p))
}
