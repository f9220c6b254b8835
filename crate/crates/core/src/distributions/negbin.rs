use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta_reg, gamma::ln_gamma};

use super::Univariate;
use crate::error::{Error, Result};

/// Negative binomial counts with `P(N = k) = C(k+r-1, k) p^r (1-p)^k`.
///
/// `r` may be any positive real; the mean is `r (1-p) / p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegBinParams {
    pub size: f64,
    pub prob: f64,
}

impl NegBinParams {
    pub fn new(size: f64, prob: f64) -> Result<Self> {
        if !(size > 0.0 && size.is_finite()) {
            return Err(Error::param("size", size, "must be positive and finite"));
        }
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::param("prob", prob, "must lie in (0, 1)"));
        }
        Ok(Self { size, prob })
    }

    pub fn mean(&self) -> f64 {
        self.size * (1.0 - self.prob) / self.prob
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        let k = k as f64;
        ln_gamma(k + self.size) - ln_gamma(self.size) - ln_gamma(k + 1.0)
            + self.size * self.prob.ln()
            + k * (-self.prob).ln_1p()
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.ln_pmf(k).exp()
    }

    /// `P(N <= k)` through the regularized incomplete beta function.
    pub fn cdf_at(&self, k: u64) -> f64 {
        beta_reg(self.size, k as f64 + 1.0, self.prob)
    }

    /// `P(N > k)`.
    pub fn sf_at(&self, k: u64) -> f64 {
        beta_reg(k as f64 + 1.0, self.size, 1.0 - self.prob)
    }

    /// Smallest integer `k` with `P(N <= k) >= q`.
    pub fn quantile_count(&self, q: f64) -> u64 {
        if q <= self.cdf_at(0) {
            return 0;
        }
        if q >= 1.0 {
            return u64::MAX;
        }
        let mut hi: u64 = 1;
        while self.cdf_at(hi) < q {
            if hi >= 1 << 52 {
                return u64::MAX;
            }
            hi *= 2;
        }
        let mut lo = hi / 2; // cdf(lo) < q
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.cdf_at(mid) >= q {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

impl Univariate for NegBinParams {
    fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else if x.is_infinite() {
            1.0
        } else {
            self.cdf_at(x.floor() as u64)
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        match self.quantile_count(p) {
            u64::MAX => f64::INFINITY,
            k => k as f64,
        }
    }
}
