use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use super::Univariate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", alpha, "must be positive and finite"));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", beta, "must be positive and finite"));
        }
        Ok(Self { alpha, beta })
    }

    /// Beta law with the given `alpha` and mean, solving `β = α (1 - μ) / μ`.
    pub fn with_mean(alpha: f64, mean: f64) -> Result<Self> {
        if !(mean > 0.0 && mean < 1.0) {
            return Err(Error::param("mean", mean, "must lie in (0, 1)"));
        }
        Self::new(alpha, alpha * (1.0 - mean) / mean)
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Beta::new(self.alpha, self.beta)
            .expect("validated shape parameters")
            .sample(rng)
    }
}

impl Univariate for BetaParams {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            beta_reg(self.alpha, self.beta, x)
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mean_solving() {
        let b = BetaParams::with_mean(2.0, 0.4).unwrap();
        assert!((b.beta - 3.0).abs() < 1e-12);
        let c = BetaParams::with_mean(0.5, 0.2).unwrap();
        assert!((c.beta - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sample_mean_matches_moment_identity() {
        let b = BetaParams::new(2.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 1_000_000;
        let m = (0..n).map(|_| b.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((m - 0.4).abs() < 0.002, "{m}");
    }
}
