use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonParams {
    pub mean: f64,
}

impl PoissonParams {
    pub fn new(mean: f64) -> Result<Self> {
        if !(mean >= 0.0 && mean.is_finite()) {
            return Err(Error::param(
                "mean",
                mean,
                "must be non-negative and finite",
            ));
        }
        Ok(Self { mean })
    }

    pub fn ln_pmf(&self, k: u64) -> f64 {
        let kf = k as f64;
        if self.mean == 0.0 {
            return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        kf * self.mean.ln() - self.mean - ln_gamma(kf + 1.0)
    }

    /// `P(N <= k)`.
    pub fn cdf(&self, k: u64) -> f64 {
        if self.mean == 0.0 {
            return 1.0;
        }
        gamma_ur(k as f64 + 1.0, self.mean)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.mean == 0.0 {
            return 0;
        }
        // rand_distr only rejects non-positive or non-finite means, both excluded above.
        Poisson::new(self.mean).expect("validated mean").sample(rng) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_mean_always_zero() {
        let p = PoissonParams::new(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| p.sample(&mut rng) == 0));
    }

    #[test]
    fn cdf_matches_pmf_sum() {
        let p = PoissonParams::new(2.28).unwrap();
        let mut acc = 0.0;
        for k in 0..20 {
            acc += p.ln_pmf(k).exp();
            assert!((p.cdf(k) - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_mean() {
        let p = PoissonParams::new(2.28).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let m = (0..n).map(|_| p.sample(&mut rng) as f64).sum::<f64>() / n as f64;
        assert!((m - 2.28).abs() < 4.0 * (2.28f64 / n as f64).sqrt());
    }
}
