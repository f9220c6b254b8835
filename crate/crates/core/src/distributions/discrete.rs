use rand::Rng;

use super::Univariate;
use crate::error::{Error, Result};

/// Finite categorical law over ascending integer values.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrete {
    values: Vec<u64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Discrete {
    /// Probabilities must be non-negative and sum to one within `1e-9`;
    /// they are renormalized to sum exactly to one.
    pub fn new(values: Vec<u64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::Config(
                "discrete law needs matching, non-empty values and probabilities".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "discrete values must be strictly ascending".into(),
            ));
        }
        if let Some(&p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::param("prob", p, "must be non-negative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param("prob", total, "probabilities must sum to 1"));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Self {
            values,
            probs,
            cumulative,
        })
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Index of the category selected by the uniform `u` in `[0, 1)`.
    pub fn category(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.values.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.values[self.category(rng.random())]
    }
}

impl Univariate for Discrete {
    fn cdf(&self, x: f64) -> f64 {
        match self.values.iter().rposition(|&v| v as f64 <= x) {
            Some(i) => self.cumulative[i],
            None => 0.0,
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        let i = self
            .cumulative
            .iter()
            .position(|&c| c >= p)
            .unwrap_or(self.values.len() - 1);
        self.values[i] as f64
    }
}
