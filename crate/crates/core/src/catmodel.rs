//! The combined three-component marked Poisson process for accident sizes:
//! small accidents with a discrete law, medium ones with a truncated
//! negative binomial and large ones with GPD excesses over a threshold.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{
    Discrete, GpdParams, NegBinParams, PoissonParams, Truncated, Univariate,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum MarkDistribution {
    Discrete(Discrete),
    /// Negative binomial restricted to the component interval.
    NegBin(Truncated<NegBinParams>),
    /// `lower + ⌈Y⌉` with `Y` GPD, so marks stay strictly above the threshold.
    ShiftedGpd(GpdParams),
}

/// One component: accidents with death counts in `(lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSpec {
    pub lower: u64,
    /// `None` for the unbounded top component.
    pub upper: Option<u64>,
    pub rate: f64,
    pub marks: MarkDistribution,
}

impl ComponentSpec {
    pub fn discrete(
        lower: u64,
        upper: u64,
        rate: f64,
        values: Vec<u64>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        let d = Discrete::new(values, probs)?;
        if d.values().iter().any(|&v| v <= lower || v > upper) {
            return Err(Error::Config(format!(
                "discrete values must lie in ({lower}, {upper}]"
            )));
        }
        Self::checked(lower, Some(upper), rate, MarkDistribution::Discrete(d))
    }

    pub fn negbin(lower: u64, upper: u64, rate: f64, size: f64, prob: f64) -> Result<Self> {
        let t = Truncated::new(NegBinParams::new(size, prob)?, lower as f64, upper as f64)?;
        Self::checked(lower, Some(upper), rate, MarkDistribution::NegBin(t))
    }

    pub fn gpd(threshold: u64, rate: f64, shape: f64, scale: f64) -> Result<Self> {
        let g = GpdParams::new(shape, scale)?;
        Self::checked(threshold, None, rate, MarkDistribution::ShiftedGpd(g))
    }

    fn checked(lower: u64, upper: Option<u64>, rate: f64, marks: MarkDistribution) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::param(
                "rate",
                rate,
                "must be non-negative and finite",
            ));
        }
        if upper.is_some_and(|u| u <= lower) {
            return Err(Error::Config(format!(
                "empty component interval ({lower}, {upper:?}]"
            )));
        }
        Ok(Self {
            lower,
            upper,
            rate,
            marks,
        })
    }

    /// Death-count law of this component, 0 below and 1 above its interval.
    pub fn size_cdf(&self, x: f64) -> f64 {
        if x <= self.lower as f64 {
            return 0.0;
        }
        if self.upper.is_some_and(|u| x >= u as f64) {
            return 1.0;
        }
        match &self.marks {
            MarkDistribution::Discrete(d) => d.cdf(x),
            MarkDistribution::NegBin(t) => t.cdf(x),
            MarkDistribution::ShiftedGpd(g) => g.cdf(x - self.lower as f64),
        }
    }

    /// Inverse-transform draw from the uniform `u` in `[0, 1)`.
    pub fn size_from_uniform(&self, u: f64) -> u64 {
        match &self.marks {
            MarkDistribution::Discrete(d) => d.values()[d.category(u)],
            MarkDistribution::NegBin(t) => t.quantile(1.0 - u) as u64,
            MarkDistribution::ShiftedGpd(g) => {
                let y = g.quantile(u).ceil().max(1.0);
                // saturating: astronomically large draws collapse to u64::MAX
                self.lower.saturating_add(y as u64)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// One Poisson count for the total rate, then iid types.
    Superposed,
    /// Independent Poisson processes per component, merged.
    Separate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatEvent {
    /// Years from the start of the period.
    pub time: f64,
    pub component: usize,
    pub deaths: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinedCatModel {
    components: Vec<ComponentSpec>,
}

impl CombinedCatModel {
    /// Components must be ordered and partition `(0, ∞)`.
    pub fn new(components: Vec<ComponentSpec>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Config("model needs at least one component".into()));
        }
        let mut expected_lower = 0;
        for (i, c) in components.iter().enumerate() {
            if c.lower != expected_lower {
                return Err(Error::Config(format!(
                    "component {} starts at {} but the previous interval ends at {expected_lower}",
                    i + 1,
                    c.lower
                )));
            }
            match (c.upper, i + 1 == components.len()) {
                (None, true) => {}
                (Some(u), false) => expected_lower = u,
                (Some(_), true) => {
                    return Err(Error::Config("the last component must be unbounded".into()))
                }
                (None, false) => {
                    return Err(Error::Config(
                        "only the last component may be unbounded".into(),
                    ))
                }
            }
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[ComponentSpec] {
        &self.components
    }

    pub fn total_rate(&self) -> f64 {
        self.components.iter().map(|c| c.rate).sum()
    }

    /// `p_i = λ_i / λ`; all zero when `λ = 0`.
    pub fn type_probs(&self) -> Vec<f64> {
        let total = self.total_rate();
        self.components
            .iter()
            .map(|c| if total > 0.0 { c.rate / total } else { 0.0 })
            .collect()
    }

    /// Probability of no event in a period of `horizon` years.
    pub fn no_event_prob(&self, horizon: f64) -> f64 {
        (-self.total_rate() * horizon).exp()
    }

    /// Replace the first component's rate so that `P(no event in a year) = q`.
    pub fn with_no_event_prob(mut self, q: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::param("q", q, "must lie in (0, 1)"));
        }
        let others: f64 = self.components[1..].iter().map(|c| c.rate).sum();
        let rate = -q.ln() - others;
        if !(rate > 0.0) {
            return Err(Error::param(
                "q",
                q,
                "implies a non-positive rate for the first component",
            ));
        }
        self.components[0].rate = rate;
        Ok(self)
    }

    pub fn sample_events<R: Rng + ?Sized>(
        &self,
        horizon: f64,
        rng: &mut R,
        mode: SamplingMode,
    ) -> Vec<CatEvent> {
        let mut events = Vec::new();
        match mode {
            SamplingMode::Superposed => {
                let k = PoissonParams {
                    mean: self.total_rate() * horizon,
                }
                .sample(rng);
                let probs = self.type_probs();
                let mut times: Vec<f64> = (0..k).map(|_| uniform_time(horizon, rng)).collect();
                times.sort_by(f64::total_cmp);
                for time in times {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut component = probs.len() - 1;
                    for (i, p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            component = i;
                            break;
                        }
                    }
                    let deaths = self.components[component].size_from_uniform(rng.random());
                    events.push(CatEvent {
                        time,
                        component,
                        deaths,
                    });
                }
            }
            SamplingMode::Separate => {
                for (component, c) in self.components.iter().enumerate() {
                    let k = PoissonParams {
                        mean: c.rate * horizon,
                    }
                    .sample(rng);
                    for _ in 0..k {
                        let time = uniform_time(horizon, rng);
                        let deaths = c.size_from_uniform(rng.random());
                        events.push(CatEvent {
                            time,
                            component,
                            deaths,
                        });
                    }
                }
                events.sort_by(|a, b| a.time.total_cmp(&b.time));
            }
        }
        events
    }
}

/// Uniform on `(0, T]`.
fn uniform_time<R: Rng + ?Sized>(horizon: f64, rng: &mut R) -> f64 {
    horizon * (1.0 - rng.random::<f64>())
}

/// Default thresholds `u₀ = 0`, `u₁ = 3`, `u₂ = 20` and the fitted components.
pub fn default_model() -> CombinedCatModel {
    let components = vec![
        ComponentSpec::discrete(0, 3, 1.63, vec![1, 2, 3], vec![0.43, 0.32, 0.25]),
        ComponentSpec::negbin(3, 20, 0.50, 1.15, 0.182),
        ComponentSpec::gpd(20, 0.15, 0.938, 12.9),
    ];
    CombinedCatModel::new(
        components
            .into_iter()
            .collect::<Result<_>>()
            .expect("valid defaults"),
    )
    .expect("valid defaults")
}

/// Size law of an accident given that one occurs: `Σ p_i F_i(x)`.
pub fn conditional_size_cdf(x: f64, model: &CombinedCatModel) -> f64 {
    model
        .components()
        .iter()
        .zip(model.type_probs())
        .map(|(c, p)| p * c.size_cdf(x))
        .sum()
}

/// `q + (1 - q) F(x)` with `q = exp(-λ T)`, the law of the largest-type view
/// where "no event" counts as size zero.
pub fn unconditional_size_cdf(x: f64, model: &CombinedCatModel, horizon: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let q = model.no_event_prob(horizon);
    q + (1.0 - q) * conditional_size_cdf(x, model)
}
