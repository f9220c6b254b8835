//! Policy-level Monte Carlo of catastrophe claims on a life portfolio.
//!
//! Each path samples accidents, splits every death count into insured and
//! covered victims, draws the covered victims from the living insureds of
//! the book and pays their in-force policies.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::catmodel::{CatEvent, CombinedCatModel, SamplingMode};
use crate::distributions::BetaParams;
use crate::error::{Error, Result};
use crate::money::Cents;
use crate::portfolio::{day_number, Portfolio};
use crate::reinsurance::{Contract, RecoveryResult};

const DAYS_PER_YEAR: f64 = 365.25;

/// Laws of the insured share `P^I` of an accident's victims and of the
/// covered share `P^C` of the insured victims.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ProportionSpec {
    Beta {
        insured: BetaParams,
        covered: BetaParams,
    },
    Fixed {
        insured: f64,
        covered: f64,
    },
}

impl Default for ProportionSpec {
    fn default() -> Self {
        ProportionSpec::Beta {
            insured: BetaParams {
                alpha: 2.0,
                beta: 3.0,
            },
            covered: BetaParams {
                alpha: 0.5,
                beta: 2.0,
            },
        }
    }
}

impl ProportionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ProportionSpec::Beta { insured, covered } => {
                BetaParams::new(insured.alpha, insured.beta)?;
                BetaParams::new(covered.alpha, covered.beta)?;
            }
            ProportionSpec::Fixed { insured, covered } => {
                for (name, v) in [("insured", insured), ("covered", covered)] {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::param(name, v, "fixed proportion must lie in [0, 1]"));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(μ_I, μ_C)`.
    pub fn means(&self) -> (f64, f64) {
        match *self {
            ProportionSpec::Beta { insured, covered } => (insured.mean(), covered.mean()),
            ProportionSpec::Fixed { insured, covered } => (insured, covered),
        }
    }

    /// The same means without randomness.
    pub fn fixed_at_means(&self) -> Self {
        let (insured, covered) = self.means();
        ProportionSpec::Fixed { insured, covered }
    }
}

/// Draw from a law with the shape of `base` but mean `mean`: the beta
/// parameter moves while alpha stays fixed.
fn draw_with_mean<R: Rng + ?Sized>(base: Option<BetaParams>, mean: f64, rng: &mut R) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean >= 1.0 {
        return 1.0;
    }
    match base.and_then(|b| BetaParams::with_mean(b.alpha, mean).ok()) {
        Some(b) => b.sample(rng),
        None => mean,
    }
}

/// Market and book sizes tracked across the accidents of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationState {
    pub population: u64,
    pub insured: u64,
    pub covered: u64,
    pub insured_mean: f64,
    pub covered_mean: f64,
}

impl PopulationState {
    /// Start from a population and the insured and covered shares.
    pub fn new(population: u64, insured_share: f64, covered_share: f64) -> Result<Self> {
        for (name, v) in [
            ("insured share", insured_share),
            ("covered share", covered_share),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, v, "must lie in [0, 1]"));
            }
        }
        let insured = round_half_up(population as f64 * insured_share);
        let covered = round_half_up(insured as f64 * covered_share);
        Ok(Self {
            population,
            insured,
            covered,
            insured_mean: insured_share,
            covered_mean: covered_share,
        })
    }
}

pub fn round_half_up(x: f64) -> u64 {
    if x <= 0.0 {
        0
    } else {
        (x + 0.5).floor() as u64
    }
}

/// Clamp the insured and covered victim counts to what the remaining
/// populations force or allow, then shrink the populations.
pub fn apply_population_accounting(
    deaths: u64,
    state: &PopulationState,
    p_insured: f64,
    p_covered: f64,
) -> (u64, u64, PopulationState) {
    apply_population_accounting_with(deaths, state, p_insured, p_covered, |share, n| {
        round_half_up(share * n as f64)
    })
}

/// As [`apply_population_accounting`], with the unclamped count of a share
/// of `n` people given by `count(share, n)`.
pub fn apply_population_accounting_with(
    deaths: u64,
    state: &PopulationState,
    p_insured: f64,
    p_covered: f64,
    mut count: impl FnMut(f64, u64) -> u64,
) -> (u64, u64, PopulationState) {
    if deaths == 0 {
        return (0, 0, *state);
    }
    let forced_insured = state
        .insured
        .saturating_sub(state.population.saturating_sub(deaths));
    let n_insured = count(p_insured, deaths)
        .max(forced_insured)
        .min(state.insured);
    let forced_covered = state
        .covered
        .saturating_sub(state.insured.saturating_sub(n_insured));
    let n_covered = count(p_covered, n_insured)
        .max(forced_covered)
        .min(state.covered);
    let population = state.population.saturating_sub(deaths);
    let insured = state.insured - n_insured;
    let covered = state.covered - n_covered;
    let next = PopulationState {
        population,
        insured,
        covered,
        insured_mean: if population > 0 {
            insured as f64 / population as f64
        } else {
            0.0
        },
        covered_mean: if insured > 0 {
            covered as f64 / insured as f64
        } else {
            0.0
        },
    };
    (n_insured, n_covered, next)
}

/// How the victim counts `N^I` and `N^C` follow from the sampled shares.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VictimCountRule {
    /// `N^I = round(P^I N)`, `N^C = round(P^C N^I)`, halves rounded up.
    #[default]
    Rounded,
    /// `N^I ~ Bin(N, P^I)`, `N^C ~ Bin(N^I, P^C)`.
    Binomial,
}

impl VictimCountRule {
    fn count<R: Rng + ?Sized>(self, share: f64, n: u64, rng: &mut R) -> u64 {
        match self {
            VictimCountRule::Rounded => round_half_up(share * n as f64),
            VictimCountRule::Binomial => {
                if n == 0 || share <= 0.0 {
                    0
                } else if share >= 1.0 {
                    n
                } else {
                    rand_distr::Binomial::new(n, share)
                        .expect("share in (0, 1)")
                        .sample(rng)
                }
            }
        }
    }
}

/// Observer called after each simulated accident.
pub trait EventHook: Send + Sync {
    fn after_event(&self, path: usize, event: &EventRecord);
}

#[derive(Clone)]
pub struct SimOptions {
    /// Contract period in years.
    pub horizon: f64,
    pub mode: SamplingMode,
    /// Track population sizes across accidents when set.
    pub population: Option<PopulationState>,
    pub victim_counts: VictimCountRule,
    pub start_date: NaiveDate,
    pub hook: Option<Arc<dyn EventHook>>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            mode: SamplingMode::Superposed,
            population: None,
            victim_counts: VictimCountRule::Rounded,
            start_date: NaiveDate::from_ymd_opt(2025, 1, 1).expect("valid date"),
            hook: None,
        }
    }
}

impl std::fmt::Debug for SimOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SimOptions")
            .field("horizon", &self.horizon)
            .field("mode", &self.mode)
            .field("population", &self.population)
            .field("victim_counts", &self.victim_counts)
            .field("start_date", &self.start_date)
            .field("hook", &self.hook.is_some())
            .finish()
    }
}

/// Independent random streams of one path. Events, proportions and victims
/// use separate streams so that changing the proportion law leaves the
/// accidents and victim draws of a path unchanged.
pub struct PathStreams {
    pub events: ChaCha8Rng,
    pub proportions: ChaCha8Rng,
    pub victims: ChaCha8Rng,
}

impl PathStreams {
    pub fn new(master_seed: u64, path: usize) -> Self {
        let stream = |purpose: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(master_seed);
            r.set_stream(((path as u64) << 2) | purpose);
            r
        };
        Self {
            events: stream(0),
            proportions: stream(1),
            victims: stream(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    /// Index into the portfolio's policies.
    pub policy: u32,
    pub amount: Cents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub component: usize,
    pub deaths: u64,
    pub p_insured: f64,
    pub p_covered: f64,
    pub n_insured: u64,
    pub n_covered: u64,
    pub claims: Vec<Claim>,
    pub total: Cents,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub events: Vec<EventRecord>,
    pub total: Cents,
}

/// Uniform draws without replacement from `0..n` by a partial Fisher–Yates
/// shuffle whose swaps live in a sparse overlay.
struct LivingSet {
    alive: usize,
    swapped: HashMap<usize, usize>,
}

impl LivingSet {
    fn new(n: usize) -> Self {
        Self {
            alive: n,
            swapped: HashMap::new(),
        }
    }

    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<usize> {
        if self.alive == 0 {
            return None;
        }
        let j = rng.random_range(0..self.alive);
        let last = self.alive - 1;
        let victim = *self.swapped.get(&j).unwrap_or(&j);
        let tail = *self.swapped.get(&last).unwrap_or(&last);
        self.swapped.insert(j, tail);
        self.swapped.remove(&last);
        self.alive = last;
        Some(victim)
    }
}

/// Claims caused by a given list of accidents (steps 3 to 6 of a path).
pub fn claims_for_events(
    events: &[CatEvent],
    portfolio: &Portfolio,
    proportions: &ProportionSpec,
    options: &SimOptions,
    streams: &mut PathStreams,
    path: usize,
) -> PathResult {
    let start_day = day_number(options.start_date);
    let mut living = LivingSet::new(portfolio.insured_count());
    let mut population = options.population;
    let mut result = PathResult::default();
    let (insured_base, covered_base) = match *proportions {
        ProportionSpec::Beta { insured, covered } => (Some(insured), Some(covered)),
        ProportionSpec::Fixed { .. } => (None, None),
    };
    for e in events {
        let rng = &mut streams.proportions;
        let (p_insured, p_covered) = match (population, *proportions) {
            (Some(state), _) => (
                draw_with_mean(insured_base, state.insured_mean, rng),
                draw_with_mean(covered_base, state.covered_mean, rng),
            ),
            (None, ProportionSpec::Beta { insured, covered }) => {
                (insured.sample(rng), covered.sample(rng))
            }
            (None, ProportionSpec::Fixed { insured, covered }) => (insured, covered),
        };
        let rule = options.victim_counts;
        let (n_insured, n_covered) = match population {
            Some(state) => {
                let (ni, nc, next) = apply_population_accounting_with(
                    e.deaths,
                    &state,
                    p_insured,
                    p_covered,
                    |share, n| rule.count(share, n, rng),
                );
                population = Some(next);
                (ni, nc)
            }
            None => {
                let ni = rule.count(p_insured, e.deaths, rng);
                (ni, rule.count(p_covered, ni, rng))
            }
        };
        let day = start_day + (e.time * DAYS_PER_YEAR).floor() as i32;
        let mut claims = Vec::new();
        let victims = n_covered.min(living.alive as u64);
        for _ in 0..victims {
            let Some(insured) = living.draw(&mut streams.victims) else {
                break;
            };
            for &p in portfolio.policies_of(insured) {
                if portfolio.in_force(p as usize, day) {
                    claims.push(Claim {
                        policy: p,
                        amount: portfolio.policies()[p as usize].risk_sum,
                    });
                }
            }
        }
        let total: Cents = claims.iter().map(|c| c.amount).sum();
        result.total += total;
        let record = EventRecord {
            time: e.time,
            component: e.component,
            deaths: e.deaths,
            p_insured,
            p_covered,
            n_insured,
            n_covered,
            claims,
            total,
        };
        if let Some(h) = &options.hook {
            h.after_event(path, &record);
        }
        result.events.push(record);
    }
    result
}

/// One simulated contract period on the path's own streams.
pub fn simulate_path(
    model: &CombinedCatModel,
    portfolio: &Portfolio,
    proportions: &ProportionSpec,
    options: &SimOptions,
    streams: &mut PathStreams,
    path: usize,
) -> PathResult {
    let events = model.sample_events(options.horizon, &mut streams.events, options.mode);
    claims_for_events(&events, portfolio, proportions, options, streams, path)
}

/// Run settings shared by all paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSettings {
    pub paths: usize,
    pub seed: u64,
    /// Worker threads; `0` uses the global pool.
    pub workers: usize,
}

/// Map every path through `f`, in path order, regardless of the worker count.
pub fn map_paths<T, F>(
    model: &CombinedCatModel,
    portfolio: &Portfolio,
    proportions: &ProportionSpec,
    options: &SimOptions,
    run: RunSettings,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, PathResult) -> T + Sync,
{
    use rayon::prelude::*;
    proportions.validate()?;
    if !(options.horizon > 0.0) {
        return Err(Error::param("horizon", options.horizon, "must be positive"));
    }
    let work = || {
        (0..run.paths)
            .into_par_iter()
            .map(|i| {
                let mut streams = PathStreams::new(run.seed, i);
                f(
                    i,
                    simulate_path(model, portfolio, proportions, options, &mut streams, i),
                )
            })
            .collect()
    };
    if run.workers == 0 {
        Ok(work())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(run.workers)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(pool.install(work))
    }
}

/// Gross claims and contract recoveries of every path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutput {
    pub gross: Vec<Cents>,
    /// `recovered[k][i]`: contract `k`, path `i`.
    pub recovered: Vec<Vec<Cents>>,
    pub event_counts: Vec<u32>,
}

impl SimulationOutput {
    pub fn after(&self, contract: usize) -> Vec<Cents> {
        self.gross
            .iter()
            .zip(&self.recovered[contract])
            .map(|(&g, &r)| g - r)
            .collect()
    }
}

pub fn run_simulations(
    model: &CombinedCatModel,
    portfolio: &Portfolio,
    proportions: &ProportionSpec,
    options: &SimOptions,
    run: RunSettings,
    contracts: &[Contract],
) -> Result<SimulationOutput> {
    let rows = map_paths(model, portfolio, proportions, options, run, |_, path| {
        let rec: Vec<RecoveryResult> = contracts.iter().map(|c| c.recover(&path)).collect();
        (path.total, rec, path.events.len() as u32)
    })?;
    let mut out = SimulationOutput {
        gross: Vec::with_capacity(rows.len()),
        recovered: vec![Vec::with_capacity(rows.len()); contracts.len()],
        event_counts: Vec::with_capacity(rows.len()),
    };
    for (gross, rec, n) in rows {
        out.gross.push(gross);
        out.event_counts.push(n);
        for (k, r) in rec.into_iter().enumerate() {
            out.recovered[k].push(r.recovered);
        }
    }
    Ok(out)
}

pub const EVENT_LOG_HEADER: [&str; 9] = [
    "path",
    "event_time",
    "type",
    "n_deaths",
    "p_insured",
    "p_covered",
    "n_insured",
    "n_covered",
    "event_claims",
];

pub fn write_event_log<'a, W, I>(out: W, rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (usize, &'a EventRecord)>,
{
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(EVENT_LOG_HEADER).map_err(io)?;
    for (path, e) in rows {
        w.write_record([
            path.to_string(),
            e.time.to_string(),
            (e.component + 1).to_string(),
            e.deaths.to_string(),
            e.p_insured.to_string(),
            e.p_covered.to_string(),
            e.n_insured.to_string(),
            e.n_covered.to_string(),
            e.total.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
