//! Books of life policies: storage, CSV exchange and a synthetic generator.

use std::collections::HashMap;
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Cents;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Policy {
    pub policy_id: u64,
    pub insured_id: u64,
    pub risk_sum: Cents,
    pub inception: NaiveDate,
    pub maturity: NaiveDate,
}

/// Calendar day as a count from the common era, for cheap comparisons.
pub fn day_number(d: NaiveDate) -> i32 {
    d.num_days_from_ce()
}

/// Policies grouped by insured.
#[derive(Debug, Clone, Default)]
pub struct Portfolio {
    policies: Vec<Policy>,
    inception: Vec<i32>,
    maturity: Vec<i32>,
    /// CSR layout: policies of insured `i` are `by_insured[offsets[i]..offsets[i + 1]]`.
    offsets: Vec<usize>,
    by_insured: Vec<u32>,
}

impl Portfolio {
    pub fn new(policies: Vec<Policy>) -> Result<Self> {
        if policies.len() > u32::MAX as usize {
            return Err(Error::Config("portfolio too large".into()));
        }
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut groups: Vec<Vec<u32>> = Vec::new();
        for (i, p) in policies.iter().enumerate() {
            if p.risk_sum <= Cents::ZERO {
                return Err(Error::Config(format!(
                    "policy {}: risk sum must be positive",
                    p.policy_id
                )));
            }
            if p.maturity < p.inception {
                return Err(Error::Config(format!(
                    "policy {}: maturity {} precedes inception {}",
                    p.policy_id, p.maturity, p.inception
                )));
            }
            let g = *index.entry(p.insured_id).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i as u32);
        }
        let mut offsets = Vec::with_capacity(groups.len() + 1);
        offsets.push(0);
        let mut by_insured = Vec::with_capacity(policies.len());
        for g in groups {
            by_insured.extend(g);
            offsets.push(by_insured.len());
        }
        Ok(Self {
            inception: policies.iter().map(|p| day_number(p.inception)).collect(),
            maturity: policies.iter().map(|p| day_number(p.maturity)).collect(),
            policies,
            offsets,
            by_insured,
        })
    }

    pub fn policies(&self) -> &[Policy] {
        &self.policies
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }

    /// Number of distinct insureds.
    pub fn insured_count(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    /// Indices into `policies()` held by the insured with dense index `insured`.
    pub fn policies_of(&self, insured: usize) -> &[u32] {
        &self.by_insured[self.offsets[insured]..self.offsets[insured + 1]]
    }

    /// In force on `day` when inception ≤ day ≤ maturity.
    pub fn in_force(&self, policy: usize, day: i32) -> bool {
        self.inception[policy] <= day && day <= self.maturity[policy]
    }

    pub fn total_risk_sum(&self) -> Cents {
        self.policies.iter().map(|p| p.risk_sum).sum()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct PolicyRow {
    policy_id: u64,
    insured_id: u64,
    risk_sum_eur: String,
    inception_date: NaiveDate,
    maturity_date: NaiveDate,
}

pub const PORTFOLIO_HEADER: [&str; 5] = [
    "policy_id",
    "insured_id",
    "risk_sum_eur",
    "inception_date",
    "maturity_date",
];

pub fn read_portfolio_csv<R: Read>(input: R) -> Result<Portfolio> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::Io(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != PORTFOLIO_HEADER {
        return Err(Error::Config(format!(
            "portfolio header must be `{}`",
            PORTFOLIO_HEADER.join(",")
        )));
    }
    let mut policies = Vec::new();
    for (i, row) in reader.deserialize::<PolicyRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Config(format!("portfolio line {line}: {e}")))?;
        let eur: f64 = row.risk_sum_eur.parse().map_err(|_| {
            Error::Config(format!(
                "portfolio line {line}: bad risk sum `{}`",
                row.risk_sum_eur
            ))
        })?;
        policies.push(Policy {
            policy_id: row.policy_id,
            insured_id: row.insured_id,
            risk_sum: Cents::from_eur(eur)
                .map_err(|e| Error::Config(format!("portfolio line {line}: {e}")))?,
            inception: row.inception_date,
            maturity: row.maturity_date,
        });
    }
    Portfolio::new(policies).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("portfolio: {m}")),
        other => other,
    })
}

pub fn write_portfolio_csv<W: Write>(out: W, portfolio: &Portfolio) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    for p in portfolio.policies() {
        w.serialize(PolicyRow {
            policy_id: p.policy_id,
            insured_id: p.insured_id,
            risk_sum_eur: p.risk_sum.to_string(),
            inception_date: p.inception,
            maturity_date: p.maturity,
        })
        .map_err(io)?;
    }
    if portfolio.is_empty() {
        w.write_record(PORTFOLIO_HEADER).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// A round-number point mass in the risk-sum distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub weight: f64,
}

/// Mixture of round-number atoms, a log-normal body and a Pareto tail,
/// clamped to `[min_sum, max_sum]`. One policy per insured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortfolioSpec {
    pub count: usize,
    pub min_sum: f64,
    pub max_sum: f64,
    pub atoms: Vec<Atom>,
    pub body_median: f64,
    pub body_sigma: f64,
    /// Body draws are rounded to this many euros.
    pub body_rounding: f64,
    pub tail_weight: f64,
    pub tail_start: f64,
    pub tail_alpha: f64,
    /// First day of the simulated period; every generated policy is in force
    /// for at least a year from it.
    pub start_date: NaiveDate,
}

impl Default for PortfolioSpec {
    fn default() -> Self {
        let atoms = [
            (10_000.0, 0.03),
            (20_000.0, 0.07),
            (30_000.0, 0.04),
            (50_000.0, 0.12),
            (100_000.0, 0.08),
            (200_000.0, 0.02),
        ];
        Self {
            count: 400_000,
            min_sum: 5_000.0,
            max_sum: 10_000_000.0,
            atoms: atoms
                .iter()
                .map(|&(value, weight)| Atom { value, weight })
                .collect(),
            body_median: 45_000.0,
            body_sigma: 0.7,
            body_rounding: 100.0,
            tail_weight: 0.006,
            tail_start: 250_000.0,
            tail_alpha: 1.2,
            start_date: NaiveDate::from_ymd_opt(2025, 1, 1).expect("valid date"),
        }
    }
}

impl PortfolioSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_sum > 0.0 && self.min_sum < self.max_sum) {
            return Err(Error::Config(format!(
                "portfolio: need 0 < min_sum < max_sum, got {} and {}",
                self.min_sum, self.max_sum
            )));
        }
        let mut total = self.tail_weight;
        for a in &self.atoms {
            if !(a.weight >= 0.0) || a.value < self.min_sum || a.value > self.max_sum {
                return Err(Error::Config(format!(
                    "portfolio: atom {} (weight {}) must have non-negative weight and lie in [min_sum, max_sum]",
                    a.value, a.weight
                )));
            }
            total += a.weight;
        }
        if !(self.tail_weight >= 0.0) || total > 1.0 + 1e-9 {
            return Err(Error::Config(format!(
                "portfolio: atom and tail weights must be non-negative and sum to at most 1, got {total}"
            )));
        }
        let body = 1.0 - total;
        if body > 1e-12 && !(self.body_median > 0.0 && self.body_sigma > 0.0) {
            return Err(Error::Config(
                "portfolio: body median and sigma must be positive".into(),
            ));
        }
        if self.tail_weight > 0.0 && !(self.tail_start > 0.0 && self.tail_alpha > 0.0) {
            return Err(Error::Config(
                "portfolio: tail start and alpha must be positive".into(),
            ));
        }
        if !(self.body_rounding >= 0.0) {
            return Err(Error::Config(
                "portfolio: body rounding must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn draw_sum<R: Rng + ?Sized>(&self, body: &Option<LogNormal<f64>>, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random();
        for a in &self.atoms {
            if u < a.weight {
                return a.value;
            }
            u -= a.weight;
        }
        let x = if u < self.tail_weight {
            let v: f64 = 1.0 - rng.random::<f64>();
            self.tail_start * v.powf(-1.0 / self.tail_alpha)
        } else {
            match body {
                Some(d) => d.sample(rng),
                None => self.min_sum,
            }
        };
        let x = if self.body_rounding > 0.0 {
            (x / self.body_rounding).round() * self.body_rounding
        } else {
            x
        };
        x.clamp(self.min_sum, self.max_sum)
    }
}

pub fn generate_portfolio<R: Rng + ?Sized>(spec: &PortfolioSpec, rng: &mut R) -> Result<Portfolio> {
    spec.validate()?;
    let body = LogNormal::new(
        spec.body_median.max(f64::MIN_POSITIVE).ln(),
        spec.body_sigma.max(0.0),
    )
    .ok();
    let start = spec.start_date;
    let mut policies = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let risk_sum = Cents::from_eur(spec.draw_sum(&body, rng))?;
        let inception = start - chrono::Days::new(rng.random_range(0..20 * 365));
        let maturity = start + chrono::Days::new(rng.random_range(366..30 * 365));
        policies.push(Policy {
            policy_id: i as u64 + 1,
            insured_id: i as u64 + 1,
            risk_sum,
            inception,
            maturity,
        });
    }
    Portfolio::new(policies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn date(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn policy(id: u64, insured: u64, eur: i64) -> Policy {
        Policy {
            policy_id: id,
            insured_id: insured,
            risk_sum: Cents::eur(eur),
            inception: date("2020-01-01"),
            maturity: date("2030-01-01"),
        }
    }

    #[test]
    fn groups_by_insured() {
        let p = Portfolio::new(vec![policy(1, 7, 10), policy(2, 8, 20), policy(3, 7, 30)]).unwrap();
        assert_eq!(p.insured_count(), 2);
        assert_eq!(p.policies_of(0), &[0, 2]);
        assert_eq!(p.policies_of(1), &[1]);
        assert_eq!(p.total_risk_sum(), Cents::eur(60));
    }

    #[test]
    fn rejects_invalid_policies() {
        let mut bad = policy(1, 1, 10);
        bad.maturity = date("2019-01-01");
        assert!(Portfolio::new(vec![bad]).is_err());
        assert!(Portfolio::new(vec![policy(1, 1, 0)]).is_err());
    }

    #[test]
    fn in_force_window() {
        let p = Portfolio::new(vec![policy(1, 1, 10)]).unwrap();
        assert!(p.in_force(0, day_number(date("2030-01-01"))));
        assert!(!p.in_force(0, day_number(date("2030-01-02"))));
        assert!(!p.in_force(0, day_number(date("2019-12-31"))));
    }

    #[test]
    fn csv_round_trip() {
        let p = Portfolio::new(vec![policy(1, 7, 10), policy(2, 8, 20)]).unwrap();
        let mut buf = Vec::new();
        write_portfolio_csv(&mut buf, &p).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("policy_id,insured_id,risk_sum_eur,inception_date,maturity_date\n1,7,10.00,2020-01-01,2030-01-01\n"));
        let back = read_portfolio_csv(buf.as_slice()).unwrap();
        assert_eq!(back.policies(), p.policies());
    }

    #[test]
    fn csv_errors_name_the_line() {
        let text = "policy_id,insured_id,risk_sum_eur,inception_date,maturity_date\n1,1,100,2020-01-01,2030-01-01\n2,2,abc,2020-01-01,2030-01-01\n";
        let err = read_portfolio_csv(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let err = read_portfolio_csv("a,b\n1,2\n".as_bytes())
            .unwrap_err()
            .to_string();
        assert!(err.contains("header"), "{err}");
    }

    #[test]
    fn default_generator_matches_targets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = generate_portfolio(&PortfolioSpec::default(), &mut rng).unwrap();
        assert_eq!(p.len(), 400_000);
        assert_eq!(p.insured_count(), 400_000);
        let sums: Vec<i64> = p.policies().iter().map(|x| x.risk_sum.0).collect();
        assert_eq!(*sums.iter().min().unwrap(), Cents::eur(5_000).0);
        assert_eq!(*sums.iter().max().unwrap(), Cents::eur(10_000_000).0);
        let total = p.total_risk_sum().to_eur();
        let mean = total / p.len() as f64;
        assert!((mean - 63_000.0).abs() < 0.10 * 63_000.0, "mean {mean}");
        assert!((total - 25e9).abs() < 0.15 * 25e9, "total {total}");
        let start = day_number(PortfolioSpec::default().start_date);
        assert!((0..p.len()).all(|i| p.in_force(i, start) && p.in_force(i, start + 366)));
    }

    #[test]
    fn degenerate_specs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let empty = PortfolioSpec {
            count: 0,
            ..PortfolioSpec::default()
        };
        assert!(generate_portfolio(&empty, &mut rng).unwrap().is_empty());
        let atom = PortfolioSpec {
            count: 1000,
            atoms: vec![Atom {
                value: 100_000.0,
                weight: 1.0,
            }],
            tail_weight: 0.0,
            ..PortfolioSpec::default()
        };
        let p = generate_portfolio(&atom, &mut rng).unwrap();
        assert!(p
            .policies()
            .iter()
            .all(|x| x.risk_sum == Cents::eur(100_000)));
        let bad = PortfolioSpec {
            min_sum: 10.0,
            max_sum: 5.0,
            ..PortfolioSpec::default()
        };
        assert!(generate_portfolio(&bad, &mut rng).is_err());
        let heavy = PortfolioSpec {
            tail_weight: 0.9,
            ..PortfolioSpec::default()
        };
        assert!(heavy.validate().is_err());
    }
}
