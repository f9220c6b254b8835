//! Recoveries under per-risk and per-occurrence excess-of-loss treaties and
//! stop-loss, applied to simulated paths in event order.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::money::Cents;
use crate::simengine::PathResult;
use crate::stats::quantile_sorted;

/// `min(max(c - retention, 0), limit)`.
pub fn layer(claim: Cents, retention: Cents, limit: Cents) -> Cents {
    (claim - retention).max(Cents::ZERO).min(limit)
}

/// Order in which the aggregate deductible and aggregate limit act on
/// cumulative layered losses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateOrder {
    /// `min(max(L - AAD, 0), AAL)`.
    #[default]
    DeductibleFirst,
    /// `max(min(L, AAL) - AAD, 0)`.
    LimitFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerRiskXL {
    pub retention: Cents,
    pub limit: Cents,
    pub aal: Option<Cents>,
    pub aad: Option<Cents>,
    #[serde(default)]
    pub order: AggregateOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerOccXL {
    pub retention: Cents,
    pub limit: Cents,
    pub reinstatements: u32,
    pub aal: Option<Cents>,
    /// Events with fewer deaths do not qualify for cover.
    #[serde(default)]
    pub min_deaths: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopLoss {
    pub retention: Cents,
    pub limit: Cents,
}

impl PerRiskXL {
    pub fn standard_terms() -> Self {
        Self {
            retention: Cents::eur(100_000),
            limit: Cents::eur(10_000_000),
            aal: Some(Cents::eur(80_000_000)),
            aad: Some(Cents::eur(1_000_000)),
            order: AggregateOrder::DeductibleFirst,
        }
    }
}

impl PerOccXL {
    pub fn standard_terms() -> Self {
        Self {
            retention: Cents::eur(500_000),
            limit: Cents::eur(50_000_000),
            reinstatements: 1,
            aal: Some(Cents::eur(150_000_000)),
            min_deaths: 0,
        }
    }
}

impl StopLoss {
    pub fn standard_terms() -> Self {
        Self {
            retention: Cents::eur(20_000_000),
            limit: Cents::eur(500_000_000),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryResult {
    /// Recovery attributed to each event of the path, in order.
    pub per_event: Vec<Cents>,
    pub recovered: Cents,
    /// Gross claims less recoveries.
    pub retained: Cents,
}

impl RecoveryResult {
    fn from_events(path: &PathResult, per_event: Vec<Cents>) -> Self {
        let recovered: Cents = per_event.iter().sum();
        Self {
            per_event,
            recovered,
            retained: path.total - recovered,
        }
    }
}

/// Cumulative paid amount after the aggregate features act on cumulative
/// layered losses `total`.
fn aggregate(total: Cents, aad: Option<Cents>, aal: Option<Cents>, order: AggregateOrder) -> Cents {
    let aad = aad.unwrap_or(Cents::ZERO);
    let aal = aal.unwrap_or(Cents::MAX);
    match order {
        AggregateOrder::DeductibleFirst => (total - aad).max(Cents::ZERO).min(aal),
        AggregateOrder::LimitFirst => (total.min(aal) - aad).max(Cents::ZERO),
    }
}

pub fn per_risk_recover(path: &PathResult, terms: &PerRiskXL) -> RecoveryResult {
    let mut layered = Cents::ZERO;
    let mut paid = Cents::ZERO;
    let per_event = path
        .events
        .iter()
        .map(|e| {
            for c in &e.claims {
                layered += layer(c.amount, terms.retention, terms.limit);
            }
            let now = aggregate(layered, terms.aad, terms.aal, terms.order);
            let r = now - paid;
            paid = now;
            r
        })
        .collect();
    RecoveryResult::from_events(path, per_event)
}

/// Per-event layer with reinstatements: when the cover is used up it is
/// restored to the full limit, and the rest of the same event's layered
/// loss draws on the restored cover.
pub fn per_occ_recover(path: &PathResult, terms: &PerOccXL) -> RecoveryResult {
    let mut cover = terms.limit;
    let mut reinstatements = terms.reinstatements;
    let mut paid = Cents::ZERO;
    let aal = terms.aal.unwrap_or(Cents::MAX);
    let per_event = path
        .events
        .iter()
        .map(|e| {
            if e.deaths < terms.min_deaths {
                return Cents::ZERO;
            }
            let mut due = layer(e.total, terms.retention, terms.limit);
            let mut r = Cents::ZERO;
            while due > Cents::ZERO && cover > Cents::ZERO {
                let take = due.min(cover);
                r += take;
                due -= take;
                cover -= take;
                if cover == Cents::ZERO && reinstatements > 0 {
                    cover = terms.limit;
                    reinstatements -= 1;
                }
            }
            let r = r.min(aal - paid);
            paid += r;
            r
        })
        .collect();
    RecoveryResult::from_events(path, per_event)
}

/// Layer on the path's cumulative claims, attributed to the events that
/// push the running total through the layer.
pub fn stop_loss_recover(path: &PathResult, terms: &StopLoss) -> RecoveryResult {
    let mut cumulative = Cents::ZERO;
    let per_event = path
        .events
        .iter()
        .map(|e| {
            let before = layer(cumulative, terms.retention, terms.limit);
            cumulative += e.total;
            layer(cumulative, terms.retention, terms.limit) - before
        })
        .collect();
    RecoveryResult::from_events(path, per_event)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ContractTerms {
    PerRisk(PerRiskXL),
    PerOccurrence(PerOccXL),
    StopLoss(StopLoss),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contract {
    pub name: String,
    #[serde(flatten)]
    pub terms: ContractTerms,
}

impl Contract {
    pub fn new(name: impl Into<String>, terms: ContractTerms) -> Result<Self> {
        let (retention, limit) = match terms {
            ContractTerms::PerRisk(t) => (t.retention, t.limit),
            ContractTerms::PerOccurrence(t) => (t.retention, t.limit),
            ContractTerms::StopLoss(t) => (t.retention, t.limit),
        };
        let name = name.into();
        if retention < Cents::ZERO || limit < Cents::ZERO {
            return Err(Error::Config(format!(
                "contract `{name}`: retention and limit must be non-negative"
            )));
        }
        let aggregates = match terms {
            ContractTerms::PerRisk(t) => vec![t.aal, t.aad],
            ContractTerms::PerOccurrence(t) => vec![t.aal],
            ContractTerms::StopLoss(_) => vec![],
        };
        if aggregates.into_iter().flatten().any(|a| a < Cents::ZERO) {
            return Err(Error::Config(format!(
                "contract `{name}`: aggregate terms must be non-negative"
            )));
        }
        Ok(Self { name, terms })
    }

    /// The three treaties of the worked pricing example.
    pub fn standard_contracts() -> Vec<Contract> {
        vec![
            Contract::new(
                "per_risk",
                ContractTerms::PerRisk(PerRiskXL::standard_terms()),
            )
            .unwrap(),
            Contract::new(
                "per_occurrence",
                ContractTerms::PerOccurrence(PerOccXL::standard_terms()),
            )
            .unwrap(),
            Contract::new(
                "stop_loss",
                ContractTerms::StopLoss(StopLoss::standard_terms()),
            )
            .unwrap(),
        ]
    }

    pub fn limit(&self) -> Cents {
        match self.terms {
            ContractTerms::PerRisk(t) => t.limit,
            ContractTerms::PerOccurrence(t) => t.limit,
            ContractTerms::StopLoss(t) => t.limit,
        }
    }

    pub fn recover(&self, path: &PathResult) -> RecoveryResult {
        match &self.terms {
            ContractTerms::PerRisk(t) => per_risk_recover(path, t),
            ContractTerms::PerOccurrence(t) => per_occ_recover(path, t),
            ContractTerms::StopLoss(t) => stop_loss_recover(path, t),
        }
    }
}

pub const QUANTILE_GRID: [f64; 11] = [
    0.5, 0.75, 0.9, 0.95, 0.99, 0.995, 0.999, 0.9995, 0.9999, 0.99995, 0.99999,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossStats {
    /// Mean in euros.
    pub mean: f64,
    pub min: Cents,
    pub max: Cents,
    pub quantiles: Vec<(f64, Cents)>,
}

impl LossStats {
    pub fn from_losses(losses: &[Cents]) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let mut sorted = losses.to_vec();
        sorted.sort_unstable();
        let total: i128 = sorted.iter().map(|c| c.0 as i128).sum();
        Ok(Self {
            mean: total as f64 / sorted.len() as f64 / 100.0,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
            quantiles: QUANTILE_GRID
                .iter()
                .map(|&p| (p, quantile_sorted(&sorted, p).expect("non-empty")))
                .collect(),
        })
    }

    pub fn quantile(&self, p: f64) -> Option<Cents> {
        self.quantiles
            .iter()
            .find(|(q, _)| (q - p).abs() < 1e-12)
            .map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSummary {
    pub gross: LossStats,
    pub recovered: LossStats,
    pub after: LossStats,
    /// Mean recovery over the layer limit; `None` for a zero limit.
    pub rate_on_line: Option<f64>,
}

pub fn price_summary(
    gross: &[Cents],
    recovered: &[Cents],
    after: &[Cents],
    limit: Cents,
) -> Result<PriceSummary> {
    if gross.len() != recovered.len() || gross.len() != after.len() {
        return Err(Error::Config("loss vectors differ in length".into()));
    }
    let recovered_stats = LossStats::from_losses(recovered)?;
    Ok(PriceSummary {
        rate_on_line: (limit > Cents::ZERO).then(|| recovered_stats.mean / limit.to_eur()),
        gross: LossStats::from_losses(gross)?,
        recovered: recovered_stats,
        after: LossStats::from_losses(after)?,
    })
}

/// Table with rows `Total Claims`, `Reinsured`, `After` and columns mean,
/// min, max and the quantile grid.
pub fn write_price_table<W: Write>(out: W, summary: &PriceSummary) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut header = vec!["row".to_string(), "mean".into(), "min".into(), "max".into()];
    header.extend(QUANTILE_GRID.iter().map(|p| p.to_string()));
    w.write_record(&header).map_err(io)?;
    for (name, s) in [
        ("Total Claims", &summary.gross),
        ("Reinsured", &summary.recovered),
        ("After", &summary.after),
    ] {
        let mut row = vec![
            name.to_string(),
            format!("{:.2}", s.mean),
            s.min.to_string(),
            s.max.to_string(),
        ];
        row.extend(s.quantiles.iter().map(|(_, v)| v.to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simengine::{Claim, EventRecord};

    fn path(events: &[(u64, &[i64])]) -> PathResult {
        let events: Vec<EventRecord> = events
            .iter()
            .enumerate()
            .map(|(i, (deaths, claims))| {
                let claims: Vec<Claim> = claims
                    .iter()
                    .enumerate()
                    .map(|(k, &eur)| Claim {
                        policy: k as u32,
                        amount: Cents::eur(eur),
                    })
                    .collect();
                EventRecord {
                    time: (i + 1) as f64 / 10.0,
                    component: 0,
                    deaths: *deaths,
                    p_insured: 0.0,
                    p_covered: 0.0,
                    n_insured: 0,
                    n_covered: claims.len() as u64,
                    total: claims.iter().map(|c| c.amount).sum(),
                    claims,
                }
            })
            .collect();
        PathResult {
            total: events.iter().map(|e| e.total).sum(),
            events,
        }
    }

    fn total_path(eur: i64) -> PathResult {
        let mut p = path(&[(1, &[1])]);
        p.events[0].total = Cents::eur(eur);
        p.total = Cents::eur(eur);
        p
    }

    #[test]
    fn layer_arithmetic() {
        let (r, l) = (Cents::eur(100_000), Cents::eur(10_000_000));
        assert_eq!(layer(Cents::eur(90_000), r, l), Cents::ZERO);
        assert_eq!(layer(Cents::eur(5_100_000), r, l), Cents::eur(5_000_000));
        assert_eq!(layer(Cents::eur(20_100_000), r, l), l);
    }

    #[test]
    fn stop_loss_reference_rows() {
        let t = StopLoss::standard_terms();
        for (gross, rec, after) in [
            (78_456_800, 58_456_800, 20_000_000),
            (154_211_650, 134_211_650, 20_000_000),
            (6_945_650_200, 500_000_000, 6_445_650_200),
            (19_000_000, 0, 19_000_000),
        ] {
            let r = stop_loss_recover(&total_path(gross), &t);
            assert_eq!(
                (r.recovered, r.retained),
                (Cents::eur(rec), Cents::eur(after))
            );
        }
    }

    #[test]
    fn stop_loss_allocated_to_crossing_events() {
        let p = path(&[(1, &[15_000_000]), (1, &[10_000_000]), (1, &[1_000_000])]);
        let r = stop_loss_recover(&p, &StopLoss::standard_terms());
        assert_eq!(
            r.per_event,
            vec![Cents::ZERO, Cents::eur(5_000_000), Cents::eur(1_000_000)]
        );
    }

    #[test]
    fn per_risk_deductible_absorbs_small_layer() {
        let r = per_risk_recover(&path(&[(1, &[600_000])]), &PerRiskXL::standard_terms());
        assert_eq!(r.recovered, Cents::ZERO);
        assert_eq!(r.retained, Cents::eur(600_000));
    }

    #[test]
    fn per_risk_plain_layer_sum() {
        let t = PerRiskXL {
            aal: None,
            aad: None,
            ..PerRiskXL::standard_terms()
        };
        let p = path(&[(3, &[600_000, 50_000, 30_000_000]), (1, &[200_000])]);
        let r = per_risk_recover(&p, &t);
        assert_eq!(r.recovered, Cents::eur(500_000 + 10_000_000 + 100_000));
    }

    #[test]
    fn per_risk_aggregate_orders() {
        // layered 500k + 10M + 100k = 10.6M
        let p = path(&[(3, &[600_000, 50_000, 30_000_000]), (1, &[200_000])]);
        let base = PerRiskXL {
            aal: Some(Cents::eur(10_000_000)),
            aad: Some(Cents::eur(1_000_000)),
            ..PerRiskXL::standard_terms()
        };
        let first = per_risk_recover(&p, &base);
        assert_eq!(first.recovered, Cents::eur(9_600_000));
        assert_eq!(
            first.per_event,
            vec![Cents::eur(9_500_000), Cents::eur(100_000)]
        );
        let later = per_risk_recover(
            &p,
            &PerRiskXL {
                order: AggregateOrder::LimitFirst,
                ..base
            },
        );
        assert_eq!(later.recovered, Cents::eur(9_000_000));
    }

    #[test]
    fn per_risk_caps_at_aal() {
        let claims = vec![20_000_000i64; 12];
        let r = per_risk_recover(&path(&[(12, &claims)]), &PerRiskXL::standard_terms());
        assert_eq!(r.recovered, Cents::eur(80_000_000));
    }

    #[test]
    fn per_occurrence_reinstatement_trace() {
        let t = PerOccXL::standard_terms();
        let p = path(&[
            (100, &[60_500_000]),
            (100, &[60_500_000]),
            (100, &[60_500_000]),
        ]);
        let r = per_occ_recover(&p, &t);
        assert_eq!(
            r.per_event,
            vec![Cents::eur(50_000_000), Cents::eur(50_000_000), Cents::ZERO]
        );
        assert_eq!(r.recovered, Cents::eur(100_000_000));
        let small = per_occ_recover(&path(&[(1, &[500_000])]), &t);
        assert_eq!(small.recovered, Cents::ZERO);
    }

    #[test]
    fn per_occurrence_reinstated_cover_continues_within_event() {
        let t = PerOccXL::standard_terms();
        let p = path(&[
            (10, &[30_500_000]),
            (10, &[50_500_000]),
            (10, &[50_500_000]),
        ]);
        let r = per_occ_recover(&p, &t);
        // 30M, then 20M from the first cover and 30M from the reinstated one, then the last 20M
        assert_eq!(
            r.per_event,
            vec![
                Cents::eur(30_000_000),
                Cents::eur(50_000_000),
                Cents::eur(20_000_000)
            ]
        );
    }

    #[test]
    fn per_occurrence_aal_and_qualifier() {
        let t = PerOccXL {
            reinstatements: 5,
            aal: Some(Cents::eur(120_000_000)),
            ..PerOccXL::standard_terms()
        };
        let p = path(&[
            (10, &[60_500_000]),
            (10, &[60_500_000]),
            (10, &[60_500_000]),
        ]);
        assert_eq!(per_occ_recover(&p, &t).recovered, Cents::eur(120_000_000));
        let q = PerOccXL {
            min_deaths: 3,
            ..PerOccXL::standard_terms()
        };
        let p = path(&[(2, &[10_000_000]), (3, &[10_000_000])]);
        assert_eq!(
            per_occ_recover(&p, &q).per_event,
            vec![Cents::ZERO, Cents::eur(9_500_000)]
        );
    }

    #[test]
    fn zero_limit_recovers_nothing() {
        let c = Contract::new(
            "none",
            ContractTerms::PerRisk(PerRiskXL {
                limit: Cents::ZERO,
                ..PerRiskXL::standard_terms()
            }),
        )
        .unwrap();
        let p = path(&[(3, &[600_000, 50_000, 30_000_000])]);
        let r = c.recover(&p);
        assert_eq!((r.recovered, r.retained), (Cents::ZERO, p.total));
        assert!(Contract::new(
            "bad",
            ContractTerms::StopLoss(StopLoss {
                retention: Cents(-1),
                limit: Cents(1)
            })
        )
        .is_err());
    }

    #[test]
    fn summary_of_constant_vector() {
        let v = vec![Cents::eur(7); 1000];
        let s = price_summary(&v, &v, &vec![Cents::ZERO; 1000], Cents::eur(700)).unwrap();
        assert!(s.gross.quantiles.iter().all(|&(_, q)| q == Cents::eur(7)));
        assert_eq!(
            (s.gross.min, s.gross.max, s.gross.mean),
            (Cents::eur(7), Cents::eur(7), 7.0)
        );
        assert!((s.rate_on_line.unwrap() - 0.01).abs() < 1e-15);
        let mut buf = Vec::new();
        write_price_table(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("row,mean,min,max,0.5,0.75,0.9,0.95,0.99,0.995,0.999,0.9995,0.9999,0.99995,0.99999\nTotal Claims,7.00,7.00,7.00,"));
    }

    #[test]
    fn contract_serde_shape() {
        let c = &Contract::standard_contracts()[1];
        let json = serde_json::to_string(c).unwrap();
        assert!(json.contains("\"type\":\"per_occurrence\""), "{json}");
        let back: Contract = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, c);
    }
}
