use lifecat::reinsurance::{
    layer, per_occ_recover, per_risk_recover, stop_loss_recover, PerOccXL, PerRiskXL, StopLoss,
};
use lifecat::simengine::{Claim, EventRecord, PathResult};
use lifecat::Cents;
use proptest::prelude::*;

fn path_from(events: Vec<(u64, Vec<i64>)>) -> PathResult {
    let events: Vec<EventRecord> = events
        .into_iter()
        .enumerate()
        .map(|(i, (deaths, amounts))| {
            let claims: Vec<Claim> = amounts
                .iter()
                .enumerate()
                .map(|(j, &a)| Claim {
                    policy: j as u32,
                    amount: Cents::eur(a),
                })
                .collect();
            EventRecord {
                time: i as f64 / 100.0,
                component: 0,
                deaths,
                p_insured: 0.4,
                p_covered: 0.2,
                n_insured: amounts.len() as u64,
                n_covered: amounts.len() as u64,
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

fn paths() -> impl Strategy<Value = PathResult> {
    let claim = prop_oneof![
        4 => 1_000i64..300_000,
        1 => 300_000i64..20_000_000,
    ];
    let event = (1u64..600, prop::collection::vec(claim, 0..40));
    prop::collection::vec(event, 0..12).prop_map(path_from)
}

proptest! {
    #[test]
    fn per_risk_respects_caps_and_conserves(path in paths(), aad in 0i64..3_000_000) {
        let terms = PerRiskXL { aad: Some(Cents::eur(aad)), ..PerRiskXL::standard_terms() };
        let r = per_risk_recover(&path, &terms);
        prop_assert!(r.recovered <= terms.aal.unwrap());
        prop_assert!(r.per_event.iter().all(|&x| x >= Cents::ZERO));
        prop_assert_eq!(r.per_event.iter().copied().sum::<Cents>(), r.recovered);
        prop_assert_eq!(r.recovered + r.retained, path.total);
        let layered: Cents = path.events.iter().flat_map(|e| &e.claims)
            .map(|c| layer(c.amount, terms.retention, terms.limit)).sum();
        prop_assert!(r.recovered <= layered);
    }

    #[test]
    fn per_risk_recovery_falls_as_retention_rises(path in paths(), lo in 0i64..500_000, step in 0i64..500_000) {
        let a = PerRiskXL { retention: Cents::eur(lo), ..PerRiskXL::standard_terms() };
        let b = PerRiskXL { retention: Cents::eur(lo + step), ..a };
        prop_assert!(per_risk_recover(&path, &b).recovered <= per_risk_recover(&path, &a).recovered);
    }

    #[test]
    fn per_occurrence_capacity_is_bounded(path in paths(), reinstatements in 0u32..3) {
        let terms = PerOccXL {
            retention: Cents::eur(100_000),
            limit: Cents::eur(2_000_000),
            reinstatements,
            aal: None,
            min_deaths: 0,
        };
        let r = per_occ_recover(&path, &terms);
        let capacity = Cents(terms.limit.0 * (1 + reinstatements as i64));
        prop_assert!(r.recovered <= capacity);
        prop_assert_eq!(r.recovered + r.retained, path.total);
        for (e, &x) in path.events.iter().zip(&r.per_event) {
            prop_assert!(x >= Cents::ZERO);
            prop_assert!(x <= layer(e.total, terms.retention, terms.limit));
        }
    }

    #[test]
    fn per_occurrence_qualifier_only_removes_cover(path in paths(), min_deaths in 0u64..600) {
        let open = PerOccXL::standard_terms();
        let strict = PerOccXL { min_deaths, ..open };
        let r = per_occ_recover(&path, &strict);
        for (e, &x) in path.events.iter().zip(&r.per_event) {
            if e.deaths < min_deaths {
                prop_assert_eq!(x, Cents::ZERO);
            }
        }
        prop_assert!(r.recovered <= per_occ_recover(&path, &open).recovered);
    }

    #[test]
    fn stop_loss_is_the_layer_of_the_total(path in paths(), retention in 0i64..50_000_000, limit in 0i64..100_000_000) {
        let terms = StopLoss { retention: Cents::eur(retention), limit: Cents::eur(limit) };
        let r = stop_loss_recover(&path, &terms);
        prop_assert_eq!(r.recovered, layer(path.total, terms.retention, terms.limit));
        prop_assert!(r.per_event.iter().all(|&x| x >= Cents::ZERO));
    }
}

#[test]
fn zero_limit_recovers_nothing() {
    let path = path_from(vec![(50, vec![5_000_000, 20_000_000]), (3, vec![900_000])]);
    let pr = PerRiskXL {
        limit: Cents::ZERO,
        ..PerRiskXL::standard_terms()
    };
    let po = PerOccXL {
        limit: Cents::ZERO,
        ..PerOccXL::standard_terms()
    };
    let sl = StopLoss {
        retention: Cents::ZERO,
        limit: Cents::ZERO,
    };
    assert_eq!(per_risk_recover(&path, &pr).recovered, Cents::ZERO);
    assert_eq!(per_occ_recover(&path, &po).recovered, Cents::ZERO);
    let r = stop_loss_recover(&path, &sl);
    assert_eq!(r.recovered, Cents::ZERO);
    assert_eq!(r.retained, path.total);
}
