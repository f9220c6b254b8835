use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use chrono::{Duration, NaiveDate};
use lifecat::distributions::{GpdParams, PoissonParams};
use lifecat_cli::commands::diagnose::diagnose_catalog;
use lifecat_cli::commands::fit::{fit_catalogs, FitReport};
use lifecat_cli::commands::risk::RiskReport;
use lifecat_cli::report::Provenance;
use lifecat_cli::{CatalogRecord, EventCatalog};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lifecat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lifecat"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(1900, 1, 1).unwrap()
}

/// Catalog over 1900-1999: small accidents plus GPD excesses over 20 at
/// `rate` per year, with the yearly rate growing by `trend` per year.
fn synthetic(seed: u64, rate: f64, trend: f64, gpd: GpdParams) -> Vec<CatalogRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for year in 0..100 {
        let r = (rate * (1.0 + trend * year as f64)).max(0.0);
        let big = PoissonParams::new(r).unwrap().sample(&mut rng);
        let small = PoissonParams::new(2.0).unwrap().sample(&mut rng);
        for k in 0..big + small {
            let day = start()
                + Duration::days((year as f64 * 365.25 + rng.random_range(0.0..365.0)) as i64);
            let deaths = if k < big {
                21 + gpd.sample(&mut rng).floor() as u64
            } else {
                rng.random_range(1..=20)
            };
            records.push(CatalogRecord {
                date: day,
                deaths,
                country: "XX".into(),
            });
        }
    }
    records
}

fn write_catalog(path: &Path, records: &[CatalogRecord]) {
    let mut s = String::from("date,deaths,country\n");
    for r in records {
        writeln!(s, "{},{},{}", r.date, r.deaths, r.country).unwrap();
    }
    std::fs::write(path, s).unwrap();
}

fn window() -> (NaiveDate, NaiveDate) {
    (start(), NaiveDate::from_ymd_opt(1999, 12, 31).unwrap())
}

#[test]
fn fit_recovers_a_known_model_within_three_standard_errors() {
    let truth = GpdParams::new(0.3, 10.0).unwrap();
    let records = synthetic(1, 3.0, 0.0, truth);
    let (s, e) = window();
    let catalog = EventCatalog::new(records, s, e).unwrap();
    let r = fit_catalogs(
        &catalog,
        None,
        20.0,
        0.95,
        Provenance::new(None, String::new()),
    )
    .unwrap();
    let within = |est: f64, se: Option<f64>, want: f64| (est - want).abs() < 3.0 * se.unwrap();
    // integer death counts shift the excesses by a uniform rounding of at most 1
    assert!(
        within(r.severity.xi.estimate, r.severity.xi.std_error, 0.3),
        "{:?}",
        r.severity.xi
    );
    assert!(
        within(r.severity.beta.estimate, r.severity.beta.std_error, 10.0),
        "{:?}",
        r.severity.beta
    );
    let rate_se = (r.frequency.rate / r.frequency.span_years).sqrt();
    assert!((r.frequency.rate - 3.0).abs() < 3.0 * rate_se);
}

#[test]
fn strong_trend_is_detected() {
    let truth = GpdParams::new(0.3, 10.0).unwrap();
    let (s, e) = window();
    let catalog = EventCatalog::new(synthetic(2, 0.2, 0.3, truth), s, e).unwrap();
    let (report, _, _) = diagnose_catalog(
        &catalog,
        20.0,
        None,
        0.05,
        Provenance::new(None, String::new()),
    )
    .unwrap();
    let m1 = &report.trends[0];
    assert_eq!(m1.model, "M1");
    assert_eq!(m1.significant, Some(true), "{m1:?}");
}

#[test]
fn fit_diagnose_and_risk_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_catalog(
        &d.join("catalog.csv"),
        &synthetic(3, 0.3, 0.0, GpdParams::new(0.6, 12.0).unwrap()),
    );

    let out = lifecat(
        d,
        &[
            "fit",
            "--catalog",
            "catalog.csv",
            "--threshold",
            "20",
            "--out-dir",
            "fit",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: FitReport =
        serde_json::from_slice(&std::fs::read(d.join("fit/fit.json")).unwrap()).unwrap();
    assert_eq!(report.provenance.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(report.provenance.config_hash.len(), 64);
    assert!(report.severity.xi.profile.is_some());

    let out = lifecat(
        d,
        &[
            "diagnose",
            "--catalog",
            "catalog.csv",
            "--threshold",
            "20",
            "--out-dir",
            "diag",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "mean_excess.csv",
        "stability.csv",
        "pairs.csv",
        "qq_pp.csv",
        "diagnose.json",
    ] {
        assert!(d.join("diag").join(f).exists(), "{f}");
    }

    let out = lifecat(d, &["risk", "--fit", "fit/fit.json", "--out-dir", "risk"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(d.join("risk/return_levels.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,estimate,lo,hi,method"));
    let methods: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(methods.iter().filter(|&&m| m == "delta").count(), 4);
    assert_eq!(methods.iter().filter(|&&m| m == "profile").count(), 4);
}

#[test]
fn reference_parameters_give_the_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = lifecat(
        dir.path(),
        &[
            "risk",
            "--threshold",
            "20",
            "--xi",
            "0.938",
            "--beta",
            "12.9",
            "--rate",
            "0.15",
        ],
    );
    assert!(out.status.success());
    let report: RiskReport =
        serde_json::from_slice(&std::fs::read(dir.path().join("risk.json")).unwrap()).unwrap();
    let levels: Vec<f64> = report.return_levels.iter().map(|r| r.rounded).collect();
    let es: Vec<f64> = report
        .measures
        .iter()
        .filter_map(|r| r.es_rounded)
        .collect();
    assert_eq!(levels, [25.0, 170.0, 320.0, 1400.0]);
    assert_eq!(es, [310.0, 2600.0, 5000.0, 23000.0]);
}

#[test]
fn price_and_simulate_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("run.json"),
        r#"{"portfolio": {"generate": {"count": 5000}}, "run": {"paths": 500}}"#,
    )
    .unwrap();
    let run = |out: &str| {
        let o = lifecat(
            d,
            &[
                "price",
                "--config",
                "run.json",
                "--seed",
                "9",
                "--workers",
                "2",
                "--out-dir",
                out,
            ],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(d.join(out).join("price.json")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert!(a.contains("\"seed\": 9"));
    let table = std::fs::read_to_string(d.join("a/price_stop_loss.csv")).unwrap();
    assert!(table.starts_with("row,mean,min,max,0.5,"));
    assert_eq!(table.lines().count(), 4);

    let o = lifecat(
        d,
        &[
            "simulate",
            "--config",
            "run.json",
            "--paths",
            "50",
            "--claims",
            "--out-dir",
            "sim",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let paths = std::fs::read_to_string(d.join("sim/paths.csv")).unwrap();
    assert_eq!(paths.lines().count(), 51);
    assert!(d.join("sim/events.csv").exists() && d.join("sim/claims.csv").exists());
}

#[test]
fn validation_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("bad.json"),
        r#"{"contracts": [{"type": "stop_loss", "name": "x", "retention": 1}]}"#,
    )
    .unwrap();
    let o = lifecat(d, &["price", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("limit"));

    std::fs::write(d.join("empty.csv"), "date,deaths,country\n").unwrap();
    let o = lifecat(d, &["fit", "--catalog", "empty.csv", "--threshold", "20"]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(
        d.join("broken.csv"),
        "date,deaths,country\n1950-01-01,30,FI\n1950-02-30,40,FI\n",
    )
    .unwrap();
    let o = lifecat(d, &["fit", "--catalog", "broken.csv", "--threshold", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    std::fs::write(
        d.join("few.csv"),
        "date,deaths,country\n1950-01-01,30,FI\n1951-01-01,40,FI\n",
    )
    .unwrap();
    let o = lifecat(d, &["fit", "--catalog", "few.csv", "--threshold", "20"]);
    assert_eq!(o.status.code(), Some(2));

    let o = lifecat(
        d,
        &[
            "risk",
            "--threshold",
            "20",
            "--xi",
            "0.9",
            "--beta",
            "12",
            "--rate",
            "0.15",
            "--periods",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("domain"));
}

#[test]
fn frequency_comes_from_the_separate_catalog() {
    let gpd = GpdParams::new(0.5, 10.0).unwrap();
    let (s, e) = window();
    let severity = EventCatalog::new(synthetic(4, 1.0, 0.0, gpd), s, e).unwrap();
    let frequency = EventCatalog::new(synthetic(5, 0.1, 0.0, gpd), s, e).unwrap();
    let r = fit_catalogs(
        &severity,
        Some(&frequency),
        20.0,
        0.95,
        Provenance::new(None, String::new()),
    )
    .unwrap();
    let count = frequency.exceedances(20.0).0.len();
    assert_eq!(r.frequency.exceedances, count);
    assert!((r.frequency.rate - count as f64 / frequency.span_years()).abs() < 1e-12);
    assert_eq!(r.severity.exceedances, severity.exceedances(20.0).0.len());
}
