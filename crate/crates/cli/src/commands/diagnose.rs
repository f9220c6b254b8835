use std::path::PathBuf;

use chrono::NaiveDate;
use lifecat::diagnostics::{
    adjacent_pairs, default_threshold_grid, ks_uniformity, mean_excess_curve, qq_pp_data,
    stability_scan, waiting_times, write_mean_excess_csv, write_pairs_csv, write_stability_csv,
    MeanExcessPoint, StabilityScanRow,
};
use lifecat::distributions::GpdParams;
use lifecat::fitting::{fit_gpd, FitResult};
use lifecat::pointprocess::{fit_pot, lr_test, LrTest, PotModel};
use serde::{Deserialize, Serialize};

use crate::catalog::EventCatalog;
use crate::report::{hash_inputs, read_file, OutDir, Provenance};
use crate::{CliError, Result};

#[derive(Debug, Clone)]
pub struct DiagnoseArgs {
    pub catalog: PathBuf,
    pub threshold: f64,
    pub window: Option<(NaiveDate, NaiveDate)>,
    /// Thresholds for the mean-excess and stability scans; integers from the
    /// smallest observation to the fifth largest when absent.
    pub grid: Option<Vec<f64>>,
    /// Significance level of the test verdicts.
    pub significance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub waiting_times: usize,
    /// Exceedances per year used to transform the waiting times.
    pub rate: f64,
    pub small_sample: bool,
    pub rejects: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendTest {
    pub model: String,
    pub fit: Option<FitResult>,
    pub test: Option<LrTest>,
    pub significant: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub provenance: Provenance,
    pub threshold: f64,
    pub exceedances: usize,
    pub span_years: f64,
    pub significance: f64,
    pub ks: KsReport,
    pub homogeneous: FitResult,
    pub trends: Vec<TrendTest>,
    #[serde(skip)]
    pub mean_excess: Vec<MeanExcessPoint>,
    #[serde(skip)]
    pub stability: Vec<StabilityScanRow>,
}

pub fn diagnose_catalog(
    catalog: &EventCatalog,
    threshold: f64,
    grid: Option<&[f64]>,
    significance: f64,
    provenance: Provenance,
) -> Result<(DiagnoseReport, Vec<(f64, f64)>, Vec<PlotPoint>)> {
    if !(significance > 0.0 && significance < 1.0) {
        return Err(CliError::Invalid(format!(
            "significance must lie in (0, 1), got {significance}"
        )));
    }
    let deaths = catalog.deaths();
    let grid = grid
        .map(<[f64]>::to_vec)
        .unwrap_or_else(|| default_threshold_grid(&deaths));
    let data = catalog.pot_data(threshold)?;
    if data.count() < 5 {
        return Err(CliError::Invalid(format!(
            "only {} accidents exceed the threshold {threshold}; at least 5 are needed",
            data.count()
        )));
    }
    let rate = data.count() as f64 / data.span();
    let waits = waiting_times(0.0, data.times());
    let ks = ks_uniformity(&waits, rate)?;
    let pairs = adjacent_pairs(&ks.transformed);

    let sample = data.excess_sample()?;
    let gpd_fit = fit_gpd(&sample)?;
    let plots = match GpdParams::new(gpd_fit.params[0], gpd_fit.params[1]) {
        Ok(g) if gpd_fit.is_usable() => {
            let p = qq_pp_data(sample.excesses(), &g);
            p.probability
                .iter()
                .map(|&(x, y)| PlotPoint { kind: "pp", x, y })
                .chain(
                    p.quantile
                        .iter()
                        .map(|&(x, y)| PlotPoint { kind: "qq", x, y }),
                )
                .collect()
        }
        _ => Vec::new(),
    };

    let m0 = fit_pot(&data, PotModel::M0)?;
    let trends = [(PotModel::M1, "M1"), (PotModel::M2, "M2")]
        .into_iter()
        .map(|(model, name)| {
            let outcome = fit_pot(&data, model).and_then(|f| Ok((lr_test(&m0, &f, 1)?, f)));
            match outcome {
                Ok((test, fit)) => TrendTest {
                    model: name.into(),
                    significant: Some(test.p_value < significance),
                    fit: Some(fit),
                    test: Some(test),
                    error: None,
                },
                Err(e) => TrendTest {
                    model: name.into(),
                    fit: None,
                    test: None,
                    significant: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let report = DiagnoseReport {
        provenance,
        threshold,
        exceedances: data.count(),
        span_years: data.span(),
        significance,
        ks: KsReport {
            statistic: ks.statistic,
            p_value: ks.p_value,
            waiting_times: waits.len(),
            rate,
            small_sample: ks.small_sample,
            rejects: ks.p_value < significance,
        },
        homogeneous: m0,
        trends,
        mean_excess: mean_excess_curve(&deaths, &grid),
        stability: stability_scan(&deaths, &grid),
    };
    Ok((report, pairs, plots))
}

/// One probability-plot (`pp`) or quantile-plot (`qq`) point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlotPoint {
    pub kind: &'static str,
    pub x: f64,
    pub y: f64,
}

/// Threshold and homogeneity diagnostics. Writes `mean_excess.csv`,
/// `stability.csv`, `pairs.csv`, `qq_pp.csv` and `diagnose.json`.
pub fn cmd_diagnose(args: &DiagnoseArgs, out: Option<&OutDir>) -> Result<DiagnoseReport> {
    let catalog = EventCatalog::read(&args.catalog, args.window)?;
    let hash = hash_inputs([
        read_file(&args.catalog)?.as_slice(),
        format!(
            "diagnose u={} window={:?} grid={:?} significance={}",
            args.threshold, args.window, args.grid, args.significance
        )
        .as_bytes(),
    ]);
    let (report, pairs, plots) = diagnose_catalog(
        &catalog,
        args.threshold,
        args.grid.as_deref(),
        args.significance,
        Provenance::new(None, hash),
    )?;
    if let Some(out) = out {
        out.write_with("mean_excess.csv", |w| {
            write_mean_excess_csv(w, &report.mean_excess)
        })?;
        out.write_with("stability.csv", |w| {
            write_stability_csv(w, &report.stability)
        })?;
        out.write_with("pairs.csv", |w| write_pairs_csv(w, &pairs))?;
        out.write_csv("qq_pp.csv", &["kind", "x", "y"], &plots)?;
        out.write_json("diagnose.json", &report)?;
    }
    Ok(report)
}
