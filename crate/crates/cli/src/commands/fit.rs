use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use lifecat::distributions::GpdParams;
use lifecat::fitting::{
    asymptotic_ci_scaled, fit_gpd, fit_poisson_intensity, marked_process_loglik, profile_ci,
    ConfidenceInterval, FitStatus, GpdLikelihood, WaldScale,
};
use serde::{Deserialize, Serialize};

use crate::catalog::EventCatalog;
use crate::report::{hash_inputs, read_file, OutDir, Provenance};
use crate::{CliError, Result};

pub const MIN_EXCEEDANCES: usize = 5;

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub catalog: PathBuf,
    pub threshold: f64,
    /// Catalog for the exceedance rate; the severity catalog when absent.
    pub frequency_catalog: Option<PathBuf>,
    pub window: Option<(NaiveDate, NaiveDate)>,
    pub frequency_window: Option<(NaiveDate, NaiveDate)>,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub asymptotic: Option<ConfidenceInterval>,
    pub profile: Option<ConfidenceInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityReport {
    pub exceedances: usize,
    pub span_years: f64,
    pub xi: ParamReport,
    pub beta: ParamReport,
    pub loglik: f64,
    pub status: FitStatus,
    /// Covariance of `(ξ, β)`.
    pub covariance: Option<Vec<Vec<f64>>>,
    /// Excesses over the threshold, kept for profile intervals downstream.
    pub excesses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub exceedances: usize,
    pub span_years: f64,
    /// Exceedances per year.
    pub rate: f64,
    pub interval: ConfidenceInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub provenance: Provenance,
    pub threshold: f64,
    pub level: f64,
    pub severity: SeverityReport,
    pub frequency: FrequencyReport,
    /// Log-likelihood of the severity catalog's exceedances as a marked
    /// Poisson process with the fitted rate and GPD.
    pub marked_process_loglik: f64,
}

impl FitReport {
    pub fn gpd(&self) -> Result<GpdParams> {
        Ok(GpdParams::new(
            self.severity.xi.estimate,
            self.severity.beta.estimate,
        )?)
    }
}

pub fn fit_catalogs(
    severity: &EventCatalog,
    frequency: Option<&EventCatalog>,
    threshold: f64,
    level: f64,
    provenance: Provenance,
) -> Result<FitReport> {
    let sample = severity.excess_sample(threshold)?;
    if sample.count() < MIN_EXCEEDANCES {
        return Err(CliError::Invalid(format!(
            "only {} accidents exceed the threshold {threshold}; at least {MIN_EXCEEDANCES} are needed",
            sample.count()
        )));
    }
    let fit = fit_gpd(&sample)?;
    if !fit.is_usable() {
        return Err(lifecat::Error::Degenerate(format!(
            "GPD fit failed with status {:?}",
            fit.status
        ))
        .into());
    }
    let model = GpdLikelihood {
        excesses: sample.excesses(),
    };
    let param = |index: usize, scale: WaldScale| ParamReport {
        estimate: fit.params[index],
        std_error: fit.std_error(index),
        asymptotic: asymptotic_ci_scaled(&fit, index, level, scale).ok(),
        profile: profile_ci(&model, &fit, index, level).ok(),
    };
    let xi = param(0, WaldScale::Linear);
    let beta = param(1, WaldScale::Log);
    let gpd = GpdParams::new(fit.params[0], fit.params[1])?;

    let freq_catalog = frequency.unwrap_or(severity);
    let freq_count = freq_catalog.exceedances(threshold).0.len();
    let (rate, interval) =
        fit_poisson_intensity(freq_count as u64, freq_catalog.span_years(), level)?;
    if !(rate > 0.0) {
        return Err(CliError::Invalid(format!(
            "the frequency catalog has no accidents above the threshold {threshold}"
        )));
    }
    Ok(FitReport {
        provenance,
        threshold,
        level,
        marked_process_loglik: marked_process_loglik(rate, &gpd, &sample),
        severity: SeverityReport {
            exceedances: sample.count(),
            span_years: sample.span_years(),
            xi,
            beta,
            loglik: fit.loglik,
            status: fit.status,
            covariance: fit.covariance.clone(),
            excesses: sample.excesses().to_vec(),
        },
        frequency: FrequencyReport {
            exceedances: freq_count,
            span_years: freq_catalog.span_years(),
            rate,
            interval,
        },
    })
}

/// Fit the severity and frequency models and write `fit.json`.
pub fn cmd_fit(args: &FitArgs, out: Option<&OutDir>) -> Result<FitReport> {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(CliError::Invalid(format!(
            "--level must lie in (0, 1), got {}",
            args.level
        )));
    }
    let severity = EventCatalog::read(&args.catalog, args.window)?;
    let frequency = args
        .frequency_catalog
        .as_deref()
        .map(|p| EventCatalog::read(p, args.frequency_window))
        .transpose()?;
    let provenance = Provenance::new(None, input_hash(args)?);
    let report = fit_catalogs(
        &severity,
        frequency.as_ref(),
        args.threshold,
        args.level,
        provenance,
    )?;
    if let Some(out) = out {
        out.write_json("fit.json", &report)?;
    }
    Ok(report)
}

fn input_hash(args: &FitArgs) -> Result<String> {
    let mut parts = vec![read_file(&args.catalog)?];
    if let Some(p) = &args.frequency_catalog {
        parts.push(read_file(p)?);
    }
    parts.push(
        format!(
            "fit u={} level={} window={:?} frequency_window={:?}",
            args.threshold, args.level, args.window, args.frequency_window
        )
        .into_bytes(),
    );
    Ok(hash_inputs(parts.iter().map(Vec::as_slice)))
}

pub fn read_fit_report(path: &Path) -> Result<FitReport> {
    let bytes = read_file(path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Invalid(format!("{}: not a fit report: {e}", path.display())))
}
