use lifecat::distributions::GpdParams;
use lifecat::fitting::{ConfidenceInterval, ExcessSample};
use lifecat::riskmeasures::{
    es, return_level, return_level_ci_delta, return_level_ci_profile, round_significant,
    tail_covariance, var, TailModel,
};
use serde::{Deserialize, Serialize};

use super::fit::FitReport;
use crate::report::{hash_inputs, OutDir, Provenance};
use crate::{CliError, Result};

pub const DEFAULT_PERIODS: [f64; 4] = [10.0, 100.0, 200.0, 1000.0];
pub const DEFAULT_LEVELS: [f64; 4] = [0.9, 0.99, 0.995, 0.999];

/// Where the tail model comes from.
#[derive(Debug, Clone)]
pub enum RiskInput {
    /// A fit report; enables delta and profile intervals.
    Fit(Box<FitReport>),
    /// Parameters given directly; point estimates only.
    Params {
        threshold: f64,
        xi: f64,
        beta: f64,
        rate: f64,
    },
}

#[derive(Debug, Clone)]
pub struct RiskArgs {
    pub periods: Vec<f64>,
    pub levels: Vec<f64>,
    /// Confidence level of the return-level intervals.
    pub ci_level: f64,
}

impl Default for RiskArgs {
    fn default() -> Self {
        Self {
            periods: DEFAULT_PERIODS.to_vec(),
            levels: DEFAULT_LEVELS.to_vec(),
            ci_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailParams {
    pub threshold: f64,
    pub xi: f64,
    pub beta: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnLevelRow {
    pub period: f64,
    pub estimate: f64,
    /// Two significant figures, as tabulated.
    pub rounded: f64,
    pub delta: Option<ConfidenceInterval>,
    pub profile: Option<ConfidenceInterval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskMeasureRow {
    pub alpha: f64,
    pub var: f64,
    pub var_rounded: f64,
    pub es: Option<f64>,
    pub es_rounded: Option<f64>,
    /// Why ES is missing, e.g. an infinite mean.
    pub es_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub provenance: Provenance,
    pub model: TailParams,
    pub return_levels: Vec<ReturnLevelRow>,
    pub measures: Vec<RiskMeasureRow>,
}

impl RiskReport {
    /// Rows for `return_levels.csv`: `t,estimate,lo,hi,method`.
    pub fn return_level_csv_rows(&self) -> Vec<(f64, f64, Option<f64>, Option<f64>, String)> {
        let mut rows = Vec::new();
        for r in &self.return_levels {
            rows.push((r.period, r.estimate, None, None, "point".to_string()));
            for ci in [&r.delta, &r.profile].into_iter().flatten() {
                let method = serde_json::to_value(ci.method)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                rows.push((r.period, r.estimate, Some(ci.lower), Some(ci.upper), method));
            }
        }
        rows
    }
}

pub fn cmd_risk(input: &RiskInput, args: &RiskArgs, out: Option<&OutDir>) -> Result<RiskReport> {
    if !(args.ci_level > 0.0 && args.ci_level < 1.0) {
        return Err(CliError::Invalid(format!(
            "--level must lie in (0, 1), got {}",
            args.ci_level
        )));
    }
    let (params, covariance, sample, hash) = match input {
        RiskInput::Fit(f) => {
            let params = TailParams {
                threshold: f.threshold,
                xi: f.severity.xi.estimate,
                beta: f.severity.beta.estimate,
                rate: f.frequency.rate,
            };
            let cov = f
                .severity
                .covariance
                .as_ref()
                .map(|c| tail_covariance(f.frequency.rate, f.frequency.span_years, c));
            let sample = ExcessSample::new(
                f.threshold,
                f.severity.excesses.clone(),
                f.severity.span_years,
            )
            .ok();
            (params, cov, sample, f.provenance.config_hash.clone())
        }
        RiskInput::Params {
            threshold,
            xi,
            beta,
            rate,
        } => {
            let params = TailParams {
                threshold: *threshold,
                xi: *xi,
                beta: *beta,
                rate: *rate,
            };
            (params, None, None, String::new())
        }
    };
    let model = TailModel::new(
        params.threshold,
        GpdParams::new(params.xi, params.beta)?,
        params.rate,
    )?;
    let hash = hash_inputs([
        hash.as_bytes(),
        format!(
            "risk {params:?} {:?} {:?} {}",
            args.periods, args.levels, args.ci_level
        )
        .as_bytes(),
    ]);

    let return_levels = args
        .periods
        .iter()
        .map(|&t| {
            let estimate = return_level(t, &model)?;
            Ok(ReturnLevelRow {
                period: t,
                estimate,
                rounded: round_significant(estimate, 2),
                delta: covariance
                    .as_ref()
                    .and_then(|c| return_level_ci_delta(t, &model, c, args.ci_level).ok()),
                profile: sample
                    .as_ref()
                    .and_then(|s| return_level_ci_profile(t, &model, s, args.ci_level).ok()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let measures = args
        .levels
        .iter()
        .map(|&alpha| {
            let v = var(alpha, &model)?;
            let (es_value, es_error) = match es(alpha, &model) {
                Ok(x) => (Some(x), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Ok(RiskMeasureRow {
                alpha,
                var: v,
                var_rounded: round_significant(v, 2),
                es: es_value,
                es_rounded: es_value.map(|x| round_significant(x, 2)),
                es_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = RiskReport {
        provenance: Provenance::new(None, hash),
        model: params,
        return_levels,
        measures,
    };
    if let Some(out) = out {
        out.write_json("risk.json", &report)?;
        out.write_csv(
            "return_levels.csv",
            &["t", "estimate", "lo", "hi", "method"],
            &report.return_level_csv_rows(),
        )?;
        let rows: Vec<_> = report
            .measures
            .iter()
            .map(|m| (m.alpha, m.var, m.es))
            .collect();
        out.write_csv("var_es.csv", &["alpha", "var", "es"], &rows)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> RiskInput {
        RiskInput::Params {
            threshold: 20.0,
            xi: 0.938,
            beta: 12.9,
            rate: 0.15,
        }
    }

    #[test]
    fn tables_from_fixed_parameters() {
        let r = cmd_risk(&reference(), &RiskArgs::default(), None).unwrap();
        let levels: Vec<f64> = r.return_levels.iter().map(|x| x.rounded).collect();
        assert_eq!(levels, vec![25.0, 170.0, 320.0, 1400.0]);
        let es: Vec<f64> = r.measures.iter().map(|x| x.es_rounded.unwrap()).collect();
        assert_eq!(es, vec![310.0, 2600.0, 5000.0, 23000.0]);
        assert!(r
            .return_levels
            .iter()
            .all(|x| x.delta.is_none() && x.profile.is_none()));
    }

    #[test]
    fn short_period_is_a_domain_error() {
        let args = RiskArgs {
            periods: vec![2.0],
            ..RiskArgs::default()
        };
        let e = cmd_risk(&reference(), &args, None).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("domain"), "{e}");
    }

    #[test]
    fn infinite_mean_reports_es_error_per_row() {
        let input = RiskInput::Params {
            threshold: 20.0,
            xi: 1.2,
            beta: 12.9,
            rate: 0.15,
        };
        let r = cmd_risk(&input, &RiskArgs::default(), None).unwrap();
        assert!(r
            .measures
            .iter()
            .all(|m| m.es.is_none() && m.es_error.is_some()));
    }
}
