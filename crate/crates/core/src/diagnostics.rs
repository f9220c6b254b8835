//! Threshold-selection and homogeneity diagnostics. Everything here returns
//! plot data; rendering is left to external tools.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::distributions::{GpdParams, Univariate};
use crate::error::Result;
use crate::fitting::{fit_gpd, ExcessSample, FitStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanExcessPoint {
    #[serde(rename = "u")]
    pub threshold: f64,
    #[serde(rename = "e_n")]
    pub mean_excess: f64,
    pub count: usize,
}

/// Sample mean excess at each threshold. Thresholds with no exceedance are omitted.
pub fn mean_excess_curve(observations: &[f64], thresholds: &[f64]) -> Vec<MeanExcessPoint> {
    thresholds
        .iter()
        .filter_map(|&u| {
            let (sum, count) = observations
                .iter()
                .filter(|&&x| x > u)
                .fold((0.0, 0usize), |(s, c), &x| (s + (x - u), c + 1));
            (count > 0).then(|| MeanExcessPoint {
                threshold: u,
                mean_excess: sum / count as f64,
                count,
            })
        })
        .collect()
}

/// Every integer from the sample minimum up to the fifth-largest observation.
pub fn default_threshold_grid(observations: &[f64]) -> Vec<f64> {
    if observations.len() < 5 {
        return Vec::new();
    }
    let mut sorted = observations.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = sorted[4].floor();
    let min = sorted[sorted.len() - 1].ceil();
    let mut grid = Vec::new();
    let mut u = min;
    while u <= top {
        grid.push(u);
        u += 1.0;
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityScanRow {
    #[serde(rename = "u")]
    pub threshold: f64,
    pub xi: f64,
    pub beta: f64,
    pub beta_star: f64,
    pub count: usize,
    #[serde(skip)]
    pub status: FitStatus,
}

impl StabilityScanRow {
    pub fn converged(&self) -> bool {
        self.status == FitStatus::Converged
    }
}

/// GPD fits over a threshold grid with `β* = β_u - ξ u`.
///
/// Thresholds that cannot be fitted keep their row with NaN estimates and a
/// non-converged status.
pub fn stability_scan(observations: &[f64], thresholds: &[f64]) -> Vec<StabilityScanRow> {
    use rayon::prelude::*;
    thresholds
        .par_iter()
        .map(|&u| {
            let fit = ExcessSample::from_observations(observations, u, 1.0)
                .and_then(|s| Ok((s.count(), fit_gpd(&s)?)));
            match fit {
                Ok((count, f)) => StabilityScanRow {
                    threshold: u,
                    xi: f.params[0],
                    beta: f.params[1],
                    beta_star: f.params[1] - f.params[0] * u,
                    count,
                    status: f.status,
                },
                Err(_) => StabilityScanRow {
                    threshold: u,
                    xi: f64::NAN,
                    beta: f64::NAN,
                    beta_star: f64::NAN,
                    count: observations.iter().filter(|&&x| x > u).count(),
                    status: FitStatus::Degenerate,
                },
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// `U_k = 1 - exp(-λ T_k)` in input order.
    pub transformed: Vec<f64>,
    /// Fewer than five waiting times; the asymptotic p-value is unreliable.
    pub small_sample: bool,
}

/// Two-sided Kolmogorov–Smirnov statistic of `values` against U(0, 1).
pub fn ks_statistic(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let u = u.clamp(0.0, 1.0);
            ((i as f64 + 1.0) / n - u).max(u - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic Kolmogorov p-value with Stephens' finite-sample scaling.
pub fn ks_p_value(statistic: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * statistic;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=200 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Test whether waiting times are iid exponential with rate `rate`.
pub fn ks_uniformity(waits: &[f64], rate: f64) -> Result<KsResult> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(crate::Error::param("rate", rate, "must be positive"));
    }
    if let Some(&w) = waits.iter().find(|&&w| !(w >= 0.0)) {
        return Err(crate::Error::param(
            "waiting time",
            w,
            "must be non-negative",
        ));
    }
    if waits.is_empty() {
        return Err(crate::Error::InsufficientData { needed: 1, got: 0 });
    }
    let transformed: Vec<f64> = waits.iter().map(|&t| -(-rate * t).exp_m1()).collect();
    let statistic = ks_statistic(&transformed);
    Ok(KsResult {
        statistic,
        p_value: ks_p_value(statistic, waits.len()),
        transformed,
        small_sample: waits.len() < 5,
    })
}

/// Gaps between consecutive event times, the first measured from `origin`.
pub fn waiting_times(origin: f64, times: &[f64]) -> Vec<f64> {
    let mut prev = origin;
    times
        .iter()
        .map(|&t| {
            let w = t - prev;
            prev = t;
            w
        })
        .collect()
}

pub fn adjacent_pairs(values: &[f64]) -> Vec<(f64, f64)> {
    values.windows(2).map(|w| (w[0], w[1])).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    /// `(plotting position, model CDF of the sorted excess)`.
    pub probability: Vec<(f64, f64)>,
    /// `(model quantile at the plotting position, sorted excess)`.
    pub quantile: Vec<(f64, f64)>,
}

/// Probability- and quantile-plot points with positions `(i - 0.5)/n`.
pub fn qq_pp_data(excesses: &[f64], model: &GpdParams) -> PlotData {
    let mut sorted = excesses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out = PlotData::default();
    for (i, &y) in sorted.iter().enumerate() {
        let p = (i as f64 + 0.5) / n;
        out.probability.push((p, model.cdf(y)));
        out.quantile.push((model.quantile(p), y));
    }
    out
}

fn write_rows<W: Write, S: Serialize>(out: W, header: &[&str], rows: &[S]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    let io = |e: csv::Error| crate::Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| crate::Error::Io(e.to_string()))
}

pub fn write_mean_excess_csv<W: Write>(out: W, rows: &[MeanExcessPoint]) -> Result<()> {
    write_rows(out, &["u", "e_n", "count"], rows)
}

pub fn write_stability_csv<W: Write>(out: W, rows: &[StabilityScanRow]) -> Result<()> {
    write_rows(out, &["u", "xi", "beta", "beta_star", "count"], rows)
}

pub fn write_pairs_csv<W: Write>(out: W, pairs: &[(f64, f64)]) -> Result<()> {
    write_rows(out, &["uk", "uk1"], pairs)
}
