//! Accident catalogs: CSV files with columns `date,deaths,country`.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use lifecat::fitting::ExcessSample;
use lifecat::pointprocess::PotData;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

pub const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub date: NaiveDate,
    pub deaths: u64,
    pub country: String,
}

/// Accidents observed over the closed date window `[start, end]`, sorted by date.
#[derive(Debug, Clone, PartialEq)]
pub struct EventCatalog {
    records: Vec<CatalogRecord>,
    start: NaiveDate,
    end: NaiveDate,
}

#[derive(Deserialize)]
struct RawRecord {
    date: String,
    deaths: String,
    country: String,
}

impl EventCatalog {
    pub fn new(mut records: Vec<CatalogRecord>, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(CliError::Invalid(format!(
                "observation window ends ({end}) before it starts ({start})"
            )));
        }
        for r in &records {
            if r.deaths == 0 {
                return Err(CliError::Invalid(format!(
                    "{}: death count must be positive",
                    r.date
                )));
            }
            if r.date < start || r.date > end {
                return Err(CliError::Invalid(format!(
                    "{}: outside the observation window {start} to {end}",
                    r.date
                )));
            }
        }
        records.sort_by_key(|r| r.date);
        Ok(Self {
            records,
            start,
            end,
        })
    }

    /// Parse CSV. Without an explicit window the catalog covers whole
    /// calendar years from the first to the last record.
    pub fn parse<R: Read>(input: R, window: Option<(NaiveDate, NaiveDate)>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader
            .headers()
            .map_err(|e| CliError::Invalid(format!("line 1: {e}")))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["date", "deaths", "country"] {
            return Err(CliError::Invalid(format!(
                "line 1: expected header `date,deaths,country`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut records = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                CliError::Invalid(format!("line {line}: {e}"))
            })?;
            let line = row.position().map(|p| p.line()).unwrap_or(0);
            let raw: RawRecord = row
                .deserialize(Some(&headers))
                .map_err(|e| CliError::Invalid(format!("line {line}: {e}")))?;
            let date = NaiveDate::parse_from_str(&raw.date, "%Y-%m-%d").map_err(|e| {
                CliError::Invalid(format!("line {line}: bad date `{}`: {e}", raw.date))
            })?;
            let deaths: u64 = raw.deaths.parse().map_err(|_| {
                CliError::Invalid(format!(
                    "line {line}: deaths must be a positive integer, got `{}`",
                    raw.deaths
                ))
            })?;
            if deaths == 0 {
                return Err(CliError::Invalid(format!(
                    "line {line}: deaths must be a positive integer, got 0"
                )));
            }
            if let Some((start, end)) = window {
                if date < start || date > end {
                    return Err(CliError::Invalid(format!(
                        "line {line}: {date} lies outside the observation window {start} to {end}"
                    )));
                }
            }
            records.push(CatalogRecord {
                date,
                deaths,
                country: raw.country,
            });
        }
        if records.is_empty() {
            return Err(CliError::Invalid("catalog has no records".into()));
        }
        let (start, end) = window.unwrap_or_else(|| {
            let first = records.iter().map(|r| r.date).min().expect("non-empty");
            let last = records.iter().map(|r| r.date).max().expect("non-empty");
            (
                NaiveDate::from_ymd_opt(first.year(), 1, 1).expect("valid date"),
                NaiveDate::from_ymd_opt(last.year(), 12, 31).expect("valid date"),
            )
        });
        Self::new(records, start, end)
    }

    pub fn read(path: &Path, window: Option<(NaiveDate, NaiveDate)>) -> Result<Self> {
        let bytes = crate::report::read_file(path)?;
        Self::parse(bytes.as_slice(), window)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let invalid = |e: csv::Error| CliError::Invalid(e.to_string());
        for r in &self.records {
            w.serialize(r).map_err(invalid)?;
        }
        w.flush().map_err(|e| CliError::Invalid(e.to_string()))
    }

    pub fn records(&self) -> &[CatalogRecord] {
        &self.records
    }

    pub fn window(&self) -> (NaiveDate, NaiveDate) {
        (self.start, self.end)
    }

    /// Length of the window in years, both end days included.
    pub fn span_years(&self) -> f64 {
        ((self.end - self.start).num_days() + 1) as f64 / DAYS_PER_YEAR
    }

    /// Years from the start of the window to the middle of `date`.
    pub fn time_of(&self, date: NaiveDate) -> f64 {
        ((date - self.start).num_days() as f64 + 0.5) / DAYS_PER_YEAR
    }

    pub fn deaths(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.deaths as f64).collect()
    }

    /// Times and sizes of the accidents with more than `threshold` deaths.
    pub fn exceedances(&self, threshold: f64) -> (Vec<f64>, Vec<f64>) {
        self.records
            .iter()
            .filter(|r| r.deaths as f64 > threshold)
            .map(|r| (self.time_of(r.date), r.deaths as f64))
            .unzip()
    }

    pub fn excess_sample(&self, threshold: f64) -> Result<ExcessSample> {
        Ok(ExcessSample::from_observations(
            &self.deaths(),
            threshold,
            self.span_years(),
        )?)
    }

    pub fn pot_data(&self, threshold: f64) -> Result<PotData> {
        let (times, sizes) = self.exceedances(threshold);
        Ok(PotData::new(times, sizes, threshold, self.span_years())?)
    }
}
