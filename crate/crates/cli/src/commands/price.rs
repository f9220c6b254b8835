use lifecat::reinsurance::{price_summary, write_price_table, ContractTerms, PriceSummary};
use lifecat::simengine::{run_simulations, SimulationOutput};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::report::{OutDir, Provenance};
use crate::Result;

pub const COUPLING_NOTE: &str =
    "All contracts are applied to one shared set of simulated gross losses, \
so differences between contracts are not affected by simulation noise in the gross losses.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractPrice {
    pub name: String,
    pub terms: ContractTerms,
    pub summary: PriceSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub provenance: Provenance,
    pub coupling: String,
    pub paths: usize,
    pub policies: usize,
    /// Mean number of accidents per path.
    pub mean_events: f64,
    pub contracts: Vec<ContractPrice>,
}

/// Simulate once and price every configured contract on the same paths.
pub fn price(config: &RunConfig) -> Result<(PriceReport, SimulationOutput)> {
    let run = config.resolve()?;
    let portfolio = config.load_portfolio()?;
    let output = run_simulations(
        &run.model,
        &portfolio,
        &run.proportions,
        &run.options,
        run.settings,
        &run.contracts,
    )?;
    let contracts = run
        .contracts
        .iter()
        .enumerate()
        .map(|(k, c)| {
            Ok(ContractPrice {
                name: c.name.clone(),
                terms: c.terms,
                summary: price_summary(
                    &output.gross,
                    &output.recovered[k],
                    &output.after(k),
                    c.limit(),
                )?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let events: u64 = output.event_counts.iter().map(|&n| n as u64).sum();
    let report = PriceReport {
        provenance: Provenance::new(Some(run.settings.seed), config.hash()),
        coupling: COUPLING_NOTE.into(),
        paths: run.settings.paths,
        policies: portfolio.len(),
        mean_events: events as f64 / run.settings.paths as f64,
        contracts,
    };
    Ok((report, output))
}

/// Writes `price.json` and one `price_<contract>.csv` table per contract.
pub fn cmd_price(config: &RunConfig, out: Option<&OutDir>) -> Result<PriceReport> {
    let (report, _) = price(config)?;
    if let Some(out) = out {
        out.write_json("price.json", &report)?;
        for c in &report.contracts {
            out.write_with(&format!("price_{}.csv", file_stem(&c.name)), |w| {
                write_price_table(w, &c.summary)
            })?;
        }
    }
    Ok(report)
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
