use lifecat::simengine::{map_paths, write_event_log, PathResult};
use lifecat::Cents;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::report::{OutDir, Provenance};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub provenance: Provenance,
    pub paths: usize,
    pub events: usize,
    pub claims: usize,
    pub contracts: Vec<String>,
}

/// Simulated paths with each contract's recovery per path.
pub fn simulate(config: &RunConfig) -> Result<(SimulateReport, Vec<(PathResult, Vec<Cents>)>)> {
    let run = config.resolve()?;
    let portfolio = config.load_portfolio()?;
    let paths = map_paths(
        &run.model,
        &portfolio,
        &run.proportions,
        &run.options,
        run.settings,
        |_, path| {
            let rec = run
                .contracts
                .iter()
                .map(|c| c.recover(&path).recovered)
                .collect();
            (path, rec)
        },
    )?;
    let report = SimulateReport {
        provenance: Provenance::new(Some(run.settings.seed), config.hash()),
        paths: paths.len(),
        events: paths.iter().map(|(p, _)| p.events.len()).sum(),
        claims: paths
            .iter()
            .flat_map(|(p, _)| &p.events)
            .map(|e| e.claims.len())
            .sum(),
        contracts: run.contracts.iter().map(|c| c.name.clone()).collect(),
    };
    Ok((report, paths))
}

/// Raw dump: `paths.csv`, `events.csv`, optionally `claims.csv`, and
/// `simulate.json`.
pub fn cmd_simulate(config: &RunConfig, with_claims: bool, out: &OutDir) -> Result<SimulateReport> {
    let (report, paths) = simulate(config)?;
    let mut header = vec!["path".to_string(), "events".into(), "gross".into()];
    header.extend(report.contracts.iter().map(|n| format!("recovered_{n}")));
    out.write_with("paths.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        let io = |e: csv::Error| lifecat::Error::Io(e.to_string());
        c.write_record(&header).map_err(io)?;
        for (i, (p, rec)) in paths.iter().enumerate() {
            let mut row = vec![
                i.to_string(),
                p.events.len().to_string(),
                p.total.to_string(),
            ];
            row.extend(rec.iter().map(Cents::to_string));
            c.write_record(&row).map_err(io)?;
        }
        c.flush().map_err(|e| lifecat::Error::Io(e.to_string()))
    })?;
    out.write_with("events.csv", |w| {
        write_event_log(
            w,
            paths
                .iter()
                .enumerate()
                .flat_map(|(i, (p, _))| p.events.iter().map(move |e| (i, e))),
        )
    })?;
    if with_claims {
        let rows: Vec<(usize, usize, u32, String)> = paths
            .iter()
            .enumerate()
            .flat_map(|(i, (p, _))| {
                p.events.iter().enumerate().flat_map(move |(j, e)| {
                    e.claims
                        .iter()
                        .map(move |c| (i, j, c.policy, c.amount.to_string()))
                })
            })
            .collect();
        out.write_csv("claims.csv", &["path", "event", "policy", "amount"], &rows)?;
    }
    out.write_json("simulate.json", &report)?;
    Ok(report)
}
