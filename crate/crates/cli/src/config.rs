//! Run configuration for `price` and `simulate`: a JSON document with the
//! sections `model`, `proportions`, `portfolio`, `contracts` and `run`.
//! Every section is optional and defaults to the worked example.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use lifecat::catmodel::{
    default_model, CombinedCatModel, ComponentSpec, MarkDistribution, SamplingMode,
};
use lifecat::portfolio::{generate_portfolio, read_portfolio_csv, Portfolio, PortfolioSpec};
use lifecat::reinsurance::{
    AggregateOrder, Contract, ContractTerms, PerOccXL, PerRiskXL, StopLoss,
};
use lifecat::simengine::{
    PopulationState, ProportionSpec, RunSettings, SimOptions, VictimCountRule,
};
use lifecat::Cents;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub proportions: ProportionSpec,
    pub portfolio: PortfolioSource,
    pub contracts: Vec<ContractConfig>,
    pub run: RunSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            proportions: ProportionSpec::default(),
            portfolio: PortfolioSource::default(),
            contracts: Contract::standard_contracts()
                .iter()
                .map(ContractConfig::from_contract)
                .collect(),
            run: RunSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Ordered components partitioning the death counts.
    pub components: Vec<ComponentConfig>,
    /// Overrides the first component's rate so that a year is accident-free
    /// with this probability.
    pub no_event_prob: Option<f64>,
    pub sampling: SamplingMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            components: default_model()
                .components()
                .iter()
                .map(ComponentConfig::from_spec)
                .collect(),
            no_event_prob: None,
            sampling: SamplingMode::Superposed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentConfig {
    pub lower: u64,
    #[serde(default)]
    pub upper: Option<u64>,
    pub rate: f64,
    pub marks: MarksConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarksConfig {
    Discrete { values: Vec<u64>, probs: Vec<f64> },
    NegBin { size: f64, prob: f64 },
    Gpd { shape: f64, scale: f64 },
}

impl ComponentConfig {
    pub fn from_spec(c: &ComponentSpec) -> Self {
        let marks = match &c.marks {
            MarkDistribution::Discrete(d) => MarksConfig::Discrete {
                values: d.values().to_vec(),
                probs: d.probs().to_vec(),
            },
            MarkDistribution::NegBin(t) => MarksConfig::NegBin {
                size: t.base().size,
                prob: t.base().prob,
            },
            MarkDistribution::ShiftedGpd(g) => MarksConfig::Gpd {
                shape: g.shape,
                scale: g.scale,
            },
        };
        Self {
            lower: c.lower,
            upper: c.upper,
            rate: c.rate,
            marks,
        }
    }

    fn to_spec(&self) -> lifecat::Result<ComponentSpec> {
        let need_upper = || {
            self.upper
                .ok_or_else(|| lifecat::Error::Config("bounded marks need `upper`".into()))
        };
        match &self.marks {
            MarksConfig::Discrete { values, probs } => ComponentSpec::discrete(
                self.lower,
                need_upper()?,
                self.rate,
                values.clone(),
                probs.clone(),
            ),
            MarksConfig::NegBin { size, prob } => {
                ComponentSpec::negbin(self.lower, need_upper()?, self.rate, *size, *prob)
            }
            MarksConfig::Gpd { shape, scale } => {
                if self.upper.is_some() {
                    return Err(lifecat::Error::Config("GPD marks take no `upper`".into()));
                }
                ComponentSpec::gpd(self.lower, self.rate, *shape, *scale)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PortfolioSource {
    /// Portfolio CSV; relative paths resolve against the config file.
    File(PathBuf),
    /// Synthetic book drawn from the master seed.
    Generate(PortfolioSpec),
}

impl Default for PortfolioSource {
    fn default() -> Self {
        PortfolioSource::Generate(PortfolioSpec::default())
    }
}

/// Contract terms in euros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContractConfig {
    PerRisk {
        name: String,
        retention: f64,
        limit: f64,
        #[serde(default)]
        aal: Option<f64>,
        #[serde(default)]
        aad: Option<f64>,
        #[serde(default)]
        order: AggregateOrder,
    },
    PerOccurrence {
        name: String,
        retention: f64,
        limit: f64,
        #[serde(default)]
        reinstatements: u32,
        #[serde(default)]
        aal: Option<f64>,
        #[serde(default)]
        min_deaths: u64,
    },
    StopLoss {
        name: String,
        retention: f64,
        limit: f64,
    },
}

impl ContractConfig {
    pub fn from_contract(c: &Contract) -> Self {
        let eur = |x: Cents| x.to_eur();
        let name = c.name.clone();
        match c.terms {
            ContractTerms::PerRisk(t) => ContractConfig::PerRisk {
                name,
                retention: eur(t.retention),
                limit: eur(t.limit),
                aal: t.aal.map(eur),
                aad: t.aad.map(eur),
                order: t.order,
            },
            ContractTerms::PerOccurrence(t) => ContractConfig::PerOccurrence {
                name,
                retention: eur(t.retention),
                limit: eur(t.limit),
                reinstatements: t.reinstatements,
                aal: t.aal.map(eur),
                min_deaths: t.min_deaths,
            },
            ContractTerms::StopLoss(t) => ContractConfig::StopLoss {
                name,
                retention: eur(t.retention),
                limit: eur(t.limit),
            },
        }
    }

    pub fn name(&self) -> &str {
        match self {
            ContractConfig::PerRisk { name, .. }
            | ContractConfig::PerOccurrence { name, .. }
            | ContractConfig::StopLoss { name, .. } => name,
        }
    }

    fn to_contract(&self, at: &str) -> Result<Contract> {
        let money = |field: &str, x: f64| -> Result<Cents> {
            if !(x >= 0.0) {
                return Err(CliError::Invalid(format!(
                    "{at}.{field}: must be non-negative, got {x}"
                )));
            }
            Cents::from_eur(x).map_err(|e| CliError::Invalid(format!("{at}.{field}: {e}")))
        };
        let opt = |field: &str, x: Option<f64>| x.map(|v| money(field, v)).transpose();
        let terms = match self {
            ContractConfig::PerRisk {
                retention,
                limit,
                aal,
                aad,
                order,
                ..
            } => ContractTerms::PerRisk(PerRiskXL {
                retention: money("retention", *retention)?,
                limit: money("limit", *limit)?,
                aal: opt("aal", *aal)?,
                aad: opt("aad", *aad)?,
                order: *order,
            }),
            ContractConfig::PerOccurrence {
                retention,
                limit,
                reinstatements,
                aal,
                min_deaths,
                ..
            } => ContractTerms::PerOccurrence(PerOccXL {
                retention: money("retention", *retention)?,
                limit: money("limit", *limit)?,
                reinstatements: *reinstatements,
                aal: opt("aal", *aal)?,
                min_deaths: *min_deaths,
            }),
            ContractConfig::StopLoss {
                retention, limit, ..
            } => ContractTerms::StopLoss(StopLoss {
                retention: money("retention", *retention)?,
                limit: money("limit", *limit)?,
            }),
        };
        Contract::new(self.name(), terms).map_err(|e| CliError::Invalid(format!("{at}: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub population: u64,
    pub insured_share: f64,
    pub covered_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Contract period in years.
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
    pub victim_counts: VictimCountRule,
    pub start_date: NaiveDate,
    /// Track market and book sizes across accidents when set.
    pub population: Option<PopulationConfig>,
}

impl Default for RunSection {
    fn default() -> Self {
        let options = SimOptions::default();
        Self {
            horizon: options.horizon,
            paths: 100_000,
            seed: 1,
            workers: 0,
            victim_counts: options.victim_counts,
            start_date: options.start_date,
            population: None,
        }
    }
}

/// A configuration after validation, ready to run.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub model: CombinedCatModel,
    pub proportions: ProportionSpec,
    pub contracts: Vec<Contract>,
    pub options: SimOptions,
    pub settings: RunSettings,
}

impl RunConfig {
    /// Parse JSON, naming the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let at = if path == "." {
                String::new()
            } else {
                format!("{path}: ")
            };
            CliError::Invalid(format!("config {at}{inner}"))
        })
    }

    /// Read a config file and resolve a relative portfolio path against it.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = crate::report::read_file(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| CliError::Invalid(format!("{}: not UTF-8", path.display())))?;
        let mut config = Self::from_json(&text)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        if let PortfolioSource::File(p) = &mut config.portfolio {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(config)
    }

    /// SHA-256 of the canonical JSON of the effective configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        crate::report::hash_inputs([bytes.as_slice()])
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        let invalid = |at: &str, e: lifecat::Error| CliError::Invalid(format!("{at}: {e}"));
        let components = self
            .model
            .components
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.to_spec()
                    .map_err(|e| invalid(&format!("model.components[{i}]"), e))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model =
            CombinedCatModel::new(components).map_err(|e| invalid("model.components", e))?;
        if let Some(q) = self.model.no_event_prob {
            model = model
                .with_no_event_prob(q)
                .map_err(|e| invalid("model.no_event_prob", e))?;
        }
        self.proportions
            .validate()
            .map_err(|e| invalid("proportions", e))?;
        if let PortfolioSource::Generate(spec) = &self.portfolio {
            spec.validate()
                .map_err(|e| invalid("portfolio.generate", e))?;
        }
        let mut names = std::collections::HashSet::new();
        let contracts = self
            .contracts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if !names.insert(c.name().to_string()) {
                    return Err(CliError::Invalid(format!(
                        "contracts[{i}].name: duplicate contract name `{}`",
                        c.name()
                    )));
                }
                c.to_contract(&format!("contracts[{i}]"))
            })
            .collect::<Result<Vec<_>>>()?;
        let run = &self.run;
        if !(run.horizon > 0.0 && run.horizon.is_finite()) {
            return Err(CliError::Invalid(format!(
                "run.horizon: must be positive, got {}",
                run.horizon
            )));
        }
        if run.paths == 0 {
            return Err(CliError::Invalid("run.paths: must be at least 1".into()));
        }
        let population = run
            .population
            .map(|p| PopulationState::new(p.population, p.insured_share, p.covered_share))
            .transpose()
            .map_err(|e| invalid("run.population", e))?;
        Ok(ResolvedRun {
            model,
            proportions: self.proportions,
            contracts,
            options: SimOptions {
                horizon: run.horizon,
                mode: self.model.sampling,
                population,
                victim_counts: run.victim_counts,
                start_date: run.start_date,
                hook: None,
            },
            settings: RunSettings {
                paths: run.paths,
                seed: run.seed,
                workers: run.workers,
            },
        })
    }

    /// Load or generate the portfolio. Generated books use a random stream
    /// that no simulated path uses.
    pub fn load_portfolio(&self) -> Result<Portfolio> {
        match &self.portfolio {
            PortfolioSource::File(path) => {
                let bytes = crate::report::read_file(path)?;
                read_portfolio_csv(bytes.as_slice())
                    .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
            }
            PortfolioSource::Generate(spec) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.run.seed);
                rng.set_stream(u64::MAX);
                Ok(generate_portfolio(spec, &mut rng)?)
            }
        }
    }
}
