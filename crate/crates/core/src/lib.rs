//! Extreme-value and marked-Poisson-process models for accidental-death
//! catastrophes, tail risk measures, and policy-level Monte Carlo pricing of
//! life catastrophe reinsurance.

pub mod catmodel;
pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod fitting;
pub mod money;
pub mod optimize;
pub mod pointprocess;
pub mod portfolio;
pub mod reinsurance;
pub mod riskmeasures;
pub mod simengine;
pub mod stats;

pub use error::{Error, Result};
pub use money::Cents;
