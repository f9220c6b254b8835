pub mod diagnose;
pub mod fit;
pub mod price;
pub mod risk;
pub mod simulate;

pub use diagnose::{cmd_diagnose, DiagnoseArgs, DiagnoseReport};
pub use fit::{cmd_fit, FitArgs, FitReport};
pub use price::{cmd_price, price, PriceReport};
pub use risk::{cmd_risk, RiskArgs, RiskInput, RiskReport};
pub use simulate::{cmd_simulate, simulate, SimulateReport};
