//! Closed-form distributions used by the tail and catastrophe models.
//!
//! Every distribution is an immutable value type. Samplers take a
//! caller-owned RNG so that a simulation path owns its random stream.

mod beta;
mod discrete;
mod gev;
mod gpd;
mod negbin;
mod poisson;
mod truncated;

pub use beta::BetaParams;
pub use discrete::Discrete;
pub use gev::{gev_cdf, GevParams};
pub use gpd::{gpd_cdf, gpd_quantile, GpdParams};
pub use negbin::NegBinParams;
pub use poisson::PoissonParams;
pub use truncated::{truncated_cdf, truncated_quantile, Truncated};

/// Shapes with `|ξ|` below this are evaluated with the exponential/Gumbel branch.
pub const SHAPE_ZERO_TOL: f64 = 1e-9;

/// A univariate law with a total CDF and a generalized inverse.
///
/// `cdf` is defined on the whole real line (0 below the support, 1 above).
/// `quantile` returns `inf{x : cdf(x) >= p}` for `p` in `[0, 1]`; laws with
/// unbounded support may return `+inf` at `p = 1`.
pub trait Univariate {
    fn cdf(&self, x: f64) -> f64;
    fn quantile(&self, p: f64) -> f64;
}

impl<T: Univariate + ?Sized> Univariate for &T {
    fn cdf(&self, x: f64) -> f64 {
        (**self).cdf(x)
    }
    fn quantile(&self, p: f64) -> f64 {
        (**self).quantile(p)
    }
}

/// `ln(1 + ξ z) / ξ`, continuous at `ξ = 0` where it equals `z`.
pub(crate) fn log1p_ratio(shape: f64, z: f64) -> f64 {
    if shape.abs() < SHAPE_ZERO_TOL {
        z
    } else {
        (shape * z).ln_1p() / shape
    }
}
