//! Numerical experiments for oscillatory integrals, Orlicz spaces and maximal
//! averages over flat radial hypersurfaces `x_n = γ(|x'|) + 1`.

use std::sync::OnceLock;

pub mod bessel;
pub mod boundedness;
pub mod cli;
pub mod decay;
pub mod error;
pub mod grid;
pub mod maximal;
pub mod numeric;
pub mod oscillatory;
pub mod profile;
pub mod young;

pub use error::{Error, Result};

const DEFAULT_PANEL_BUDGET: u64 = 10_000_000;

/// Maximum number of quadrature panels (or grid points) a single evaluation
/// may use; overridable with `FLATWAVE_BUDGET`.
pub fn panel_budget() -> u64 {
    static BUDGET: OnceLock<u64> = OnceLock::new();
    *BUDGET.get_or_init(|| {
        std::env::var("FLATWAVE_BUDGET")
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&b: &u64| b > 0)
            .unwrap_or(DEFAULT_PANEL_BUDGET)
    })
}
