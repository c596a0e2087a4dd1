//! Shared fixtures for the benchmarks.

use copx_core::marginals::{risk_neutral_marginal, DriftMode, NormalMarginal};
use copx_core::{CopulaSpec, MarketState};

/// The four fitted families used throughout the benchmarks.
pub fn fitted_specs() -> [CopulaSpec; 4] {
    [
        CopulaSpec::Gumbel { theta: 4.0962 },
        CopulaSpec::Clayton { theta: 2.94 },
        CopulaSpec::Frank { theta: 17.5472 },
        CopulaSpec::Gaussian { rho: 0.5439 },
    ]
}

/// At-the-money market with a quarter-year expiry.
pub fn market() -> (MarketState, NormalMarginal, NormalMarginal) {
    let state = MarketState::new(100.0, 100.0, 0.03, 0.25).expect("valid market");
    let m1 = risk_neutral_marginal(0.03, 0.2023, 0.25, DriftMode::Martingale).expect("valid");
    let m2 = risk_neutral_marginal(0.03, 0.1920, 0.25, DriftMode::Martingale).expect("valid");
    (state, m1, m2)
}
