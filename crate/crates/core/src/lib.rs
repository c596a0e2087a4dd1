//! Exchange-option pricing under copula dependence.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN.

pub mod bvn;
pub mod compare;
pub mod copula;
pub mod data;
pub mod error;
pub mod estimation;
pub mod gibbs;
pub mod marginals;
pub mod normal;
pub mod pricing;
pub mod quadrature;
pub mod simulate;

pub use copula::{CopulaSpec, Family, UnitPoint};
pub use error::{Error, Result};
pub use gibbs::ChainConfig;
pub use marginals::{DriftMode, NormalMarginal};
pub use pricing::{MarketState, PriceResult};
