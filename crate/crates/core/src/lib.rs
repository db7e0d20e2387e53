//! Dynamic interference-temperature model for an underlay cognitive radio link.
//!
//! The primary user's capacity demand is zero-truncated Poisson. That demand fixes the
//! SINR the primary receiver needs, which in turn sets a random interference-plus-noise
//! threshold `ψ` for the secondary transmitter. This crate provides:
//!
//! * [`specfun`]: `Γ(0,x)`, its exponentially scaled form and `ln k!`;
//! * [`distributions`]: the demand → SINR → threshold distribution chain;
//! * [`analytic`]: closed-form transmit/received power laws, outage probability and
//!   mean capacity (general and high-power regimes, plus a fixed-threshold baseline);
//! * [`montecarlo`]: an independent sampler of the same chain;
//! * [`experiments`] and [`acceptance`]: figure reproduction to CSV and the
//!   cross-validation report used by the `dynit` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod acceptance;
pub mod analytic;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod montecarlo;
pub mod quadrature;
pub mod specfun;
pub mod table;

pub use analytic::{CapacityResult, FormulaVariant, Model, OutageCurve, Regime};
pub use distributions::{MixtureExp, Scenario, TruncatedSeries};
pub use error::{Error, Result};
pub use montecarlo::{EmpiricalDist, SimConfig, SimRegime};
pub use table::CurveTable;
