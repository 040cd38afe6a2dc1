//! Projected likelihood contrast (PLC) test for homogeneity in two-component
//! Gaussian mixtures with known equal weights and a common nuisance parameter.
//!
//! The statistic plugs the null MLE of the nuisance parameter into the full
//! mixture likelihood, maximizes over the two component parameters and
//! reports twice the gain over the homogeneous fit.

pub mod asymptotics;
pub mod changepoint;
pub mod error;
pub mod models;
pub mod optimize;
pub mod plc;
pub mod quadrature;
pub mod simulation;

pub use asymptotics::{CBarSet, LimitLaw, MomentReport};
pub use changepoint::{SignalSpec, WindowScanResult};
pub use error::{PlcError, Result};
pub use models::{MixtureFamily, NullFit, Sample, ScoreVector};
pub use plc::{AltFit, OptimizerOptions, PlcOutcome};
pub use simulation::{NullSimSummary, PowerCurve, SimConfig};
