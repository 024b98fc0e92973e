//! Fault-tolerant search on the line and on `m` rays.
//!
//! `k` unit-speed robots start at the origin; up to `f` of them may crash
//! silently, so a target counts as found once `f + 1` distinct robots have
//! visited it. The crate computes the tight competitive ratios, builds the
//! exponential strategies that attain them, simulates arbitrary strategies,
//! and audits the covering argument showing nothing better is possible.
//!
//! All numeric code is generic over [`Scalar`]; the aliases below fix the
//! two precisions the command-line tool offers.

pub mod cover;
pub mod error;
pub mod extended;
pub mod formulas;
pub mod fractional;
pub mod potential;
pub mod scalar;
pub mod simulator;
pub mod strategy;

pub use error::{Error, Result};
pub use extended::Extended;
pub use formulas::{CoverParams, Horizon, InstanceParams, Regime};
pub use scalar::Scalar;
pub use strategy::{Round, RoundPlan, Setting, Side, Strategy, TurnSequence};

pub type TurnSequence64 = TurnSequence<f64>;
pub type RoundPlan64 = RoundPlan<f64>;
pub type Strategy64 = Strategy<f64>;
pub type Verdict64 = potential::Verdict<f64>;
pub type StrategyExt = Strategy<Extended>;
pub type VerdictExt = potential::Verdict<Extended>;
