//! Bounds on causal risk differences in randomized trials with missing
//! outcomes, optionally with noncompliance.
//!
//! The crate provides the observable-table types, closed-form bound
//! formulas, a linear-programming oracle over response-function models,
//! bootstrap estimation from trial records and the simulation experiments
//! used to compare the bounds.

#![allow(clippy::needless_range_loop)]

pub mod bounds;
pub mod error;
pub mod estimation;
pub mod oracle;
pub mod records;
pub mod rng;
pub mod scenario;
pub mod simulation;
pub mod table;

pub use bounds::{bounds, BoundTerm, BoundsResult, Diagnostic};
pub use error::{Error, Result};
pub use estimation::{bootstrap_ci, estimate_bounds, BootstrapResult};
pub use records::{CellCounts, Compliance, TrialRecord};
pub use scenario::{Estimand, Figure, ScenarioTag};
pub use table::{Fig1Table, Fig2Table, ObservedTable};
