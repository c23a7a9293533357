//! Scenario harness for the symbiont ecosystem model.
//!
//! Loads strict JSON scenarios, runs the coupled population and macro layers,
//! sweeps parameter grids, writes CSV/JSON/SVG outputs and serves live
//! steering sessions.

// `!(x > 0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod output;
pub mod patch;
pub mod prior;
pub mod run;
pub mod scenario;
pub mod session;
pub mod sweep;

pub use error::{HarnessError, Result};
pub use run::{replay, run, Journal, RunRecord, Simulation};
pub use scenario::{load_scenario, Scenario};
