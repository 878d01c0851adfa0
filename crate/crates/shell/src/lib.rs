//! Command-line plumbing around `wavetrain-core`: configuration files,
//! figure presets, laboratory units and CSV/JSON output.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod scenario;
pub mod units;

pub use config::{load_settings, parse_config, OutputKind, Settings};
pub use error::{Result, ShellError};
pub use scenario::{load_config, run_scenario, Loaded, Manifest, Scenario};
pub use units::{convert_units, PhysicalUnits};
