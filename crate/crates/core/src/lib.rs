//! Monte-Carlo simulation of cooperative spectrum access in a cognitive
//! radio network where secondary nodes power a primary transmitter by
//! wireless energy transfer and then relay its traffic.
//!
//! Each time slot runs three stages:
//!
//! 1. secondary transmission with simultaneous powering of the primary
//!    transmitter ([`schemes`]),
//! 2. primary transmission on the harvested energy,
//! 3. amplify-and-forward relaying by a sparse set of secondary nodes chosen
//!    by orthogonal matching pursuit on a whitened MMSE problem ([`relay`]).
//!
//! [`sim`] chains slots and sweeps the time-sharing parameter α, and
//! [`report`] writes the results as CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod config;
pub mod linalg;
pub mod relay;
pub mod report;
pub mod schemes;
pub mod sim;
pub mod validation;

pub use channel::{
    draw_realization, ChannelError, ChannelRealization, FadingParams, NetworkTopology, Node,
};
pub use config::{parse_config, ConfigError, SimConfig, CONFIG_KEYS};
pub use linalg::LinalgError;
pub use relay::RelayError;
pub use report::{emit_csv, ReportError, CSV_COLUMNS};
pub use schemes::{evaluate, SchemeId, SchemeOutcome};
pub use sim::{alpha_range, run_simulation, sweep, RunSummary, SimError, ThroughputReport};
pub use validation::{run_validate, CheckStatus, ValidationReport};
