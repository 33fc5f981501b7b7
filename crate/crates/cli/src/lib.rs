//! Batch front-end for the `wigner-core` solvers: config files, run
//! records, binary state files and plot tables.

pub mod config;
pub mod output;
pub mod plot;
pub mod run;
pub mod state_io;

pub use config::{load_config, parse_config, write_config, ConfigError, ResolvedConfig, SimulationConfig};
pub use plot::{emit_plot_data, Selection};
pub use run::{run, RunOptions, RunSummary};
pub use state_io::{load_state, save_state, StoredState};
