//! Library side of the `chernq` command-line tool: run configuration,
//! pipelines for each subcommand and the result-record format.

pub mod commands;
pub mod config;
pub mod error;
pub mod record;

pub use commands::{cmd_flux, cmd_heisenberg, cmd_phase_diagram, cmd_sweep, cmd_wannier, run_config};
pub use config::{BackendKind, HeisenbergParams, NoiseParams, RunConfig, Task, WannierParams, Zone};
pub use error::{CliError, CliResult};
pub use record::{PhaseDiagramRecord, ResultRecord, SweepRecord};
