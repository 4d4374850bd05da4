//! Monte Carlo experiments measuring how often the variance-ratio tests and
//! the sequential procedure reach the correct decision.
//!
//! An [`ExperimentSpec`] lists the table rows `(b, q rule, T)` and columns
//! (`d1` or `c`); [`run_experiment`] evaluates every cell in parallel with
//! per-replication seeds, so results are identical for any thread count.
//! Published layouts are available as named presets via [`experiments`].

pub mod error;
pub mod output;
pub mod presets;
pub mod runner;
pub mod spec;

pub use error::{McError, Result};
pub use presets::{experiments, Experiment};
pub use runner::{
    run_demeaned_table, run_experiment, run_local_alternatives, run_sequential_table, run_size_power, run_with_threads,
    CellResult, ResultTable,
};
pub use spec::{Design, ExperimentSpec, Row, SeqCase};
