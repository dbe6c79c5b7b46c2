//! Experiment orchestration and the CLI: reproduces the fidelity-estimation
//! comparison, theorem-bound sweeps, the no-go sweeps, and the
//! Hamiltonian-estimation checks, with config handling, seeding and CSV/JSON
//! emission. Batch outputs only; no interactive UI.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod table;

pub use config::Config;
pub use experiments::{
    run_designs_verify, run_fig2, run_hamiltonian, run_nogo, run_selftest, run_theorems,
    RunOptions, Subsample,
};
pub use table::{eval_formula, formula, MetaSidecar, ResultRow, ResultTable};
