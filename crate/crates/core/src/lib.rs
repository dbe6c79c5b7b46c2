//! Numerical toolkit for multi-parameter quantum metrology with randomized
//! measurements.
//!
//! The crate is organized around the pipeline used by the experiments:
//!
//! - [`qmath`]: dense complex linear algebra for small Hilbert spaces
//!   (Hermitian eigendecomposition, PSD ordering, pseudo-inverses).
//! - [`states`]: parameterized state families `θ → (ρ_θ, {∂_i ρ_θ})`.
//! - [`designs`]: measurement ensembles — exact small designs, Clifford
//!   enumeration and uniform sampling, t-design moment verification.
//! - [`fisher`]: SLD operators, quantum/classical Fisher information
//!   matrices, deviation observables, Gill–Massar and near-optimality checks.
//! - [`shadows`]: Born-rule measurement simulation, classical-shadow
//!   snapshots, standard and local shadow estimators.
//! - [`models`]: Pauli algebra, Pauli channels, and Hamiltonian-estimation
//!   scenarios (noiseless and noisy).
//! - [`harness`]: experiment orchestration, config parsing, CSV/JSON output
//!   and the CLI entry point.

pub mod error;
pub mod qmath;
pub mod rng;

pub mod designs;
pub mod fisher;
pub mod harness;
pub mod models;
pub mod shadows;
pub mod states;

pub use error::{Error, Result};
