//! Pauli algebra, Pauli channels, and the Hamiltonian-estimation scenario:
//! maximally entangled and random stabilizer inputs, noiseless and noisy
//! QFIM formulas, and their deviation observables.

pub mod channel;
pub mod hamiltonian;
pub mod pauli;

pub use channel::{apply_pauli_channel, apply_pauli_channel_probe, PauliChannel};
pub use hamiltonian::{
    deviation_me_noisy, deviation_stabilizer_depolarizing, deviation_stabilizer_numeric,
    max_entangled_state, qfim_hamiltonian_pure, qfim_noisy_bell, sampled_stabilizer_inputs,
    stabilizer_ensemble_cfim, stabilizer_ensemble_qfim, stabilizer_input_states,
    wmse_lower_bound_w, HamiltonianScenario,
};
pub use pauli::{pauli_mul, PauliLabel};
