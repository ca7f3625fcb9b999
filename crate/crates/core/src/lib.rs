//! Parametric down-conversion with a quantized pump, simulated exactly in
//! truncated Fock space.
//!
//! The pump and the down-converted modes evolve under the interaction
//! Hamiltonian of a multi-mode (`a_p ⊗ a_1† ⋯ a_n† + h.c.`) or single-mode
//! (`a_p a_d†ⁿ + h.c.`) process. Both conserve a pump-number label, so the
//! default propagation works block by block on small tridiagonal matrices;
//! the dense tensor-product path is kept as a reference oracle.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod analytics;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod linalg;
pub mod models;
pub mod pump;
pub mod series;
pub mod stats;
pub mod tridiag;

pub use error::{PdcError, Result};
pub use evolution::{brute_force_evolve, evolve_block, evolve_pump, BlockAmplitudes, JointState};
pub use models::{
    build_block_hamiltonian, build_full_hamiltonian, coupling_eta, interaction_strength,
    BlockHamiltonian, CouplingParams, Cutoffs, Frequencies, InteractionStrength, PdcModel, Process,
};
pub use pump::{PumpKind, PumpSpec, Truncation};
