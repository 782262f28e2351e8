//! Dense linear algebra and N-qubit register mechanics.

mod matrix;
mod register;

pub use matrix::{
    identity2, pauli_x, pauli_y, pauli_z, tensor, tensor_all, ComplexMatrix, C64, I_UNIT, ONE, ZERO,
};
pub(crate) use register::{apply_entangler_in_place, apply_local_in_place};
pub use register::{
    bit_of, build_entangler, embed_local, format_outcome, is_cptp, is_cptp_within, is_unitary,
    is_unitary_within, parse_outcome, player_mask, DensityOperator, OutcomeDistribution,
    StateVector, CLAMP_TOL, STATE_TOL, STRUCTURAL_TOL,
};
