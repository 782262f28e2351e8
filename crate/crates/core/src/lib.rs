//! Multi-player quantum games.
//!
//! Players share an `N`-qubit register entangled by
//! `J = (I^{⊗N} + i σx^{⊗N})/√2`, each applies a local strategy to their own
//! qubit, `J†` is applied, and the computational-basis outcome is paid out
//! according to a [`games::PayoffTable`]. The [`equilibria`] module searches
//! for profitable unilateral deviations over unitary or general channel
//! strategies.

pub mod error;
pub mod qcore;

pub use error::{GameError, Result};
pub mod equilibria;
pub mod games;
pub mod protocol;
pub mod strategies;
