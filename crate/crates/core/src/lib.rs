//! Decoherence of photon-number entangled states (PNES) of two bosonic modes
//! in a thermal/lossy channel.
//!
//! The crate evolves truncated two-mode Fock-space density matrices through
//! the mode-local Lindblad channel, measures entanglement by negativity of the
//! partial transpose, and compares the survival of non-Gaussian states against
//! twin-beam references whose separation time follows from Simon's criterion.

pub mod channel;
pub mod entanglement;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod states;

pub use error::{Error, Result};
