//! Quantum-information-assisted orbital optimization.
//!
//! Orbitals are rotated to minimize the total orbital correlation
//! `Σ_i S(ρ_i)` of a correlated wavefunction, alternating with re-solving
//! the wavefunction in the rotated orbitals.

pub mod basis_file;
pub mod ci;
pub mod correlation;
pub mod error;
pub mod fcidump;
pub mod hamiltonian;
pub mod oracle;
pub mod orbopt;
pub mod rdm;
pub mod tensor;

pub use error::{Error, Result};

/// Scientific notation with nine significant digits, as used in reports.
pub fn format_sig(x: f64) -> String {
    // adding zero folds -0 into +0
    format!("{:.8e}", x + 0.0)
}
