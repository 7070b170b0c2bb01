//! Determinant-based configuration interaction.

pub mod amplitudes;
pub mod davidson;
pub mod determinant;
pub mod sigma;
pub mod solver;
pub mod space;
pub mod tailored;

pub use amplitudes::{
    extract_cas_amplitudes, parse_amplitudes, parse_amplitudes_str, write_amplitudes, Amplitudes, CasAmplitudes,
    C0_THRESHOLD,
};
pub use determinant::{Determinant, Spin, SpinOrbital};
pub use sigma::HamiltonianOperator;
pub use solver::{
    apply_hamiltonian, dense_hamiltonian, fci_ground_state, solve_casci, solve_casci_in_place, solve_fci,
    solve_fci_with, CasSpec, CasciSolution, CiSolverOptions,
};
pub use space::{CiVector, DeterminantSpace};
pub use tailored::{
    build_cisd_state, solve_tailored_external, solve_tailored_in_place, TailoredSolution, TailoredState,
};
