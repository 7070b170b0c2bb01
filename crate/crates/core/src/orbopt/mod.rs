//! Orbital optimization: derivatives, micro cycles and the macro loop.

pub mod derivatives;
pub mod generator;
pub mod macro_loop;
pub mod micro;
pub mod natural;

pub use derivatives::{qio_derivatives, qio_diag_hessian, qio_gradient, PairList, QioDerivatives, LAMBDA_FLOOR};
pub use generator::RotationGenerator;
pub use macro_loop::{macro_loop, write_report_csv, MacroOptions, MacroRecord, QioReport, Scheme, SolverKind};
pub use micro::{micro_cycle_minimize, micro_cycle_minimize_masked, MicroResult, OptimizerConfig};
pub use natural::{natural_orbitals, natural_orbitals_masked, occupation_order, sort_by_occupation, OCCUPATION_TIE};
