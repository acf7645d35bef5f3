//! Single-mode pure states on a position grid, and a truncated Fock-space
//! oracle.

pub mod fock;
pub mod grid;

pub use fock::{
    coherent_vector, converged_expectation, expm, fock_cubic_state, fock_expectation, grid_to_fock,
    padded_observable, CMat, CVec, FockOperatorSet, DEFAULT_CUTOFF,
};
pub use grid::{
    apply_cubic_phase, quadrature_pdf_and_sample, rotate_quadrature, GridSpec, GridWavefunction,
    QuadratureSampler,
};
