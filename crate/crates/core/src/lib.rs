//! Average channel-fidelity witnesses for continuous-variable gates.
//!
//! Gaussian states live in moment form with the vacuum covariance
//! [`VACUUM_VARIANCE`]·𝟙 and quadrature order `(q1, p1, q2, p2, ...)`.

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod estimators;
pub mod gaussian;
pub mod harness;
pub mod measurement;
pub mod planner;
pub mod rng;
pub mod symplectic;
pub mod wavefn;
pub mod witnesses;

pub use error::{Error, Result};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Variance of either vacuum quadrature, `[q, p] = i/2`.
pub const VACUUM_VARIANCE: f64 = 0.25;

pub use channels::{probe_cubic, probe_gaussian, CubicDevice, DeviceModel, ProbeEnsemble};
pub use estimators::{median_of_means, MomPlan, MomResult};
pub use gaussian::{
    apply_channel, apply_unitary, coherent_state, exact_overlap_traces, overlap_pure,
    GaussianChannelMap, GaussianState, GaussianUnitary, OverlapTraces,
};
pub use symplectic::{
    euler_decompose, is_symplectic, random_symplectic, williamson_euler, SymplecticDecomposition,
    SymplecticMatrix,
};
pub use wavefn::{GridSpec, GridWavefunction};
pub use witnesses::WitnessValue;
