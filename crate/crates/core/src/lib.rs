//! Spectral splitting integrators for Hamiltonian PDEs `H = H_0 + P` with
//! `H_0 = Σ_a ω_a |ξ_a|²`, together with step-size resonance diagnostics and
//! a sparse polynomial algebra for normal-form coefficients.
//!
//! Models: the nonlinear Schrödinger equation on `T^d` and the nonlinear wave
//! equation on the circle. Integrators: Lie and Strang splitting, optionally
//! followed by the rounding projection `Π_{η,s}` and optionally mollified.

// the negated comparisons reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod integrators;
pub mod io;
pub mod lattice;
pub mod models;
pub mod multiindex;
pub mod normalform;
pub mod resonance;
pub mod spectral;
pub mod state;

pub use error::{Error, Result};
pub use integrators::{
    evolve, linear_flow, nonlinear_flow, split_step, Composition, EvolutionConfig, Rounding, SplitStepper,
    SplittingScheme, TrajectoryRecord,
};
pub use lattice::{LatticeKind, Mode, ModeLattice};
pub use models::{
    nls_model, wave_model, Collocation, FilterKind, ModelDescriptor, NonlinearityDescriptor, PdeModel, RealPolynomial,
};
pub use multiindex::{Entry, MultiIndex, Sign};
pub use normalform::{HomologicalSolution, JClass, SparsePolynomial};
pub use resonance::{DivisorReport, Frequencies, H1Report};
pub use state::{DiagnosticsSample, SpectralState};
