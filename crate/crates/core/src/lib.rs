//! Relaxation of open quantum systems toward thermal equilibrium.
//!
//! Modules, bottom up: [`quantum`] (spaces, states, operators),
//! [`liouvillian`] (GKSL generators, spectra, evolution), [`metrics`]
//! (fidelity, quantum Fisher information, statistical length), [`models`]
//! (qubit, harmonic oscillator, Brownian particle) and [`protocols`]
//! (heating/cooling comparisons).

pub mod error;
pub mod linalg;
pub mod liouvillian;
pub mod metrics;
pub mod models;
pub mod protocols;
pub mod quantum;
pub mod validation;

pub use error::{Error, Result};
pub use linalg::C64;
pub use liouvillian::{
    apply_adjoint, apply_generator, evolve, evolve_spectral, overlaps, spectral_decompose,
    to_superoperator, EvolveOptions, GKSLModel, Method, SpectralDecomposition, Superoperator,
    Trajectory,
};
pub use metrics::{bures_distance, fidelity, kinematics, qfi, sld, KinematicsRecord};
pub use protocols::{
    linear_response_sweep, run_protocol, run_three_temperature, run_two_temperature, solve_equidistant_cold,
    solve_equidistant_warm, spectrum_report, ModelFamily, ProtocolKind, ProtocolResult, ProtocolSpec,
};
pub use quantum::{
    bose_einstein, ladder_operators, position_momentum, temperature_from_occupation,
    thermal_state, thermal_state_at, BathSpec, DensityMatrix, HilbertSpec, OperatorMatrix,
    SpaceKind,
};
