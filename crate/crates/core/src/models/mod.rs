//! Concrete open-system models and their closed-form references.

mod ho;
mod qbm;
mod qubit;

pub use ho::{ho_fidelity_analytic, ho_model, ho_moment_solution};
pub use qbm::{qbm_model, QBMParams, REGIME_FACTOR};
pub use qubit::{
    qubit_linear_response_coefficient, qubit_max_overlap, qubit_model, qubit_model_for_bath,
    qubit_pair_fidelity, qubit_rate, QubitRelaxation,
};
