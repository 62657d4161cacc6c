use crate::error::{Error, Result};
use crate::liouvillian::{GKSLModel, Method};
use crate::models::{ho_model, qbm_model, qubit_model, QBMParams};
use crate::quantum::{
    bose_einstein, temperature_from_occupation, thermal_state_at, DensityMatrix, HilbertSpec,
    DEFAULT_TAIL_TOL,
};

/// A model family with every parameter fixed except the bath temperature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelFamily {
    Qubit {
        omega: f64,
        gamma: f64,
    },
    HarmonicOscillator {
        dim: usize,
        omega: f64,
        gamma: f64,
        tail_tol: f64,
    },
    Brownian {
        dim: usize,
        mass: f64,
        trap_frequency: f64,
        cutoff: f64,
        damping: f64,
        tail_tol: f64,
    },
}

impl ModelFamily {
    pub fn qubit(omega: f64, gamma: f64) -> Self {
        ModelFamily::Qubit { omega, gamma }
    }

    pub fn oscillator(dim: usize, omega: f64, gamma: f64) -> Self {
        ModelFamily::HarmonicOscillator {
            dim,
            omega,
            gamma,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }

    pub fn brownian(dim: usize, mass: f64, trap_frequency: f64, cutoff: f64, damping: f64) -> Self {
        ModelFamily::Brownian {
            dim,
            mass,
            trap_frequency,
            cutoff,
            damping,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }

    /// Same family with a different Fock tail tolerance (no effect on the qubit).
    pub fn with_tail_tol(mut self, tol: f64) -> Self {
        match &mut self {
            ModelFamily::Qubit { .. } => {}
            ModelFamily::HarmonicOscillator { tail_tol, .. } | ModelFamily::Brownian { tail_tol, .. } => *tail_tol = tol,
        }
        self
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Qubit { .. } => "qubit",
            ModelFamily::HarmonicOscillator { .. } => "ho",
            ModelFamily::Brownian { .. } => "qbm",
        }
    }

    /// Level spacing used for occupations and thermal weights.
    pub fn omega(&self) -> f64 {
        match *self {
            ModelFamily::Qubit { omega, .. } | ModelFamily::HarmonicOscillator { omega, .. } => omega,
            ModelFamily::Brownian { trap_frequency, .. } => trap_frequency,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            ModelFamily::Qubit { .. } => 2,
            ModelFamily::HarmonicOscillator { dim, .. } | ModelFamily::Brownian { dim, .. } => dim,
        }
    }

    pub fn space(&self) -> Result<HilbertSpec> {
        match *self {
            ModelFamily::Qubit { omega, .. } => HilbertSpec::qubit(omega),
            ModelFamily::HarmonicOscillator { dim, omega, tail_tol, .. } => {
                HilbertSpec::fock(dim, omega)?.with_tail_tol(tail_tol)
            }
            ModelFamily::Brownian {
                dim,
                trap_frequency,
                tail_tol,
                ..
            } => HilbertSpec::fock(dim, trap_frequency)?.with_tail_tol(tail_tol),
        }
    }

    pub fn thermal(&self, temperature: f64) -> Result<DensityMatrix> {
        if !(temperature > 0.0) {
            return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
        }
        thermal_state_at(&self.space()?, temperature)
    }

    /// Generator for a bath at `temperature`.
    pub fn model(&self, temperature: f64) -> Result<GKSLModel> {
        match *self {
            ModelFamily::Qubit { omega, gamma } => qubit_model(omega, gamma, temperature),
            ModelFamily::HarmonicOscillator { omega, gamma, .. } => {
                ho_model(&self.space()?, gamma, bose_einstein(omega, temperature)?)
            }
            ModelFamily::Brownian { .. } => qbm_model(&self.space()?, &self.qbm_params(temperature)?),
        }
    }

    pub fn qbm_params(&self, temperature: f64) -> Result<QBMParams> {
        match *self {
            ModelFamily::Brownian {
                mass,
                trap_frequency,
                cutoff,
                damping,
                ..
            } => Ok(QBMParams {
                mass,
                trap_frequency,
                cutoff,
                damping,
                temperature,
            }),
            _ => Err(Error::Domain("not a Brownian family".into())),
        }
    }

    pub fn temperature_for_occupation(&self, nbar: f64) -> Result<f64> {
        temperature_from_occupation(self.omega(), nbar)
    }

    /// Explicit integration for the qubit; the Fock-space families are stiff
    /// over the protocol windows.
    pub fn default_method(&self) -> Method {
        match self {
            ModelFamily::Qubit { .. } => Method::RungeKutta,
            _ => Method::Exponential,
        }
    }

    /// Warnings worth carrying into reports for a bath at `temperature`.
    pub fn flags(&self, temperature: f64) -> Vec<String> {
        let mut out = Vec::new();
        if let ModelFamily::Brownian { .. } = self {
            if let Ok(p) = self.qbm_params(temperature) {
                if !p.in_validity_regime() {
                    out.push(format!(
                        "qbm bath T = {temperature:.6e} outside T >> Omega, Lambda >> Omega"
                    ));
                }
            }
        }
        out
    }
}
