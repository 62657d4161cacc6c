//! Brownian particle in a harmonic trap, Caldeira-Leggett type master
//! equation in Lindblad form.
//!
//! H = p^2/2m + m Omega^2 x^2 / 2 (bare trap, no frequency renormalization)
//! and a single jump L = alpha x + beta p with alpha = sqrt(2 m zeta T) and
//! beta = (zeta/alpha)(-T/Lambda + i/2). The Fock basis is that of the trap.

use crate::error::{Error, Result};
use crate::linalg::{c, C64};
use crate::liouvillian::GKSLModel;
use crate::quantum::{position_momentum, thermal_state_at, HilbertSpec, OperatorMatrix};

/// Factor used to read "much greater than" in the validity check.
pub const REGIME_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QBMParams {
    pub mass: f64,
    pub trap_frequency: f64,
    pub cutoff: f64,
    pub damping: f64,
    pub temperature: f64,
}

impl QBMParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("trap frequency", self.trap_frequency),
            ("cutoff", self.cutoff),
            ("damping", self.damping),
            ("temperature", self.temperature),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Whether T >> Omega and Lambda >> Omega (by [`REGIME_FACTOR`]).
    pub fn in_validity_regime(&self) -> bool {
        self.temperature >= REGIME_FACTOR * self.trap_frequency
            && self.cutoff >= REGIME_FACTOR * self.trap_frequency
    }

    pub fn jump_coefficients(&self) -> (f64, C64) {
        let alpha = (2.0 * self.mass * self.damping * self.temperature).sqrt();
        let beta = C64::new(-self.temperature / self.cutoff, 0.5) * (self.damping / alpha);
        (alpha, beta)
    }
}

/// Generator on a Fock space of the trap (`space.omega()` must equal the trap
/// frequency). Outside the validity regime a warning is logged and recorded
/// in the model metadata.
pub fn qbm_model(space: &HilbertSpec, params: &QBMParams) -> Result<GKSLModel> {
    params.validate()?;
    if (space.omega() - params.trap_frequency).abs() > 1e-12 * params.trap_frequency {
        return Err(Error::Domain(format!(
            "space frequency {} differs from trap frequency {}",
            space.omega(),
            params.trap_frequency
        )));
    }
    thermal_state_at(space, params.temperature)?;
    let valid = params.in_validity_regime();
    if !valid {
        log::warn!(
            "Brownian master equation used outside T >> Omega, Lambda >> Omega (T = {}, Omega = {}, Lambda = {})",
            params.temperature,
            params.trap_frequency,
            params.cutoff
        );
    }
    let (x, p) = position_momentum(space, params.mass)?;
    let kin = p.matmul(&p).scaled(c(0.5 / params.mass), "p2/2m");
    let pot = x
        .matmul(&x)
        .scaled(c(0.5 * params.mass * params.trap_frequency.powi(2)), "V");
    let h = OperatorMatrix::new(*space, kin.entries() + pot.entries(), "H")?;
    let (alpha, beta) = params.jump_coefficients();
    let l = OperatorMatrix::new(
        *space,
        x.entries().mapv(|z| z * alpha) + p.entries().mapv(|z| z * beta),
        "L",
    )?;
    Ok(GKSLModel::new(*space, h, vec![l])?
        .with_metadata("model", "brownian")
        .with_metadata("dim", format!("{}", space.dim()))
        .with_metadata("mass", format!("{}", params.mass))
        .with_metadata("trap_frequency", format!("{}", params.trap_frequency))
        .with_metadata("cutoff", format!("{}", params.cutoff))
        .with_metadata("damping", format!("{}", params.damping))
        .with_metadata("temperature", format!("{}", params.temperature))
        .with_metadata("validity_regime", if valid { "ok" } else { "outside" }))
}
