//! Two-level system exchanging excitations with a bosonic bath.
//!
//! H = omega sigma+ sigma-, jumps sqrt(gamma nbar) sigma+ and
//! sqrt(gamma (nbar + 1)) sigma-. Index 0 is the ground state. The closed
//! forms below follow from the single decay mode with rate
//! Gamma = gamma coth(omega beta / 2).

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{c, C64};
use crate::liouvillian::GKSLModel;
use crate::quantum::{bose_einstein, BathSpec, HilbertSpec, OperatorMatrix};

pub fn qubit_model(omega: f64, gamma: f64, temperature: f64) -> Result<GKSLModel> {
    qubit_model_for_bath(&BathSpec::from_temperature(omega, gamma, temperature)?)
}

pub fn qubit_model_for_bath(bath: &BathSpec) -> Result<GKSLModel> {
    let space = HilbertSpec::qubit(bath.omega)?;
    let mut sp = Array2::zeros((2, 2));
    sp[[1, 0]] = c(1.0);
    let sp = OperatorMatrix::new(space, sp, "sigma+")?;
    let sm = sp.dagger();
    let h = sp.matmul(&sm).scaled(c(bath.omega), "H");
    let up = sp.scaled(c((bath.gamma * bath.nbar).sqrt()), "L+");
    let down = sm.scaled(c((bath.gamma * (bath.nbar + 1.0)).sqrt()), "L-");
    Ok(GKSLModel::new(space, h, vec![up, down])?
        .with_metadata("model", "qubit")
        .with_metadata("omega", format!("{}", bath.omega))
        .with_metadata("gamma", format!("{}", bath.gamma))
        .with_metadata("temperature", format!("{}", bath.temperature)))
}

/// Decay rate of the single non-stationary population mode.
pub fn qubit_rate(omega: f64, gamma: f64, temperature: f64) -> Result<f64> {
    Ok(gamma * (1.0 + 2.0 * bose_einstein(omega, temperature)?))
}

/// Fidelity between qubit thermal states at inverse temperatures b1, b2:
/// (1 + e^{omega (b1 + b2)/2}) / sqrt((1 + e^{omega b1})(1 + e^{omega b2})).
pub fn qubit_pair_fidelity(omega: f64, b1: f64, b2: f64) -> f64 {
    let (e1, e2) = ((omega * b1).exp(), (omega * b2).exp());
    (1.0 + (omega * (b1 + b2) / 2.0).exp()) / ((1.0 + e1) * (1.0 + e2)).sqrt()
}

/// Quadratic coefficient of 1 - F in the temperature offset:
/// e^{omega beta} / (8 (1 + e^{omega beta})^2) (omega / T^2)^2.
pub fn qubit_linear_response_coefficient(omega: f64, temperature: f64) -> f64 {
    let e = (omega / temperature).exp();
    e / (8.0 * (1.0 + e).powi(2)) * (omega / temperature.powi(2)).powi(2)
}

/// Largest possible |xi| for a bath at inverse temperature beta.
pub fn qubit_max_overlap(omega: f64, beta: f64) -> f64 {
    0.5 * (omega * beta / 2.0).tanh()
}

/// Closed-form relaxation of a thermal qubit at beta0 in a bath at beta.
#[derive(Clone, Copy, Debug)]
pub struct QubitRelaxation {
    pub omega: f64,
    pub gamma: f64,
    pub beta0: f64,
    pub beta: f64,
}

impl QubitRelaxation {
    pub fn new(omega: f64, gamma: f64, beta0: f64, beta: f64) -> Result<Self> {
        if !(omega > 0.0 && gamma > 0.0 && beta0 > 0.0 && beta > 0.0) {
            return Err(Error::Domain("qubit closed forms need positive omega, gamma, betas".into()));
        }
        Ok(Self {
            omega,
            gamma,
            beta0,
            beta,
        })
    }

    fn ea(&self) -> f64 {
        (self.omega * self.beta).exp()
    }

    fn ea0(&self) -> f64 {
        (self.omega * self.beta0).exp()
    }

    /// Gamma = gamma coth(omega beta / 2)
    pub fn rate(&self) -> f64 {
        self.gamma / (self.omega * self.beta / 2.0).tanh()
    }

    /// Overlap of the initial state with the decay mode.
    pub fn xi(&self) -> f64 {
        (self.ea0() - self.ea()) / ((self.ea0() + 1.0) * (self.ea() + 1.0))
    }

    /// Left decay mode (diagonal) (1, -e^{omega beta}) / (1 + e^{omega beta}).
    pub fn left_decay_mode(&self) -> [f64; 2] {
        [1.0 / (1.0 + self.ea()), -self.ea() / (1.0 + self.ea())]
    }

    /// rho(t) = rho_th(beta) + e^{-Gamma t} xi diag(1, -1)
    pub fn state(&self, t: f64) -> Array2<C64> {
        let p0 = self.ea() / (1.0 + self.ea());
        let d = (-self.rate() * t).exp() * self.xi();
        let mut m = Array2::zeros((2, 2));
        m[[0, 0]] = c(p0 + d);
        m[[1, 1]] = c(1.0 - p0 - d);
        m
    }

    /// Time for the population offset to shrink to `delta`.
    pub fn population_time(&self, delta: f64) -> f64 {
        (self.xi().abs() / delta).ln() / self.rate()
    }

    fn a_term(&self, t: f64) -> f64 {
        (1.0 - (-self.rate() * t).exp()) * (self.ea() - self.ea0()) / (1.0 + self.ea())
    }

    /// Fidelity between rho(t) and the bath thermal state.
    pub fn fidelity(&self, t: f64) -> f64 {
        let a = self.a_term(t);
        ((self.ea() * (self.ea0() + a)).sqrt() + (1.0 - a).sqrt())
            / ((1.0 + self.ea()) * (1.0 + self.ea0())).sqrt()
    }

    pub fn kappa(&self, t: f64) -> f64 {
        -(self.rate() * t).exp() / ((self.ea() + 1.0) * self.xi())
    }

    /// Quantum Fisher information of rho(t) with respect to t.
    pub fn qfi(&self, t: f64) -> f64 {
        let k = self.kappa(t);
        self.rate().powi(2) / ((self.ea() * k - 1.0) * (k + 1.0))
    }

    /// Statistical velocity; both square-root factors change sign together,
    /// so the product is taken under one root.
    pub fn velocity(&self, t: f64) -> f64 {
        let k = self.kappa(t);
        (self.rate() / 2.0) / ((self.ea() * k - 1.0) * (k + 1.0)).sqrt()
    }

    fn length_primitive(&self, t: f64) -> f64 {
        let k = self.kappa(t);
        let e = self.ea();
        let arg = ((e - 1.0) * k - 2.0) / (2.0 * ((e * k - 1.0) * (k + 1.0)).sqrt());
        0.5 * arg.abs().atan()
    }

    /// Statistical length travelled between t0 and t, the integral of
    /// [`Self::velocity`]. With d kappa = Gamma kappa dt the rate cancels and
    /// the prefactor of the arctan difference is 1/2. The primitive is
    /// monotone (its argument vanishes only at infinite temperature) but
    /// decreasing when the bath is colder, hence the absolute value.
    pub fn length(&self, t0: f64, t: f64) -> f64 {
        (self.length_primitive(t) - self.length_primitive(t0)).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::thermal_state;

    #[test]
    fn rate_example() {
        let g = qubit_rate(1.0, 1.0, 0.5).unwrap();
        assert!((g - 1.0 / 1f64.tanh()).abs() < 1e-14);
        assert!((g - 1.3130352854993312).abs() < 1e-12);
        let q = QubitRelaxation::new(1.0, 0.1, 1.0, 2.0).unwrap();
        assert!((q.rate() - 0.13130352854993312).abs() < 1e-14);
    }

    #[test]
    fn xi_matches_population_difference() {
        // xi is the initial minus the final ground-state population
        for (b0, b) in [(0.3, 2.0), (2.0, 0.3), (1.0, 1.0), (5.0, 0.7)] {
            let q = QubitRelaxation::new(1.0, 0.1, b0, b).unwrap();
            let space = HilbertSpec::qubit(1.0).unwrap();
            let p0 = thermal_state(&space, b0).unwrap().populations()[0];
            let pb = thermal_state(&space, b).unwrap().populations()[0];
            assert!((q.xi() - (p0 - pb)).abs() < 1e-15);
            assert!((q.state(0.0)[[0, 0]].re - p0).abs() < 1e-15);
        }
        let asym = qubit_max_overlap(1.0, 2.0);
        assert!((asym - 0.5 * 1f64.tanh()).abs() < 1e-15);
        assert!((asym - 0.38079707797788).abs() < 1e-12);
    }

    #[test]
    fn fidelity_reduces_to_pair_formula() {
        let q = QubitRelaxation::new(1.0, 0.1, 0.7, 2.0).unwrap();
        assert!((q.fidelity(0.0) - qubit_pair_fidelity(1.0, 0.7, 2.0)).abs() < 1e-15);
        assert!((q.fidelity(1e4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn velocity_is_half_root_qfi_for_both_directions() {
        for (b0, b) in [(0.5, 2.0), (5.0, 2.0)] {
            let q = QubitRelaxation::new(1.0, 0.1, b0, b).unwrap();
            for t in [0.0, 3.0, 17.0] {
                assert!((q.velocity(t) - 0.5 * q.qfi(t).sqrt()).abs() < 1e-14);
                assert!(q.qfi(t) > 0.0);
            }
        }
    }

    #[test]
    fn length_is_integral_of_velocity() {
        // composite Simpson on a fine grid as an independent check
        for (b0, b) in [(0.6667, 2.0), (3.3333, 2.0)] {
            let q = QubitRelaxation::new(1.0, 0.1, b0, b).unwrap();
            let n = 4000;
            let (t0, t1) = (0.0, 60.0);
            let h = (t1 - t0) / n as f64;
            let mut s = q.velocity(t0) + q.velocity(t1);
            for k in 1..n {
                s += q.velocity(t0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
            }
            let simpson = s * h / 3.0;
            assert!((q.length(t0, t1) - simpson).abs() < 1e-10 * simpson, "{} {}", q.length(t0, t1), simpson);
        }
    }

    #[test]
    fn linear_response_coefficient_example() {
        let k = qubit_linear_response_coefficient(1.0, 0.5);
        let e2 = 2f64.exp();
        assert!((k - 2.0 * e2 / (1.0 + e2).powi(2)).abs() < 1e-15);
        // small-offset fidelity matches the quadratic law
        let dt = 1e-3;
        let fp = qubit_pair_fidelity(1.0, 2.0, 1.0 / (0.5 + dt));
        let fm = qubit_pair_fidelity(1.0, 2.0, 1.0 / (0.5 - dt));
        assert!(((2.0 - fp - fm) / (2.0 * dt * dt) - k).abs() < 1e-4 * k);
    }
}
