//! Damped harmonic oscillator in a truncated Fock space.
//!
//! H = omega a^dag a, jumps sqrt(gamma nbar) a^dag and sqrt(gamma (nbar + 1)) a.
//! For this generator <a^dag a> relaxes with rate gamma, and a thermal initial
//! state stays thermal.

use crate::error::Result;
use crate::linalg::c;
use crate::liouvillian::GKSLModel;
use crate::quantum::{ladder_operators, temperature_from_occupation, thermal_state_at, HilbertSpec};

/// Oscillator coupled to a bath with mean occupation `nbar` at frequency
/// `omega`. Fails with a truncation error if the bath's thermal state does
/// not fit in `space`.
pub fn ho_model(space: &HilbertSpec, gamma: f64, nbar: f64) -> Result<GKSLModel> {
    let temperature = temperature_from_occupation(space.omega(), nbar)?;
    if temperature > 0.0 {
        thermal_state_at(space, temperature)?;
    }
    let bath = crate::quantum::BathSpec::from_occupation(space.omega(), gamma, nbar)?;
    let (a, ad) = ladder_operators(space)?;
    let h = ad.matmul(&a).scaled(c(space.omega()), "H");
    let up = ad.scaled(c((bath.gamma * bath.nbar).sqrt()), "L+");
    let down = a.scaled(c((bath.gamma * (bath.nbar + 1.0)).sqrt()), "L-");
    Ok(GKSLModel::new(*space, h, vec![up, down])?
        .with_metadata("model", "harmonic-oscillator")
        .with_metadata("dim", format!("{}", space.dim()))
        .with_metadata("omega", format!("{}", space.omega()))
        .with_metadata("gamma", format!("{gamma}"))
        .with_metadata("nbar", format!("{nbar}")))
}

/// <a^dag a>_t = n0 e^{-rate t} + nbar (1 - e^{-rate t}).
pub fn ho_moment_solution(t: f64, n0: f64, nbar: f64, rate: f64) -> f64 {
    let e = (-rate * t).exp();
    n0 * e + nbar * (1.0 - e)
}

/// Fidelity between thermal oscillator states with occupations `n_t` and
/// `nbar`: 1 / (sqrt((1 + n_t)(1 + nbar)) (1 - r)), r = sqrt(n_t nbar / ((1 + n_t)(1 + nbar))).
pub fn ho_fidelity_analytic(n_t: f64, nbar: f64) -> f64 {
    let r = (n_t * nbar / ((1.0 + n_t) * (1.0 + nbar))).sqrt();
    1.0 / (((1.0 + n_t) * (1.0 + nbar)).sqrt() * (1.0 - r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::liouvillian::apply_generator;
    use crate::quantum::{ladder_operators, thermal_state_at};

    #[test]
    fn analytic_fidelity_matches_geometric_sum() {
        // sum_n sqrt(p_n q_n) for untruncated geometric distributions
        for (n1, n2) in [(1.0f64, 10.0f64), (0.3, 0.31), (2.0, 2.0), (5.0, 0.1)] {
            let (x1, x2) = (n1 / (1.0 + n1), n2 / (1.0 + n2));
            let mut s = 0.0;
            for k in 0..20000 {
                s += ((1.0 - x1) * (1.0 - x2) * (x1 * x2).powi(k)).sqrt();
            }
            assert!((s - ho_fidelity_analytic(n1, n2)).abs() < 1e-13);
        }
        assert!((ho_fidelity_analytic(3.0, 3.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn moment_equation_rate_is_gamma() {
        // d<n>/dt from the generator equals -gamma (<n> - nbar) at any thermal state
        let space = HilbertSpec::fock(80, 1.0).unwrap();
        let (gamma, nbar) = (0.1, 2.0);
        let m = ho_model(&space, gamma, nbar).unwrap();
        let (a, ad) = ladder_operators(&space).unwrap();
        let num = ad.matmul(&a);
        let rho = thermal_state_at(&space, temperature_from_occupation(1.0, 0.5).unwrap()).unwrap();
        let d = apply_generator(&m, &rho).unwrap();
        let dn: f64 = (0..80).map(|k| k as f64 * d[[k, k]].re).sum();
        let n = rho.expectation(&num).re;
        assert!((dn + gamma * (n - nbar)).abs() < 1e-12, "{dn}");
        let eps = 1e-6;
        let fd = (ho_moment_solution(eps, n, nbar, gamma) - ho_moment_solution(0.0, n, nbar, gamma)) / eps;
        assert!((fd - dn).abs() < 1e-6);
    }

    #[test]
    fn rejects_too_small_truncation() {
        let space = HilbertSpec::fock(30, 1.0).unwrap();
        assert!(matches!(ho_model(&space, 0.1, 10.0), Err(Error::TruncationOverflow { .. })));
    }
}
