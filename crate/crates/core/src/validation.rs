//! Fast self-checks against closed forms and structural invariants.
//!
//! Every check is small enough to run in a few seconds in total. Reference
//! rows compare with published approximate values and are informational.

use crate::error::Result;
use crate::liouvillian::{evolve, overlaps, spectral_decompose_populations, to_superoperator, uniform_grid, EvolveOptions};
use crate::metrics::{bures_distance, fidelity, kinematics};
use crate::models::{
    ho_fidelity_analytic, ho_moment_solution, qubit_linear_response_coefficient, qubit_max_overlap, QubitRelaxation,
};
use crate::protocols::{linear_response_sweep, solve_equidistant_cold, ModelFamily, DEFAULT_EQUIDIST_TOL};
use crate::quantum::{ladder_operators, temperature_from_occupation, HilbertSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckKind {
    /// Numerics against an independent closed form.
    Oracle,
    /// Structural property that must hold exactly up to tolerance.
    Invariant,
    /// Comparison with a published approximate value.
    Reference,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Oracle => "oracle",
            CheckKind::Invariant => "invariant",
            CheckKind::Reference => "reference",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub kind: CheckKind,
    /// Measured error or quantity.
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn le(name: &'static str, kind: CheckKind, value: f64, tolerance: f64) -> Check {
    Check {
        name,
        kind,
        value,
        tolerance,
        pass: value <= tolerance,
    }
}

fn rk() -> EvolveOptions {
    EvolveOptions::tolerances(1e-11, 1e-13)
}

fn qubit_trajectory_error() -> Result<f64> {
    let fam = ModelFamily::qubit(1.0, 0.1);
    let times = uniform_grid(60.0, 61)?;
    let mut worst: f64 = 0.0;
    for (b0, b) in [(0.5, 2.0), (2.0, 0.5), (5.0, 1.0), (0.2, 3.0)] {
        let traj = evolve(&fam.model(1.0 / b)?, &fam.thermal(1.0 / b0)?, &times, &rk())?;
        let q = QubitRelaxation::new(1.0, 0.1, b0, b)?;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let d = s.entries() - &q.state(*t);
            worst = worst.max(d.iter().fold(0.0, |m, z| m.max(z.norm())));
        }
    }
    Ok(worst)
}

/// max relative error of fidelity, QFI and length against the closed forms.
fn qubit_metric_errors() -> Result<[f64; 3]> {
    let fam = ModelFamily::qubit(1.0, 0.1);
    let mut out = [0.0f64; 3];
    for (t0, t) in [(0.2018, 0.5), (1.5, 0.5)] {
        let model = fam.model(t)?;
        let times = crate::liouvillian::graded_grid(60.0, 1201, 6)?;
        let traj = evolve(&model, &fam.thermal(t0)?, &times, &rk())?;
        let rec = kinematics(&traj, &model, &fam.thermal(t)?, 60.0)?;
        let q = QubitRelaxation::new(1.0, 0.1, 1.0 / t0, 1.0 / t)?;
        for k in (0..times.len()).step_by(24) {
            let tk = times[k];
            out[0] = out[0].max((rec.fidelity[k] - q.fidelity(tk)).abs() / q.fidelity(tk));
            out[1] = out[1].max((rec.qfi[k] - q.qfi(tk)).abs() / q.qfi(tk));
            if k > 0 {
                out[2] = out[2].max((rec.length[k] - q.length(0.0, tk)).abs() / q.length(0.0, tk));
            }
        }
    }
    Ok(out)
}

fn ho_errors() -> Result<(f64, f64)> {
    let (dim, n0, nbar) = (80, 0.5, 2.0);
    let fam = ModelFamily::oscillator(dim, 1.0, 0.1);
    let model = fam.model(temperature_from_occupation(1.0, nbar)?)?;
    let times = uniform_grid(30.0, 31)?;
    let traj = evolve(&model, &fam.thermal(temperature_from_occupation(1.0, n0)?)?, &times, &rk())?;
    let space = HilbertSpec::fock(dim, 1.0)?;
    let (a, ad) = ladder_operators(&space)?;
    let num = ad.matmul(&a);
    let target = fam.thermal(temperature_from_occupation(1.0, nbar)?)?;
    let (mut moment, mut fid): (f64, f64) = (0.0, 0.0);
    for (t, s) in times.iter().zip(&traj.states) {
        let n = s.expectation(&num).re;
        let exact = ho_moment_solution(*t, n0, nbar, 0.1);
        moment = moment.max((n - exact).abs() / exact);
        fid = fid.max((fidelity(s, &target)? - ho_fidelity_analytic(n, nbar)).abs());
    }
    Ok((moment, fid))
}

/// Relative gap between 4 D_B^2 / dt^2 and the QFI.
fn bures_qfi_error() -> Result<f64> {
    let space = HilbertSpec::qubit(1.0)?;
    let dt = 1e-5;
    let mut worst: f64 = 0.0;
    for (b0, b) in [(1.0 / 0.2018, 2.0), (1.0 / 1.5, 2.0)] {
        let q = QubitRelaxation::new(1.0, 0.1, b0, b)?;
        for k in 0..10 {
            let t = 3.0 * k as f64;
            let a = crate::quantum::DensityMatrix::new(space, q.state(t))?;
            let c = crate::quantum::DensityMatrix::new(space, q.state(t + dt))?;
            let d = bures_distance(&a, &c)?;
            let est = 4.0 * d * d / (dt * dt);
            worst = worst.max((est - q.qfi(t)).abs() / q.qfi(t));
        }
    }
    Ok(worst)
}

fn qubit_spectrum_error() -> Result<f64> {
    let fam = ModelFamily::qubit(1.0, 0.1);
    let mut worst: f64 = 0.0;
    for t in [0.3, 0.5, 1.5] {
        let m = fam.model(t)?;
        let d = spectral_decompose_populations(m.space(), &to_superoperator(&m))?;
        let g = QubitRelaxation::new(1.0, 0.1, 1.0, 1.0 / t)?.rate();
        let ev = d.eigenvalues();
        worst = worst.max(ev[0].norm()).max((ev[1].re + g).abs()).max(ev[1].im.abs());
        if ev.len() != 2 {
            return Ok(f64::INFINITY);
        }
    }
    Ok(worst)
}

fn overlap_law_errors() -> Result<(f64, f64)> {
    let fam = ModelFamily::qubit(1.0, 0.1);
    let xi = |bath: f64, init: f64| -> Result<f64> {
        let m = fam.model(bath)?;
        let d = spectral_decompose_populations(m.space(), &to_superoperator(&m))?;
        Ok(overlaps(&d, &fam.thermal(init)?)?[1].norm())
    };
    let (mut same, mut swap): (f64, f64) = (0.0, 0.0);
    for (a, b) in [(0.3, 1.5), (0.5, 0.7), (1.0, 4.0)] {
        same = same.max(xi(a, a)?);
        swap = swap.max((xi(a, b)? - xi(b, a)?).abs());
        // bounded by the asymptotic value of the bath
        if xi(a, b)? > qubit_max_overlap(1.0, 1.0 / a) + 1e-15 {
            return Ok((same, f64::INFINITY));
        }
    }
    Ok((same, swap))
}

pub fn run_validation() -> Result<Vec<Check>> {
    use CheckKind::*;
    let mut out = Vec::new();
    out.push(le("qubit trajectory vs closed form", Oracle, qubit_trajectory_error()?, 1e-8));
    let [ef, eq, el] = qubit_metric_errors()?;
    out.push(le("qubit fidelity vs closed form (rel)", Oracle, ef, 1e-6));
    out.push(le("qubit QFI vs closed form (rel)", Oracle, eq, 1e-6));
    out.push(le("qubit length vs closed form (rel)", Oracle, el, 1e-6));
    let (em, efid) = ho_errors()?;
    out.push(le("HO moment vs quench solution (rel)", Oracle, em, 1e-6));
    out.push(le("HO fidelity vs analytic thermal form", Oracle, efid, 1e-8));
    out.push(le("Bures finite difference vs QFI (rel)", Oracle, bures_qfi_error()?, 1e-4));
    out.push(le("qubit spectrum vs {0, -Gamma}", Oracle, qubit_spectrum_error()?, 1e-10));
    let (same, swap) = overlap_law_errors()?;
    out.push(le("overlap of a thermal state with its own bath", Invariant, same, 1e-14));
    out.push(le("overlap exchange symmetry", Invariant, swap, 1e-12));
    let eqd = solve_equidistant_cold(&ModelFamily::qubit(1.0, 0.1), 0.5, 1.5, DEFAULT_EQUIDIST_TOL)?;
    out.push(le("equidistance residual", Invariant, eqd.residual(), 1e-10));
    out.push(le("equidistant T_C vs 0.30", Reference, (eqd.t_cold - 0.30).abs(), 0.01));
    let deltas: Vec<f64> = (1..=5).map(|k| 0.005 * k as f64).collect();
    let lr = linear_response_sweep(&ModelFamily::qubit(1.0, 0.1), 0.5, &deltas)?;
    let exact = qubit_linear_response_coefficient(1.0, 0.5);
    out.push(le("quadratic response fit vs closed form (rel)", Oracle, (lr.coefficient - exact).abs() / exact, 1e-2));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_and_invariant_checks_pass() {
        let checks = run_validation().unwrap();
        for c in &checks {
            if c.kind != CheckKind::Reference {
                assert!(c.pass, "{} {:e} > {:e}", c.name, c.value, c.tolerance);
            }
        }
        assert!(checks.iter().any(|c| c.kind == CheckKind::Reference));
    }
}
