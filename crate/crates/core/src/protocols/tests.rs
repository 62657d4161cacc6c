use super::*;
use crate::linalg::C64;
use crate::liouvillian::{overlaps, spectral_decompose_populations, to_superoperator};
use crate::metrics::bures_distance;
use crate::models::{qubit_linear_response_coefficient, qubit_pair_fidelity, QubitRelaxation};
use crate::quantum::temperature_from_occupation;
use crate::Error;

fn qubit() -> ModelFamily {
    ModelFamily::qubit(1.0, 0.1)
}

/// Golden-section minimization of |g| on [a, b] (g monotone with a root).
fn golden_root(mut a: f64, mut b: f64, g: impl Fn(f64) -> f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    while (b - a).abs() > 1e-14 * b.abs() {
        if g(c).abs() < g(d).abs() {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    0.5 * (a + b)
}

#[test]
fn qubit_equidistant_cold_matches_closed_form_root() {
    let eq = solve_equidistant_cold(&qubit(), 0.5, 1.5, DEFAULT_EQUIDIST_TOL).unwrap();
    assert!(eq.residual() <= 1e-10);
    // root of the closed-form pair fidelity, found independently
    let target = qubit_pair_fidelity(1.0, 2.0, 1.0 / 1.5);
    let oracle = golden_root(5e-4, 0.5, |t| qubit_pair_fidelity(1.0, 1.0 / t, 2.0) - target);
    assert!((eq.t_cold - oracle).abs() < 1e-8, "{} {}", eq.t_cold, oracle);
    assert!(eq.t_cold > 0.2 && eq.t_cold < 0.21);
}

#[test]
fn ho_equidistant_cold_matches_golden_section() {
    let fam = ModelFamily::oscillator(150, 1.0, 0.1);
    let th = temperature_from_occupation(1.0, 10.0).unwrap();
    let tw = temperature_from_occupation(1.0, 4.0).unwrap();
    let eq = solve_equidistant_cold(&fam, tw, th, DEFAULT_EQUIDIST_TOL).unwrap();
    assert!(eq.residual() <= 1e-10);
    let rho_w = fam.thermal(tw).unwrap();
    let f_h = fidelity(&fam.thermal(th).unwrap(), &rho_w).unwrap();
    let oracle = golden_root(1e-3 * tw, tw, |t| fidelity(&fam.thermal(t).unwrap(), &rho_w).unwrap() - f_h);
    assert!((eq.t_cold - oracle).abs() <= 1e-8, "{} {}", eq.t_cold, oracle);
}

use crate::metrics::fidelity;

#[test]
fn bures_equidistance_gives_the_same_root() {
    let fam = qubit();
    let eq = solve_equidistant_cold(&fam, 0.5, 1.5, DEFAULT_EQUIDIST_TOL).unwrap();
    let w = fam.thermal(0.5).unwrap();
    let d_h = bures_distance(&fam.thermal(1.5).unwrap(), &w).unwrap();
    let root = golden_root(5e-4, 0.5, |t| bures_distance(&fam.thermal(t).unwrap(), &w).unwrap() - d_h);
    assert!((root - eq.t_cold).abs() < 1e-7, "{root} {}", eq.t_cold);
}

#[test]
fn equidistance_continuity_and_degenerate_limit() {
    let fam = qubit();
    let eq = solve_equidistant_cold(&fam, 0.5, 0.5, DEFAULT_EQUIDIST_TOL).unwrap();
    assert_eq!(eq.t_cold, 0.5);
    let mut prev = 0.0;
    for eps in [1e-1, 1e-2, 1e-3] {
        let eq = solve_equidistant_cold(&fam, 0.5, 0.5 * (1.0 + eps), 1e-12).unwrap();
        let gap = 0.5 - eq.t_cold;
        assert!(gap > 0.0 && gap < 0.5 * eps * 1.5, "{eps} {gap}");
        assert!(eq.t_cold > prev);
        prev = eq.t_cold;
    }
}

#[test]
fn warm_solver_inverts_cold_solver() {
    for fam in [qubit(), ModelFamily::oscillator(60, 1.0, 0.1)] {
        let eq = solve_equidistant_cold(&fam, 1.2, 2.5, DEFAULT_EQUIDIST_TOL).unwrap();
        let back = solve_equidistant_warm(&fam, eq.t_cold, 2.5, DEFAULT_EQUIDIST_TOL).unwrap();
        assert!(back.residual() <= 1e-10);
        assert!((back.t_warm - 1.2).abs() < 1e-7, "{} {}", fam.name(), back.t_warm);
    }
}

#[test]
fn unreachable_equidistance_reports_endpoints() {
    // a very hot state is further from rho_W than the ground state is
    let err = solve_equidistant_cold(&qubit(), 0.5, 1e6, DEFAULT_EQUIDIST_TOL).unwrap_err();
    match err {
        Error::NoEquidistantState(msg) => assert!(msg.contains("F(T_W) = 1"), "{msg}"),
        e => panic!("{e}"),
    }
    assert!(matches!(
        solve_equidistant_cold(&qubit(), 0.5, 0.4, DEFAULT_EQUIDIST_TOL),
        Err(Error::Domain(_))
    ));
}

#[test]
fn first_crossing_interpolates() {
    let t = [0.0, 1.0, 2.0];
    let v = [0.5, 0.8, 1.0];
    assert_eq!(first_crossing(&t, &v, 0.4), Some(0.0));
    assert!((first_crossing(&t, &v, 0.9).unwrap() - 1.5).abs() < 1e-15);
    assert_eq!(first_crossing(&t, &v, 1.1), None);
}

fn qubit_spec(kind: ProtocolKind) -> ProtocolSpec {
    ProtocolSpec::new(qubit(), kind, 1.5, 60.0)
        .with_grid(1201, 6)
}

#[test]
fn qubit_forward_and_backward_heating_is_faster() {
    for kind in [ProtocolKind::ThreeTemperatureForward, ProtocolKind::ThreeTemperatureBackward] {
        let r = run_three_temperature(&qubit_spec(kind).with_warm(0.5)).unwrap();
        let eq = r.equidistance.unwrap();
        assert!(eq.residual() <= 1e-10);
        for (h, c) in r.heating.threshold_times.iter().zip(&r.cooling.threshold_times) {
            let (th, tc) = (h.1.unwrap(), c.1.unwrap());
            if h.0 <= 0.99 {
                assert!(th < tc || (th == 0.0 && tc == 0.0), "{kind:?} {} {th} {tc}", h.0);
            }
        }
        assert!(r.heating.converged && r.cooling.converged);
        assert_eq!(r.heating.trajectory.times, r.cooling.trajectory.times);
        assert!(r.heating.fidelity_monotone && r.cooling.fidelity_monotone);
    }
}

#[test]
fn qubit_two_temperature_completion_and_velocity() {
    let r = run_two_temperature(&qubit_spec(ProtocolKind::TwoTemperature).with_cold(0.2)).unwrap();
    let s = &r.summary;
    assert_eq!(s.heating_dominates, Some(true), "{s:?}");
    assert!(s.heating_completion_time.unwrap() < s.cooling_completion_time.unwrap());
    // heating starts faster in statistical speed and decays faster, so the
    // velocity curves cross
    let (vh, vc) = (&r.heating.kinematics.velocity, &r.cooling.kinematics.velocity);
    let q = |b0: f64, b: f64| QubitRelaxation::new(1.0, 0.1, b0, b).unwrap();
    assert!((vh[0] - q(5.0, 1.0 / 1.5).velocity(0.0)).abs() < 1e-8 * vh[0]);
    assert!((vc[0] - q(1.0 / 1.5, 5.0).velocity(0.0)).abs() < 1e-8 * vc[0]);
    assert!(vh[0] > vc[0]);
    assert!(s.velocity_crossing.is_some_and(|t| t > 0.0 && t < 60.0));
    assert!(s.max_completion_gap.unwrap() > 0.0);
    for b in [&r.heating, &r.cooling] {
        let c = b.kinematics.completion.as_ref().unwrap();
        assert!((c.last().unwrap() - 1.0).abs() < 1e-15);
    }
}

#[test]
fn degenerate_three_temperature_is_flat() {
    let spec = ProtocolSpec::new(qubit(), ProtocolKind::ThreeTemperatureForward, 0.5, 10.0)
        .with_warm(0.5)
        .with_grid(101, 1);
    let r = run_three_temperature(&spec).unwrap();
    for b in [&r.heating, &r.cooling] {
        assert!(b.kinematics.degenerate_path);
        assert!(b.threshold_times.iter().all(|(_, t)| *t == Some(0.0)));
    }
    assert!(r.flags.iter().any(|f| f.contains("degenerate")));
    let spec = ProtocolSpec::new(qubit(), ProtocolKind::TwoTemperature, 0.5, 10.0)
        .with_cold(0.5)
        .with_grid(101, 1);
    let r = run_two_temperature(&spec).unwrap();
    assert!(r.heating.kinematics.degenerate_path && r.cooling.kinematics.degenerate_path);
    assert_eq!(r.summary.heating_dominates, None);
}

#[test]
fn protocol_preconditions() {
    let spec = ProtocolSpec::new(qubit(), ProtocolKind::TwoTemperature, 1.0, 10.0).with_cold(2.0);
    assert!(matches!(run_two_temperature(&spec), Err(Error::Domain(_))));
    let spec = ProtocolSpec::new(qubit(), ProtocolKind::ThreeTemperatureForward, 1.0, 10.0);
    assert!(matches!(run_three_temperature(&spec), Err(Error::Domain(_))));
    let spec = spec.with_cold(0.5).with_warm(1.5);
    assert!(matches!(run_three_temperature(&spec), Err(Error::Domain(_))));
}

#[test]
fn qubit_overlap_is_symmetric_under_exchange() {
    let fam = qubit();
    let (tc, th) = (0.3, 1.5);
    let xi = |bath: f64, init: f64| -> f64 {
        let m = fam.model(bath).unwrap();
        let d = spectral_decompose_populations(m.space(), &to_superoperator(&m)).unwrap();
        overlaps(&d, &fam.thermal(init).unwrap()).unwrap()[1].norm()
    };
    let (a, b) = (xi(th, tc), xi(tc, th));
    assert!((a - b).abs() < 1e-12, "{a} {b}");
    let q = QubitRelaxation::new(1.0, 0.1, 1.0 / tc, 1.0 / th).unwrap();
    assert!((a - q.xi().abs()).abs() < 1e-12);
}

#[test]
fn qubit_linear_response_fit() {
    let tw = 0.5;
    let deltas: Vec<f64> = (1..=5).map(|k| 0.005 * k as f64).collect();
    let lr = linear_response_sweep(&qubit(), tw, &deltas).unwrap();
    let exact = qubit_linear_response_coefficient(1.0, tw);
    assert!((lr.coefficient - exact).abs() < 0.01 * exact, "{} {exact}", lr.coefficient);
    assert!((lr.thermal_coefficient - exact).abs() < 1e-12 * exact);
    // cubic term: the colder side departs faster for the qubit at this T
    assert!(lr.rows.iter().all(|r| r.heating > 0.0 && r.cooling > 0.0));
    assert!(matches!(
        linear_response_sweep(&qubit(), tw, &[0.2]),
        Err(Error::Domain(_))
    ));
    assert!(matches!(linear_response_sweep(&qubit(), tw, &[]), Err(Error::FitFailure(_))));
    assert!(matches!(linear_response_sweep(&qubit(), tw, &[0.0]), Err(Error::Domain(_))));
}

#[test]
fn qubit_spectrum_report() {
    let fam = qubit();
    let r = spectrum_report(&fam, 1.5, 0.3, false).unwrap();
    for (s, t) in [(&r.hot, 1.5), (&r.cold, 0.3)] {
        assert_eq!(s.eigenvalues.len(), 2);
        let g = QubitRelaxation::new(1.0, 0.1, 1.0, 1.0 / t).unwrap().rate();
        assert!(s.eigenvalues[0].norm() < 1e-10);
        assert!((s.eigenvalues[1] - C64::new(-g, 0.0)).norm() < 1e-10);
        assert_eq!(s.zero_modes, 1);
        assert_eq!(s.slow_modes, 1);
        assert!((s.weighted_rate - g).abs() < 1e-10);
    }
    assert!(r.hot.gap > r.cold.gap);
    let full = spectrum_report(&fam, 1.5, 0.3, true).unwrap();
    assert_eq!(full.hot.eigenvalues.len(), 4);
    assert!(full.hot.conjugate_defect < 1e-12);
}

#[test]
fn ho_spectrum_spreads_with_temperature() {
    let fam = ModelFamily::oscillator(40, 1.0, 0.1).with_tail_tol(1e-2);
    let th = temperature_from_occupation(1.0, 3.0).unwrap();
    let tc = temperature_from_occupation(1.0, 1.0).unwrap();
    let r = spectrum_report(&fam, th, tc, true).unwrap();
    assert!(r.hot.min_re < r.cold.min_re);
    let pops = spectrum_report(&fam, th, tc, false).unwrap();
    assert_eq!(pops.hot.eigenvalues.len(), 40);
    // thermal states only touch the population sector
    for (a, b) in [(&r.hot, &pops.hot), (&r.cold, &pops.cold)] {
        let (ma, mb): (f64, f64) = (a.abs_overlaps.iter().sum(), b.abs_overlaps.iter().sum());
        assert!((ma - mb).abs() < 1e-9 * ma, "{ma} {mb}");
    }
    for s in [&r.hot, &r.cold] {
        assert_eq!(s.zero_modes, 1);
        assert!(s.max_re <= 1e-10);
        assert!(s.conjugate_defect <= 1e-10, "{}", s.conjugate_defect);
        // single coherences decay at gamma / 2; truncation shifts it slightly
        assert!((s.gap - 0.05).abs() < 1e-3, "{}", s.gap);
    }
    assert!(matches!(
        spectrum_report(&ModelFamily::oscillator(201, 1.0, 0.1), th, tc, false),
        Err(Error::ResourceLimit(_))
    ));
}
