//! Time evolution on an output grid.
//!
//! The default integrator is the Dormand-Prince 5(4) pair with its
//! fifth-order-consistent continuous extension, so output times never limit
//! the step size. Stiff generators go through the block-wise rational
//! exponential in `expo`.

use ndarray::{Array2, ArrayView2, Zip};

use super::expo;
use super::GKSLModel;
use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::quantum::DensityMatrix;

/// Largest pre-repair deviation from Hermiticity or unit trace at an output.
pub const REPAIR_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Adaptive explicit Runge-Kutta (Dormand-Prince 5(4)).
    RungeKutta,
    /// L-stable rational approximation of the exponential on invariant blocks.
    Exponential,
    /// Runge-Kutta unless the stiffness estimate says otherwise.
    Auto,
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    pub method: Method,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            method: Method::RungeKutta,
            max_steps: 200_000,
        }
    }
}

impl EvolveOptions {
    pub fn tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

#[derive(Clone, Debug, Default)]
pub struct IntegratorDiagnostics {
    pub method: String,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub generator_calls: usize,
    /// Largest Hermiticity or trace defect removed at an output point.
    pub max_repair: f64,
    /// Substep used by the exponential propagator.
    pub substep: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub diagnostics: IntegratorDiagnostics,
    /// Metadata of the generating model.
    pub model_label: String,
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Domain("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("non-finite time".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `points` equally spaced times on [0, t_fin].
pub fn uniform_grid(t_fin: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_fin > 0.0) || points < 2 {
        return Err(Error::Domain(format!("grid needs t_fin > 0 and >= 2 points, got {t_fin}, {points}")));
    }
    let n = (points - 1) as f64;
    Ok((0..points).map(|k| if k == points - 1 { t_fin } else { t_fin * k as f64 / n }).collect())
}

/// `points` times on [0, t_fin] in `chunks` runs of equal length whose
/// spacing doubles from one run to the next. Early transients get fine
/// spacing, and since every spacing is a power-of-two multiple of the first,
/// the exponential propagator reuses its factorizations across runs.
pub fn graded_grid(t_fin: f64, points: usize, chunks: usize) -> Result<Vec<f64>> {
    if !(t_fin > 0.0) || chunks == 0 || points < chunks + 1 || chunks > 30 {
        return Err(Error::Domain(format!(
            "graded grid needs t_fin > 0 and at least {} points for {chunks} runs",
            chunks + 1
        )));
    }
    let n = points - 1;
    let per = n / chunks;
    let sizes: Vec<usize> = (0..chunks).map(|j| if j == chunks - 1 { n - per * (chunks - 1) } else { per }).collect();
    let units: u64 = sizes.iter().enumerate().map(|(j, &m)| (m as u64) << j).sum();
    let dt0 = t_fin / units as f64;
    let mut times = Vec::with_capacity(points);
    let mut u: u64 = 0;
    times.push(0.0);
    for (j, &m) in sizes.iter().enumerate() {
        for _ in 0..m {
            u += 1 << j;
            times.push(dt0 * u as f64);
        }
    }
    *times.last_mut().unwrap() = t_fin;
    Ok(times)
}

/// Hermitize and renormalize an integrated state; larger defects than
/// [`REPAIR_TOL`] are an accuracy failure.
pub(crate) fn repair(
    model: &GKSLModel,
    m: &ArrayView2<C64>,
    t: f64,
    diag: &mut IntegratorDiagnostics,
) -> Result<DensityMatrix> {
    let herm = linalg::hermiticity_defect(m);
    let tr = linalg::trace(m);
    let defect = herm.max((tr - C64::new(1.0, 0.0)).norm());
    if !(defect <= REPAIR_TOL) {
        return Err(Error::IntegratorAccuracy(format!(
            "state at t = {t} deviates by {defect:.3e} before repair"
        )));
    }
    diag.max_repair = diag.max_repair.max(defect);
    let mut h = linalg::hermitize(m);
    let tr = linalg::trace(&h.view()).re;
    h.mapv_inplace(|z| z / tr);
    DensityMatrix::new(*model.space(), h)
}

/// Integrate d rho/dt = L rho from `rho0` at `times[0]` and report the state at
/// every grid time. `times` must be strictly increasing.
pub fn evolve(
    model: &GKSLModel,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    check_grid(times)?;
    if rho0.space().dim() != model.dim() {
        return Err(Error::Shape(format!(
            "state dim {} vs model dim {}",
            rho0.space().dim(),
            model.dim()
        )));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::Domain("tolerances must be positive".into()));
    }
    let method = match opts.method {
        Method::Auto => {
            if expo::is_stiff(model, times[times.len() - 1] - times[0]) {
                Method::Exponential
            } else {
                Method::RungeKutta
            }
        }
        m => m,
    };
    let (states, diagnostics) = match method {
        Method::Exponential => expo::propagate(model, rho0, times, opts)?,
        _ => dopri5(model, rho0, times, opts)?,
    };
    let model_label = model
        .metadata()
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";");
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        diagnostics,
        model_label,
    })
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// y + h * sum c_i k_i
fn combo(y: &Array2<C64>, h: f64, terms: &[(f64, &Array2<C64>)]) -> Array2<C64> {
    let mut out = y.clone();
    for &(cf, k) in terms {
        if cf != 0.0 {
            out.scaled_add(C64::new(h * cf, 0.0), k);
        }
    }
    out
}

fn error_norm(y: &Array2<C64>, y1: &Array2<C64>, err: &Array2<C64>, opts: &EvolveOptions) -> f64 {
    let mut acc = 0.0;
    Zip::from(y).and(y1).and(err).for_each(|a, b, e| {
        let sc = opts.atol + opts.rtol * a.norm().max(b.norm());
        acc += (e.norm() / sc).powi(2);
    });
    (acc / y.len() as f64).sqrt()
}

fn dopri5(
    model: &GKSLModel,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<(Vec<DensityMatrix>, IntegratorDiagnostics)> {
    let f = |y: &Array2<C64>| model.generator(&y.view());
    let mut diag = IntegratorDiagnostics {
        method: "dopri5".into(),
        ..Default::default()
    };
    let t_end = times[times.len() - 1];
    let mut t = times[0];
    let mut y = rho0.entries().clone();
    let mut out = vec![rho0.clone()];
    let mut next = 1;
    if times.len() == 1 {
        return Ok((out, diag));
    }
    let mut k1 = f(&y);
    diag.generator_calls += 1;

    // initial step (Hairer, Norsett & Wanner II.4)
    let span = t_end - t;
    let mut h = {
        let sc = |z: &C64| opts.atol + opts.rtol * z.norm();
        let d0 = y.iter().map(|z| (z.norm() / sc(z)).powi(2)).sum::<f64>().sqrt();
        let d1 = Zip::from(&k1)
            .and(&y)
            .fold(0.0, |a, k, z| a + (k.norm() / sc(z)).powi(2))
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(span)
    };
    let h_min = 1e-14 * span.max(t.abs());
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    while next < times.len() {
        if diag.accepted_steps + diag.rejected_steps >= opts.max_steps {
            return Err(Error::Stiffness(format!(
                "{} steps reached at t = {t:.6e} of {t_end:.6e}",
                opts.max_steps
            )));
        }
        if h < h_min {
            return Err(Error::Stiffness(format!("step size {h:.3e} underflow at t = {t:.6e}")));
        }
        let h_step = h.min(t_end - t);
        let k2 = f(&combo(&y, h_step, &[(A21, &k1)]));
        let k3 = f(&combo(&y, h_step, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&combo(&y, h_step, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&combo(&y, h_step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(&combo(
            &y,
            h_step,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y1 = combo(
            &y,
            h_step,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = f(&y1);
        diag.generator_calls += 6;
        let err = combo(
            &Array2::zeros(y.dim()),
            h_step,
            &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
        );
        let en = error_norm(&y, &y1, &err, opts);
        if !en.is_finite() {
            return Err(Error::IntegratorAccuracy(format!("non-finite error estimate at t = {t:.6e}")));
        }
        // PI step control (Lund stabilization)
        let fac11 = en.powf(0.2 - 0.04 * 0.75);
        let mut fac = fac11 / fac_old.powf(0.04);
        fac = (fac / 0.9).clamp(0.1, 5.0);
        let h_new = h_step / fac;
        if en <= 1.0 {
            fac_old = en.max(1e-4);
            let t_new = t + h_step;
            // dense output for grid points in (t, t_new]
            let last_step = t_end - t_new <= 1e-14 * span;
            while next < times.len() && (times[next] <= t_new || last_step) {
                let tn = times[next];
                let ystate = if tn == t_new || (last_step && next == times.len() - 1) {
                    y1.clone()
                } else {
                    let theta = (tn - t) / h_step;
                    let th1 = 1.0 - theta;
                    let ydiff = &y1 - &y;
                    let bspl = combo(&Array2::zeros(y.dim()), h_step, &[(1.0, &k1)]) - &ydiff;
                    let r4 = &ydiff - &combo(&Array2::zeros(y.dim()), h_step, &[(1.0, &k7)]) - &bspl;
                    let r5 = combo(
                        &Array2::zeros(y.dim()),
                        h_step,
                        &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)],
                    );
                    let inner = (&r4 + &r5.mapv(|z| z * th1)).mapv(|z| z * theta);
                    let mid = (&bspl + &inner).mapv(|z| z * th1);
                    let outer = (&ydiff + &mid).mapv(|z| z * theta);
                    &y + &outer
                };
                out.push(repair(model, &ystate.view(), tn, &mut diag)?);
                next += 1;
            }
            y = y1;
            k1 = k7;
            t = t_new;
            diag.accepted_steps += 1;
            h = if last_rejected { h_new.min(h_step) } else { h_new };
            last_rejected = false;
        } else {
            diag.rejected_steps += 1;
            last_rejected = true;
            h = h_step / (fac11 / 0.9).min(5.0);
        }
    }
    Ok((out, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::quantum::{HilbertSpec, OperatorMatrix};

    fn decay_model(gamma: f64) -> GKSLModel {
        let space = HilbertSpec::qubit(1.0).unwrap();
        let mut sm = Array2::zeros((2, 2));
        sm[[0, 1]] = c(gamma.sqrt());
        let sm = OperatorMatrix::new(space, sm, "s-").unwrap();
        let mut h = Array2::zeros((2, 2));
        h[[1, 1]] = c(1.0);
        GKSLModel::new(space, OperatorMatrix::new(space, h, "H").unwrap(), vec![sm]).unwrap()
    }

    fn excited_with_coherence() -> DensityMatrix {
        let space = HilbertSpec::qubit(1.0).unwrap();
        let mut m = Array2::zeros((2, 2));
        m[[0, 0]] = c(0.25);
        m[[1, 1]] = c(0.75);
        m[[0, 1]] = C64::new(0.2, 0.1);
        m[[1, 0]] = C64::new(0.2, -0.1);
        DensityMatrix::new(space, m).unwrap()
    }

    /// Closed form for spontaneous decay: p1 e^{-g t}, coherence e^{(i - g/2) t}.
    fn exact(t: f64, g: f64) -> (f64, C64) {
        let p1 = 0.75 * (-g * t).exp();
        let coh = C64::new(0.2, 0.1) * (C64::new(-g / 2.0, 1.0) * t).exp();
        (p1, coh)
    }

    #[test]
    fn dopri5_matches_decay_closed_form_on_dense_grid() {
        let g = 0.3;
        let m = decay_model(g);
        let times: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
        let tr = evolve(&m, &excited_with_coherence(), &times, &EvolveOptions::default()).unwrap();
        let mut worst: f64 = 0.0;
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let (p1, coh) = exact(*t, g);
            worst = worst.max((s.entries()[[1, 1]].re - p1).abs());
            worst = worst.max((s.entries()[[0, 1]] - coh).norm());
        }
        assert!(worst < 1e-8, "worst {worst:e}");
        // grid far denser than the steps: dense output is doing the work
        assert!(tr.diagnostics.accepted_steps < times.len(), "{:?}", tr.diagnostics);
    }

    #[test]
    fn dense_output_is_high_order() {
        // loosen the tolerance so steps are long, then compare interpolated
        // and exact values halfway through steps
        let g = 0.3;
        let m = decay_model(g);
        let times: Vec<f64> = (0..=97).map(|k| k as f64 * 0.1031).collect();
        let loose = EvolveOptions::tolerances(1e-6, 1e-9);
        let tr = evolve(&m, &excited_with_coherence(), &times, &loose).unwrap();
        let worst = tr
            .times
            .iter()
            .zip(&tr.states)
            .map(|(t, s)| (s.entries()[[0, 1]] - exact(*t, g).1).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-5, "worst {worst:e}");
    }

    #[test]
    fn step_budget_raises_stiffness() {
        let m = decay_model(1.0);
        let opts = EvolveOptions {
            max_steps: 3,
            ..EvolveOptions::default()
        };
        let r = evolve(&m, &excited_with_coherence(), &[0.0, 100.0], &opts);
        assert!(matches!(r, Err(Error::Stiffness(_))));
    }

    #[test]
    fn grids() {
        let u = uniform_grid(2.0, 5).unwrap();
        assert_eq!(u, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let g = graded_grid(70.0, 8, 3).unwrap();
        // spacings 10, 10, 20, 20, 40, 40... scaled so the sum is 70
        let d: Vec<f64> = g.windows(2).map(|w| w[1] - w[0]).collect();
        assert_eq!(g.len(), 8);
        assert_eq!(*g.last().unwrap(), 70.0);
        assert!((d[1] - d[0]).abs() < 1e-12 && (d[2] - 2.0 * d[0]).abs() < 1e-12);
        assert!((d[6] - 4.0 * d[0]).abs() < 1e-12);
        assert!(graded_grid(1.0, 3, 4).is_err());
    }

    #[test]
    fn exponential_path_on_graded_grid() {
        let g = 0.3;
        let m = decay_model(g);
        let times = graded_grid(30.0, 61, 4).unwrap();
        let opts = EvolveOptions::tolerances(1e-10, 1e-13).with_method(Method::Exponential);
        let tr = evolve(&m, &excited_with_coherence(), &times, &opts).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let (p1, coh) = exact(*t, g);
            assert!((s.entries()[[1, 1]].re - p1).abs() < 1e-8);
            assert!((s.entries()[[0, 1]] - coh).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn grid_validation() {
        let m = decay_model(1.0);
        let r = evolve(&m, &excited_with_coherence(), &[0.0, 1.0, 1.0], &EvolveOptions::default());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn exponential_path_agrees_with_dopri5() {
        let g = 0.3;
        let m = decay_model(g);
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.5).collect();
        let opts = EvolveOptions::tolerances(1e-10, 1e-13).with_method(Method::Exponential);
        let tr = evolve(&m, &excited_with_coherence(), &times, &opts).unwrap();
        assert!(tr.diagnostics.substep.is_some());
        for (t, s) in tr.times.iter().zip(&tr.states) {
            let (p1, coh) = exact(*t, g);
            assert!((s.entries()[[1, 1]].re - p1).abs() < 1e-8);
            assert!((s.entries()[[0, 1]] - coh).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn auto_picks_exponential_for_stiff_spans() {
        let m = decay_model(2000.0);
        let opts = EvolveOptions::default().with_method(Method::Auto);
        let tr = evolve(&m, &excited_with_coherence(), &[0.0, 50.0, 100.0], &opts).unwrap();
        assert_eq!(tr.diagnostics.method, "pade23-exponential");
        assert!(tr.states[2].entries()[[1, 1]].re.abs() < 1e-12);
    }
}
