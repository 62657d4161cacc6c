//! Information-geometric measures on states and trajectories: fidelity,
//! Bures distance, quantum Fisher information with respect to time,
//! statistical velocity and length, and degree of completion.

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, dagger, eigh, is_diagonal, sqrt_psd, svd, C64};
use crate::liouvillian::{GKSLModel, Trajectory};
use crate::quantum::DensityMatrix;

/// Eigenvalues of intermediate PSD products may dip this far below zero.
pub const PSD_SLACK: f64 = 1e-10;
/// Default relative cutoff on lambda_i + lambda_j in the SLD.
pub const SLD_CUTOFF: f64 = 1e-12;
/// Relative change of the total length allowed between the full grid and
/// every other node.
pub const QUADRATURE_TOL: f64 = 1e-6;
/// Paths shorter than this are reported as degenerate (no completion).
pub const DEGENERATE_LENGTH: f64 = 1e-12;

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.space().dim() != b.space().dim() {
        return Err(Error::Shape(format!(
            "states of dim {} and {}",
            a.space().dim(),
            b.space().dim()
        )));
    }
    Ok(())
}

fn diagonal_fidelity(p: &ArrayView2<C64>, q: &ArrayView2<C64>) -> f64 {
    p.diag()
        .iter()
        .zip(q.diag())
        .map(|(a, b)| (a.re.max(0.0) * b.re.max(0.0)).sqrt())
        .sum()
}

/// Tr sqrt(s rho s) with s = sqrt(sigma) already computed.
fn fidelity_with_root(root: &Array2<C64>, rho: &ArrayView2<C64>) -> Result<f64> {
    let m = root.dot(rho).dot(root);
    let (w, _) = eigh(&m.view())?;
    let mut f = 0.0;
    for &l in w.iter() {
        if l < -PSD_SLACK {
            return Err(Error::NumericalPsd(l));
        }
        f += l.max(0.0).sqrt();
    }
    Ok(f.clamp(0.0, 1.0))
}

/// Uhlmann fidelity Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)), in [0, 1].
pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    same_dim(rho1, rho2)?;
    let (a, b) = (rho1.entries().view(), rho2.entries().view());
    if is_diagonal(&a) && is_diagonal(&b) {
        return Ok(diagonal_fidelity(&a, &b).clamp(0.0, 1.0));
    }
    let root = sqrt_psd(&a, PSD_SLACK)?;
    fidelity_with_root(&root, &b)
}

/// Bures distance sqrt(2 (1 - F)).
///
/// Evaluated as min_U ||sqrt(rho) - sqrt(sigma) U||_F (the optimal U is the
/// polar factor of sqrt(rho) sqrt(sigma)), or as ||sqrt(p) - sqrt(q)|| for
/// diagonal states. Forming 1 - F directly loses every digit once the states
/// agree to ~1e-8.
pub fn bures_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    same_dim(rho, sigma)?;
    let (a, b) = (rho.entries().view(), sigma.entries().view());
    if is_diagonal(&a) && is_diagonal(&b) {
        let s: f64 = a
            .diag()
            .iter()
            .zip(b.diag())
            .map(|(x, y)| (x.re.max(0.0).sqrt() - y.re.max(0.0).sqrt()).powi(2))
            .sum();
        return Ok(s.sqrt());
    }
    let ra = sqrt_psd(&a, PSD_SLACK)?;
    let rb = sqrt_psd(&b, PSD_SLACK)?;
    // ||ra - rb U||^2 = 2 - 2 Re tr(U ra rb); with ra rb = W S V^dag the
    // maximum is tr S at U = V W^dag
    let (w, _, vt) = svd(&ra.dot(&rb).view())?;
    let u = dagger(&vt.view()).dot(&dagger(&w.view()));
    let diff = &ra - &rb.dot(&u);
    Ok(diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}

fn check_derivative(rho: &DensityMatrix, drho: &ArrayView2<C64>) -> Result<()> {
    let n = rho.space().dim();
    if drho.dim() != (n, n) {
        return Err(Error::Shape(format!("derivative is {:?}, state dim {n}", drho.dim())));
    }
    let scale = linalg::max_abs(drho).max(1.0);
    if linalg::hermiticity_defect(drho) > 1e-10 * scale {
        return Err(Error::Domain("state derivative is not Hermitian".into()));
    }
    if linalg::trace(drho).norm() > 1e-10 * scale {
        return Err(Error::Domain("state derivative is not traceless".into()));
    }
    Ok(())
}

/// Symmetric logarithmic derivative L with drho = (L rho + rho L) / 2,
/// restricted to pairs with lambda_i + lambda_j above `cutoff` times the
/// largest eigenvalue.
pub fn sld(rho: &DensityMatrix, drho: &ArrayView2<C64>, cutoff: f64) -> Result<Array2<C64>> {
    check_derivative(rho, drho)?;
    let (w, u) = eigh(&rho.entries().view())?;
    let floor = cutoff * w.iter().fold(0.0f64, |m, &l| m.max(l));
    let ud = dagger(&u.view());
    let mut d = ud.dot(drho).dot(&u);
    let n = w.len();
    for i in 0..n {
        for j in 0..n {
            let s = w[i] + w[j];
            d[[i, j]] = if s > floor { d[[i, j]] * (2.0 / s) } else { C64::default() };
        }
    }
    Ok(u.dot(&d).dot(&ud))
}

/// Quantum Fisher information Tr(L^2 rho) = sum 2 |<i|drho|j>|^2 / (lambda_i + lambda_j).
pub fn qfi(rho: &DensityMatrix, drho: &ArrayView2<C64>, cutoff: f64) -> Result<f64> {
    check_derivative(rho, drho)?;
    let r = rho.entries().view();
    if is_diagonal(&r) && is_diagonal(drho) {
        let p: Vec<f64> = r.diag().iter().map(|z| z.re).collect();
        let floor = cutoff * p.iter().fold(0.0f64, |m, &l| m.max(l));
        return Ok(p
            .iter()
            .zip(drho.diag())
            .filter(|(&l, _)| 2.0 * l > floor)
            .map(|(&l, d)| d.re * d.re / l)
            .sum());
    }
    let (w, u) = eigh(&r)?;
    let floor = cutoff * w.iter().fold(0.0f64, |m, &l| m.max(l));
    let d = dagger(&u.view()).dot(drho).dot(&u);
    let n = w.len();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = w[i] + w[j];
            if s > floor {
                q += 2.0 * d[[i, j]].norm_sqr() / s;
            }
        }
    }
    Ok(q.max(0.0))
}

#[derive(Clone, Debug)]
pub struct KinematicsRecord {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub qfi: Vec<f64>,
    pub velocity: Vec<f64>,
    /// Cumulative statistical length from the first time.
    pub length: Vec<f64>,
    /// length / total length; `None` when the path has zero length.
    pub completion: Option<Vec<f64>>,
    pub degenerate_path: bool,
    /// Relative change of the total length when every other node is dropped.
    pub quadrature_change: f64,
}

impl KinematicsRecord {
    pub fn total_length(&self) -> f64 {
        self.length.last().copied().unwrap_or(0.0)
    }

    /// First sampled time with completion >= `phi`.
    pub fn time_to_completion(&self, phi: f64) -> Option<f64> {
        let c = self.completion.as_ref()?;
        c.iter().position(|&x| x >= phi).map(|k| self.times[k])
    }

    /// First sampled time with fidelity >= `f`.
    pub fn time_to_fidelity(&self, f: f64) -> Option<f64> {
        self.fidelity.iter().position(|&x| x >= f).map(|k| self.times[k])
    }
}

/// Integral over [a, b] of the quadratic through (x_k, y_k), k = 0..3.
fn quad_segment(x: [f64; 3], y: [f64; 3], a: f64, b: f64) -> f64 {
    let p = |t: f64| {
        let l0 = (t - x[1]) * (t - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
        let l1 = (t - x[0]) * (t - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
        let l2 = (t - x[0]) * (t - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
        y[0] * l0 + y[1] * l1 + y[2] * l2
    };
    // Simpson is exact on quadratics
    (b - a) / 6.0 * (p(a) + 4.0 * p(0.5 * (a + b)) + p(b))
}

/// Cumulative composite Simpson integral on a possibly non-uniform grid.
/// Node pairs are integrated with the quadratic through three nodes; the
/// intermediate node and a trailing single interval use the same quadratic.
pub fn cumulative_simpson(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * (x[1] - x[0]) * (y[0] + y[1]);
        return out;
    }
    let mut i = 0;
    while i + 2 < n {
        let xs = [x[i], x[i + 1], x[i + 2]];
        let ys = [y[i], y[i + 1], y[i + 2]];
        out[i + 1] = out[i] + quad_segment(xs, ys, x[i], x[i + 1]);
        out[i + 2] = out[i] + quad_segment(xs, ys, x[i], x[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        let xs = [x[n - 3], x[n - 2], x[n - 1]];
        let ys = [y[n - 3], y[n - 2], y[n - 1]];
        out[n - 1] = out[n - 2] + quad_segment(xs, ys, x[n - 2], x[n - 1]);
    }
    out
}

fn coarse_total(x: &[f64], y: &[f64]) -> f64 {
    let mut idx: Vec<usize> = (0..x.len()).step_by(2).collect();
    if *idx.last().unwrap() != x.len() - 1 {
        idx.push(x.len() - 1);
    }
    let xs: Vec<f64> = idx.iter().map(|&k| x[k]).collect();
    let ys: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
    *cumulative_simpson(&xs, &ys).last().unwrap()
}

/// Fidelity to a fixed target, with its square root computed once.
struct Target {
    diagonal: bool,
    entries: Array2<C64>,
    root: Option<Array2<C64>>,
}

impl Target {
    fn new(target: &DensityMatrix) -> Result<Self> {
        let entries = target.entries().clone();
        let diagonal = is_diagonal(&entries.view());
        let root = if diagonal {
            None
        } else {
            Some(sqrt_psd(&entries.view(), PSD_SLACK)?)
        };
        Ok(Self {
            diagonal,
            entries,
            root,
        })
    }

    fn fidelity(&self, rho: &ArrayView2<C64>) -> Result<f64> {
        if self.diagonal && is_diagonal(rho) {
            return Ok(diagonal_fidelity(&self.entries.view(), rho).clamp(0.0, 1.0));
        }
        match &self.root {
            Some(r) => fidelity_with_root(r, rho),
            None => fidelity_with_root(&sqrt_psd(&self.entries.view(), PSD_SLACK)?, rho),
        }
    }
}

/// Fidelity to `target`, QFI, velocity, cumulative length and completion
/// along `traj` up to `t_fin`, which must be one of the trajectory times.
/// The state derivative is taken from the generator.
pub fn kinematics(
    traj: &Trajectory,
    model: &GKSLModel,
    target: &DensityMatrix,
    t_fin: f64,
) -> Result<KinematicsRecord> {
    kinematics_with_cutoff(traj, model, target, t_fin, SLD_CUTOFF)
}

pub fn kinematics_with_cutoff(
    traj: &Trajectory,
    model: &GKSLModel,
    target: &DensityMatrix,
    t_fin: f64,
    cutoff: f64,
) -> Result<KinematicsRecord> {
    let t0 = *traj
        .times
        .first()
        .ok_or_else(|| Error::Domain("empty trajectory".into()))?;
    let scale = t_fin.abs().max(1.0);
    let end = traj
        .times
        .iter()
        .position(|&t| (t - t_fin).abs() <= 1e-12 * scale)
        .ok_or_else(|| Error::Domain(format!("t_fin = {t_fin} is not a trajectory time")))?;
    if t_fin < t0 {
        return Err(Error::Domain("t_fin precedes the trajectory start".into()));
    }
    same_dim(&traj.states[0], target)?;
    let tgt = Target::new(target)?;

    let states = &traj.states[..=end];
    let per_point: Vec<(f64, f64)> = states
        .par_iter()
        .map(|rho| -> Result<(f64, f64)> {
            let f = tgt.fidelity(&rho.entries().view())?;
            let mut d = model.generator(&rho.entries().view());
            // clear rounding-level anti-Hermitian parts before the QFI check
            d = linalg::hermitize(&d.view());
            let tr = linalg::trace(&d.view());
            let n = d.nrows();
            for k in 0..n {
                d[[k, k]] -= tr / n as f64;
            }
            Ok((f, qfi(rho, &d.view(), cutoff)?))
        })
        .collect::<Result<_>>()?;

    let times = traj.times[..=end].to_vec();
    let fidelity: Vec<f64> = per_point.iter().map(|p| p.0).collect();
    let qfi_v: Vec<f64> = per_point.iter().map(|p| p.1).collect();
    let velocity: Vec<f64> = qfi_v.iter().map(|q| 0.5 * q.sqrt()).collect();
    let length = cumulative_simpson(&times, &velocity);
    let total = *length.last().unwrap();
    // length is dimensionless; rounding in L[rho_ss] leaves ~1e-17
    let degenerate = !(total > DEGENERATE_LENGTH);
    let mut change = 0.0;
    let completion = if degenerate {
        None
    } else {
        if times.len() >= 5 {
            change = ((coarse_total(&times, &velocity) - total) / total).abs();
            if change > QUADRATURE_TOL {
                return Err(Error::QuadratureAccuracy {
                    change,
                    suggested_points: 2 * times.len() - 1,
                });
            }
        }
        // Simpson weights can be negative on strongly non-uniform grids;
        // the running maximum keeps the cumulative length monotone
        let mut run = 0.0f64;
        Some(
            length
                .iter()
                .map(|&l| {
                    run = run.max(l);
                    (run / total).clamp(0.0, 1.0)
                })
                .collect(),
        )
    };
    let mut length = length;
    let mut run = 0.0f64;
    for l in length.iter_mut() {
        run = run.max(*l);
        *l = run;
    }

    Ok(KinematicsRecord {
        times,
        fidelity,
        qfi: qfi_v,
        velocity,
        length,
        completion,
        degenerate_path: degenerate,
        quadrature_change: change,
    })
}

/// Eigenvalues of `rho` (ascending), exposed for diagnostics.
pub fn spectrum_of(rho: &DensityMatrix) -> Result<Array1<f64>> {
    Ok(eigh(&rho.entries().view())?.0)
}
