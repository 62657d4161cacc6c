//! Temperatures at equal fidelity from a common reference.

use crate::error::{Error, Result};
use crate::metrics::fidelity;
use crate::quantum::DensityMatrix;

use super::family::ModelFamily;

pub const DEFAULT_EQUIDIST_TOL: f64 = 1e-10;
/// Lower end of the cold bracket as a fraction of the warm temperature.
pub const COLD_BRACKET_FRACTION: f64 = 1e-3;
const MONOTONE_SAMPLES: usize = 33;
const MONOTONE_SLACK: f64 = 1e-12;

/// A cold/warm/hot triple with the two fidelities to the warm state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Equidistance {
    pub t_cold: f64,
    pub t_warm: f64,
    pub t_hot: f64,
    /// F(rho_C, rho_W)
    pub f_cold: f64,
    /// F(rho_H, rho_W)
    pub f_hot: f64,
}

impl Equidistance {
    pub fn residual(&self) -> f64 {
        (self.f_cold - self.f_hot).abs()
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(Error::Domain(format!("equidistance tolerance must be in (0, 1e-2), got {tol}")));
    }
    Ok(())
}

fn log_space(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
}

/// Bisection in log T for a sign change of `g` with g(lo) > 0 > g(hi).
/// Returns the endpoint with the smaller |g|.
fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let (mut glo, mut ghi) = (g(lo)?, g(hi)?);
    for _ in 0..200 {
        if hi / lo - 1.0 < 4.0 * f64::EPSILON {
            break;
        }
        let mid = (lo * hi).sqrt();
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok((mid, 0.0));
        }
        if gm > 0.0 {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
            ghi = gm;
        }
    }
    Ok(if glo.abs() <= ghi.abs() { (lo, glo) } else { (hi, ghi) })
}

/// Monotone (within slack) in the given direction.
fn is_monotone(values: &[f64], increasing: bool) -> bool {
    values.windows(2).all(|w| {
        if increasing {
            w[1] >= w[0] - MONOTONE_SLACK
        } else {
            w[1] <= w[0] + MONOTONE_SLACK
        }
    })
}

/// Cold temperature with F(rho_C, rho_W) = F(rho_H, rho_W), searched in
/// [1e-3 T_W, T_W]. T_H = T_W returns T_C = T_W.
pub fn solve_equidistant_cold(family: &ModelFamily, t_warm: f64, t_hot: f64, tol: f64) -> Result<Equidistance> {
    check_tol(tol)?;
    if !(t_warm > 0.0 && t_hot.is_finite() && t_hot >= t_warm) {
        return Err(Error::Domain(format!("need 0 < T_W <= T_H, got T_W = {t_warm}, T_H = {t_hot}")));
    }
    let rho_w = family.thermal(t_warm)?;
    if t_hot == t_warm {
        return Ok(Equidistance {
            t_cold: t_warm,
            t_warm,
            t_hot,
            f_cold: 1.0,
            f_hot: 1.0,
        });
    }
    let f_hot = fidelity(&family.thermal(t_hot)?, &rho_w)?;
    let f_of = |t: f64| -> Result<f64> { fidelity(&family.thermal(t)?, &rho_w) };
    let lo = COLD_BRACKET_FRACTION * t_warm;

    let samples = log_space(lo, t_warm, MONOTONE_SAMPLES)
        .map(&f_of)
        .collect::<Result<Vec<_>>>()?;
    if !is_monotone(&samples, true) {
        return Err(Error::NoEquidistantState(format!(
            "F(rho_T, rho_W) is not monotone in T on [{lo:.6e}, {t_warm:.6e}]"
        )));
    }
    let f_lo = samples[0];
    if f_lo > f_hot {
        return Err(Error::NoEquidistantState(format!(
            "target F = {f_hot:.12e}; F(T = {lo:.6e}) = {f_lo:.12e}, F(T_W) = 1"
        )));
    }
    let (t_cold, r) = bisect(lo, t_warm, |t| Ok(f_hot - f_of(t)?))?;
    if r.abs() > tol {
        return Err(Error::NoEquidistantState(format!(
            "bisection stalled with residual {:.3e} > {tol:.1e}",
            r.abs()
        )));
    }
    Ok(Equidistance {
        t_cold,
        t_warm,
        t_hot,
        f_cold: f_hot - r,
        f_hot,
    })
}

/// Warm temperature in (T_C, T_H) equidistant from both.
pub fn solve_equidistant_warm(family: &ModelFamily, t_cold: f64, t_hot: f64, tol: f64) -> Result<Equidistance> {
    check_tol(tol)?;
    if !(t_cold > 0.0 && t_hot.is_finite() && t_hot >= t_cold) {
        return Err(Error::Domain(format!("need 0 < T_C <= T_H, got T_C = {t_cold}, T_H = {t_hot}")));
    }
    if t_hot == t_cold {
        return Ok(Equidistance {
            t_cold,
            t_warm: t_cold,
            t_hot,
            f_cold: 1.0,
            f_hot: 1.0,
        });
    }
    let rho_c = family.thermal(t_cold)?;
    let rho_h = family.thermal(t_hot)?;
    let g_of = |t: f64| -> Result<f64> {
        let w = family.thermal(t)?;
        Ok(fidelity(&rho_c, &w)? - fidelity(&rho_h, &w)?)
    };
    let samples = log_space(t_cold, t_hot, MONOTONE_SAMPLES)
        .map(&g_of)
        .collect::<Result<Vec<_>>>()?;
    if !is_monotone(&samples, false) {
        return Err(Error::NoEquidistantState(format!(
            "F(rho_C, rho_W) - F(rho_H, rho_W) is not monotone in T_W on [{t_cold:.6e}, {t_hot:.6e}]"
        )));
    }
    let (t_warm, r) = bisect(t_cold, t_hot, &g_of)?;
    if r.abs() > tol {
        return Err(Error::NoEquidistantState(format!(
            "bisection stalled with residual {:.3e} > {tol:.1e}",
            r.abs()
        )));
    }
    let w = family.thermal(t_warm)?;
    Ok(Equidistance {
        t_cold,
        t_warm,
        t_hot,
        f_cold: fidelity(&rho_c, &w)?,
        f_hot: fidelity(&rho_h, &w)?,
    })
}

/// Fidelities of a given triple (no solving).
pub fn equidistance_of(family: &ModelFamily, t_cold: f64, t_warm: f64, t_hot: f64) -> Result<Equidistance> {
    let w: DensityMatrix = family.thermal(t_warm)?;
    Ok(Equidistance {
        t_cold,
        t_warm,
        t_hot,
        f_cold: fidelity(&family.thermal(t_cold)?, &w)?,
        f_hot: fidelity(&family.thermal(t_hot)?, &w)?,
    })
}
