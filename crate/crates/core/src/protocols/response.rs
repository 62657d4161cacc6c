//! Infidelity of nearby thermal states and its quadratic coefficient.

use crate::error::{Error, Result};
use crate::metrics::bures_distance;

use super::family::ModelFamily;

/// Largest |dT| / T_W accepted by the sweep.
pub const MAX_RELATIVE_OFFSET: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearResponseRow {
    pub delta: f64,
    /// 1 - F(rho(T_W - |d|), rho(T_W))
    pub heating: f64,
    /// 1 - F(rho(T_W + |d|), rho(T_W))
    pub cooling: f64,
}

#[derive(Clone, Debug)]
pub struct LinearResponse {
    pub t_warm: f64,
    pub rows: Vec<LinearResponseRow>,
    /// Least-squares c in 1 - F = c dT^2 over both columns.
    pub coefficient: f64,
    pub heating_coefficient: f64,
    pub cooling_coefficient: f64,
    /// Var(E) / (8 T^4) of the thermal populations.
    pub thermal_coefficient: f64,
}

/// c minimizing sum (y - c x^2)^2.
fn fit_quadratic(points: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in points {
        let x2 = x * x;
        num += x2 * y;
        den += x2 * x2;
    }
    if !(den > 0.0) || !num.is_finite() {
        return Err(Error::FitFailure("need at least one nonzero offset".into()));
    }
    Ok(num / den)
}

/// 1 - F from the Bures distance, which stays accurate when F is close to 1.
fn infidelity(family: &ModelFamily, t: f64, t_ref: f64) -> Result<f64> {
    let d = bures_distance(&family.thermal(t)?, &family.thermal(t_ref)?)?;
    Ok(0.5 * d * d)
}

/// Second-order coefficient of 1 - F(rho(T), rho(T + dT)) for commuting
/// thermal states: Var(E) / (8 T^4) with E_n = n omega.
pub fn thermal_response_coefficient(family: &ModelFamily, temperature: f64) -> Result<f64> {
    let p = family.thermal(temperature)?.populations();
    let w = family.omega();
    let mean: f64 = p.iter().enumerate().map(|(n, q)| n as f64 * w * q).sum();
    let var: f64 = p
        .iter()
        .enumerate()
        .map(|(n, q)| (n as f64 * w - mean).powi(2) * q)
        .sum();
    Ok(var / (8.0 * temperature.powi(4)))
}

pub fn linear_response_sweep(family: &ModelFamily, t_warm: f64, deltas: &[f64]) -> Result<LinearResponse> {
    if !(t_warm > 0.0 && t_warm.is_finite()) {
        return Err(Error::Domain(format!("T_W must be positive, got {t_warm}")));
    }
    if deltas.is_empty() {
        return Err(Error::FitFailure("empty offset list".into()));
    }
    let mut rows = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let a = d.abs();
        if !(a > 0.0 && a <= MAX_RELATIVE_OFFSET * t_warm) {
            return Err(Error::Domain(format!(
                "offset {d} outside 0 < |dT| <= {MAX_RELATIVE_OFFSET} T_W"
            )));
        }
        rows.push(LinearResponseRow {
            delta: a,
            heating: infidelity(family, t_warm - a, t_warm)?,
            cooling: infidelity(family, t_warm + a, t_warm)?,
        });
    }
    let heating_coefficient = fit_quadratic(rows.iter().map(|r| (r.delta, r.heating)))?;
    let cooling_coefficient = fit_quadratic(rows.iter().map(|r| (r.delta, r.cooling)))?;
    let coefficient = fit_quadratic(
        rows.iter()
            .flat_map(|r| [(r.delta, r.heating), (r.delta, r.cooling)]),
    )?;
    Ok(LinearResponse {
        t_warm,
        rows,
        coefficient,
        heating_coefficient,
        cooling_coefficient,
        thermal_coefficient: thermal_response_coefficient(family, t_warm)?,
    })
}
