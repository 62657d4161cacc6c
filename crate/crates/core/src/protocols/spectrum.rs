//! Liouvillian spectra for a hot and a cold bath, with overlaps of the
//! opposite thermal state on each mode.

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::liouvillian::{overlaps, spectral_decompose, spectral_decompose_populations, to_superoperator};

use super::family::ModelFamily;

pub const MAX_SPECTRUM_DIM: usize = 200;
/// Modes with |Re lambda| <= SLOW_WINDOW * gap count as slow.
pub const SLOW_WINDOW: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct SpectrumSide {
    /// "hot" or "cold"
    pub label: &'static str,
    pub bath_temperature: f64,
    pub initial_temperature: f64,
    /// Sorted; index 0 is the stationary mode.
    pub eigenvalues: Vec<C64>,
    pub abs_overlaps: Vec<f64>,
    pub gap: f64,
    /// Modes k >= 1 inside the slow window.
    pub slow_modes: usize,
    /// sum |xi_k| over the slow modes
    pub slow_overlap_mass: f64,
    /// sum |xi_k| |Re lambda_k| / sum |xi_k| over k >= 1
    pub weighted_rate: f64,
    pub min_re: f64,
    /// Eigenvalues with |lambda| below the zero-mode tolerance.
    pub zero_modes: usize,
    pub max_re: f64,
    /// max over k of the distance from conj(lambda_k) to the nearest eigenvalue
    pub conjugate_defect: f64,
    pub biorthonormality_defect: f64,
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    pub family: ModelFamily,
    /// Whether every invariant block was decomposed (else the population sector only).
    pub full: bool,
    /// Bath at T_H; initial state thermal at T_C (heating).
    pub hot: SpectrumSide,
    /// Bath at T_C; initial state thermal at T_H (cooling).
    pub cold: SpectrumSide,
}

fn conjugate_defect(ev: &[C64]) -> f64 {
    // sorted by real part, so the partner lies within a short window; a plain
    // quadratic scan is still cheap at these sizes
    let mut order: Vec<usize> = (0..ev.len()).collect();
    order.sort_by(|&a, &b| ev[a].re.total_cmp(&ev[b].re));
    let mut worst: f64 = 0.0;
    for (pos, &k) in order.iter().enumerate() {
        let target = ev[k].conj();
        let mut best = f64::INFINITY;
        for dir in [-1isize, 1] {
            let mut p = pos as isize;
            while p >= 0 && (p as usize) < order.len() {
                let z = ev[order[p as usize]];
                if (z.re - target.re).abs() > best {
                    break;
                }
                best = best.min((z - target).norm());
                p += dir;
            }
        }
        worst = worst.max(best);
    }
    worst
}

fn side(
    family: &ModelFamily,
    label: &'static str,
    bath: f64,
    initial: f64,
    full: bool,
) -> Result<SpectrumSide> {
    let model = family.model(bath)?;
    let space = *model.space();
    let superop = to_superoperator(&model);
    let decomp = if full {
        spectral_decompose(&space, &superop)?
    } else {
        spectral_decompose_populations(&space, &superop)?
    };
    let xi = overlaps(&decomp, &family.thermal(initial)?)?;
    let ev = decomp.eigenvalues().to_vec();
    let abs_overlaps: Vec<f64> = xi.iter().map(|z| z.norm()).collect();
    let gap = decomp.gap();
    let mut slow_modes = 0;
    let mut slow_overlap_mass = 0.0;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 1..ev.len() {
        let r = ev[k].re.abs();
        if r <= SLOW_WINDOW * gap {
            slow_modes += 1;
            slow_overlap_mass += abs_overlaps[k];
        }
        num += abs_overlaps[k] * r;
        den += abs_overlaps[k];
    }
    let zero_tol = 1e-10 * superop.max_abs().max(1.0);
    Ok(SpectrumSide {
        label,
        bath_temperature: bath,
        initial_temperature: initial,
        gap,
        slow_modes,
        slow_overlap_mass,
        weighted_rate: if den > 0.0 { num / den } else { 0.0 },
        min_re: ev.iter().map(|z| z.re).fold(f64::INFINITY, f64::min),
        max_re: ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
        zero_modes: ev.iter().filter(|z| z.norm() < zero_tol).count(),
        conjugate_defect: conjugate_defect(&ev),
        biorthonormality_defect: decomp.biorthonormality_defect(),
        eigenvalues: ev,
        abs_overlaps,
    })
}

/// Spectra at T_H and T_C. With `full = false` only the invariant blocks
/// holding populations are decomposed; thermal initial states have no weight
/// elsewhere, so overlaps and slow-mode statistics are unchanged.
pub fn spectrum_report(family: &ModelFamily, t_hot: f64, t_cold: f64, full: bool) -> Result<SpectrumReport> {
    if family.dim() > MAX_SPECTRUM_DIM {
        return Err(Error::ResourceLimit(format!(
            "spectrum report limited to dim <= {MAX_SPECTRUM_DIM}, got {}",
            family.dim()
        )));
    }
    if !(t_cold > 0.0 && t_hot > t_cold) {
        return Err(Error::Domain(format!("need 0 < T_C < T_H, got {t_cold}, {t_hot}")));
    }
    let (hot, cold) = rayon::join(
        || side(family, "hot", t_hot, t_cold, full),
        || side(family, "cold", t_cold, t_hot, full),
    );
    Ok(SpectrumReport {
        family: *family,
        full,
        hot: hot?,
        cold: cold?,
    })
}
