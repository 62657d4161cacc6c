//! Heating versus cooling: three-temperature (equidistant) and
//! two-temperature protocols, small-offset response and spectral reports.

mod equidistant;
mod family;
mod response;
mod spectrum;

pub use equidistant::{
    equidistance_of, solve_equidistant_cold, solve_equidistant_warm, Equidistance, COLD_BRACKET_FRACTION,
    DEFAULT_EQUIDIST_TOL,
};
pub use family::ModelFamily;
pub use response::{linear_response_sweep, LinearResponse, LinearResponseRow, MAX_RELATIVE_OFFSET};
pub use spectrum::{spectrum_report, SpectrumReport, SpectrumSide, MAX_SPECTRUM_DIM, SLOW_WINDOW};

use crate::error::{Error, Result};
use crate::liouvillian::{evolve, graded_grid, uniform_grid, EvolveOptions, Trajectory};
use crate::metrics::{kinematics_with_cutoff, KinematicsRecord, SLD_CUTOFF};

/// Fidelity levels whose first-passage times are reported.
pub const THRESHOLDS: [f64; 3] = [0.9, 0.99, 0.999];
/// Completion level whose first-passage time is compared between branches.
pub const COMPLETION_LEVEL: f64 = 0.9;
/// A branch counts as converged when F(t_fin) reaches this.
pub const CONVERGED_FIDELITY: f64 = 0.999;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolKind {
    /// Start at T_C and T_H, both relax in a bath at T_W.
    ThreeTemperatureForward,
    /// Start at T_W, relax in baths at T_H and T_C.
    ThreeTemperatureBackward,
    /// Swap T_C and T_H.
    TwoTemperature,
}

impl ProtocolKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::ThreeTemperatureForward => "forward",
            ProtocolKind::ThreeTemperatureBackward => "backward",
            ProtocolKind::TwoTemperature => "two-temperature",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolSpec {
    pub family: ModelFamily,
    pub kind: ProtocolKind,
    /// Solved from the equidistance condition when `None` (three-temperature).
    pub t_cold: Option<f64>,
    /// Solved from the equidistance condition when `None` (three-temperature).
    pub t_warm: Option<f64>,
    pub t_hot: f64,
    pub t_final: f64,
    pub points: usize,
    /// 1 for a uniform grid; more for runs of doubling spacing.
    pub grid_chunks: usize,
    pub evolve: EvolveOptions,
    pub equidist_tol: f64,
    pub sld_cutoff: f64,
}

impl ProtocolSpec {
    pub fn new(family: ModelFamily, kind: ProtocolKind, t_hot: f64, t_final: f64) -> Self {
        Self {
            family,
            kind,
            t_cold: None,
            t_warm: None,
            t_hot,
            t_final,
            points: 1201,
            grid_chunks: 1,
            evolve: EvolveOptions::default().with_method(family.default_method()),
            equidist_tol: DEFAULT_EQUIDIST_TOL,
            sld_cutoff: SLD_CUTOFF,
        }
    }

    pub fn with_cold(mut self, t: f64) -> Self {
        self.t_cold = Some(t);
        self
    }

    pub fn with_warm(mut self, t: f64) -> Self {
        self.t_warm = Some(t);
        self
    }

    pub fn with_grid(mut self, points: usize, chunks: usize) -> Self {
        self.points = points;
        self.grid_chunks = chunks;
        self
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        match self.grid_chunks {
            0 => Err(Error::Domain("grid needs at least one chunk".into())),
            1 => uniform_grid(self.t_final, self.points),
            c => graded_grid(self.t_final, self.points, c),
        }
    }
}

/// One relaxation run with its kinematics.
#[derive(Clone, Debug)]
pub struct BranchResult {
    /// "heating" or "cooling"
    pub label: &'static str,
    pub initial_temperature: f64,
    pub bath_temperature: f64,
    pub trajectory: Trajectory,
    pub kinematics: KinematicsRecord,
    /// (level, first time with F >= level), linearly interpolated.
    pub threshold_times: Vec<(f64, Option<f64>)>,
    pub completion_time: Option<f64>,
    pub converged: bool,
    pub fidelity_monotone: bool,
}

/// Comparison of the heating and cooling branches on a shared grid.
#[derive(Clone, Debug, Default)]
pub struct AsymmetrySummary {
    pub heating_completion_time: Option<f64>,
    pub cooling_completion_time: Option<f64>,
    /// max over samples of phi_heat - phi_cool
    pub max_completion_gap: Option<f64>,
    /// min over interior samples of phi_heat - phi_cool
    pub min_interior_completion_gap: Option<f64>,
    /// Heating completion strictly ahead at every interior sample.
    pub heating_dominates: Option<bool>,
    /// First time where v_heat - v_cool changes sign.
    pub velocity_crossing: Option<f64>,
    /// sup |F_heat - F_cool|
    pub max_fidelity_gap: f64,
    /// The same divided by 1 - min(F_heat(0), F_cool(0)).
    pub relative_fidelity_gap: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ProtocolResult {
    pub kind: ProtocolKind,
    pub family: ModelFamily,
    pub t_cold: f64,
    pub t_warm: Option<f64>,
    pub t_hot: f64,
    pub equidistance: Option<Equidistance>,
    pub heating: BranchResult,
    pub cooling: BranchResult,
    pub summary: AsymmetrySummary,
    pub flags: Vec<String>,
}

/// First time `values` reaches `level`, interpolated between samples.
pub fn first_crossing(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    let k = values.iter().position(|&v| v >= level)?;
    if k == 0 {
        return Some(times[0]);
    }
    let (v0, v1) = (values[k - 1], values[k]);
    let w = (level - v0) / (v1 - v0);
    Some(times[k - 1] + w * (times[k] - times[k - 1]))
}

fn run_branch(
    spec: &ProtocolSpec,
    label: &'static str,
    initial: f64,
    bath: f64,
    times: &[f64],
) -> Result<BranchResult> {
    let model = spec.family.model(bath)?;
    let rho0 = spec.family.thermal(initial)?;
    let target = spec.family.thermal(bath)?;
    let trajectory = evolve(&model, &rho0, times, &spec.evolve)?;
    let kinematics = kinematics_with_cutoff(&trajectory, &model, &target, spec.t_final, spec.sld_cutoff)?;
    let threshold_times = THRESHOLDS
        .iter()
        .map(|&f| (f, first_crossing(&kinematics.times, &kinematics.fidelity, f)))
        .collect();
    let completion_time = kinematics
        .completion
        .as_ref()
        .and_then(|c| first_crossing(&kinematics.times, c, COMPLETION_LEVEL));
    let converged = kinematics.fidelity.last().is_some_and(|&f| f >= CONVERGED_FIDELITY);
    let fidelity_monotone = kinematics.fidelity.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    Ok(BranchResult {
        label,
        initial_temperature: initial,
        bath_temperature: bath,
        trajectory,
        kinematics,
        threshold_times,
        completion_time,
        converged,
        fidelity_monotone,
    })
}

fn summarize(heat: &BranchResult, cool: &BranchResult) -> AsymmetrySummary {
    let (kh, kc) = (&heat.kinematics, &cool.kinematics);
    let n = kh.times.len().min(kc.times.len());
    let mut s = AsymmetrySummary {
        heating_completion_time: heat.completion_time,
        cooling_completion_time: cool.completion_time,
        ..Default::default()
    };
    if let (Some(ch), Some(cc)) = (&kh.completion, &kc.completion) {
        let gaps: Vec<f64> = (0..n).map(|k| ch[k] - cc[k]).collect();
        s.max_completion_gap = gaps.iter().copied().reduce(f64::max);
        // interior: both paths strictly between start and end
        let interior: Vec<f64> = (1..n)
            .filter(|&k| ch[k] < 1.0 && cc[k] < 1.0)
            .map(|k| gaps[k])
            .collect();
        s.min_interior_completion_gap = interior.iter().copied().reduce(f64::min);
        s.heating_dominates = s.min_interior_completion_gap.map(|g| g > 0.0);
    }
    let dv: Vec<f64> = (0..n).map(|k| kh.velocity[k] - kc.velocity[k]).collect();
    s.velocity_crossing = (1..n)
        .find(|&k| dv[k - 1] != 0.0 && dv[k - 1].signum() != dv[k].signum())
        .map(|k| {
            let w = dv[k - 1] / (dv[k - 1] - dv[k]);
            kh.times[k - 1] + w * (kh.times[k] - kh.times[k - 1])
        });
    s.max_fidelity_gap = (0..n)
        .map(|k| (kh.fidelity[k] - kc.fidelity[k]).abs())
        .fold(0.0, f64::max);
    let scale = 1.0 - kh.fidelity[0].min(kc.fidelity[0]);
    if scale > 0.0 {
        s.relative_fidelity_gap = Some(s.max_fidelity_gap / scale);
    }
    s
}

fn collect_flags(spec: &ProtocolSpec, baths: [f64; 2], branches: [&BranchResult; 2]) -> Vec<String> {
    let mut flags = Vec::new();
    for t in baths {
        for f in spec.family.flags(t) {
            if !flags.contains(&f) {
                flags.push(f);
            }
        }
    }
    for b in branches {
        if !b.converged {
            flags.push(format!(
                "{} branch not converged: F(t_fin) = {:.6}",
                b.label,
                b.kinematics.fidelity.last().copied().unwrap_or(f64::NAN)
            ));
        }
        if b.kinematics.degenerate_path {
            flags.push(format!("{} branch has a degenerate path", b.label));
        }
    }
    flags
}

fn run_pair(spec: &ProtocolSpec, heat: (f64, f64), cool: (f64, f64)) -> Result<(BranchResult, BranchResult)> {
    let times = spec.times()?;
    let (h, c) = rayon::join(
        || run_branch(spec, "heating", heat.0, heat.1, &times),
        || run_branch(spec, "cooling", cool.0, cool.1, &times),
    );
    Ok((h?, c?))
}

fn check_common(spec: &ProtocolSpec) -> Result<()> {
    if !(spec.t_final > 0.0 && spec.t_final.is_finite()) {
        return Err(Error::Domain(format!("t_final must be positive, got {}", spec.t_final)));
    }
    if !(spec.t_hot > 0.0 && spec.t_hot.is_finite()) {
        return Err(Error::Domain(format!("T_H must be positive, got {}", spec.t_hot)));
    }
    Ok(())
}

/// Forward: rho(T_C) and rho(T_H) relax in a bath at T_W. Backward: rho(T_W)
/// relaxes in baths at T_H and T_C. Missing T_C or T_W is solved from the
/// equidistance condition; if both are given the residual is only reported.
pub fn run_three_temperature(spec: &ProtocolSpec) -> Result<ProtocolResult> {
    check_common(spec)?;
    let eq = match (spec.t_cold, spec.t_warm) {
        (None, Some(w)) => solve_equidistant_cold(&spec.family, w, spec.t_hot, spec.equidist_tol)?,
        (Some(c), None) => solve_equidistant_warm(&spec.family, c, spec.t_hot, spec.equidist_tol)?,
        (Some(c), Some(w)) => {
            if !(c < w && w < spec.t_hot) {
                return Err(Error::Domain(format!("need T_C < T_W < T_H, got {c}, {w}, {}", spec.t_hot)));
            }
            equidistance_of(&spec.family, c, w, spec.t_hot)?
        }
        (None, None) => return Err(Error::Domain("three-temperature protocol needs T_C or T_W".into())),
    };
    let (tc, tw, th) = (eq.t_cold, eq.t_warm, eq.t_hot);
    let ((heat, cool), baths) = match spec.kind {
        ProtocolKind::ThreeTemperatureForward => (run_pair(spec, (tc, tw), (th, tw))?, [tw, tw]),
        ProtocolKind::ThreeTemperatureBackward => (run_pair(spec, (tw, th), (tw, tc))?, [th, tc]),
        ProtocolKind::TwoTemperature => {
            return Err(Error::Domain("use run_two_temperature for the two-temperature protocol".into()))
        }
    };
    let mut flags = collect_flags(spec, baths, [&heat, &cool]);
    if eq.residual() > spec.equidist_tol {
        flags.push(format!("equidistance residual {:.3e}", eq.residual()));
    }
    let summary = summarize(&heat, &cool);
    Ok(ProtocolResult {
        kind: spec.kind,
        family: spec.family,
        t_cold: tc,
        t_warm: Some(tw),
        t_hot: th,
        equidistance: Some(eq),
        heating: heat,
        cooling: cool,
        summary,
        flags,
    })
}

/// rho(T_C) heats in a bath at T_H while rho(T_H) cools in a bath at T_C.
pub fn run_two_temperature(spec: &ProtocolSpec) -> Result<ProtocolResult> {
    check_common(spec)?;
    let tc = spec
        .t_cold
        .ok_or_else(|| Error::Domain("two-temperature protocol needs T_C".into()))?;
    // T_C = T_H is allowed: both paths are stationary and flagged degenerate
    if !(tc > 0.0 && tc <= spec.t_hot) {
        return Err(Error::Domain(format!("need 0 < T_C <= T_H, got {tc}, {}", spec.t_hot)));
    }
    let th = spec.t_hot;
    let (heat, cool) = run_pair(spec, (tc, th), (th, tc))?;
    let flags = collect_flags(spec, [th, tc], [&heat, &cool]);
    let summary = summarize(&heat, &cool);
    Ok(ProtocolResult {
        kind: ProtocolKind::TwoTemperature,
        family: spec.family,
        t_cold: tc,
        t_warm: None,
        t_hot: th,
        equidistance: None,
        heating: heat,
        cooling: cool,
        summary,
        flags,
    })
}

/// Dispatch on `spec.kind`.
pub fn run_protocol(spec: &ProtocolSpec) -> Result<ProtocolResult> {
    match spec.kind {
        ProtocolKind::TwoTemperature => run_two_temperature(spec),
        _ => run_three_temperature(spec),
    }
}

#[cfg(test)]
mod tests;
