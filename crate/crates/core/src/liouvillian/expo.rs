//! Rational exponential propagation for stiff generators.
//!
//! One step applies R(hS) with R the (2,3) Pade approximant of exp, which is
//! L-stable (R(z) -> 0 as z -> -inf) and fifth-order accurate. Written in
//! partial fractions, R(hS) x = sum_j c_j (hS - p_j)^-1 x, so a step costs
//! three banded LU solves. Only invariant blocks the initial state touches are
//! propagated, each with its own step size. Since <I| S = 0, every step
//! preserves the trace exactly.

use super::evolve::{repair, EvolveOptions, IntegratorDiagnostics};
use super::superop::{to_superoperator, Superoperator};
use super::GKSLModel;
use crate::error::{Error, Result};
use crate::linalg::{c, unvec_col, vec_col, C64};
use crate::quantum::DensityMatrix;

/// Estimated explicit steps above which `Method::Auto` switches here.
const STIFF_STEPS: f64 = 20_000.0;

fn pade_p(z: C64) -> C64 {
    c(1.0) + z * 0.4 + z * z / 20.0
}

fn pade_q(z: C64) -> C64 {
    c(1.0) - z * 0.6 + z * z * 0.15 - z * z * z / 60.0
}

fn pade_dq(z: C64) -> C64 {
    c(-0.6) + z * 0.3 - z * z / 20.0
}

/// R(z) = (1 + 2z/5 + z^2/20) / (1 - 3z/5 + 3z^2/20 - z^3/60)
pub fn pade23_rational(z: C64) -> C64 {
    pade_p(z) / pade_q(z)
}

/// Poles p_j and residues c_j with R(z) = sum_j c_j / (z - p_j).
pub fn pade23_poles() -> [(C64, C64); 3] {
    // -60 Q(z) = z^3 - 9z^2 + 36z - 60; one real root, then deflate
    let f = |z: f64| ((z - 9.0) * z + 36.0) * z - 60.0;
    let df = |z: f64| (3.0 * z - 18.0) * z + 36.0;
    let mut r = 4.0;
    for _ in 0..60 {
        let step = f(r) / df(r);
        r -= step;
        if step.abs() < 1e-16 * r.abs() {
            break;
        }
    }
    let b = r - 9.0;
    let cc = 36.0 + r * b;
    let disc = b * b - 4.0 * cc;
    let re = -b / 2.0;
    let im = (-disc).sqrt() / 2.0;
    let poles = [c(r), C64::new(re, im), C64::new(re, -im)];
    poles.map(|p| (p, pade_p(p) / pade_dq(p)))
}

/// Whether an explicit integrator would need more than ~20k steps over `span`.
pub(crate) fn is_stiff(model: &GKSLModel, span: f64) -> bool {
    let radius = to_superoperator(model).gershgorin_radius();
    radius * span / 3.3 > STIFF_STEPS
}

/// LU factors of a banded matrix in LAPACK band storage.
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<C64>,
    ipiv: Vec<i32>,
}

impl BandLu {
    /// Factor h S - p I for a block given by local entries.
    fn factor(entries: &[(usize, usize, C64)], n: usize, kl: usize, ku: usize, h: f64, p: C64) -> Result<Self> {
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![C64::default(); ldab * n];
        let at = |i: usize, j: usize| (kl + ku + i - j) + ldab * j;
        for &(i, j, v) in entries {
            ab[at(i, j)] += v * h;
        }
        for i in 0..n {
            ab[at(i, i)] -= p;
        }
        let mut ipiv = vec![0i32; n];
        let mut info = 0;
        unsafe {
            lapack::zgbtrf(
                n as i32, n as i32, kl as i32, ku as i32, &mut ab, ldab as i32, &mut ipiv, &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Linalg(format!("zgbtrf info {info}")));
        }
        Ok(Self { n, kl, ku, ab, ipiv })
    }

    fn solve(&self, b: &mut [C64]) -> Result<()> {
        let ldab = 2 * self.kl + self.ku + 1;
        let mut info = 0;
        unsafe {
            lapack::zgbtrs(
                b'N',
                self.n as i32,
                self.kl as i32,
                self.ku as i32,
                1,
                &self.ab,
                ldab as i32,
                &self.ipiv,
                b,
                self.n as i32,
                &mut info,
            );
        }
        if info != 0 {
            return Err(Error::Linalg(format!("zgbtrs info {info}")));
        }
        Ok(())
    }
}

struct BlockPropagator {
    indices: Vec<usize>,
    entries: Vec<(usize, usize, C64)>,
    kl: usize,
    ku: usize,
    cache: Vec<(f64, Vec<BandLu>)>,
}

impl BlockPropagator {
    fn new(superop: &Superoperator, indices: Vec<usize>) -> Self {
        let entries = superop.block_entries(&indices);
        let kl = entries.iter().map(|&(i, j, _)| i.saturating_sub(j)).max().unwrap_or(0);
        let ku = entries.iter().map(|&(i, j, _)| j.saturating_sub(i)).max().unwrap_or(0);
        Self {
            indices,
            entries,
            kl,
            ku,
            cache: Vec::new(),
        }
    }

    fn factors(&mut self, h: f64) -> Result<usize> {
        if let Some(k) = self.cache.iter().position(|(hc, _)| (hc - h).abs() <= 1e-12 * hc) {
            let hit = self.cache.remove(k);
            self.cache.push(hit);
            return Ok(self.cache.len() - 1);
        }
        if self.cache.len() >= CACHE_LEVELS {
            self.cache.remove(0);
        }
        let n = self.indices.len();
        let lus = pade23_poles()
            .iter()
            .map(|&(p, _)| BandLu::factor(&self.entries, n, self.kl, self.ku, h, p))
            .collect::<Result<Vec<_>>>()?;
        self.cache.push((h, lus));
        Ok(self.cache.len() - 1)
    }

    /// x <- R(hS) x
    fn step(&mut self, x: &mut Vec<C64>, h: f64) -> Result<()> {
        let k = self.factors(h)?;
        let residues = pade23_poles();
        let mut acc = vec![C64::default(); x.len()];
        for (lu, &(_, cj)) in self.cache[k].1.iter().zip(residues.iter()) {
            let mut b = x.clone();
            lu.solve(&mut b)?;
            for (a, v) in acc.iter_mut().zip(&b) {
                *a += cj * v;
            }
        }
        *x = acc;
        Ok(())
    }
}

/// Scaled RMS difference between two candidate results of one block.
fn scaled_diff(a: &[C64], b: &[C64], opts: &EvolveOptions) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let sc = opts.atol + opts.rtol * x.norm().max(y.norm());
        acc += ((x - y).norm() / sc).powi(2);
    }
    (acc / a.len().max(1) as f64).sqrt()
}

/// Factorizations kept per block; a level for a large block costs ~250 MB.
const CACHE_LEVELS: usize = 3;
/// Finest level h = dt / 2^MAX_LEVEL before giving up.
const MAX_LEVEL: u32 = 52;
/// Unchecked steps between error re-checks at the coarsest level.
const RECHECK_EVERY: usize = 64;

/// Advance one block across all output intervals. Steps come from the dyadic
/// ladder h = dt / 2^k so every output time is hit exactly; the level is
/// chosen by step doubling (R(h) against R(h/2)^2, local error ~h^6). Once
/// the step equals the output spacing with a wide margin, checks are only
/// repeated every [`RECHECK_EVERY`] steps.
fn advance_block(
    bp: &mut BlockPropagator,
    x: &mut Vec<C64>,
    times: &[f64],
    opts: &EvolveOptions,
    diag: &mut IntegratorDiagnostics,
    mut record: impl FnMut(usize, &[C64]),
) -> Result<()> {
    let mut k: u32 = 0;
    let mut checking = true;
    let mut quiet = 0usize;
    let mut since_check = 0usize;
    let mut last_dt = f64::NAN;
    for (iv, w) in times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        if !((dt - last_dt).abs() <= 1e-12 * dt) {
            // keep roughly the current step on a new spacing and re-check
            if last_dt.is_finite() {
                let h = last_dt / (1u64 << k) as f64;
                k = (dt / h).log2().round().clamp(0.0, MAX_LEVEL as f64) as u32;
            }
            last_dt = dt;
            checking = true;
            quiet = 0;
        }
        let mut pos: u64 = 0;
        while pos < (1u64 << k) {
            let h = dt / (1u64 << k) as f64;
            if diag.accepted_steps + diag.rejected_steps > opts.max_steps {
                return Err(Error::ResourceLimit(format!(
                    "exponential propagation exceeded the budget of {} steps",
                    opts.max_steps
                )));
            }
            if checking {
                let mut one = x.clone();
                bp.step(&mut one, h)?;
                let mut two = x.clone();
                bp.step(&mut two, h / 2.0)?;
                bp.step(&mut two, h / 2.0)?;
                let err = scaled_diff(&one, &two, opts) / 31.0;
                if err > 1.0 {
                    diag.rejected_steps += 1;
                    if k >= MAX_LEVEL {
                        return Err(Error::IntegratorAccuracy(format!(
                            "no substep meets the tolerance (h = {h:.3e}, error {err:.3e})"
                        )));
                    }
                    k += 1;
                    pos *= 2;
                    quiet = 0;
                    continue;
                }
                *x = two;
                pos += 1;
                diag.accepted_steps += 1;
                let hs = h / 2.0;
                diag.substep = Some(diag.substep.map_or(hs, |m: f64| m.min(hs)));
                if err < 1.0 / 64.0 {
                    if k > 0 && pos % 2 == 0 {
                        k -= 1;
                        pos /= 2;
                    } else if k == 0 {
                        quiet += 1;
                        if quiet >= 3 {
                            checking = false;
                            since_check = 0;
                        }
                    }
                }
            } else {
                bp.step(x, h)?;
                pos += 1;
                diag.accepted_steps += 1;
                since_check += 1;
                if since_check >= RECHECK_EVERY {
                    checking = true;
                    quiet = 0;
                }
            }
        }
        record(iv, x);
    }
    Ok(())
}

pub(crate) fn propagate(
    model: &GKSLModel,
    rho0: &DensityMatrix,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<(Vec<DensityMatrix>, IntegratorDiagnostics)> {
    let d = model.dim();
    let superop = to_superoperator(model);
    let v0 = vec_col(&rho0.entries().view());
    let mut diag = IntegratorDiagnostics {
        method: "pade23-exponential".into(),
        ..Default::default()
    };
    let mut out = vec![rho0.clone()];
    if times.len() == 1 {
        return Ok((out, diag));
    }
    let mut states: Vec<Vec<C64>> = vec![vec![C64::default(); d * d]; times.len() - 1];
    for b in superop.blocks() {
        if b.iter().all(|&g| v0[g].re == 0.0 && v0[g].im == 0.0) {
            continue;
        }
        let mut x: Vec<C64> = b.iter().map(|&g| v0[g]).collect();
        let mut bp = BlockPropagator::new(&superop, b);
        let idx = bp.indices.clone();
        advance_block(&mut bp, &mut x, times, opts, &mut diag, |iv, y| {
            for (loc, &g) in idx.iter().enumerate() {
                states[iv][g] = y[loc];
            }
        })?;
    }
    for (k, v) in states.into_iter().enumerate() {
        let m = unvec_col(&v, d);
        out.push(repair(model, &m.view(), times[k + 1], &mut diag)?);
    }
    Ok((out, diag))
}
