//! Eigendecomposition of the generator, block by block.
//!
//! Right modes are columns of the eigenvector matrix V of each block and left
//! modes are the rows of V^-1, which makes the pair biorthonormal by
//! construction. Left modes are returned as matrices Lambda^l with
//! Tr(Lambda^l_k Lambda^r_h) = delta_kh, i.e. Lambda^l = unvec(u)^T.
//! Blocks obeying detailed balance are symmetrized first (see
//! `symmetrizable_eig`), everything else goes through a general eig.

use std::cmp::Ordering;

use ndarray::{Array1, Array2};

use super::superop::Superoperator;
use crate::error::{Error, Result};
use crate::linalg::{self, c, unvec_col, vec_col, C64};
use crate::quantum::{DensityMatrix, HilbertSpec};

/// Largest invariant block handed to the dense eigensolver.
pub const MAX_DENSE_BLOCK: usize = 4000;

const ZERO_TOL: f64 = 1e-10;
const BIORTHO_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
struct SpectralBlock {
    indices: Vec<usize>,
    eigenvalues: Array1<C64>,
    /// columns are right eigenvectors
    right: Array2<C64>,
    /// rows are left eigenvectors, right.dot(left) = I
    left: Array2<C64>,
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    space: HilbertSpec,
    eigenvalues: Vec<C64>,
    /// (block, local column) of each sorted mode
    modes: Vec<(usize, usize)>,
    blocks: Vec<SpectralBlock>,
    biortho_defect: f64,
    /// false when only the population sector was decomposed
    complete: bool,
}

/// Normalize each right column so its largest entry (the first within 1e-8 of
/// the maximum modulus) is real and equal to one; compensate in the left rows.
fn normalize_modes(right: &mut Array2<C64>, left: &mut Array2<C64>) {
    for k in 0..right.ncols() {
        let col = right.column(k);
        let m = col.iter().fold(0.0, |a: f64, z| a.max(z.norm()));
        let piv = col
            .iter()
            .position(|z| z.norm() >= m * (1.0 - 1e-8))
            .expect("nonzero eigenvector");
        let z = col[piv];
        right.column_mut(k).mapv_inplace(|v| v / z);
        left.row_mut(k).mapv_inplace(|v| v * z);
    }
}

const SYM_TOL: f64 = 1e-12;

/// Blocks of the form i c I + M with M real and diagonally similar to a
/// symmetric matrix (detailed balance: birth-death chains, the oscillator
/// coherence orders). Their eigenvector matrices are far too ill conditioned
/// for a general eig + inverse at large dimension, but with M = S H S^-1 the
/// modes are V = S Q and V^-1 = Q^T S^-1 for the orthogonal Q of H.
/// Returns None when the block has no such structure.
fn symmetrizable_eig(m: &Array2<C64>) -> Result<Option<(Array1<C64>, Array2<C64>, Array2<C64>)>> {
    let n = m.nrows();
    let scale = linalg::max_abs(&m.view()).max(f64::MIN_POSITIVE);
    let tol = SYM_TOL * scale;
    let shift = m[[0, 0]].im;
    for i in 0..n {
        if (m[[i, i]].im - shift).abs() > tol {
            return Ok(None);
        }
        for j in 0..n {
            let (a, b) = (m[[i, j]], m[[j, i]]);
            if i != j && (a.im.abs() > tol || (a.re == 0.0) != (b.re == 0.0) || a.re * b.re < 0.0) {
                return Ok(None);
            }
        }
    }
    // log scale factors along a breadth-first spanning forest,
    // s_j = s_i sqrt(M_ji / M_ij)
    let mut ls = vec![f64::NAN; n];
    for root in 0..n {
        if !ls[root].is_nan() {
            continue;
        }
        ls[root] = 0.0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if j != i && ls[j].is_nan() && m[[i, j]].re != 0.0 {
                    ls[j] = ls[i] + 0.5 * (m[[j, i]].re / m[[i, j]].re).ln();
                    queue.push_back(j);
                }
            }
        }
    }
    let h = Array2::from_shape_fn((n, n), |(i, j)| m[[i, j]].re * (ls[j] - ls[i]).exp());
    let hmax = h.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (h[[i, j]] - h[[j, i]]).abs() > SYM_TOL * hmax.max(f64::MIN_POSITIVE) {
                return Ok(None);
            }
        }
    }
    let (w, q) = linalg::eigh(&h.mapv(c).view())?;
    let v = Array2::from_shape_fn((n, n), |(i, k)| q[[i, k]] * ls[i].exp());
    let u = Array2::from_shape_fn((n, n), |(k, i)| q[[i, k]].conj() * (-ls[i]).exp());
    Ok(Some((w.mapv(|x| C64::new(x, shift)), v, u)))
}

/// Diagonalize every invariant block of `superop`.
///
/// Errors: [`Error::Degeneracy`] unless exactly one eigenvalue has
/// |lambda| < 1e-10 max(1, max|S|); [`Error::NonDiagonalizable`] when the
/// eigenvector matrix of some block cannot be inverted to 1e-8;
/// [`Error::ResourceLimit`] for blocks above [`MAX_DENSE_BLOCK`].
pub fn spectral_decompose(space: &HilbertSpec, superop: &Superoperator) -> Result<SpectralDecomposition> {
    decompose_blocks(space, superop, superop.blocks(), true)
}

/// Like [`spectral_decompose`], restricted to the invariant blocks that
/// contain diagonal entries. States diagonal in the basis (thermal states in
/// particular) only overlap with these modes; the qubit sector is
/// {0, -Gamma}, and for the Brownian particle this halves the work.
pub fn spectral_decompose_populations(space: &HilbertSpec, superop: &Superoperator) -> Result<SpectralDecomposition> {
    let d = superop.dim();
    let blocks = superop
        .blocks()
        .into_iter()
        .filter(|b| b.iter().any(|&g| g % d == g / d))
        .collect();
    decompose_blocks(space, superop, blocks, false)
}

fn decompose_blocks(
    space: &HilbertSpec,
    superop: &Superoperator,
    selected: Vec<Vec<usize>>,
    complete: bool,
) -> Result<SpectralDecomposition> {
    let d = superop.dim();
    if space.dim() != d {
        return Err(Error::Shape(format!("space dim {} vs superoperator dim {d}", space.dim())));
    }
    let zero_tol = ZERO_TOL * superop.max_abs().max(1.0);
    let mut blocks = Vec::new();
    let mut all: Vec<(C64, usize, usize)> = Vec::new();
    let mut biortho_defect: f64 = 0.0;
    for (b, indices) in selected.into_iter().enumerate() {
        let n = indices.len();
        if n > MAX_DENSE_BLOCK {
            return Err(Error::ResourceLimit(format!(
                "invariant block of size {n} exceeds the dense eigensolver limit {MAX_DENSE_BLOCK}"
            )));
        }
        let m = superop.block_dense(&indices);
        let (w, mut v, mut u) = match symmetrizable_eig(&m)? {
            Some(wvu) => wvu,
            None => {
                let (w, v) = linalg::eig(&m.view())?;
                let u = linalg::inv(&v.view()).map_err(|e| Error::NonDiagonalizable(e.to_string()))?;
                (w, v, u)
            }
        };
        let defect = linalg::max_abs(&(u.dot(&v) - Array2::<C64>::eye(n)).view());
        if !(defect <= BIORTHO_TOL) {
            return Err(Error::NonDiagonalizable(format!(
                "eigenvector matrix of block {b} (size {n}) inverts with defect {defect:.3e}"
            )));
        }
        biortho_defect = biortho_defect.max(defect);
        normalize_modes(&mut v, &mut u);
        for (k, lam) in w.iter().enumerate() {
            all.push((*lam, b, k));
        }
        blocks.push(SpectralBlock {
            indices,
            eigenvalues: w,
            right: v,
            left: u,
        });
    }

    let zeros: Vec<usize> = (0..all.len()).filter(|&k| all[k].0.norm() < zero_tol).collect();
    if zeros.len() != 1 {
        return Err(Error::Degeneracy {
            count: zeros.len(),
            tol: zero_tol,
        });
    }
    let (z_lam, zb, zk) = all.swap_remove(zeros[0]);

    // unit-trace stationary mode
    {
        let blk = &mut blocks[zb];
        let tr: C64 = blk
            .indices
            .iter()
            .enumerate()
            .filter(|(_, &g)| g % d == g / d)
            .map(|(loc, _)| blk.right[[loc, zk]])
            .sum();
        if tr.norm() == 0.0 {
            return Err(Error::NonDiagonalizable("stationary mode is traceless".into()));
        }
        blk.right.column_mut(zk).mapv_inplace(|v| v / tr);
        blk.left.row_mut(zk).mapv_inplace(|v| v * tr);
    }

    let mut sorted = sort_modes(all, &blocks, d);
    sorted.insert(0, (z_lam, zb, zk));
    Ok(SpectralDecomposition {
        space: *space,
        eigenvalues: sorted.iter().map(|m| m.0).collect(),
        modes: sorted.iter().map(|m| (m.1, m.2)).collect(),
        blocks,
        biortho_defect,
        complete,
    })
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0)
}

/// Ascending |Re|, then ascending Im, then lexicographic mode entries.
/// Near-equal keys are grouped before the next key is applied so that the
/// comparison stays a total order.
fn sort_modes(mut all: Vec<(C64, usize, usize)>, blocks: &[SpectralBlock], d: usize) -> Vec<(C64, usize, usize)> {
    all.sort_by(|a, b| a.0.re.abs().total_cmp(&b.0.re.abs()));
    let mut out = Vec::with_capacity(all.len());
    for mut grp in group_by(all, |a, b| same(a.0.re.abs(), b.0.re.abs())) {
        grp.sort_by(|a, b| a.0.im.total_cmp(&b.0.im));
        for mut sub in group_by(grp, |a, b| same(a.0.im, b.0.im)) {
            if sub.len() > 1 {
                sub.sort_by(|a, b| lex_cmp(&dense_mode(blocks, a.1, a.2, d), &dense_mode(blocks, b.1, b.2, d)));
            }
            out.extend(sub);
        }
    }
    out
}

fn group_by<T, F: Fn(&T, &T) -> bool>(v: Vec<T>, eq: F) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::new();
    for x in v {
        match out.last_mut() {
            Some(g) if eq(g.last().unwrap(), &x) => g.push(x),
            _ => out.push(vec![x]),
        }
    }
    out
}

fn lex_cmp(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o != Ordering::Equal {
            return o;
        }
    }
    Ordering::Equal
}

fn dense_mode(blocks: &[SpectralBlock], b: usize, k: usize, d: usize) -> Vec<C64> {
    let mut v = vec![C64::default(); d * d];
    let blk = &blocks[b];
    for (loc, &g) in blk.indices.iter().enumerate() {
        v[g] = blk.right[[loc, k]];
    }
    v
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    /// Sorted eigenvalues; index 0 is the stationary mode.
    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    /// |Re lambda_2|
    pub fn gap(&self) -> f64 {
        self.eigenvalues.get(1).map(|l| l.re.abs()).unwrap_or(0.0)
    }

    /// max |U V - I| over blocks before normalization.
    pub fn biorthonormality_defect(&self) -> f64 {
        self.biortho_defect
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Right mode k as a D x D matrix.
    pub fn right_mode(&self, k: usize) -> Array2<C64> {
        let d = self.space.dim();
        let (b, loc) = self.modes[k];
        unvec_col(&dense_mode(&self.blocks, b, loc, d), d)
    }

    /// Left mode k as a D x D matrix, normalized by Tr(left_k right_h) = delta.
    pub fn left_mode(&self, k: usize) -> Array2<C64> {
        let d = self.space.dim();
        let (b, loc) = self.modes[k];
        let blk = &self.blocks[b];
        let mut v = vec![C64::default(); d * d];
        for (j, &g) in blk.indices.iter().enumerate() {
            v[g] = blk.left[[loc, j]];
        }
        unvec_col(&v, d).reversed_axes()
    }

    /// Hermitized stationary mode, validated as a density matrix.
    pub fn stationary_state(&self) -> Result<DensityMatrix> {
        let m = self.right_mode(0);
        let mut h = linalg::hermitize(&m.view());
        let tr = linalg::trace(&h.view());
        h.mapv_inplace(|z| z / tr.re);
        DensityMatrix::new(self.space, h)
    }

    /// Whether every invariant block was decomposed.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    fn check_state(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.space().dim() != self.space.dim() {
            return Err(Error::Shape(format!(
                "state dim {} vs decomposition dim {}",
                rho.space().dim(),
                self.space.dim()
            )));
        }
        if !self.complete {
            let v = vec_col(&rho.entries().view());
            let mut covered = vec![false; v.len()];
            for blk in &self.blocks {
                for &g in &blk.indices {
                    covered[g] = true;
                }
            }
            if v.iter().zip(&covered).any(|(z, &c)| !c && (z.re != 0.0 || z.im != 0.0)) {
                return Err(Error::Domain("state has weight outside the decomposed sector".into()));
            }
        }
        Ok(())
    }

    /// Block-local overlap coefficients (unsorted) of a vectorized state.
    fn block_overlaps(&self, v: &[C64]) -> Vec<Array1<C64>> {
        self.blocks
            .iter()
            .map(|blk| {
                let x = Array1::from_iter(blk.indices.iter().map(|&g| v[g]));
                if x.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                    Array1::zeros(blk.indices.len())
                } else {
                    blk.left.dot(&x)
                }
            })
            .collect()
    }
}

/// xi_k = Tr(Lambda^l_k rho0) in sorted mode order; xi_1 = Tr rho0 = 1.
pub fn overlaps(decomp: &SpectralDecomposition, rho0: &DensityMatrix) -> Result<Vec<C64>> {
    decomp.check_state(rho0)?;
    let per = decomp.block_overlaps(&vec_col(&rho0.entries().view()));
    Ok(decomp.modes.iter().map(|&(b, k)| per[b][k]).collect())
}

/// rho(t) = Lambda^r_1 + sum_{k >= 2} exp(lambda_k t) xi_k Lambda^r_k,
/// Hermitized and validated.
pub fn evolve_spectral(decomp: &SpectralDecomposition, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    let states = evolve_spectral_many(decomp, rho0, &[t])?;
    Ok(states.into_iter().next().unwrap())
}

/// [`evolve_spectral`] at several times, sharing the overlap computation.
pub fn evolve_spectral_many(
    decomp: &SpectralDecomposition,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<Vec<DensityMatrix>> {
    decomp.check_state(rho0)?;
    let d = decomp.space.dim();
    let mut xi = decomp.block_overlaps(&vec_col(&rho0.entries().view()));
    let (zb, zk) = decomp.modes[0];
    xi[zb][zk] = c(1.0);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let mut v = vec![C64::default(); d * d];
        for (b, blk) in decomp.blocks.iter().enumerate() {
            if xi[b].iter().all(|z| z.re == 0.0 && z.im == 0.0) {
                continue;
            }
            let coef = Array1::from_shape_fn(blk.indices.len(), |k| {
                if (b, k) == (zb, zk) {
                    xi[b][k]
                } else {
                    xi[b][k] * (blk.eigenvalues[k] * t).exp()
                }
            });
            let y = blk.right.dot(&coef);
            for (loc, &g) in blk.indices.iter().enumerate() {
                v[g] = y[loc];
            }
        }
        let m = linalg::hermitize(&unvec_col(&v, d).view());
        out.push(DensityMatrix::new(decomp.space, m)?);
    }
    Ok(out)
}
