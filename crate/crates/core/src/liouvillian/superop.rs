//! Sparse matrix representation of the generator on column-stacked vectors.

use ndarray::Array2;

use super::GKSLModel;
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Dense conversion is refused above this many rows.
const MAX_DENSE_ROWS: usize = 4096;

/// Generator as a D^2 x D^2 matrix in compressed sparse row form.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

fn nonzeros(m: &Array2<C64>) -> Vec<(usize, usize, C64)> {
    m.indexed_iter()
        .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
        .map(|((i, j), z)| (i, j, *z))
        .collect()
}

/// Sparse matrix of `model`'s generator. Logs a warning for D > 200, where
/// even the sparse form gets large.
pub fn to_superoperator(model: &GKSLModel) -> Superoperator {
    let d = model.dim();
    if d > 200 {
        log::warn!("superoperator for dim {d} has {} rows", d * d);
    }
    let mut trip: Vec<(usize, usize, C64)> = Vec::new();
    let g = nonzeros(model.effective_generator());
    // G rho: (I kron G)
    for &(i, k, v) in &g {
        for j in 0..d {
            trip.push((i + d * j, k + d * j, v));
        }
    }
    // rho G^dag: (conj(G) kron I)
    for &(j, k, v) in &g {
        for i in 0..d {
            trip.push((i + d * j, i + d * k, v.conj()));
        }
    }
    // L rho L^dag: (conj(L) kron L)
    for l in model.jumps() {
        let nz = nonzeros(l.entries());
        for &(j, lcol, vb) in &nz {
            for &(i, k, va) in &nz {
                trip.push((i + d * j, k + d * lcol, va * vb.conj()));
            }
        }
    }
    trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
    let n = d * d;
    let mut row_ptr = vec![0usize; n + 1];
    let mut cols = Vec::with_capacity(trip.len());
    let mut vals: Vec<C64> = Vec::with_capacity(trip.len());
    let mut last: Option<(usize, usize)> = None;
    for (r, c, v) in trip {
        if last == Some((r, c)) {
            *vals.last_mut().unwrap() += v;
        } else {
            cols.push(c);
            vals.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, c));
        }
    }
    for r in 0..n {
        row_ptr[r + 1] += row_ptr[r];
    }
    Superoperator {
        dim: d,
        row_ptr,
        cols,
        vals,
    }
}

impl Superoperator {
    /// Hilbert-space dimension D (the matrix is D^2 x D^2).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.dim * self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let s = self.row_ptr[r];
        let e = self.row_ptr[r + 1];
        self.cols[s..e].iter().cloned().zip(self.vals[s..e].iter().cloned())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row(r).filter(|&(cc, _)| cc == c).map(|(_, v)| v).sum()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.size())
            .map(|r| self.row(r).map(|(c, x)| x * v[c]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn gershgorin_radius(&self) -> f64 {
        (0..self.size())
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// max_c |sum_i S[i + D i, c]|: the trace functional must vanish.
    pub fn trace_residual(&self) -> f64 {
        let d = self.dim;
        let mut acc = vec![C64::default(); self.size()];
        for i in 0..d {
            for (c, v) in self.row(i + d * i) {
                acc[c] += v;
            }
        }
        acc.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn to_dense(&self) -> Result<Array2<C64>> {
        let n = self.size();
        if n > MAX_DENSE_ROWS {
            return Err(Error::ResourceLimit(format!(
                "dense superoperator with {n} rows exceeds {MAX_DENSE_ROWS}"
            )));
        }
        let mut m = Array2::zeros((n, n));
        for r in 0..n {
            for (c, v) in self.row(r) {
                m[[r, c]] += v;
            }
        }
        Ok(m)
    }

    /// Connected components of the sparsity graph. Each is an invariant
    /// subspace of the generator; indices are ascending and components are
    /// ordered by their smallest index.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for r in 0..n {
            for (c, _) in self.row(r) {
                let a = find(&mut parent, r);
                let b = find(&mut parent, c);
                if a != b {
                    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                    parent[hi] = lo;
                }
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let root = find(&mut parent, x);
            if label[root] == usize::MAX {
                label[root] = out.len();
                out.push(Vec::new());
            }
            out[label[root]].push(x);
        }
        out
    }

    /// Entries restricted to `indices` (which must be an invariant block),
    /// in local coordinates.
    pub fn block_entries(&self, indices: &[usize]) -> Vec<(usize, usize, C64)> {
        let mut local = vec![usize::MAX; self.size()];
        for (k, &g) in indices.iter().enumerate() {
            local[g] = k;
        }
        let mut out = Vec::new();
        for (k, &g) in indices.iter().enumerate() {
            for (c, v) in self.row(g) {
                debug_assert!(local[c] != usize::MAX, "indices are not a closed block");
                out.push((k, local[c], v));
            }
        }
        out
    }

    pub fn block_dense(&self, indices: &[usize]) -> Array2<C64> {
        let n = indices.len();
        let mut m = Array2::zeros((n, n));
        for (r, c, v) in self.block_entries(indices) {
            m[[r, c]] += v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, unvec_col, vec_col};
    use crate::quantum::{ladder_operators, HilbertSpec, OperatorMatrix};

    fn ho(n: usize, nbar: f64) -> GKSLModel {
        let space = HilbertSpec::fock(n, 1.0).unwrap();
        let (a, ad) = ladder_operators(&space).unwrap();
        GKSLModel::new(
            space,
            ad.matmul(&a),
            vec![
                ad.scaled(c((0.1 * nbar).sqrt()), "up"),
                a.scaled(c((0.1 * (nbar + 1.0)).sqrt()), "down"),
            ],
        )
        .unwrap()
    }

    #[test]
    fn sparse_apply_matches_generator() {
        let m = ho(5, 0.7);
        let s = to_superoperator(&m);
        let x = Array2::from_shape_fn((5, 5), |(i, j)| C64::new(i as f64 - 0.3 * j as f64, (i * j) as f64 * 0.1));
        let y = unvec_col(&s.apply(&vec_col(&x.view())), 5);
        let z = m.generator(&x.view());
        assert!(crate::linalg::max_abs(&(&y - &z).view()) < 1e-13);
        assert!(s.trace_residual() < 1e-12);
    }

    #[test]
    fn qubit_superoperator_entries() {
        // (gamma, nbar) = (0.1, 1): populations couple through the 0 and 3 entries
        let space = HilbertSpec::qubit(1.0).unwrap();
        let mut sp = Array2::zeros((2, 2));
        sp[[1, 0]] = c(1.0);
        let sp = OperatorMatrix::new(space, sp, "s+").unwrap();
        let sm = sp.dagger();
        let h = sp.matmul(&sm);
        let m = GKSLModel::new(space, h, vec![sp.scaled(c(0.1f64.sqrt()), "up"), sm.scaled(c(0.2f64.sqrt()), "down")]).unwrap();
        let s = to_superoperator(&m);
        let d = s.to_dense().unwrap();
        assert!((d[[0, 0]] - c(-0.1)).norm() < 1e-15);
        assert!((d[[0, 3]] - c(0.2)).norm() < 1e-15);
        assert!((d[[3, 0]] - c(0.1)).norm() < 1e-15);
        assert!((d[[3, 3]] - c(-0.2)).norm() < 1e-15);
        assert_eq!(s.blocks(), vec![vec![0, 3], vec![1], vec![2]]);
    }

    #[test]
    fn ho_blocks_follow_coherence_order() {
        let n = 6;
        let s = to_superoperator(&ho(n, 0.4));
        let blocks = s.blocks();
        assert_eq!(blocks.len(), 2 * n - 1);
        for b in &blocks {
            let k0 = (b[0] % n) as isize - (b[0] / n) as isize;
            assert!(b.iter().all(|&g| (g % n) as isize - (g / n) as isize == k0));
        }
    }
}
