//! GKSL generators, their superoperator and spectral representations, and
//! time evolution.
//!
//! Generator: L rho = -i[H, rho] + sum_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho}).
//! Superoperators act on column-stacked vectors, vec(A X B) = (B^T kron A) vec(X).

mod evolve;
mod expo;
mod spectral;
mod superop;

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{self, band_mul, mul_band, C64, I};
use crate::quantum::{DensityMatrix, HilbertSpec, OperatorMatrix};

pub use evolve::{
    evolve, graded_grid, uniform_grid, EvolveOptions, IntegratorDiagnostics, Method, Trajectory,
};
pub use expo::{pade23_poles, pade23_rational};
pub use spectral::{
    evolve_spectral, evolve_spectral_many, overlaps, spectral_decompose, spectral_decompose_populations,
    SpectralDecomposition,
    MAX_DENSE_BLOCK,
};
pub use superop::{to_superoperator, Superoperator};

#[derive(Clone, Debug)]
pub struct GKSLModel {
    space: HilbertSpec,
    hamiltonian: OperatorMatrix,
    jumps: Vec<OperatorMatrix>,
    metadata: BTreeMap<String, String>,
    jump_daggers: Vec<OperatorMatrix>,
    /// Effective non-Hermitian part G = -iH - 1/2 sum L^dag L.
    g: Array2<C64>,
    g_band: usize,
}

impl GKSLModel {
    pub fn new(
        space: HilbertSpec,
        hamiltonian: OperatorMatrix,
        jumps: Vec<OperatorMatrix>,
    ) -> Result<Self> {
        let n = space.dim();
        for op in std::iter::once(&hamiltonian).chain(jumps.iter()) {
            if op.space().dim() != n {
                return Err(Error::Shape(format!(
                    "operator {} has dim {}, model dim {n}",
                    op.label(),
                    op.space().dim()
                )));
            }
        }
        let scale = linalg::max_abs(&hamiltonian.entries().view()).max(1.0);
        if !hamiltonian.is_hermitian(1e-12 * scale) {
            return Err(Error::Domain("Hamiltonian is not Hermitian".into()));
        }
        let jump_daggers: Vec<_> = jumps.iter().map(|l| l.dagger()).collect();
        let mut g = hamiltonian.entries().mapv(|z| -I * z);
        for (l, ld) in jumps.iter().zip(&jump_daggers) {
            let k = band_mul(&ld.entries().view(), ld.bandwidth(), &l.entries().view());
            g.zip_mut_with(&k, |gi, ki| *gi -= ki * 0.5);
        }
        let g_band = linalg::bandwidth(&g.view());
        Ok(Self {
            space,
            hamiltonian,
            jumps,
            metadata: BTreeMap::new(),
            jump_daggers,
            g,
            g_band,
        })
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[OperatorMatrix] {
        &self.jumps
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// G = -iH - 1/2 sum L^dag L, so that L rho = G rho + rho G^dag + sum L rho L^dag.
    pub fn effective_generator(&self) -> &Array2<C64> {
        &self.g
    }

    /// Generator applied to an arbitrary (not necessarily Hermitian) matrix.
    pub fn generator(&self, x: &ArrayView2<C64>) -> Array2<C64> {
        let gv = self.g.view();
        let mut out = band_mul(&gv, self.g_band, x);
        let gd = linalg::dagger(&gv);
        out += &mul_band(x, &gd.view(), self.g_band);
        for (l, ld) in self.jumps.iter().zip(&self.jump_daggers) {
            let lx = band_mul(&l.entries().view(), l.bandwidth(), x);
            out += &mul_band(&lx.view(), &ld.entries().view(), ld.bandwidth());
        }
        out
    }

    /// Heisenberg-picture adjoint applied to an arbitrary matrix:
    /// i[H, O] + sum (L^dag O L - 1/2 {O, L^dag L}) = G^dag O + O G + sum L^dag O L.
    pub fn adjoint(&self, o: &ArrayView2<C64>) -> Array2<C64> {
        let gv = self.g.view();
        let gd = linalg::dagger(&gv);
        let mut out = band_mul(&gd.view(), self.g_band, o);
        out += &mul_band(o, &gv, self.g_band);
        for (l, ld) in self.jumps.iter().zip(&self.jump_daggers) {
            let lo = band_mul(&ld.entries().view(), ld.bandwidth(), o);
            out += &mul_band(&lo.view(), &l.entries().view(), l.bandwidth());
        }
        out
    }
}

fn check_dim(model: &GKSLModel, m: &ArrayView2<C64>) -> Result<()> {
    let n = model.dim();
    if m.dim() != (n, n) {
        return Err(Error::Shape(format!("matrix is {:?}, model dim {n}", m.dim())));
    }
    Ok(())
}

/// d rho / dt at `rho`.
pub fn apply_generator(model: &GKSLModel, rho: &DensityMatrix) -> Result<Array2<C64>> {
    check_dim(model, &rho.entries().view())?;
    Ok(model.generator(&rho.entries().view()))
}

/// Heisenberg-picture generator, dual to [`apply_generator`] under
/// Tr(O L[rho]) = Tr(L^dag[O] rho).
pub fn apply_adjoint(model: &GKSLModel, observable: &OperatorMatrix) -> Result<Array2<C64>> {
    check_dim(model, &observable.entries().view())?;
    Ok(model.adjoint(&observable.entries().view()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, dagger, max_abs, trace};
    use crate::quantum::{ladder_operators, position_momentum, thermal_state};
    use proptest::prelude::*;

    /// Textbook dense evaluation used as the reference for the banded path.
    fn dense_generator(h: &Array2<C64>, ls: &[Array2<C64>], x: &Array2<C64>) -> Array2<C64> {
        let mut out = (h.dot(x) - x.dot(h)).mapv(|z| -I * z);
        for l in ls {
            let ld = dagger(&l.view());
            let ldl = ld.dot(l);
            out = out + l.dot(x).dot(&ld) - (ldl.dot(x) + x.dot(&ldl)).mapv(|z| z * 0.5);
        }
        out
    }

    fn random_matrix(n: usize, seed: &[f64]) -> Array2<C64> {
        Array2::from_shape_fn((n, n), |(i, j)| {
            let s = seed[(i * n + j) % seed.len()];
            C64::new((s * (i + 1) as f64).sin(), (s * (j + 2) as f64).cos())
        })
    }

    fn qbm_like(n: usize) -> GKSLModel {
        let space = HilbertSpec::fock(n, 0.8).unwrap();
        let (x, p) = position_momentum(&space, 1.3).unwrap();
        let h = x.matmul(&x).scaled(c(0.4), "x2");
        let h = OperatorMatrix::new(space, h.entries() + &p.matmul(&p).scaled(c(0.3), "p2").entries().view(), "H").unwrap();
        let l = OperatorMatrix::new(space, x.entries().mapv(|z| z * 0.7) + p.entries().mapv(|z| z * C64::new(-0.1, 0.4)), "L").unwrap();
        GKSLModel::new(space, h, vec![l]).unwrap()
    }

    #[test]
    fn banded_generator_matches_dense_reference() {
        let m = qbm_like(7);
        let x = random_matrix(7, &[0.3, 1.7, 2.2, 0.9]);
        let fast = m.generator(&x.view());
        let ls: Vec<_> = m.jumps().iter().map(|l| l.entries().clone()).collect();
        let slow = dense_generator(m.hamiltonian().entries(), &ls, &x);
        assert!(max_abs(&(&fast - &slow).view()) < 1e-12);
    }

    proptest! {
        #[test]
        fn duality_and_trace_preservation(seed in proptest::collection::vec(0.1f64..3.0, 4..9)) {
            let m = qbm_like(6);
            let o = random_matrix(6, &seed);
            let x = random_matrix(6, &seed.iter().rev().cloned().collect::<Vec<_>>());
            let lhs = trace(&o.dot(&m.generator(&x.view())).view());
            let rhs = trace(&m.adjoint(&o.view()).dot(&x).view());
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
            let tr = trace(&m.generator(&x.view()).view());
            prop_assert!(tr.norm() < 1e-10);
        }
    }

    #[test]
    fn adjoint_annihilates_identity() {
        let m = qbm_like(5);
        let id = Array2::<C64>::eye(5);
        assert!(max_abs(&m.adjoint(&id.view()).view()) < 1e-12);
    }

    #[test]
    fn thermal_state_is_stationary_for_ho_like_model() {
        let space = HilbertSpec::fock(40, 1.0).unwrap();
        let (a, ad) = ladder_operators(&space).unwrap();
        let nbar = 0.5;
        let h = ad.matmul(&a);
        let jumps = vec![
            ad.scaled(c((0.1 * nbar as f64).sqrt()), "up"),
            a.scaled(c((0.1 * (nbar + 1.0) as f64).sqrt()), "down"),
        ];
        let m = GKSLModel::new(space, h, jumps).unwrap();
        let beta = (1.0f64 + 1.0 / nbar).ln();
        let rho = thermal_state(&space, beta).unwrap();
        let d = apply_generator(&m, &rho).unwrap();
        assert!(max_abs(&d.view()) < 1e-14);
    }
}
