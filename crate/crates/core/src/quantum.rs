//! Hilbert spaces, density matrices, operators and thermal states.
//!
//! Units: hbar = k_B = 1. Fock spaces are truncated at `dim` levels and the
//! basis is ordered by occupation number; for a qubit index 0 is the ground
//! state.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::linalg::{self, c, C64, I};

/// Largest thermal mass allowed outside a truncated Fock space.
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    Qubit,
    Fock,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HilbertSpec {
    kind: SpaceKind,
    dim: usize,
    omega: f64,
    tail_tol: f64,
}

impl HilbertSpec {
    pub fn qubit(omega: f64) -> Result<Self> {
        check_frequency(omega)?;
        Ok(Self {
            kind: SpaceKind::Qubit,
            dim: 2,
            omega,
            tail_tol: DEFAULT_TAIL_TOL,
        })
    }

    pub fn fock(dim: usize, omega: f64) -> Result<Self> {
        check_frequency(omega)?;
        if dim < 2 {
            return Err(Error::Domain(format!("fock dimension {dim} < 2")));
        }
        Ok(Self {
            kind: SpaceKind::Fock,
            dim,
            omega,
            tail_tol: DEFAULT_TAIL_TOL,
        })
    }

    pub fn with_tail_tol(mut self, tail_tol: f64) -> Result<Self> {
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(Error::Domain(format!("tail tolerance {tail_tol} not in (0, 1)")));
        }
        self.tail_tol = tail_tol;
        Ok(self)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }
}

fn check_frequency(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("frequency {omega} must be positive")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StateDiagnostics {
    /// Thermal mass beyond the truncation, removed by renormalization.
    pub discarded_mass: f64,
    /// Smallest eigenvalue seen at validation.
    pub min_eigenvalue: f64,
    /// Total magnitude of negative eigenvalues tolerated (not removed).
    pub clamped_mass: f64,
}

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    space: HilbertSpec,
    entries: Array2<C64>,
    diagnostics: StateDiagnostics,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, positivity and (for Fock spaces) the
    /// truncation tail. The entries are stored unchanged.
    pub fn new(space: HilbertSpec, entries: Array2<C64>) -> Result<Self> {
        let n = space.dim();
        if entries.dim() != (n, n) {
            return Err(Error::Shape(format!(
                "state is {:?}, space has dim {n}",
                entries.dim()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let herm = linalg::hermiticity_defect(&entries.view());
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = linalg::trace(&entries.view());
        if (tr - c(1.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let eig: Vec<f64> = if linalg::is_diagonal(&entries.view()) {
            entries.diag().iter().map(|z| z.re).collect()
        } else {
            linalg::eigh(&entries.view())?.0.to_vec()
        };
        let min_eigenvalue = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eigenvalue < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eigenvalue:.3e}"
            )));
        }
        let clamped_mass = eig.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
        if space.kind() == SpaceKind::Fock {
            let last = entries[[n - 1, n - 1]].re;
            if last > space.tail_tol() {
                return Err(Error::InvalidState(format!(
                    "population {last:.3e} in the last Fock level exceeds tail tolerance {:.1e}",
                    space.tail_tol()
                )));
            }
        }
        Ok(Self {
            space,
            entries,
            diagnostics: StateDiagnostics {
                discarded_mass: 0.0,
                min_eigenvalue,
                clamped_mass,
            },
        })
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    pub fn diagnostics(&self) -> &StateDiagnostics {
        &self.diagnostics
    }

    pub fn populations(&self) -> Vec<f64> {
        self.entries.diag().iter().map(|z| z.re).collect()
    }

    /// Tr(O rho)
    pub fn expectation(&self, op: &OperatorMatrix) -> C64 {
        let n = self.space.dim();
        let mut s = C64::default();
        for i in 0..n {
            for j in 0..n {
                s += op.entries[[i, j]] * self.entries[[j, i]];
            }
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    space: HilbertSpec,
    entries: Array2<C64>,
    label: String,
    band: usize,
}

impl OperatorMatrix {
    pub fn new(space: HilbertSpec, entries: Array2<C64>, label: impl Into<String>) -> Result<Self> {
        let n = space.dim();
        if entries.dim() != (n, n) {
            return Err(Error::Shape(format!(
                "operator is {:?}, space has dim {n}",
                entries.dim()
            )));
        }
        let band = linalg::bandwidth(&entries.view());
        Ok(Self {
            space,
            entries,
            label: label.into(),
            band,
        })
    }

    pub fn space(&self) -> &HilbertSpec {
        &self.space
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest |i - j| among the nonzero entries.
    pub fn bandwidth(&self) -> usize {
        self.band
    }

    pub fn dagger(&self) -> OperatorMatrix {
        let e = linalg::dagger(&self.entries.view());
        OperatorMatrix {
            space: self.space,
            band: self.band,
            entries: e,
            label: format!("{}^dag", self.label),
        }
    }

    pub fn matmul(&self, other: &OperatorMatrix) -> OperatorMatrix {
        let e = linalg::band_mul(&self.entries.view(), self.band, &other.entries.view());
        let label = format!("{} {}", self.label, other.label);
        OperatorMatrix::new(self.space, e, label).expect("same space")
    }

    pub fn scaled(&self, s: C64, label: impl Into<String>) -> OperatorMatrix {
        OperatorMatrix::new(self.space, self.entries.mapv(|z| z * s), label).expect("same space")
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_defect(&self.entries.view()) <= tol
    }
}

/// How a bath temperature was specified.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThermalInput {
    Temperature,
    Occupation,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathSpec {
    pub omega: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub nbar: f64,
    pub given: ThermalInput,
}

impl BathSpec {
    pub fn from_temperature(omega: f64, gamma: f64, temperature: f64) -> Result<Self> {
        check_rate(gamma)?;
        let nbar = bose_einstein(omega, temperature)?;
        Ok(Self {
            omega,
            gamma,
            temperature,
            nbar,
            given: ThermalInput::Temperature,
        })
    }

    pub fn from_occupation(omega: f64, gamma: f64, nbar: f64) -> Result<Self> {
        check_rate(gamma)?;
        let temperature = temperature_from_occupation(omega, nbar)?;
        Ok(Self {
            omega,
            gamma,
            temperature,
            nbar,
            given: ThermalInput::Occupation,
        })
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }
}

fn check_rate(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("coupling rate {gamma} must be positive")))
    }
}

/// Mean occupation 1 / (exp(omega/T) - 1). T = 0 gives 0.
pub fn bose_einstein(omega: f64, temperature: f64) -> Result<f64> {
    check_frequency(omega)?;
    if !(temperature >= 0.0) || temperature.is_infinite() {
        return Err(Error::Domain(format!("temperature {temperature} must be finite and >= 0")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

/// Inverse of [`bose_einstein`]: omega / ln(1 + 1/nbar).
pub fn temperature_from_occupation(omega: f64, nbar: f64) -> Result<f64> {
    check_frequency(omega)?;
    if !(nbar >= 0.0) || nbar.is_infinite() {
        return Err(Error::Domain(format!("occupation {nbar} must be finite and >= 0")));
    }
    if nbar == 0.0 {
        return Ok(0.0);
    }
    Ok(omega / (1.0 / nbar).ln_1p())
}

fn require_fock(space: &HilbertSpec, what: &str) -> Result<()> {
    match space.kind() {
        SpaceKind::Fock => Ok(()),
        SpaceKind::Qubit => Err(Error::UnsupportedSpace(format!("{what} needs a Fock space"))),
    }
}

/// Truncated annihilation and creation operators, a|n> = sqrt(n)|n-1>.
pub fn ladder_operators(space: &HilbertSpec) -> Result<(OperatorMatrix, OperatorMatrix)> {
    require_fock(space, "ladder operators")?;
    let n = space.dim();
    let mut a = Array2::<C64>::zeros((n, n));
    for k in 1..n {
        a[[k - 1, k]] = c((k as f64).sqrt());
    }
    let a = OperatorMatrix::new(*space, a, "a")?;
    let ad = a.dagger();
    Ok((a, ad))
}

/// x = (a + a^dag)/sqrt(2 m omega), p = i sqrt(m omega / 2)(a^dag - a).
pub fn position_momentum(space: &HilbertSpec, mass: f64) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Domain(format!("mass {mass} must be positive")));
    }
    let (a, ad) = ladder_operators(space)?;
    let mw = mass * space.omega();
    let x = (a.entries() + ad.entries()).mapv(|z| z / (2.0 * mw).sqrt());
    let p = (ad.entries() - a.entries()).mapv(|z| z * I * (mw / 2.0).sqrt());
    Ok((
        OperatorMatrix::new(*space, x, "x")?,
        OperatorMatrix::new(*space, p, "p")?,
    ))
}

/// Gibbs state exp(-beta H)/Z for H = omega |1><1| (qubit) or omega a^dag a
/// (Fock, renormalized after truncation). `beta` may be `f64::INFINITY`.
pub fn thermal_state(space: &HilbertSpec, beta: f64) -> Result<DensityMatrix> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("inverse temperature {beta} must be > 0")));
    }
    let n = space.dim();
    let x = beta * space.omega();
    let weight = |k: usize| if k == 0 { 1.0 } else { (-x * k as f64).exp() };
    let mut p: Vec<f64> = (0..n).map(weight).collect();
    let mut discarded = 0.0;
    if space.kind() == SpaceKind::Fock {
        // untruncated geometric tail mass: q^N
        let tail = (-x * n as f64).exp();
        if tail > space.tail_tol() {
            let required = (space.tail_tol().ln() / -x).ceil() as usize;
            return Err(Error::TruncationOverflow {
                tail,
                tol: space.tail_tol(),
                required_dim: required.max(n + 1),
            });
        }
        discarded = tail;
    }
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    let mut m = Array2::<C64>::zeros((n, n));
    for (k, v) in p.iter().enumerate() {
        m[[k, k]] = c(*v);
    }
    let mut rho = DensityMatrix::new(*space, m)?;
    rho.diagnostics.discarded_mass = discarded;
    Ok(rho)
}

/// Gibbs state at temperature `t` (t = 0 gives the ground state).
pub fn thermal_state_at(space: &HilbertSpec, temperature: f64) -> Result<DensityMatrix> {
    if !(temperature >= 0.0) {
        return Err(Error::Domain(format!("temperature {temperature} must be >= 0")));
    }
    thermal_state(space, 1.0 / temperature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use proptest::prelude::*;

    #[test]
    fn occupation_examples() {
        let t1 = temperature_from_occupation(1.0, 1.0).unwrap();
        assert!((t1 - 1.0 / 2f64.ln()).abs() < 1e-14);
        assert!((t1 - 1.442695040888963).abs() < 1e-12);
        let t10 = temperature_from_occupation(1.0, 10.0).unwrap();
        assert!((t10 - 1.0 / 1.1f64.ln()).abs() < 1e-12);
        assert!((t10 - 10.492058).abs() < 1e-5);
        assert_eq!(bose_einstein(1.0, 0.0).unwrap(), 0.0);
        assert!(bose_einstein(-1.0, 1.0).is_err());
        assert!(temperature_from_occupation(1.0, -0.5).is_err());
    }

    proptest! {
        #[test]
        fn occupation_roundtrip(t in 0.05f64..50.0, w in 0.1f64..5.0) {
            let n = bose_einstein(w, t).unwrap();
            let back = temperature_from_occupation(w, n).unwrap();
            prop_assert!((back - t).abs() <= 1e-10 * t);
        }

        #[test]
        fn thermal_detailed_balance(nbar in 0.05f64..4.0) {
            let space = HilbertSpec::fock(80, 1.3).unwrap();
            let beta = 1.0 / temperature_from_occupation(1.3, nbar).unwrap();
            let rho = thermal_state(&space, beta).unwrap();
            let p = rho.populations();
            let q = (-beta * 1.3).exp();
            for k in 0..p.len() - 1 {
                if p[k + 1] < 1e-250 { break; }
                prop_assert!((p[k + 1] / p[k] - q).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn ladder_commutator_defect_only_in_last_level() {
        let n = 6;
        let space = HilbertSpec::fock(n, 1.0).unwrap();
        let (a, ad) = ladder_operators(&space).unwrap();
        let comm = a.matmul(&ad).entries() - ad.matmul(&a).entries();
        for i in 0..n {
            for j in 0..n {
                let expect = if i != j {
                    0.0
                } else if i == n - 1 {
                    // [a, a^dag] on |N-1> gives -(N-1); minus identity gives -N
                    -(n as f64)
                } else {
                    0.0
                };
                let got = comm[[i, j]] - if i == j { c(1.0) } else { c(0.0) };
                assert!((got - c(expect)).norm() < 1e-12, "({i},{j}) {got}");
            }
        }
    }

    #[test]
    fn ladder_rejects_qubit() {
        let q = HilbertSpec::qubit(1.0).unwrap();
        assert!(matches!(ladder_operators(&q), Err(Error::UnsupportedSpace(_))));
    }

    #[test]
    fn position_momentum_are_hermitian() {
        let space = HilbertSpec::fock(12, 0.7).unwrap();
        let (x, p) = position_momentum(&space, 2.0).unwrap();
        assert!(x.is_hermitian(1e-14) && p.is_hermitian(1e-14));
        let comm = x.matmul(&p).entries() - p.matmul(&x).entries();
        // [x, p] = i away from the truncation edge
        for k in 0..10 {
            assert!((comm[[k, k]] - I).norm() < 1e-12);
        }
    }

    #[test]
    fn qubit_thermal_examples() {
        let q = HilbertSpec::qubit(1.0).unwrap();
        let rho = thermal_state(&q, 2f64.ln()).unwrap();
        let p = rho.populations();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        let g = thermal_state(&q, f64::INFINITY).unwrap();
        assert_eq!(g.populations(), vec![1.0, 0.0]);
        assert!(thermal_state(&q, 0.0).is_err());
    }

    #[test]
    fn fock_thermal_geometric() {
        let space = HilbertSpec::fock(60, 1.0).unwrap();
        let beta = 1.0 / temperature_from_occupation(1.0, 1.0).unwrap();
        let rho = thermal_state(&space, beta).unwrap();
        for (k, pk) in rho.populations().iter().enumerate() {
            assert!((pk - 0.5f64.powi(k as i32 + 1)).abs() < 1e-15);
        }
        assert!((rho.diagnostics().discarded_mass - 0.5f64.powi(60)).abs() < 1e-30);
    }

    #[test]
    fn truncation_overflow_hint() {
        let space = HilbertSpec::fock(20, 1.0).unwrap();
        let beta = 1.0 / temperature_from_occupation(1.0, 10.0).unwrap();
        match thermal_state(&space, beta) {
            Err(Error::TruncationOverflow { required_dim, .. }) => {
                // (10/11)^N <= 1e-6
                let n = (1e-6f64.ln() / (10.0f64 / 11.0).ln()).ceil() as usize;
                assert_eq!(required_dim, n);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn density_matrix_rejects_bad_input() {
        let q = HilbertSpec::qubit(1.0).unwrap();
        let bad_trace = Array2::from_diag(&ndarray::arr1(&[c(0.5), c(0.4)]));
        assert!(DensityMatrix::new(q, bad_trace).is_err());
        let neg = Array2::from_diag(&ndarray::arr1(&[c(1.1), c(-0.1)]));
        assert!(DensityMatrix::new(q, neg).is_err());
        let mut nh = Array2::from_diag(&ndarray::arr1(&[c(0.5), c(0.5)]));
        nh[[0, 1]] = c(0.1);
        assert!(DensityMatrix::new(q, nh).is_err());
        let f = HilbertSpec::fock(3, 1.0).unwrap();
        let tail = Array2::from_diag(&ndarray::arr1(&[c(0.5), c(0.3), c(0.2)]));
        assert!(DensityMatrix::new(f, tail).is_err());
        let ok = Array2::from_diag(&ndarray::arr1(&[c(0.5), c(0.5), c(0.0)]));
        let r = DensityMatrix::new(f, ok.clone()).unwrap();
        assert!(max_abs(&(r.entries() - &ok).view()) == 0.0);
    }
}
