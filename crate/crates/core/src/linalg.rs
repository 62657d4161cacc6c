//! Small dense helpers on complex matrices.

use ndarray::{Array1, Array2, ArrayView2, Axis, ShapeBuilder};
use ndarray_linalg::{Eig, Eigh, Inverse, SVD, UPLO};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn dagger(a: &ArrayView2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

pub fn trace(a: &ArrayView2<C64>) -> C64 {
    a.diag().iter().sum()
}

pub fn max_abs(a: &ArrayView2<C64>) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// max |A - A^dagger|
pub fn hermiticity_defect(a: &ArrayView2<C64>) -> f64 {
    let n = a.nrows();
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            m = m.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    m
}

pub fn hermitize(a: &ArrayView2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        out[[i, i]] = c(a[[i, i]].re);
        for j in (i + 1)..n {
            let z = (a[[i, j]] + a[[j, i]].conj()) * 0.5;
            out[[i, j]] = z;
            out[[j, i]] = z.conj();
        }
    }
    out
}

pub fn is_diagonal(a: &ArrayView2<C64>) -> bool {
    a.indexed_iter()
        .all(|((i, j), z)| i == j || (z.re == 0.0 && z.im == 0.0))
}

/// Largest |i - j| over the nonzero entries.
pub fn bandwidth(a: &ArrayView2<C64>) -> usize {
    a.indexed_iter()
        .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
        .map(|((i, j), _)| i.abs_diff(j))
        .max()
        .unwrap_or(0)
}

/// Copy into column-major layout. LAPACK wrappers treat row-major input as
/// the transpose, which conjugates Hermitian eigenvectors and swaps left and
/// right eigenvectors of general matrices.
pub fn to_fortran(a: &ArrayView2<C64>) -> Array2<C64> {
    let mut f = Array2::zeros(a.dim().f());
    f.assign(a);
    f
}

/// Hermitian eigendecomposition, ascending eigenvalues. The input is
/// symmetrized first so only its Hermitian part matters.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let h = to_fortran(&hermitize(a).view());
    Ok(h.eigh(UPLO::Lower)?)
}

/// Eigenvalues and right eigenvectors (columns) of a general matrix.
pub fn eig(a: &ArrayView2<C64>) -> Result<(Array1<C64>, Array2<C64>)> {
    Ok(to_fortran(a).eig()?)
}

pub fn inv(a: &ArrayView2<C64>) -> Result<Array2<C64>> {
    Ok(to_fortran(a).inv()?)
}

/// A = U diag(s) V^dagger; returns (U, s, V^dagger).
pub fn svd(a: &ArrayView2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>)> {
    let (u, s, vt) = to_fortran(a).svd(true, true)?;
    match (u, vt) {
        (Some(u), Some(vt)) => Ok((u, s, vt)),
        _ => Err(Error::Linalg("svd returned no singular vectors".into())),
    }
}

/// A . X for banded A (bandwidth `band`).
pub fn band_mul(a: &ArrayView2<C64>, band: usize, x: &ArrayView2<C64>) -> Array2<C64> {
    let n = a.nrows();
    let m = x.ncols();
    let mut out = Array2::<C64>::zeros((n, m));
    for i in 0..n {
        let lo = i.saturating_sub(band);
        let hi = (i + band + 1).min(n);
        let mut row = out.row_mut(i);
        for j in lo..hi {
            let aij = a[[i, j]];
            if aij.re == 0.0 && aij.im == 0.0 {
                continue;
            }
            row.zip_mut_with(&x.row(j), |o, &v| *o += aij * v);
        }
    }
    out
}

/// X . A for banded A (bandwidth `band`).
pub fn mul_band(x: &ArrayView2<C64>, a: &ArrayView2<C64>, band: usize) -> Array2<C64> {
    let n = a.nrows();
    let rows = x.nrows();
    let mut out = Array2::<C64>::zeros((rows, n));
    for j in 0..n {
        let lo = j.saturating_sub(band);
        let hi = (j + band + 1).min(n);
        for i in lo..hi {
            let aij = a[[i, j]];
            if aij.re == 0.0 && aij.im == 0.0 {
                continue;
            }
            let mut col = out.column_mut(j);
            col.zip_mut_with(&x.column(i), |o, &v| *o += v * aij);
        }
    }
    out
}

/// Square root of a PSD matrix. Eigenvalues in [-tol, 0) are clamped to zero;
/// anything below is an error.
pub fn sqrt_psd(a: &ArrayView2<C64>, tol: f64) -> Result<Array2<C64>> {
    let (w, u) = eigh(a)?;
    let mut s = Array1::<f64>::zeros(w.len());
    for (k, &l) in w.iter().enumerate() {
        if l < -tol {
            return Err(Error::NumericalPsd(l));
        }
        s[k] = l.max(0.0).sqrt();
    }
    let mut us = u.clone();
    for (k, mut col) in us.axis_iter_mut(Axis(1)).enumerate() {
        col.mapv_inplace(|z| z * s[k]);
    }
    Ok(us.dot(&dagger(&u.view())))
}

/// Column-stacking vectorization: index of entry (i, j) is i + n j.
pub fn vec_col(a: &ArrayView2<C64>) -> Vec<C64> {
    let n = a.nrows();
    let mut v = vec![C64::default(); n * a.ncols()];
    for ((i, j), z) in a.indexed_iter() {
        v[i + n * j] = *z;
    }
    v
}

pub fn unvec_col(v: &[C64], n: usize) -> Array2<C64> {
    Array2::from_shape_fn((n, n), |(i, j)| v[i + n * j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn banded_products_match_dense() {
        let n = 7;
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            if i.abs_diff(j) <= 2 {
                C64::new((i + 2 * j) as f64, i as f64 - j as f64)
            } else {
                C64::default()
            }
        });
        let x = Array2::from_shape_fn((n, n), |(i, j)| C64::new((i * j) as f64 * 0.3, 1.0 - i as f64));
        assert_eq!(bandwidth(&a.view()), 2);
        let d1 = &band_mul(&a.view(), 2, &x.view()) - &a.dot(&x);
        let d2 = &mul_band(&x.view(), &a.view(), 2) - &x.dot(&a);
        assert!(max_abs(&d1.view()) < 1e-12);
        assert!(max_abs(&d2.view()) < 1e-12);
    }

    #[test]
    fn vec_roundtrip_is_column_major() {
        let a = array![[c(1.0), c(2.0)], [c(3.0), c(4.0)]];
        let v = vec_col(&a.view());
        assert_eq!(v, vec![c(1.0), c(3.0), c(2.0), c(4.0)]);
        assert_eq!(unvec_col(&v, 2), a);
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let a = array![[c(0.7), C64::new(0.1, 0.2)], [C64::new(0.1, -0.2), c(0.3)]];
        let s = sqrt_psd(&a.view(), 1e-12).unwrap();
        let d = &s.dot(&s) - &a;
        assert!(max_abs(&d.view()) < 1e-13, "{s} {d}");
    }

    #[test]
    fn eigen_residuals() {
        let a = array![
            [c(0.7), C64::new(0.1, 0.2), C64::new(0.0, -0.3)],
            [C64::new(0.1, -0.2), c(0.3), c(0.05)],
            [C64::new(0.0, 0.3), c(0.05), c(-0.4)]
        ];
        let (w, u) = eigh(&a.view()).unwrap();
        for k in 0..3 {
            let r = a.dot(&u.column(k)) - u.column(k).mapv(|z| z * w[k]);
            assert!(r.iter().all(|z| z.norm() < 1e-14));
        }
        let g = array![
            [c(1.0), C64::new(2.0, 1.0), c(0.0)],
            [c(-0.5), C64::new(0.0, 1.0), c(3.0)],
            [C64::new(0.2, -0.7), c(0.0), c(2.0)]
        ];
        let (w, v) = eig(&g.view()).unwrap();
        for k in 0..3 {
            let r = g.dot(&v.column(k)) - v.column(k).mapv(|z| z * w[k]);
            assert!(r.iter().all(|z| z.norm() < 1e-13));
        }
        let gi = inv(&g.view()).unwrap();
        assert!(max_abs(&(gi.dot(&g) - Array2::<C64>::eye(3)).view()) < 1e-13);
        let (u, s, vt) = svd(&g.view()).unwrap();
        let us = Array2::from_shape_fn((3, 3), |(i, j)| u[[i, j]] * s[j]);
        assert!(max_abs(&(us.dot(&vt) - &g).view()) < 1e-13);
    }
}
