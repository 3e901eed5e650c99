//! Small dense linear-algebra helpers shared by the Gaussian and ED code.

use ndarray::{Array1, Array2, ArrayView2, ShapeBuilder, Zip};
use ndarray_linalg::{EigValsh, Eigh, UPLO};

use crate::{CMatrix, Result, C64};

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

/// Conjugate transpose.
pub fn dagger(a: &ArrayView2<C64>) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn frobenius(a: &ArrayView2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise deviation from Hermiticity, `max |a_ij - conj(a_ji)|`.
pub fn hermitian_defect(a: &ArrayView2<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

/// `a <- (a + a^dagger) / 2` in place.
pub fn symmetrize(a: &mut CMatrix) {
    let n = a.nrows();
    if let Some(s) = a.as_slice_mut() {
        for i in 0..n {
            s[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                let m = (s[i * n + j] + s[j * n + i].conj()) * 0.5;
                s[i * n + j] = m;
                s[j * n + i] = m.conj();
            }
        }
        return;
    }
    for i in 0..n {
        a[[i, i]].im = 0.0;
        for j in (i + 1)..n {
            let m = (a[[i, j]] + a[[j, i]].conj()) * 0.5;
            a[[i, j]] = m;
            a[[j, i]] = m.conj();
        }
    }
}

/// `||u u^dagger - 1||_F`.
pub fn unitarity_defect(u: &ArrayView2<C64>) -> f64 {
    let mut prod = u.dot(&dagger(u));
    for i in 0..prod.nrows() {
        prod[[i, i]] -= C64::new(1.0, 0.0);
    }
    frobenius(&prod.view())
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: &ArrayView2<C64>) -> Result<Array1<f64>> {
    let mut f = Array2::zeros(a.raw_dim().f());
    f.assign(a);
    Ok(f.eigvalsh(UPLO::Lower)?)
}

/// Eigen-decomposition of a Hermitian matrix: `a = V diag(e) V^dagger`.
///
/// The input is copied into column-major storage first: for row-major
/// complex input the LAPACK wrapper returns conjugated eigenvectors.
pub fn eigh(a: &ArrayView2<C64>) -> Result<(Array1<f64>, CMatrix)> {
    let mut f = Array2::zeros(a.raw_dim().f());
    f.assign(a);
    Ok(f.eigh(UPLO::Lower)?)
}

/// `V diag(f(e)) V^dagger` for a Hermitian `a = V diag(e) V^dagger`.
pub fn hermitian_function<F>(a: &ArrayView2<C64>, f: F) -> Result<CMatrix>
where
    F: Fn(f64) -> C64,
{
    let (vals, vecs) = eigh(a)?;
    let mut scaled = vecs.clone();
    for (mut col, &e) in scaled.columns_mut().into_iter().zip(vals.iter()) {
        let fe = f(e);
        col.mapv_inplace(|z| z * fe);
    }
    Ok(scaled.dot(&dagger(&vecs.view())))
}

/// `exp(-i t h)` for Hermitian `h`.
pub fn expm_hermitian(h: &ArrayView2<C64>, t: f64) -> Result<CMatrix> {
    hermitian_function(h, |e| C64::from_polar(1.0, -t * e))
}

/// Sum of absolute eigenvalues of a Hermitian matrix (its trace norm).
pub fn trace_norm_hermitian(a: &ArrayView2<C64>) -> Result<f64> {
    Ok(eigvalsh(a)?.iter().map(|e| e.abs()).sum())
}

pub fn trace(a: &ArrayView2<C64>) -> C64 {
    a.diag().sum()
}

pub fn max_abs_diff(a: &ArrayView2<C64>, b: &ArrayView2<C64>) -> f64 {
    let mut worst = 0.0f64;
    Zip::from(a).and(b).for_each(|x, y| worst = worst.max((x - y).norm()));
    worst
}
