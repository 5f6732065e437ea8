//! Dense complex linear algebra helpers shared across the crate.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Vectorization is column-major
//! throughout, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

/// Tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues in `[-NEG_EIG_TOL, 0)` are clamped to zero in PSD routines.
pub const NEG_EIG_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |r, k| {
        if r == k {
            c(values[r], 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

pub fn frob_norm_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frob_norm(m: &CMat) -> f64 {
    frob_norm_sq(m).sqrt()
}

/// `⟨vec(a), vec(b)⟩ = vec(a)ᴴ vec(b)`.
pub fn inner(a: &CMat, b: &CMat) -> Complex64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Column-major vectorization.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec(v: &[Complex64], rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    let scale = frob_norm(m).max(1.0);
    for r in 0..n {
        for k in r..n {
            if (m[(r, k)] - m[(k, r)].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back in ascending order. Each eigenvector is phase-normalized
/// so that its first entry with magnitude above `1e-12` is real and positive,
/// which makes the basis deterministic for simple eigenvalues.
pub fn hermitian_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    // Symmetrize to remove rounding asymmetry before handing to the solver.
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).clone_owned();
        fix_phase(col.as_mut_slice());
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Rotate a vector so its first significant entry is real positive.
pub fn fix_phase(col: &mut [Complex64]) {
    if let Some(pivot) = col.iter().find(|z| z.norm() > 1e-12) {
        let rot = pivot.conj() / pivot.norm();
        for z in col.iter_mut() {
            *z *= rot;
        }
    }
}

/// Columns of the `d` eigenvectors with smallest eigenvalues.
pub fn smallest_eigvecs(m: &CMat, d: usize) -> CMat {
    let (_, vecs) = hermitian_eig(m);
    vecs.columns(0, d).clone_owned()
}

/// Eigendecomposition of a Hermitian PSD matrix with small negative eigenvalues
/// clamped. Returns `(values, vectors)` in ascending order.
pub fn psd_eig(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    if !is_hermitian(m, HERMITIAN_TOL) {
        return Err(Error::NotHermitian);
    }
    let (mut values, vectors) = hermitian_eig(m);
    let scale = values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    for v in values.iter_mut() {
        if *v < -NEG_EIG_TOL * scale {
            return Err(Error::NegativeEigenvalue(*v));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok((values, vectors))
}

/// Principal square root `F Λ^{1/2} Fᴴ` of a Hermitian PSD matrix.
pub fn matrix_sqrt_psd(m: &CMat) -> Result<CMat> {
    let (values, vectors) = psd_eig(m)?;
    let roots: Vec<f64> = values.iter().map(|v| v.sqrt()).collect();
    Ok(&vectors * diag(&roots) * vectors.adjoint())
}

/// Number of eigenvalues above `eps_rank` times the largest one.
pub fn effective_rank(m: &CMat, eps_rank: f64) -> Result<usize> {
    let (values, _) = psd_eig(m)?;
    let top = values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(0);
    }
    Ok(values.iter().filter(|&&v| v > eps_rank * top).count())
}

/// Orthogonal projector onto the span of eigenvectors whose eigenvalue exceeds
/// `eps_rank` times the largest eigenvalue.
pub fn range_projector(m: &CMat, eps_rank: f64) -> Result<CMat> {
    let (values, vectors) = psd_eig(m)?;
    let top = values.last().copied().unwrap_or(0.0);
    let n = m.nrows();
    let mut p = CMat::zeros(n, n);
    for (k, &v) in values.iter().enumerate() {
        if top > 0.0 && v > eps_rank * top {
            let col = vectors.column(k);
            p += col * col.adjoint();
        }
    }
    Ok(p)
}

/// Orthonormal basis for the column span of `a` (thin QR), phase-fixed.
pub fn orthonormalize(a: &CMat) -> CMat {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    // Make diag(R) real positive so the factor is unique.
    for k in 0..q.ncols().min(r.nrows()) {
        let rkk = r[(k, k)];
        if rkk.norm() > 0.0 {
            let rot = rkk / rkk.norm();
            for row in 0..q.nrows() {
                q[(row, k)] *= rot;
            }
        }
    }
    q
}

/// `log2 det(A)` for Hermitian positive definite `A` via Cholesky.
pub fn log2_det_hpd(a: &CMat) -> Result<f64> {
    let sym = (a + a.adjoint()) * c(0.5, 0.0);
    let chol = sym.cholesky().ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for k in 0..a.nrows() {
        acc += l[(k, k)].re.ln();
    }
    Ok(2.0 * acc / std::f64::consts::LN_2)
}

/// `max_ij |a_ij - b_ij|`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian_matrix, substream};

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let s = matrix_sqrt_psd(&identity(3)).unwrap();
        assert!(max_abs_diff(&s, &identity(3)) < 1e-12);
        let s = matrix_sqrt_psd(&diag(&[4.0, 1.0])).unwrap();
        assert!(max_abs_diff(&s, &diag(&[2.0, 1.0])) < 1e-12);
    }

    #[test]
    fn sqrt_squares_back_for_random_psd() {
        let mut rng = substream(7, &[1], "sqrt");
        for _ in 0..20 {
            let g = complex_gaussian_matrix(&mut rng, 4, 4);
            let a = &g * g.adjoint();
            let s = matrix_sqrt_psd(&a).unwrap();
            assert!(is_hermitian(&s, 1e-10));
            assert!(max_abs_diff(&(&s * &s), &a) < 1e-8);
            // eigendecomposition round trip
            let (vals, vecs) = hermitian_eig(&a);
            let back = &vecs * diag(&vals) * vecs.adjoint();
            assert!(max_abs_diff(&back, &a) < 1e-9);
        }
    }

    #[test]
    fn sqrt_rejects_bad_input() {
        let mut m = identity(2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(matrix_sqrt_psd(&m), Err(Error::NotHermitian)));
        let neg = diag(&[1.0, -0.5]);
        assert!(matches!(
            matrix_sqrt_psd(&neg),
            Err(Error::NegativeEigenvalue(_))
        ));
        // tiny negative values are clamped
        let tiny = diag(&[1.0, -1e-13]);
        let s = matrix_sqrt_psd(&tiny).unwrap();
        assert!(s[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn effective_rank_examples() {
        assert_eq!(effective_rank(&identity(2), 1e-9).unwrap(), 2);
        assert_eq!(effective_rank(&diag(&[2.8, 0.1, 0.1]), 1e-9).unwrap(), 3);
        assert_eq!(effective_rank(&diag(&[3.0, 0.0, 0.0]), 1e-9).unwrap(), 1);
    }

    #[test]
    fn vec_is_column_major() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)]);
        let v = vec_of(&m);
        assert_eq!(v[1], c(3.0, 0.0));
        // vec(A X B) = (Bᵀ ⊗ A) vec(X)
        let mut rng = substream(3, &[], "kron");
        let a = complex_gaussian_matrix(&mut rng, 2, 3);
        let x = complex_gaussian_matrix(&mut rng, 3, 4);
        let b = complex_gaussian_matrix(&mut rng, 4, 2);
        let lhs = vec_of(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec_of(&x);
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn orthonormalize_gives_orthonormal_columns() {
        let mut rng = substream(5, &[], "qr");
        let a = complex_gaussian_matrix(&mut rng, 5, 2);
        let q = orthonormalize(&a);
        assert_eq!(q.shape(), (5, 2));
        assert!(max_abs_diff(&(q.adjoint() * &q), &identity(2)) < 1e-12);
    }

    #[test]
    fn log_det_matches_eigenvalues() {
        let a = diag(&[2.0, 8.0]);
        assert!((log2_det_hpd(&a).unwrap() - 4.0).abs() < 1e-12);
    }
}
