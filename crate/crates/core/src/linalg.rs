//! Small dense linear-algebra helpers.

use crate::real::{c, Real};
use nalgebra::{DMatrix, SymmetricEigen};

/// Orthonormal basis of the sum-zero subspace of `R^n` (Helmert vectors),
/// as the columns of an `n x (n-1)` matrix.
pub fn sum_zero_basis<T: Real>(n: usize) -> DMatrix<T> {
    let mut q = DMatrix::zeros(n, n.saturating_sub(1));
    for k in 1..n {
        let kk = T::from_count(k);
        let scale = T::one() / (kk * (kk + T::one())).sqrt();
        for i in 0..k {
            q[(i, k - 1)] = scale;
        }
        q[(k, k - 1)] = -kk * scale;
    }
    q
}

/// Smallest eigenvalue of the quadratic form `x^T G x` restricted to
/// `sum(x) = 0`, with its eigenvector expressed in node coordinates.
///
/// Returns `None` for `n < 2`, where the subspace is trivial.
pub fn sum_zero_min_eigen<T: Real>(g: &DMatrix<T>) -> Option<(T, Vec<T>)> {
    let n = g.nrows();
    if n < 2 {
        return None;
    }
    let q = sum_zero_basis::<T>(n);
    let mut b = q.transpose() * g * &q;
    // symmetrise against round-off
    let bt = b.transpose();
    b = (b + bt) * c::<T>(0.5);
    let eig = SymmetricEigen::new(b);
    let (idx, &lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))?;
    let v = &q * eig.eigenvectors.column(idx);
    Some((lam, v.iter().copied().collect()))
}

/// Frobenius norm ignoring non-finite entries.
pub fn finite_norm<T: Real>(g: &DMatrix<T>) -> T {
    g.iter()
        .filter(|x| x.finite())
        .map(|&x| x * x)
        .fold(T::zero(), |s, v| s + v)
        .sqrt()
}

/// Largest power of two not exceeding `x` (for `x > 0` finite), so that
/// rescaling by it is exact in binary floating point.
pub fn power_of_two_below<T: Real>(x: T) -> T {
    let v = x.to_f64_lossy();
    if !(v > 0.0) || !v.is_finite() {
        return T::one();
    }
    c(2f64.powi(v.log2().floor() as i32))
}
