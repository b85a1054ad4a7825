//! Dense linear algebra for the small SPD matrices this crate works with.
//!
//! Dimensions here are the data dimension `d` (and `2d` for the joint
//! location/skewness draw), so a plain O(n^3) Cholesky is the right tool.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::scalar::Scalar;
use crate::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
///
/// Fails with [`Error::NotPositiveDefinite`] when a pivot is not strictly
/// positive, which is also how non-SPD inputs are detected everywhere else
/// in the crate.
pub fn cholesky<S: Scalar>(a: &ArrayView2<S>) -> Result<Array2<S>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!(
            "cholesky needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut l = Array2::<S>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum = sum - l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if !(sum > S::zero()) || !sum.is_finite() {
                    return Err(Error::NotPositiveDefinite(format!(
                        "pivot {i} is {sum}"
                    )));
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_solve<S: Scalar>(l: &ArrayView2<S>, b: &ArrayView1<S>) -> Array1<S> {
    let n = l.nrows();
    let mut x = Array1::<S>::zeros(n);
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum = sum - l[[i, k]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// Solves `L^T x = b` for lower-triangular `L`.
pub fn backward_solve<S: Scalar>(l: &ArrayView2<S>, b: &ArrayView1<S>) -> Array1<S> {
    let n = l.nrows();
    let mut x = Array1::<S>::zeros(n);
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in i + 1..n {
            sum = sum - l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    x
}

/// Solves `A x = b` given the Cholesky factor `L` of `A`.
pub fn chol_solve<S: Scalar>(l: &ArrayView2<S>, b: &ArrayView1<S>) -> Array1<S> {
    let y = forward_solve(l, b);
    backward_solve(l, &y.view())
}

/// `v^T A^{-1} v` given the Cholesky factor `L` of `A`.
pub fn quad_form_inv<S: Scalar>(l: &ArrayView2<S>, v: &ArrayView1<S>) -> S {
    let y = forward_solve(l, v);
    y.iter().map(|&x| x * x).sum()
}

/// `A^{-1}` given the Cholesky factor `L` of `A`; the result is symmetrized.
pub fn chol_inverse<S: Scalar>(l: &ArrayView2<S>) -> Array2<S> {
    let n = l.nrows();
    let mut inv = Array2::<S>::zeros((n, n));
    for j in 0..n {
        let mut e = Array1::<S>::zeros(n);
        e[j] = S::one();
        let col = chol_solve(l, &e.view());
        inv.column_mut(j).assign(&col);
    }
    symmetrize(&mut inv);
    inv
}

/// `log det A` given the Cholesky factor `L` of `A`.
pub fn chol_logdet<S: Scalar>(l: &ArrayView2<S>) -> S {
    let two = S::c(2.0);
    (0..l.nrows()).map(|i| l[[i, i]].ln() * two).sum()
}

/// Determinant of an SPD matrix through its Cholesky factorization.
pub fn spd_determinant<S: Scalar>(a: &ArrayView2<S>) -> Result<S> {
    let l = cholesky(a)?;
    let mut det = S::one();
    for i in 0..l.nrows() {
        let d = l[[i, i]];
        det = det * d * d;
    }
    Ok(det)
}

/// Averages a nearly-symmetric matrix with its transpose in place.
pub fn symmetrize<S: Scalar>(a: &mut Array2<S>) {
    let n = a.nrows();
    let half = S::c(0.5);
    for i in 0..n {
        for j in 0..i {
            let m = (a[[i, j]] + a[[j, i]]) * half;
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
}

/// Outer product `u v^T`.
pub fn outer<S: Scalar>(u: &ArrayView1<S>, v: &ArrayView1<S>) -> Array2<S> {
    let n = u.len();
    let m = v.len();
    Array2::from_shape_fn((n, m), |(i, j)| u[i] * v[j])
}
