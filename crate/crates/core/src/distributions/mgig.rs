//! Matrix generalized inverse Gaussian sampling.
//!
//! The target here is the conditional posterior family of the mixture's
//! scale matrices: a matrix-GIG whose linear coefficient has rank one. The
//! Matsumoto-Yor property turns one univariate GIG draw plus one Wishart
//! draw into an exact matrix-GIG draw:
//!
//! 1. `X ~ GIG(-p, chi = b, psi = z' a z)` with `p = q + (1 - d)/2`,
//! 2. `W ~ Wishart` with density `|w|^{q-(d+1)/2} exp(-Tr(a w)/2)`,
//! 3. `(z X z' + W)^{-1}` follows the target.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::linalg::{cholesky, chol_inverse, chol_logdet, outer, quad_form_inv, symmetrize};
use crate::scalar::Scalar;
use crate::{Error, Result};

use super::{sample_gig, sample_wishart, GigParams, WishartParams, GIG_COLD_STEPS};

/// Parameters of the matrix-GIG density in the half-exponent convention:
///
/// `f(x) ∝ |x|^{-p-(n+1)/2} exp(-Tr(b x)/2 - Tr(a x^{-1})/2)` on SPD `x`,
///
/// with `a` symmetric positive definite and `b` symmetric positive
/// semidefinite (rank one in the posterior family). At `n = 1` this is the
/// univariate `GIG(-p, chi = a, psi = b)` with literally matching
/// parameters.
#[derive(Clone, Debug)]
pub struct MgigParams<S: Scalar> {
    p: S,
    b: Array2<S>,
    a: Array2<S>,
}

impl<S: Scalar> MgigParams<S> {
    pub fn new(p: S, b: Array2<S>, a: Array2<S>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || b.ncols() != n || n == 0 {
            return Err(Error::Dimension(
                "matrix-GIG coefficients must be square matrices of equal size".into(),
            ));
        }
        cholesky(&a.view())
            .map_err(|_| Error::NotPositiveDefinite("matrix-GIG inverse-side coefficient".into()))?;
        Ok(Self { p, b, a })
    }

    pub fn p(&self) -> S {
        self.p
    }

    pub fn b(&self) -> &Array2<S> {
        &self.b
    }

    pub fn a(&self) -> &Array2<S> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Unnormalized log-density of [`MgigParams`] at an SPD `x`.
pub fn mgig_log_unnorm_density<S: Scalar>(
    params: &MgigParams<S>,
    x: &ArrayView2<S>,
) -> Result<S> {
    let n = params.dim();
    if x.nrows() != n || x.ncols() != n {
        return Err(Error::Dimension("matrix-GIG density dimension mismatch".into()));
    }
    let l = cholesky(x)?;
    let logdet = chol_logdet(&l.view());
    let x_inv = chol_inverse(&l.view());
    let half = S::c(0.5);
    let tr_bx: S = params.b.dot(x).diag().iter().copied().sum();
    let tr_ax_inv: S = params.a.dot(&x_inv).diag().iter().copied().sum();
    let exponent = -(params.p + S::from_count(n + 1) * half);
    Ok(exponent * logdet - half * tr_bx - half * tr_ax_inv)
}

/// Draw from the rank-one matrix-GIG
/// `f(x) ∝ |x|^{-q-(d+1)/2} exp(-Tr(z b z' x)/2 - Tr(a x^{-1})/2)`.
///
/// `z` must be non-zero and `a` SPD; `q > (d-1)/2` so the embedded Wishart
/// draw is proper. When the rank-one coefficient vanishes (`z = 0` would be
/// forbidden, but `b_scalar = 0` arises for empty mixture components) the
/// linear trace factor degenerates to one and the target is exactly the
/// inverse of a Wishart draw, which is the branch taken.
pub fn sample_mgig<S: Scalar, R: Rng + ?Sized>(
    q: S,
    z: &ArrayView1<S>,
    b_scalar: S,
    a: &ArrayView2<S>,
    rng: &mut R,
) -> Result<Array2<S>> {
    let d = z.len();
    if a.nrows() != d || a.ncols() != d || d == 0 {
        return Err(Error::Dimension(
            "matrix-GIG draw needs a d-vector z and a d x d matrix a".into(),
        ));
    }
    if !(b_scalar >= S::zero()) || !b_scalar.is_finite() {
        return Err(Error::Domain(format!(
            "matrix-GIG rank-one weight must be non-negative, got {b_scalar}"
        )));
    }
    let z_norm_sq: S = z.iter().map(|&v| v * v).sum();
    if !(z_norm_sq > S::zero()) {
        return Err(Error::Domain("matrix-GIG direction z must be non-zero".into()));
    }
    // Wishart part: density |w|^{q-(d+1)/2} exp(-Tr(a w)/2), i.e. rate a/2.
    let wishart = WishartParams::new(q, a.mapv(|v| v * S::c(0.5)))?;
    let w = sample_wishart(&wishart, rng)?;

    if b_scalar == S::zero() {
        // Inverse-Wishart limit: no GIG factor remains.
        let mut inv = chol_inverse(&cholesky(&w.view())?.view());
        symmetrize(&mut inv);
        return Ok(inv);
    }

    let a_chol = cholesky(a)?;
    let zaz: S = {
        // z' a z
        let az = a.dot(z);
        z.iter().zip(az.iter()).map(|(&u, &v)| u * v).sum()
    };
    debug_assert!(quad_form_inv(&a_chol.view(), z) > S::zero());
    let p = q + (S::one() - S::from_count(d)) * S::c(0.5);
    let gig = GigParams::new(-p, b_scalar, zaz)?;
    let x = sample_gig(&gig, rng, None, GIG_COLD_STEPS)?;

    let mut m = outer(z, z);
    m.mapv_inplace(|v| v * x);
    m += &w;
    let mut result = chol_inverse(&cholesky(&m.view())?.view());
    symmetrize(&mut result);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky;
    use crate::RngStream;
    use ndarray::array;

    #[test]
    fn draws_are_spd() {
        let mut rng = RngStream::new(51, 0);
        let z = array![1.0, 0.0];
        let a = ndarray::Array2::<f64>::eye(2);
        for _ in 0..10_000 {
            let x = sample_mgig(3.0, &z.view(), 1.0, &a.view(), &mut rng).unwrap();
            assert!(cholesky(&x.view()).is_ok());
            assert!((x[[0, 1]] - x[[1, 0]]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_direction_is_rejected() {
        let mut rng = RngStream::new(52, 0);
        let z = array![0.0, 0.0];
        let a = ndarray::Array2::<f64>::eye(2);
        assert!(sample_mgig(3.0, &z.view(), 1.0, &a.view(), &mut rng).is_err());
    }

    #[test]
    fn invalid_exponent_is_rejected() {
        let mut rng = RngStream::new(53, 0);
        let z = array![1.0, 0.0];
        let a = ndarray::Array2::<f64>::eye(2);
        assert!(sample_mgig(0.4, &z.view(), 1.0, &a.view(), &mut rng).is_err());
        let bad = array![[1.0, 2.0], [2.0, 1.0]];
        assert!(sample_mgig(3.0, &z.view(), 1.0, &bad.view(), &mut rng).is_err());
    }

    #[test]
    fn zero_rank_one_weight_takes_inverse_wishart_branch() {
        let mut rng = RngStream::new(54, 0);
        let z = array![1.0, 1.0];
        let a = array![[2.0, 0.3], [0.3, 1.0]];
        for _ in 0..1000 {
            let x = sample_mgig(4.0, &z.view(), 0.0, &a.view(), &mut rng).unwrap();
            assert!(cholesky(&x.view()).is_ok());
        }
    }

    #[test]
    fn density_dimension_check() {
        let p = MgigParams::new(2.0, ndarray::Array2::eye(2), ndarray::Array2::eye(2)).unwrap();
        let x3 = ndarray::Array2::<f64>::eye(3);
        assert!(mgig_log_unnorm_density(&p, &x3.view()).is_err());
        let x2 = ndarray::Array2::<f64>::eye(2);
        assert!(mgig_log_unnorm_density(&p, &x2.view()).is_ok());
    }
}
