//! Wishart sampling in the exponent/rate parametrization.

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::linalg::{cholesky, chol_inverse};
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Parameters of the Wishart density
/// `f(x) ∝ |x|^{q-(n+1)/2} exp(-Tr(c x))` on SPD matrices.
///
/// This maps onto the classical degrees-of-freedom/scale form as
/// `dof = 2q`, `scale = (2c)^{-1}`, so `E[X] = q c^{-1}`.
#[derive(Clone, Debug)]
pub struct WishartParams<S: Scalar> {
    q: S,
    c: Array2<S>,
}

impl<S: Scalar> WishartParams<S> {
    pub fn new(q: S, c: Array2<S>) -> Result<Self> {
        let n = c.nrows();
        if c.ncols() != n || n == 0 {
            return Err(Error::Dimension(format!(
                "Wishart rate matrix must be square and non-empty, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        let min_q = S::from_count(n - 1) * S::c(0.5);
        if !(q > min_q) || !q.is_finite() {
            return Err(Error::Domain(format!(
                "Wishart exponent must satisfy q > (n-1)/2 = {min_q}, got {q}"
            )));
        }
        cholesky(&c.view()).map_err(|_| {
            Error::NotPositiveDefinite("Wishart rate matrix".into())
        })?;
        Ok(Self { q, c })
    }

    pub fn q(&self) -> S {
        self.q
    }

    pub fn c(&self) -> &Array2<S> {
        &self.c
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }
}

/// Bartlett-decomposition draw from [`WishartParams`].
pub fn sample_wishart<S: Scalar, R: Rng + ?Sized>(
    params: &WishartParams<S>,
    rng: &mut R,
) -> Result<Array2<S>> {
    let two = S::c(2.0);
    // scale = (2c)^{-1}
    let two_c = params.c.mapv(|x| x * two);
    let scale = chol_inverse(&cholesky(&two_c.view())?.view());
    let l = cholesky(&scale.view())?;
    sample_wishart_bartlett(params.q, &l.view(), rng)
}

/// Bartlett draw given the Cholesky factor of the classical scale matrix;
/// `dof = 2q`.
fn sample_wishart_bartlett<S: Scalar, R: Rng + ?Sized>(
    q: S,
    scale_chol: &ArrayView2<S>,
    rng: &mut R,
) -> Result<Array2<S>> {
    let n = scale_chol.nrows();
    let mut a = Array2::<S>::zeros((n, n));
    for i in 0..n {
        // chi-square with 2q - i degrees of freedom
        let shape = q - S::from_count(i) * S::c(0.5);
        let draw = S::gamma_with_scale(shape, S::c(2.0), rng);
        a[[i, i]] = draw.sqrt();
        for j in 0..i {
            a[[i, j]] = S::std_normal(rng);
        }
    }
    let la = scale_chol.dot(&a);
    Ok(la.dot(&la.t()))
}
