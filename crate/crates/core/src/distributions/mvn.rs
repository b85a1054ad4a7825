//! Multivariate normal sampling through the Cholesky factor.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rand::Rng;

use crate::linalg::cholesky;
use crate::scalar::Scalar;
use crate::Result;

/// Draw from `N(mean, cov)`; fails when `cov` is not symmetric positive
/// definite.
pub fn sample_mvn<S: Scalar, R: Rng + ?Sized>(
    mean: &ArrayView1<S>,
    cov: &ArrayView2<S>,
    rng: &mut R,
) -> Result<Array1<S>> {
    let l = cholesky(cov)?;
    Ok(sample_mvn_chol(mean, &l.view(), rng))
}

/// Draw from `N(mean, L L^T)` given the lower Cholesky factor `L`.
pub fn sample_mvn_chol<S: Scalar, R: Rng + ?Sized>(
    mean: &ArrayView1<S>,
    l: &ArrayView2<S>,
    rng: &mut R,
) -> Array1<S> {
    let d = mean.len();
    let eps = Array1::from_shape_fn(d, |_| S::std_normal(rng));
    let mut out = l.dot(&eps);
    out += mean;
    out
}
