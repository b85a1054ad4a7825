//! Univariate samplers: gamma, Dirichlet, truncated normal and inverse
//! Gaussian.

use rand::Rng;

use crate::scalar::Scalar;
use crate::special::{norm_cdf, norm_pdf, norm_quantile};
use crate::{Error, Result};

/// Gamma draw in the shape/rate parametrization, density
/// `f(v) ∝ v^{shape-1} e^{-rate v}`.
pub fn sample_gamma<S: Scalar, R: Rng + ?Sized>(shape: S, rate: S, rng: &mut R) -> Result<S> {
    if !(shape > S::zero()) || !(rate > S::zero()) || !shape.is_finite() || !rate.is_finite() {
        return Err(Error::Domain(format!(
            "gamma needs shape > 0 and rate > 0, got shape={shape}, rate={rate}"
        )));
    }
    Ok(S::gamma_with_scale(shape, rate.recip(), rng))
}

/// Dirichlet draw; the result is non-negative and sums to one.
pub fn sample_dirichlet<S: Scalar, R: Rng + ?Sized>(
    concentrations: &[S],
    rng: &mut R,
) -> Result<Vec<S>> {
    if concentrations.is_empty() {
        return Err(Error::Domain("dirichlet needs at least one concentration".into()));
    }
    let mut draws = Vec::with_capacity(concentrations.len());
    for &a in concentrations {
        draws.push(sample_gamma(a, S::one(), rng)?);
    }
    let total: S = draws.iter().copied().sum();
    if !(total > S::zero()) {
        // All gamma draws underflowed; fall back to the mean direction.
        let total_conc: S = concentrations.iter().copied().sum();
        return Ok(concentrations.iter().map(|&a| a / total_conc).collect());
    }
    Ok(draws.into_iter().map(|g| g / total).collect())
}

/// Normal draw conditioned on being strictly positive.
///
/// Uses the inverse cdf for moderate truncation and switches to an
/// exponential-envelope rejection step once the truncation point sits more
/// than five standard deviations above the mean, where the cdf gap
/// underflows.
pub fn sample_truncated_normal_positive<S: Scalar, R: Rng + ?Sized>(
    mean: S,
    variance: S,
    rng: &mut R,
) -> Result<S> {
    if !(variance > S::zero()) || !variance.is_finite() || !mean.is_finite() {
        return Err(Error::Domain(format!(
            "truncated normal needs finite mean and variance > 0, got mean={mean}, variance={variance}"
        )));
    }
    let sd = variance.sqrt();
    let alpha = -mean / sd; // standardized truncation point
    let z = if alpha < S::c(5.0) {
        let lo = norm_cdf(alpha);
        let u = S::uniform01(rng);
        let p = lo + u * (S::one() - lo);
        // p == 1 cannot occur since u < 1 and lo < 1.
        norm_quantile(p)?
    } else {
        // Exponential-envelope rejection for the far tail.
        let lam = (alpha + (alpha * alpha + S::c(4.0)).sqrt()) * S::c(0.5);
        loop {
            let e: S = -(S::one() - S::uniform01(rng)).ln() / lam;
            let x = alpha + e;
            let diff = x - lam;
            let accept = (-(diff * diff) * S::c(0.5)).exp();
            if S::uniform01(rng) <= accept {
                break x;
            }
        }
    };
    let draw = mean + sd * z;
    // Guard against the inverse cdf rounding to exactly the boundary.
    Ok(if draw > S::zero() { draw } else { S::min_positive_value() })
}

/// Mean of the positive-truncated normal, `mean + sd φ(α)/(1-Φ(α))`.
pub fn truncated_normal_positive_mean<S: Scalar>(mean: S, variance: S) -> S {
    let sd = variance.sqrt();
    let alpha = -mean / sd;
    mean + sd * norm_pdf(alpha) / (S::one() - norm_cdf(alpha))
}

/// Inverse Gaussian draw with density
/// `f(u) = δ/√(2π) e^{δγ} u^{-3/2} exp(-(δ²/u + γ²u)/2)`,
/// i.e. mean `δ/γ` and shape `δ²`.
pub fn sample_inverse_gaussian<S: Scalar, R: Rng + ?Sized>(
    gamma: S,
    delta: S,
    rng: &mut R,
) -> Result<S> {
    if !(gamma > S::zero()) || !(delta > S::zero()) || !gamma.is_finite() || !delta.is_finite() {
        return Err(Error::Domain(format!(
            "inverse Gaussian needs gamma > 0 and delta > 0, got gamma={gamma}, delta={delta}"
        )));
    }
    // Michael-Schucany-Haas transformation.
    let m = delta / gamma;
    let lam = delta * delta;
    let n = S::std_normal(rng);
    let v = n * n;
    let half = S::c(0.5);
    let w = m + half * m * m * v / lam
        - half * m / lam * (S::c(4.0) * m * lam * v + m * m * v * v).sqrt();
    let u = S::uniform01(rng);
    Ok(if u <= m / (m + w) { w } else { m * m / w })
}

/// Log-density of the inverse Gaussian law above.
pub fn inverse_gaussian_logpdf<S: Scalar>(u: S, gamma: S, delta: S) -> Result<S> {
    if !(u > S::zero()) {
        return Err(Error::Domain(format!("inverse Gaussian density needs u > 0, got {u}")));
    }
    let half = S::c(0.5);
    let half_log_2pi = S::c(0.918_938_533_204_672_7);
    Ok(delta.ln() - half_log_2pi + delta * gamma
        - S::c(1.5) * u.ln()
        - half * (delta * delta / u + gamma * gamma * u))
}
