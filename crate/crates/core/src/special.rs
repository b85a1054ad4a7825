//! Scalar special functions: the modified Bessel function of the third kind
//! `K_nu` for real order, the log-gamma function, and the standard-normal
//! cdf/quantile pair used by the truncated-normal sampler.
//!
//! `K_nu` is evaluated from Temme's series for `x <= 2` and a Steed
//! continued fraction for `x > 2`, both producing the scaled value
//! `e^x K_nu(x)` so that [`log_bessel_k`] stays finite far beyond the point
//! where the plain value underflows. Half-integer orders take an exact
//! finite-sum path. Relative accuracy is 1e-10 or better for
//! `x` in `[1e-6, 1e4]` at `f64`.

use crate::scalar::Scalar;
use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma<S: Scalar>(x: S) -> S {
    if x < S::c(0.5) {
        // Reflection; x in (0, 0.5) keeps sin(pi x) well away from zero.
        let pi = S::c(std::f64::consts::PI);
        return pi.ln() - (pi * x).sin().ln() - ln_gamma(S::one() - x);
    }
    let z = x - S::one();
    let mut acc = S::c(LANCZOS[0]);
    for (i, &coeff) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + S::c(coeff) / (z + S::from_count(i));
    }
    let t = z + S::c(LANCZOS_G) + S::c(0.5);
    let half_log_2pi = S::c(0.918_938_533_204_672_7);
    half_log_2pi + (z + S::c(0.5)) * t.ln() - t + acc.ln()
}

/// Modified Bessel function of the third kind, `K_nu(x)` for `x > 0`.
///
/// Symmetric in the order: `K_{-nu} = K_nu`. Underflows to zero for large
/// `x`; use [`log_bessel_k`] in log-space computations.
pub fn bessel_k<S: Scalar>(nu: S, x: S) -> Result<S> {
    let scaled = bessel_k_scaled(nu, x)?;
    Ok(scaled * (-x).exp())
}

/// `ln K_nu(x)`, finite wherever `ln K` is representable even when `K`
/// itself underflows (e.g. `x = 800`).
pub fn log_bessel_k<S: Scalar>(nu: S, x: S) -> Result<S> {
    let scaled = bessel_k_scaled(nu, x)?;
    Ok(scaled.ln() - x)
}

/// `e^x K_nu(x)`.
pub fn bessel_k_scaled<S: Scalar>(nu: S, x: S) -> Result<S> {
    if !nu.is_finite() || !x.is_finite() || x <= S::zero() {
        return Err(Error::Domain(format!(
            "bessel_k needs finite nu and x > 0, got nu={nu}, x={x}"
        )));
    }
    let nu = nu.abs();
    let two_nu = nu + nu;
    if two_nu == two_nu.round() {
        let m2 = two_nu.as_f64() as i64;
        if m2 % 2 == 1 {
            return Ok(half_integer_k_scaled((m2 / 2) as usize, x));
        }
    }
    Ok(general_k_scaled(nu, x))
}

/// Exact finite sum for `e^x K_{m+1/2}(x)`.
fn half_integer_k_scaled<S: Scalar>(m: usize, x: S) -> S {
    let pref = (S::c(std::f64::consts::PI) / (S::c(2.0) * x)).sqrt();
    let mut term = S::one();
    let mut sum = S::one();
    for k in 1..=m {
        let num = S::from_count(m + k) * S::from_count(m - k + 1);
        term = term * num / (S::from_count(k) * S::c(2.0) * x);
        sum = sum + term;
    }
    pref * sum
}

/// Temme series + continued fraction with upward recurrence, `nu >= 0`.
fn general_k_scaled<S: Scalar>(nu: S, x: S) -> S {
    let steps = (nu + S::c(0.5)).floor();
    let nl = steps.as_f64() as usize;
    let mu = nu - steps; // in [-1/2, 1/2)
    let (mut k_lo, mut k_hi) = if x <= S::c(2.0) {
        let (a, b) = temme_k_pair(mu, x);
        let scale = x.exp();
        (a * scale, b * scale)
    } else {
        steed_k_pair_scaled(mu, x)
    };
    let xi2 = S::c(2.0) / x;
    for i in 1..=nl {
        let next = (mu + S::from_count(i)) * xi2 * k_hi + k_lo;
        k_lo = k_hi;
        k_hi = next;
    }
    k_lo
}

/// `(K_mu, K_{mu+1})` unscaled, for `x <= 2` and `|mu| <= 1/2`.
fn temme_k_pair<S: Scalar>(mu: S, x: S) -> (S, S) {
    let eps = S::epsilon();
    let pi = S::c(std::f64::consts::PI);
    let half = S::c(0.5);
    let x1 = x * half;
    let d = -(x1.ln());
    let pimu = pi * mu;
    let fact = if pimu.abs() < eps {
        S::one()
    } else {
        pimu / pimu.sin()
    };
    let e = mu * d;
    let fact2 = if e.abs() < eps { S::one() } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = gamma_temme(mu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = half * ee / gampl;
    let mut q = half / (ee * gammi);
    let mut c = S::one();
    let d2 = x1 * x1;
    let mut sum1 = p;
    for i in 1..=200 {
        let fi = S::from_count(i);
        ff = (fi * ff + p + q) / (fi * fi - mu * mu);
        c = c * d2 / fi;
        p = p / (fi - mu);
        q = q / (fi + mu);
        let del = c * ff;
        sum = sum + del;
        let del1 = c * (p - fi * ff);
        sum1 = sum1 + del1;
        if del.abs() < sum.abs() * eps {
            break;
        }
    }
    (sum, sum1 * S::c(2.0) / x)
}

/// `(e^x K_mu, e^x K_{mu+1})` via Steed's continued fraction, `x > 2`.
fn steed_k_pair_scaled<S: Scalar>(mu: S, x: S) -> (S, S) {
    let eps = S::epsilon();
    let one = S::one();
    let two = S::c(2.0);
    let mu2 = mu * mu;
    let mut b = two * (one + x);
    let mut d = one / b;
    let mut delh = d;
    let mut h = delh;
    let mut q1 = S::zero();
    let mut q2 = one;
    let a1 = S::c(0.25) - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;
    for i in 2..=10_000usize {
        let fi = S::from_count(i);
        a = a - two * (fi - one);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q = q + c * qnew;
        b = b + two;
        d = one / (b + a * d);
        delh = (b * d - one) * delh;
        h = h + delh;
        let dels = q * delh;
        s = s + dels;
        if (dels / s).abs() < eps {
            break;
        }
    }
    h = a1 * h;
    let pref = (S::c(std::f64::consts::PI) / (two * x)).sqrt();
    let k_mu = pref / s;
    let k_mu1 = k_mu * (mu + x + S::c(0.5) - h) / x;
    (k_mu, k_mu1)
}

// Taylor coefficients of 1/Gamma(1+z) around zero, odd indices.
const INV_GAMMA_ODD: [f64; 7] = [
    0.577_215_664_901_532_9,
    -0.042_002_635_034_095_24,
    -0.042_197_734_555_544_34,
    0.007_218_943_246_663_1,
    -0.000_215_241_674_114_951,
    -2.013_485_478_078_824e-5,
    1.133_027_231_981_696e-6,
];

/// Temme's gamma combinations for `|mu| <= 1/2`:
/// `gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu)`, `gam2 = (1/G(1-mu) + 1/G(1+mu)) / 2`,
/// plus `1/G(1+mu)` and `1/G(1-mu)`.
fn gamma_temme<S: Scalar>(mu: S) -> (S, S, S, S) {
    let one = S::one();
    let gampl = (-ln_gamma(one + mu)).exp();
    let gammi = (-ln_gamma(one - mu)).exp();
    let gam2 = (gammi + gampl) * S::c(0.5);
    let gam1 = if mu.abs() < S::c(0.3) {
        // The direct difference cancels as mu -> 0; use the odd Taylor
        // coefficients of 1/Gamma(1+z) instead.
        let m2 = mu * mu;
        let mut acc = S::zero();
        for &coeff in INV_GAMMA_ODD.iter().rev() {
            acc = acc * m2 + S::c(coeff);
        }
        -acc
    } else {
        (gammi - gampl) / (S::c(2.0) * mu)
    };
    (gam1, gam2, gampl, gammi)
}

/// Complementary error function, full relative accuracy on both tails.
pub fn erfc<S: Scalar>(x: S) -> S {
    if x < S::zero() {
        return S::c(2.0) - erfc(-x);
    }
    if x < S::c(2.0) {
        S::one() - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

fn erf_series<S: Scalar>(x: S) -> S {
    let eps = S::epsilon();
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..=200usize {
        let fnn = S::from_count(n);
        term = term * (-x2) / fnn;
        let del = term / (S::c(2.0) * fnn + S::one());
        sum = sum + del;
        if del.abs() < sum.abs() * eps {
            break;
        }
    }
    sum * S::c(1.128_379_167_095_512_6) // 2/sqrt(pi)
}

fn erfc_continued_fraction<S: Scalar>(x: S) -> S {
    // erfc(x) = exp(-x^2)/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let eps = S::epsilon();
    let half = S::c(0.5);
    let mut f = x;
    let mut c = x;
    let mut d = S::zero();
    for n in 1..=300usize {
        let a = S::from_count(n) * half;
        d = x + a * d;
        d = S::one() / d;
        c = x + a / c;
        let delta = c * d;
        f = f * delta;
        if (delta - S::one()).abs() < eps {
            break;
        }
    }
    (-x * x).exp() * S::c(0.564_189_583_547_756_3) / f // 1/sqrt(pi)
}

/// Standard normal cumulative distribution function.
pub fn norm_cdf<S: Scalar>(z: S) -> S {
    let inv_sqrt2 = S::c(std::f64::consts::FRAC_1_SQRT_2);
    S::c(0.5) * erfc(-z * inv_sqrt2)
}

/// Standard normal density.
pub fn norm_pdf<S: Scalar>(z: S) -> S {
    S::c(0.398_942_280_401_432_7) * (-S::c(0.5) * z * z).exp()
}

const ACKLAM_A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const ACKLAM_B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const ACKLAM_C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const ACKLAM_D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];

/// Standard normal quantile for `p` in `(0, 1)`, refined to near machine
/// precision with one Halley step against [`norm_cdf`].
pub fn norm_quantile<S: Scalar>(p: S) -> Result<S> {
    if !(p > S::zero() && p < S::one()) {
        return Err(Error::Domain(format!(
            "norm_quantile needs p in (0,1), got {p}"
        )));
    }
    let p_low = S::c(0.02425);
    let one = S::one();
    let x = if p < p_low {
        let q = (S::c(-2.0) * p.ln()).sqrt();
        poly5(&ACKLAM_C, q) / (poly4(&ACKLAM_D, q) + one)
    } else if p <= one - p_low {
        let q = p - S::c(0.5);
        let r = q * q;
        q * poly5(&ACKLAM_A, r) / (poly5x(&ACKLAM_B, r) + one)
    } else {
        let q = (S::c(-2.0) * (one - p).ln()).sqrt();
        -(poly5(&ACKLAM_C, q) / (poly4(&ACKLAM_D, q) + one))
    };
    // One Halley refinement.
    let e = norm_cdf(x) - p;
    let u = e * S::c(2.506_628_274_631_000_5) * (S::c(0.5) * x * x).exp();
    Ok(x - u / (one + x * u * S::c(0.5)))
}

fn poly5<S: Scalar>(c: &[f64; 6], x: S) -> S {
    let mut acc = S::c(c[0]);
    for &v in &c[1..] {
        acc = acc * x + S::c(v);
    }
    acc
}

fn poly5x<S: Scalar>(c: &[f64; 5], x: S) -> S {
    // Denominator polynomial with an implicit trailing coefficient of zero:
    // b0 x^5 + ... + b4 x; the caller adds the constant one.
    let mut acc = S::c(c[0]);
    for &v in &c[1..] {
        acc = acc * x + S::c(v);
    }
    acc * x
}

fn poly4<S: Scalar>(c: &[f64; 4], x: S) -> S {
    let mut acc = S::c(c[0]);
    for &v in &c[1..] {
        acc = acc * x + S::c(v);
    }
    acc * x
}
