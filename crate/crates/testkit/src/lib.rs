//! Independent numerical oracles used by the `mnig` test suites.
//!
//! Everything here deliberately avoids the code paths it is meant to
//! check: the Bessel oracle integrates the defining integral by
//! trapezoidal quadrature, the GIG oracle is a ratio-of-uniforms rejection
//! sampler, and the distribution comparisons are plain empirical
//! statistics. This crate is a dev-dependency only and never ships with
//! the library.

use rand::Rng;

/// Scaled modified Bessel function of the third kind,
/// `e^x K_nu(x) = ∫_0^∞ e^{-x (cosh t - 1)} cosh(nu t) dt`,
/// by trapezoidal quadrature with step halving.
///
/// The integrand is analytic and decays double-exponentially, so the
/// trapezoid rule converges geometrically; accuracy is ~1e-11 relative
/// over the tested domain.
pub fn bessel_k_scaled_quadrature(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0 && nu.is_finite());
    let nu = nu.abs();
    // Truncation point: e^{-x(cosh t - 1)} cosh(nu t) below ~1e-20 of peak.
    let mut t_max = 1.0f64;
    while x * (t_max.cosh() - 1.0) - nu * t_max < 60.0 && t_max < 120.0 {
        t_max += 0.5;
    }
    let integrand = |t: f64| (-x * (t.cosh() - 1.0)).exp() * (nu * t).cosh();
    let mut h = t_max / 64.0;
    let mut prev = trapezoid(integrand, t_max, h);
    for _ in 0..14 {
        h *= 0.5;
        let cur = trapezoid(integrand, t_max, h);
        if (cur - prev).abs() <= 1e-13 * cur.abs() {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Plain `K_nu(x)` from the quadrature oracle; underflows for large `x`.
pub fn bessel_k_quadrature(nu: f64, x: f64) -> f64 {
    bessel_k_scaled_quadrature(nu, x) * (-x).exp()
}

fn trapezoid(f: impl Fn(f64) -> f64, t_max: f64, h: f64) -> f64 {
    let n = (t_max / h).ceil() as usize;
    let mut sum = 0.5 * (f(0.0) + f(t_max));
    for i in 1..n {
        sum += f(i as f64 * h);
    }
    sum * h
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let whole = simpson(f, a, b);
    adaptive(f, a, b, whole, rel_tol, 40)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, rel_tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, m);
    let right = simpson(f, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * rel_tol * (left + right).abs().max(1e-300) {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, left, rel_tol, depth - 1) + adaptive(f, m, b, right, rel_tol, depth - 1)
}

/// Exact rejection sampler for `GIG(lambda, chi, psi)` (density
/// `∝ x^{lambda-1} e^{-(chi/x + psi x)/2}`) by ratio of uniforms.
///
/// Entirely independent of the Markov-chain sampler in the main crate; it
/// serves as the ground-truth draw for stationarity checks.
pub fn gig_rejection_sample<R: Rng + ?Sized>(lambda: f64, chi: f64, psi: f64, rng: &mut R) -> f64 {
    assert!(chi > 0.0 && psi > 0.0);
    let log_f = |x: f64| (lambda - 1.0) * x.ln() - 0.5 * (chi / x + psi * x);
    // Mode of f and of x^2 f(x), both closed-form.
    let mode = ((lambda - 1.0) + ((lambda - 1.0).powi(2) + chi * psi).sqrt()) / psi;
    let mode2 = ((lambda + 1.0) + ((lambda + 1.0).powi(2) + chi * psi).sqrt()) / psi;
    let log_sqrt_f_max = 0.5 * log_f(mode);
    let log_v_max = mode2.ln() + 0.5 * log_f(mode2);
    loop {
        let u: f64 = rng.random::<f64>();
        let v: f64 = rng.random::<f64>();
        if u == 0.0 {
            continue;
        }
        // u in (0, sqrt(f_max)], v in (0, v_max]; x = v/u.
        let log_u = u.ln() + log_sqrt_f_max;
        let log_v = v.ln() + log_v_max;
        let x = (log_v - log_u).exp();
        if 2.0 * log_u <= log_f(x) {
            return x;
        }
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let xa = a[i];
        let xb = b[j];
        if xa <= xb {
            i += 1;
        }
        if xb <= xa {
            j += 1;
        }
        let diff = (i as f64 / n as f64 - j as f64 / m as f64).abs();
        if diff > d {
            d = diff;
        }
    }
    d
}

/// Asymptotic two-sample KS critical value at significance `alpha`
/// (supported: 0.01 and 0.05).
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = if (alpha - 0.01).abs() < 1e-12 {
        1.628
    } else {
        1.358
    };
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Natural log of the multivariate gamma function `Γ_d(a)`.
pub fn ln_multivariate_gamma(d: usize, a: f64) -> f64 {
    let mut acc = (d * (d - 1)) as f64 / 4.0 * std::f64::consts::PI.ln();
    for j in 0..d {
        acc += ln_gamma(a - j as f64 / 2.0);
    }
    acc
}

/// Lanczos log-gamma, local to the oracle crate.
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
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
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return pi.ln() - (pi * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.918_938_533_204_672_7 + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean of a transformed slice.
pub fn mean_by(xs: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    xs.iter().map(|&x| f(x)).sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|&x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    use super::*;

    #[test]
    fn quadrature_bessel_matches_closed_form() {
        // K_{1/2}(x) = sqrt(pi/(2x)) e^{-x}
        for &x in &[0.3, 1.0, 4.0] {
            let exact = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
            let got = bessel_k_quadrature(0.5, x);
            assert!(
                (got - exact).abs() / exact < 1e-10,
                "x={x}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn rejection_gig_matches_gamma_limit_shape() {
        // Large-psi, small-chi GIG is close to Gamma(lambda, psi/2) in mean.
        let mut rng = StdRng::seed_from_u64(1);
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| gig_rejection_sample(2.0, 1e-4, 2.0, &mut rng))
            .collect();
        let m = mean(&draws);
        assert!((m - 2.0).abs() < 0.05, "mean {m}");
    }

    #[test]
    fn ks_statistic_of_identical_samples_is_small() {
        let mut a: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        let mut b = a.clone();
        assert!(ks_statistic(&mut a, &mut b) < 1e-12);
    }

    #[test]
    fn ln_multivariate_gamma_reduces_to_scalar() {
        assert!((ln_multivariate_gamma(1, 3.0) - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn simpson_integrates_polynomial_exactly() {
        let val = integrate(&|x| x * x * x, 0.0, 2.0, 1e-12);
        assert!((val - 4.0).abs() < 1e-10);
    }
}

/// Reference mixture models used across the simulation-study test suites.
pub mod reference {
    use mnig::mnig::{MixtureModel, MnigComponent};
    use ndarray::{array, Array2};

    /// Two-dimensional two-component benchmark: equal weights, one skewed
    /// correlated component and one lighter near-symmetric component.
    pub fn two_component_model() -> MixtureModel<f64> {
        let c1 = MnigComponent::new(
            array![2.0, 5.0],
            array![0.5, 0.5],
            0.9,
            0.9,
            array![[2.0, -1.0], [-1.0, 1.0]],
        )
        .unwrap();
        let c2 = MnigComponent::new(
            array![-4.0, 3.0],
            array![-0.5, -0.1],
            1.2,
            1.2,
            Array2::eye(2),
        )
        .unwrap();
        MixtureModel::new(vec![0.5, 0.5], vec![c1, c2]).unwrap()
    }

    /// Four-dimensional three-component benchmark with weights
    /// (0.2, 0.4, 0.4): two skewed components and one symmetric.
    pub fn three_component_model() -> MixtureModel<f64> {
        let c1 = MnigComponent::new(
            array![9.0, -6.0, -5.0, 9.0],
            array![0.0, 0.0, -0.5, -0.5],
            0.6,
            0.6,
            Array2::eye(4),
        )
        .unwrap();
        let c2 = MnigComponent::new(
            array![5.0, 3.0, 0.0, -7.0],
            array![0.5, 0.5, 0.5, 0.5],
            0.9,
            0.9,
            array![
                [2.0, 0.0, 0.0, 1.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
                [1.0, 0.0, 0.0, 1.0]
            ],
        )
        .unwrap();
        let c3 = MnigComponent::new(
            array![-3.0, -2.0, 7.0, 3.0],
            array![0.0, 0.0, 0.0, 0.0],
            1.2,
            1.2,
            Array2::eye(4),
        )
        .unwrap();
        MixtureModel::new(vec![0.2, 0.4, 0.4], vec![c1, c2, c3]).unwrap()
    }
}
