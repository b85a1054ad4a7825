//! Sampler validation against independent oracles: the rejection sampler,
//! Bessel-ratio moments, quadrature normalization and importance-sampling
//! consistency.

use mnig::distributions::{
    gig_logpdf, gig_markov_step, gig_moment, mgig_log_unnorm_density, sample_gig, sample_mgig,
    sample_wishart, GigParams, MgigParams, WishartParams, GIG_COLD_STEPS,
};
use mnig::linalg::{cholesky, chol_inverse, chol_logdet};
use mnig::RngStream;
use mnig_testkit as oracle;
use ndarray::{array, Array2};

#[test]
fn chain_step_preserves_oracle_draws() {
    // Start 1e5 states at exact rejection-sampler draws of GIG(3/2, 1, 1)
    // and apply one chain step: the first two moments must not move.
    let params = GigParams::new(1.5, 1.0, 1.0).unwrap();
    let n = 100_000;
    let mut rng = RngStream::new(1001, 0);
    let before: Vec<f64> = (0..n)
        .map(|_| oracle::gig_rejection_sample(1.5, 1.0, 1.0, &mut rng))
        .collect();
    let after: Vec<f64> = before
        .iter()
        .map(|&x| gig_markov_step(x, &params, &mut rng).unwrap())
        .collect();

    let m1 = gig_moment(&params, 1).unwrap(); // exactly 3.5 at half-integer order
    assert!((oracle::mean(&before) - m1).abs() / m1 < 0.01);
    assert!((oracle::mean(&after) - m1).abs() / m1 < 0.01);

    // 3-sigma invariance of both moments.
    let se1 = (oracle::variance(&after) / n as f64).sqrt();
    assert!((oracle::mean(&after) - m1).abs() < 3.0 * se1);
    let m2 = gig_moment(&params, 2).unwrap();
    let after_sq: Vec<f64> = after.iter().map(|&x| x * x).collect();
    let se2 = (oracle::variance(&after_sq) / n as f64).sqrt();
    assert!((oracle::mean(&after_sq) - m2).abs() < 3.0 * se2);
}

#[test]
fn cold_start_moments_match_bessel_ratios() {
    let cases = [(1.5, 2.5, 1.3), (-1.0, 1.0, 1.0), (2.5, 0.7, 3.0)];
    let n = 60_000;
    let mut rng = RngStream::new(1002, 0);
    for &(lambda, chi, psi) in &cases {
        let params = GigParams::new(lambda, chi, psi).unwrap();
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_gig(&params, &mut rng, None, GIG_COLD_STEPS).unwrap())
            .collect();
        let m1 = gig_moment(&params, 1).unwrap();
        let m2 = gig_moment(&params, 2).unwrap();
        let e1 = oracle::mean(&draws);
        let e2 = oracle::mean_by(&draws, |x| x * x);
        assert!(
            (e1 - m1).abs() / m1 < 0.01,
            "lambda={lambda}: mean {e1} vs {m1}"
        );
        assert!(
            (e2 - m2).abs() / m2 < 0.015,
            "lambda={lambda}: m2 {e2} vs {m2}"
        );
    }
}

#[test]
fn chain_matches_rejection_oracle_by_ks() {
    let (lambda, chi, psi) = (2.0, 3.0, 5.0);
    let params = GigParams::new(lambda, chi, psi).unwrap();
    let n = 40_000;
    let mut rng = RngStream::new(1003, 0);
    let mut chain: Vec<f64> = (0..n)
        .map(|_| sample_gig(&params, &mut rng, None, GIG_COLD_STEPS).unwrap())
        .collect();
    let mut reject: Vec<f64> = (0..n)
        .map(|_| oracle::gig_rejection_sample(lambda, chi, psi, &mut rng))
        .collect();
    let d = oracle::ks_statistic(&mut chain, &mut reject);
    let crit = oracle::ks_critical(0.01, n, n);
    assert!(d < crit, "KS {d:.5} >= {crit:.5}");
}

#[test]
fn reciprocal_draws_match_swapped_parameters() {
    // 1/X under GIG(2, 3, 5) is GIG(-2, 5, 3); compare against the
    // rejection oracle of the latter by KS and by the moment formula.
    let n = 50_000;
    let mut rng = RngStream::new(1004, 0);
    let params: GigParams<f64> = GigParams::new(2.0, 3.0, 5.0).unwrap();
    let mut recip: Vec<f64> = (0..n)
        .map(|_| sample_gig(&params, &mut rng, None, GIG_COLD_STEPS).unwrap().recip())
        .collect();
    let mut target: Vec<f64> = (0..n)
        .map(|_| oracle::gig_rejection_sample(-2.0, 5.0, 3.0, &mut rng))
        .collect();
    let d = oracle::ks_statistic(&mut recip, &mut target);
    assert!(d < oracle::ks_critical(0.01, n, n));
    let m1 = gig_moment(&GigParams::new(-2.0, 5.0, 3.0).unwrap(), 1).unwrap();
    assert!((oracle::mean(&recip) - m1).abs() / m1 < 0.01);
}

#[test]
fn gig_density_normalizes_by_quadrature() {
    // lambda = 1, chi = 4, psi = 9.
    let params = GigParams::new(1.0, 4.0, 9.0).unwrap();
    let pdf = |x: f64| gig_logpdf(&params, x).unwrap().exp();
    let total = oracle::integrate(&pdf, 1e-9, 60.0, 1e-10);
    assert!((total - 1.0).abs() < 1e-6, "integral {total}");

    // A negative-order case as well.
    let neg = GigParams::new(-1.5, 2.0, 0.8).unwrap();
    let pdf_neg = |x: f64| gig_logpdf(&neg, x).unwrap().exp();
    let total_neg = oracle::integrate(&pdf_neg, 1e-9, 400.0, 1e-10);
    assert!((total_neg - 1.0).abs() < 1e-6, "integral {total_neg}");
}

#[test]
fn mgig_one_dimensional_reduction_matches_gig() {
    // d=1, z=1, a=3, b=5, q=2 targets GIG(-2, chi=3, psi=5).
    let n = 60_000;
    let mut rng = RngStream::new(1005, 0);
    let z = array![1.0];
    let a = array![[3.0]];
    let mut draws: Vec<f64> = (0..n)
        .map(|_| sample_mgig(2.0, &z.view(), 5.0, &a.view(), &mut rng).unwrap()[[0, 0]])
        .collect();
    let target = GigParams::new(-2.0, 3.0, 5.0).unwrap();
    let m1 = gig_moment(&target, 1).unwrap();
    let m2 = gig_moment(&target, 2).unwrap();
    assert!((oracle::mean(&draws) - m1).abs() / m1 < 0.01);
    assert!((oracle::mean_by(&draws, |x| x * x) - m2).abs() / m2 < 0.015);

    let mut reject: Vec<f64> = (0..n)
        .map(|_| oracle::gig_rejection_sample(-2.0, 3.0, 5.0, &mut rng))
        .collect();
    let d = oracle::ks_statistic(&mut draws, &mut reject);
    assert!(d < oracle::ks_critical(0.01, n, n));
}

/// Inverse-Wishart reference draw matched to the inverse-side coefficient
/// of the matrix-GIG target: `X = W^{-1}`, `W` Wishart with rate `a/2`.
fn inverse_wishart_reference(
    q: f64,
    a: &Array2<f64>,
    rng: &mut RngStream,
) -> Array2<f64> {
    let params = WishartParams::new(q, a.mapv(|v| v * 0.5)).unwrap();
    let w = sample_wishart(&params, rng).unwrap();
    chol_inverse(&cholesky(&w.view()).unwrap().view())
}

#[test]
fn mgig_mean_matches_importance_sampling_oracle() {
    // d=2, z=(1,0), a=I, b=1, q=3; oracle mean from self-normalized
    // importance sampling with the matched inverse-Wishart proposal.
    let q = 3.0;
    let z = array![1.0, 0.0];
    let b = 1.0;
    let a: Array2<f64> = Array2::eye(2);
    let n = 30_000;

    let mut rng = RngStream::new(1006, 0);
    let mut mean = Array2::<f64>::zeros((2, 2));
    for _ in 0..n {
        mean += &sample_mgig(q, &z.view(), b, &a.view(), &mut rng).unwrap();
    }
    mean /= n as f64;

    let mut rng_is = RngStream::new(1007, 0);
    let mut wsum = 0.0;
    let mut wmean = Array2::<f64>::zeros((2, 2));
    for _ in 0..4 * n {
        let x = inverse_wishart_reference(q, &a, &mut rng_is);
        let t = 0.5 * b * x[[0, 0]]; // (1/2) tr(z b z' x)
        let w = (-t).exp();
        wsum += w;
        wmean.scaled_add(w, &x);
    }
    wmean /= wsum;

    let num: f64 = (&mean - &wmean).iter().map(|v| v * v).sum();
    let den: f64 = wmean.iter().map(|v| v * v).sum();
    let rel = (num / den).sqrt();
    assert!(rel < 0.02, "Frobenius-relative gap {rel:.4}");
}

#[test]
fn mgig_density_importance_sampling_consistency() {
    // Let T(x) = tr(z b z' x)/2 so the unnormalized target and the matched
    // inverse-Wishart reference differ exactly by e^{-T}. With a cutoff c:
    //   A = E_sampler[e^T 1{T<=c}] -> (Z_iw/Z_mgig) P_iw(T<=c)
    //   B = E_iw[e^{-T}]           -> Z_mgig/Z_iw
    //   C = E_iw[1{T<=c}]          -> P_iw(T<=c)
    // so A*B - C must vanish within Monte Carlo error.
    let q = 3.0;
    let z = array![1.0, 0.5];
    let b = 0.8;
    let a = array![[1.0, 0.2], [0.2, 1.5]];
    let zbz = {
        let mut m = Array2::<f64>::zeros((2, 2));
        for i in 0..2 {
            for j in 0..2 {
                m[[i, j]] = z[i] * b * z[j];
            }
        }
        m
    };
    let mgig = MgigParams::new(q, zbz.clone(), a.clone()).unwrap();
    let d = 2.0;
    let iw_log_unnorm = |x: &Array2<f64>| {
        let l = cholesky(&x.view()).unwrap();
        let tr_ax_inv: f64 = a
            .dot(&chol_inverse(&l.view()))
            .diag()
            .iter()
            .sum();
        -(q + (d + 1.0) / 2.0) * chol_logdet(&l.view()) - 0.5 * tr_ax_inv
    };
    let t_stat = |x: &Array2<f64>| 0.5 * zbz.dot(x).diag().iter().sum::<f64>();
    // Cutoff at the mean of T under the reference: E[X] = a/(2q - d - 1).
    let c = 0.5 * (zbz[[0, 0]] * a[[0, 0]] + 2.0 * zbz[[0, 1]] * a[[0, 1]] + zbz[[1, 1]] * a[[1, 1]])
        / (2.0 * q - d - 1.0);

    let batches = 20;
    let per_batch = 4000;
    let mut products = Vec::with_capacity(batches);
    for r in 0..batches {
        let mut rng_s = RngStream::new(1008, r as u64);
        let mut rng_r = RngStream::new(1009, r as u64);
        let mut a_est = 0.0;
        for _ in 0..per_batch {
            let x = sample_mgig(q, &z.view(), b, &a.view(), &mut rng_s).unwrap();
            // Weight through the unnormalized densities themselves.
            let lw = iw_log_unnorm(&x) - mgig_log_unnorm_density(&mgig, &x.view()).unwrap();
            let t = t_stat(&x);
            if t <= c {
                a_est += lw.exp();
            }
        }
        a_est /= per_batch as f64;
        let mut b_est = 0.0;
        let mut c_est = 0.0;
        for _ in 0..per_batch {
            let x = inverse_wishart_reference(q, &a, &mut rng_r);
            let t = t_stat(&x);
            b_est += (-t).exp();
            if t <= c {
                c_est += 1.0;
            }
        }
        b_est /= per_batch as f64;
        c_est /= per_batch as f64;
        products.push(a_est * b_est - c_est);
    }
    let m = oracle::mean(&products);
    let se = (oracle::variance(&products) / batches as f64).sqrt();
    assert!(
        m.abs() < 3.0 * se,
        "consistency defect {m:.5} exceeds 3 x {se:.5}"
    );
}

#[test]
fn samplers_are_deterministic_functions_of_the_stream() {
    let params = GigParams::new(1.7, 0.9, 2.2).unwrap();
    let a = array![[1.0, 0.1], [0.1, 2.0]];
    let z = array![0.3, -0.8];
    let draw = |seed: u64| {
        let mut rng = RngStream::new(seed, 9);
        let g = sample_gig(&params, &mut rng, None, 50).unwrap();
        let m = sample_mgig(4.0, &z.view(), 1.3, &a.view(), &mut rng).unwrap();
        let w = sample_wishart(&WishartParams::new(3.0, a.clone()).unwrap(), &mut rng).unwrap();
        (g, m, w)
    };
    let (g1, m1, w1) = draw(500);
    let (g2, m2, w2) = draw(500);
    assert_eq!(g1, g2);
    assert_eq!(m1, m2);
    assert_eq!(w1, w2);
    let (g3, _, _) = draw(501);
    assert_ne!(g1, g3);
}
