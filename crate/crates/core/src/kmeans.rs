//! Seeded k-means used to initialize the Gibbs chains.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::mnig::sample_categorical;
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Lloyd's algorithm with k-means++ seeding and random restarts; returns
/// the labeling with the lowest inertia. Restarts that end with an empty
/// cluster are discarded.
pub fn kmeans<S: Scalar, R: Rng + ?Sized>(
    data: &ArrayView2<S>,
    k: usize,
    rng: &mut R,
    n_restarts: usize,
    max_iter: usize,
) -> Result<Vec<usize>> {
    let n = data.nrows();
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "k-means needs 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut best: Option<(S, Vec<usize>)> = None;
    for _ in 0..n_restarts.max(1) {
        let Some((inertia, labels)) = lloyd(data, k, rng, max_iter) else {
            continue;
        };
        if best.as_ref().map_or(true, |(bi, _)| inertia < *bi) {
            best = Some((inertia, labels));
        }
    }
    best.map(|(_, labels)| labels)
        .ok_or_else(|| Error::Init("every k-means restart produced an empty cluster".into()))
}

fn lloyd<S: Scalar, R: Rng + ?Sized>(
    data: &ArrayView2<S>,
    k: usize,
    rng: &mut R,
    max_iter: usize,
) -> Option<(S, Vec<usize>)> {
    let n = data.nrows();
    let d = data.ncols();
    let mut centroids = plus_plus_seed(data, k, rng);
    let mut labels = vec![0usize; n];
    for _ in 0..max_iter {
        let mut changed = false;
        for i in 0..n {
            let (l, _) = nearest(&data.row(i), &centroids.view());
            if labels[i] != l {
                labels[i] = l;
                changed = true;
            }
        }
        let mut counts = vec![0usize; k];
        let mut sums = Array2::<S>::zeros((k, d));
        for i in 0..n {
            counts[labels[i]] += 1;
            for a in 0..d {
                sums[[labels[i], a]] += data[[i, a]];
            }
        }
        if counts.iter().any(|&c| c == 0) {
            return None;
        }
        for c in 0..k {
            let w = S::from_count(counts[c]).recip();
            for a in 0..d {
                centroids[[c, a]] = sums[[c, a]] * w;
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = (0..n)
        .map(|i| nearest(&data.row(i), &centroids.view()).1)
        .sum();
    Some((inertia, labels))
}

fn plus_plus_seed<S: Scalar, R: Rng + ?Sized>(
    data: &ArrayView2<S>,
    k: usize,
    rng: &mut R,
) -> Array2<S> {
    let n = data.nrows();
    let d = data.ncols();
    let mut centroids = Array2::<S>::zeros((k, d));
    let first = (S::uniform01(rng) * S::from_count(n)).to_usize().unwrap_or(0).min(n - 1);
    centroids.row_mut(0).assign(&data.row(first));
    let mut dist_sq = vec![S::zero(); n];
    for c in 1..k {
        let mut total = S::zero();
        for i in 0..n {
            let (_, best) = nearest(&data.row(i), &centroids.slice(ndarray::s![0..c, ..]));
            dist_sq[i] = best;
            total += best;
        }
        let idx = if total > S::zero() {
            let probs: Vec<S> = dist_sq.iter().map(|&v| v / total).collect();
            sample_categorical(&probs, rng)
        } else {
            // All points coincide with an existing centroid.
            (S::uniform01(rng) * S::from_count(n)).to_usize().unwrap_or(0).min(n - 1)
        };
        centroids.row_mut(c).assign(&data.row(idx));
    }
    centroids
}

fn nearest<S: Scalar>(point: &ArrayView1<S>, centroids: &ArrayView2<S>) -> (usize, S) {
    let mut best = (0usize, S::infinity());
    for (c, row) in centroids.outer_iter().enumerate() {
        let mut dist = S::zero();
        for (a, &x) in point.iter().enumerate() {
            let diff = x - row[a];
            dist += diff * diff;
        }
        if dist < best.1 {
            best = (c, dist);
        }
    }
    best
}
