//! Model selection over a range of component counts, information criteria
//! and the adjusted Rand index.

use rayon::prelude::*;

use crate::gibbs::{fit, FitResult, GibbsConfig, PriorSpec};
use crate::mnig::Dataset;
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Number of free parameters of a G-component, d-dimensional mixture:
/// `G - 1` mixing weights plus, per component, `mu` and `beta` (2d),
/// `delta` and `gamma` (2), and the scale matrix with `d(d+1)/2` entries
/// minus one for the unit-determinant constraint.
pub fn count_free_params(n_components: usize, dim: usize) -> usize {
    (n_components - 1) + n_components * (2 * dim + 2 + dim * (dim + 1) / 2 - 1)
}

/// Bayesian information criterion `-2 loglik + k ln(n)`; smaller is better.
pub fn bic<S: Scalar>(loglik: S, n_params: usize, n: usize) -> S {
    S::c(-2.0) * loglik + S::from_count(n_params) * S::from_count(n).ln()
}

/// Akaike information criterion `-2 loglik + 2k`; smaller is better.
pub fn aic<S: Scalar>(loglik: S, n_params: usize) -> S {
    S::c(-2.0) * loglik + S::c(2.0) * S::from_count(n_params)
}

/// Adjusted Rand index outcome; `degenerate` marks the convention value
/// returned when the chance-adjusted denominator vanishes (both partitions
/// trivial).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AriOutcome {
    pub value: f64,
    pub degenerate: bool,
}

/// Hubert-Arabie adjusted Rand index between two labelings.
///
/// From the contingency table `n_ij`: with `S = Σ C(n_ij, 2)`,
/// `A = Σ_i C(a_i, 2)`, `B = Σ_j C(b_j, 2)`, `E = A B / C(n, 2)` and
/// `M = (A + B) / 2`, the index is `(S - E) / (M - E)`; 1 for identical
/// partitions, expectation 0 under chance. Degenerate denominators
/// (`M = E`) return 0 with the flag set.
pub fn adjusted_rand_index(labels_a: &[usize], labels_b: &[usize]) -> Result<AriOutcome> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::Dimension(format!(
            "label vectors of lengths {} and {}",
            labels_a.len(),
            labels_b.len()
        )));
    }
    let n = labels_a.len();
    if n < 2 {
        return Err(Error::Domain("ARI needs at least two observations".into()));
    }
    let (table, ka, kb) = contingency(labels_a, labels_b);
    let comb2 = |x: u128| x * x.saturating_sub(1) / 2;
    let mut s_pairs: u128 = 0;
    let mut row_sums = vec![0u128; ka];
    let mut col_sums = vec![0u128; kb];
    for i in 0..ka {
        for j in 0..kb {
            let c = table[i][j] as u128;
            s_pairs += comb2(c);
            row_sums[i] += c;
            col_sums[j] += c;
        }
    }
    let a: u128 = row_sums.iter().map(|&r| comb2(r)).sum();
    let b: u128 = col_sums.iter().map(|&c| comb2(c)).sum();
    let total_pairs = comb2(n as u128);
    // Degeneracy (M == E) checked exactly in integers:
    // (A + B)/2 == A B / total  <=>  total (A + B) == 2 A B.
    if total_pairs * (a + b) == 2 * a * b {
        return Ok(AriOutcome {
            value: 0.0,
            degenerate: true,
        });
    }
    let s = s_pairs as f64;
    let af = a as f64;
    let bf = b as f64;
    let e = af * bf / total_pairs as f64;
    let m = 0.5 * (af + bf);
    Ok(AriOutcome {
        value: (s - e) / (m - e),
        degenerate: false,
    })
}

/// Contingency table with labels remapped by first occurrence.
pub fn contingency(labels_a: &[usize], labels_b: &[usize]) -> (Vec<Vec<usize>>, usize, usize) {
    let map_a = first_occurrence_map(labels_a);
    let map_b = first_occurrence_map(labels_b);
    let ka = map_a.len();
    let kb = map_b.len();
    let mut table = vec![vec![0usize; kb]; ka];
    for (&la, &lb) in labels_a.iter().zip(labels_b) {
        let i = map_a.iter().position(|&v| v == la).unwrap();
        let j = map_b.iter().position(|&v| v == lb).unwrap();
        table[i][j] += 1;
    }
    (table, ka, kb)
}

fn first_occurrence_map(labels: &[usize]) -> Vec<usize> {
    let mut seen = Vec::new();
    for &l in labels {
        if !seen.contains(&l) {
            seen.push(l);
        }
    }
    seen
}

/// How a single fit in the selection sweep ended.
#[derive(Clone, Debug)]
pub enum FitStatus {
    Ok,
    NotConverged,
    Failed(String),
}

/// One row of the selection table.
#[derive(Clone, Debug)]
pub struct SelectionRow<S: Scalar> {
    pub n_components: usize,
    pub loglik: Option<S>,
    pub n_params: usize,
    pub bic: Option<S>,
    pub aic: Option<S>,
    pub psrf: Option<S>,
    pub status: FitStatus,
}

/// Selection sweep output: one row per candidate G plus the index of the
/// BIC-preferred row.
#[derive(Clone, Debug)]
pub struct SelectionTable<S: Scalar> {
    pub rows: Vec<SelectionRow<S>>,
    pub best_index: Option<usize>,
}

impl<S: Scalar> SelectionTable<S> {
    pub fn best_row(&self) -> Option<&SelectionRow<S>> {
        self.best_index.map(|i| &self.rows[i])
    }
}

/// Fits every G in `g_values`, fills the selection table and returns the
/// BIC-minimizing fit (ties broken toward smaller G).
///
/// Fits flagged as non-converged stay in the table but are excluded from
/// the argmin; if no fit converged, the argmin falls back to every
/// successful row. Fails only when every fit failed.
pub fn select_model<S: Scalar>(
    data: &Dataset<S>,
    g_values: &[usize],
    priors: &[PriorSpec<S>],
    config: &GibbsConfig<S>,
) -> Result<(SelectionTable<S>, FitResult<S>)> {
    if g_values.is_empty() || g_values.len() != priors.len() {
        return Err(Error::Dimension(
            "selection needs one prior per candidate component count".into(),
        ));
    }
    let n = data.n();
    let d = data.dim();
    let outcomes: Vec<Result<FitResult<S>>> = g_values
        .par_iter()
        .zip(priors.par_iter())
        .map(|(&g, prior)| fit(data, g, prior, config))
        .collect();

    let mut rows = Vec::with_capacity(g_values.len());
    let mut fits: Vec<Option<FitResult<S>>> = Vec::with_capacity(g_values.len());
    for (&g, outcome) in g_values.iter().zip(outcomes) {
        let k = count_free_params(g, d);
        match outcome {
            Ok(result) => {
                let loglik = result.max_posterior_loglik;
                let status = match result.convergence.converged() {
                    Some(false) => FitStatus::NotConverged,
                    _ => FitStatus::Ok,
                };
                rows.push(SelectionRow {
                    n_components: g,
                    loglik: Some(loglik),
                    n_params: k,
                    bic: Some(bic(loglik, k, n)),
                    aic: Some(aic(loglik, k)),
                    psrf: result.convergence.psrf(),
                    status,
                });
                fits.push(Some(result));
            }
            Err(e) => {
                rows.push(SelectionRow {
                    n_components: g,
                    loglik: None,
                    n_params: k,
                    bic: None,
                    aic: None,
                    psrf: None,
                    status: FitStatus::Failed(e.to_string()),
                });
                fits.push(None);
            }
        }
    }

    let argmin = |eligible: &dyn Fn(&SelectionRow<S>) -> bool| -> Option<usize> {
        let mut best: Option<(usize, S)> = None;
        for (i, row) in rows.iter().enumerate() {
            let Some(b) = row.bic else { continue };
            if !eligible(row) {
                continue;
            }
            if best.map_or(true, |(_, cur)| b < cur) {
                best = Some((i, b));
            }
        }
        best.map(|(i, _)| i)
    };
    let best_index = argmin(&|row| matches!(row.status, FitStatus::Ok))
        .or_else(|| argmin(&|row| !matches!(row.status, FitStatus::Failed(_))));

    let Some(best) = best_index else {
        let causes: Vec<String> = rows
            .iter()
            .filter_map(|r| match &r.status {
                FitStatus::Failed(e) => Some(format!("G={}: {e}", r.n_components)),
                _ => None,
            })
            .collect();
        return Err(Error::Fit(format!("every fit failed: {}", causes.join("; "))));
    };
    let best_fit = fits[best].take().expect("best row has a fit");
    Ok((SelectionTable { rows, best_index }, best_fit))
}
