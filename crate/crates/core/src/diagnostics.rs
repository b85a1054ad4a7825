//! Convergence assessment, burn-in, label-switching repair and posterior
//! summaries.
//!
//! Convergence is judged on the per-chain observed-data log-likelihood
//! traces with the Gelman-Rubin potential scale reduction factor; chains
//! are considered mixed when it falls below 1.1. Label switching is
//! repaired either by the mixing-proportion ordering constraint
//! ([`relabel_by_weights`]) or, where weight posteriors overlap, by
//! aligning every draw to a pivot partition ([`align_to_pivot`]).

use ndarray::Array2;

use crate::gibbs::Snapshot;
use crate::mnig::MixtureModel;
use crate::scalar::Scalar;
use crate::{Error, Result};

/// C chains by T iterations of one scalar statistic.
#[derive(Clone, Debug)]
pub struct TraceMatrix<S: Scalar> {
    values: Array2<S>,
}

impl<S: Scalar> TraceMatrix<S> {
    pub fn new(values: Array2<S>) -> Result<Self> {
        if values.nrows() < 2 || values.ncols() < 2 {
            return Err(Error::Dimension(format!(
                "PSRF needs at least 2 chains and 2 iterations, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("trace values must be finite".into()));
        }
        Ok(Self { values })
    }

    pub fn from_chains(chains: &[Vec<S>]) -> Result<Self> {
        if chains.is_empty() {
            return Err(Error::Dimension("no chains".into()));
        }
        let t = chains[0].len();
        if chains.iter().any(|c| c.len() != t) {
            return Err(Error::Dimension("chains must have equal length".into()));
        }
        let mut values = Array2::zeros((chains.len(), t));
        for (i, chain) in chains.iter().enumerate() {
            for (j, &v) in chain.iter().enumerate() {
                values[[i, j]] = v;
            }
        }
        Self::new(values)
    }

    pub fn n_chains(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_iterations(&self) -> usize {
        self.values.ncols()
    }
}

/// Potential scale reduction factor plus a degeneracy marker for
/// all-constant chains.
#[derive(Clone, Copy, Debug)]
pub struct Psrf<S: Scalar> {
    pub value: S,
    pub degenerate: bool,
}

/// Gelman-Rubin PSRF: with within-chain variance `W` and between-chain
/// variance `B`, returns `sqrt((((T-1)/T) W + B/T) / W)`.
///
/// All-constant chains (`W = 0`) return 1.0 with the degenerate flag set.
pub fn psrf<S: Scalar>(trace: &TraceMatrix<S>) -> Psrf<S> {
    let c = trace.n_chains();
    let t = trace.n_iterations();
    let tf = S::from_count(t);
    let mut means = Vec::with_capacity(c);
    let mut vars = Vec::with_capacity(c);
    for chain in trace.values.outer_iter() {
        let mean = chain.sum() / tf;
        let var = chain
            .iter()
            .map(|&x| (x - mean) * (x - mean))
            .sum::<S>()
            / S::from_count(t - 1);
        means.push(mean);
        vars.push(var);
    }
    let w: S = vars.iter().copied().sum::<S>() / S::from_count(c);
    let grand: S = means.iter().copied().sum::<S>() / S::from_count(c);
    let mean_var: S = means
        .iter()
        .map(|&m| (m - grand) * (m - grand))
        .sum::<S>()
        / S::from_count(c - 1);
    let b = tf * mean_var;
    if w == S::zero() {
        return Psrf {
            value: S::one(),
            degenerate: true,
        };
    }
    let pooled = (tf - S::one()) / tf * w + b / tf;
    Psrf {
        value: (pooled / w).sqrt(),
        degenerate: false,
    }
}

/// Drops the first `floor(len * fraction)` entries of a trace.
///
/// Errors when fewer than two entries would remain, which covers both the
/// empty case and a retained singleton that no downstream statistic can
/// use.
pub fn apply_burnin<T>(trace: &[T], fraction: f64) -> Result<&[T]> {
    if !(0.0..1.0).contains(&fraction) || fraction <= 0.0 {
        return Err(Error::Domain(format!(
            "burn-in fraction must lie in (0,1), got {fraction}"
        )));
    }
    let drop = (trace.len() as f64 * fraction).floor() as usize;
    let kept = trace.len().saturating_sub(drop);
    if kept < 2 {
        return Err(Error::Domain(format!(
            "burn-in over-truncation: {} of {} entries retained",
            kept,
            trace.len()
        )));
    }
    Ok(&trace[drop..])
}

/// Permutes each draw's components into ascending mixing-weight order
/// (ties broken by the first coordinate of `mu`, then by component index)
/// and renames membership labels consistently. Returns one permutation per
/// draw; entry `k` of a permutation is the old index now in position `k`.
pub fn relabel_by_weights<S: Scalar>(draws: &mut [Snapshot<S>]) -> Vec<Vec<usize>> {
    draws
        .iter_mut()
        .map(|snapshot| {
            let perm = weight_order(&snapshot.model);
            snapshot.apply_permutation(&perm);
            perm
        })
        .collect()
}

fn weight_order<S: Scalar>(model: &MixtureModel<S>) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..model.n_components()).collect();
    perm.sort_by(|&a, &b| {
        let wa = model.weights()[a];
        let wb = model.weights()[b];
        wa.partial_cmp(&wb)
            .unwrap()
            .then_with(|| {
                let ma = model.components()[a].mu()[0];
                let mb = model.components()[b].mu()[0];
                ma.partial_cmp(&mb).unwrap()
            })
            .then(a.cmp(&b))
    });
    perm
}

/// Aligns every draw's component labels to a pivot partition by minimizing
/// membership disagreement, then applies one global mixing-proportion
/// ordering (ascending pooled mean weight, ties by mean `mu[0]`, then
/// index) to all draws.
///
/// The per-draw weight sort of [`relabel_by_weights`] identifies components
/// only while the weight posteriors stay separated; when two true weights
/// coincide the sort flips labels draw to draw and pooled summaries smear
/// across components. Anchoring on the pivot keeps each slot coherent in
/// that regime and reduces to the plain weight ordering whenever weights do
/// separate.
pub fn align_to_pivot<S: Scalar>(draws: &mut [Snapshot<S>], pivot: &[u32]) -> Result<()> {
    if draws.is_empty() {
        return Err(Error::Domain("no draws to align".into()));
    }
    let g = draws[0].model.n_components();
    for snapshot in draws.iter_mut() {
        if snapshot.labels.len() != pivot.len() {
            return Err(Error::Dimension("pivot length must match labels".into()));
        }
        let perm = best_match_permutation(&snapshot.labels, pivot, g);
        snapshot.apply_permutation(&perm);
    }
    // Final deterministic slot order by pooled mean weight.
    let nf = S::from_count(draws.len());
    let mean_weights: Vec<S> = (0..g)
        .map(|k| draws.iter().map(|s| s.model.weights()[k]).sum::<S>() / nf)
        .collect();
    let mean_mu0: Vec<S> = (0..g)
        .map(|k| {
            draws
                .iter()
                .map(|s| s.model.components()[k].mu()[0])
                .sum::<S>()
                / nf
        })
        .collect();
    let mut order: Vec<usize> = (0..g).collect();
    order.sort_by(|&a, &b| {
        mean_weights[a]
            .partial_cmp(&mean_weights[b])
            .unwrap()
            .then_with(|| mean_mu0[a].partial_cmp(&mean_mu0[b]).unwrap())
            .then(a.cmp(&b))
    });
    if order.iter().enumerate().any(|(k, &o)| k != o) {
        for snapshot in draws.iter_mut() {
            snapshot.apply_permutation(&order);
        }
    }
    Ok(())
}

/// Permutation of this draw's component indices that best matches the
/// pivot labeling: exhaustive for small G, greedy confusion-matrix
/// assignment beyond that.
fn best_match_permutation(labels: &[u32], pivot: &[u32], g: usize) -> Vec<usize> {
    let mut confusion = vec![vec![0usize; g]; g]; // [draw label][pivot label]
    for (&l, &p) in labels.iter().zip(pivot) {
        confusion[l as usize][p as usize] += 1;
    }
    if g <= 6 {
        let mut best_perm: Vec<usize> = (0..g).collect();
        let mut best_score = 0usize;
        let mut perm: Vec<usize> = (0..g).collect();
        permute_search(&mut perm, 0, &confusion, &mut best_score, &mut best_perm);
        best_perm
    } else {
        greedy_assignment(&confusion, g)
    }
}

fn permute_search(
    perm: &mut Vec<usize>,
    k: usize,
    confusion: &[Vec<usize>],
    best_score: &mut usize,
    best_perm: &mut Vec<usize>,
) {
    let g = perm.len();
    if k == g {
        // perm[slot] = old draw label: score = agreement when old label
        // perm[slot] is renamed to slot.
        let score: usize = (0..g).map(|slot| confusion[perm[slot]][slot]).sum();
        if score > *best_score || (score == *best_score && perm < best_perm) {
            *best_score = score;
            best_perm.clone_from(perm);
        }
        return;
    }
    for i in k..g {
        perm.swap(k, i);
        permute_search(perm, k + 1, confusion, best_score, best_perm);
        perm.swap(k, i);
    }
}

fn greedy_assignment(confusion: &[Vec<usize>], g: usize) -> Vec<usize> {
    let mut perm = vec![usize::MAX; g];
    let mut used_old = vec![false; g];
    let mut used_slot = vec![false; g];
    for _ in 0..g {
        let mut best = (0usize, 0usize, 0usize);
        let mut found = false;
        for old in 0..g {
            if used_old[old] {
                continue;
            }
            for slot in 0..g {
                if used_slot[slot] {
                    continue;
                }
                if !found || confusion[old][slot] > best.2 {
                    best = (old, slot, confusion[old][slot]);
                    found = true;
                }
            }
        }
        let (old, slot, _) = best;
        perm[slot] = old;
        used_old[old] = true;
        used_slot[slot] = true;
    }
    perm
}

/// Posterior mean and central 95% credible interval of one scalar
/// parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamSummary<S: Scalar> {
    pub mean: S,
    pub lower: S,
    pub upper: S,
}

/// Per-component posterior summaries.
#[derive(Clone, Debug)]
pub struct ComponentSummary<S: Scalar> {
    pub mu: Vec<ParamSummary<S>>,
    pub beta: Vec<ParamSummary<S>>,
    pub delta: ParamSummary<S>,
    pub gamma: ParamSummary<S>,
    pub scale: Vec<Vec<ParamSummary<S>>>,
}

/// Posterior summaries of a whole mixture.
#[derive(Clone, Debug)]
pub struct ModelSummary<S: Scalar> {
    pub weights: Vec<ParamSummary<S>>,
    pub components: Vec<ComponentSummary<S>>,
}

/// Mean plus empirical 2.5%/97.5% interval with linear interpolation
/// between order statistics.
pub fn summarize_scalars<S: Scalar>(draws: &[S]) -> Result<ParamSummary<S>> {
    if draws.is_empty() {
        return Err(Error::Domain("cannot summarize an empty pool".into()));
    }
    let mean = draws.iter().copied().sum::<S>() / S::from_count(draws.len());
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ParamSummary {
        mean,
        lower: quantile_sorted(&sorted, S::c(0.025)),
        upper: quantile_sorted(&sorted, S::c(0.975)),
    })
}

/// Quantile of an ascending slice, interpolating linearly between order
/// statistics: index `h = (n-1) p`.
pub fn quantile_sorted<S: Scalar>(sorted: &[S], p: S) -> S {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = S::from_count(n - 1) * p;
    let lo = h.floor();
    let idx = lo.to_usize().unwrap_or(0).min(n - 2);
    let frac = h - lo;
    sorted[idx] + frac * (sorted[idx + 1] - sorted[idx])
}

/// Element-wise posterior summaries over pooled, already relabeled draws.
pub fn summarize_models<S: Scalar>(models: &[&MixtureModel<S>]) -> Result<ModelSummary<S>> {
    if models.is_empty() {
        return Err(Error::Domain("cannot summarize an empty pool".into()));
    }
    let g = models[0].n_components();
    let d = models[0].dim();
    let collect = |f: &dyn Fn(&MixtureModel<S>) -> S| -> Result<ParamSummary<S>> {
        let vals: Vec<S> = models.iter().map(|m| f(m)).collect();
        summarize_scalars(&vals)
    };
    let weights = (0..g)
        .map(|k| collect(&|m| m.weights()[k]))
        .collect::<Result<Vec<_>>>()?;
    let mut components = Vec::with_capacity(g);
    for k in 0..g {
        let mu = (0..d)
            .map(|a| collect(&|m| m.components()[k].mu()[a]))
            .collect::<Result<Vec<_>>>()?;
        let beta = (0..d)
            .map(|a| collect(&|m| m.components()[k].beta()[a]))
            .collect::<Result<Vec<_>>>()?;
        let delta = collect(&|m| m.components()[k].delta())?;
        let gamma = collect(&|m| m.components()[k].gamma())?;
        let mut scale = Vec::with_capacity(d);
        for a in 0..d {
            let row = (0..d)
                .map(|b| collect(&|m| m.components()[k].scale()[[a, b]]))
                .collect::<Result<Vec<_>>>()?;
            scale.push(row);
        }
        components.push(ComponentSummary {
            mu,
            beta,
            delta,
            gamma,
            scale,
        });
    }
    Ok(ModelSummary { weights, components })
}
