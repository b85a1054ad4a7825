//! The Gibbs sampler: initialization, membership and latent updates,
//! conjugate posterior draws, single chains and multi-chain fits.
//!
//! One sweep updates, in order: the hard memberships `z` from their
//! multinomial conditional, the latent scales `u` from their GIG
//! conditionals (warm-started inner chains), the posterior hyperparameters
//! by additivity, then per component `delta^2` (gamma draw), `gamma | delta`
//! (positive truncated normal), the scale matrix (matrix-GIG draw projected
//! back onto `det = 1`), the location/skewness pair (joint normal given the
//! fresh scale matrix), and finally the mixing weights (Dirichlet).
//!
//! [`fit`] runs several independently seeded chains (in parallel), discards
//! burn-in, checks mixing with the Gelman-Rubin factor on the log-likelihood
//! traces, repairs label switching, and reports posterior means, credible
//! intervals and MAP classifications.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rayon::prelude::*;

use crate::diagnostics::{
    align_to_pivot, apply_burnin, psrf, summarize_models, ModelSummary, TraceMatrix,
};
use crate::distributions::{
    sample_dirichlet, sample_gamma, sample_gig, sample_mgig, sample_mvn_chol,
    sample_truncated_normal_positive, GigParams,
};
use crate::kmeans::kmeans;
use crate::linalg::{cholesky, chol_inverse, spd_determinant};
use crate::mnig::{
    accumulate_stats, centered_scatter, log_sum_exp, mixture_loglik, sample_categorical,
    Assignments, Dataset, MixtureModel, MnigComponent, SufficientStats,
};
use crate::rng::{fit_stream, RngStream};
use crate::scalar::Scalar;
use crate::{Error, Result};

/// Prior hyperparameters shared by every component, plus the Dirichlet
/// prior on the mixing weights and the inverse-Wishart prior `(nu0,
/// Lambda0)` on the scale matrices.
#[derive(Clone, Debug)]
pub struct PriorSpec<S: Scalar> {
    pub a0: S,
    pub a1: Array1<S>,
    pub a2: Array1<S>,
    pub a3: S,
    pub a4: S,
    pub dirichlet: Vec<S>,
    pub nu0: S,
    pub lambda0: Array2<S>,
}

impl<S: Scalar> PriorSpec<S> {
    /// Weakly informative defaults: `a0 = 1`, zero vectors for `a1`, `a2`,
    /// `a3 = a4 = 1`, unit Dirichlet concentrations, `nu0 = d + 2`,
    /// `Lambda0 = I`.
    pub fn default_for(dim: usize, n_components: usize) -> Self {
        Self {
            a0: S::one(),
            a1: Array1::zeros(dim),
            a2: Array1::zeros(dim),
            a3: S::one(),
            a4: S::one(),
            dirichlet: vec![S::one(); n_components],
            nu0: S::from_count(dim + 2),
            lambda0: Array2::eye(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.a1.len()
    }

    pub fn n_components(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.a2.len() != d || self.lambda0.nrows() != d || self.lambda0.ncols() != d || d == 0 {
            return Err(Error::Dimension("prior dimensions disagree".into()));
        }
        if !(self.a0 >= S::zero()) || !(self.a3 > S::zero()) || !(self.a4 > S::zero()) {
            return Err(Error::Domain(
                "prior needs a0 >= 0, a3 > 0 and a4 > 0".into(),
            ));
        }
        let four = S::c(4.0);
        if !(four * self.a3 * self.a4 - self.a0 * self.a0 > S::zero()) {
            return Err(Error::Domain(
                "prior needs 4 a3 a4 - a0^2 > 0 for a proper location/skewness prior".into(),
            ));
        }
        if self.dirichlet.is_empty() || self.dirichlet.iter().any(|&a| !(a > S::zero())) {
            return Err(Error::Domain(
                "Dirichlet concentrations must be positive".into(),
            ));
        }
        if !(self.nu0 >= S::from_count(d)) {
            return Err(Error::Domain(format!(
                "prior needs nu0 >= d = {d}, got {}",
                self.nu0
            )));
        }
        cholesky(&self.lambda0.view())
            .map_err(|_| Error::NotPositiveDefinite("prior scale matrix Lambda0".into()))?;
        Ok(())
    }
}

/// Posterior hyperparameters of one component: the prior values plus the
/// matching sufficient statistics.
#[derive(Clone, Debug)]
pub struct Hyperparams<S: Scalar> {
    pub a0: S,
    pub a1: Array1<S>,
    pub a2: Array1<S>,
    pub a3: S,
    pub a4: S,
}

/// Element-wise additive update `a_j = a_j^(0) + t_j`.
///
/// Fails when the updated values violate `4 a3 a4 - a0^2 > 0`, the
/// positivity condition every downstream draw relies on.
pub fn update_hyperparams<S: Scalar>(
    prior: &PriorSpec<S>,
    stats: &SufficientStats<S>,
) -> Result<Hyperparams<S>> {
    let h = Hyperparams {
        a0: prior.a0 + stats.t0,
        a1: &prior.a1 + &stats.t1,
        a2: &prior.a2 + &stats.t2,
        a3: prior.a3 + stats.t3,
        a4: prior.a4 + stats.t4,
    };
    let four = S::c(4.0);
    if !(four * h.a3 * h.a4 - h.a0 * h.a0 > S::zero()) {
        return Err(Error::Domain(format!(
            "posterior positivity 4 a3 a4 - a0^2 > 0 violated: a0={}, a3={}, a4={}",
            h.a0, h.a3, h.a4
        )));
    }
    Ok(h)
}

/// Sampler configuration.
#[derive(Clone, Debug)]
pub struct GibbsConfig<S: Scalar> {
    pub n_iterations: usize,
    pub n_chains: usize,
    pub burnin_fraction: S,
    pub inner_gig_steps: usize,
    pub seed: u64,
}

impl<S: Scalar> Default for GibbsConfig<S> {
    fn default() -> Self {
        Self {
            n_iterations: 2000,
            n_chains: 3,
            burnin_fraction: S::c(0.5),
            inner_gig_steps: 10,
            seed: 0,
        }
    }
}

impl<S: Scalar> GibbsConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::Domain("need at least one chain".into()));
        }
        if !(self.burnin_fraction > S::zero() && self.burnin_fraction < S::one()) {
            return Err(Error::Domain(format!(
                "burn-in fraction must lie in (0,1), got {}",
                self.burnin_fraction
            )));
        }
        if self.inner_gig_steps == 0 {
            return Err(Error::Domain("inner GIG chain needs at least one step".into()));
        }
        Ok(())
    }
}

/// Full latent state of one chain.
#[derive(Clone, Debug)]
pub struct ChainState<S: Scalar> {
    pub model: MixtureModel<S>,
    pub z: Assignments,
    pub u: Array2<S>,
    pub observed_loglik: S,
    pub iteration: usize,
}

/// Per-iteration record kept in a chain trace.
#[derive(Clone, Debug)]
pub struct Snapshot<S: Scalar> {
    pub model: MixtureModel<S>,
    pub labels: Vec<u32>,
    pub loglik: S,
    pub iteration: usize,
}

impl<S: Scalar> Snapshot<S> {
    fn from_state(state: &ChainState<S>) -> Self {
        Self {
            model: state.model.clone(),
            labels: state.z.labels().iter().map(|&l| l as u32).collect(),
            loglik: state.observed_loglik,
            iteration: state.iteration,
        }
    }

    /// Applies a component permutation to the model and the labels; entry
    /// `k` of `perm` is the old index that moves to position `k`.
    pub fn apply_permutation(&mut self, perm: &[usize]) {
        self.model.permute(perm);
        let mut new_name = vec![0u32; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            new_name[old] = new as u32;
        }
        for l in &mut self.labels {
            *l = new_name[*l as usize];
        }
    }
}

/// Everything one chain produced: the initialization snapshot followed by
/// one snapshot per iteration.
#[derive(Clone, Debug)]
pub struct ChainTrace<S: Scalar> {
    pub snapshots: Vec<Snapshot<S>>,
}

impl<S: Scalar> ChainTrace<S> {
    /// Per-iteration log-likelihoods, excluding the initialization entry.
    pub fn logliks(&self) -> Vec<S> {
        self.snapshots[1..].iter().map(|s| s.loglik).collect()
    }
}

const KMEANS_RESTARTS: usize = 5;
const KMEANS_MAX_ITER: usize = 100;
const INIT_RETRIES: usize = 10;

/// Chain initialization from a seeded k-means partition.
///
/// Per component: `gamma = delta = 1`, `mu` the component sample mean,
/// `beta = 0.05` in every coordinate, the scale matrix the component
/// sample covariance rescaled to unit determinant, and the weight the
/// component proportion. All latents start at one.
pub fn initialize<S: Scalar, R: Rng + ?Sized>(
    data: &Dataset<S>,
    n_components: usize,
    prior: &PriorSpec<S>,
    rng: &mut R,
) -> Result<ChainState<S>> {
    if n_components == 0 || n_components > data.n() {
        return Err(Error::Init(format!(
            "cannot initialize {} components from {} observations",
            n_components,
            data.n()
        )));
    }
    prior.validate()?;
    if prior.dim() != data.dim() || prior.n_components() != n_components {
        return Err(Error::Dimension(
            "prior shape does not match data/component count".into(),
        ));
    }
    let mut last_err = None;
    for _ in 0..INIT_RETRIES {
        let labels = match kmeans(
            &data.y().view(),
            n_components,
            rng,
            KMEANS_RESTARTS,
            KMEANS_MAX_ITER,
        ) {
            Ok(l) => l,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let z = Assignments::new(labels, n_components)?;
        let counts = z.counts();
        if counts.iter().any(|&c| c == 0) {
            last_err = Some(Error::Init("empty component after k-means".into()));
            continue;
        }
        match state_from_partition(data, &z, &counts) {
            Ok(state) => return Ok(state),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Init("initialization retries exhausted".into())))
}

fn state_from_partition<S: Scalar>(
    data: &Dataset<S>,
    z: &Assignments,
    counts: &[usize],
) -> Result<ChainState<S>> {
    let d = data.dim();
    let n = data.n();
    let g = z.n_components();
    let mut components = Vec::with_capacity(g);
    let mut weights = Vec::with_capacity(g);
    for k in 0..g {
        let nk = counts[k];
        let nkf = S::from_count(nk);
        let mut mean = Array1::<S>::zeros(d);
        for i in 0..n {
            if z.labels()[i] == k {
                mean += &data.row(i);
            }
        }
        mean.mapv_inplace(|v| v / nkf);

        let scale = component_scale_init(data, z, k, &mean.view(), nk);
        let beta = Array1::from_elem(d, S::c(0.05));
        components.push(MnigComponent::new(mean, beta, S::one(), S::one(), scale)?);
        weights.push(nkf / S::from_count(n));
    }
    let model = MixtureModel::new(weights, components)?;
    let u = Array2::from_elem((n, g), S::one());
    let observed_loglik = mixture_loglik(&model, data)?;
    Ok(ChainState {
        model,
        z: z.clone(),
        u,
        observed_loglik,
        iteration: 0,
    })
}

/// Component sample covariance rescaled to unit determinant; degenerate
/// components (too few points or a singular covariance) fall back to the
/// identity, which already satisfies the constraint.
fn component_scale_init<S: Scalar>(
    data: &Dataset<S>,
    z: &Assignments,
    k: usize,
    mean: &ArrayView1<S>,
    nk: usize,
) -> Array2<S> {
    let d = data.dim();
    if nk < 2 {
        return Array2::eye(d);
    }
    let mut cov = Array2::<S>::zeros((d, d));
    for i in 0..data.n() {
        if z.labels()[i] != k {
            continue;
        }
        let y = data.row(i);
        for a in 0..d {
            for b in 0..d {
                cov[[a, b]] += (y[a] - mean[a]) * (y[b] - mean[b]);
            }
        }
    }
    cov.mapv_inplace(|v| v / S::from_count(nk - 1));
    match spd_determinant(&cov.view()) {
        Ok(det) if det > S::zero() => {
            let c = det.powf(S::from_count(d).recip());
            cov.mapv_inplace(|v| v / c);
            cov
        }
        _ => Array2::eye(d),
    }
}

/// Multinomial membership update: each `z_i` is drawn with probabilities
/// proportional to `pi_g f(y_i, u_ig)`, normalized by log-sum-exp.
pub fn update_memberships<S: Scalar, R: Rng + ?Sized>(
    state: &mut ChainState<S>,
    data: &Dataset<S>,
    rng: &mut R,
) -> Result<()> {
    let g = state.model.n_components();
    let log_weights: Vec<S> = state.model.weights().iter().map(|&w| w.ln()).collect();
    let mut terms = vec![S::zero(); g];
    let mut probs = vec![S::zero(); g];
    for i in 0..data.n() {
        let y = data.row(i);
        for (k, comp) in state.model.components().iter().enumerate() {
            let u = state.u[[i, k]];
            terms[k] = log_weights[k] + comp.joint_logpdf(&y, u)?;
        }
        if terms.iter().any(|t| t.is_nan()) {
            return Err(Error::Domain(format!(
                "non-finite membership density at observation {i}"
            )));
        }
        let norm = log_sum_exp(&terms);
        if !norm.is_finite() {
            return Err(Error::Domain(format!(
                "all membership densities vanished at observation {i}"
            )));
        }
        let mut total = S::zero();
        for k in 0..g {
            probs[k] = (terms[k] - norm).exp();
            total += probs[k];
        }
        // Exact renormalization; log-sum-exp already bounds the error.
        for p in probs.iter_mut() {
            *p = *p / total;
        }
        state.z.set(i, sample_categorical(&probs, rng));
    }
    Ok(())
}

/// Latent update: every `u_ig` is refreshed from its GIG conditional,
/// running `inner_steps` warm-started chain updates.
///
/// The conditional kernel is `u^{-(d+3)/2} exp(-(q_g^2(y_i)/u +
/// alpha_g^2 u)/2)`, i.e. `GIG(-(d+1)/2, q_g^2(y_i), alpha_g^2)`; the
/// chain therefore runs on the reciprocal law of order `+(d+1)/2`. A
/// positive order here would violate `E[E[U|Y]] = E[U]` and send the
/// latents on a geometric excursion, which the calibration tests would
/// catch.
pub fn update_latents<S: Scalar, R: Rng + ?Sized>(
    state: &mut ChainState<S>,
    data: &Dataset<S>,
    rng: &mut R,
    inner_steps: usize,
) -> Result<()> {
    let lambda = -(S::from_count(data.dim()) + S::one()) * S::c(0.5);
    for (k, comp) in state.model.components().iter().enumerate() {
        let delta_sq = comp.delta() * comp.delta();
        let alpha_sq = comp.alpha() * comp.alpha();
        for i in 0..data.n() {
            let chi = delta_sq + comp.mahalanobis_sq(&data.row(i));
            let params = GigParams::new(lambda, chi, alpha_sq)?;
            let current = state.u[[i, k]];
            state.u[[i, k]] = sample_gig(&params, rng, Some(current), inner_steps)?;
        }
    }
    Ok(())
}

/// Draws `delta^2` from `Gamma(a0/2 + 1, a4 - a0^2 / (4 a3))`.
pub fn draw_delta_sq<S: Scalar, R: Rng + ?Sized>(
    h: &Hyperparams<S>,
    rng: &mut R,
) -> Result<S> {
    let shape = h.a0 * S::c(0.5) + S::one();
    let rate = h.a4 - h.a0 * h.a0 / (S::c(4.0) * h.a3);
    if !(rate > S::zero()) {
        return Err(Error::Domain(format!(
            "delta^2 posterior rate must be positive, got {rate}"
        )));
    }
    sample_gamma(shape, rate, rng)
}

/// Draws `gamma | delta` from `N(a0 delta / (2 a3), 1 / (2 a3))` truncated
/// to the positive axis.
pub fn draw_gamma_given_delta<S: Scalar, R: Rng + ?Sized>(
    h: &Hyperparams<S>,
    delta: S,
    rng: &mut R,
) -> Result<S> {
    if !(h.a3 > S::zero()) {
        return Err(Error::Domain(format!(
            "gamma posterior needs a3 > 0, got {}",
            h.a3
        )));
    }
    let two_a3 = S::c(2.0) * h.a3;
    sample_truncated_normal_positive(h.a0 * delta / two_a3, two_a3.recip(), rng)
}

/// Joint draw of `(mu, beta)` given the scale matrix.
///
/// With `D = 4 a3 a4 - a0^2`, the mean blocks are
/// `mu* = (2 a3 a2 - a0 a1) / D` and
/// `beta* = Delta^{-1} (2 a4 a1 - a0 a2) / D`, and the 2d x 2d covariance
/// has blocks `2 a3 Delta / D`, `2 a4 Delta^{-1} / D` and `-a0 I / D`
/// off-diagonal. The assembled covariance is Cholesky-verified before
/// drawing.
pub fn draw_mu_beta<S: Scalar, R: Rng + ?Sized>(
    h: &Hyperparams<S>,
    scale: &ArrayView2<S>,
    rng: &mut R,
) -> Result<(Array1<S>, Array1<S>)> {
    let d = scale.nrows();
    if h.a1.len() != d || h.a2.len() != d {
        return Err(Error::Dimension("hyperparameter dimension mismatch".into()));
    }
    let two = S::c(2.0);
    let denom = S::c(4.0) * h.a3 * h.a4 - h.a0 * h.a0;
    if !(denom > S::zero()) {
        return Err(Error::Domain(format!(
            "location/skewness posterior needs 4 a3 a4 - a0^2 > 0, got {denom}"
        )));
    }
    let scale_chol = cholesky(scale)?;
    let scale_inv = chol_inverse(&scale_chol.view());

    let mu_star = Array1::from_shape_fn(d, |i| (two * h.a3 * h.a2[i] - h.a0 * h.a1[i]) / denom);
    let rhs = Array1::from_shape_fn(d, |i| (two * h.a4 * h.a1[i] - h.a0 * h.a2[i]) / denom);
    let beta_star = scale_inv.dot(&rhs);

    let mut cov = Array2::<S>::zeros((2 * d, 2 * d));
    for i in 0..d {
        for j in 0..d {
            cov[[i, j]] = two * h.a3 * scale[[i, j]] / denom;
            cov[[d + i, d + j]] = two * h.a4 * scale_inv[[i, j]] / denom;
        }
        cov[[i, d + i]] = -h.a0 / denom;
        cov[[d + i, i]] = -h.a0 / denom;
    }
    let cov_chol = cholesky(&cov.view())
        .map_err(|_| Error::NotPositiveDefinite("joint location/skewness covariance".into()))?;
    let mut mean = Array1::<S>::zeros(2 * d);
    for i in 0..d {
        mean[i] = mu_star[i];
        mean[d + i] = beta_star[i];
    }
    let draw = sample_mvn_chol(&mean.view(), &cov_chol.view(), rng);
    let mu = Array1::from_shape_fn(d, |i| draw[i]);
    let beta = Array1::from_shape_fn(d, |i| draw[d + i]);
    Ok((mu, beta))
}

/// Scale-matrix draw: matrix-GIG with exponent `q = (nu0 + t0)/2`, rank-one
/// coefficient `beta (2 t3) beta'` and inverse-side coefficient
/// `S0 + Lambda0` where `S0` is the component's centered, latent-weighted
/// scatter; the draw is then projected back onto `det = 1`.
///
/// A vanishing rank-one coefficient (`beta = 0` exactly, or an empty
/// component with `t3 = 0`) degenerates the matrix-GIG to an
/// inverse-Wishart, which is drawn directly rather than perturbing `beta`.
#[allow(clippy::too_many_arguments)]
pub fn draw_delta_matrix<S: Scalar, R: Rng + ?Sized>(
    data: &Dataset<S>,
    u_col: &ArrayView1<S>,
    z: &Assignments,
    component: usize,
    mu: &ArrayView1<S>,
    beta: &ArrayView1<S>,
    t3: S,
    t0: S,
    prior: &PriorSpec<S>,
    rng: &mut R,
) -> Result<Array2<S>> {
    let d = data.dim();
    let s0 = centered_scatter(data, u_col, z, component, mu);
    let a = &s0 + &prior.lambda0;
    let q = (prior.nu0 + t0) * S::c(0.5);
    let b_scalar = S::c(2.0) * t3;
    let beta_norm_sq: S = beta.iter().map(|&v| v * v).sum();
    let draw = if b_scalar > S::zero() && beta_norm_sq > S::zero() {
        sample_mgig(q, beta, b_scalar, &a.view(), rng)?
    } else {
        // Inverse-Wishart limit: zero rank-one weight, any direction.
        let e0 = Array1::from_shape_fn(d, |i| if i == 0 { S::one() } else { S::zero() });
        sample_mgig(q, &e0.view(), S::zero(), &a.view(), rng)?
    };
    let det = spd_determinant(&draw.view())?;
    let c = det.powf(S::from_count(d).recip());
    Ok(draw.mapv(|v| v / c))
}

/// Dirichlet weight draw with concentrations `prior + t0`.
pub fn draw_weights<S: Scalar, R: Rng + ?Sized>(
    dirichlet_prior: &[S],
    t0: &[S],
    rng: &mut R,
) -> Result<Vec<S>> {
    if dirichlet_prior.len() != t0.len() {
        return Err(Error::Dimension("weight draw dimension mismatch".into()));
    }
    let conc: Vec<S> = dirichlet_prior
        .iter()
        .zip(t0)
        .map(|(&a, &t)| a + t)
        .collect();
    sample_dirichlet(&conc, rng)
}

/// One full Gibbs sweep over the state; `iteration` is advanced by the
/// caller.
fn sweep<S: Scalar, R: Rng + ?Sized>(
    state: &mut ChainState<S>,
    data: &Dataset<S>,
    prior: &PriorSpec<S>,
    config: &GibbsConfig<S>,
    rng: &mut R,
) -> Result<()> {
    update_memberships(state, data, rng)?;
    update_latents(state, data, rng, config.inner_gig_steps)?;
    let stats = accumulate_stats(data, &state.u.view(), &state.z)?;
    let g = state.model.n_components();
    let mut components = Vec::with_capacity(g);
    for k in 0..g {
        let wrap = |e: Error| Error::Degenerate {
            component: k,
            detail: e.to_string(),
        };
        let h = update_hyperparams(prior, &stats[k]).map_err(wrap)?;
        let delta_sq = draw_delta_sq(&h, rng).map_err(wrap)?;
        let delta = delta_sq.sqrt();
        let gamma = draw_gamma_given_delta(&h, delta, rng).map_err(wrap)?;
        let prev = &state.model.components()[k];
        let scale = draw_delta_matrix(
            data,
            &state.u.column(k),
            &state.z,
            k,
            &prev.mu().view(),
            &prev.beta().view(),
            stats[k].t3,
            stats[k].t0,
            prior,
            rng,
        )
        .map_err(wrap)?;
        let (mu, beta) = draw_mu_beta(&h, &scale.view(), rng).map_err(wrap)?;
        components.push(MnigComponent::new(mu, beta, delta, gamma, scale).map_err(wrap)?);
    }
    let t0s: Vec<S> = stats.iter().map(|s| s.t0).collect();
    let weights = draw_weights(&prior.dirichlet, &t0s, rng)?;
    state.model = MixtureModel::new(weights, components)?;
    state.observed_loglik = mixture_loglik(&state.model, data)?;
    Ok(())
}

/// Runs one chain: initialization plus `config.n_iterations` sweeps,
/// recording a [`Snapshot`] per iteration.
pub fn run_chain<S: Scalar, R: Rng + ?Sized>(
    data: &Dataset<S>,
    n_components: usize,
    prior: &PriorSpec<S>,
    config: &GibbsConfig<S>,
    rng: &mut R,
) -> Result<ChainTrace<S>> {
    config.validate()?;
    let mut state = initialize(data, n_components, prior, rng)?;
    let mut snapshots = Vec::with_capacity(config.n_iterations + 1);
    snapshots.push(Snapshot::from_state(&state));
    for t in 1..=config.n_iterations {
        state.iteration = t;
        sweep(&mut state, data, prior, config, rng).map_err(|e| match e {
            Error::Degenerate { component, detail } => Error::Degenerate {
                component,
                detail: format!("iteration {t}: {detail}"),
            },
            other => other,
        })?;
        snapshots.push(Snapshot::from_state(&state));
    }
    Ok(ChainTrace { snapshots })
}

/// Convergence verdict of a multi-chain fit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Convergence<S: Scalar> {
    /// PSRF available; converged iff it is below 1.1.
    Assessed { psrf: S, converged: bool },
    /// Fewer than two usable chains; the diagnostic does not apply.
    NotApplicable,
}

impl<S: Scalar> Convergence<S> {
    pub fn psrf(&self) -> Option<S> {
        match self {
            Convergence::Assessed { psrf, .. } => Some(*psrf),
            Convergence::NotApplicable => None,
        }
    }

    /// `Some(false)` only when the diagnostic ran and failed.
    pub fn converged(&self) -> Option<bool> {
        match self {
            Convergence::Assessed { converged, .. } => Some(*converged),
            Convergence::NotApplicable => None,
        }
    }
}

/// Result of a multi-chain fit.
#[derive(Clone, Debug)]
pub struct FitResult<S: Scalar> {
    pub n_components: usize,
    pub summary: ModelSummary<S>,
    /// Mixture assembled from the posterior means (scale matrices
    /// reprojected onto unit determinant).
    pub posterior_mean_model: MixtureModel<S>,
    /// MAP classification from the averaged membership indicators.
    pub map_labels: Vec<usize>,
    /// Posterior membership probabilities, `n x G`.
    pub membership_probs: Array2<S>,
    /// Highest observed-data log-likelihood among pooled draws.
    pub max_posterior_loglik: S,
    pub convergence: Convergence<S>,
    /// Full per-iteration log-likelihood trace of each surviving chain,
    /// including burn-in (initialization entry excluded).
    pub loglik_traces: Vec<Vec<S>>,
    pub n_burnin: usize,
    pub pooled_draws: usize,
    /// Chains that aborted, with their failure causes.
    pub chain_failures: Vec<(usize, String)>,
}

/// PSRF threshold below which chains are flagged as converged.
pub const PSRF_CONVERGED: f64 = 1.1;

/// Fits the mixture with `config.n_chains` independently seeded chains run
/// in parallel, then pools the post-burn-in draws.
///
/// Label switching is repaired by aligning every pooled draw to the pivot
/// partition of the highest-likelihood draw and ordering the final slots
/// by posterior mean mixing weight; see
/// [`crate::diagnostics::align_to_pivot`].
pub fn fit<S: Scalar>(
    data: &Dataset<S>,
    n_components: usize,
    prior: &PriorSpec<S>,
    config: &GibbsConfig<S>,
) -> Result<FitResult<S>> {
    config.validate()?;
    if config.n_iterations < 2 {
        return Err(Error::Domain(
            "fitting needs at least two iterations to survive burn-in".into(),
        ));
    }
    let outcomes: Vec<(usize, Result<ChainTrace<S>>)> = (0..config.n_chains)
        .into_par_iter()
        .map(|chain| {
            let mut rng = RngStream::new(config.seed, fit_stream(n_components, chain));
            (chain, run_chain(data, n_components, prior, config, &mut rng))
        })
        .collect();

    let mut traces = Vec::new();
    let mut chain_failures = Vec::new();
    for (chain, outcome) in outcomes {
        match outcome {
            Ok(trace) => traces.push(trace),
            Err(e) => chain_failures.push((chain, e.to_string())),
        }
    }
    if traces.is_empty() {
        let causes: Vec<String> = chain_failures
            .iter()
            .map(|(c, e)| format!("chain {c}: {e}"))
            .collect();
        return Err(Error::Fit(causes.join("; ")));
    }

    let burnin = config.burnin_fraction.as_f64();
    let mut kept_loglik: Vec<Vec<S>> = Vec::with_capacity(traces.len());
    let mut pooled: Vec<Snapshot<S>> = Vec::new();
    let mut n_burnin = 0;
    for trace in &traces {
        let draws = &trace.snapshots[1..];
        let kept = apply_burnin(draws, burnin)?;
        n_burnin = draws.len() - kept.len();
        kept_loglik.push(kept.iter().map(|s| s.loglik).collect());
        pooled.extend(kept.iter().cloned());
    }

    let convergence = if traces.len() >= 2 {
        let trace_matrix = TraceMatrix::from_chains(&kept_loglik)?;
        let r = psrf(&trace_matrix);
        Convergence::Assessed {
            psrf: r.value,
            converged: r.value < S::c(PSRF_CONVERGED),
        }
    } else {
        Convergence::NotApplicable
    };

    // Pivot: the pooled draw with the highest observed log-likelihood.
    let pivot_idx = pooled
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.loglik.partial_cmp(&b.loglik).unwrap())
        .map(|(i, _)| i)
        .expect("pooled draws are non-empty");
    let pivot = pooled[pivot_idx].labels.clone();
    align_to_pivot(&mut pooled, &pivot)?;

    let n = data.n();
    let g = n_components;
    let mut membership_probs = Array2::<S>::zeros((n, g));
    for snapshot in &pooled {
        for (i, &l) in snapshot.labels.iter().enumerate() {
            membership_probs[[i, l as usize]] += S::one();
        }
    }
    let pool_size = S::from_count(pooled.len());
    membership_probs.mapv_inplace(|v| v / pool_size);
    let map_labels: Vec<usize> = (0..n)
        .map(|i| {
            let row = membership_probs.row(i);
            let mut best = 0;
            for k in 1..g {
                if row[k] > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect();

    let models: Vec<&MixtureModel<S>> = pooled.iter().map(|s| &s.model).collect();
    let summary = summarize_models(&models)?;
    let posterior_mean_model = model_from_summary(&summary)?;
    let max_posterior_loglik = pooled
        .iter()
        .map(|s| s.loglik)
        .fold(S::neg_infinity(), S::max);

    Ok(FitResult {
        n_components,
        summary,
        posterior_mean_model,
        map_labels,
        membership_probs,
        max_posterior_loglik,
        convergence,
        loglik_traces: traces.iter().map(|t| t.logliks()).collect(),
        n_burnin,
        pooled_draws: pooled.len(),
        chain_failures,
    })
}

fn model_from_summary<S: Scalar>(summary: &ModelSummary<S>) -> Result<MixtureModel<S>> {
    let g = summary.components.len();
    let total: S = summary.weights.iter().map(|w| w.mean).sum();
    let weights: Vec<S> = summary.weights.iter().map(|w| w.mean / total).collect();
    let mut components = Vec::with_capacity(g);
    for comp in &summary.components {
        let d = comp.mu.len();
        let mu = Array1::from_shape_fn(d, |i| comp.mu[i].mean);
        let beta = Array1::from_shape_fn(d, |i| comp.beta[i].mean);
        let mut scale = Array2::from_shape_fn((d, d), |(i, j)| comp.scale[i][j].mean);
        let det = spd_determinant(&scale.view())?;
        let c = det.powf(S::from_count(d).recip());
        scale.mapv_inplace(|v| v / c);
        components.push(MnigComponent::new(
            mu,
            beta,
            comp.delta.mean,
            comp.gamma.mean,
            scale,
        )?);
    }
    MixtureModel::new(weights, components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn toy_data() -> Dataset<f64> {
        let mut y = Array2::<f64>::zeros((40, 2));
        for i in 0..20 {
            y[[i, 0]] = -5.0 + 0.13 * i as f64;
            y[[i, 1]] = -5.0 + 0.07 * (i as f64 % 5.0);
            y[[20 + i, 0]] = 5.0 + 0.11 * i as f64;
            y[[20 + i, 1]] = 5.0 + 0.05 * (i as f64 % 7.0);
        }
        Dataset::new(y, None).unwrap()
    }

    #[test]
    fn prior_defaults_validate() {
        let p = PriorSpec::<f64>::default_for(3, 2);
        p.validate().unwrap();
        assert_eq!(p.dim(), 3);
        assert_eq!(p.n_components(), 2);
        assert_eq!(p.nu0, 5.0);
    }

    #[test]
    fn prior_positivity_is_enforced() {
        let mut p = PriorSpec::<f64>::default_for(2, 2);
        p.a0 = 2.5; // 4*1*1 - 6.25 < 0
        assert!(p.validate().is_err());
        let mut q = PriorSpec::<f64>::default_for(2, 2);
        q.nu0 = 1.0;
        assert!(q.validate().is_err());
    }

    #[test]
    fn hyperparams_are_additive() {
        let prior = PriorSpec::<f64>::default_for(1, 1);
        let zero = SufficientStats::zeros(1);
        let h = update_hyperparams(&prior, &zero).unwrap();
        assert_eq!(h.a0, prior.a0);
        assert_eq!(h.a3, prior.a3);

        let mut stats = SufficientStats::zeros(1);
        stats.t0 = 2.0;
        stats.t3 = 1.2;
        stats.t4 = 1.1;
        let h2 = update_hyperparams(&prior, &stats).unwrap();
        assert_eq!(h2.a0, 3.0);
        assert_eq!(h2.a3, 2.2);

        // Inconsistent stats that break 4 a3 a4 > a0^2 are rejected.
        let mut bad = SufficientStats::zeros(1);
        bad.t0 = 5.0;
        assert!(update_hyperparams(&prior, &bad).is_err());
    }

    #[test]
    fn hyperparam_order_free_accumulation() {
        // Adding stats in two installments equals adding their sum.
        let prior = PriorSpec::<f64>::default_for(2, 1);
        let mut a = SufficientStats::zeros(2);
        a.t0 = 1.0;
        a.t1 = array![0.5, -1.0];
        a.t3 = 0.7;
        a.t4 = 0.4;
        let mut b = SufficientStats::zeros(2);
        b.t0 = 2.0;
        b.t1 = array![1.5, 2.0];
        b.t3 = 0.2;
        b.t4 = 0.9;

        let ab = SufficientStats {
            t0: a.t0 + b.t0,
            t1: &a.t1 + &b.t1,
            t2: &a.t2 + &b.t2,
            t3: a.t3 + b.t3,
            t4: a.t4 + b.t4,
            t5: &a.t5 + &b.t5,
        };
        let direct = update_hyperparams(&prior, &ab).unwrap();

        let staged_prior = {
            let h = update_hyperparams(&prior, &a).unwrap();
            PriorSpec {
                a0: h.a0,
                a1: h.a1,
                a2: h.a2,
                a3: h.a3,
                a4: h.a4,
                dirichlet: prior.dirichlet.clone(),
                nu0: prior.nu0,
                lambda0: prior.lambda0.clone(),
            }
        };
        let staged = update_hyperparams(&staged_prior, &b).unwrap();
        assert_relative_eq!(direct.a0, staged.a0);
        assert_relative_eq!(direct.a3, staged.a3);
        assert_relative_eq!(direct.a4, staged.a4);
        assert_relative_eq!(direct.a1[0], staged.a1[0]);
        assert_relative_eq!(direct.a2[1], staged.a2[1]);
    }

    #[test]
    fn delta_sq_posterior_matches_gamma_mean() {
        // a0=2, a3=1, a4=2 -> Gamma(2, 1), mean 2.
        let h = Hyperparams {
            a0: 2.0,
            a1: array![0.0],
            a2: array![0.0],
            a3: 1.0,
            a4: 2.0,
        };
        let mut rng = RngStream::new(81, 0);
        let n = 200_000;
        let mean = (0..n)
            .map(|_| draw_delta_sq(&h, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert_relative_eq!(mean, 2.0, max_relative = 0.01);

        let degenerate = Hyperparams {
            a0: 4.0,
            a1: array![0.0],
            a2: array![0.0],
            a3: 1.0,
            a4: 2.0,
        };
        assert!(draw_delta_sq(&degenerate, &mut rng).is_err());
    }

    #[test]
    fn gamma_draw_reduces_to_half_normal_when_a0_zero() {
        let h = Hyperparams {
            a0: 0.0,
            a1: array![0.0],
            a2: array![0.0],
            a3: 2.0,
            a4: 2.0,
        };
        let mut rng = RngStream::new(82, 0);
        let n = 200_000;
        let mean = (0..n)
            .map(|_| draw_gamma_given_delta(&h, 1.0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        // Half-normal with variance 1/(2 a3) = 0.25.
        let expected = 0.5 * (2.0 / std::f64::consts::PI).sqrt();
        assert_relative_eq!(mean, expected, max_relative = 0.01);
    }

    #[test]
    fn mu_beta_hand_example_one_dim() {
        // a0=1, a1=2, a2=3, a3=1, a4=1, Delta=1:
        // mean = (4/3, 1/3), covariance [[2/3, -1/3], [-1/3, 2/3]].
        let h = Hyperparams {
            a0: 1.0,
            a1: array![2.0],
            a2: array![3.0],
            a3: 1.0,
            a4: 1.0,
        };
        let scale = array![[1.0]];
        let mut rng = RngStream::new(83, 0);
        let n = 200_000;
        let mut sum = [0.0f64; 2];
        let mut sum_sq = [[0.0f64; 2]; 2];
        for _ in 0..n {
            let (mu, beta) = draw_mu_beta(&h, &scale.view(), &mut rng).unwrap();
            let v = [mu[0], beta[0]];
            for i in 0..2 {
                sum[i] += v[i];
                for j in 0..2 {
                    sum_sq[i][j] += v[i] * v[j];
                }
            }
        }
        let nf = n as f64;
        let mean = [sum[0] / nf, sum[1] / nf];
        assert_relative_eq!(mean[0], 4.0 / 3.0, max_relative = 0.02);
        assert_relative_eq!(mean[1], 1.0 / 3.0, max_relative = 0.02);
        let expected_cov = [[2.0 / 3.0, -1.0 / 3.0], [-1.0 / 3.0, 2.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                let c = sum_sq[i][j] / nf - mean[i] * mean[j];
                assert_relative_eq!(c, expected_cov[i][j], max_relative = 0.03, epsilon = 0.01);
            }
        }
    }

    #[test]
    fn mu_beta_independent_when_a0_zero() {
        // a0 = 0: mean_mu = a2/(2 a4), mean_beta = Delta^{-1} a1/(2 a3).
        let h = Hyperparams {
            a0: 0.0,
            a1: array![3.0],
            a2: array![5.0],
            a3: 2.0,
            a4: 1.5,
        };
        let scale = array![[1.0]];
        let mut rng = RngStream::new(84, 0);
        let n = 100_000;
        let mut mu_sum = 0.0;
        let mut beta_sum = 0.0;
        for _ in 0..n {
            let (mu, beta) = draw_mu_beta(&h, &scale.view(), &mut rng).unwrap();
            mu_sum += mu[0];
            beta_sum += beta[0];
        }
        assert_relative_eq!(mu_sum / n as f64, 5.0 / 3.0, max_relative = 0.02);
        assert_relative_eq!(beta_sum / n as f64, 0.75, max_relative = 0.02);
    }

    #[test]
    fn weight_draw_posterior_mean() {
        let mut rng = RngStream::new(85, 0);
        let n = 200_000;
        let mut mean = [0.0f64; 2];
        for _ in 0..n {
            let w = draw_weights(&[1.0, 1.0], &[99.0, 199.0], &mut rng).unwrap();
            mean[0] += w[0];
            mean[1] += w[1];
        }
        assert_relative_eq!(mean[0] / n as f64, 100.0 / 300.0, max_relative = 0.01);
        assert_relative_eq!(mean[1] / n as f64, 200.0 / 300.0, max_relative = 0.01);

        assert_eq!(draw_weights(&[1.0], &[0.0], &mut rng).unwrap(), vec![1.0]);
    }

    #[test]
    fn initialization_follows_the_recipe() {
        let data = toy_data();
        let prior = PriorSpec::default_for(2, 2);
        let mut rng = RngStream::new(86, 0);
        let state = initialize(&data, 2, &prior, &mut rng).unwrap();
        for comp in state.model.components() {
            assert_eq!(comp.gamma(), 1.0);
            assert_eq!(comp.delta(), 1.0);
            assert!(comp.beta().iter().all(|&b| b == 0.05));
            let det = spd_determinant(&comp.scale().view()).unwrap();
            assert_relative_eq!(det, 1.0, epsilon = 1e-10);
        }
        assert!(state.u.iter().all(|&u| u == 1.0));
        let total: f64 = state.model.weights().iter().sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        assert!(initialize(&data, 0, &prior, &mut rng).is_err());
    }

    #[test]
    fn single_component_membership_is_trivial() {
        let data = toy_data();
        let prior = PriorSpec::default_for(2, 1);
        let mut rng = RngStream::new(87, 0);
        let mut state = initialize(&data, 1, &prior, &mut rng).unwrap();
        update_memberships(&mut state, &data, &mut rng).unwrap();
        assert!(state.z.labels().iter().all(|&l| l == 0));
    }

    #[test]
    fn symmetric_components_get_half_probabilities() {
        // Two identical components with equal weights and equal latents:
        // each membership is a fair coin.
        let data = toy_data();
        let comp = MnigComponent::new(
            array![0.0, 0.0],
            array![0.0, 0.0],
            1.0,
            1.0,
            Array2::eye(2),
        )
        .unwrap();
        let model =
            MixtureModel::new(vec![0.5, 0.5], vec![comp.clone(), comp.clone()]).unwrap();
        let mut state = ChainState {
            model,
            z: Assignments::new(vec![0; 40], 2).unwrap(),
            u: Array2::from_elem((40, 2), 1.0),
            observed_loglik: 0.0,
            iteration: 0,
        };
        let mut rng = RngStream::new(88, 0);
        let mut ones = 0usize;
        let reps = 500;
        for _ in 0..reps {
            update_memberships(&mut state, &data, &mut rng).unwrap();
            ones += state.z.labels().iter().filter(|&&l| l == 1).count();
        }
        let frac = ones as f64 / (reps * 40) as f64;
        assert!((frac - 0.5).abs() < 0.02, "frac = {frac}");
    }

    #[test]
    fn well_separated_point_is_assigned_with_near_certainty() {
        let c1 = MnigComponent::new(
            array![0.0, 0.0],
            array![0.0, 0.0],
            1.0,
            1.0,
            Array2::eye(2),
        )
        .unwrap();
        let c2 = MnigComponent::new(
            array![50.0, 50.0],
            array![0.0, 0.0],
            1.0,
            1.0,
            Array2::eye(2),
        )
        .unwrap();
        let model = MixtureModel::new(vec![0.5, 0.5], vec![c1, c2]).unwrap();
        let data = Dataset::new(array![[0.0, 0.0]], None).unwrap();
        let mut state = ChainState {
            model,
            z: Assignments::new(vec![1], 2).unwrap(),
            u: Array2::from_elem((1, 2), 1.0),
            observed_loglik: 0.0,
            iteration: 0,
        };
        let mut rng = RngStream::new(89, 0);
        let mut zero_count = 0;
        for _ in 0..1000 {
            update_memberships(&mut state, &data, &mut rng).unwrap();
            if state.z.labels()[0] == 0 {
                zero_count += 1;
            }
        }
        assert!(zero_count >= 999);
    }

    #[test]
    fn latents_stay_positive() {
        let data = toy_data();
        let prior = PriorSpec::default_for(2, 2);
        let mut rng = RngStream::new(90, 0);
        let mut state = initialize(&data, 2, &prior, &mut rng).unwrap();
        update_latents(&mut state, &data, &mut rng, 10).unwrap();
        assert!(state.u.iter().all(|&u| u > 0.0));
        // Warm start moved the latents off their initialization.
        assert!(state.u.iter().any(|&u| u != 1.0));
    }

    #[test]
    fn zero_iteration_trace_holds_only_initialization() {
        let data = toy_data();
        let prior = PriorSpec::default_for(2, 2);
        let config = GibbsConfig {
            n_iterations: 0,
            n_chains: 1,
            seed: 1,
            ..Default::default()
        };
        let mut rng = RngStream::new(1, 0);
        let trace = run_chain(&data, 2, &prior, &config, &mut rng).unwrap();
        assert_eq!(trace.snapshots.len(), 1);
        assert_eq!(trace.snapshots[0].iteration, 0);
    }

    #[test]
    fn traces_are_bit_identical_under_equal_seeds() {
        let data = toy_data();
        let prior = PriorSpec::default_for(2, 2);
        let config = GibbsConfig {
            n_iterations: 30,
            n_chains: 1,
            seed: 33,
            ..Default::default()
        };
        let run = || {
            let mut rng = RngStream::new(33, 7);
            run_chain(&data, 2, &prior, &config, &mut rng).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.snapshots.len(), b.snapshots.len());
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x.loglik, y.loglik);
            assert_eq!(x.labels, y.labels);
            for (wa, wb) in x.model.weights().iter().zip(y.model.weights()) {
                assert_eq!(wa, wb);
            }
        }
    }

    #[test]
    fn chain_invariants_hold_throughout() {
        let data = toy_data();
        let prior = PriorSpec::default_for(2, 2);
        let config = GibbsConfig {
            n_iterations: 60,
            n_chains: 1,
            seed: 5,
            ..Default::default()
        };
        let mut rng = RngStream::new(5, 0);
        let mut state = initialize(&data, 2, &prior, &mut rng).unwrap();
        for t in 1..=config.n_iterations {
            state.iteration = t;
            sweep(&mut state, &data, &prior, &config, &mut rng).unwrap();
            for comp in state.model.components() {
                assert!(comp.delta() > 0.0);
                assert!(comp.gamma() > 0.0);
                let det = spd_determinant(&comp.scale().view()).unwrap();
                assert!((det - 1.0).abs() < 1e-10, "det = {det}");
            }
            assert!(state.u.iter().all(|&u| u > 0.0));
            assert!(state.model.weights().iter().all(|&w| w > 0.0));
            // One-hot preserved by construction of Assignments.
            assert_eq!(state.z.n(), 40);
        }
    }

    #[test]
    fn fit_single_chain_reports_not_applicable_convergence() {
        let data = toy_data();
        let prior = PriorSpec::default_for(2, 2);
        let config = GibbsConfig {
            n_iterations: 40,
            n_chains: 1,
            seed: 2,
            ..Default::default()
        };
        let result = fit(&data, 2, &prior, &config).unwrap();
        assert_eq!(result.convergence, Convergence::NotApplicable);
        assert!(result.convergence.psrf().is_none());
        assert_eq!(result.map_labels.len(), 40);
        assert_eq!(result.pooled_draws, 20);
    }

    #[test]
    fn fit_separates_toy_clusters() {
        let data = toy_data();
        let prior = PriorSpec::default_for(2, 2);
        let config = GibbsConfig {
            n_iterations: 150,
            n_chains: 2,
            seed: 11,
            ..Default::default()
        };
        let result = fit(&data, 2, &prior, &config).unwrap();
        let first = result.map_labels[0];
        assert!(result.map_labels[..20].iter().all(|&l| l == first));
        assert!(result.map_labels[20..].iter().all(|&l| l == 1 - first));
        // Weight ordering: ascending posterior-mean weights.
        assert!(result.summary.weights[0].mean <= result.summary.weights[1].mean);
        // Membership rows sum to one.
        for i in 0..40 {
            let s: f64 = result.membership_probs.row(i).sum();
            assert_relative_eq!(s, 1.0, epsilon = 1e-12);
        }
    }
}
