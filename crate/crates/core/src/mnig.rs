//! The multivariate normal-inverse Gaussian model: parameter containers,
//! densities, sufficient statistics and the forward data generator.
//!
//! A component is the mean-variance mixture `Y | U=u ~ N(mu + u Delta beta,
//! u Delta)` with `U ~ IG(gamma, delta)`, whose marginal density is
//!
//! `f(y) = delta / 2^((d-1)/2) * (alpha / (pi q(y)))^((d+1)/2)
//!         * exp(p(y)) * K_((d+1)/2)(alpha q(y))`
//!
//! with `alpha = sqrt(gamma^2 + beta' Delta beta)`,
//! `p(y) = delta gamma + beta'(y - mu)` and
//! `q(y) = sqrt(delta^2 + (y - mu)' Delta^{-1} (y - mu))`.
//! The scale matrix carries the identifiability constraint `det(Delta) = 1`,
//! enforced at construction.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::distributions::sample_inverse_gaussian;
use crate::linalg::{cholesky, outer, quad_form_inv, spd_determinant};
use crate::scalar::Scalar;
use crate::special::log_bessel_k;
use crate::{Error, Result};

/// One mixture component's parameters with cached derived quantities.
#[derive(Clone, Debug)]
pub struct MnigComponent<S: Scalar> {
    mu: Array1<S>,
    beta: Array1<S>,
    delta: S,
    gamma: S,
    scale: Array2<S>,
    scale_chol: Array2<S>,
    alpha: S,
}

impl<S: Scalar> MnigComponent<S> {
    /// Validates and caches: `scale` must be SPD with `|det - 1|` below
    /// [`Scalar::DET_UNITY_TOL`], and `delta`, `gamma` strictly positive.
    pub fn new(
        mu: Array1<S>,
        beta: Array1<S>,
        delta: S,
        gamma: S,
        scale: Array2<S>,
    ) -> Result<Self> {
        let d = mu.len();
        if d == 0 || beta.len() != d || scale.nrows() != d || scale.ncols() != d {
            return Err(Error::Dimension(format!(
                "component dimensions disagree: mu {}, beta {}, scale {}x{}",
                mu.len(),
                beta.len(),
                scale.nrows(),
                scale.ncols()
            )));
        }
        if !(delta > S::zero()) || !(gamma > S::zero()) || !delta.is_finite() || !gamma.is_finite()
        {
            return Err(Error::Domain(format!(
                "component needs delta > 0 and gamma > 0, got delta={delta}, gamma={gamma}"
            )));
        }
        if mu.iter().chain(beta.iter()).chain(scale.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("component parameters must be finite".into()));
        }
        let scale_chol = cholesky(&scale.view())
            .map_err(|_| Error::NotPositiveDefinite("component scale matrix".into()))?;
        let det = {
            let mut acc = S::one();
            for i in 0..d {
                let l = scale_chol[[i, i]];
                acc = acc * l * l;
            }
            acc
        };
        if (det - S::one()).abs() >= S::DET_UNITY_TOL {
            return Err(Error::Domain(format!(
                "scale matrix must have unit determinant, got det = {det}"
            )));
        }
        let bdb = beta.dot(&scale.dot(&beta));
        let alpha = (gamma * gamma + bdb).sqrt();
        if !alpha.is_finite() {
            return Err(Error::Domain("alpha = sqrt(gamma^2 + beta' Delta beta) overflows".into()));
        }
        Ok(Self {
            mu,
            beta,
            delta,
            gamma,
            scale,
            scale_chol,
            alpha,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &Array1<S> {
        &self.mu
    }

    pub fn beta(&self) -> &Array1<S> {
        &self.beta
    }

    pub fn delta(&self) -> S {
        self.delta
    }

    pub fn gamma(&self) -> S {
        self.gamma
    }

    pub fn scale(&self) -> &Array2<S> {
        &self.scale
    }

    pub fn scale_chol(&self) -> &Array2<S> {
        &self.scale_chol
    }

    /// `alpha = sqrt(gamma^2 + beta' Delta beta)`.
    pub fn alpha(&self) -> S {
        self.alpha
    }

    /// `beta' Delta beta`.
    pub fn beta_scale_beta(&self) -> S {
        self.alpha * self.alpha - self.gamma * self.gamma
    }

    /// `(y - mu)' Delta^{-1} (y - mu)`.
    pub fn mahalanobis_sq(&self, y: &ArrayView1<S>) -> S {
        assert_eq!(y.len(), self.dim(), "observation dimension mismatch");
        let diff = Array1::from_shape_fn(self.dim(), |i| y[i] - self.mu[i]);
        quad_form_inv(&self.scale_chol.view(), &diff.view())
    }

    /// Marginal log-density at `y`.
    pub fn logpdf(&self, y: &ArrayView1<S>) -> S {
        let d = S::from_count(self.dim());
        let half = S::c(0.5);
        let order = (d + S::one()) * half;
        let q = (self.delta * self.delta + self.mahalanobis_sq(y)).sqrt();
        let diff = Array1::from_shape_fn(self.dim(), |i| y[i] - self.mu[i]);
        let p = self.delta * self.gamma + self.beta.dot(&diff);
        let ln2 = S::c(std::f64::consts::LN_2);
        let ln_pi = S::c(std::f64::consts::PI).ln();
        let log_k = log_bessel_k(order, self.alpha * q)
            .expect("alpha q > 0 by construction");
        self.delta.ln() - (d - S::one()) * half * ln2
            + order * (self.alpha.ln() - ln_pi - q.ln())
            + p
            + log_k
    }

    /// Joint log-density of `(y, u)`; errors on `u <= 0`.
    pub fn joint_logpdf(&self, y: &ArrayView1<S>, u: S) -> Result<S> {
        if !(u > S::zero()) {
            return Err(Error::Domain(format!("joint density needs u > 0, got {u}")));
        }
        let r = self.mahalanobis_sq(y);
        let diff = Array1::from_shape_fn(self.dim(), |i| y[i] - self.mu[i]);
        let lin = self.beta.dot(&diff);
        Ok(self.joint_logpdf_parts(r, lin, u))
    }

    /// Joint log-density from precomputed `r = (y-mu)' Delta^{-1} (y-mu)`
    /// and `lin = beta'(y-mu)`; the Gibbs engine reuses both across the
    /// membership and latent updates.
    pub(crate) fn joint_logpdf_parts(&self, r: S, lin: S, u: S) -> S {
        let d = S::from_count(self.dim());
        let half = S::c(0.5);
        let log_2pi = S::c(1.837_877_066_409_345_4);
        // Conditional normal part, with log det(Delta) = 0.
        let normal = -d * half * (log_2pi + u.ln()) - half * r / u
            + lin
            - half * u * self.beta_scale_beta();
        // Inverse Gaussian mixing density.
        let half_log_2pi = S::c(0.918_938_533_204_672_7);
        let ig = self.delta.ln() - half_log_2pi + self.delta * self.gamma
            - S::c(1.5) * u.ln()
            - half * (self.delta * self.delta / u + self.gamma * self.gamma * u);
        normal + ig
    }

    /// The component for the affinely transformed variable
    /// `y' = shift + diag(scale) * y`.
    ///
    /// The latent scale absorbs the determinant factor so the constraint
    /// `det(Delta) = 1` is preserved: with `c = det(D Delta D)^(1/d)`,
    /// the new parameters are `mu' = shift + D mu`, `beta' = D^{-1} beta`,
    /// `Delta' = D Delta D / c`, `delta' = delta sqrt(c)`,
    /// `gamma' = gamma / sqrt(c)`.
    pub fn affine_transform(&self, scale: &[S], shift: &[S]) -> Result<Self> {
        let d = self.dim();
        if scale.len() != d || shift.len() != d {
            return Err(Error::Dimension("affine transform dimension mismatch".into()));
        }
        if scale.iter().any(|&s| !(s > S::zero())) {
            return Err(Error::Domain("affine scale factors must be positive".into()));
        }
        let mu = Array1::from_shape_fn(d, |i| shift[i] + scale[i] * self.mu[i]);
        let beta = Array1::from_shape_fn(d, |i| self.beta[i] / scale[i]);
        let mut new_scale =
            Array2::from_shape_fn((d, d), |(i, j)| scale[i] * self.scale[[i, j]] * scale[j]);
        let det = spd_determinant(&new_scale.view())?;
        let c = det.powf(S::from_count(d).recip());
        new_scale.mapv_inplace(|v| v / c);
        let sqrt_c = c.sqrt();
        Self::new(mu, beta, self.delta * sqrt_c, self.gamma / sqrt_c, new_scale)
    }
}

/// A finite mixture: positive weights summing to one plus one
/// [`MnigComponent`] per group.
#[derive(Clone, Debug)]
pub struct MixtureModel<S: Scalar> {
    weights: Vec<S>,
    components: Vec<MnigComponent<S>>,
}

impl<S: Scalar> MixtureModel<S> {
    pub fn new(weights: Vec<S>, components: Vec<MnigComponent<S>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != components.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if weights.iter().any(|&w| !(w > S::zero())) {
            return Err(Error::Domain("mixing weights must be strictly positive".into()));
        }
        let total: S = weights.iter().copied().sum();
        if (total - S::one()).abs() >= S::WEIGHT_SUM_TOL {
            return Err(Error::Domain(format!(
                "mixing weights must sum to one, got {total}"
            )));
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return Err(Error::Dimension("components must share one dimension".into()));
        }
        Ok(Self { weights, components })
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn components(&self) -> &[MnigComponent<S>] {
        &self.components
    }

    /// Mixture log-density at a single point.
    pub fn logpdf(&self, y: &ArrayView1<S>) -> S {
        let terms: Vec<S> = self
            .weights
            .iter()
            .zip(&self.components)
            .map(|(&w, c)| w.ln() + c.logpdf(y))
            .collect();
        log_sum_exp(&terms)
    }

    /// Reorders components in place by the given permutation: entry `k` of
    /// `perm` names the old index that moves to position `k`.
    pub(crate) fn permute(&mut self, perm: &[usize]) {
        debug_assert_eq!(perm.len(), self.components.len());
        let weights = perm.iter().map(|&o| self.weights[o]).collect();
        let components = perm.iter().map(|&o| self.components[o].clone()).collect();
        self.weights = weights;
        self.components = components;
    }
}

/// Observations as an `n x d` matrix plus optional reference labels.
#[derive(Clone, Debug)]
pub struct Dataset<S: Scalar> {
    y: Array2<S>,
    labels: Option<Vec<usize>>,
}

impl<S: Scalar> Dataset<S> {
    pub fn new(y: Array2<S>, labels: Option<Vec<usize>>) -> Result<Self> {
        if y.nrows() == 0 || y.ncols() == 0 {
            return Err(Error::Dimension("dataset needs n >= 1 and d >= 1".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("dataset entries must be finite".into()));
        }
        if let Some(ref l) = labels {
            if l.len() != y.nrows() {
                return Err(Error::Dimension(format!(
                    "{} labels for {} rows",
                    l.len(),
                    y.nrows()
                )));
            }
        }
        Ok(Self { y, labels })
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn dim(&self) -> usize {
        self.y.ncols()
    }

    pub fn y(&self) -> &Array2<S> {
        &self.y
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, S> {
        self.y.row(i)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }
}

/// Hard component assignments: one component index per observation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignments {
    labels: Vec<usize>,
    n_components: usize,
}

impl Assignments {
    pub fn new(labels: Vec<usize>, n_components: usize) -> Result<Self> {
        if n_components == 0 || labels.is_empty() {
            return Err(Error::Dimension("assignments need n >= 1 and G >= 1".into()));
        }
        if labels.iter().any(|&l| l >= n_components) {
            return Err(Error::Domain("assignment label out of range".into()));
        }
        Ok(Self { labels, n_components })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_components];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub(crate) fn set(&mut self, i: usize, label: usize) {
        debug_assert!(label < self.n_components);
        self.labels[i] = label;
    }

    /// Renames component indices: `perm[k]` is the old index now called `k`.
    pub fn permute(&mut self, perm: &[usize]) {
        let mut new_name = vec![0usize; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            new_name[old] = new;
        }
        for l in &mut self.labels {
            *l = new_name[*l];
        }
    }
}

/// Per-component accumulators of `(y, u, z)`:
/// `t0 = Σ z`, `t1 = Σ z y`, `t2 = Σ z y / u`, `t3 = Σ z u / 2`,
/// `t4 = Σ z / (2u)`, `t5 = Σ z y y' / (2u)`.
#[derive(Clone, Debug)]
pub struct SufficientStats<S: Scalar> {
    pub t0: S,
    pub t1: Array1<S>,
    pub t2: Array1<S>,
    pub t3: S,
    pub t4: S,
    pub t5: Array2<S>,
}

impl<S: Scalar> SufficientStats<S> {
    pub fn zeros(d: usize) -> Self {
        Self {
            t0: S::zero(),
            t1: Array1::zeros(d),
            t2: Array1::zeros(d),
            t3: S::zero(),
            t4: S::zero(),
            t5: Array2::zeros((d, d)),
        }
    }
}

/// Accumulates [`SufficientStats`] for every component from hard
/// assignments and strictly positive latents `u` (an `n x G` matrix).
pub fn accumulate_stats<S: Scalar>(
    data: &Dataset<S>,
    u: &ArrayView2<S>,
    z: &Assignments,
) -> Result<Vec<SufficientStats<S>>> {
    let n = data.n();
    let d = data.dim();
    let g = z.n_components();
    if u.nrows() != n || u.ncols() != g || z.n() != n {
        return Err(Error::Dimension(format!(
            "stats accumulation shapes disagree: data {}x{}, u {}x{}, z {}",
            n,
            d,
            u.nrows(),
            u.ncols(),
            z.n()
        )));
    }
    if u.iter().any(|&v| !(v > S::zero())) {
        return Err(Error::Domain("latents u must be strictly positive".into()));
    }
    let half = S::c(0.5);
    let mut stats: Vec<SufficientStats<S>> = (0..g).map(|_| SufficientStats::zeros(d)).collect();
    for i in 0..n {
        let gi = z.labels()[i];
        let ui = u[[i, gi]];
        let y = data.row(i);
        let s = &mut stats[gi];
        let u_inv = ui.recip();
        s.t0 += S::one();
        s.t3 += half * ui;
        s.t4 += half * u_inv;
        for a in 0..d {
            s.t1[a] += y[a];
            s.t2[a] += y[a] * u_inv;
            for b in 0..d {
                s.t5[[a, b]] += half * u_inv * y[a] * y[b];
            }
        }
    }
    Ok(stats)
}

/// Observed-data log-likelihood `Σ_i log Σ_g π_g f_g(y_i)`.
pub fn mixture_loglik<S: Scalar>(model: &MixtureModel<S>, data: &Dataset<S>) -> Result<S> {
    if model.dim() != data.dim() {
        return Err(Error::Dimension(format!(
            "model dimension {} but data dimension {}",
            model.dim(),
            data.dim()
        )));
    }
    let log_weights: Vec<S> = model.weights.iter().map(|&w| w.ln()).collect();
    let mut total = S::zero();
    let mut terms = vec![S::zero(); model.n_components()];
    for i in 0..data.n() {
        let y = data.row(i);
        for (g, c) in model.components.iter().enumerate() {
            terms[g] = log_weights[g] + c.logpdf(&y);
        }
        total += log_sum_exp(&terms);
    }
    Ok(total)
}

/// Draws `n` observations from the mixture; labels record the generating
/// component.
pub fn generate_dataset<S: Scalar, R: Rng + ?Sized>(
    model: &MixtureModel<S>,
    n: usize,
    rng: &mut R,
) -> Result<Dataset<S>> {
    if n == 0 {
        return Err(Error::Dimension("cannot generate an empty dataset".into()));
    }
    let d = model.dim();
    let mut y = Array2::<S>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let g = sample_categorical(model.weights(), rng);
        let comp = &model.components[g];
        let u = sample_inverse_gaussian(comp.gamma(), comp.delta(), rng)?;
        let sqrt_u = u.sqrt();
        let shift = comp.scale().dot(comp.beta());
        let l = comp.scale_chol();
        let eps = Array1::from_shape_fn(d, |_| S::std_normal(rng));
        let noise = l.dot(&eps);
        for a in 0..d {
            y[[i, a]] = comp.mu()[a] + u * shift[a] + sqrt_u * noise[a];
        }
        labels.push(g);
    }
    Dataset::new(y, Some(labels))
}

pub(crate) fn sample_categorical<S: Scalar, R: Rng + ?Sized>(weights: &[S], rng: &mut R) -> usize {
    let u = S::uniform01(rng);
    let mut acc = S::zero();
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

pub(crate) fn log_sum_exp<S: Scalar>(terms: &[S]) -> S {
    let max = terms.iter().copied().fold(S::neg_infinity(), S::max);
    if !max.is_finite() {
        return max;
    }
    let sum: S = terms.iter().map(|&t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Scatter matrix `Σ_i z_i u_i^{-1} (y_i - mu)(y_i - mu)'` for one
/// component, used by the scale-matrix posterior.
pub(crate) fn centered_scatter<S: Scalar>(
    data: &Dataset<S>,
    u_col: &ArrayView1<S>,
    z: &Assignments,
    g: usize,
    mu: &ArrayView1<S>,
) -> Array2<S> {
    let d = data.dim();
    let mut s = Array2::<S>::zeros((d, d));
    for i in 0..data.n() {
        if z.labels()[i] != g {
            continue;
        }
        let y = data.row(i);
        let diff = Array1::from_shape_fn(d, |a| y[a] - mu[a]);
        let w = u_col[i].recip();
        let o = outer(&diff.view(), &diff.view());
        s.scaled_add(w, &o);
    }
    s
}
