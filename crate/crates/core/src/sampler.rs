//! Random generation: Wishart and normal-Wishart draws, conversion of a joint
//! `(μ, W)` into per-node regression parameters, and ancestral sampling.
//!
//! Every operation takes an explicit seed. Sub-streams of one seed are separate
//! ChaCha streams, so results do not depend on evaluation order.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, IndexSet, SymMatrix};
use crate::prior::{local_regression_prior, NormalWishartPrior, RegressionPrior};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomSeed(pub u64);

impl RandomSeed {
    /// Generator for sub-stream `stream` of this seed.
    pub fn rng(self, stream: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }

    /// A seed derived from this one, e.g. for the k-th restart.
    pub fn derive(self, k: u64) -> RandomSeed {
        RandomSeed(self.rng(u64::MAX - k).random())
    }
}

/// Draws `W` with density ∝ `|W|^((a−n−1)/2) exp(−tr(T W)/2)` by the Bartlett
/// construction on the Cholesky factor of `T⁻¹`. Non-integer `a` is fine.
#[derive(Debug, Clone)]
pub struct WishartSampler {
    dof: f64,
    scale_factor: DMatrix<f64>,
    chi: Vec<ChiSquared<f64>>,
}

impl WishartSampler {
    pub fn new(dof: f64, t: &SymMatrix) -> Result<Self> {
        let n = t.order();
        if !(dof > n as f64 - 1.0) || !dof.is_finite() {
            return Err(Error::InvalidDegreesOfFreedom { dim: n, dof });
        }
        let sigma = linalg::inverse(t)?;
        let scale_factor = Cholesky::new(&sigma)?.lower().clone();
        let chi = (0..n)
            .map(|i| ChiSquared::new(dof - i as f64).expect("dof - i > 0"))
            .collect();
        Ok(Self { dof, scale_factor, chi })
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn dim(&self) -> usize {
        self.scale_factor.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SymMatrix {
        let n = self.dim();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = self.chi[i].sample(rng).sqrt();
            for j in 0..i {
                a[(i, j)] = rng.sample(StandardNormal);
            }
        }
        let la = &self.scale_factor * a;
        SymMatrix::from_matrix(&la * la.transpose()).expect("square")
    }
}

pub fn sample_wishart(a: f64, t: &SymMatrix, seed: RandomSeed) -> Result<SymMatrix> {
    let sampler = WishartSampler::new(a, t)?;
    Ok(sampler.sample(&mut seed.rng(0)))
}

/// Joint draws of `(μ, W)` from a normal-Wishart prior.
#[derive(Debug, Clone)]
pub struct NormalWishartSampler {
    prior: NormalWishartPrior,
    wishart: WishartSampler,
}

impl NormalWishartSampler {
    pub fn new(prior: &NormalWishartPrior) -> Result<Self> {
        Ok(Self { wishart: WishartSampler::new(prior.alpha(), prior.t())?, prior: prior.clone() })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, SymMatrix) {
        let w = self.wishart.sample(rng);
        let mu = sample_mean_given_precision(self.prior.nu(), &w.scale(self.prior.alpha_mu()), rng)
            .expect("Wishart draws are positive definite");
        (mu, w)
    }
}

/// Draws from `N(mean, precision⁻¹)`.
pub fn sample_mean_given_precision<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    precision: &SymMatrix,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let chol = Cholesky::new(precision)?;
    let n = mean.len();
    let e = DMatrix::from_fn(n, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    // C Cᵀ = P  ⇒  C⁻ᵀ e has covariance P⁻¹
    let z = chol
        .lower()
        .tr_solve_lower_triangular(&e)
        .expect("positive diagonal");
    Ok(mean + DVector::from_column_slice(z.as_slice()))
}

pub fn sample_normal_wishart(p: &NormalWishartPrior, seed: RandomSeed) -> Result<(DVector<f64>, SymMatrix)> {
    Ok(NormalWishartSampler::new(p)?.sample(&mut seed.rng(0)))
}

/// Per-node linear-Gaussian regression parameters:
/// `x_i = intercept_i + coefs_i · x_{Pa_i} + ε`, `ε ~ N(0, variance_i)`.
/// Coefficients are aligned with the ascending parent index set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDagParams {
    pub parents: Vec<IndexSet>,
    pub intercepts: Vec<f64>,
    pub coefs: Vec<DVector<f64>>,
    pub variances: Vec<f64>,
}

impl GaussianDagParams {
    pub fn new(
        parents: Vec<IndexSet>,
        intercepts: Vec<f64>,
        coefs: Vec<DVector<f64>>,
        variances: Vec<f64>,
    ) -> Result<Self> {
        let n = parents.len();
        for len in [intercepts.len(), coefs.len(), variances.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, found: len });
            }
        }
        for i in 0..n {
            if coefs[i].len() != parents[i].len() {
                return Err(Error::DimensionMismatch { expected: parents[i].len(), found: coefs[i].len() });
            }
            if !(variances[i] > 0.0) || !variances[i].is_finite() {
                return Err(Error::InvalidConfig(format!("variance of node {i} must be positive")));
            }
        }
        Ok(Self { parents, intercepts, coefs, variances })
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn matches(&self, g: &Dag) -> bool {
        g.n() == self.n() && (0..g.n()).all(|i| g.parents(i) == &self.parents[i])
    }

    /// Mean and precision of the joint normal: with `B` the coefficient matrix,
    /// `μ = (I − B)⁻¹ m` and `W = (I − B)ᵀ D⁻¹ (I − B)`.
    pub fn to_joint(&self) -> (DVector<f64>, SymMatrix) {
        let n = self.n();
        let mut i_minus_b = DMatrix::<f64>::identity(n, n);
        for (i, ps) in self.parents.iter().enumerate() {
            for (k, j) in ps.iter().enumerate() {
                i_minus_b[(i, j)] -= self.coefs[i][k];
            }
        }
        let d_inv = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| 1.0 / self.variances[i]));
        let w = i_minus_b.transpose() * d_inv * &i_minus_b;
        let m = DVector::from_column_slice(&self.intercepts);
        let mu = i_minus_b.lu().solve(&m).expect("unit triangular up to permutation");
        (mu, SymMatrix::from_matrix(w).expect("square"))
    }
}

/// Regression parameters of the complete DAG with node order `ordering` that
/// reproduce `N(μ, W⁻¹)` exactly.
///
/// For the last node in the ordering: `v = 1/W₂₂`, `b = −W₂₂⁻¹ W₁₂`,
/// `m = μ₂ − b·μ₁`; then recurse on `(μ₁, W₁₁ − W₁₂ W₂₂⁻¹ W₁₂ᵀ)`.
pub fn regression_params_from_joint(
    mu: &DVector<f64>,
    w: &SymMatrix,
    ordering: &[usize],
) -> Result<GaussianDagParams> {
    let n = w.order();
    if mu.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: mu.len() });
    }
    let mut seen = vec![false; n];
    if ordering.len() != n || ordering.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
        return Err(Error::InvalidGraph("ordering must be a permutation of the nodes".into()));
    }
    Cholesky::new(w)?;
    let mut parents = vec![IndexSet::empty(); n];
    let mut intercepts = vec![0.0; n];
    let mut coefs = vec![DVector::zeros(0); n];
    let mut variances = vec![0.0; n];

    // `coords` lists the original indices of the current block, ascending
    let mut coords = IndexSet::all(n);
    let mut prec = w.clone();
    for k in (0..n).rev() {
        let node = ordering[k];
        let pos = coords.position(node).expect("node still in block");
        let w22 = prec.get(pos, pos);
        let pa = coords.without(node);
        let v = 1.0 / w22;
        let b = DVector::from_fn(pa.len(), |i, _| {
            let q = coords.position(pa.members()[i]).expect("parent in block");
            -prec.get(q, pos) / w22
        });
        let mu_pa = DVector::from_fn(pa.len(), |i, _| mu[pa.members()[i]]);
        intercepts[node] = mu[node] - b.dot(&mu_pa);
        variances[node] = v;
        coefs[node] = b;
        parents[node] = pa.clone();
        if k > 0 {
            let keep = coords.without(node);
            let keep_pos = IndexSet::from_sorted_unchecked(
                keep.iter().map(|i| coords.position(i).expect("in block")).collect(),
            );
            prec = linalg::schur_complement(&prec, &keep_pos)?;
            coords = keep;
        }
    }
    GaussianDagParams::new(parents, intercepts, coefs, variances)
}

/// Draws one parameter set per family independently from the regression priors
/// the normal-Wishart prior induces on `g`.
pub fn sample_local_params(p: &NormalWishartPrior, g: &Dag, seed: RandomSeed) -> Result<GaussianDagParams> {
    if g.n() != p.dim() {
        return Err(Error::VariableMismatch);
    }
    let n = g.n();
    let mut intercepts = Vec::with_capacity(n);
    let mut coefs = Vec::with_capacity(n);
    let mut variances = Vec::with_capacity(n);
    for i in 0..n {
        let rp = local_regression_prior(p, i, g.parents(i))?;
        let (m, b, v) = sample_regression(&rp, &mut seed.rng(i as u64))?;
        intercepts.push(m);
        coefs.push(b);
        variances.push(v);
    }
    GaussianDagParams::new((0..n).map(|i| g.parents(i).clone()).collect(), intercepts, coefs, variances)
}

/// One draw of `(m, b, v)` from a regression prior.
pub fn sample_regression<R: Rng + ?Sized>(
    rp: &RegressionPrior,
    rng: &mut R,
) -> Result<(f64, DVector<f64>, f64)> {
    let gamma = Gamma::new(rp.gamma_shape(), 1.0 / rp.gamma_rate())
        .map_err(|e| Error::InvalidPrior(e.to_string()))?;
    let v = 1.0 / gamma.sample(rng);
    let b = match &rp.coef_precision {
        Some(prec) => sample_mean_given_precision(&rp.coef_mean, &prec.scale(1.0 / v), rng)?,
        None => DVector::zeros(0),
    };
    let z: f64 = rng.sample(StandardNormal);
    let m = rp.intercept_mean(&b) + z * (v / rp.intercept_precision_scale).sqrt();
    Ok((m, b, v))
}

/// Ancestral sampling of `rows` observations; rows of the result are observations.
pub fn sample_dataset(params: &GaussianDagParams, g: &Dag, rows: usize, seed: RandomSeed) -> Result<DMatrix<f64>> {
    if !params.matches(g) {
        return Err(Error::VariableMismatch);
    }
    let n = g.n();
    let order = g.topological_order();
    let sd: Vec<f64> = params.variances.iter().map(|v| v.sqrt()).collect();
    let mut rng = seed.rng(0);
    let mut data = DMatrix::zeros(rows, n);
    for r in 0..rows {
        for &i in &order {
            let mut x = params.intercepts[i];
            for (k, j) in params.parents[i].iter().enumerate() {
                x += params.coefs[i][k] * data[(r, j)];
            }
            let e: f64 = rng.sample(StandardNormal);
            data[(r, i)] = x + sd[i] * e;
        }
    }
    Ok(data)
}
