//! Marginal likelihood scores for Gaussian DAG models.
//!
//! The score of a DAG is a sum over families of
//! `log p(d^{Pa ∪ {X}}) − log p(d^{Pa})`, where each subset term is the
//! closed-form marginal likelihood of the complete model restricted to the
//! subset. All values are natural logs.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::dag::{enumerate_dags, Dag};
use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, IndexSet};
use crate::prior::{
    marginal_prior, marginal_prior_inverse_block, posterior_update, wishart_log_norm_const,
    NormalWishartPrior, SufficientStats,
};

/// Largest node count for exhaustive structure posteriors.
pub const MAX_POSTERIOR_NODES: usize = 4;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FamilyKey {
    pub node: usize,
    pub parents: IndexSet,
}

impl FamilyKey {
    pub fn new(node: usize, parents: IndexSet) -> Result<Self> {
        if parents.contains(node) {
            return Err(Error::InvalidIndexSet(format!("node {node} is among its own parents")));
        }
        Ok(Self { node, parents })
    }
}

fn check_columns(p: &NormalWishartPrior, data: &DMatrix<f64>, y: &IndexSet) -> Result<()> {
    if data.ncols() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: data.ncols() });
    }
    if y.members().last().is_some_and(|&i| i >= p.dim()) {
        return Err(Error::InvalidIndexSet("subset exceeds the data columns".into()));
    }
    Ok(())
}

/// Closed-form complete-model log marginal likelihood of data with statistics `s`
/// under prior `p` (both over the same coordinates).
fn complete_log_marginal(p: &NormalWishartPrior, s: &SufficientStats) -> Result<f64> {
    let m = s.count();
    if m == 0 {
        return Ok(0.0);
    }
    let l = p.dim();
    let (lf, mf) = (l as f64, m as f64);
    let post = posterior_update(p, s)?;
    let a = p.alpha();
    Ok(-0.5 * lf * mf * LN_2PI
        + 0.5 * lf * (p.alpha_mu() / post.alpha_mu()).ln()
        + wishart_log_norm_const(l, a)?
        - wishart_log_norm_const(l, a + mf)?
        + 0.5 * a * linalg::log_det(p.t())?
        - 0.5 * (a + mf) * linalg::log_det(post.t())?)
}

fn subset_from_stats(p: &NormalWishartPrior, s: &SufficientStats, y: &IndexSet) -> Result<f64> {
    if y.is_empty() || s.count() == 0 {
        return Ok(0.0);
    }
    let marg = marginal_prior(p, y)?;
    complete_log_marginal(&marg, &s.restrict(y))
}

/// `log p(d^Y)`: marginalize the prior to `Y`, then apply the complete-model
/// closed form to the columns in `Y`. Empty `Y` or empty data gives 0.
pub fn subset_log_marginal(p: &NormalWishartPrior, data: &DMatrix<f64>, y: &IndexSet) -> Result<f64> {
    check_columns(p, data, y)?;
    subset_from_stats(p, &SufficientStats::from_data(data), y)
}

/// The subset formula evaluated with `T_Y = ((T⁻¹)_YY)⁻¹` and
/// `R_Y = ((R⁻¹)_YY)⁻¹`, `R` being the posterior matrix of the full coordinate set.
///
/// Not used for scoring. It disagrees with [`sequential_predictive_log_marginal`]
/// whenever `Y` is a proper subset and the data are non-trivial.
pub fn subset_log_marginal_inverse_block(
    p: &NormalWishartPrior,
    data: &DMatrix<f64>,
    y: &IndexSet,
) -> Result<f64> {
    check_columns(p, data, y)?;
    let s = SufficientStats::from_data(data);
    let m = s.count();
    if y.is_empty() || m == 0 {
        return Ok(0.0);
    }
    let l = y.len();
    let (lf, mf) = (l as f64, m as f64);
    let marg = marginal_prior_inverse_block(p, y)?;
    let full_post = posterior_update(p, &s)?;
    let r_y = linalg::submatrix_inverse_marginal(full_post.t(), y)?;
    let a = marg.alpha();
    Ok(-0.5 * lf * mf * LN_2PI
        + 0.5 * lf * (p.alpha_mu() / (p.alpha_mu() + mf)).ln()
        + wishart_log_norm_const(l, a)?
        - wishart_log_norm_const(l, a + mf)?
        + 0.5 * a * linalg::log_det(marg.t())?
        - 0.5 * (a + mf) * linalg::log_det(&r_y)?)
}

/// Log density of a multivariate Student-t with `dof` degrees of freedom,
/// location `loc` and scale matrix given by its Cholesky factor.
fn student_t_log_density(x: &DVector<f64>, loc: &DVector<f64>, scale: &Cholesky, dof: f64) -> f64 {
    let l = x.len() as f64;
    let q = scale.inv_quad_form(&(x - loc));
    ln_gamma(0.5 * (dof + l)) - ln_gamma(0.5 * dof) - 0.5 * l * (dof * std::f64::consts::PI).ln()
        - 0.5 * scale.log_det()
        - 0.5 * (dof + l) * (q / dof).ln_1p()
}

/// Prequential route to `log p(d^Y)`: the sum over rows of the log one-step
/// predictive density of the row's `Y` coordinates.
///
/// Each predictive is the `Y`-marginal of the full-coordinate posterior predictive,
/// a multivariate t with `α − n + 1` degrees of freedom, location `ν_Y` and scale
/// `R_YY (α_μ + 1)/(α_μ (α − n + 1))` at the current posterior.
pub fn sequential_predictive_log_marginal(
    p: &NormalWishartPrior,
    data: &DMatrix<f64>,
    y: &IndexSet,
) -> Result<f64> {
    check_columns(p, data, y)?;
    if y.is_empty() {
        return Ok(0.0);
    }
    let n = p.dim();
    let mut current = p.clone();
    let mut total = 0.0;
    for r in 0..data.nrows() {
        let row = DVector::from_fn(n, |j, _| data[(r, j)]);
        let dof = current.alpha() - n as f64 + 1.0;
        let k = current.alpha_mu();
        let scale = current.t().submatrix(y).scale((k + 1.0) / (k * dof));
        let chol = Cholesky::new(&scale)?;
        let x_y = DVector::from_fn(y.len(), |i, _| row[y.members()[i]]);
        let loc_y = DVector::from_fn(y.len(), |i, _| current.nu()[y.members()[i]]);
        total += student_t_log_density(&x_y, &loc_y, &chol, dof);
        let one = SufficientStats::from_data(&DMatrix::from_row_slice(1, n, row.as_slice()));
        current = posterior_update(&current, &one)?;
    }
    Ok(total)
}

/// Insert-only map from `(context fingerprint, family)` to family score.
#[derive(Debug, Default)]
pub struct FamilyCache {
    map: RwLock<HashMap<(u64, FamilyKey), f64>>,
}

impl FamilyCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, fingerprint: u64, key: &FamilyKey) -> Option<f64> {
        self.map
            .read()
            .expect("cache lock poisoned")
            .get(&(fingerprint, key.clone()))
            .copied()
    }

    /// Keeps the first value stored under a key.
    pub fn insert_if_absent(&self, fingerprint: u64, key: FamilyKey, value: f64) -> f64 {
        *self
            .map
            .write()
            .expect("cache lock poisoned")
            .entry((fingerprint, key))
            .or_insert(value)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Scores families and DAGs for one (prior, dataset) pair, memoizing family terms.
#[derive(Debug, Clone)]
pub struct Scorer {
    prior: NormalWishartPrior,
    stats: SufficientStats,
    fingerprint: u64,
    cache: Arc<FamilyCache>,
}

impl Scorer {
    pub fn new(prior: NormalWishartPrior, data: &DMatrix<f64>) -> Result<Self> {
        Self::with_cache(prior, data, Arc::new(FamilyCache::new()))
    }

    pub fn with_cache(prior: NormalWishartPrior, data: &DMatrix<f64>, cache: Arc<FamilyCache>) -> Result<Self> {
        if data.ncols() != prior.dim() {
            return Err(Error::DimensionMismatch { expected: prior.dim(), found: data.ncols() });
        }
        let mut h = DefaultHasher::new();
        data.shape().hash(&mut h);
        for v in data.iter() {
            v.to_bits().hash(&mut h);
        }
        prior.alpha_mu().to_bits().hash(&mut h);
        prior.alpha().to_bits().hash(&mut h);
        for v in prior.nu().iter().chain(prior.t().as_matrix().iter()) {
            v.to_bits().hash(&mut h);
        }
        Ok(Self {
            stats: SufficientStats::from_data(data),
            prior,
            fingerprint: h.finish(),
            cache,
        })
    }

    pub fn prior(&self) -> &NormalWishartPrior {
        &self.prior
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn cache(&self) -> &Arc<FamilyCache> {
        &self.cache
    }

    pub fn subset_log_marginal(&self, y: &IndexSet) -> Result<f64> {
        subset_from_stats(&self.prior, &self.stats, y)
    }

    pub fn family_log_score(&self, key: &FamilyKey) -> Result<f64> {
        if let Some(v) = self.cache.get(self.fingerprint, key) {
            return Ok(v);
        }
        let with = self.subset_log_marginal(&key.parents.with(key.node))?;
        let without = self.subset_log_marginal(&key.parents)?;
        Ok(self.cache.insert_if_absent(self.fingerprint, key.clone(), with - without))
    }

    /// Per-node family scores in node order.
    pub fn family_breakdown(&self, g: &Dag) -> Result<Vec<f64>> {
        if g.n() != self.dim() {
            return Err(Error::VariableMismatch);
        }
        (0..g.n())
            .map(|i| self.family_log_score(&FamilyKey { node: i, parents: g.parents(i).clone() }))
            .collect()
    }

    pub fn dag_log_score(&self, g: &Dag) -> Result<f64> {
        Ok(self.family_breakdown(g)?.iter().sum())
    }
}

pub fn family_log_score(p: &NormalWishartPrior, data: &DMatrix<f64>, f: &FamilyKey) -> Result<f64> {
    check_columns(p, data, &f.parents.with(f.node))?;
    Scorer::new(p.clone(), data)?.family_log_score(f)
}

pub fn dag_log_score(p: &NormalWishartPrior, data: &DMatrix<f64>, g: &Dag) -> Result<f64> {
    Scorer::new(p.clone(), data)?.dag_log_score(g)
}

/// Posterior over every DAG on `n ≤ 4` nodes, proportional to
/// `exp(log_prior(g) + dag_log_score(g))`.
pub fn structure_posterior_with_prior(
    p: &NormalWishartPrior,
    data: &DMatrix<f64>,
    log_prior: impl Fn(&Dag) -> f64,
) -> Result<Vec<(Dag, f64)>> {
    let n = p.dim();
    if n > MAX_POSTERIOR_NODES {
        return Err(Error::TooLarge { what: "node count", value: n, limit: MAX_POSTERIOR_NODES });
    }
    let scorer = Scorer::new(p.clone(), data)?;
    let dags = enumerate_dags(n)?;
    let logs: Vec<f64> = dags
        .iter()
        .map(|g| Ok(log_prior(g) + scorer.dag_log_score(g)?))
        .collect::<Result<_>>()?;
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = weights.iter().sum();
    Ok(dags.into_iter().zip(weights).map(|(g, w)| (g, w / z)).collect())
}

/// Structure posterior under the uniform structure prior.
pub fn structure_posterior(p: &NormalWishartPrior, data: &DMatrix<f64>) -> Result<Vec<(Dag, f64)>> {
    structure_posterior_with_prior(p, data, |_| 0.0)
}
