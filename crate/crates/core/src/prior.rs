//! Normal-Wishart prior over the mean and precision of a multivariate normal,
//! its conjugate update, subset marginals, and the per-family regression priors
//! those marginals induce.
//!
//! Parameterization: `W` has density proportional to
//! `|W|^((α-n-1)/2) exp(-tr(T W)/2)`, so `E[W] = α T⁻¹`, and
//! `μ | W ~ N(ν, (α_μ W)⁻¹)`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, IndexSet, SymMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct NormalWishartPrior {
    nu: DVector<f64>,
    alpha_mu: f64,
    alpha: f64,
    t: SymMatrix,
}

impl NormalWishartPrior {
    pub fn new(nu: DVector<f64>, alpha_mu: f64, alpha: f64, t: SymMatrix) -> Result<Self> {
        let n = t.order();
        if nu.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: nu.len() });
        }
        if !(alpha_mu > 0.0) || !alpha_mu.is_finite() {
            return Err(Error::InvalidPrior(format!("alpha_mu must be positive, got {alpha_mu}")));
        }
        if !(alpha > n as f64 - 1.0) || !alpha.is_finite() {
            return Err(Error::InvalidDegreesOfFreedom { dim: n, dof: alpha });
        }
        if nu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPrior("nu has non-finite entries".into()));
        }
        Cholesky::new(&t)?;
        Ok(Self { nu, alpha_mu, alpha, t })
    }

    /// ν = 0, α_μ = 1, α = n + 2, T = I.
    pub fn default_for(n: usize) -> Self {
        Self::new(DVector::zeros(n), 1.0, n as f64 + 2.0, SymMatrix::identity(n))
            .expect("default prior is valid")
    }

    pub fn dim(&self) -> usize {
        self.t.order()
    }

    pub fn nu(&self) -> &DVector<f64> {
        &self.nu
    }

    pub fn alpha_mu(&self) -> f64 {
        self.alpha_mu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn t(&self) -> &SymMatrix {
        &self.t
    }

    /// Largest absolute componentwise difference over all four parameters.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let nu = (&self.nu - &other.nu).amax();
        nu.max((self.alpha_mu - other.alpha_mu).abs())
            .max((self.alpha - other.alpha).abs())
            .max(self.t.max_abs_diff(&other.t))
    }
}

/// `log c(l, a)` for the Wishart normalizing constant
/// `c(l, a) = [2^(a l/2) π^(l(l-1)/4) Π_{i=1..l} Γ((a+1-i)/2)]⁻¹`.
pub fn wishart_log_norm_const(l: usize, a: f64) -> Result<f64> {
    if l == 0 || !(a > l as f64 - 1.0) {
        return Err(Error::InvalidDegreesOfFreedom { dim: l, dof: a });
    }
    let lf = l as f64;
    let mut s = 0.5 * a * lf * std::f64::consts::LN_2
        + 0.25 * lf * (lf - 1.0) * std::f64::consts::PI.ln();
    for i in 1..=l {
        s += ln_gamma(0.5 * (a + 1.0 - i as f64));
    }
    Ok(-s)
}

/// Sample count, mean and scatter matrix of a data table.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    count: usize,
    mean: DVector<f64>,
    scatter: SymMatrix,
}

impl SufficientStats {
    /// Rows of `data` are observations.
    pub fn from_data(data: &DMatrix<f64>) -> Self {
        let (m, n) = data.shape();
        assert!(n >= 1, "data needs at least one column");
        if m == 0 {
            return Self { count: 0, mean: DVector::zeros(n), scatter: SymMatrix::zeros(n) };
        }
        let mean = DVector::from_fn(n, |j, _| data.column(j).sum() / m as f64);
        let scatter = SymMatrix::from_lower_fn(n, |i, j| {
            (0..m).map(|r| (data[(r, i)] - mean[i]) * (data[(r, j)] - mean[j])).sum()
        });
        Self { count: m, mean, scatter }
    }

    pub fn empty(n: usize) -> Self {
        Self { count: 0, mean: DVector::zeros(n), scatter: SymMatrix::zeros(n) }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn scatter(&self) -> &SymMatrix {
        &self.scatter
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Statistics of the columns in `y`.
    pub fn restrict(&self, y: &IndexSet) -> Self {
        let mean = DVector::from_fn(y.len(), |i, _| self.mean[y.members()[i]]);
        Self { count: self.count, mean, scatter: self.scatter.submatrix(y) }
    }
}

/// Conjugate update: `ν' = (α_μ ν + m x̄)/(α_μ + m)`, `α_μ' = α_μ + m`,
/// `α' = α + m`, `T' = T + S + (α_μ m/(α_μ + m))(ν − x̄)(ν − x̄)ᵀ`.
pub fn posterior_update(p: &NormalWishartPrior, s: &SufficientStats) -> Result<NormalWishartPrior> {
    if s.dim() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), found: s.dim() });
    }
    if s.count == 0 {
        return Ok(p.clone());
    }
    let m = s.count as f64;
    let k = p.alpha_mu + m;
    let nu = (&p.nu * p.alpha_mu + &s.mean * m) / k;
    let d = &p.nu - &s.mean;
    let r = p.t.add(&s.scatter).add(&SymMatrix::outer(&d).scale(p.alpha_mu * m / k));
    NormalWishartPrior::new(nu, k, p.alpha + m, r)
}

/// Prior of `(μ_Y, ((W⁻¹)_YY)⁻¹)`: normal-Wishart with `ν_Y`, `α_μ`,
/// `α − n + |Y|` and the principal submatrix `T_YY`.
///
/// `(W⁻¹)_YY` is inverse-Wishart with scale `T_YY` and `α − n + |Y|` degrees of
/// freedom, which fixes the matrix parameter of the marginal.
pub fn marginal_prior(p: &NormalWishartPrior, y: &IndexSet) -> Result<NormalWishartPrior> {
    marginal_with(p, y, |t, y| Ok(t.submatrix(y)))
}

/// Same as [`marginal_prior`] but with matrix parameter `((T⁻¹)_YY)⁻¹`.
///
/// Kept for conformance checks. It does not describe the law of the marginal
/// precision unless `T` is block diagonal with respect to `Y`.
pub fn marginal_prior_inverse_block(p: &NormalWishartPrior, y: &IndexSet) -> Result<NormalWishartPrior> {
    marginal_with(p, y, linalg::submatrix_inverse_marginal)
}

fn marginal_with(
    p: &NormalWishartPrior,
    y: &IndexSet,
    matrix: impl Fn(&SymMatrix, &IndexSet) -> Result<SymMatrix>,
) -> Result<NormalWishartPrior> {
    if y.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = p.dim();
    if y.members().last().is_some_and(|&i| i >= n) {
        return Err(Error::InvalidIndexSet(format!("subset exceeds dimension {n}")));
    }
    if y.len() == n {
        return Ok(p.clone());
    }
    let nu = DVector::from_fn(y.len(), |i, _| p.nu[y.members()[i]]);
    let alpha = p.alpha - n as f64 + y.len() as f64;
    NormalWishartPrior::new(nu, p.alpha_mu, alpha, matrix(&p.t, y)?)
}

/// Prior over the regression parameters `(m, b, v)` of one node given its parents:
///
/// * `1/v` is one-dimensional Wishart with `precision_dof` degrees of freedom and
///   matrix parameter `precision_scale`, i.e. Gamma(dof/2, rate = scale/2);
/// * `b | v ~ N(coef_mean, v · coef_precision⁻¹)`;
/// * `m | v, b ~ N(intercept_location − b·parent_means, v / intercept_precision_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionPrior {
    pub precision_dof: f64,
    pub precision_scale: f64,
    pub coef_mean: DVector<f64>,
    /// `None` when the node has no parents.
    pub coef_precision: Option<SymMatrix>,
    pub intercept_location: f64,
    pub parent_means: DVector<f64>,
    pub intercept_precision_scale: f64,
}

impl RegressionPrior {
    pub fn gamma_shape(&self) -> f64 {
        0.5 * self.precision_dof
    }

    pub fn gamma_rate(&self) -> f64 {
        0.5 * self.precision_scale
    }

    pub fn intercept_mean(&self, coefs: &DVector<f64>) -> f64 {
        self.intercept_location - coefs.dot(&self.parent_means)
    }
}

/// Regression prior of `node` given `parents`, read off the marginal over
/// `parents ∪ {node}` with the parents as the leading block.
pub fn local_regression_prior(
    p: &NormalWishartPrior,
    node: usize,
    parents: &IndexSet,
) -> Result<RegressionPrior> {
    if node >= p.dim() {
        return Err(Error::InvalidIndexSet(format!("node {node} out of range")));
    }
    if parents.contains(node) {
        return Err(Error::InvalidIndexSet(format!("node {node} is among its own parents")));
    }
    let y = parents.with(node);
    let marg = marginal_prior(p, &y)?;
    let pos = y.position(node).expect("node is in Y");
    let node_block = IndexSet::from_sorted_unchecked(vec![pos]);
    let parent_block = node_block.complement(y.len());
    let nu_node = marg.nu[pos];
    let parent_means = DVector::from_fn(parent_block.len(), |i, _| marg.nu[parent_block.members()[i]]);
    if parent_block.is_empty() {
        return Ok(RegressionPrior {
            precision_dof: marg.alpha,
            precision_scale: marg.t.get(0, 0),
            coef_mean: DVector::zeros(0),
            coef_precision: None,
            intercept_location: nu_node,
            parent_means,
            intercept_precision_scale: marg.alpha_mu,
        });
    }
    let scale = linalg::schur_complement(&marg.t, &node_block)?.get(0, 0);
    let t11 = marg.t.submatrix(&parent_block);
    let t12 = marg.t.block(&parent_block, &node_block);
    let coef = Cholesky::new(&t11)?.solve(&t12);
    Ok(RegressionPrior {
        precision_dof: marg.alpha,
        precision_scale: scale,
        coef_mean: DVector::from_column_slice(coef.as_slice()),
        coef_precision: Some(t11),
        intercept_location: nu_node,
        parent_means,
        intercept_precision_scale: marg.alpha_mu,
    })
}

/// Builds a prior for `n` coordinates from the `key = value` config format.
///
/// Keys: `alpha_mu`, `alpha`, `nu` (comma list or `zeros`), `T` (`identity`,
/// `scaled:<c>`, or `file:<path>` relative to `base_dir`). Missing keys take the
/// defaults of [`NormalWishartPrior::default_for`].
pub fn parse_prior_config(text: &str, n: usize, base_dir: &Path) -> Result<NormalWishartPrior> {
    let default = NormalWishartPrior::default_for(n);
    let mut alpha_mu = default.alpha_mu;
    let mut alpha = default.alpha;
    let mut nu = default.nu.clone();
    let mut t = default.t.clone();
    let mut seen: Vec<&str> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            column: 1,
            message: "expected `key = value`".into(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let col = raw.find('=').map_or(1, |p| p + 2);
        let bad = |message: String| Error::Parse { line: line_no, column: col, message };
        let number = |s: &str| -> Result<f64> {
            let v: f64 = s.trim().parse().map_err(|_| bad(format!("not a number: {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("non-finite value {s:?}")))
            }
        };
        let key_static = match key {
            "alpha_mu" => {
                alpha_mu = number(value)?;
                "alpha_mu"
            }
            "alpha" => {
                alpha = number(value)?;
                "alpha"
            }
            "nu" => {
                nu = if value == "zeros" {
                    DVector::zeros(n)
                } else {
                    let vals = value.split(',').map(number).collect::<Result<Vec<f64>>>()?;
                    if vals.len() != n {
                        return Err(Error::DimensionMismatch { expected: n, found: vals.len() });
                    }
                    DVector::from_vec(vals)
                };
                "nu"
            }
            "T" => {
                t = if value == "identity" {
                    SymMatrix::identity(n)
                } else if let Some(c) = value.strip_prefix("scaled:") {
                    let c = number(c)?;
                    if !(c > 0.0) {
                        return Err(bad(format!("scale must be positive, got {c}")));
                    }
                    SymMatrix::scaled_identity(n, c)
                } else if let Some(path) = value.strip_prefix("file:") {
                    let path = base_dir.join(path.trim());
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    let m = SymMatrix::from_csv_str(&text)?;
                    if m.order() != n {
                        return Err(Error::DimensionMismatch { expected: n, found: m.order() });
                    }
                    m
                } else {
                    return Err(bad(format!("unknown T specification {value:?}")));
                };
                "T"
            }
            other => {
                return Err(Error::Parse { line: line_no, column: 1, message: format!("unknown key {other:?}") })
            }
        };
        if seen.contains(&key_static) {
            return Err(Error::Parse { line: line_no, column: 1, message: format!("duplicate key {key:?}") });
        }
        seen.push(key_static);
    }
    NormalWishartPrior::new(nu, alpha_mu, alpha, t)
}
