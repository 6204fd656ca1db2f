//! Monte Carlo checks of the independence properties that characterize the
//! normal-Wishart prior.
//!
//! Each test draws `N` parameter samples, evaluates a fixed family of scalar
//! statistics on two groups of quantities, and reports every cross-group
//! Pearson correlation. Independence is declared when the largest absolute
//! correlation stays below `4/√N`, dependence when it exceeds `10/√N`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky, IndexSet, SymMatrix};
use crate::prior::{local_regression_prior, NormalWishartPrior};
use crate::report::fmt_report;
use crate::sampler::{
    regression_params_from_joint, sample_mean_given_precision, NormalWishartSampler, RandomSeed,
    WishartSampler,
};

/// Smallest sample size accepted by the tests.
pub const MIN_SAMPLES: usize = 10_000;
/// `max|corr| < INDEPENDENT_FACTOR/√N` means independent.
pub const INDEPENDENT_FACTOR: f64 = 4.0;
/// `max|corr| > DEPENDENT_FACTOR/√N` means dependent.
pub const DEPENDENT_FACTOR: f64 = 10.0;
/// Entries of a fixed precision smaller than this trigger a redraw.
pub const MIN_FIXED_ENTRY: f64 = 1e-6;

const CHUNK: usize = 2048;

/// Two-block partition of the coordinates `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    block1: IndexSet,
    block2: IndexSet,
}

impl PartitionSpec {
    /// `block1` and its complement; both must be non-empty.
    pub fn new(block1: IndexSet, n: usize) -> Result<Self> {
        if block1.is_empty() || block1.len() >= n || block1.iter().any(|i| i >= n) {
            return Err(Error::InvalidIndexSet(format!(
                "partition block must be a non-empty proper subset of 0..{n}"
            )));
        }
        let block2 = block1.complement(n);
        Ok(Self { block1, block2 })
    }

    /// First `n − 1` coordinates against the last one.
    pub fn last_coordinate(n: usize) -> Result<Self> {
        Self::new(IndexSet::all(n.saturating_sub(1)), n)
    }

    pub fn n(&self) -> usize {
        self.block1.len() + self.block2.len()
    }

    pub fn block1(&self) -> &IndexSet {
        &self.block1
    }

    pub fn block2(&self) -> &IndexSet {
        &self.block2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Independent,
    Dependent,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Independent => "independent",
            Verdict::Dependent => "dependent",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// One cross-group correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct StatPair {
    pub a: String,
    pub b: String,
    pub corr: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub label: String,
    pub pairs: Vec<StatPair>,
    pub samples: usize,
    pub max_abs_corr: f64,
    /// `4/√N`.
    pub threshold: f64,
    /// `10/√N`.
    pub dependent_threshold: f64,
    pub verdict: Verdict,
}

impl IndependenceReport {
    /// Plain text: one `A, B, corr, N` line per pair, then the summary.
    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\n", self.label);
        for p in &self.pairs {
            out.push_str(&format!("{}, {}, {}, {}\n", p.a, p.b, fmt_report(p.corr), p.samples));
        }
        out.push_str(&format!("max_abs_corr = {}\n", fmt_report(self.max_abs_corr)));
        out.push_str(&format!("threshold = {}\n", fmt_report(self.threshold)));
        out.push_str(&format!("verdict = {}\n", self.verdict));
        out
    }

    /// The pair attaining the largest absolute correlation.
    pub fn worst_pair(&self) -> Option<&StatPair> {
        self.pairs
            .iter()
            .max_by(|x, y| x.corr.abs().total_cmp(&y.corr.abs()))
    }
}

/// A scalar quantity observed once per Monte Carlo draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    pub values: Vec<f64>,
}

impl Feature {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }
}

/// Raw quantity before the statistic family is applied.
#[derive(Debug, Clone)]
struct Quantity {
    name: String,
    positive: bool,
}

impl Quantity {
    fn new(name: impl Into<String>, positive: bool) -> Self {
        Self { name: name.into(), positive }
    }
}

/// Identity and square of every quantity, plus the log of positive ones.
fn expand_statistics(quantities: &[Quantity], columns: &[Vec<f64>]) -> Vec<Feature> {
    let mut out = Vec::new();
    for (q, col) in quantities.iter().zip(columns) {
        out.push(Feature::new(q.name.clone(), col.clone()));
        out.push(Feature::new(format!("{}^2", q.name), col.iter().map(|x| x * x).collect()));
        if q.positive {
            out.push(Feature::new(format!("log({})", q.name), col.iter().map(|x| x.ln()).collect()));
        }
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

pub fn verdict_for(max_abs_corr: f64, samples: usize) -> Verdict {
    let root = (samples as f64).sqrt();
    if max_abs_corr < INDEPENDENT_FACTOR / root {
        Verdict::Independent
    } else if max_abs_corr > DEPENDENT_FACTOR / root {
        Verdict::Dependent
    } else {
        Verdict::Inconclusive
    }
}

/// Correlates every feature of `a` with every feature of `b`.
pub fn independence_report(label: impl Into<String>, a: &[Feature], b: &[Feature]) -> Result<IndependenceReport> {
    let samples = a.first().or(b.first()).map_or(0, |f| f.values.len());
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidConfig("both feature groups must be non-empty".into()));
    }
    if a.iter().chain(b).any(|f| f.values.len() != samples) {
        return Err(Error::DimensionMismatch { expected: samples, found: 0 });
    }
    if samples < 2 {
        return Err(Error::SampleTooSmall { n: samples, min: 2 });
    }
    let mut pairs = Vec::with_capacity(a.len() * b.len());
    for fa in a {
        for fb in b {
            pairs.push(StatPair {
                a: fa.name.clone(),
                b: fb.name.clone(),
                corr: pearson(&fa.values, &fb.values),
                samples,
            });
        }
    }
    let max_abs_corr = pairs.iter().map(|p| p.corr.abs()).fold(0.0, f64::max);
    let root = (samples as f64).sqrt();
    Ok(IndependenceReport {
        label: label.into(),
        pairs,
        samples,
        max_abs_corr,
        threshold: INDEPENDENT_FACTOR / root,
        dependent_threshold: DEPENDENT_FACTOR / root,
        verdict: verdict_for(max_abs_corr, samples),
    })
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(Error::SampleTooSmall { n: samples, min: MIN_SAMPLES });
    }
    Ok(())
}

/// Runs `draw` `samples` times in parallel chunks, each chunk on its own seed
/// stream, and returns one column per output slot. The result does not depend
/// on the thread count.
fn simulate<F>(samples: usize, width: usize, seed: RandomSeed, draw: F) -> Vec<Vec<f64>>
where
    F: Fn(&mut ChaCha20Rng, &mut Vec<f64>) + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let rows: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed.rng(c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut buf = Vec::with_capacity(len * width);
            let mut row = Vec::with_capacity(width);
            for _ in 0..len {
                row.clear();
                draw(&mut rng, &mut row);
                debug_assert_eq!(row.len(), width);
                buf.extend_from_slice(&row);
            }
            buf
        })
        .collect();
    let mut columns = vec![Vec::with_capacity(samples); width];
    for buf in rows {
        for row in buf.chunks_exact(width) {
            for (col, &x) in columns.iter_mut().zip(row) {
                col.push(x);
            }
        }
    }
    columns
}

/// Which joint law a global test draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `W` Wishart; `W₁₁.₂` against `(W₁₂, W₂₂)`.
    Wishart,
    /// `μ ~ N(η, (γW)⁻¹)` with `W` fixed; `μ₁` against `μ₂ ± W₂₂⁻¹W₂₁μ₁`.
    NormalMean,
    /// `(μ, W)` normal-Wishart; both previous groupings joined.
    NormalWishart,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wishart" => Ok(Mode::Wishart),
            "normal-mean" => Ok(Mode::NormalMean),
            "normal-wishart" => Ok(Mode::NormalWishart),
            _ => Err(Error::InvalidConfig(format!(
                "unknown mode {s:?} (expected wishart, normal-mean or normal-wishart)"
            ))),
        }
    }
}

/// Mean prior for the fixed-precision test: `μ ~ N(eta, (gamma·W)⁻¹)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanPriorConfig {
    pub eta: DVector<f64>,
    pub gamma: f64,
    /// Fixed precision; drawn from the Wishart part of the prior when absent.
    pub w: Option<SymMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalTestConfig {
    pub prior: NormalWishartPrior,
    pub partition: PartitionSpec,
    pub samples: usize,
    pub seed: RandomSeed,
    /// Overrides the mean prior in [`Mode::NormalMean`]; defaults to
    /// `eta = ν`, `gamma = α_μ` and a drawn `W`.
    pub mean_prior: Option<MeanPriorConfig>,
}

impl GlobalTestConfig {
    pub fn new(prior: NormalWishartPrior, partition: PartitionSpec, samples: usize, seed: RandomSeed) -> Self {
        Self { prior, partition, samples, seed, mean_prior: None }
    }
}

fn sym_names(prefix: &str, block: &IndexSet) -> Vec<Quantity> {
    let mut out = Vec::new();
    for (a, i) in block.iter().enumerate() {
        for j in block.iter().skip(a) {
            out.push(Quantity::new(format!("{prefix}[{},{}]", i + 1, j + 1), i == j));
        }
    }
    out
}

fn cross_names(prefix: &str, rows: &IndexSet, cols: &IndexSet) -> Vec<Quantity> {
    let mut out = Vec::new();
    for i in rows.iter() {
        for j in cols.iter() {
            out.push(Quantity::new(format!("{prefix}[{},{}]", i + 1, j + 1), false));
        }
    }
    out
}

fn vec_names(prefix: &str, block: &IndexSet) -> Vec<Quantity> {
    block.iter().map(|i| Quantity::new(format!("{prefix}[{}]", i + 1), false)).collect()
}

fn push_upper(m: &SymMatrix, out: &mut Vec<f64>) {
    for i in 0..m.order() {
        for j in i..m.order() {
            out.push(m.get(i, j));
        }
    }
}

/// Precision-side quantities of one partition.
struct PrecisionSplit {
    schur: SymMatrix,
    w12: DMatrix<f64>,
    w22: SymMatrix,
}

impl PrecisionSplit {
    fn new(w: &SymMatrix, part: &PartitionSpec) -> Self {
        Self {
            schur: linalg::schur_complement(w, &part.block1).expect("sampled precision is positive definite"),
            w12: w.block(&part.block1, &part.block2),
            w22: w.submatrix(&part.block2),
        }
    }

    fn group_a_names(part: &PartitionSpec) -> Vec<Quantity> {
        sym_names("W11.2", part.block1())
    }

    fn group_b_names(part: &PartitionSpec) -> Vec<Quantity> {
        let mut q = cross_names("W12", part.block1(), part.block2());
        q.extend(sym_names("W22", part.block2()));
        q
    }

    fn push_a(&self, out: &mut Vec<f64>) {
        push_upper(&self.schur, out);
    }
}

/// Row-major entries of `W₁₂` followed by the upper triangle of `W₂₂`.
fn push_b_row_major(split: &PrecisionSplit, out: &mut Vec<f64>) {
    for i in 0..split.w12.nrows() {
        for j in 0..split.w12.ncols() {
            out.push(split.w12[(i, j)]);
        }
    }
    push_upper(&split.w22, out);
}

/// `μ₂ + sign · W₂₂⁻¹ W₂₁ μ₁`.
fn shifted_mean(mu: &DVector<f64>, w: &SymMatrix, part: &PartitionSpec, sign: f64) -> Result<DVector<f64>> {
    let mu1 = DVector::from_fn(part.block1.len(), |k, _| mu[part.block1.members()[k]]);
    let mu2 = DVector::from_fn(part.block2.len(), |k, _| mu[part.block2.members()[k]]);
    let w21 = w.block(&part.block2, &part.block1);
    let shift = Cholesky::new(&w.submatrix(&part.block2))?.solve_vec(&(w21 * mu1));
    Ok(mu2 + shift * sign)
}

fn sign_label(sign: f64) -> &'static str {
    if sign > 0.0 {
        "+"
    } else {
        "-"
    }
}

/// Global independence test for `mode`.
///
/// Wishart mode yields one report. The other modes yield two, for the `+` and
/// `−` sign of the shifted second-block mean, in that order.
pub fn global_independence_test(mode: Mode, config: &GlobalTestConfig) -> Result<Vec<IndependenceReport>> {
    check_samples(config.samples)?;
    let n = config.prior.dim();
    if n < 2 {
        return Err(Error::InvalidConfig("at least two coordinates are needed".into()));
    }
    if config.partition.n() != n {
        return Err(Error::DimensionMismatch { expected: n, found: config.partition.n() });
    }
    match mode {
        Mode::Wishart => Ok(vec![wishart_test(config)?]),
        Mode::NormalMean => normal_mean_test(config),
        Mode::NormalWishart => normal_wishart_test(config),
    }
}

fn wishart_test(config: &GlobalTestConfig) -> Result<IndependenceReport> {
    let sampler = WishartSampler::new(config.prior.alpha(), config.prior.t())?;
    wishart_report(
        "wishart: W11.2 vs (W12, W22)",
        &config.partition,
        config.samples,
        config.seed,
        |rng| sampler.sample(rng),
    )
}

fn wishart_report(
    label: &str,
    part: &PartitionSpec,
    samples: usize,
    seed: RandomSeed,
    draw_w: impl Fn(&mut ChaCha20Rng) -> SymMatrix + Sync,
) -> Result<IndependenceReport> {
    let qa = PrecisionSplit::group_a_names(part);
    let qb = PrecisionSplit::group_b_names(part);
    let width = qa.len() + qb.len();
    let cols = simulate(samples, width, seed, |rng, row| {
        let split = PrecisionSplit::new(&draw_w(rng), part);
        split.push_a(row);
        push_b_row_major(&split, row);
    });
    let (ca, cb) = cols.split_at(qa.len());
    independence_report(label, &expand_statistics(&qa, ca), &expand_statistics(&qb, cb))
}

/// The fixed precision for the normal-mean test.
pub fn fixed_precision(config: &GlobalTestConfig) -> Result<SymMatrix> {
    if let Some(w) = config.mean_prior.as_ref().and_then(|m| m.w.clone()) {
        if w.order() != config.prior.dim() {
            return Err(Error::DimensionMismatch { expected: config.prior.dim(), found: w.order() });
        }
        Cholesky::new(&w)?;
        return Ok(w);
    }
    let sampler = WishartSampler::new(config.prior.alpha(), config.prior.t())?;
    let mut rng = config.seed.rng(u64::MAX);
    for _ in 0..1000 {
        let w = sampler.sample(&mut rng);
        if w.as_matrix().iter().all(|x| x.abs() >= MIN_FIXED_ENTRY) {
            return Ok(w);
        }
    }
    Err(Error::InvalidConfig("could not draw a precision without near-zero entries".into()))
}

fn normal_mean_test(config: &GlobalTestConfig) -> Result<Vec<IndependenceReport>> {
    let part = &config.partition;
    let w = fixed_precision(config)?;
    let (eta, gamma) = match &config.mean_prior {
        Some(m) => (m.eta.clone(), m.gamma),
        None => (config.prior.nu().clone(), config.prior.alpha_mu()),
    };
    if eta.len() != w.order() {
        return Err(Error::DimensionMismatch { expected: w.order(), found: eta.len() });
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidPrior(format!("mean precision scale must be positive, got {gamma}")));
    }
    let precision = w.scale(gamma);
    Cholesky::new(&precision)?;
    let qa = vec_names("mu1", part.block1());
    let mut reports = Vec::new();
    for sign in [1.0, -1.0] {
        let qb = vec_names(&format!("mu2{}", sign_label(sign)), part.block2());
        let cols = simulate(config.samples, qa.len() + qb.len(), config.seed, |rng, row| {
            let mu = sample_mean_given_precision(&eta, &precision, rng).expect("checked positive definite");
            row.extend(part.block1.iter().map(|i| mu[i]));
            row.extend(shifted_mean(&mu, &w, part, sign).expect("checked positive definite").iter());
        });
        let (ca, cb) = cols.split_at(qa.len());
        reports.push(independence_report(
            format!("normal-mean: mu1 vs mu2 {} W22^-1 W21 mu1", sign_label(sign)),
            &expand_statistics(&qa, ca),
            &expand_statistics(&qb, cb),
        )?);
    }
    Ok(reports)
}

fn normal_wishart_test(config: &GlobalTestConfig) -> Result<Vec<IndependenceReport>> {
    let part = &config.partition;
    let sampler = NormalWishartSampler::new(&config.prior)?;
    let mut reports = Vec::new();
    for sign in [1.0, -1.0] {
        let mut qa = vec_names("mu1", part.block1());
        qa.extend(PrecisionSplit::group_a_names(part));
        let mut qb = vec_names(&format!("mu2{}", sign_label(sign)), part.block2());
        qb.extend(PrecisionSplit::group_b_names(part));
        let cols = simulate(config.samples, qa.len() + qb.len(), config.seed, |rng, row| {
            let (mu, w) = sampler.sample(rng);
            let split = PrecisionSplit::new(&w, part);
            row.extend(part.block1.iter().map(|i| mu[i]));
            split.push_a(row);
            row.extend(shifted_mean(&mu, &w, part, sign).expect("sampled precision is positive definite").iter());
            push_b_row_major(&split, row);
        });
        let (ca, cb) = cols.split_at(qa.len());
        reports.push(independence_report(
            format!("normal-wishart: (mu1, W11.2) vs (mu2 {} W22^-1 W21 mu1, W12, W22)", sign_label(sign)),
            &expand_statistics(&qa, ca),
            &expand_statistics(&qb, cb),
        )?);
    }
    Ok(reports)
}

/// Two-component mixture of Wishart laws; `weight` is the probability of `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixturePrior {
    pub a: NormalWishartPrior,
    pub b: NormalWishartPrior,
    pub weight: f64,
}

/// Smallest ratio between the component degrees of freedom.
pub const MIN_MIXTURE_DOF_RATIO: f64 = 5.0;

impl MixturePrior {
    pub fn new(a: NormalWishartPrior, b: NormalWishartPrior, weight: f64) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidConfig(format!("mixture weight must lie in [0, 1], got {weight}")));
        }
        let ratio = a.alpha().max(b.alpha()) / a.alpha().min(b.alpha());
        if ratio < MIN_MIXTURE_DOF_RATIO {
            return Err(Error::InvalidConfig(format!(
                "component degrees of freedom must differ by a factor of at least {MIN_MIXTURE_DOF_RATIO}, got {ratio}"
            )));
        }
        Ok(Self { a, b, weight })
    }
}

/// Wishart-mode test on draws from a mixture of two Wishart laws.
pub fn counterexample_test(
    mixture: &MixturePrior,
    partition: &PartitionSpec,
    samples: usize,
    seed: RandomSeed,
) -> Result<IndependenceReport> {
    check_samples(samples)?;
    if partition.n() != mixture.a.dim() {
        return Err(Error::DimensionMismatch { expected: mixture.a.dim(), found: partition.n() });
    }
    let sa = WishartSampler::new(mixture.a.alpha(), mixture.a.t())?;
    let sb = WishartSampler::new(mixture.b.alpha(), mixture.b.t())?;
    let weight = mixture.weight;
    wishart_report(
        &format!("mixture (weight {}): W11.2 vs (W12, W22)", fmt_report(weight)),
        partition,
        samples,
        seed,
        |rng| {
            if rng.random::<f64>() < weight {
                sa.sample(rng)
            } else {
                sb.sample(rng)
            }
        },
    )
}

/// How the intercept spread `α_μ / v` is read when standardizing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterceptScale {
    /// `α_μ / v` is the precision of `m`.
    Precision,
    /// `α_μ / v` is the variance of `m`.
    Variance,
}

/// Local parameters compared by [`local_parameter_test`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalForm {
    /// `(m*, b*, v)` after standardizing with the regression prior.
    Standardized(InterceptScale),
    /// `(m, b, v)` as read off the joint draw.
    Raw,
}

/// Local parameter independence for the last coordinate given all others,
/// with the standardization the normal-Wishart prior implies.
pub fn local_standardization_test(
    prior: &NormalWishartPrior,
    samples: usize,
    seed: RandomSeed,
) -> Result<IndependenceReport> {
    local_parameter_test(prior, LocalForm::Standardized(InterceptScale::Precision), samples, seed)
}

/// Draws `(μ, W)`, converts to the regression `(m, b, v)` of the last node on
/// all others, optionally standardizes, and tests the three groups pairwise.
pub fn local_parameter_test(
    prior: &NormalWishartPrior,
    form: LocalForm,
    samples: usize,
    seed: RandomSeed,
) -> Result<IndependenceReport> {
    check_samples(samples)?;
    let n = prior.dim();
    if n < 2 {
        return Err(Error::InvalidConfig("at least two coordinates are needed".into()));
    }
    let node = n - 1;
    let parents = IndexSet::all(n - 1);
    let rp = local_regression_prior(prior, node, &parents)?;
    let t_pp = rp.coef_precision.clone().expect("node has parents");
    let lower = Cholesky::new(&t_pp)?.lower().clone();
    let sampler = NormalWishartSampler::new(prior)?;
    let ordering: Vec<usize> = (0..n).collect();
    let k = n - 1;

    let cols = simulate(samples, k + 2, seed, |rng, row| {
        let (mu, w) = sampler.sample(rng);
        let params = regression_params_from_joint(&mu, &w, &ordering).expect("sampled precision is positive definite");
        let (m, b, v) = (params.intercepts[node], params.coefs[node].clone(), params.variances[node]);
        match form {
            LocalForm::Raw => {
                row.push(m);
                row.extend(b.iter());
            }
            LocalForm::Standardized(scale) => {
                let sd = match scale {
                    InterceptScale::Precision => (v / rp.intercept_precision_scale).sqrt(),
                    InterceptScale::Variance => (rp.intercept_precision_scale / v).sqrt(),
                };
                row.push((m - rp.intercept_mean(&b)) / sd);
                let z = lower.transpose() * (&b - &rp.coef_mean) / v.sqrt();
                row.extend(z.iter());
            }
        }
        row.push(v);
    });

    let (m_name, b_prefix) = match form {
        LocalForm::Raw => ("m", "b"),
        LocalForm::Standardized(_) => ("m*", "b*"),
    };
    let qm = vec![Quantity::new(m_name, false)];
    let qb: Vec<Quantity> = (0..k).map(|i| Quantity::new(format!("{b_prefix}[{}]", i + 1), false)).collect();
    let qv = vec![Quantity::new("v", true)];
    let fm = expand_statistics(&qm, &cols[..1]);
    let fb = expand_statistics(&qb, &cols[1..1 + k]);
    let fv = expand_statistics(&qv, &cols[1 + k..]);

    let label = match form {
        LocalForm::Raw => "local: (m, b, v) unstandardized".to_string(),
        LocalForm::Standardized(InterceptScale::Precision) => "local: (m*, b*, v), intercept precision a_mu/v".into(),
        LocalForm::Standardized(InterceptScale::Variance) => "local: (m*, b*, v), intercept variance a_mu/v".into(),
    };
    let r_mb = independence_report("", &fm, &fb)?;
    let r_mv = independence_report("", &fm, &fv)?;
    let r_bv = independence_report("", &fb, &fv)?;
    let pairs: Vec<StatPair> = [r_mb, r_mv, r_bv].into_iter().flat_map(|r| r.pairs).collect();
    let max_abs_corr = pairs.iter().map(|p| p.corr.abs()).fold(0.0, f64::max);
    let root = (samples as f64).sqrt();
    Ok(IndependenceReport {
        label,
        pairs,
        samples,
        max_abs_corr,
        threshold: INDEPENDENT_FACTOR / root,
        dependent_threshold: DEPENDENT_FACTOR / root,
        verdict: verdict_for(max_abs_corr, samples),
    })
}
