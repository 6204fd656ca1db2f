//! Random inputs shared by the integration tests.
#![allow(dead_code)]

use gaussdag::dag::Dag;
use gaussdag::linalg::{IndexSet, SymMatrix};
use gaussdag::prior::{wishart_log_norm_const, NormalWishartPrior};
use gaussdag::sampler::{sample_dataset, GaussianDagParams, RandomSeed};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// `A Aᵀ + ridge·I` with standard normal `A`.
pub fn random_pd(n: usize, ridge: f64, rng: &mut impl Rng) -> SymMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    SymMatrix::from_matrix(&a * a.transpose() + DMatrix::identity(n, n) * ridge).unwrap()
}

pub fn random_prior(n: usize, rng: &mut impl Rng) -> NormalWishartPrior {
    let nu = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let alpha_mu = rng.random_range(0.5..4.0);
    let alpha = n as f64 - 1.0 + rng.random_range(1.5..6.0);
    NormalWishartPrior::new(nu, alpha_mu, alpha, random_pd(n, 0.5, rng)).unwrap()
}

pub fn random_data(m: usize, n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let mix = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let z = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    z * mix + DMatrix::from_element(m, n, 0.3)
}

/// Random DAG consistent with a random node order.
pub fn random_dag(n: usize, density: f64, rng: &mut impl Rng) -> Dag {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut arcs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < density {
                arcs.push((order[a], order[b]));
            }
        }
    }
    Dag::from_arcs(n, &arcs).unwrap()
}

/// Random linear-Gaussian parameters on `g` with coefficients bounded away from 0.
pub fn random_params(g: &Dag, rng: &mut impl Rng) -> GaussianDagParams {
    let n = g.n();
    let parents: Vec<IndexSet> = (0..n).map(|i| g.parents(i).clone()).collect();
    let coefs = parents
        .iter()
        .map(|p| {
            DVector::from_fn(p.len(), |_, _| {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                s * rng.random_range(0.5..1.5)
            })
        })
        .collect();
    let intercepts = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let variances = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    GaussianDagParams::new(parents, intercepts, coefs, variances).unwrap()
}

pub fn data_from_random_model(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let g = random_dag(n, 0.5, &mut r);
    let params = random_params(&g, &mut r);
    sample_dataset(&params, &g, m, RandomSeed(seed)).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// `log ∫∫ Π_r N(x_r | μ, 1/w) · p(μ, w) dμ dw` for one coordinate, by nested
/// double-exponential quadrature.
pub fn quadrature_log_marginal(nu: f64, alpha_mu: f64, alpha: f64, t: f64, xs: &[f64]) -> f64 {
    let log_c = wishart_log_norm_const(1, alpha).unwrap();
    let ln_norm = |x: f64, mean: f64, prec: f64| 0.5 * (prec / (2.0 * std::f64::consts::PI)).ln() - 0.5 * prec * (x - mean).powi(2);
    let inner = |w: f64| {
        quadrature::integrate(
            |s: f64| {
                let mu = s / (1.0 - s * s);
                let jac = (1.0 + s * s) / (1.0 - s * s).powi(2);
                if !mu.is_finite() {
                    return 0.0;
                }
                let log_lik: f64 = xs.iter().map(|&x| ln_norm(x, mu, w)).sum();
                (log_lik + ln_norm(mu, nu, alpha_mu * w)).exp() * jac
            },
            -1.0,
            1.0,
            1e-14,
        )
        .integral
    };
    let total = quadrature::integrate(
        |s: f64| {
            let w = s / (1.0 - s);
            if !w.is_finite() || w == 0.0 {
                return 0.0;
            }
            let jac = 1.0 / (1.0 - s).powi(2);
            let log_prior_w = log_c + 0.5 * alpha * t.ln() + 0.5 * (alpha - 2.0) * w.ln() - 0.5 * t * w;
            inner(w) * log_prior_w.exp() * jac
        },
        0.0,
        1.0,
        1e-14,
    )
    .integral;
    total.ln()
}

