//! Regression parameter files, one line per node:
//!
//! ```text
//! X1: intercept=0 variance=1
//! X2: intercept=0.5 variance=2 X1=1.5
//! ```
//!
//! Every node of the DAG appears exactly once and lists a coefficient for each
//! of its parents and nothing else. `#` starts a comment.

use std::collections::HashMap;

use nalgebra::DVector;

use crate::dag::Dag;
use crate::error::{Error, Result};
use crate::report::fmt_sig;
use crate::sampler::GaussianDagParams;

pub fn parse_params(text: &str, g: &Dag) -> Result<GaussianDagParams> {
    let n = g.n();
    let index: HashMap<&str, usize> = g.names().iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut intercepts: Vec<Option<f64>> = vec![None; n];
    let mut variances: Vec<Option<f64>> = vec![None; n];
    let mut coefs: Vec<Option<DVector<f64>>> = vec![None; n];

    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, column: 1, message };
        let (node_name, rest) = line.split_once(':').ok_or_else(|| err("expected `NODE: key=value ...`".into()))?;
        let node = *index
            .get(node_name.trim())
            .ok_or_else(|| err(format!("unknown node {:?}", node_name.trim())))?;
        if intercepts[node].is_some() {
            return Err(err(format!("node {} listed twice", node_name.trim())));
        }
        let parents = g.parents(node);
        let mut b: Vec<Option<f64>> = vec![None; parents.len()];
        let (mut m, mut v) = (None, None);
        for item in rest.split_whitespace() {
            let (key, value) = item.split_once('=').ok_or_else(|| err(format!("expected key=value, found {item:?}")))?;
            let x: f64 = value.parse().map_err(|_| err(format!("not a number: {value:?}")))?;
            if !x.is_finite() {
                return Err(err(format!("non-finite value for {key}")));
            }
            let slot = match key {
                "intercept" => &mut m,
                "variance" => &mut v,
                _ => {
                    let parent = *index.get(key).ok_or_else(|| err(format!("unknown key {key:?}")))?;
                    let pos = parents
                        .position(parent)
                        .ok_or_else(|| err(format!("{key} is not a parent of {}", node_name.trim())))?;
                    &mut b[pos]
                }
            };
            if slot.replace(x).is_some() {
                return Err(err(format!("duplicate key {key:?}")));
            }
        }
        intercepts[node] = Some(m.ok_or_else(|| err("missing intercept".into()))?);
        variances[node] = Some(v.ok_or_else(|| err("missing variance".into()))?);
        let b = b
            .into_iter()
            .enumerate()
            .map(|(k, c)| c.ok_or_else(|| err(format!("missing coefficient for {}", g.names()[parents.members()[k]]))))
            .collect::<Result<Vec<f64>>>()?;
        coefs[node] = Some(DVector::from_vec(b));
    }
    let missing = |i: usize| Error::InvalidConfig(format!("no parameters for node {}", g.names()[i]));
    GaussianDagParams::new(
        (0..n).map(|i| g.parents(i).clone()).collect(),
        intercepts.into_iter().enumerate().map(|(i, x)| x.ok_or_else(|| missing(i))).collect::<Result<_>>()?,
        coefs.into_iter().enumerate().map(|(i, x)| x.ok_or_else(|| missing(i))).collect::<Result<_>>()?,
        variances.into_iter().enumerate().map(|(i, x)| x.ok_or_else(|| missing(i))).collect::<Result<_>>()?,
    )
}

pub fn params_to_text(params: &GaussianDagParams, g: &Dag) -> String {
    let names = g.names();
    let mut out = String::new();
    for i in 0..params.n() {
        out.push_str(&format!(
            "{}: intercept={} variance={}",
            names[i],
            fmt_sig(params.intercepts[i], 17),
            fmt_sig(params.variances[i], 17)
        ));
        for (k, j) in params.parents[i].iter().enumerate() {
            out.push_str(&format!(" {}={}", names[j], fmt_sig(params.coefs[i][k], 17)));
        }
        out.push('\n');
    }
    out
}
