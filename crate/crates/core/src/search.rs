//! Greedy hill climbing over DAGs with add, delete and reverse moves.
//!
//! Move deltas come from the family scores they change, memoized in the
//! scorer's cache. Neighbors are scored in parallel and reduced in move order.

use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::dag::{Arc, Dag};
use crate::error::{Error, Result};
use crate::prior::NormalWishartPrior;
use crate::report::fmt_report;
use crate::sampler::RandomSeed;
use crate::score::{FamilyKey, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoveKind {
    Add,
    Delete,
    Reverse,
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MoveKind::Add => "add",
            MoveKind::Delete => "delete",
            MoveKind::Reverse => "reverse",
        })
    }
}

/// A single-arc edit. Ordered by `(kind, from, to)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Move {
    pub kind: MoveKind,
    pub arc: Arc,
}

impl Move {
    pub fn new(kind: MoveKind, arc: Arc) -> Self {
        Self { kind, arc }
    }

    pub fn apply(&self, g: &Dag) -> Result<Dag> {
        match self.kind {
            MoveKind::Add => g.with_arc_added(self.arc),
            MoveKind::Delete => g.with_arc_removed(self.arc),
            MoveKind::Reverse => g.with_arc_reversed(self.arc),
        }
    }

    /// `kind from->to` with node names.
    pub fn describe(&self, names: &[String]) -> String {
        format!("{} {}->{}", self.kind, names[self.arc.from], names[self.arc.to])
    }
}

/// Every acyclicity-preserving single-arc move, sorted by `(kind, from, to)`.
pub fn neighbors(g: &Dag) -> Vec<Move> {
    let n = g.n();
    let mut moves = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && g.can_add_arc(Arc::new(u, v)) {
                moves.push(Move::new(MoveKind::Add, Arc::new(u, v)));
            }
        }
    }
    for a in g.arcs() {
        moves.push(Move::new(MoveKind::Delete, a));
    }
    for a in g.arcs() {
        if g.can_reverse_arc(a) {
            moves.push(Move::new(MoveKind::Reverse, a));
        }
    }
    moves.sort();
    moves
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub max_iterations: usize,
    pub improvement_epsilon: f64,
    /// Extra perturbed runs after the first; zero disables restarts.
    pub restarts: usize,
    pub seed: RandomSeed,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { max_iterations: 10_000, improvement_epsilon: 1e-9, restarts: 0, seed: RandomSeed(0) }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be positive".into()));
        }
        if !(self.improvement_epsilon > 0.0) || !self.improvement_epsilon.is_finite() {
            return Err(Error::InvalidConfig("improvement_epsilon must be a positive real".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub mv: Move,
    pub score: f64,
    /// Index of the run (0 for the initial start, k for the k-th restart).
    pub run: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: Dag,
    pub score: f64,
    pub trace: Vec<TraceStep>,
}

impl SearchResult {
    /// One `kind from->to new_log_score` line per accepted move; each restart
    /// begins with a `# restart k` comment.
    pub fn trace_text(&self) -> String {
        let names = self.best.names();
        let mut out = String::new();
        let mut run = 0;
        for s in &self.trace {
            while run < s.run {
                run += 1;
                out.push_str(&format!("# restart {run}\n"));
            }
            out.push_str(&format!("{} {}\n", s.mv.describe(names), fmt_report(s.score)));
        }
        out
    }
}

fn family(g: &Dag, node: usize) -> FamilyKey {
    FamilyKey { node, parents: g.parents(node).clone() }
}

/// Score change of applying `mv` to `g`, from the one or two families it touches.
pub fn move_delta(scorer: &Scorer, g: &Dag, mv: &Move) -> Result<f64> {
    let Arc { from: u, to: v } = mv.arc;
    let old_v = family(g, v);
    match mv.kind {
        MoveKind::Add => {
            let new_v = FamilyKey::new(v, old_v.parents.with(u))?;
            Ok(scorer.family_log_score(&new_v)? - scorer.family_log_score(&old_v)?)
        }
        MoveKind::Delete => {
            let new_v = FamilyKey::new(v, old_v.parents.without(u))?;
            Ok(scorer.family_log_score(&new_v)? - scorer.family_log_score(&old_v)?)
        }
        MoveKind::Reverse => {
            let old_u = family(g, u);
            let new_v = FamilyKey::new(v, old_v.parents.without(u))?;
            let new_u = FamilyKey::new(u, old_u.parents.with(v))?;
            Ok(scorer.family_log_score(&new_v)? - scorer.family_log_score(&old_v)?
                + scorer.family_log_score(&new_u)?
                - scorer.family_log_score(&old_u)?)
        }
    }
}

/// The best improving move, ties going to the smallest move.
fn best_move(scorer: &Scorer, g: &Dag, epsilon: f64) -> Result<Option<(Move, f64)>> {
    let moves = neighbors(g);
    let deltas: Vec<f64> = moves
        .par_iter()
        .map(|mv| move_delta(scorer, g, mv))
        .collect::<Result<_>>()?;
    let mut best: Option<(Move, f64)> = None;
    for (mv, d) in moves.into_iter().zip(deltas) {
        if d > epsilon && best.is_none_or(|(_, bd)| d > bd) {
            best = Some((mv, d));
        }
    }
    Ok(best)
}

/// Whether no neighbor of `g` improves on it by more than `epsilon`.
pub fn is_local_optimum(scorer: &Scorer, g: &Dag, epsilon: f64) -> Result<bool> {
    Ok(best_move(scorer, g, epsilon)?.is_none())
}

fn climb(
    scorer: &Scorer,
    start: Dag,
    cfg: &SearchConfig,
    run: usize,
    trace: &mut Vec<TraceStep>,
) -> Result<(Dag, f64)> {
    let mut g = start;
    let mut score = scorer.dag_log_score(&g)?;
    for _ in 0..cfg.max_iterations {
        let Some((mv, _)) = best_move(scorer, &g, cfg.improvement_epsilon)? else {
            break;
        };
        g = mv.apply(&g)?;
        score = scorer.dag_log_score(&g)?;
        trace.push(TraceStep { mv, score, run });
    }
    Ok((g, score))
}

/// Applies `count` uniformly chosen legal moves.
pub fn perturb(g: &Dag, count: usize, seed: RandomSeed) -> Result<Dag> {
    let mut rng = seed.rng(0);
    let mut g = g.clone();
    for _ in 0..count {
        let moves = neighbors(&g);
        if moves.is_empty() {
            break;
        }
        let mv = moves[rng.random_range(0..moves.len())];
        g = mv.apply(&g)?;
    }
    Ok(g)
}

/// Greedy search from `start` using an existing scorer (and its cache).
pub fn greedy_search_with(scorer: &Scorer, start: &Dag, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    if start.n() != scorer.dim() {
        return Err(Error::VariableMismatch);
    }
    let mut trace = Vec::new();
    let (mut best, mut best_score) = climb(scorer, start.clone(), cfg, 0, &mut trace)?;
    for r in 1..=cfg.restarts {
        let from = perturb(start, start.n().max(1), cfg.seed.derive(r as u64))?;
        let (g, s) = climb(scorer, from, cfg, r, &mut trace)?;
        if s > best_score {
            best = g;
            best_score = s;
        }
    }
    Ok(SearchResult { best, score: best_score, trace })
}

pub fn greedy_search(
    p: &NormalWishartPrior,
    data: &DMatrix<f64>,
    start: &Dag,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    if data.ncols() != start.n() || p.dim() != start.n() {
        return Err(Error::VariableMismatch);
    }
    let scorer = Scorer::new(p.clone(), data)?;
    greedy_search_with(&scorer, start, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{sample_dataset, GaussianDagParams};
    use crate::linalg::IndexSet;
    use nalgebra::DVector;

    #[test]
    fn neighbors_of_empty_pair() {
        let m = neighbors(&Dag::empty(2));
        assert_eq!(
            m,
            vec![Move::new(MoveKind::Add, Arc::new(0, 1)), Move::new(MoveKind::Add, Arc::new(1, 0))]
        );
    }

    #[test]
    fn neighbors_of_single_arc() {
        let g = Dag::from_arcs(2, &[(0, 1)]).unwrap();
        assert_eq!(
            neighbors(&g),
            vec![Move::new(MoveKind::Delete, Arc::new(0, 1)), Move::new(MoveKind::Reverse, Arc::new(0, 1))]
        );
    }

    #[test]
    fn complete_dag_has_no_additions() {
        let g = Dag::complete(crate::dag::default_names(4), &[0, 1, 2, 3]).unwrap();
        assert!(neighbors(&g).iter().all(|m| m.kind != MoveKind::Add));
    }

    #[test]
    fn reversal_that_would_close_a_cycle_is_excluded() {
        let g = Dag::from_arcs(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let m = neighbors(&g);
        assert!(!m.contains(&Move::new(MoveKind::Reverse, Arc::new(0, 2))));
        assert!(m.contains(&Move::new(MoveKind::Reverse, Arc::new(0, 1))));
    }

    #[test]
    fn recovers_a_single_strong_arc() {
        let g = Dag::from_arcs(2, &[(0, 1)]).unwrap();
        let params = GaussianDagParams::new(
            vec![IndexSet::empty(), IndexSet::all(1)],
            vec![0.0, 0.0],
            vec![DVector::zeros(0), DVector::from_vec(vec![2.0])],
            vec![1.0, 1.0],
        )
        .unwrap();
        let data = sample_dataset(&params, &g, 5000, RandomSeed(11)).unwrap();
        let p = NormalWishartPrior::default_for(2);
        let res = greedy_search(&p, &data, &Dag::empty(2), &SearchConfig::default()).unwrap();
        assert_eq!(res.best.skeleton(), g.skeleton());
        let again = greedy_search(&p, &data, &res.best, &SearchConfig::default()).unwrap();
        assert!(again.trace.is_empty());
    }

    #[test]
    fn config_validation() {
        let cfg = SearchConfig { improvement_epsilon: 0.0, ..SearchConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = SearchConfig { max_iterations: 0, ..SearchConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
