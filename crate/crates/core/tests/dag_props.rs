mod common;

use std::collections::BTreeSet;

use gaussdag::dag::{covered_reversal_classes, enumerate_dags, equivalence_classes, equivalent, Dag};
use rand::Rng;

/// All directed graphs on `n` nodes as arc lists, filtered for acyclicity by
/// repeatedly stripping sink nodes.
fn brute_force_dags(n: usize) -> BTreeSet<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))).collect();
    let mut out = BTreeSet::new();
    for mask in 0u32..(1 << pairs.len()) {
        let arcs: Vec<(usize, usize)> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &a)| a).collect();
        let mut alive: Vec<bool> = vec![true; n];
        let mut removed = 0;
        loop {
            let sink = (0..n).find(|&v| alive[v] && !arcs.iter().any(|&(a, b)| a == v && alive[b]));
            match sink {
                Some(v) => {
                    alive[v] = false;
                    removed += 1;
                }
                None => break,
            }
        }
        if removed == n {
            let mut a = arcs;
            a.sort();
            out.insert(a);
        }
    }
    out
}

fn arc_set(g: &Dag) -> Vec<(usize, usize)> {
    g.arcs().iter().map(|a| (a.from, a.to)).collect()
}

#[test]
fn enumeration_matches_brute_force() {
    for n in 1..=4 {
        let ours: BTreeSet<Vec<(usize, usize)>> = enumerate_dags(n).unwrap().iter().map(arc_set).collect();
        let oracle = brute_force_dags(n);
        assert_eq!(ours, oracle, "n = {n}");
    }
    assert_eq!(enumerate_dags(5).unwrap().len(), 29281);
}

#[test]
fn class_counts() {
    for (n, classes) in [(2, 2), (3, 11), (4, 185)] {
        assert_eq!(equivalence_classes(&enumerate_dags(n).unwrap()).unwrap().len(), classes);
    }
}

#[test]
fn equivalence_is_an_equivalence_relation() {
    let dags = enumerate_dags(3).unwrap();
    for a in &dags {
        assert!(equivalent(a, a).unwrap());
        for b in &dags {
            let ab = equivalent(a, b).unwrap();
            assert_eq!(ab, equivalent(b, a).unwrap());
            if ab {
                for c in &dags {
                    if equivalent(b, c).unwrap() {
                        assert!(equivalent(a, c).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn covered_reversal_reachability_equals_verma_pearl() {
    for n in 1..=4 {
        let dags = enumerate_dags(n).unwrap();
        assert_eq!(covered_reversal_classes(&dags).unwrap(), equivalence_classes(&dags).unwrap(), "n = {n}");
    }
}

#[test]
fn every_covered_reversal_preserves_equivalence() {
    for g in enumerate_dags(4).unwrap() {
        for a in g.covered_arcs() {
            let h = g.reverse_covered_arc(a).unwrap();
            assert!(equivalent(&g, &h).unwrap());
        }
    }
}

#[test]
fn uncovered_reversal_changes_the_class() {
    // reversing a non-covered arc of an acyclic result always breaks equivalence
    for g in enumerate_dags(4).unwrap() {
        for a in g.arcs() {
            if !g.is_covered(a) && g.can_reverse_arc(a) {
                let h = g.with_arc_reversed(a).unwrap();
                assert!(!equivalent(&g, &h).unwrap(), "{g} reversing {a:?}");
            }
        }
    }
}

#[test]
fn text_round_trip_of_random_dags() {
    let mut r = common::rng(3);
    for _ in 0..200 {
        let n = r.random_range(1..7);
        let g = common::random_dag(n, 0.4, &mut r);
        assert_eq!(Dag::parse(&g.to_text()).unwrap(), g);
    }
}
