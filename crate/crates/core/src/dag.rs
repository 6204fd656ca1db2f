//! DAG structures, independence equivalence, covered-arc reversals and
//! exhaustive enumeration for small node counts.
//!
//! Nodes are identified by index. Names only matter when reading or writing
//! files and when checking that two graphs range over the same variables.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::IndexSet;

/// Largest node count accepted by [`enumerate_dags`].
pub const MAX_ENUMERATION_NODES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
}

impl Arc {
    pub fn new(from: usize, to: usize) -> Self {
        Self { from, to }
    }

    pub fn reversed(self) -> Self {
        Self { from: self.to, to: self.from }
    }
}

/// Ordered triple `(i, j, k)` with `i -> j <- k`, `i < k`, and `i`, `k` non-adjacent.
pub type VStructure = (usize, usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    names: Vec<String>,
    parents: Vec<IndexSet>,
}

pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("X{i}")).collect()
}

impl Dag {
    pub fn new(names: Vec<String>, arcs: &[Arc]) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::InvalidGraph("a DAG needs at least one node".into()));
        }
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() != n {
            return Err(Error::InvalidGraph("duplicate variable name".into()));
        }
        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
        for a in arcs {
            if a.from >= n || a.to >= n {
                return Err(Error::InvalidGraph(format!("arc {}->{} out of range", a.from, a.to)));
            }
            if a.from == a.to {
                return Err(Error::InvalidGraph(format!("self-loop on node {}", a.from)));
            }
            if parents[a.to].contains(&a.from) {
                return Err(Error::InvalidGraph(format!("duplicate arc {}->{}", a.from, a.to)));
            }
            parents[a.to].push(a.from);
        }
        let parents: Vec<IndexSet> = parents
            .into_iter()
            .map(|p| IndexSet::new(p, n).expect("validated above"))
            .collect();
        let g = Self { names, parents };
        if g.try_topological_order().is_none() {
            return Err(Error::CycleDetected);
        }
        Ok(g)
    }

    /// Nodes named `X1..Xn`.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self> {
        let arcs: Vec<Arc> = arcs.iter().map(|&(f, t)| Arc::new(f, t)).collect();
        Self::new(default_names(n), &arcs)
    }

    pub fn empty(n: usize) -> Self {
        Self::from_arcs(n, &[]).expect("empty graph is acyclic")
    }

    pub fn empty_named(names: Vec<String>) -> Result<Self> {
        Self::new(names, &[])
    }

    /// Complete DAG in which each node's parents are all nodes before it in `order`.
    pub fn complete(names: Vec<String>, order: &[usize]) -> Result<Self> {
        let n = names.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidGraph("ordering must be a permutation of the nodes".into()));
        }
        let mut arcs = Vec::new();
        for (k, &v) in order.iter().enumerate() {
            for &u in &order[..k] {
                arcs.push(Arc::new(u, v));
            }
        }
        Self::new(names, &arcs)
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn parents(&self, node: usize) -> &IndexSet {
        &self.parents[node]
    }

    pub fn has_arc(&self, from: usize, to: usize) -> bool {
        self.parents[to].contains(from)
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_arc(a, b) || self.has_arc(b, a)
    }

    /// Arcs sorted by `(from, to)`.
    pub fn arcs(&self) -> Vec<Arc> {
        let mut arcs: Vec<Arc> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(to, ps)| ps.iter().map(move |from| Arc::new(from, to)))
            .collect();
        arcs.sort_unstable();
        arcs
    }

    pub fn arc_count(&self) -> usize {
        self.parents.iter().map(IndexSet::len).sum()
    }

    fn children(&self) -> Vec<Vec<usize>> {
        let mut ch = vec![Vec::new(); self.n()];
        for (v, ps) in self.parents.iter().enumerate() {
            for u in ps.iter() {
                ch[u].push(v);
            }
        }
        ch
    }

    fn try_topological_order(&self) -> Option<Vec<usize>> {
        let n = self.n();
        let children = self.children();
        let mut indeg: Vec<usize> = self.parents.iter().map(IndexSet::len).collect();
        // lowest index first among ready nodes
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = ready.pop_first() {
            order.push(u);
            for &c in &children[u] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn topological_order(&self) -> Vec<usize> {
        self.try_topological_order().expect("Dag invariant: acyclic")
    }

    /// True if a directed path `from ⇝ to` exists (a node reaches itself).
    pub fn has_path(&self, from: usize, to: usize) -> bool {
        self.has_path_avoiding(from, to, None)
    }

    fn has_path_avoiding(&self, from: usize, to: usize, skip: Option<Arc>) -> bool {
        if from == to {
            return true;
        }
        let children = self.children();
        let mut seen = vec![false; self.n()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            for &c in &children[u] {
                if skip == Some(Arc::new(u, c)) || seen[c] {
                    continue;
                }
                if c == to {
                    return true;
                }
                seen[c] = true;
                stack.push(c);
            }
        }
        false
    }

    pub fn can_add_arc(&self, a: Arc) -> bool {
        a.from != a.to && !self.adjacent(a.from, a.to) && !self.has_path(a.to, a.from)
    }

    /// Reversal of `a` is acyclic iff no other path `from ⇝ to` exists.
    pub fn can_reverse_arc(&self, a: Arc) -> bool {
        self.has_arc(a.from, a.to) && !self.has_path_avoiding(a.from, a.to, Some(a))
    }

    pub fn with_arc_added(&self, a: Arc) -> Result<Dag> {
        if a.from >= self.n() || a.to >= self.n() || a.from == a.to {
            return Err(Error::InvalidGraph(format!("cannot add arc {}->{}", a.from, a.to)));
        }
        if self.adjacent(a.from, a.to) {
            return Err(Error::InvalidGraph(format!("nodes {} and {} are already adjacent", a.from, a.to)));
        }
        if self.has_path(a.to, a.from) {
            return Err(Error::CycleDetected);
        }
        let mut g = self.clone();
        g.parents[a.to] = g.parents[a.to].with(a.from);
        Ok(g)
    }

    pub fn with_arc_removed(&self, a: Arc) -> Result<Dag> {
        if !self.has_arc(a.from, a.to) {
            return Err(Error::InvalidGraph(format!("arc {}->{} is absent", a.from, a.to)));
        }
        let mut g = self.clone();
        g.parents[a.to] = g.parents[a.to].without(a.from);
        Ok(g)
    }

    pub fn with_arc_reversed(&self, a: Arc) -> Result<Dag> {
        if !self.has_arc(a.from, a.to) {
            return Err(Error::InvalidGraph(format!("arc {}->{} is absent", a.from, a.to)));
        }
        if !self.can_reverse_arc(a) {
            return Err(Error::CycleDetected);
        }
        let mut g = self.clone();
        g.parents[a.to] = g.parents[a.to].without(a.from);
        g.parents[a.from] = g.parents[a.from].with(a.to);
        Ok(g)
    }

    pub fn v_structures(&self) -> BTreeSet<VStructure> {
        let mut out = BTreeSet::new();
        for (j, ps) in self.parents.iter().enumerate() {
            let ps = ps.members();
            for (x, &i) in ps.iter().enumerate() {
                for &k in &ps[x + 1..] {
                    if !self.adjacent(i, k) {
                        out.insert((i, j, k));
                    }
                }
            }
        }
        out
    }

    /// Undirected edges `(a, b)` with `a < b`.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.arcs()
            .into_iter()
            .map(|a| (a.from.min(a.to), a.from.max(a.to)))
            .collect()
    }

    /// An arc `u -> v` is covered when `Pa(v) \ {u} == Pa(u)`.
    pub fn is_covered(&self, a: Arc) -> bool {
        self.has_arc(a.from, a.to) && self.parents[a.to].without(a.from) == self.parents[a.from]
    }

    pub fn covered_arcs(&self) -> Vec<Arc> {
        self.arcs().into_iter().filter(|&a| self.is_covered(a)).collect()
    }

    pub fn reverse_covered_arc(&self, a: Arc) -> Result<Dag> {
        if !self.is_covered(a) {
            return Err(Error::ArcNotCovered { from: a.from, to: a.to });
        }
        self.with_arc_reversed(a)
    }

    /// Relabels nodes so that the result uses the order of `names`.
    pub fn align_to(&self, names: &[String]) -> Result<Dag> {
        if names.len() != self.n() {
            return Err(Error::VariableMismatch);
        }
        let pos: HashMap<&str, usize> =
            names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut map = Vec::with_capacity(self.n());
        for name in &self.names {
            map.push(*pos.get(name.as_str()).ok_or(Error::VariableMismatch)?);
        }
        let arcs: Vec<Arc> = self.arcs().into_iter().map(|a| Arc::new(map[a.from], map[a.to])).collect();
        Dag::new(names.to_vec(), &arcs)
    }

    /// Canonical text form: every node declared, then arcs sorted by `(from, to)`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for name in &self.names {
            s.push_str("node ");
            s.push_str(name);
            s.push('\n');
        }
        for a in self.arcs() {
            s.push_str(&format!("{} -> {}\n", self.names[a.from], self.names[a.to]));
        }
        s
    }

    /// Parses the DAG file format: `node NAME` and `A -> B` lines, `#` comments.
    pub fn parse(text: &str) -> Result<Dag> {
        let mut names: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut arcs: Vec<Arc> = Vec::new();
        let mut intern = |name: &str, line: usize, column: usize| -> Result<usize> {
            if !is_identifier(name) {
                return Err(Error::Parse { line, column, message: format!("invalid node name {name:?}") });
            }
            if let Some(&i) = index.get(name) {
                return Ok(i);
            }
            names.push(name.to_string());
            index.insert(name.to_string(), names.len() - 1);
            Ok(names.len() - 1)
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((lhs, rhs)) = line.split_once("->") {
                let (lhs, rhs) = (lhs.trim(), rhs.trim());
                let rhs_col = raw.find("->").map_or(1, |p| p + 3);
                let from = intern(lhs, line_no, 1)?;
                let to = intern(rhs, line_no, rhs_col)?;
                let arc = Arc::new(from, to);
                if arcs.contains(&arc) {
                    return Err(Error::Parse { line: line_no, column: 1, message: format!("duplicate arc {lhs} -> {rhs}") });
                }
                if from == to {
                    return Err(Error::Parse { line: line_no, column: 1, message: format!("self-loop on {lhs}") });
                }
                arcs.push(arc);
            } else {
                let mut parts = line.split_whitespace();
                match (parts.next(), parts.next(), parts.next()) {
                    (Some("node"), Some(name), None) => {
                        intern(name, line_no, 6)?;
                    }
                    _ => {
                        return Err(Error::Parse {
                            line: line_no,
                            column: 1,
                            message: format!("expected `node NAME` or `A -> B`, found {line:?}"),
                        })
                    }
                }
            }
        }
        if names.is_empty() {
            return Err(Error::Parse { line: 1, column: 1, message: "no nodes declared".into() });
        }
        Dag::new(names, &arcs)
    }
}

impl fmt::Display for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arcs = self.arcs();
        if arcs.is_empty() {
            return write!(f, "(no arcs)");
        }
        let parts: Vec<String> = arcs
            .iter()
            .map(|a| format!("{}->{}", self.names[a.from], self.names[a.to]))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Independence equivalence: identical skeletons and identical v-structures.
pub fn equivalent(g1: &Dag, g2: &Dag) -> Result<bool> {
    if g1.names != g2.names {
        return Err(Error::VariableMismatch);
    }
    Ok(g1.skeleton() == g2.skeleton() && g1.v_structures() == g2.v_structures())
}

/// Every labeled DAG on `n` nodes (names `X1..Xn`), each once, in a fixed order.
pub fn enumerate_dags(n: usize) -> Result<Vec<Dag>> {
    if n == 0 {
        return Err(Error::InvalidGraph("need at least one node".into()));
    }
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::TooLarge { what: "node count", value: n, limit: MAX_ENUMERATION_NODES });
    }
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let total = 3usize.pow(pairs.len() as u32);
    let names = default_names(n);
    let mut out = Vec::new();
    let mut arcs = Vec::with_capacity(pairs.len());
    for code in 0..total {
        arcs.clear();
        let mut c = code;
        for &(i, j) in &pairs {
            match c % 3 {
                1 => arcs.push(Arc::new(i, j)),
                2 => arcs.push(Arc::new(j, i)),
                _ => {}
            }
            c /= 3;
        }
        match Dag::new(names.clone(), &arcs) {
            Ok(g) => out.push(g),
            Err(Error::CycleDetected) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Partition of `dags` (as index lists) by independence equivalence, classes in
/// order of first appearance.
pub fn equivalence_classes(dags: &[Dag]) -> Result<Vec<Vec<usize>>> {
    if let Some(first) = dags.first() {
        if dags.iter().any(|g| g.names != first.names) {
            return Err(Error::VariableMismatch);
        }
    }
    type Key = (BTreeSet<(usize, usize)>, BTreeSet<VStructure>);
    let mut slot: BTreeMap<Key, usize> = BTreeMap::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, g) in dags.iter().enumerate() {
        let key = (g.skeleton(), g.v_structures());
        let c = *slot.entry(key).or_insert_with(|| {
            classes.push(Vec::new());
            classes.len() - 1
        });
        classes[c].push(i);
    }
    Ok(classes)
}

/// Partition of `dags` by reachability under covered-arc reversals.
///
/// Every reversal target must itself be in `dags`; this holds for the output of
/// [`enumerate_dags`].
pub fn covered_reversal_classes(dags: &[Dag]) -> Result<Vec<Vec<usize>>> {
    let index: HashMap<&Dag, usize> = dags.iter().enumerate().map(|(i, g)| (g, i)).collect();
    let mut class_of = vec![usize::MAX; dags.len()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for start in 0..dags.len() {
        if class_of[start] != usize::MAX {
            continue;
        }
        let c = classes.len();
        let mut members = vec![start];
        class_of[start] = c;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for a in dags[u].covered_arcs() {
                let h = dags[u].reverse_covered_arc(a)?;
                let v = *index.get(&h).ok_or_else(|| {
                    Error::InvalidGraph("reversal leaves the supplied DAG collection".into())
                })?;
                if class_of[v] == usize::MAX {
                    class_of[v] = c;
                    members.push(v);
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        classes.push(members);
    }
    Ok(classes)
}
