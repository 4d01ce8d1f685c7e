//! Seeded random instances for property tests, self-tests and benchmarks.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::UndirectedGraph;
use crate::hom::GeneralizedTGraph;
use crate::model::{Iri, Mapping, TGraph, Term, TriplePattern, Var};
use crate::pattern::GraphPattern;
use crate::tree::{WdPF, WdPT};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Size limits for generated patterns and graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub max_triples: usize,
    pub max_nodes: usize,
    pub max_trees: usize,
    pub vars: usize,
    pub iris: usize,
    pub predicates: usize,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_triples: 8,
            max_nodes: 4,
            max_trees: 3,
            vars: 6,
            iris: 3,
            predicates: 2,
        }
    }
}

fn iri(name: String) -> Iri {
    Iri::new(&name).expect("generated IRI")
}

fn var(i: usize) -> Var {
    Var::new(&format!("v{i}")).expect("generated variable")
}

fn predicate(rng: &mut impl Rng, shape: &Shape) -> Term {
    Term::Iri(iri(format!(
        "p{}",
        rng.gen_range(0..shape.predicates.max(1))
    )))
}

fn node_term(rng: &mut impl Rng, shape: &Shape, vars: &[Var]) -> Term {
    if vars.is_empty() || (shape.iris > 0 && rng.gen_bool(0.2)) {
        Term::Iri(iri(format!("c{}", rng.gen_range(0..shape.iris.max(1)))))
    } else {
        Term::Var(vars.choose(rng).expect("non-empty").clone())
    }
}

/// A random triple pattern with subject and object drawn from `vars` or
/// the constants.
pub fn random_triple(rng: &mut impl Rng, shape: &Shape, vars: &[Var]) -> TriplePattern {
    let s = node_term(rng, shape, vars);
    let p = predicate(rng, shape);
    let o = node_term(rng, shape, vars);
    TriplePattern::new(s, p, o)
}

/// A random well-designed pattern tree. Each child reuses only variables
/// of its parent plus fresh ones, which keeps every variable's nodes
/// connected.
pub fn random_tree(rng: &mut impl Rng, shape: &Shape, budget: usize) -> WdPT {
    let nodes = rng.gen_range(1..=shape.max_nodes.min(budget).max(1));
    let mut labels: Vec<TGraph> = Vec::new();
    let mut parents: Vec<Option<usize>> = Vec::new();
    let mut remaining = budget.max(nodes);
    let mut next_fresh = 0usize;
    for n in 0..nodes {
        let parent = if n == 0 {
            None
        } else {
            Some(rng.gen_range(0..n))
        };
        let mut pool: Vec<Var> = parent
            .map(|p| labels[p].vars().into_iter().collect())
            .unwrap_or_default();
        let fresh = rng.gen_range(if n == 0 { 1 } else { 0 }..=2);
        for _ in 0..fresh {
            if next_fresh < shape.vars {
                pool.push(var(next_fresh));
                next_fresh += 1;
            }
        }
        let max_here = (remaining - (nodes - n - 1)).clamp(1, 3);
        let count = rng.gen_range(1..=max_here);
        remaining -= count;
        let mut label = TGraph::new();
        for _ in 0..count {
            label.insert(random_triple(rng, shape, &pool));
        }
        labels.push(label);
        parents.push(parent);
    }
    WdPT::new(labels, parents).expect("generated trees keep variables connected")
}

/// A random forest of at most `shape.max_trees` trees sharing the
/// triple budget.
pub fn random_forest(rng: &mut impl Rng, shape: &Shape) -> WdPF {
    let trees = rng.gen_range(1..=shape.max_trees.max(1));
    let per_tree = (shape.max_triples / trees).max(1);
    WdPF::new(
        (0..trees)
            .map(|_| random_tree(rng, shape, per_tree))
            .collect(),
    )
    .expect("non-empty forest")
}

/// A random well-designed pattern.
pub fn random_wd_pattern(rng: &mut impl Rng, shape: &Shape) -> GraphPattern {
    random_forest(rng, shape).to_pattern()
}

/// A random AND/OPT/UNION pattern with no well-designedness guarantee.
pub fn random_pattern(rng: &mut impl Rng, shape: &Shape, leaves: usize) -> GraphPattern {
    let vars: Vec<Var> = (0..shape.vars.max(1)).map(var).collect();
    fn build(rng: &mut impl Rng, shape: &Shape, vars: &[Var], leaves: usize) -> GraphPattern {
        if leaves <= 1 {
            return GraphPattern::Leaf(random_triple(rng, shape, vars));
        }
        let left = rng.gen_range(1..leaves);
        let l = build(rng, shape, vars, left);
        let r = build(rng, shape, vars, leaves - left);
        match rng.gen_range(0..5) {
            0 | 1 => GraphPattern::and(l, r),
            2 | 3 => GraphPattern::opt(l, r),
            _ => GraphPattern::union(l, r),
        }
    }
    build(rng, shape, &vars, leaves.max(1))
}

/// A random RDF graph over the constants `c0..` and predicates `p0..`.
pub fn random_rdf_graph(rng: &mut impl Rng, shape: &Shape, triples: usize) -> TGraph {
    let mut g = TGraph::new();
    for _ in 0..triples {
        let s = Term::Iri(iri(format!("c{}", rng.gen_range(0..shape.iris.max(1)))));
        let o = Term::Iri(iri(format!("c{}", rng.gen_range(0..shape.iris.max(1)))));
        g.insert(TriplePattern::new(s, predicate(rng, shape), o));
    }
    g
}

/// A mapping from `vars` into the IRIs of `graph`, or into `c0` when the
/// graph is empty.
pub fn random_mapping(rng: &mut impl Rng, vars: &BTreeSet<Var>, graph: &TGraph) -> Mapping {
    let mut iris: Vec<Iri> = graph.iris().into_iter().collect();
    if iris.is_empty() {
        iris.push(iri("c0".into()));
    }
    vars.iter()
        .map(|v| (v.clone(), iris.choose(rng).expect("non-empty").clone()))
        .collect()
}

/// A random generalised t-graph over `vars` variables, the first `dist`
/// of which are distinguished.
pub fn random_gtg(
    rng: &mut impl Rng,
    shape: &Shape,
    triples: usize,
    dist: usize,
) -> GeneralizedTGraph {
    let vars: Vec<Var> = (0..shape.vars.max(1)).map(var).collect();
    let mut g = TGraph::new();
    for _ in 0..triples.max(1) {
        g.insert(random_triple(rng, shape, &vars));
    }
    let present = g.vars();
    let dist: BTreeSet<Var> = vars
        .iter()
        .take(dist)
        .filter(|v| present.contains(*v))
        .cloned()
        .collect();
    GeneralizedTGraph::new(g, dist).expect("distinguished variables occur in the graph")
}

/// Erdős–Rényi graph on vertices `0..n`.
pub fn random_undirected_graph(
    rng: &mut impl Rng,
    n: usize,
    density: f64,
) -> UndirectedGraph<usize> {
    let mut g = UndirectedGraph::new();
    for v in 0..n {
        g.add_vertex(v);
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                g.add_edge(a, b);
            }
        }
    }
    g
}
