//! Evaluation of patterns, trees and forests over RDF graphs.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::hom::{for_each_extension, maps_into_graph, GeneralizedTGraph};
use crate::model::{Mapping, TGraph, Term, TriplePattern};
use crate::pattern::{GraphPattern, Op};
use crate::pebble::pebble_wins;
use crate::tree::{WdPF, WdPT};

/// Variable cap for [`enumerate_solutions`].
pub const DEFAULT_ENUMERATION_VAR_CAP: usize = 12;

/// A set of solution mappings in canonical order.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct SolutionSet(pub BTreeSet<Mapping>);

impl SolutionSet {
    pub fn contains(&self, mu: &Mapping) -> bool {
        self.0.contains(mu)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Mapping> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// One mapping per line, `{?x=a, ?y=b}`.
    pub fn to_text(&self) -> String {
        self.0.iter().map(|m| format!("{m}\n")).collect()
    }
}

impl fmt::Debug for SolutionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.0.iter()).finish()
    }
}

impl FromIterator<Mapping> for SolutionSet {
    fn from_iter<I: IntoIterator<Item = Mapping>>(iter: I) -> Self {
        SolutionSet(iter.into_iter().collect())
    }
}

fn match_triple(t: &TriplePattern, graph: &TGraph) -> BTreeSet<Mapping> {
    let mut out = BTreeSet::new();
    'triples: for g in graph {
        let mut m = Mapping::new();
        for (pattern, value) in t.terms().into_iter().zip(g.terms()) {
            let value = value.as_iri().expect("ground graph");
            match pattern {
                Term::Iri(a) if a != value => continue 'triples,
                Term::Iri(_) => {}
                Term::Var(v) => match m.get(v) {
                    Some(bound) if bound != value => continue 'triples,
                    Some(_) => {}
                    None => {
                        m.insert(v.clone(), value.clone());
                    }
                },
            }
        }
        out.insert(m);
    }
    out
}

fn join(left: &BTreeSet<Mapping>, right: &BTreeSet<Mapping>) -> BTreeSet<Mapping> {
    let mut out = BTreeSet::new();
    for a in left {
        for b in right {
            if let Ok(m) = a.merge(b) {
                out.insert(m);
            }
        }
    }
    out
}

fn naive(p: &GraphPattern, graph: &TGraph) -> BTreeSet<Mapping> {
    match p {
        GraphPattern::Leaf(t) => match_triple(t, graph),
        GraphPattern::Node(op, l, r) => {
            let left = naive(l, graph);
            let right = naive(r, graph);
            match op {
                Op::And => join(&left, &right),
                Op::Opt => {
                    let mut out = join(&left, &right);
                    out.extend(
                        left.into_iter()
                            .filter(|a| !right.iter().any(|b| a.compatible(b))),
                    );
                    out
                }
                Op::Union => {
                    let mut out = left;
                    out.extend(right);
                    out
                }
            }
        }
    }
}

/// The compositional semantics: triple matches, joins for AND, left-outer
/// joins for OPT and set union for UNION. Works for any pattern.
pub fn eval_naive(p: &GraphPattern, graph: &TGraph) -> SolutionSet {
    SolutionSet(naive(p, graph))
}

/// The only candidate subtree for `mu`: the maximal subtree whose nodes
/// use only bound variables and are mapped into the graph. Returned only
/// when its variables are exactly the domain of `mu`.
pub fn candidate_subtree(tree: &WdPT, graph: &TGraph, mu: &Mapping) -> Option<BTreeSet<usize>> {
    let domain = mu.domain();
    let nodes = tree.maximal_subtree(|n| {
        tree.node_vars(n).is_subset(&domain)
            && tree
                .label(n)
                .iter()
                .all(|t| mu.apply(t).is_ok_and(|image| graph.contains(&image)))
    })?;
    (tree.pat_of(nodes.iter().copied()).vars() == domain).then_some(nodes)
}

fn child_graph(tree: &WdPT, nodes: &BTreeSet<usize>, child: usize) -> GeneralizedTGraph {
    let base = tree.pat_of(nodes.iter().copied());
    let dist = base.vars();
    GeneralizedTGraph::declared(base.union(tree.label(child)), dist)
}

/// Membership of `mu` in the answers of a tree in NR normal form: the
/// candidate subtree exists and no child of it extends `mu`.
pub fn eval_tree_lemma1(tree: &WdPT, graph: &TGraph, mu: &Mapping) -> Result<bool> {
    if let Some(node) = tree.nr_violation() {
        return Err(Error::NotNRNormalForm { tree: 1, node });
    }
    Ok(tree_member(tree, graph, mu))
}

fn tree_member(tree: &WdPT, graph: &TGraph, mu: &Mapping) -> bool {
    let Some(nodes) = candidate_subtree(tree, graph, mu) else {
        return false;
    };
    tree.children_of_set(&nodes).into_iter().all(|c| {
        maps_into_graph(&child_graph(tree, &nodes, c), graph, mu)
            .expect("mapping domain equals the subtree variables")
            .is_none()
    })
}

/// Membership in the union of the trees' answers.
pub fn eval_forest(forest: &WdPF, graph: &TGraph, mu: &Mapping) -> Result<bool> {
    forest.require_nr()?;
    Ok(forest.trees().iter().any(|t| tree_member(t, graph, mu)))
}

/// All answers of a forest: for every subtree, every homomorphism of its
/// pattern into the graph that no child extends. Exponential; refuses
/// forests with more than `DEFAULT_ENUMERATION_VAR_CAP` variables.
pub fn enumerate_solutions(forest: &WdPF, graph: &TGraph) -> Result<SolutionSet> {
    enumerate_solutions_with_cap(forest, graph, DEFAULT_ENUMERATION_VAR_CAP)
}

pub fn enumerate_solutions_with_cap(
    forest: &WdPF,
    graph: &TGraph,
    cap: usize,
) -> Result<SolutionSet> {
    forest.require_nr()?;
    let vars = forest.vars().len();
    if vars > cap {
        return Err(Error::InstanceTooLarge(format!(
            "forest has {vars} variables, enumeration cap is {cap}"
        )));
    }
    let mut out = BTreeSet::new();
    for sub in forest.subtrees() {
        let tree = forest.tree(sub.tree);
        let pat = forest.pat(&sub);
        let children: Vec<GeneralizedTGraph> = forest
            .children(&sub)
            .into_iter()
            .map(|c| child_graph(tree, &sub.nodes, c))
            .collect();
        for_each_extension(&pat, graph, &Default::default(), |h| {
            let mu: Mapping = h
                .iter()
                .map(|(v, t)| (v.clone(), t.as_iri().expect("ground graph").clone()))
                .collect();
            let extended = children.iter().any(|c| {
                maps_into_graph(c, graph, &mu)
                    .expect("domain matches")
                    .is_some()
            });
            if !extended {
                out.insert(mu);
            }
            ControlFlow::Continue(())
        });
    }
    Ok(SolutionSet(out))
}

/// The relaxed membership test: locate the candidate subtree in each tree
/// and accept when no child wins the existential (k+1)-pebble game.
/// Rejections are always correct; acceptance is correct whenever the
/// forest's domination width is at most `k`.
pub fn eval_pebble(forest: &WdPF, graph: &TGraph, mu: &Mapping, k: usize) -> Result<bool> {
    if k < 1 {
        return Err(Error::InvalidK {
            k,
            reason: "the relaxed evaluation needs k >= 1".into(),
        });
    }
    forest.require_nr()?;
    for tree in forest.trees() {
        let Some(nodes) = candidate_subtree(tree, graph, mu) else {
            continue;
        };
        let mut accept = true;
        for c in tree.children_of_set(&nodes) {
            if pebble_wins(&child_graph(tree, &nodes, c), graph, mu, k + 1)? {
                accept = false;
                break;
            }
        }
        if accept {
            return Ok(true);
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{tree_from_rows, wdpf};

    fn rdf(text: &str) -> TGraph {
        TGraph::parse_rdf(text).unwrap()
    }

    fn pattern(text: &str) -> GraphPattern {
        GraphPattern::parse(text).unwrap()
    }

    #[test]
    fn triple_rule() {
        let s = eval_naive(&pattern("(?x,p,?y)"), &rdf("a p b ."));
        assert_eq!(s.to_text(), "{?x=a, ?y=b}\n");
        let same = eval_naive(&pattern("(?x,p,?x)"), &rdf("a p b .\nc p c ."));
        assert_eq!(same.to_text(), "{?x=c}\n");
    }

    #[test]
    fn opt_rule_both_branches() {
        let p = pattern("((?x,p,?y) OPT (?y,q,?z))");
        assert_eq!(eval_naive(&p, &rdf("a p b .")).to_text(), "{?x=a, ?y=b}\n");
        assert_eq!(
            eval_naive(&p, &rdf("a p b .\nb q c .")).to_text(),
            "{?x=a, ?y=b, ?z=c}\n"
        );
    }

    #[test]
    fn union_rule() {
        let p = pattern("((?x,p,?y) UNION (?x,q,?z))");
        assert_eq!(eval_naive(&p, &rdf("a p b .\na q c .")).len(), 2);
    }

    fn clique_tree(k: usize) -> WdPT {
        let mut clique = Vec::new();
        for i in 1..=k {
            for j in i + 1..=k {
                clique.push(format!("?o{i} r ?o{j}"));
            }
        }
        tree_from_rows(&[
            (None, "?y r ?y"),
            (Some(0), &format!("?y r ?o1 ; {}", clique.join(" ; "))),
        ])
        .unwrap()
    }

    #[test]
    fn loop_family_candidates() {
        let g = rdf("a r a .");
        for k in 2..=4 {
            let t = clique_tree(k);
            assert!(!eval_tree_lemma1(&t, &g, &Mapping::of(&[("y", "a")])).unwrap());
            let mut all: Vec<(String, &str)> = (1..=k).map(|i| (format!("o{i}"), "a")).collect();
            all.push(("y".into(), "a"));
            let pairs: Vec<(&str, &str)> = all.iter().map(|(v, a)| (v.as_str(), *a)).collect();
            assert!(eval_tree_lemma1(&t, &g, &Mapping::of(&pairs)).unwrap());
            let naive = eval_naive(&t.to_pattern(), &g);
            assert!(naive.contains(&Mapping::of(&pairs)));
            assert!(!naive.contains(&Mapping::of(&[("y", "a")])));
        }
    }

    #[test]
    fn single_node_tree() {
        let t = tree_from_rows(&[(None, "?x p ?y")]).unwrap();
        assert!(
            eval_tree_lemma1(&t, &rdf("a p b ."), &Mapping::of(&[("x", "a"), ("y", "b")])).unwrap()
        );
        assert!(!eval_tree_lemma1(&t, &rdf("a p b ."), &Mapping::of(&[("x", "a")])).unwrap());
    }

    #[test]
    fn non_normal_tree_rejected() {
        let t = tree_from_rows(&[(None, "?x p ?y"), (Some(0), "?y p ?x")]).unwrap();
        let err = eval_tree_lemma1(&t, &rdf("a p b ."), &Mapping::new()).unwrap_err();
        assert_eq!(err, Error::NotNRNormalForm { tree: 1, node: 1 });
    }

    #[test]
    fn forest_enumeration_matches_naive() {
        let p = pattern(
            "((((?x,p,?y) OPT (?z,q,?x)) OPT ((?y,r,?o1) AND (?o1,r,?o2))) UNION ((?x,p,?y) OPT ((?z,q,?x) AND (?w,q,?z))))",
        );
        let g = rdf("a p b .\nc q a .\nd q c .\nb r e .\ne r f .");
        let f = wdpf(&p).unwrap();
        let naive = eval_naive(&p, &g);
        assert_eq!(enumerate_solutions(&f, &g).unwrap(), naive);
        for mu in naive.iter() {
            assert!(eval_forest(&f, &g, mu).unwrap());
            assert!(eval_pebble(&f, &g, mu, 2).unwrap());
        }
    }

    #[test]
    fn pebble_needs_positive_k() {
        let f = wdpf(&pattern("(?x,p,?y)")).unwrap();
        assert_eq!(
            eval_pebble(&f, &rdf("a p b ."), &Mapping::new(), 0)
                .unwrap_err()
                .kind(),
            "InvalidK"
        );
    }

    #[test]
    fn enumeration_cap() {
        let f = wdpf(&pattern("((?a,p,?b) AND (?c,p,?d))")).unwrap();
        let err = enumerate_solutions_with_cap(&f, &rdf("a p b ."), 3).unwrap_err();
        assert_eq!(err.kind(), "InstanceTooLarge");
    }
}
