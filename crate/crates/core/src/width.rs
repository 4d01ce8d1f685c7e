//! Width measures of pattern forests: branch treewidth, local
//! tractability width, domination width, and hard-witness extraction.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::hom::{core_treewidth, is_homomorphic, GeneralizedTGraph};
use crate::tree::{ChildrenAssignment, GtgMember, Subtree, WdPF, WdPT};

/// Size limits for the exact domination-width computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub max_nodes_per_tree: usize,
    pub max_trees: usize,
    pub max_vars_per_graph: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_nodes_per_tree: 12,
            max_trees: 4,
            max_vars_per_graph: 14,
        }
    }
}

impl Caps {
    fn check_forest(&self, forest: &WdPF) -> Result<()> {
        if forest.len() > self.max_trees {
            return Err(Error::InstanceTooLarge(format!(
                "forest has {} trees, cap is {}",
                forest.len(),
                self.max_trees
            )));
        }
        for (i, t) in forest.trees().iter().enumerate() {
            if t.len() > self.max_nodes_per_tree {
                return Err(Error::InstanceTooLarge(format!(
                    "tree {} has {} nodes, cap is {}",
                    i + 1,
                    t.len(),
                    self.max_nodes_per_tree
                )));
            }
        }
        Ok(())
    }
}

/// A width value with a line-per-item breakdown.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WidthReport {
    pub measure: &'static str,
    pub value: usize,
    pub entries: Vec<String>,
}

impl fmt::Display for WidthReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} = {}", self.measure, self.value)?;
        for e in &self.entries {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

/// For every non-root node: the core treewidth of its branch t-graph, with
/// the variables of the path above it distinguished.
pub fn branch_treewidth_report(tree: &WdPT) -> Result<WidthReport> {
    let mut value = 1;
    let mut entries = Vec::new();
    for n in tree.node_ids().skip(1) {
        let mut path = Vec::new();
        let mut cur = tree.parent(n);
        while let Some(p) = cur {
            path.push(p);
            cur = tree.parent(p);
        }
        let above = tree.pat_of(path.iter().copied());
        let dist = above.vars();
        let branch = GeneralizedTGraph::declared(above.union(tree.label(n)), dist);
        let c = core_treewidth(&branch)?;
        value = value.max(c);
        entries.push(format!("n{n}: ctw {c}"));
    }
    Ok(WidthReport {
        measure: "bw",
        value,
        entries,
    })
}

pub fn branch_treewidth(tree: &WdPT) -> Result<usize> {
    Ok(branch_treewidth_report(tree)?.value)
}

/// Branch treewidth of every tree of a forest; the value is the maximum.
pub fn forest_branch_treewidth_report(forest: &WdPF) -> Result<WidthReport> {
    let mut value = 1;
    let mut entries = Vec::new();
    for (i, tree) in forest.trees().iter().enumerate() {
        let r = branch_treewidth_report(tree)?;
        value = value.max(r.value);
        entries.extend(r.entries.into_iter().map(|e| format!("T{} {e}", i + 1)));
    }
    Ok(WidthReport {
        measure: "bw",
        value,
        entries,
    })
}

/// Maximum over non-root nodes of the core treewidth of the node's label
/// with the variables shared with its parent distinguished.
pub fn local_tractability_width_report(forest: &WdPF) -> Result<WidthReport> {
    let mut value = 1;
    let mut entries = Vec::new();
    for (i, tree) in forest.trees().iter().enumerate() {
        for n in tree.node_ids().skip(1) {
            let parent = tree.parent(n).expect("non-root node");
            let shared = tree
                .node_vars(n)
                .intersection(&tree.node_vars(parent))
                .cloned()
                .collect();
            let g = GeneralizedTGraph::declared(tree.label(n).clone(), shared);
            let c = core_treewidth(&g)?;
            value = value.max(c);
            entries.push(format!("T{} n{n}: ctw {c}", i + 1));
        }
    }
    Ok(WidthReport {
        measure: "local",
        value,
        entries,
    })
}

pub fn local_tractability_width(forest: &WdPF) -> Result<usize> {
    Ok(local_tractability_width_report(forest)?.value)
}

fn same_dist(gset: &[GeneralizedTGraph]) -> Result<()> {
    if let Some(first) = gset.first() {
        for g in gset {
            if g.dist != first.dist {
                // Reuse the homomorphism engine's error for mismatched sets.
                crate::hom::find_homomorphism(first, g)?;
            }
        }
    }
    Ok(())
}

/// Whether the members of core treewidth at most `k` dominate the rest:
/// each other member receives a homomorphism from one of them.
pub fn is_k_dominated(gset: &[GeneralizedTGraph], k: usize) -> Result<bool> {
    same_dist(gset)?;
    let ctws: Vec<usize> = gset.iter().map(core_treewidth).collect::<Result<_>>()?;
    for (j, g) in gset.iter().enumerate() {
        if ctws[j] <= k {
            continue;
        }
        let mut dominated = false;
        for (i, low) in gset.iter().enumerate() {
            if ctws[i] <= k && is_homomorphic(low, g)? {
                dominated = true;
                break;
            }
        }
        if !dominated {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The generalised t-graphs of one subtree with their core treewidths and
/// a memo of homomorphism tests between them.
#[derive(Debug, Clone)]
pub struct SubtreeGtg {
    pub subtree: Subtree,
    pub members: Vec<GtgMember>,
    pub ctw: Vec<usize>,
    hom: HashMap<(usize, usize), bool>,
}

impl SubtreeGtg {
    fn hom(&mut self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let members = &self.members;
        *self.hom.entry((from, to)).or_insert_with(|| {
            is_homomorphic(&members[from].graph, &members[to].graph)
                .expect("members share distinguished sets")
        })
    }

    /// Members not dominated by any member of core treewidth at most `k`.
    fn undominated(&mut self, k: usize) -> Vec<usize> {
        let n = self.members.len();
        let low: Vec<usize> = (0..n).filter(|&i| self.ctw[i] <= k).collect();
        let mut out = Vec::new();
        for j in 0..n {
            if self.ctw[j] > k && !low.iter().any(|&i| self.hom(i, j)) {
                out.push(j);
            }
        }
        out
    }

    /// Smallest k >= 1 at which this set is k-dominated.
    fn threshold(&mut self) -> usize {
        let top = self.ctw.iter().copied().max().unwrap_or(1).max(1);
        (1..=top)
            .find(|&k| self.undominated(k).is_empty())
            .unwrap_or(top)
    }
}

/// The domination-width computation: every subtree with a non-empty set
/// of generalised t-graphs, with memoized homomorphism tests.
#[derive(Debug, Clone)]
pub struct DominationAnalysis {
    pub subtrees: Vec<SubtreeGtg>,
}

impl DominationAnalysis {
    pub fn new(forest: &WdPF) -> Result<Self> {
        Self::with_caps(forest, Caps::default())
    }

    pub fn with_caps(forest: &WdPF, caps: Caps) -> Result<Self> {
        forest.require_nr()?;
        caps.check_forest(forest)?;
        let mut subtrees = Vec::new();
        for subtree in forest.subtrees() {
            let members = forest.gtg_members(&subtree);
            if members.is_empty() {
                continue;
            }
            for m in &members {
                let vars = m.graph.graph.vars().len();
                if vars > caps.max_vars_per_graph {
                    return Err(Error::InstanceTooLarge(format!(
                        "a generalised t-graph of {subtree} has {vars} variables, cap is {}",
                        caps.max_vars_per_graph
                    )));
                }
            }
            let ctw = members
                .iter()
                .map(|m| core_treewidth(&m.graph))
                .collect::<Result<_>>()?;
            subtrees.push(SubtreeGtg {
                subtree,
                members,
                ctw,
                hom: HashMap::new(),
            });
        }
        Ok(DominationAnalysis { subtrees })
    }

    pub fn domination_width(&mut self) -> usize {
        self.subtrees
            .iter_mut()
            .map(SubtreeGtg::threshold)
            .max()
            .unwrap_or(1)
            .max(1)
    }

    pub fn report(&mut self) -> WidthReport {
        let mut entries = Vec::new();
        let mut value = 1;
        for s in &mut self.subtrees {
            let t = s.threshold();
            value = value.max(t);
            entries.push(format!("{}: dominated at {t}", s.subtree));
            for (m, c) in s.members.iter().zip(&s.ctw) {
                entries.push(format!("  {} ctw {c}", m.assignment));
            }
        }
        WidthReport {
            measure: "dw",
            value,
            entries,
        }
    }

    /// A subtree whose set is not (k-1)-dominated, and a member of core
    /// treewidth at least k that is homomorphically minimal among the
    /// undominated members (it lies in a source component of their
    /// homomorphism digraph).
    pub fn hard_witness(&mut self, k: usize) -> Option<HardWitness> {
        for s in &mut self.subtrees {
            let candidates = s.undominated(k.saturating_sub(1));
            if candidates.is_empty() {
                continue;
            }
            let n = candidates.len();
            // reach[a][b]: a homomorphism from candidate a to candidate b.
            let mut reach = vec![vec![false; n]; n];
            for a in 0..n {
                for b in 0..n {
                    reach[a][b] = s.hom(candidates[a], candidates[b]);
                }
            }
            // Homomorphisms compose, so the relation is already transitive.
            let source = (0..n).find(|&a| (0..n).all(|b| !reach[b][a] || reach[a][b]))?;
            let member = &s.members[candidates[source]];
            return Some(HardWitness {
                subtree: s.subtree.clone(),
                assignment: member.assignment.clone(),
                graph: member.graph.clone(),
                ctw: s.ctw[candidates[source]],
            });
        }
        None
    }
}

/// A subtree and one of its generalised t-graphs of high core treewidth
/// that maps into every member of the set mapping into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardWitness {
    pub subtree: Subtree,
    pub assignment: ChildrenAssignment,
    pub graph: GeneralizedTGraph,
    pub ctw: usize,
}

pub fn domination_width(forest: &WdPF) -> Result<usize> {
    Ok(DominationAnalysis::new(forest)?.domination_width())
}

pub fn domination_width_report(forest: &WdPF) -> Result<WidthReport> {
    Ok(DominationAnalysis::new(forest)?.report())
}

pub fn find_hard_witness(forest: &WdPF, k: usize) -> Result<Option<HardWitness>> {
    Ok(DominationAnalysis::new(forest)?.hard_witness(k))
}

/// Checks both witness conditions directly against the full set of the
/// witness subtree: core treewidth at least `k`, and every member mapping
/// into the witness receives a homomorphism back.
pub fn verify_hard_witness(forest: &WdPF, witness: &HardWitness, k: usize) -> Result<bool> {
    if core_treewidth(&witness.graph)? < k {
        return Ok(false);
    }
    let gset = forest.gtg(&witness.subtree);
    if !gset.iter().any(|g| {
        is_homomorphic(g, &witness.graph).unwrap_or(false)
            && is_homomorphic(&witness.graph, g).unwrap_or(false)
    }) {
        return Ok(false);
    }
    for other in &gset {
        if is_homomorphic(other, &witness.graph)? && !is_homomorphic(&witness.graph, other)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TGraph;
    use crate::tree::tree_from_rows;

    fn clique(k: usize) -> String {
        let mut parts = Vec::new();
        for i in 1..=k {
            for j in i + 1..=k {
                parts.push(format!("?o{i} r ?o{j}"));
            }
        }
        parts.join(" ; ")
    }

    fn loop_tree(k: usize) -> WdPT {
        tree_from_rows(&[
            (None, "?y r ?y"),
            (Some(0), &format!("?y r ?o1 ; {}", clique(k))),
        ])
        .unwrap()
    }

    fn two_tree_forest(k: usize) -> WdPF {
        let t1 = tree_from_rows(&[
            (None, "?x p ?y"),
            (Some(0), "?z q ?x"),
            (Some(0), &format!("?y r ?o1 ; {}", clique(k))),
        ])
        .unwrap();
        let t2 = tree_from_rows(&[(None, "?x p ?y"), (Some(0), "?z q ?x ; ?w q ?z")]).unwrap();
        WdPF::new(vec![t1, t2]).unwrap()
    }

    #[test]
    fn loop_family_widths() {
        for k in 3..=5 {
            let t = loop_tree(k);
            let f = WdPF::new(vec![t.clone()]).unwrap();
            assert_eq!(branch_treewidth(&t).unwrap(), 1);
            assert_eq!(local_tractability_width(&f).unwrap(), k - 1);
            assert_eq!(domination_width(&f).unwrap(), 1);
        }
    }

    #[test]
    fn single_node_widths() {
        let t = tree_from_rows(&[(None, "?x p ?y")]).unwrap();
        let f = WdPF::new(vec![t.clone()]).unwrap();
        assert_eq!(branch_treewidth(&t).unwrap(), 1);
        assert_eq!(local_tractability_width(&f).unwrap(), 1);
        assert_eq!(domination_width(&f).unwrap(), 1);
        assert_eq!(find_hard_witness(&f, 2).unwrap(), None);
    }

    #[test]
    fn fresh_clique_child() {
        for k in 3..=5 {
            let t = tree_from_rows(&[
                (None, "?x p ?y"),
                (Some(0), &format!("?x r ?o1 ; {}", clique(k))),
            ])
            .unwrap();
            assert_eq!(branch_treewidth(&t).unwrap(), k - 1);
            assert_eq!(
                domination_width(&WdPF::new(vec![t]).unwrap()).unwrap(),
                k - 1
            );
        }
    }

    #[test]
    fn two_tree_family() {
        for k in 3..=4 {
            let f = two_tree_forest(k);
            let mut analysis = DominationAnalysis::new(&f).unwrap();
            assert_eq!(analysis.domination_width(), k - 1);
            let root = analysis
                .subtrees
                .iter()
                .find(|s| s.subtree == Subtree::new(0, [0]))
                .unwrap();
            let gset: Vec<GeneralizedTGraph> =
                root.members.iter().map(|m| m.graph.clone()).collect();
            assert!(is_k_dominated(&gset, 1).unwrap());
            let w = analysis.hard_witness(k - 1).unwrap();
            assert_eq!(w.subtree, Subtree::new(0, [0, 1]));
            assert!(verify_hard_witness(&f, &w, k - 1).unwrap());
            assert_eq!(analysis.hard_witness(k), None);
        }
    }

    #[test]
    fn empty_set_is_dominated() {
        assert!(is_k_dominated(&[], 1).unwrap());
    }

    #[test]
    fn mixed_distinguished_sets_rejected() {
        let a = GeneralizedTGraph::declared(
            TGraph::parse("?x p ?y .").unwrap(),
            ["x"]
                .iter()
                .map(|v| crate::model::Var::new(v).unwrap())
                .collect(),
        );
        let b =
            GeneralizedTGraph::declared(TGraph::parse("?x p ?y .").unwrap(), Default::default());
        assert_eq!(
            is_k_dominated(&[a, b], 1).unwrap_err().kind(),
            "MismatchedDistinguishedSets"
        );
    }

    #[test]
    fn caps_enforced() {
        let caps = Caps {
            max_trees: 1,
            ..Caps::default()
        };
        let err = DominationAnalysis::with_caps(&two_tree_forest(2), caps).unwrap_err();
        assert_eq!(err.kind(), "InstanceTooLarge");
    }
}
