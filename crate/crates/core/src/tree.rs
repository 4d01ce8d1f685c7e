//! Pattern trees and forests, the translation from well-designed patterns,
//! and the subtree combinatorics used by the width measures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::hom::{is_homomorphic, GeneralizedTGraph};
use crate::model::{TGraph, TriplePattern, Var};
use crate::pattern::{GraphPattern, Op};

/// A pattern tree. Node ids are indices into the label vector; node 0 is
/// the root.
#[derive(Clone, PartialEq, Eq)]
pub struct WdPT {
    labels: Vec<TGraph>,
    parents: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl WdPT {
    /// Builds a tree from node labels and parent links. `parents[0]` must be
    /// `None` and every other entry must point at an existing node. Each
    /// label must be non-empty and, for every variable, the nodes
    /// mentioning it must form a connected subtree.
    pub fn new(labels: Vec<TGraph>, parents: Vec<Option<usize>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 || parents.len() != n {
            return Err(Error::InvalidTree(
                "labels and parent links must be non-empty and of equal length".into(),
            ));
        }
        if parents[0].is_some() {
            return Err(Error::InvalidTree("node 0 must be the root".into()));
        }
        let mut children = vec![Vec::new(); n];
        for (id, parent) in parents.iter().enumerate().skip(1) {
            match parent {
                Some(p) if *p < n && *p != id => children[*p].push(id),
                _ => {
                    return Err(Error::InvalidTree(format!(
                        "node n{id} has no valid parent"
                    )))
                }
            }
        }
        let tree = WdPT {
            labels,
            parents,
            children,
        };
        let mut reached = 0;
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            reached += 1;
            if reached > n {
                break;
            }
            stack.extend(tree.children[v].iter().copied());
        }
        if reached != n {
            return Err(Error::InvalidTree(
                "parent links do not form a tree rooted at n0".into(),
            ));
        }
        if let Some(id) = (0..n).find(|&id| tree.labels[id].is_empty()) {
            return Err(Error::InvalidTree(format!("node n{id} has an empty label")));
        }
        for var in tree.vars() {
            let holders: BTreeSet<usize> = (0..n)
                .filter(|&id| tree.node_vars(id).contains(&var))
                .collect();
            // A node set is connected iff exactly one member has its parent outside.
            let tops = holders
                .iter()
                .filter(|&&id| tree.parents[id].is_none_or(|p| !holders.contains(&p)))
                .count();
            if tops != 1 {
                return Err(Error::InvalidTree(format!(
                    "nodes mentioning {var} are not connected"
                )));
            }
        }
        Ok(tree)
    }

    pub fn single(label: TGraph) -> Result<Self> {
        WdPT::new(vec![label], vec![None])
    }

    pub const ROOT: usize = 0;

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn node_ids(&self) -> std::ops::Range<usize> {
        0..self.labels.len()
    }

    pub fn label(&self, node: usize) -> &TGraph {
        &self.labels[node]
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parents[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn node_vars(&self, node: usize) -> BTreeSet<Var> {
        self.labels[node].vars()
    }

    pub fn depth(&self, mut node: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.parents[node] {
            node = p;
            d += 1;
        }
        d
    }

    /// Union of all labels.
    pub fn pat(&self) -> TGraph {
        self.pat_of(self.node_ids())
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.pat().vars()
    }

    pub fn pat_of(&self, nodes: impl IntoIterator<Item = usize>) -> TGraph {
        let mut g = TGraph::new();
        for id in nodes {
            g.extend(self.labels[id].iter().cloned());
        }
        g
    }

    /// Nodes outside `nodes` whose parent is inside, in id order.
    pub fn children_of_set(&self, nodes: &BTreeSet<usize>) -> Vec<usize> {
        self.node_ids()
            .filter(|id| {
                !nodes.contains(id) && self.parents[*id].is_some_and(|p| nodes.contains(&p))
            })
            .collect()
    }

    /// The largest root-containing subtree whose nodes all satisfy `keep`.
    pub fn maximal_subtree(&self, mut keep: impl FnMut(usize) -> bool) -> Option<BTreeSet<usize>> {
        if !keep(Self::ROOT) {
            return None;
        }
        let mut set = BTreeSet::from([Self::ROOT]);
        let mut stack = vec![Self::ROOT];
        while let Some(v) = stack.pop() {
            for &c in &self.children[v] {
                if keep(c) {
                    set.insert(c);
                    stack.push(c);
                }
            }
        }
        Some(set)
    }

    /// A non-root node that adds no variable to its parent, if any.
    pub fn nr_violation(&self) -> Option<usize> {
        self.node_ids().skip(1).find(|&id| {
            let parent = self.node_vars(self.parents[id].expect("non-root node"));
            self.node_vars(id).is_subset(&parent)
        })
    }

    pub fn is_nr(&self) -> bool {
        self.nr_violation().is_none()
    }

    /// Removes every node that adds no variable to its parent. The removed
    /// node's triples are pushed down into each of its children, which are
    /// then re-attached to the grandparent in place of the removed node.
    /// Node ids are renumbered in pre-order.
    pub fn nr_normalize(&self) -> WdPT {
        let mut shape = Shape::from_tree(self);
        shape.normalize();
        shape.into_tree()
    }

    /// All root-containing subtrees, as sorted node-id sets in ascending
    /// lexicographic order.
    pub fn subtrees(&self) -> Vec<BTreeSet<usize>> {
        fn rooted_at(tree: &WdPT, node: usize) -> Vec<BTreeSet<usize>> {
            let mut acc = vec![BTreeSet::from([node])];
            for &c in &tree.children[node] {
                let below = rooted_at(tree, c);
                let mut next = Vec::with_capacity(acc.len() * (below.len() + 1));
                for base in &acc {
                    next.push(base.clone());
                    for b in &below {
                        let mut s = base.clone();
                        s.extend(b.iter().copied());
                        next.push(s);
                    }
                }
                acc = next;
            }
            acc
        }
        let mut all = rooted_at(self, Self::ROOT);
        all.sort();
        all
    }

    /// The equivalent graph pattern `pat(n) OPT c1 OPT c2 ...`, applied
    /// recursively. This rendering also defines the meaning of trees that
    /// are not in NR normal form.
    pub fn to_pattern(&self) -> GraphPattern {
        self.render(Self::ROOT)
    }

    fn render(&self, node: usize) -> GraphPattern {
        let mut p = GraphPattern::conjunction(self.labels[node].iter().cloned())
            .expect("labels are non-empty");
        for &c in &self.children[node] {
            p = GraphPattern::opt(p, self.render(c));
        }
        p
    }

    fn write_node(&self, f: &mut fmt::Formatter<'_>, node: usize, depth: usize) -> fmt::Result {
        writeln!(f, "{}n{}: {}", "  ".repeat(depth), node, self.labels[node])?;
        for &c in &self.children[node] {
            self.write_node(f, c, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for WdPT {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_node(f, Self::ROOT, 0)
    }
}

impl fmt::Debug for WdPT {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Mutable tree shape used while translating and normalizing.
struct Shape {
    label: TGraph,
    children: Vec<Shape>,
}

impl Shape {
    fn from_tree(tree: &WdPT) -> Shape {
        fn build(tree: &WdPT, node: usize) -> Shape {
            Shape {
                label: tree.labels[node].clone(),
                children: tree.children[node]
                    .iter()
                    .map(|&c| build(tree, c))
                    .collect(),
            }
        }
        build(tree, WdPT::ROOT)
    }

    fn from_pattern(p: &GraphPattern) -> Shape {
        match p {
            GraphPattern::Leaf(t) => Shape {
                label: TGraph::from_iter([t.clone()]),
                children: Vec::new(),
            },
            GraphPattern::Node(Op::And, l, r) => {
                let mut left = Shape::from_pattern(l);
                let right = Shape::from_pattern(r);
                left.label.extend(right.label.iter().cloned());
                left.children.extend(right.children);
                left
            }
            GraphPattern::Node(Op::Opt, l, r) => {
                let mut left = Shape::from_pattern(l);
                left.children.push(Shape::from_pattern(r));
                left
            }
            GraphPattern::Node(Op::Union, ..) => unreachable!("union-free input"),
        }
    }

    fn normalize(&mut self) {
        loop {
            let parent_vars = self.label.vars();
            let position = self
                .children
                .iter()
                .position(|c| c.label.vars().is_subset(&parent_vars));
            let Some(pos) = position else { break };
            let removed = self.children.remove(pos);
            let lifted: Vec<Shape> = removed
                .children
                .into_iter()
                .map(|mut c| {
                    c.label.extend(removed.label.iter().cloned());
                    c
                })
                .collect();
            self.children.splice(pos..pos, lifted);
        }
        for c in &mut self.children {
            c.normalize();
        }
    }

    fn into_tree(self) -> WdPT {
        fn flatten(
            shape: Shape,
            parent: Option<usize>,
            labels: &mut Vec<TGraph>,
            parents: &mut Vec<Option<usize>>,
        ) {
            let id = labels.len();
            labels.push(shape.label);
            parents.push(parent);
            for c in shape.children {
                flatten(c, Some(id), labels, parents);
            }
        }
        let mut labels = Vec::new();
        let mut parents = Vec::new();
        flatten(self, None, &mut labels, &mut parents);
        WdPT::new(labels, parents).expect("normalization preserves the tree conditions")
    }
}

/// A subtree of one tree of a forest.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Subtree {
    /// Zero-based index of the owning tree.
    pub tree: usize,
    pub nodes: BTreeSet<usize>,
}

impl Subtree {
    pub fn new(tree: usize, nodes: impl IntoIterator<Item = usize>) -> Self {
        Subtree {
            tree,
            nodes: nodes.into_iter().collect(),
        }
    }
}

impl fmt::Display for Subtree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.nodes.iter().map(|n| format!("n{n}")).collect();
        write!(f, "T{}[{}]", self.tree + 1, ids.join(","))
    }
}

impl fmt::Debug for Subtree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A children assignment: zero-based tree index to the chosen child node
/// of that tree's support witness.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ChildrenAssignment(pub BTreeMap<usize, usize>);

impl ChildrenAssignment {
    pub fn of(pairs: &[(usize, usize)]) -> Self {
        ChildrenAssignment(pairs.iter().copied().collect())
    }

    pub fn domain(&self) -> BTreeSet<usize> {
        self.0.keys().copied().collect()
    }
}

impl fmt::Display for ChildrenAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(i, n)| format!("{}->n{}", i + 1, n))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl fmt::Debug for ChildrenAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A valid children assignment together with its generalised t-graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GtgMember {
    pub assignment: ChildrenAssignment,
    pub graph: GeneralizedTGraph,
}

/// A pattern forest: the union of its trees' answers.
#[derive(Clone, PartialEq, Eq)]
pub struct WdPF {
    trees: Vec<WdPT>,
}

impl WdPF {
    pub fn new(trees: Vec<WdPT>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidTree(
                "a forest needs at least one tree".into(),
            ));
        }
        Ok(WdPF { trees })
    }

    pub fn trees(&self) -> &[WdPT] {
        &self.trees
    }

    pub fn tree(&self, index: usize) -> &WdPT {
        &self.trees[index]
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.trees.iter().flat_map(WdPT::vars).collect()
    }

    pub fn is_nr(&self) -> bool {
        self.trees.iter().all(WdPT::is_nr)
    }

    /// Fails with the first node that breaks NR normal form.
    pub fn require_nr(&self) -> Result<()> {
        for (i, t) in self.trees.iter().enumerate() {
            if let Some(node) = t.nr_violation() {
                return Err(Error::NotNRNormalForm { tree: i + 1, node });
            }
        }
        Ok(())
    }

    /// UNION of the trees' renderings.
    pub fn to_pattern(&self) -> GraphPattern {
        let mut it = self.trees.iter().map(WdPT::to_pattern);
        let first = it.next().expect("non-empty forest");
        it.fold(first, GraphPattern::union)
    }

    pub fn pat(&self, t: &Subtree) -> TGraph {
        self.trees[t.tree].pat_of(t.nodes.iter().copied())
    }

    pub fn subtree_vars(&self, t: &Subtree) -> BTreeSet<Var> {
        self.pat(t).vars()
    }

    /// Child nodes of a subtree, in id order.
    pub fn children(&self, t: &Subtree) -> Vec<usize> {
        self.trees[t.tree].children_of_set(&t.nodes)
    }

    /// Every subtree of every tree, by tree index then node set.
    pub fn subtrees(&self) -> Vec<Subtree> {
        self.trees
            .iter()
            .enumerate()
            .flat_map(|(i, tree)| {
                tree.subtrees()
                    .into_iter()
                    .map(move |nodes| Subtree { tree: i, nodes })
            })
            .collect()
    }

    /// Indices of trees holding a subtree with exactly the variables of
    /// `t`, each with its unique witness: the maximal subtree whose nodes
    /// use only those variables.
    pub fn support(&self, t: &Subtree) -> BTreeMap<usize, Subtree> {
        let vars = self.subtree_vars(t);
        let mut out = BTreeMap::new();
        for (i, tree) in self.trees.iter().enumerate() {
            let Some(nodes) = tree.maximal_subtree(|n| tree.node_vars(n).is_subset(&vars)) else {
                continue;
            };
            if tree.pat_of(nodes.iter().copied()).vars() == vars {
                out.insert(i, Subtree { tree: i, nodes });
            }
        }
        out
    }

    /// Every children assignment of `t`, in a fixed order.
    pub fn children_assignments(&self, t: &Subtree) -> Vec<ChildrenAssignment> {
        let options: Vec<(usize, Vec<usize>)> = self
            .support(t)
            .into_iter()
            .map(|(i, witness)| (i, self.children(&witness)))
            .filter(|(_, kids)| !kids.is_empty())
            .collect();
        let mut out = Vec::new();
        let mut current = BTreeMap::new();
        fn walk(
            options: &[(usize, Vec<usize>)],
            current: &mut BTreeMap<usize, usize>,
            out: &mut Vec<ChildrenAssignment>,
        ) {
            let Some(((i, kids), rest)) = options.split_first() else {
                if !current.is_empty() {
                    out.push(ChildrenAssignment(current.clone()));
                }
                return;
            };
            walk(rest, current, out);
            for &c in kids {
                current.insert(*i, c);
                walk(rest, current, out);
                current.remove(i);
            }
        }
        walk(&options, &mut current, &mut out);
        out
    }

    /// `pat(t)` plus, for every assigned tree, the chosen child's triples
    /// with its variables outside `vars(t)` renamed to `?name#i#node`.
    pub fn s_delta(&self, t: &Subtree, delta: &ChildrenAssignment) -> GeneralizedTGraph {
        let vars = self.subtree_vars(t);
        let mut graph = self.pat(t);
        for (&i, &node) in &delta.0 {
            let renamed = self.trees[i].label(node).map_vars(|v| {
                if vars.contains(v) {
                    v.clone().into()
                } else {
                    Var::internal(&format!("{}#{}#{}", v.name(), i + 1, node)).into()
                }
            });
            graph.extend(renamed.iter().cloned());
        }
        GeneralizedTGraph::declared(graph, vars)
    }

    /// No omitted support witness maps into `S_Δ` with `vars(t)` fixed.
    pub fn is_valid(&self, t: &Subtree, delta: &ChildrenAssignment) -> bool {
        let s = self.s_delta(t, delta);
        self.support(t)
            .into_iter()
            .filter(|(i, _)| !delta.0.contains_key(i))
            .all(|(_, witness)| {
                let w = GeneralizedTGraph::declared(self.pat(&witness), s.dist.clone());
                !is_homomorphic(&w, &s).expect("same distinguished set")
            })
    }

    /// Valid assignments with their t-graphs, keeping the first of every
    /// group of homomorphically equivalent members.
    pub fn gtg_members(&self, t: &Subtree) -> Vec<GtgMember> {
        let mut out: Vec<GtgMember> = Vec::new();
        for delta in self.children_assignments(t) {
            if !self.is_valid(t, &delta) {
                continue;
            }
            let graph = self.s_delta(t, &delta);
            let duplicate = out.iter().any(|m| {
                is_homomorphic(&m.graph, &graph).expect("same distinguished set")
                    && is_homomorphic(&graph, &m.graph).expect("same distinguished set")
            });
            if !duplicate {
                out.push(GtgMember {
                    assignment: delta,
                    graph,
                });
            }
        }
        out
    }

    pub fn gtg(&self, t: &Subtree) -> Vec<GeneralizedTGraph> {
        self.gtg_members(t).into_iter().map(|m| m.graph).collect()
    }

    /// Text layout: one block per tree, nodes indented by depth, blocks
    /// separated by `---`.
    pub fn to_text(&self) -> String {
        let blocks: Vec<String> = self.trees.iter().map(WdPT::to_string).collect();
        blocks.join("---\n")
    }
}

impl fmt::Display for WdPF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl fmt::Debug for WdPF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Translates a well-designed pattern into an equivalent forest in NR
/// normal form, one tree per UNION component.
pub fn wdpf(p: &GraphPattern) -> Result<WdPF> {
    let trees = p
        .union_normalize()?
        .iter()
        .map(|component| {
            let mut shape = Shape::from_pattern(component);
            shape.normalize();
            shape.into_tree()
        })
        .collect();
    WdPF::new(trees)
}

/// Convenience for tests and fixtures: a tree from `(parent, triples)`
/// rows, where row 0 is the root and triples use the graph file syntax.
pub fn tree_from_rows(rows: &[(Option<usize>, &str)]) -> Result<WdPT> {
    let mut labels = Vec::with_capacity(rows.len());
    let mut parents = Vec::with_capacity(rows.len());
    for (parent, text) in rows {
        let triples: Result<Vec<TriplePattern>> = text
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|s| TGraph::parse(s.trim()).map(|g| g.iter().next().cloned()))
            .map(|r| r.and_then(|t| t.ok_or_else(|| Error::InvalidTree("empty triple".into()))))
            .collect();
        labels.push(triples?.into_iter().collect());
        parents.push(*parent);
    }
    WdPT::new(labels, parents)
}
