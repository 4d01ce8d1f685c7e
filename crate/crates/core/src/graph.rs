//! Simple undirected graphs, tree decompositions and exact treewidth.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// Vertex-count cap of the exact treewidth solver.
pub const DEFAULT_TREEWIDTH_CAP: usize = 20;

/// An undirected graph without self-loops or parallel edges.
#[derive(Clone, PartialEq, Eq)]
pub struct UndirectedGraph<V: Ord> {
    vertices: BTreeSet<V>,
    // stored as (min, max)
    edges: BTreeSet<(V, V)>,
}

impl<V: Ord> Default for UndirectedGraph<V> {
    fn default() -> Self {
        UndirectedGraph {
            vertices: BTreeSet::new(),
            edges: BTreeSet::new(),
        }
    }
}

impl<V: Ord + Clone> UndirectedGraph<V> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: V) {
        self.vertices.insert(v);
    }

    /// Adds `{u, v}`. Self-loops are ignored and reported with `false`.
    pub fn add_edge(&mut self, u: V, v: V) -> bool {
        if u == v {
            return false;
        }
        self.vertices.insert(u.clone());
        self.vertices.insert(v.clone());
        let key = if u < v { (u, v) } else { (v, u) };
        self.edges.insert(key);
        true
    }

    pub fn vertices(&self) -> &BTreeSet<V> {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (&V, &V)> {
        self.edges.iter().map(|(u, v)| (u, v))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: &V, v: &V) -> bool {
        if u < v {
            self.edges.contains(&(u.clone(), v.clone()))
        } else {
            self.edges.contains(&(v.clone(), u.clone()))
        }
    }

    pub fn neighbors(&self, v: &V) -> BTreeSet<V> {
        self.edges
            .iter()
            .filter_map(|(a, b)| {
                if a == v {
                    Some(b.clone())
                } else if b == v {
                    Some(a.clone())
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn adjacency(&self) -> BTreeMap<V, BTreeSet<V>> {
        let mut adj: BTreeMap<V, BTreeSet<V>> = self
            .vertices
            .iter()
            .map(|v| (v.clone(), BTreeSet::new()))
            .collect();
        for (a, b) in &self.edges {
            adj.get_mut(a).unwrap().insert(b.clone());
            adj.get_mut(b).unwrap().insert(a.clone());
        }
        adj
    }

    pub fn induced(&self, keep: &BTreeSet<V>) -> Self {
        UndirectedGraph {
            vertices: self.vertices.intersection(keep).cloned().collect(),
            edges: self
                .edges
                .iter()
                .filter(|(a, b)| keep.contains(a) && keep.contains(b))
                .cloned()
                .collect(),
        }
    }

    /// True iff `set` is non-empty and induces a connected subgraph.
    pub fn is_connected_set(&self, set: &BTreeSet<V>) -> bool {
        let Some(start) = set.iter().next() else {
            return false;
        };
        let adj = self.adjacency();
        let mut seen = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(v) = queue.pop_front() {
            if let Some(ns) = adj.get(&v) {
                for n in ns {
                    if set.contains(n) && seen.insert(n.clone()) {
                        queue.push_back(n.clone());
                    }
                }
            }
        }
        seen.len() == set.len()
    }

    pub fn connected_components(&self) -> Vec<BTreeSet<V>> {
        let adj = self.adjacency();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for v in &self.vertices {
            if seen.contains(v) {
                continue;
            }
            let mut comp = BTreeSet::from([v.clone()]);
            seen.insert(v.clone());
            let mut queue = VecDeque::from([v.clone()]);
            while let Some(u) = queue.pop_front() {
                for n in &adj[&u] {
                    if seen.insert(n.clone()) {
                        comp.insert(n.clone());
                        queue.push_back(n.clone());
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.connected_components().len() <= 1
    }

    /// Relabels vertices through `f`, which must be injective.
    pub fn map_vertices<W: Ord + Clone>(&self, mut f: impl FnMut(&V) -> W) -> UndirectedGraph<W> {
        let mut out = UndirectedGraph::new();
        for v in &self.vertices {
            out.add_vertex(f(v));
        }
        for (a, b) in &self.edges {
            out.add_edge(f(a), f(b));
        }
        out
    }
}

impl UndirectedGraph<(usize, usize)> {
    /// The (rows x cols)-grid on `{1..rows} x {1..cols}`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut g = UndirectedGraph::new();
        for i in 1..=rows {
            for j in 1..=cols {
                g.add_vertex((i, j));
                if i < rows {
                    g.add_edge((i, j), (i + 1, j));
                }
                if j < cols {
                    g.add_edge((i, j), (i, j + 1));
                }
            }
        }
        g
    }
}

impl UndirectedGraph<usize> {
    pub fn path(n: usize) -> Self {
        let mut g = UndirectedGraph::new();
        for v in 0..n {
            g.add_vertex(v);
        }
        for v in 1..n {
            g.add_edge(v - 1, v);
        }
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::path(n);
        if n >= 3 {
            g.add_edge(n - 1, 0);
        }
        g
    }

    pub fn complete(n: usize) -> Self {
        let mut g = UndirectedGraph::new();
        for v in 0..n {
            g.add_vertex(v);
            for u in 0..v {
                g.add_edge(u, v);
            }
        }
        g
    }
}

impl<V: Ord + fmt::Debug> fmt::Debug for UndirectedGraph<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UndirectedGraph")
            .field("vertices", &self.vertices)
            .field("edges", &self.edges)
            .finish()
    }
}

/// A tree decomposition: bags indexed by tree node, plus the tree edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDecomposition<V: Ord> {
    pub bags: Vec<BTreeSet<V>>,
    pub tree_edges: Vec<(usize, usize)>,
}

impl<V: Ord + Clone> TreeDecomposition<V> {
    /// max |bag| - 1, with 0 for an empty decomposition.
    pub fn width(&self) -> usize {
        self.bags
            .iter()
            .map(BTreeSet::len)
            .max()
            .unwrap_or(1)
            .saturating_sub(1)
    }

    /// Checks that the decomposition is a tree, covers every vertex and
    /// edge of `graph`, and that each vertex's bags are connected.
    pub fn validate(&self, graph: &UndirectedGraph<V>) -> Result<(), String> {
        let n = self.bags.len();
        if n == 0 {
            return if graph.vertex_count() == 0 {
                Ok(())
            } else {
                Err("empty decomposition of a non-empty graph".into())
            };
        }
        if self.tree_edges.len() != n - 1 {
            return Err(format!("{} tree edges for {n} bags", self.tree_edges.len()));
        }
        let mut tree = UndirectedGraph::new();
        for i in 0..n {
            tree.add_vertex(i);
        }
        for &(a, b) in &self.tree_edges {
            if a >= n || b >= n || !tree.add_edge(a, b) {
                return Err(format!("bad tree edge ({a}, {b})"));
            }
        }
        if !tree.is_connected() {
            return Err("decomposition tree is disconnected".into());
        }
        for v in graph.vertices() {
            let holders: BTreeSet<usize> = (0..n).filter(|&i| self.bags[i].contains(v)).collect();
            if holders.is_empty() {
                return Err("vertex missing from every bag".into());
            }
            if !tree.is_connected_set(&holders) {
                return Err("bags holding a vertex are not connected".into());
            }
        }
        for (u, v) in graph.edges() {
            if !self.bags.iter().any(|b| b.contains(u) && b.contains(v)) {
                return Err("edge not covered by any bag".into());
            }
        }
        Ok(())
    }
}

/// Builds the decomposition induced by eliminating vertices in `order`
/// (indices into `adj`).
fn decomposition_from_order(adj: &[u32], order: &[usize]) -> (Vec<u32>, Vec<(usize, usize)>) {
    let n = order.len();
    let mut position = vec![0usize; adj.len()];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    let mut adj = adj.to_vec();
    let mut bags = Vec::with_capacity(n);
    let mut edges = Vec::new();
    let mut alive: u32 = order.iter().fold(0, |m, &v| m | (1 << v));
    for (i, &v) in order.iter().enumerate() {
        let nbrs = adj[v] & alive & !(1 << v);
        bags.push(nbrs | (1 << v));
        let mut rest = nbrs;
        while rest != 0 {
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            adj[u] |= nbrs & !(1 << u);
        }
        alive &= !(1 << v);
        if i + 1 < n {
            let parent = if nbrs == 0 {
                i + 1
            } else {
                let mut best = usize::MAX;
                let mut rest = nbrs;
                while rest != 0 {
                    let u = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    best = best.min(position[u]);
                }
                best
            };
            edges.push((i, parent));
        }
    }
    (bags, edges)
}

/// Vertices outside `set ∪ {v}` reachable from `v` through `set`.
fn q_set(adj: &[u32], set: u32, v: usize) -> u32 {
    let mut reached: u32 = 0;
    let mut frontier: u32 = 1 << v;
    let mut boundary: u32 = 0;
    while frontier != 0 {
        let mut nb = 0;
        let mut f = frontier;
        while f != 0 {
            let u = f.trailing_zeros() as usize;
            f &= f - 1;
            nb |= adj[u];
        }
        boundary |= nb;
        frontier = nb & set & !reached;
        reached |= frontier;
    }
    boundary & !set & !(1 << v)
}

/// An optimal tree decomposition via dynamic programming over vertex
/// subsets (elimination-ordering formulation).
pub fn optimal_decomposition<V: Ord + Clone>(
    graph: &UndirectedGraph<V>,
    cap: usize,
) -> Result<TreeDecomposition<V>> {
    let n = graph.vertex_count();
    if n > cap || n > 30 {
        return Err(Error::GraphTooLarge { vertices: n, cap });
    }
    let verts: Vec<V> = graph.vertices().iter().cloned().collect();
    if n == 0 {
        return Ok(TreeDecomposition {
            bags: Vec::new(),
            tree_edges: Vec::new(),
        });
    }
    let index: BTreeMap<&V, usize> = verts.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut adj = vec![0u32; n];
    for (a, b) in graph.edges() {
        let (i, j) = (index[a], index[b]);
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
    }
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let size = 1usize << n;
    let mut best = vec![u8::MAX; size];
    let mut last = vec![0u8; size];
    best[0] = 0;
    for set in 1..size as u32 {
        let mut rest = set;
        while rest != 0 {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let without = set & !(1 << v);
            let prev = best[without as usize];
            if prev >= best[set as usize] {
                continue;
            }
            let q = q_set(&adj, without, v).count_ones() as u8;
            let cost = prev.max(q);
            if cost < best[set as usize] {
                best[set as usize] = cost;
                last[set as usize] = v as u8;
            }
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut set = full;
    while set != 0 {
        let v = last[set as usize] as usize;
        order.push(v);
        set &= !(1 << v);
    }
    order.reverse();
    let (bags, tree_edges) = decomposition_from_order(&adj, &order);
    let decomposition = TreeDecomposition {
        bags: bags
            .into_iter()
            .map(|mask| {
                (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| verts[i].clone())
                    .collect()
            })
            .collect(),
        tree_edges,
    };
    debug_assert_eq!(decomposition.width(), best[full as usize] as usize);
    Ok(decomposition)
}

/// Exact treewidth, with the convention that graphs without vertices or
/// without edges have treewidth 1.
pub fn treewidth<V: Ord + Clone>(graph: &UndirectedGraph<V>) -> Result<usize> {
    treewidth_with_cap(graph, DEFAULT_TREEWIDTH_CAP)
}

pub fn treewidth_with_cap<V: Ord + Clone>(graph: &UndirectedGraph<V>, cap: usize) -> Result<usize> {
    if graph.edge_count() == 0 {
        return Ok(1);
    }
    let td = optimal_decomposition(graph, cap)?;
    td.validate(graph)
        .map_err(|e| Error::InvalidTree(format!("internal decomposition invalid: {e}")))?;
    Ok(td.width().max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive oracle: best width over every elimination ordering.
    fn treewidth_by_permutations(g: &UndirectedGraph<usize>) -> usize {
        fn permute(items: &mut Vec<usize>, k: usize, out: &mut dyn FnMut(&[usize])) {
            if k == items.len() {
                out(items);
                return;
            }
            for i in k..items.len() {
                items.swap(k, i);
                permute(items, k + 1, out);
                items.swap(k, i);
            }
        }
        if g.edge_count() == 0 {
            return 1;
        }
        let n = g.vertex_count();
        let mut best = usize::MAX;
        let mut items: Vec<usize> = (0..n).collect();
        permute(&mut items, 0, &mut |order| {
            let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|v| g.neighbors(&v)).collect();
            let mut width = 0;
            let mut gone = BTreeSet::new();
            for &v in order {
                let nb: Vec<usize> = adj[v]
                    .iter()
                    .copied()
                    .filter(|u| !gone.contains(u))
                    .collect();
                width = width.max(nb.len());
                for &a in &nb {
                    for &b in &nb {
                        if a != b {
                            adj[a].insert(b);
                        }
                    }
                }
                gone.insert(v);
            }
            best = best.min(width);
        });
        best.max(1)
    }

    #[test]
    fn standard_values() {
        for n in 2..=7 {
            assert_eq!(treewidth(&UndirectedGraph::path(n)).unwrap(), 1, "path {n}");
        }
        for n in 3..=7 {
            assert_eq!(
                treewidth(&UndirectedGraph::cycle(n)).unwrap(),
                2,
                "cycle {n}"
            );
        }
        for k in 2..=7 {
            assert_eq!(
                treewidth(&UndirectedGraph::complete(k)).unwrap(),
                k - 1,
                "K{k}"
            );
        }
        assert_eq!(treewidth(&UndirectedGraph::grid(3, 3)).unwrap(), 3);
        assert_eq!(treewidth(&UndirectedGraph::grid(2, 5)).unwrap(), 2);
    }

    #[test]
    fn edgeless_convention() {
        assert_eq!(treewidth(&UndirectedGraph::<usize>::new()).unwrap(), 1);
        let mut g = UndirectedGraph::new();
        g.add_vertex(0usize);
        g.add_vertex(1);
        assert_eq!(treewidth(&g).unwrap(), 1);
    }

    #[test]
    fn cap_is_enforced() {
        let g = UndirectedGraph::path(21);
        assert_eq!(
            treewidth(&g).unwrap_err(),
            Error::GraphTooLarge {
                vertices: 21,
                cap: 20
            }
        );
        assert_eq!(
            treewidth_with_cap(&UndirectedGraph::complete(6), 5)
                .unwrap_err()
                .kind(),
            "GraphTooLarge"
        );
    }

    #[test]
    fn matches_permutation_oracle_on_random_graphs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..150 {
            let n = rng.gen_range(1..=7);
            let mut g = UndirectedGraph::new();
            for v in 0..n {
                g.add_vertex(v);
            }
            let density = rng.gen_range(0.1..0.9);
            for a in 0..n {
                for b in a + 1..n {
                    if rng.gen_bool(density) {
                        g.add_edge(a, b);
                    }
                }
            }
            let td = optimal_decomposition(&g, 20).unwrap();
            td.validate(&g).unwrap();
            assert_eq!(
                treewidth(&g).unwrap(),
                treewidth_by_permutations(&g),
                "{g:?}"
            );
        }
    }

    #[test]
    fn subgraph_monotonicity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let n = rng.gen_range(2..=9);
            let mut g = UndirectedGraph::new();
            for a in 0..n {
                g.add_vertex(a);
                for b in 0..a {
                    if rng.gen_bool(0.5) {
                        g.add_edge(a, b);
                    }
                }
            }
            let keep: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.7)).collect();
            let sub = g.induced(&keep);
            assert!(treewidth(&sub).unwrap() <= treewidth(&g).unwrap());
        }
    }

    #[test]
    fn validation_rejects_broken_decompositions() {
        let g = UndirectedGraph::cycle(4);
        let bad = TreeDecomposition {
            bags: vec![BTreeSet::from([0, 1, 2]), BTreeSet::from([2, 3])],
            tree_edges: vec![(0, 1)],
        };
        assert!(bad.validate(&g).is_err());
        let disconnected = TreeDecomposition {
            bags: vec![
                BTreeSet::from([0, 1, 3]),
                BTreeSet::from([1, 2]),
                BTreeSet::from([2, 3]),
            ],
            tree_edges: vec![(0, 1), (1, 2)],
        };
        assert!(disconnected.validate(&g).is_err());
    }

    #[test]
    fn components_and_connectivity() {
        let mut g = UndirectedGraph::path(3);
        g.add_vertex(10);
        assert_eq!(g.connected_components().len(), 2);
        assert!(g.is_connected_set(&BTreeSet::from([0, 1])));
        assert!(!g.is_connected_set(&BTreeSet::from([0, 2])));
        assert!(!g.add_edge(1, 1));
    }
}
