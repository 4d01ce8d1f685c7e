//! Hard-instance generation: grid minors, the clique-encoding t-graph
//! built over a grid minor of a core, freezing into an RDF graph, and the
//! end-to-end reduction from clique instances to evaluation instances.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::UndirectedGraph;
use crate::hom::{core, find_homomorphism, gaifman, GeneralizedTGraph};
use crate::model::{Iri, Mapping, TGraph, Term, TriplePattern, Var};
use crate::tree::WdPF;
use crate::width::{DominationAnalysis, HardWitness};

/// Largest grid the minor search accepts, per side.
pub const MINOR_SEARCH_MAX_SIDE: usize = 3;
/// Largest target the minor search accepts.
pub const MINOR_SEARCH_MAX_TARGET: usize = 12;
/// Largest graph the clique oracle accepts.
pub const CLIQUE_SEARCH_CAP: usize = 20;

/// Prefix of the IRIs that frozen variables become.
pub const FROZEN_PREFIX: &str = "frz:";

/// Branch sets of a `(rows x cols)`-grid in a target graph, keyed by
/// 1-based `(row, col)` cells.
#[derive(Clone, PartialEq, Eq)]
pub struct MinorMap<V: Ord> {
    pub rows: usize,
    pub cols: usize,
    pub cells: BTreeMap<(usize, usize), BTreeSet<V>>,
}

impl<V: Ord + Clone> MinorMap<V> {
    pub fn new(rows: usize, cols: usize) -> Self {
        MinorMap {
            rows,
            cols,
            cells: BTreeMap::new(),
        }
    }

    pub fn branch_vertices(&self) -> BTreeSet<V> {
        self.cells.values().flatten().cloned().collect()
    }

    /// The cell whose branch set holds `v`.
    pub fn cell_of(&self, v: &V) -> Option<(usize, usize)> {
        self.cells
            .iter()
            .find(|(_, set)| set.contains(v))
            .map(|(c, _)| *c)
    }

    /// Checks connected, pairwise disjoint branch sets covering every grid
    /// cell, an edge of the target for every grid edge, and that the branch
    /// sets cover the whole target.
    pub fn check(&self, target: &UndirectedGraph<V>) -> Result<(), String> {
        if self.rows == 0 || self.cols == 0 {
            return Err("grid dimensions must be positive".into());
        }
        for cell in self.cells.keys() {
            if cell.0 == 0 || cell.0 > self.rows || cell.1 == 0 || cell.1 > self.cols {
                return Err(format!("cell {} {} lies outside the grid", cell.0, cell.1));
            }
        }
        let mut seen = BTreeSet::new();
        for i in 1..=self.rows {
            for j in 1..=self.cols {
                let Some(set) = self.cells.get(&(i, j)) else {
                    return Err(format!("cell {i} {j} has no branch set"));
                };
                if set.is_empty() {
                    return Err(format!("cell {i} {j} has an empty branch set"));
                }
                if !set.iter().all(|v| target.vertices().contains(v)) {
                    return Err(format!("cell {i} {j} uses vertices outside the target"));
                }
                if !target.is_connected_set(set) {
                    return Err(format!("cell {i} {j} is not connected"));
                }
                for v in set {
                    if !seen.insert(v.clone()) {
                        return Err(format!("cell {i} {j} overlaps another cell"));
                    }
                }
            }
        }
        let touches = |a: &BTreeSet<V>, b: &BTreeSet<V>| {
            a.iter().any(|u| b.iter().any(|v| target.has_edge(u, v)))
        };
        for i in 1..=self.rows {
            for j in 1..=self.cols {
                let here = &self.cells[&(i, j)];
                if i < self.rows && !touches(here, &self.cells[&(i + 1, j)]) {
                    return Err(format!(
                        "no target edge between cells {i} {j} and {} {j}",
                        i + 1
                    ));
                }
                if j < self.cols && !touches(here, &self.cells[&(i, j + 1)]) {
                    return Err(format!(
                        "no target edge between cells {i} {j} and {i} {}",
                        j + 1
                    ));
                }
            }
        }
        if seen.len() != target.vertex_count() {
            return Err("branch sets do not cover the target".into());
        }
        Ok(())
    }

    pub fn map_vertices<W: Ord + Clone>(&self, mut f: impl FnMut(&V) -> W) -> MinorMap<W> {
        MinorMap {
            rows: self.rows,
            cols: self.cols,
            cells: self
                .cells
                .iter()
                .map(|(c, set)| (*c, set.iter().map(&mut f).collect()))
                .collect(),
        }
    }
}

impl MinorMap<(usize, usize)> {
    /// Every cell mapped to itself.
    pub fn identity(rows: usize, cols: usize) -> Self {
        let mut m = MinorMap::new(rows, cols);
        for i in 1..=rows {
            for j in 1..=cols {
                m.cells.insert((i, j), BTreeSet::from([(i, j)]));
            }
        }
        m
    }
}

impl<V: Ord + fmt::Display> MinorMap<V> {
    /// Lines `cell i j : a b c`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for ((i, j), set) in &self.cells {
            let names: Vec<String> = set.iter().map(ToString::to_string).collect();
            out.push_str(&format!("cell {i} {j} : {}\n", names.join(" ")));
        }
        out
    }
}

impl<V: Ord + fmt::Debug> fmt::Debug for MinorMap<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MinorMap({}x{}, {:?})", self.rows, self.cols, self.cells)
    }
}

/// Parses `cell i j : a b c` lines; the grid size is the largest cell.
pub fn parse_minor_map<V: Ord + Clone>(
    text: &str,
    mut vertex: impl FnMut(&str) -> Result<V, String>,
) -> Result<MinorMap<V>> {
    let mut m = MinorMap::new(0, 0);
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: idx + 1,
            message,
        };
        let (head, tail) = line
            .split_once(':')
            .ok_or_else(|| err("expected `cell i j : vertices`".into()))?;
        let head: Vec<&str> = head.split_whitespace().collect();
        if head.len() != 3 || head[0] != "cell" {
            return Err(err("expected `cell i j : vertices`".into()));
        }
        let coord = |s: &str| s.parse::<usize>().ok().filter(|&n| n > 0);
        let (Some(i), Some(j)) = (coord(head[1]), coord(head[2])) else {
            return Err(err("cell coordinates must be positive integers".into()));
        };
        let set: BTreeSet<V> = tail
            .split_whitespace()
            .map(&mut vertex)
            .collect::<Result<_, _>>()
            .map_err(err)?;
        if set.is_empty() {
            return Err(err(format!("cell {i} {j} lists no vertices")));
        }
        if m.cells.insert((i, j), set).is_some() {
            return Err(err(format!("cell {i} {j} listed twice")));
        }
        m.rows = m.rows.max(i);
        m.cols = m.cols.max(j);
    }
    Ok(m)
}

/// A minor map over variables. Names may contain `#`, so the fresh
/// variables of generalised t-graphs (as printed in reports) can be
/// referenced.
pub fn parse_var_minor_map(text: &str) -> Result<MinorMap<Var>> {
    parse_minor_map(text, |token| {
        let name = token
            .strip_prefix('?')
            .ok_or_else(|| format!("`{token}` is not a variable"))?;
        let plain = name.replace('#', "_");
        Var::new(&plain).map(|_| Var::internal(name))
    })
}

/// Parses `vertex a` and `edge a b` lines.
pub fn parse_undirected_graph(text: &str) -> Result<UndirectedGraph<String>> {
    let mut g = UndirectedGraph::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let err = |message: &str| Error::Parse {
            line: idx + 1,
            message: message.to_string(),
        };
        match tokens.as_slice() {
            ["vertex", a] => g.add_vertex(a.to_string()),
            ["edge", a, b] => {
                if !g.add_edge(a.to_string(), b.to_string()) {
                    return Err(err("self-loops are not allowed"));
                }
            }
            _ => return Err(err("expected `vertex a` or `edge a b`")),
        }
    }
    Ok(g)
}

pub fn undirected_graph_to_text(g: &UndirectedGraph<String>) -> String {
    let mut out = String::new();
    for v in g.vertices() {
        out.push_str(&format!("vertex {v}\n"));
    }
    for (a, b) in g.edges() {
        out.push_str(&format!("edge {a} {b}\n"));
    }
    out
}

/// Whether `gamma` is a minor map of the `(rows x cols)`-grid onto `target`.
pub fn verify_minor_map<V: Ord + Clone>(
    rows: usize,
    cols: usize,
    target: &UndirectedGraph<V>,
    gamma: &MinorMap<V>,
) -> bool {
    gamma.rows == rows && gamma.cols == cols && gamma.check(target).is_ok()
}

struct MinorSearch {
    rows: usize,
    cols: usize,
    adj: Vec<u32>,
    all: u32,
}

impl MinorSearch {
    fn connected(&self, set: u32) -> bool {
        if set == 0 {
            return false;
        }
        let mut reached = 1u32 << set.trailing_zeros();
        loop {
            let mut next = reached;
            let mut r = reached;
            while r != 0 {
                let v = r.trailing_zeros() as usize;
                r &= r - 1;
                next |= self.adj[v] & set;
            }
            if next == reached {
                return reached == set;
            }
            reached = next;
        }
    }

    fn neighbourhood(&self, set: u32) -> u32 {
        let mut out = 0;
        let mut r = set;
        while r != 0 {
            let v = r.trailing_zeros() as usize;
            r &= r - 1;
            out |= self.adj[v];
        }
        out
    }

    fn run(&self, idx: usize, cells: &mut Vec<u32>, used: u32) -> bool {
        let total = self.rows * self.cols;
        if idx == total {
            return self.absorb(cells, used);
        }
        let (r, c) = (idx / self.cols, idx % self.cols);
        let avail = self.all & !used;
        let later = total - idx - 1;
        let budget = (avail.count_ones() as usize).saturating_sub(later);
        let mut must_touch = Vec::new();
        if c > 0 {
            must_touch.push(cells[idx - 1]);
        }
        if r > 0 {
            must_touch.push(cells[idx - self.cols]);
        }
        let mut sub = avail;
        while sub != 0 {
            let candidate = sub;
            sub = (sub - 1) & avail;
            if candidate.count_ones() as usize > budget || !self.connected(candidate) {
                continue;
            }
            let reach = self.neighbourhood(candidate);
            if must_touch.iter().any(|&other| reach & other == 0) {
                continue;
            }
            cells.push(candidate);
            if self.run(idx + 1, cells, used | candidate) {
                return true;
            }
            cells.pop();
        }
        false
    }

    /// Grows branch sets into unused neighbours until the target is covered.
    fn absorb(&self, cells: &mut [u32], mut used: u32) -> bool {
        let original: Vec<u32> = cells.to_vec();
        while used != self.all {
            let mut grew = false;
            for cell in cells.iter_mut() {
                let extra = self.neighbourhood(*cell) & !used;
                if extra != 0 {
                    let v = 1u32 << extra.trailing_zeros();
                    *cell |= v;
                    used |= v;
                    grew = true;
                }
            }
            if !grew {
                cells.copy_from_slice(&original);
                return false;
            }
        }
        true
    }
}

/// Exhaustive search for a minor map of the `(rows x cols)`-grid onto
/// `target`. Limited to grids of side at most 3 and targets of at most 12
/// vertices.
pub fn find_grid_minor<V: Ord + Clone>(
    target: &UndirectedGraph<V>,
    rows: usize,
    cols: usize,
) -> Result<Option<MinorMap<V>>> {
    if rows == 0 || cols == 0 || rows > MINOR_SEARCH_MAX_SIDE || cols > MINOR_SEARCH_MAX_SIDE {
        return Err(Error::SearchTooLarge(format!(
            "grid {rows}x{cols} outside the supported sizes 1..={MINOR_SEARCH_MAX_SIDE}"
        )));
    }
    let n = target.vertex_count();
    if n > MINOR_SEARCH_MAX_TARGET {
        return Err(Error::SearchTooLarge(format!(
            "target has {n} vertices, minor search cap is {MINOR_SEARCH_MAX_TARGET}"
        )));
    }
    if n < rows * cols {
        return Ok(None);
    }
    let verts: Vec<V> = target.vertices().iter().cloned().collect();
    let index: BTreeMap<&V, usize> = verts.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut adj = vec![0u32; n];
    for (a, b) in target.edges() {
        adj[index[a]] |= 1 << index[b];
        adj[index[b]] |= 1 << index[a];
    }
    let search = MinorSearch {
        rows,
        cols,
        adj,
        all: ((1u64 << n) - 1) as u32,
    };
    let mut cells = Vec::with_capacity(rows * cols);
    if !search.run(0, &mut cells, 0) {
        return Ok(None);
    }
    let mut m = MinorMap::new(rows, cols);
    for (idx, mask) in cells.iter().enumerate() {
        let set = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| verts[i].clone())
            .collect();
        m.cells.insert((idx / cols + 1, idx % cols + 1), set);
    }
    debug_assert!(m.check(target).is_ok());
    Ok(Some(m))
}

/// Exhaustive clique test.
pub fn has_clique<V: Ord + Clone>(graph: &UndirectedGraph<V>, k: usize) -> Result<bool> {
    let n = graph.vertex_count();
    if n > CLIQUE_SEARCH_CAP {
        return Err(Error::SearchTooLarge(format!(
            "graph has {n} vertices, clique search cap is {CLIQUE_SEARCH_CAP}"
        )));
    }
    if k == 0 {
        return Ok(true);
    }
    let verts: Vec<&V> = graph.vertices().iter().collect();
    fn extend<V: Ord + Clone>(
        g: &UndirectedGraph<V>,
        verts: &[&V],
        chosen: &mut Vec<usize>,
        from: usize,
        k: usize,
    ) -> bool {
        if chosen.len() == k {
            return true;
        }
        for v in from..verts.len() {
            if chosen.iter().all(|&u| g.has_edge(verts[u], verts[v])) {
                chosen.push(v);
                if extend(g, verts, chosen, v + 1, k) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    Ok(extend(graph, &verts, &mut Vec::new(), 0, k))
}

/// A graph and a clique size to look for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueInstance {
    pub graph: UndirectedGraph<String>,
    pub k: usize,
}

impl CliqueInstance {
    pub fn new(graph: UndirectedGraph<String>, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidK {
                k,
                reason: "clique size must be at least 2".into(),
            });
        }
        Ok(CliqueInstance { graph, k })
    }

    /// Number of unordered pairs of clique positions.
    pub fn pair_count(&self) -> usize {
        self.k * (self.k - 1) / 2
    }

    /// The `p`-th unordered pair (1-based) in lexicographic order.
    pub fn pair(&self, p: usize) -> (usize, usize) {
        let mut idx = 0;
        for a in 1..=self.k {
            for b in a + 1..=self.k {
                idx += 1;
                if idx == p {
                    return (a, b);
                }
            }
        }
        panic!("pair index {p} out of range");
    }
}

fn component_graph(
    core_graph: &GeneralizedTGraph,
    target: &BTreeSet<Var>,
) -> Result<UndirectedGraph<Var>> {
    let gg = gaifman(core_graph);
    let comp = gg
        .connected_components()
        .into_iter()
        .find(|c| c == target)
        .ok_or_else(|| {
            Error::ComponentMismatch(
                "minor map target is not a connected component of the core's Gaifman graph".into(),
            )
        })?;
    Ok(gg.induced(&comp))
}

/// Builds the clique-encoding t-graph `(B, X)` for `(S, X)`: every
/// variable `?a` of the grid-minor component is split into copies indexed
/// by a vertex `v` and an edge `e` of the graph, where `v ∈ e` exactly when
/// the clique position of `?a`'s row belongs to the position pair of its
/// column. Triples of the core are copied over every consistent choice of
/// copies: copies sharing a row agree on the vertex, and copies sharing a
/// column agree on the edge. Triples outside the component are kept.
pub fn build_b(
    g: &GeneralizedTGraph,
    inst: &CliqueInstance,
    gamma: &MinorMap<Var>,
) -> Result<GeneralizedTGraph> {
    let c = core(g);
    if gamma.rows != inst.k || gamma.cols != inst.pair_count() {
        return Err(Error::InvalidMinorMap(format!(
            "expected a {}x{} grid, got {}x{}",
            inst.k,
            inst.pair_count(),
            gamma.rows,
            gamma.cols
        )));
    }
    let component = gamma.branch_vertices();
    let target = component_graph(&c, &component)?;
    gamma.check(&target).map_err(Error::InvalidMinorMap)?;

    let vertices: Vec<&String> = inst.graph.vertices().iter().collect();
    let edges: Vec<(&String, &String)> = inst.graph.edges().collect();

    // Copies of each component variable: (vertex index, edge index, name).
    struct Copy {
        v: usize,
        e: usize,
        var: Var,
    }
    let mut copies: BTreeMap<Var, (usize, usize, Vec<Copy>)> = BTreeMap::new();
    for a in &component {
        let (i, p) = gamma.cell_of(a).expect("branch vertex lies in a cell");
        let (x, y) = inst.pair(p);
        let position_in_pair = i == x || i == y;
        let mut list = Vec::new();
        for (vi, v) in vertices.iter().enumerate() {
            for (ei, (s, t)) in edges.iter().enumerate() {
                let vertex_in_edge = v == s || v == t;
                if vertex_in_edge == position_in_pair {
                    let name = format!("{}#v{vi}#e{ei}#i{i}#p{p}", a.name());
                    list.push(Copy {
                        v: vi,
                        e: ei,
                        var: Var::internal(&name),
                    });
                }
            }
        }
        copies.insert(a.clone(), (i, p, list));
    }

    let mut b = TGraph::new();
    for t in &c.graph {
        let free: Vec<&Var> = t.vars().filter(|v| !c.dist.contains(*v)).collect();
        if free.iter().any(|v| !component.contains(*v)) {
            b.insert(t.clone());
            continue;
        }
        // Each free position independently picks a copy of its variable.
        let positions: Vec<usize> = (0..3)
            .filter(|&pos| {
                t.terms()[pos]
                    .as_var()
                    .is_some_and(|v| component.contains(v))
            })
            .collect();
        let mut choice = vec![0usize; positions.len()];
        let lists: Vec<&(usize, usize, Vec<Copy>)> = positions
            .iter()
            .map(|&pos| &copies[t.terms()[pos].as_var().expect("variable position")])
            .collect();
        if lists.iter().any(|l| l.2.is_empty()) {
            continue;
        }
        loop {
            let consistent = (0..positions.len()).all(|x| {
                (0..x).all(|y| {
                    let (ix, px, lx) = lists[x];
                    let (iy, py, ly) = lists[y];
                    let (cx, cy) = (&lx[choice[x]], &ly[choice[y]]);
                    (ix != iy || cx.v == cy.v) && (px != py || cx.e == cy.e)
                })
            });
            if consistent {
                let mut terms: Vec<Term> = t.terms().into_iter().cloned().collect();
                for (slot, &pos) in positions.iter().enumerate() {
                    terms[pos] = Term::Var(lists[slot].2[choice[slot]].var.clone());
                }
                let [s, p, o]: [Term; 3] = terms.try_into().expect("three terms");
                b.insert(TriplePattern::new(s, p, o));
            }
            // Advance the mixed-radix counter.
            let mut slot = 0;
            loop {
                if slot == choice.len() {
                    break;
                }
                choice[slot] += 1;
                if choice[slot] < lists[slot].2.len() {
                    break;
                }
                choice[slot] = 0;
                slot += 1;
            }
            if slot == choice.len() {
                break;
            }
        }
    }
    Ok(GeneralizedTGraph::declared(b, g.dist.clone()))
}

/// The two structural guarantees of the construction: triples over the
/// distinguished variables alone survive, and `(B, X)` maps back into
/// `(S, X)`.
pub fn check_b_conditions(s: &GeneralizedTGraph, b: &GeneralizedTGraph) -> bool {
    let kept = s
        .graph
        .iter()
        .filter(|t| t.vars().all(|v| s.dist.contains(v)))
        .all(|t| b.graph.contains(t));
    kept && find_homomorphism(b, s).ok().flatten().is_some()
}

/// An RDF graph and mapping obtained by turning every variable into a
/// reserved IRI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenInstance {
    pub graph: TGraph,
    pub mapping: Mapping,
    pub freeze: BTreeMap<Var, Iri>,
    pub thaw: BTreeMap<Iri, Var>,
}

impl FrozenInstance {
    /// The variable an IRI was frozen from, or the IRI itself.
    pub fn thaw_iri(&self, a: &Iri) -> Term {
        self.thaw
            .get(a)
            .map_or_else(|| Term::Iri(a.clone()), |v| Term::Var(v.clone()))
    }
}

pub fn freeze(b: &GeneralizedTGraph) -> Result<FrozenInstance> {
    if let Some(a) = b
        .graph
        .iris()
        .into_iter()
        .find(|a| a.as_str().starts_with(FROZEN_PREFIX))
    {
        return Err(Error::ReservedPrefixCollision(a.to_string()));
    }
    let freeze: BTreeMap<Var, Iri> = b
        .graph
        .vars()
        .into_iter()
        .chain(b.dist.iter().cloned())
        .map(|v| {
            let iri = Iri::new(&format!("{FROZEN_PREFIX}{}", v.name()))
                .expect("variable names are valid IRI characters");
            (v, iri)
        })
        .collect();
    let thaw = freeze.iter().map(|(v, a)| (a.clone(), v.clone())).collect();
    let graph = b.graph.map_vars(|v| Term::Iri(freeze[v].clone()));
    let mapping = b
        .dist
        .iter()
        .map(|v| (v.clone(), freeze[v].clone()))
        .collect();
    Ok(FrozenInstance {
        graph,
        mapping,
        freeze,
        thaw,
    })
}

/// A generated evaluation instance and how it was obtained.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub graph: TGraph,
    pub mapping: Mapping,
    pub witness: HardWitness,
    pub minor: MinorMap<Var>,
    pub b: GeneralizedTGraph,
}

impl GeneratedInstance {
    pub fn report(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("witness subtree: {}\n", self.witness.subtree));
        out.push_str(&format!(
            "children assignment: {}\n",
            self.witness.assignment
        ));
        out.push_str(&format!("witness ctw: {}\n", self.witness.ctw));
        out.push_str(&format!("grid: {}x{}\n", self.minor.rows, self.minor.cols));
        out.push_str(&self.minor.to_text());
        out.push_str(&format!("encoding triples: {}\n", self.b.graph.len()));
        out.push_str(&format!("graph triples: {}\n", self.graph.len()));
        out
    }
}

/// A hard witness of the forest whose core has a Gaifman component with a
/// `(rows x cols)`-grid minor, with that minor map. Thresholds are tried
/// from the domination width downwards; `gamma`, when given, must fit
/// the witness core.
pub fn find_encodable_witness(
    forest: &WdPF,
    rows: usize,
    cols: usize,
    gamma: Option<&MinorMap<Var>>,
) -> Result<(HardWitness, MinorMap<Var>)> {
    let mut analysis = DominationAnalysis::new(forest)?;
    let dw = analysis.domination_width();
    let mut any_witness = false;
    for level in (1..=dw).rev() {
        let Some(witness) = analysis.hard_witness(level) else {
            continue;
        };
        any_witness = true;
        let c = core(&witness.graph);
        let gg = gaifman(&c);
        if let Some(gamma) = gamma {
            if gamma.rows == rows && gamma.cols == cols {
                if let Ok(target) = component_graph(&c, &gamma.branch_vertices()) {
                    if gamma.check(&target).is_ok() {
                        return Ok((witness, gamma.clone()));
                    }
                }
            }
            continue;
        }
        let mut components = gg.connected_components();
        components.sort_by_key(|comp| std::cmp::Reverse(comp.len()));
        for comp in components {
            let target = gg.induced(&comp);
            if target.vertex_count() > MINOR_SEARCH_MAX_TARGET {
                continue;
            }
            if let Some(m) = find_grid_minor(&target, rows, cols)? {
                return Ok((witness, m));
            }
        }
    }
    if !any_witness {
        return Err(Error::NoHardWitness(
            "no subtree has generalised t-graphs to encode".into(),
        ));
    }
    Err(Error::NoGridMinorFound(match gamma {
        Some(_) => "the supplied minor map does not fit any witness core".into(),
        None => format!("no witness core has a {rows}x{cols} grid minor"),
    }))
}

/// Encodes the clique question for `inst` into the witness's
/// generalised t-graph and freezes it: the graph has a `k`-clique exactly
/// when the mapping is not an answer of the forest over the frozen graph.
pub fn encode_with_witness(
    witness: &HardWitness,
    minor: &MinorMap<Var>,
    inst: &CliqueInstance,
) -> Result<GeneratedInstance> {
    let b = build_b(&witness.graph, inst, minor)?;
    let frozen = freeze(&b)?;
    Ok(GeneratedInstance {
        graph: frozen.graph,
        mapping: frozen.mapping,
        witness: witness.clone(),
        minor: minor.clone(),
        b,
    })
}

pub fn gen_instance(
    forest: &WdPF,
    inst: &CliqueInstance,
    gamma: Option<&MinorMap<Var>>,
) -> Result<GeneratedInstance> {
    let (witness, minor) = find_encodable_witness(forest, inst.k, inst.pair_count(), gamma)?;
    encode_with_witness(&witness, &minor, inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hom::maps_into_graph;
    use crate::model::parse_var_list;

    fn ug(text: &str) -> UndirectedGraph<String> {
        parse_undirected_graph(text).unwrap()
    }

    #[test]
    fn identity_grid_map() {
        let grid = UndirectedGraph::grid(2, 2);
        assert!(verify_minor_map(2, 2, &grid, &MinorMap::identity(2, 2)));
        assert!(!verify_minor_map(2, 1, &grid, &MinorMap::identity(2, 2)));
    }

    #[test]
    fn edge_minor_of_connected_graphs() {
        let g = UndirectedGraph::path(5);
        let m = find_grid_minor(&g, 2, 1).unwrap().unwrap();
        assert!(verify_minor_map(2, 1, &g, &m));
        let mut two = UndirectedGraph::<usize>::new();
        two.add_vertex(0);
        two.add_vertex(1);
        assert!(find_grid_minor(&two, 2, 1).unwrap().is_none());
    }

    #[test]
    fn grid_with_subdivided_edge() {
        let mut g = UndirectedGraph::grid(3, 3).map_vertices(|&(i, j)| format!("g{i}{j}"));
        // Subdivide the edge g11-g12.
        let mut h = UndirectedGraph::new();
        for v in g.vertices() {
            h.add_vertex(v.clone());
        }
        for (a, b) in g.edges() {
            if !(a == "g11" && b == "g12") {
                h.add_edge(a.clone(), b.clone());
            }
        }
        h.add_edge("g11".to_string(), "mid".to_string());
        h.add_edge("mid".to_string(), "g12".to_string());
        g = h;
        let m = find_grid_minor(&g, 3, 3).unwrap().unwrap();
        assert!(verify_minor_map(3, 3, &g, &m));
        assert_eq!(m.branch_vertices().len(), 10);
    }

    #[test]
    fn no_three_by_three_in_small_treewidth() {
        let g = UndirectedGraph::grid(2, 5);
        assert!(find_grid_minor(&g, 3, 3).unwrap().is_none());
    }

    #[test]
    fn minor_map_validation_messages() {
        let grid = UndirectedGraph::grid(2, 2);
        let mut m = MinorMap::identity(2, 2);
        m.cells.insert((1, 1), BTreeSet::from([(2, 2)]));
        assert!(m.check(&grid).unwrap_err().contains("overlaps"));
        let mut m = MinorMap::identity(2, 2);
        m.cells.remove(&(2, 2));
        assert!(m.check(&grid).is_err());
    }

    #[test]
    fn search_caps() {
        let g = UndirectedGraph::path(13);
        assert_eq!(
            find_grid_minor(&g, 2, 1).unwrap_err().kind(),
            "SearchTooLarge"
        );
        assert_eq!(
            find_grid_minor(&UndirectedGraph::path(4), 4, 1)
                .unwrap_err()
                .kind(),
            "SearchTooLarge"
        );
        assert_eq!(
            has_clique(&UndirectedGraph::path(21), 2)
                .unwrap_err()
                .kind(),
            "SearchTooLarge"
        );
    }

    #[test]
    fn clique_oracle() {
        assert!(has_clique(&UndirectedGraph::complete(3), 3).unwrap());
        assert!(!has_clique(&UndirectedGraph::path(3), 3).unwrap());
        assert!(has_clique(&UndirectedGraph::path(3), 2).unwrap());
    }

    #[test]
    fn pair_order() {
        let inst = CliqueInstance::new(ug("vertex a"), 4).unwrap();
        assert_eq!(inst.pair_count(), 6);
        let pairs: Vec<_> = (1..=6).map(|p| inst.pair(p)).collect();
        assert_eq!(pairs, vec![(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        assert_eq!(
            CliqueInstance::new(ug(""), 1).unwrap_err().kind(),
            "InvalidK"
        );
    }

    fn edge_pattern() -> GeneralizedTGraph {
        GeneralizedTGraph::new(TGraph::parse("?a p ?b .").unwrap(), BTreeSet::new()).unwrap()
    }

    fn edge_minor() -> MinorMap<Var> {
        parse_minor_map("cell 1 1 : ?a\ncell 2 1 : ?b", |s| {
            Term::parse(s)
                .ok()
                .and_then(|t| t.as_var().cloned())
                .ok_or_else(|| format!("bad variable {s}"))
        })
        .unwrap()
    }

    #[test]
    fn smallest_encoding() {
        let s = edge_pattern();
        let yes = CliqueInstance::new(ug("edge u v"), 2).unwrap();
        let b = build_b(&s, &yes, &edge_minor()).unwrap();
        assert!(check_b_conditions(&s, &b));
        assert!(find_homomorphism(&s, &b).unwrap().is_some());
        let no = CliqueInstance::new(ug("vertex u\nvertex v"), 2).unwrap();
        let b = build_b(&s, &no, &edge_minor()).unwrap();
        assert!(b.graph.is_empty());
        assert!(find_homomorphism(&s, &b).unwrap().is_none());
    }

    #[test]
    fn encoding_rejects_foreign_minor() {
        let s = GeneralizedTGraph::new(
            TGraph::parse("?a p ?b .\n?c q ?d .").unwrap(),
            BTreeSet::new(),
        )
        .unwrap();
        let inst = CliqueInstance::new(ug("edge u v"), 2).unwrap();
        let bad = parse_minor_map("cell 1 1 : ?a\ncell 2 1 : ?c", |s| {
            Term::parse(s)
                .ok()
                .and_then(|t| t.as_var().cloned())
                .ok_or_else(|| s.to_string())
        })
        .unwrap();
        assert_eq!(
            build_b(&s, &inst, &bad).unwrap_err().kind(),
            "ComponentMismatch"
        );
        let s = edge_pattern();
        let wrong = parse_minor_map("cell 1 1 : ?a ?b", |s| {
            Term::parse(s)
                .ok()
                .and_then(|t| t.as_var().cloned())
                .ok_or_else(|| s.to_string())
        })
        .unwrap();
        assert_eq!(
            build_b(&s, &inst, &wrong).unwrap_err().kind(),
            "InvalidMinorMap"
        );
    }

    #[test]
    fn freezing() {
        let b = GeneralizedTGraph::new(
            TGraph::parse("?x p ?y .").unwrap(),
            parse_var_list("?x").unwrap(),
        )
        .unwrap();
        let f = freeze(&b).unwrap();
        assert_eq!(f.graph, TGraph::parse_rdf("frz:x p frz:y .").unwrap());
        assert_eq!(f.mapping, Mapping::of(&[("x", "frz:x")]));
        for (v, a) in &f.freeze {
            assert_eq!(f.thaw_iri(a), Term::Var(v.clone()));
        }
        assert_eq!(f.thaw_iri(&Iri::new("p").unwrap()), Term::iri("p"));
        assert!(maps_into_graph(&b, &f.graph, &f.mapping).unwrap().is_some());
        let clash = GeneralizedTGraph::new(TGraph::parse("?x p frz:y .").unwrap(), BTreeSet::new())
            .unwrap();
        assert_eq!(
            freeze(&clash).unwrap_err().kind(),
            "ReservedPrefixCollision"
        );
    }

    #[test]
    fn graph_file_round_trip() {
        let g = ug("vertex a\nedge a b\n# comment\nedge b c");
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(
            parse_undirected_graph(&undirected_graph_to_text(&g)).unwrap(),
            g
        );
        assert_eq!(
            parse_undirected_graph("edge a a").unwrap_err().kind(),
            "ParseError"
        );
        assert_eq!(
            parse_undirected_graph("node a").unwrap_err().kind(),
            "ParseError"
        );
    }
}
