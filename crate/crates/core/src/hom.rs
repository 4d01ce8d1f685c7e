//! Homomorphisms between generalised t-graphs, cores and core treewidth.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::graph::{treewidth, UndirectedGraph};
use crate::model::{Iri, Mapping, TGraph, Term, TriplePattern, Var};

/// A t-graph together with a set of distinguished variables that every
/// homomorphism must leave fixed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct GeneralizedTGraph {
    pub graph: TGraph,
    pub dist: BTreeSet<Var>,
}

impl GeneralizedTGraph {
    /// Requires the distinguished variables to occur in the graph.
    pub fn new(graph: TGraph, dist: BTreeSet<Var>) -> Result<Self> {
        let vars = graph.vars();
        if let Some(v) = dist.iter().find(|v| !vars.contains(*v)) {
            return Err(Error::DomainMismatch(format!(
                "distinguished variable {v} does not occur in the t-graph"
            )));
        }
        Ok(GeneralizedTGraph { graph, dist })
    }

    /// Builds the pair without checking that `dist` occurs in `graph`.
    pub fn declared(graph: TGraph, dist: BTreeSet<Var>) -> Self {
        GeneralizedTGraph { graph, dist }
    }

    /// Variables not in the distinguished set.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        self.graph.vars().difference(&self.dist).cloned().collect()
    }
}

impl fmt::Debug for GeneralizedTGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dist: Vec<String> = self.dist.iter().map(Var::to_string).collect();
        write!(f, "({}, {{{}}})", self.graph, dist.join(", "))
    }
}

pub type Homomorphism = BTreeMap<Var, Term>;

#[derive(Clone, Copy)]
enum Slot {
    Var(usize),
    Const(u32),
}

struct Constraint {
    slots: [Slot; 3],
    candidates: Vec<[u32; 3]>,
}

/// A compiled homomorphism search from the free variables of a source
/// t-graph into a target t-graph.
struct Search {
    vars: Vec<Var>,
    target_terms: Vec<Term>,
    constraints: Vec<Constraint>,
    by_var: Vec<Vec<usize>>,
    order: Vec<usize>,
    satisfiable: bool,
}

const UNSET: u32 = u32::MAX;

impl Search {
    fn new<'a>(
        source: impl IntoIterator<Item = &'a TriplePattern>,
        target: &TGraph,
        fixed: &BTreeMap<Var, Term>,
    ) -> Search {
        let mut target_terms: Vec<Term> = Vec::new();
        let mut term_id: HashMap<Term, u32> = HashMap::new();
        let mut encoded: Vec<[u32; 3]> = Vec::with_capacity(target.len());
        for t in target {
            let mut enc = [0u32; 3];
            for (i, term) in t.terms().into_iter().enumerate() {
                enc[i] = *term_id.entry(term.clone()).or_insert_with(|| {
                    target_terms.push(term.clone());
                    (target_terms.len() - 1) as u32
                });
            }
            encoded.push(enc);
        }

        let mut vars: Vec<Var> = Vec::new();
        let mut var_id: HashMap<Var, usize> = HashMap::new();
        let mut occurrences: Vec<usize> = Vec::new();
        let mut constraints = Vec::new();
        let mut satisfiable = true;
        for t in source {
            let mut slots = [Slot::Const(0); 3];
            let mut missing = false;
            for (i, term) in t.terms().into_iter().enumerate() {
                let constant = match term {
                    Term::Var(v) => match fixed.get(v) {
                        Some(image) => Some(image),
                        None => {
                            let id = *var_id.entry(v.clone()).or_insert_with(|| {
                                vars.push(v.clone());
                                occurrences.push(0);
                                vars.len() - 1
                            });
                            occurrences[id] += 1;
                            slots[i] = Slot::Var(id);
                            None
                        }
                    },
                    Term::Iri(_) => Some(term),
                };
                if let Some(c) = constant {
                    match term_id.get(c) {
                        Some(&id) => slots[i] = Slot::Const(id),
                        None => missing = true,
                    }
                }
            }
            let candidates: Vec<[u32; 3]> = if missing {
                Vec::new()
            } else {
                encoded
                    .iter()
                    .filter(|cand| {
                        (0..3).all(|i| match slots[i] {
                            Slot::Const(c) => cand[i] == c,
                            Slot::Var(v) => (0..i).all(|j| match slots[j] {
                                Slot::Var(w) if w == v => cand[j] == cand[i],
                                _ => true,
                            }),
                        })
                    })
                    .copied()
                    .collect()
            };
            if candidates.is_empty() {
                satisfiable = false;
            }
            constraints.push(Constraint { slots, candidates });
        }

        let mut by_var = vec![Vec::new(); vars.len()];
        for (ci, c) in constraints.iter().enumerate() {
            for slot in c.slots {
                if let Slot::Var(v) = slot {
                    if by_var[v].last() != Some(&ci) {
                        by_var[v].push(ci);
                    }
                }
            }
        }
        // Greedy order: prefer variables sharing many triples with those
        // already placed, then frequent ones, then by name.
        let mut order: Vec<usize> = Vec::with_capacity(vars.len());
        let mut placed = vec![false; vars.len()];
        let mut links = vec![0usize; vars.len()];
        for _ in 0..vars.len() {
            let next = (0..vars.len())
                .filter(|&v| !placed[v])
                .min_by(|&a, &b| {
                    links[b]
                        .cmp(&links[a])
                        .then(occurrences[b].cmp(&occurrences[a]))
                        .then_with(|| vars[a].cmp(&vars[b]))
                })
                .expect("unplaced variable remains");
            placed[next] = true;
            order.push(next);
            for &ci in &by_var[next] {
                for slot in constraints[ci].slots {
                    if let Slot::Var(w) = slot {
                        if !placed[w] {
                            links[w] += 1;
                        }
                    }
                }
            }
        }

        Search {
            vars,
            target_terms,
            constraints,
            by_var,
            order,
            satisfiable,
        }
    }

    fn consistent(slots: &[Slot; 3], cand: &[u32; 3], assign: &[u32]) -> bool {
        (0..3).all(|i| match slots[i] {
            Slot::Var(v) => assign[v] == UNSET || assign[v] == cand[i],
            Slot::Const(_) => true,
        })
    }

    fn supported(&self, ci: usize, assign: &[u32]) -> bool {
        let c = &self.constraints[ci];
        c.candidates
            .iter()
            .any(|cand| Self::consistent(&c.slots, cand, assign))
    }

    fn run(&self, visit: &mut dyn FnMut(&[u32]) -> ControlFlow<()>) {
        if !self.satisfiable {
            return;
        }
        let mut assign = vec![UNSET; self.vars.len()];
        let _ = self.dfs(0, &mut assign, visit);
    }

    fn dfs(
        &self,
        depth: usize,
        assign: &mut Vec<u32>,
        visit: &mut dyn FnMut(&[u32]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if depth == self.order.len() {
            return visit(assign);
        }
        let v = self.order[depth];
        // Candidate values come from the most selective constraint on v.
        let mut best: Option<Vec<u32>> = None;
        for &ci in &self.by_var[v] {
            let c = &self.constraints[ci];
            let pos = (0..3)
                .find(|&i| matches!(c.slots[i], Slot::Var(w) if w == v))
                .expect("constraint indexed under its variable");
            let mut values: Vec<u32> = c
                .candidates
                .iter()
                .filter(|cand| Self::consistent(&c.slots, cand, assign))
                .map(|cand| cand[pos])
                .collect();
            values.sort_unstable();
            values.dedup();
            if best.as_ref().is_none_or(|b| values.len() < b.len()) {
                let empty = values.is_empty();
                best = Some(values);
                if empty {
                    break;
                }
            }
        }
        for value in best.unwrap_or_default() {
            assign[v] = value;
            if self.by_var[v].iter().all(|&ci| self.supported(ci, assign)) {
                self.dfs(depth + 1, assign, visit)?;
            }
        }
        assign[v] = UNSET;
        ControlFlow::Continue(())
    }

    fn decode(&self, assign: &[u32]) -> impl Iterator<Item = (Var, Term)> + '_ {
        self.vars
            .iter()
            .zip(assign.to_vec())
            .map(|(v, a)| (v.clone(), self.target_terms[a as usize].clone()))
    }
}

/// Calls `visit` with every map `h` on the variables of `source` such that
/// `h` extends `fixed` and sends every triple of `source` into `target`.
/// Variables absent from `source` but present in `fixed` are included.
pub fn for_each_extension<'a>(
    source: impl IntoIterator<Item = &'a TriplePattern>,
    target: &TGraph,
    fixed: &BTreeMap<Var, Term>,
    mut visit: impl FnMut(&Homomorphism) -> ControlFlow<()>,
) {
    let search = Search::new(source, target, fixed);
    search.run(&mut |assign| {
        let mut h = fixed.clone();
        h.extend(search.decode(assign));
        visit(&h)
    });
}

/// The first extension found by [`for_each_extension`], if any.
pub fn find_extension<'a>(
    source: impl IntoIterator<Item = &'a TriplePattern>,
    target: &TGraph,
    fixed: &BTreeMap<Var, Term>,
) -> Option<Homomorphism> {
    let mut found = None;
    for_each_extension(source, target, fixed, |h| {
        found = Some(h.clone());
        ControlFlow::Break(())
    });
    found
}

fn identity_on(dist: &BTreeSet<Var>) -> BTreeMap<Var, Term> {
    dist.iter()
        .map(|v| (v.clone(), Term::Var(v.clone())))
        .collect()
}

/// A homomorphism `from -> to` fixing the shared distinguished set, or
/// `None`. Both sides must declare the same distinguished variables.
pub fn find_homomorphism(
    from: &GeneralizedTGraph,
    to: &GeneralizedTGraph,
) -> Result<Option<Homomorphism>> {
    if from.dist != to.dist {
        let show = |d: &BTreeSet<Var>| {
            let names: Vec<String> = d.iter().map(Var::to_string).collect();
            format!("{{{}}}", names.join(", "))
        };
        return Err(Error::MismatchedDistinguishedSets {
            left: show(&from.dist),
            right: show(&to.dist),
        });
    }
    Ok(find_extension(
        &from.graph,
        &to.graph,
        &identity_on(&from.dist),
    ))
}

pub fn is_homomorphic(from: &GeneralizedTGraph, to: &GeneralizedTGraph) -> Result<bool> {
    Ok(find_homomorphism(from, to)?.is_some())
}

/// Checks whether `mu`, defined exactly on the distinguished variables,
/// extends to a homomorphism from the t-graph into the RDF graph. Returns
/// the full extension when it exists.
pub fn maps_into_graph(
    source: &GeneralizedTGraph,
    graph: &TGraph,
    mu: &Mapping,
) -> Result<Option<Mapping>> {
    if mu.domain() != source.dist {
        return Err(Error::DomainMismatch(format!(
            "mapping {mu} must be defined exactly on the distinguished variables"
        )));
    }
    let fixed: BTreeMap<Var, Term> = mu
        .iter()
        .map(|(v, a)| (v.clone(), Term::Iri(a.clone())))
        .collect();
    Ok(find_extension(&source.graph, graph, &fixed).map(|h| {
        h.into_iter()
            .map(|(v, t)| {
                let iri: Iri = t.as_iri().expect("RDF graphs contain only IRIs").clone();
                (v, iri)
            })
            .collect()
    }))
}

fn image(graph: &TGraph, h: &Homomorphism) -> TGraph {
    graph.map_vars(|v| h.get(v).cloned().unwrap_or_else(|| Term::Var(v.clone())))
}

/// The core of a generalised t-graph: repeatedly retract onto a proper
/// subgraph while a retraction fixing the distinguished set exists.
pub fn core(g: &GeneralizedTGraph) -> GeneralizedTGraph {
    let fixed = identity_on(&g.dist);
    let mut current = g.graph.clone();
    'shrink: loop {
        let triples: Vec<TriplePattern> = current.iter().cloned().collect();
        for t in &triples {
            // Triples whose variables are all fixed map to themselves.
            if t.vars().all(|v| g.dist.contains(v)) {
                continue;
            }
            let smaller = current.without(t);
            if let Some(h) = find_extension(&current, &smaller, &fixed) {
                current = image(&current, &h);
                continue 'shrink;
            }
        }
        break;
    }
    GeneralizedTGraph::declared(current, g.dist.clone())
}

/// True iff no proper subgraph admits a retraction.
pub fn is_core(g: &GeneralizedTGraph) -> bool {
    core(g).graph.len() == g.graph.len()
}

/// Gaifman graph over the non-distinguished variables: two variables are
/// adjacent iff they occur together in some triple.
pub fn gaifman(g: &GeneralizedTGraph) -> UndirectedGraph<Var> {
    let mut out = UndirectedGraph::new();
    for t in &g.graph {
        let vs: Vec<&Var> = t.vars().filter(|v| !g.dist.contains(*v)).collect();
        for v in &vs {
            out.add_vertex((*v).clone());
        }
        for a in &vs {
            for b in &vs {
                if a != b {
                    out.add_edge((*a).clone(), (*b).clone());
                }
            }
        }
    }
    out
}

/// Treewidth of the Gaifman graph of the core.
pub fn core_treewidth(g: &GeneralizedTGraph) -> Result<usize> {
    treewidth(&gaifman(&core(g)))
}
