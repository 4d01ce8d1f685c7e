//! Brute-force oracles and shared fixtures for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use wdeval_core::graph::UndirectedGraph;
use wdeval_core::model::{Iri, Mapping, TGraph, Term, TriplePattern, Var};
use wdeval_core::tree::{tree_from_rows, WdPF, WdPT};
use wdeval_core::GeneralizedTGraph;

pub const P1: &str = "(((?x,p,?y) OPT (?z,q,?x)) OPT ((?y,r,?o1) AND (?o1,r,?o2)))";
pub const P2: &str = "(((?x,p,?y) OPT (?z,q,?x)) OPT ((?y,r,?z) AND (?z,r,?o2)))";

pub fn example_two_pattern() -> String {
    format!("({P1} UNION ((?x,p,?y) OPT ((?z,q,?x) AND (?w,q,?z))))")
}

pub fn var(name: &str) -> Var {
    Var::new(name).unwrap()
}

pub fn vars(names: &[&str]) -> BTreeSet<Var> {
    names.iter().map(|n| var(n)).collect()
}

pub fn tgraph(text: &str) -> TGraph {
    TGraph::parse(&text.replace(';', "\n")).unwrap()
}

pub fn gtg(text: &str, dist: &[&str]) -> GeneralizedTGraph {
    GeneralizedTGraph::new(tgraph(text), vars(dist)).unwrap()
}

/// `?o1 r ?o2 ; ...` for every pair `i < j <= k`.
pub fn clique(k: usize) -> String {
    let mut parts = Vec::new();
    for i in 1..=k {
        for j in i + 1..=k {
            parts.push(format!("?o{i} r ?o{j}"));
        }
    }
    parts.join(" ; ")
}

/// The t-graph whose core is itself with a `K_k` Gaifman graph.
pub fn clique_gtg(k: usize) -> GeneralizedTGraph {
    gtg(
        &format!("?z q ?x ; ?x p ?y ; ?y r ?o1 ; {}", clique(k)),
        &["x", "y", "z"],
    )
}

/// The clique t-graph plus a looped neighbour of `?y`, which swallows it.
pub fn collapsing_clique_gtg(k: usize) -> GeneralizedTGraph {
    gtg(
        &format!(
            "?z q ?x ; ?x p ?y ; ?y r ?o1 ; {} ; ?y r ?o ; ?o r ?o",
            clique(k)
        ),
        &["x", "y", "z"],
    )
}

/// Root `{(?y,r,?y)}` with one child `{(?y,r,?o1)} ∪ K_k`.
pub fn loop_tree(k: usize) -> WdPT {
    tree_from_rows(&[
        (None, "?y r ?y"),
        (Some(0), &format!("?y r ?o1 ; {}", clique(k))),
    ])
    .unwrap()
}

pub fn loop_pattern(k: usize) -> String {
    loop_tree(k).to_pattern().to_string()
}

/// Two trees sharing the root `{(?x,p,?y)}`; the first has children
/// `{(?z,q,?x)}` and `{(?y,r,?o1)} ∪ K_k`, the second `{(?z,q,?x),(?w,q,?z)}`.
pub fn two_tree_forest(k: usize) -> WdPF {
    let t1 = tree_from_rows(&[
        (None, "?x p ?y"),
        (Some(0), "?z q ?x"),
        (Some(0), &format!("?y r ?o1 ; {}", clique(k))),
    ])
    .unwrap();
    let t2 = tree_from_rows(&[(None, "?x p ?y"), (Some(0), "?z q ?x ; ?w q ?z")]).unwrap();
    WdPF::new(vec![t1, t2]).unwrap()
}

/// Every map from the free variables of `from` into the terms of `to`
/// (variables and IRIs), distinguished variables fixed.
pub fn brute_hom(from: &GeneralizedTGraph, to: &GeneralizedTGraph) -> bool {
    if from.dist != to.dist {
        return false;
    }
    let mut targets: Vec<Term> = to.graph.vars().into_iter().map(Term::Var).collect();
    targets.extend(to.graph.iris().into_iter().map(Term::Iri));
    let free: Vec<Var> = from.free_vars().into_iter().collect();
    let mut assignment: BTreeMap<Var, Term> = from
        .dist
        .iter()
        .map(|v| (v.clone(), Term::Var(v.clone())))
        .collect();
    search(&free, 0, &targets, &mut assignment, &|h| {
        from.graph
            .iter()
            .all(|t| to.graph.contains(&t.map_vars(|v| h[v].clone())))
    })
}

/// Every map from the free variables into the IRIs of `graph`, with `mu`
/// on the distinguished ones.
pub fn brute_maps_into(source: &GeneralizedTGraph, graph: &TGraph, mu: &Mapping) -> bool {
    let targets: Vec<Term> = graph.iris().into_iter().map(Term::Iri).collect();
    let free: Vec<Var> = source.free_vars().into_iter().collect();
    let mut assignment: BTreeMap<Var, Term> = mu
        .iter()
        .map(|(v, a)| (v.clone(), Term::Iri(a.clone())))
        .collect();
    search(&free, 0, &targets, &mut assignment, &|h| {
        source
            .graph
            .iter()
            .all(|t| graph.contains(&t.map_vars(|v| h[v].clone())))
    })
}

fn search(
    free: &[Var],
    idx: usize,
    targets: &[Term],
    assignment: &mut BTreeMap<Var, Term>,
    accept: &dyn Fn(&BTreeMap<Var, Term>) -> bool,
) -> bool {
    if idx == free.len() {
        return accept(assignment);
    }
    for t in targets {
        assignment.insert(free[idx].clone(), t.clone());
        if search(free, idx + 1, targets, assignment, accept) {
            return true;
        }
    }
    assignment.remove(&free[idx]);
    false
}

/// The existential k-pebble game played literally: a position records
/// where each of the k pebbles lies (or that it is off the board) and
/// which IRI the Duplicator answered. Spoiler moves one pebble to any
/// free variable; the Duplicator must keep the pebbled part a partial
/// homomorphism extending `mu`. Winning positions are the greatest set
/// closed under Duplicator replies.
pub fn brute_pebble(source: &GeneralizedTGraph, graph: &TGraph, mu: &Mapping, k: usize) -> bool {
    let free: Vec<Var> = source.free_vars().into_iter().collect();
    let dom: Vec<Iri> = graph.iris().into_iter().collect();
    let slots = free.len() * dom.len() + 1;
    let encode = |pos: &[usize]| pos.iter().fold(0usize, |acc, &s| acc * slots + s);
    let decode = |mut code: usize| {
        let mut pos = vec![0usize; k];
        for i in (0..k).rev() {
            pos[i] = code % slots;
            code /= slots;
        }
        pos
    };
    // slot 0 = off the board, otherwise 1 + var * |dom| + value.
    let consistent = |pos: &[usize]| -> bool {
        let mut h: HashMap<&Var, &Iri> = HashMap::new();
        for &s in pos {
            if s == 0 {
                continue;
            }
            let (v, a) = (&free[(s - 1) / dom.len()], &dom[(s - 1) % dom.len()]);
            if let Some(prev) = h.insert(v, a) {
                if prev != a {
                    return false;
                }
            }
        }
        source.graph.iter().all(|t| {
            let mut ok = true;
            let image = t.map_vars(|v| match mu.get(v).or_else(|| h.get(v).copied()) {
                Some(a) => Term::Iri(a.clone()),
                None => {
                    ok = false;
                    Term::Var(v.clone())
                }
            });
            !ok || graph.contains(&image)
        })
    };
    if !consistent(&vec![0; k]) {
        return false;
    }
    if free.is_empty() {
        return true;
    }
    if dom.is_empty() {
        return false;
    }
    let total = slots.pow(k as u32);
    let mut winning: Vec<bool> = (0..total).map(|c| consistent(&decode(c))).collect();
    loop {
        let mut changed = false;
        for code in 0..total {
            if !winning[code] {
                continue;
            }
            let pos = decode(code);
            let spoiler_wins = (0..k).any(|i| {
                (0..free.len()).any(|v| {
                    (0..dom.len()).all(|a| {
                        let mut next = pos.clone();
                        next[i] = 1 + v * dom.len() + a;
                        !winning[encode(&next)]
                    })
                })
            });
            if spoiler_wins {
                winning[code] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    winning[0]
}

/// Exact treewidth by trying every elimination order.
pub fn brute_treewidth<V: Ord + Clone>(g: &UndirectedGraph<V>) -> usize {
    let verts: Vec<V> = g.vertices().iter().cloned().collect();
    let n = verts.len();
    if g.edge_count() == 0 {
        return 1;
    }
    let mut adj = vec![vec![false; n]; n];
    for (a, b) in g.edges() {
        let i = verts.iter().position(|v| v == a).unwrap();
        let j = verts.iter().position(|v| v == b).unwrap();
        adj[i][j] = true;
        adj[j][i] = true;
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = usize::MAX;
    permute(&mut order, 0, &mut |ord| {
        let mut a = adj.clone();
        let mut gone = vec![false; n];
        let mut width = 0;
        for &v in ord {
            let nb: Vec<usize> = (0..n).filter(|&u| !gone[u] && a[v][u]).collect();
            width = width.max(nb.len());
            for &x in &nb {
                for &y in &nb {
                    if x != y {
                        a[x][y] = true;
                    }
                }
            }
            gone[v] = true;
        }
        best = best.min(width);
    });
    best.max(1)
}

fn permute(order: &mut Vec<usize>, idx: usize, f: &mut dyn FnMut(&[usize])) {
    if idx == order.len() {
        f(order);
        return;
    }
    for i in idx..order.len() {
        order.swap(idx, i);
        permute(order, idx + 1, f);
        order.swap(idx, i);
    }
}

/// All simple graphs on vertices `h0..h{n-1}`.
pub fn all_graphs(n: usize) -> Vec<UndirectedGraph<String>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    (0..1u32 << pairs.len())
        .map(|mask| {
            let mut g = UndirectedGraph::new();
            for v in 0..n {
                g.add_vertex(format!("h{v}"));
            }
            for (bit, (a, b)) in pairs.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    g.add_edge(format!("h{a}"), format!("h{b}"));
                }
            }
            g
        })
        .collect()
}

pub fn to_string_graph(g: &UndirectedGraph<usize>) -> UndirectedGraph<String> {
    g.map_vertices(|v| format!("h{v}"))
}

/// Renames every variable by appending `suffix`.
pub fn rename(t: &TriplePattern, suffix: &str) -> TriplePattern {
    t.map_vars(|v| Term::Var(var(&format!("{}{suffix}", v.name()))))
}
