//! The existential k-pebble game, decided as a k-consistency fixpoint.
//!
//! Positions are partial homomorphisms `f` of at most `k` free variables
//! into the domain of the graph. Starting from all of them, any `f` with a
//! removed restriction, or with fewer than `k` variables and some variable
//! it cannot be extended to, is removed. The Duplicator wins iff the empty
//! function survives.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::hom::GeneralizedTGraph;
use crate::model::{Iri, Mapping, TGraph, Term, Var};

/// Default bound on the number of positions the fixpoint may hold.
pub const DEFAULT_POSITION_CAP: usize = 4_000_000;

/// The surviving positions of the fixpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyFamily {
    pub k: usize,
    pub members: BTreeSet<Mapping>,
}

impl ConsistencyFamily {
    pub fn contains_empty(&self) -> bool {
        self.members.contains(&Mapping::new())
    }
}

type Key = Vec<(u16, u32)>;

struct Game {
    k: usize,
    free: Vec<Var>,
    domain: Vec<Iri>,
    keys: Vec<Key>,
    index: HashMap<Key, u32>,
    alive: Vec<bool>,
    // Per position of size < k: offset into `support`, one slot per variable.
    support_offset: Vec<u32>,
    support: Vec<u32>,
}

const NO_SLOT: u32 = u32::MAX;

/// Slot of a triple position after substituting the mapping.
#[derive(Clone, Copy)]
enum Cell {
    Fixed(u32),
    Free(u16),
    Impossible,
}

struct Compiled {
    free: Vec<Var>,
    domain: Vec<Iri>,
    triples: Vec<[Cell; 3]>,
    free_of_triple: Vec<Vec<u16>>,
    triples_of_var: Vec<Vec<usize>>,
    graph: HashSet<[u32; 3]>,
}

impl Compiled {
    fn new(source: &GeneralizedTGraph, graph: &TGraph, mu: &Mapping) -> Compiled {
        let domain: Vec<Iri> = graph.iris().into_iter().collect();
        let id: HashMap<&Iri, u32> = domain
            .iter()
            .enumerate()
            .map(|(i, a)| (a, i as u32))
            .collect();
        let free: Vec<Var> = source.free_vars().into_iter().collect();
        let var_id: HashMap<&Var, u16> = free
            .iter()
            .enumerate()
            .map(|(i, v)| (v, i as u16))
            .collect();
        let encode = |a: &Iri| id.get(a).map_or(Cell::Impossible, |&i| Cell::Fixed(i));
        let mut triples = Vec::new();
        let mut free_of_triple = Vec::new();
        let mut triples_of_var = vec![Vec::new(); free.len()];
        for t in &source.graph {
            let mut cells = [Cell::Impossible; 3];
            let mut vars: Vec<u16> = Vec::new();
            for (i, term) in t.terms().into_iter().enumerate() {
                cells[i] = match term {
                    Term::Iri(a) => encode(a),
                    Term::Var(v) => match var_id.get(v) {
                        Some(&x) => {
                            if !vars.contains(&x) {
                                vars.push(x);
                            }
                            Cell::Free(x)
                        }
                        None => encode(mu.get(v).expect("domain checked by caller")),
                    },
                };
            }
            for &x in &vars {
                triples_of_var[x as usize].push(triples.len());
            }
            triples.push(cells);
            free_of_triple.push(vars);
        }
        let graph = graph
            .iter()
            .map(|t| {
                let [s, p, o] = t
                    .terms()
                    .map(|term| id[term.as_iri().expect("ground graph")]);
                [s, p, o]
            })
            .collect();
        Compiled {
            free,
            domain,
            triples,
            free_of_triple,
            triples_of_var,
            graph,
        }
    }

    fn holds(&self, triple: usize, key: &Key) -> bool {
        let mut image = [0u32; 3];
        for (i, cell) in self.triples[triple].iter().enumerate() {
            image[i] = match *cell {
                Cell::Fixed(a) => a,
                Cell::Impossible => return false,
                Cell::Free(x) => match key.iter().find(|(y, _)| *y == x) {
                    Some(&(_, a)) => a,
                    None => unreachable!("triple checked only once covered"),
                },
            };
        }
        self.graph.contains(&image)
    }

    /// Whether every triple whose free variables all lie in `key` and
    /// which mentions `added` is satisfied.
    fn extension_ok(&self, key: &Key, added: u16) -> bool {
        self.triples_of_var[added as usize].iter().all(|&t| {
            let covered = self.free_of_triple[t]
                .iter()
                .all(|x| key.iter().any(|(y, _)| y == x));
            !covered || self.holds(t, key)
        })
    }

    fn ground_ok(&self) -> bool {
        let empty = Key::new();
        (0..self.triples.len())
            .filter(|&t| self.free_of_triple[t].is_empty())
            .all(|t| self.holds(t, &empty))
    }
}

fn insert_sorted(key: &Key, x: u16, a: u32) -> Key {
    let mut out = Vec::with_capacity(key.len() + 1);
    let pos = key.partition_point(|(y, _)| *y < x);
    out.extend_from_slice(&key[..pos]);
    out.push((x, a));
    out.extend_from_slice(&key[pos..]);
    out
}

impl Game {
    fn build(c: &Compiled, k: usize, cap: usize) -> Result<Option<Game>> {
        if !c.ground_ok() {
            return Ok(None);
        }
        let n = c.free.len();
        let d = c.domain.len() as u32;
        let mut keys: Vec<Key> = vec![Key::new()];
        let mut index: HashMap<Key, u32> = HashMap::from([(Key::new(), 0)]);
        let mut level_start = 0;
        for size in 1..=k.min(n) {
            let level_end = keys.len();
            for id in level_start..level_end {
                let base = keys[id].clone();
                let first = base.last().map_or(0, |(x, _)| x + 1);
                for x in first..n as u16 {
                    for a in 0..d {
                        let key = insert_sorted(&base, x, a);
                        if c.extension_ok(&key, x) {
                            index.insert(key.clone(), keys.len() as u32);
                            keys.push(key);
                            if keys.len() > cap {
                                return Err(Error::InstanceTooLarge(format!(
                                    "pebble game exceeds {cap} positions ({n} variables, {d} domain values, k = {k})"
                                )));
                            }
                        }
                    }
                }
            }
            level_start = level_end;
            debug_assert!(keys[level_start..].iter().all(|key| key.len() == size));
        }
        let mut support_offset = vec![NO_SLOT; keys.len()];
        let mut support = Vec::new();
        for (id, key) in keys.iter().enumerate() {
            if key.len() < k {
                support_offset[id] = support.len() as u32;
                support.extend(std::iter::repeat_n(0u32, n));
            }
        }
        let alive = vec![true; keys.len()];
        let mut game = Game {
            k,
            free: c.free.clone(),
            domain: c.domain.clone(),
            keys,
            index,
            alive,
            support_offset,
            support,
        };
        // Count one-point extensions.
        for id in 0..game.keys.len() {
            let key = &game.keys[id];
            if key.is_empty() {
                continue;
            }
            for i in 0..key.len() {
                let mut smaller = key.clone();
                let (x, _) = smaller.remove(i);
                let parent = game.index[&smaller] as usize;
                let off = game.support_offset[parent];
                game.support[off as usize + x as usize] += 1;
            }
        }
        Ok(Some(game))
    }

    fn solve(&mut self) {
        let n = self.free.len() as u16;
        let mut queue: Vec<u32> = Vec::new();
        for id in 0..self.keys.len() {
            if self.lacks_support(id, n) {
                self.alive[id] = false;
                queue.push(id as u32);
            }
        }
        while let Some(id) = queue.pop() {
            let key = self.keys[id as usize].clone();
            // Extensions lose a restriction.
            if key.len() < self.k {
                for x in 0..n {
                    if key.iter().any(|(y, _)| *y == x) {
                        continue;
                    }
                    for a in 0..self.domain.len() as u32 {
                        let ext = insert_sorted(&key, x, a);
                        if let Some(&e) = self.index.get(&ext) {
                            if self.alive[e as usize] {
                                self.alive[e as usize] = false;
                                queue.push(e);
                            }
                        }
                    }
                }
            }
            // Restrictions lose a supporting extension.
            for i in 0..key.len() {
                let mut smaller = key.clone();
                let (x, _) = smaller.remove(i);
                let parent = self.index[&smaller] as usize;
                let slot = self.support_offset[parent] as usize + x as usize;
                self.support[slot] -= 1;
                if self.support[slot] == 0 && self.alive[parent] {
                    self.alive[parent] = false;
                    queue.push(parent as u32);
                }
            }
        }
    }

    fn lacks_support(&self, id: usize, n: u16) -> bool {
        let key = &self.keys[id];
        if key.len() >= self.k {
            return false;
        }
        let off = self.support_offset[id] as usize;
        (0..n).any(|x| !key.iter().any(|(y, _)| *y == x) && self.support[off + x as usize] == 0)
    }

    fn empty_survives(&self) -> bool {
        self.alive[0]
    }

    fn members(&self) -> BTreeSet<Mapping> {
        self.keys
            .iter()
            .zip(&self.alive)
            .filter(|(_, alive)| **alive)
            .map(|(key, _)| {
                key.iter()
                    .map(|&(x, a)| {
                        (
                            self.free[x as usize].clone(),
                            self.domain[a as usize].clone(),
                        )
                    })
                    .collect()
            })
            .collect()
    }
}

fn check_inputs(source: &GeneralizedTGraph, mu: &Mapping, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidK {
            k,
            reason: "the pebble game needs at least 2 pebbles".into(),
        });
    }
    if mu.domain() != source.dist {
        return Err(Error::DomainMismatch(format!(
            "mapping {mu} must be defined exactly on the distinguished variables"
        )));
    }
    Ok(())
}

fn solved(
    source: &GeneralizedTGraph,
    graph: &TGraph,
    mu: &Mapping,
    k: usize,
    cap: usize,
) -> Result<Option<Game>> {
    check_inputs(source, mu, k)?;
    let compiled = Compiled::new(source, graph, mu);
    let Some(mut game) = Game::build(&compiled, k, cap)? else {
        return Ok(None);
    };
    game.solve();
    Ok(Some(game))
}

/// Whether the Duplicator wins the existential k-pebble game on
/// `(S, X)` and `graph`, starting from `mu`.
pub fn pebble_wins(
    source: &GeneralizedTGraph,
    graph: &TGraph,
    mu: &Mapping,
    k: usize,
) -> Result<bool> {
    pebble_wins_with_cap(source, graph, mu, k, DEFAULT_POSITION_CAP)
}

pub fn pebble_wins_with_cap(
    source: &GeneralizedTGraph,
    graph: &TGraph,
    mu: &Mapping,
    k: usize,
    cap: usize,
) -> Result<bool> {
    check_inputs(source, mu, k)?;
    if graph.iris().is_empty() && !source.free_vars().is_empty() {
        return Ok(false);
    }
    Ok(solved(source, graph, mu, k, cap)?.is_some_and(|g| g.empty_survives()))
}

/// The fixpoint family itself. Empty when some triple over the
/// distinguished variables alone is not satisfied by `mu`.
pub fn consistency_family(
    source: &GeneralizedTGraph,
    graph: &TGraph,
    mu: &Mapping,
    k: usize,
) -> Result<ConsistencyFamily> {
    let members = solved(source, graph, mu, k, DEFAULT_POSITION_CAP)?
        .map_or_else(BTreeSet::new, |g| g.members());
    Ok(ConsistencyFamily { k, members })
}
