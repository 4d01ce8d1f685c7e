//! Seeded cross-checks between the evaluation engines, usable from the
//! command line. Every case draws from its own generator, so results do
//! not depend on how cases are split across threads.

use std::thread;

use rand::Rng;

use crate::error::Result;
use crate::eval::{enumerate_solutions, eval_forest, eval_naive, eval_pebble};
use crate::gen::{self, Shape};
use crate::hom::{core_treewidth, maps_into_graph};
use crate::model::{Mapping, TGraph};
use crate::pattern::GraphPattern;
use crate::pebble::pebble_wins;
use crate::tree::{wdpf, WdPF};
use crate::width::{branch_treewidth, DominationAnalysis};

/// Outcome of one property over all its cases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub cases: usize,
    pub failure: Option<String>,
}

type Check = fn(u64) -> Result<Option<String>>;

const PROPERTIES: [(&str, Check); 6] = [
    ("naive, tree and enumeration answers agree", answers_agree),
    ("normal form preserves answers", normal_form_preserves),
    (
        "relaxed evaluation never accepts a non-answer",
        pebble_sound,
    ),
    (
        "relaxed evaluation is exact at the domination width",
        pebble_complete,
    ),
    (
        "pebble game agrees with homomorphisms at low core treewidth",
        pebble_exact_low_width,
    ),
    (
        "domination width equals branch treewidth without UNION",
        dw_equals_bw,
    ),
];

pub fn property_names() -> Vec<&'static str> {
    PROPERTIES.iter().map(|(n, _)| *n).collect()
}

fn shape() -> Shape {
    Shape {
        max_triples: 7,
        max_nodes: 4,
        max_trees: 2,
        vars: 5,
        iris: 3,
        predicates: 2,
    }
}

fn case_seed(seed: u64, property: usize, case: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((property as u64) << 48) ^ case as u64
}

fn instance(r: &mut impl Rng) -> Result<(GraphPattern, WdPF, TGraph)> {
    let s = shape();
    let p = gen::random_wd_pattern(r, &s);
    let f = wdpf(&p)?;
    let triples = r.gen_range(0..=8);
    let g = gen::random_rdf_graph(r, &s, triples);
    Ok((p, f, g))
}

fn probes(
    r: &mut impl Rng,
    f: &WdPF,
    g: &TGraph,
    answers: impl IntoIterator<Item = Mapping>,
) -> Vec<Mapping> {
    let mut out: Vec<Mapping> = answers.into_iter().collect();
    let subtrees = f.subtrees();
    for _ in 0..3 {
        let sub = &subtrees[r.gen_range(0..subtrees.len())];
        out.push(gen::random_mapping(r, &f.subtree_vars(sub), g));
    }
    out
}

fn answers_agree(seed: u64) -> Result<Option<String>> {
    let mut r = gen::rng(seed);
    let (p, f, g) = instance(&mut r)?;
    let naive = eval_naive(&p, &g);
    if enumerate_solutions(&f, &g)? != naive {
        return Ok(Some(format!("answer sets differ for {p}")));
    }
    for mu in probes(&mut r, &f, &g, naive.iter().cloned()) {
        if eval_forest(&f, &g, &mu)? != naive.contains(&mu) {
            return Ok(Some(format!("membership of {mu} differs for {p}")));
        }
    }
    Ok(None)
}

fn normal_form_preserves(seed: u64) -> Result<Option<String>> {
    let mut r = gen::rng(seed);
    let t = gen::random_tree(&mut r, &shape(), 6);
    let triples = r.gen_range(0..=8);
    let g = gen::random_rdf_graph(&mut r, &shape(), triples);
    let before = t.to_pattern();
    let after = t.nr_normalize().to_pattern();
    Ok((eval_naive(&before, &g) != eval_naive(&after, &g))
        .then(|| format!("{before} and {after} differ")))
}

fn pebble_sound(seed: u64) -> Result<Option<String>> {
    let mut r = gen::rng(seed);
    let (p, f, g) = instance(&mut r)?;
    let answers = enumerate_solutions(&f, &g)?;
    for mu in probes(&mut r, &f, &g, []) {
        for k in 1..=3 {
            if !answers.contains(&mu) && eval_pebble(&f, &g, &mu, k)? {
                return Ok(Some(format!("accepted {mu} at k={k} for {p}")));
            }
        }
    }
    Ok(None)
}

fn pebble_complete(seed: u64) -> Result<Option<String>> {
    let mut r = gen::rng(seed);
    let (p, f, g) = instance(&mut r)?;
    let Ok(mut analysis) = DominationAnalysis::new(&f) else {
        return Ok(None);
    };
    let dw = analysis.domination_width();
    let answers = enumerate_solutions(&f, &g)?;
    for mu in probes(&mut r, &f, &g, answers.iter().cloned()) {
        if eval_pebble(&f, &g, &mu, dw)? != answers.contains(&mu) {
            return Ok(Some(format!("wrong verdict on {mu} at k=dw={dw} for {p}")));
        }
    }
    Ok(None)
}

fn pebble_exact_low_width(seed: u64) -> Result<Option<String>> {
    let mut r = gen::rng(seed);
    let s = shape();
    let triples = r.gen_range(1..=5);
    let dist = r.gen_range(0..=2);
    let source = gen::random_gtg(&mut r, &s, triples, dist);
    let size = r.gen_range(1..=8);
    let g = gen::random_rdf_graph(&mut r, &s, size);
    let mu = gen::random_mapping(&mut r, &source.dist, &g);
    let ctw = core_treewidth(&source)?;
    let hom = maps_into_graph(&source, &g, &mu)?.is_some();
    for k in (ctw + 1).max(2)..=3 {
        if pebble_wins(&source, &g, &mu, k)? != hom {
            return Ok(Some(format!(
                "k={k}, ctw={ctw}: game and homomorphism disagree"
            )));
        }
    }
    Ok(None)
}

fn dw_equals_bw(seed: u64) -> Result<Option<String>> {
    let mut r = gen::rng(seed);
    let t = gen::random_tree(&mut r, &shape(), 6).nr_normalize();
    let bw = branch_treewidth(&t)?;
    let f = WdPF::new(vec![t])?;
    let dw = DominationAnalysis::new(&f)?.domination_width();
    Ok((dw != bw).then(|| format!("dw={dw}, bw={bw} for {}", f.to_pattern())))
}

/// Runs every property on `cases` seeded cases using up to `jobs`
/// threads. Library errors count as failures.
pub fn run(seed: u64, cases: usize, jobs: usize) -> Vec<PropertyResult> {
    PROPERTIES
        .iter()
        .enumerate()
        .map(|(idx, (name, check))| {
            let jobs = jobs.clamp(1, cases.max(1));
            let failures: Vec<Option<(usize, String)>> = thread::scope(|scope| {
                let handles: Vec<_> = (0..jobs)
                    .map(|j| {
                        scope.spawn(move || {
                            (j..cases).step_by(jobs).find_map(|case| {
                                let outcome = check(case_seed(seed, idx, case));
                                match outcome {
                                    Ok(None) => None,
                                    Ok(Some(why)) => Some((case, why)),
                                    Err(e) => Some((case, format!("{}: {e}", e.kind()))),
                                }
                            })
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("selftest worker panicked"))
                    .collect()
            });
            // Report the lowest failing case so output does not depend on `jobs`.
            let failure = failures
                .into_iter()
                .flatten()
                .min_by_key(|(case, _)| *case)
                .map(|(case, why)| format!("case {case}: {why}"));
            PropertyResult {
                name,
                cases,
                failure,
            }
        })
        .collect()
}

/// `TAP version 13` output for a run.
pub fn to_tap(results: &[PropertyResult]) -> String {
    let mut out = format!("TAP version 13\n1..{}\n", results.len());
    for (i, r) in results.iter().enumerate() {
        match &r.failure {
            None => out.push_str(&format!("ok {} - {} ({} cases)\n", i + 1, r.name, r.cases)),
            Some(why) => out.push_str(&format!("not ok {} - {} # {why}\n", i + 1, r.name)),
        }
    }
    out
}

/// A seeded instance of domination width 1 with at least one answer:
/// the pattern, the graph, and one answer mapping.
pub fn low_width_fixture(seed: u64) -> Result<(GraphPattern, TGraph, Mapping)> {
    let mut r = gen::rng(seed);
    loop {
        let (p, f, g) = instance(&mut r)?;
        if f.len() < 2 || f.trees().iter().all(|t| t.len() < 2) {
            continue;
        }
        let Ok(mut analysis) = DominationAnalysis::new(&f) else {
            continue;
        };
        if analysis.domination_width() != 1 {
            continue;
        }
        let answers = enumerate_solutions(&f, &g)?;
        // Take the answer binding the most variables.
        if let Some(mu) = answers.iter().max_by_key(|m| m.len()) {
            return Ok((p, g, mu.clone()));
        }
    }
}
