//! Evaluation and width analysis for well-designed SPARQL graph patterns.

pub mod error;
pub mod eval;
pub mod gen;
pub mod graph;
pub mod hardness;
pub mod hom;
pub mod model;
pub mod pattern;
pub mod pebble;
pub mod selftest;
pub mod tree;
pub mod width;

pub use error::{Error, Result};
pub use eval::{
    enumerate_solutions, eval_forest, eval_naive, eval_pebble, eval_tree_lemma1, SolutionSet,
};
pub use graph::{treewidth, TreeDecomposition, UndirectedGraph};
pub use hardness::{
    build_b, find_grid_minor, freeze, gen_instance, has_clique, verify_minor_map, CliqueInstance,
    MinorMap,
};
pub use hom::{
    core, core_treewidth, find_homomorphism, gaifman, is_homomorphic, GeneralizedTGraph,
};
pub use model::{Iri, Mapping, RdfGraph, TGraph, Term, TriplePattern, Var};
pub use pattern::{GraphPattern, Op, Violation};
pub use pebble::{consistency_family, pebble_wins};
pub use tree::{wdpf, ChildrenAssignment, Subtree, WdPF, WdPT};
pub use width::{
    branch_treewidth, domination_width, find_hard_witness, is_k_dominated,
    local_tractability_width, HardWitness,
};
