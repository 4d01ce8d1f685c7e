use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wdeval_core::eval::{enumerate_solutions, eval_forest, eval_naive, eval_pebble};
use wdeval_core::hardness::{
    gen_instance, parse_undirected_graph, parse_var_minor_map, CliqueInstance,
};
use wdeval_core::hom::GeneralizedTGraph;
use wdeval_core::model::{parse_var_list, Mapping, TGraph};
use wdeval_core::pebble::pebble_wins;
use wdeval_core::tree::wdpf;
use wdeval_core::width::{
    domination_width_report, forest_branch_treewidth_report, local_tractability_width_report,
};
use wdeval_core::{selftest, GraphPattern};

#[derive(Parser)]
#[command(
    name = "wdeval",
    version,
    about = "Evaluate and analyse well-designed SPARQL graph patterns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a pattern is well-designed (exit 2 if not).
    CheckWd {
        #[arg(long)]
        pattern: PathBuf,
    },
    /// Print the pattern-tree forest of a well-designed pattern.
    ToForest {
        #[arg(long)]
        pattern: PathBuf,
    },
    /// Decide whether a mapping is an answer (exit 0) or not (exit 2).
    ///
    /// With `--mode pebble:K` a rejection is always correct, but an
    /// acceptance is only guaranteed when the pattern's domination width
    /// is at most K. `--check-width` computes the width and warns when K
    /// is too small.
    Eval {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        /// naive, lemma1 or pebble:K
        #[arg(long, default_value = "lemma1")]
        mode: EvalMode,
        #[arg(long)]
        check_width: bool,
    },
    /// Print every answer, one mapping per line.
    EvalAll {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = ListMode::Lemma1)]
        mode: ListMode,
    },
    /// Print a width measure of a well-designed pattern.
    Width {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long, value_enum)]
        measure: Measure,
        /// Add the per-subtree or per-node breakdown.
        #[arg(long)]
        report: bool,
    },
    /// Play the existential k-pebble game (exit 0 if the Duplicator wins).
    Pebble {
        #[arg(long)]
        tgraph: PathBuf,
        /// Distinguished variables, e.g. `?x,?y`.
        #[arg(long, conflicts_with = "dist_file")]
        dist: Option<String>,
        /// File listing the distinguished variables, one per line.
        #[arg(long)]
        dist_file: Option<PathBuf>,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Encode a clique question into an evaluation instance of the pattern.
    GenHard {
        #[arg(long)]
        pattern: PathBuf,
        /// Undirected graph: `vertex a` and `edge a b` lines.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: usize,
        /// Grid minor map: `cell i j : ?a ?b` lines.
        #[arg(long)]
        minor_map: Option<PathBuf>,
        #[arg(long)]
        out_graph: PathBuf,
        #[arg(long)]
        out_mapping: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run the seeded cross-checks between engines and print TAP lines.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Also write a domination-width-1 instance (pattern.sparql,
        /// graph.nt, mapping.map) to this directory.
        #[arg(long)]
        emit_fixture: Option<PathBuf>,
    },
}

#[derive(Clone, Copy)]
enum EvalMode {
    Naive,
    Lemma1,
    Pebble(usize),
}

impl std::str::FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "naive" => Ok(EvalMode::Naive),
            "lemma1" => Ok(EvalMode::Lemma1),
            _ => s
                .strip_prefix("pebble:")
                .and_then(|k| k.parse().ok())
                .map(EvalMode::Pebble)
                .ok_or_else(|| format!("unknown mode `{s}` (expected naive, lemma1 or pebble:K)")),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ListMode {
    Naive,
    Lemma1,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    Dw,
    Bw,
    Local,
}

enum Failure {
    Core(wdeval_core::Error),
    Io(PathBuf, std::io::Error),
    Usage(String),
}

impl Failure {
    fn kind(&self) -> &'static str {
        match self {
            Failure::Core(e) => e.kind(),
            Failure::Io(..) => "IoError",
            Failure::Usage(_) => "UsageError",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(path, e) => write!(f, "{}: {e}", path.display()),
            Failure::Usage(m) => f.write_str(m),
        }
    }
}

impl From<wdeval_core::Error> for Failure {
    fn from(e: wdeval_core::Error) -> Self {
        Failure::Core(e)
    }
}

/// Decision outcome of a successful run.
enum Verdict {
    Yes,
    No,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn decide(yes: bool) -> Verdict {
    if yes {
        Verdict::Yes
    } else {
        Verdict::No
    }
}

fn print_verdict(yes: bool) -> Verdict {
    println!("{yes}");
    decide(yes)
}

fn run(command: Command) -> Result<Verdict, Failure> {
    match command {
        Command::CheckWd { pattern } => {
            let p = GraphPattern::parse(&read(&pattern)?)?;
            match p.well_designed_violation() {
                None => {
                    println!("well-designed");
                    Ok(Verdict::Yes)
                }
                Some(v) => {
                    println!("not well-designed");
                    eprintln!("{v}");
                    Ok(Verdict::No)
                }
            }
        }
        Command::ToForest { pattern } => {
            let p = GraphPattern::parse(&read(&pattern)?)?;
            if let Some(v) = p.well_designed_violation() {
                eprintln!("not well-designed: {v}");
                return Ok(Verdict::No);
            }
            print!("{}", wdpf(&p)?.to_text());
            Ok(Verdict::Yes)
        }
        Command::Eval {
            pattern,
            graph,
            mapping,
            mode,
            check_width,
        } => {
            let p = GraphPattern::parse(&read(&pattern)?)?;
            let g = TGraph::parse_rdf(&read(&graph)?)?;
            let mu = Mapping::parse(&read(&mapping)?)?;
            let member = match mode {
                EvalMode::Naive => eval_naive(&p, &g).contains(&mu),
                EvalMode::Lemma1 => eval_forest(&wdpf(&p)?, &g, &mu)?,
                EvalMode::Pebble(k) => {
                    let f = wdpf(&p)?;
                    if check_width {
                        let dw = domination_width_report(&f)?.value;
                        if k < dw {
                            eprintln!("warning: k = {k} is below the domination width {dw}; an acceptance may be wrong");
                        }
                    }
                    eval_pebble(&f, &g, &mu, k)?
                }
            };
            Ok(print_verdict(member))
        }
        Command::EvalAll {
            pattern,
            graph,
            mode,
        } => {
            let p = GraphPattern::parse(&read(&pattern)?)?;
            let g = TGraph::parse_rdf(&read(&graph)?)?;
            let answers = match mode {
                ListMode::Naive => eval_naive(&p, &g),
                ListMode::Lemma1 => enumerate_solutions(&wdpf(&p)?, &g)?,
            };
            print!("{}", answers.to_text());
            Ok(Verdict::Yes)
        }
        Command::Width {
            pattern,
            measure,
            report,
        } => {
            let f = wdpf(&GraphPattern::parse(&read(&pattern)?)?)?;
            let r = match measure {
                Measure::Dw => domination_width_report(&f)?,
                Measure::Bw => forest_branch_treewidth_report(&f)?,
                Measure::Local => local_tractability_width_report(&f)?,
            };
            println!("{}", r.value);
            if report {
                for e in &r.entries {
                    println!("  {e}");
                }
            }
            Ok(Verdict::Yes)
        }
        Command::Pebble {
            tgraph,
            dist,
            dist_file,
            graph,
            mapping,
            k,
        } => {
            let s = TGraph::parse(&read(&tgraph)?)?;
            let dist = match (dist, dist_file) {
                (Some(list), _) => parse_var_list(&list)?,
                (None, Some(path)) => parse_var_list(&read(&path)?)?,
                (None, None) => Default::default(),
            };
            let source = GeneralizedTGraph::new(s, dist)?;
            let g = TGraph::parse_rdf(&read(&graph)?)?;
            let mu = Mapping::parse(&read(&mapping)?)?;
            let wins = pebble_wins(&source, &g, &mu, k)?;
            println!(
                "{}",
                if wins {
                    "duplicator wins"
                } else {
                    "spoiler wins"
                }
            );
            Ok(decide(wins))
        }
        Command::GenHard {
            pattern,
            graph,
            k,
            minor_map,
            out_graph,
            out_mapping,
            report,
        } => {
            let f = wdpf(&GraphPattern::parse(&read(&pattern)?)?)?;
            let inst = CliqueInstance::new(parse_undirected_graph(&read(&graph)?)?, k)?;
            let gamma = match minor_map {
                Some(path) => Some(parse_var_minor_map(&read(&path)?)?),
                None => None,
            };
            let generated = gen_instance(&f, &inst, gamma.as_ref())?;
            write(&out_graph, &generated.graph.to_text())?;
            write(&out_mapping, &generated.mapping.to_text())?;
            match report {
                Some(path) => write(&path, &generated.report())?,
                None => eprint!("{}", generated.report()),
            }
            Ok(Verdict::Yes)
        }
        Command::Selftest {
            seed,
            cases,
            jobs,
            emit_fixture,
        } => {
            if jobs == 0 {
                return Err(Failure::Usage("--jobs must be at least 1".into()));
            }
            let results = selftest::run(seed, cases, jobs);
            print!("{}", selftest::to_tap(&results));
            if let Some(dir) = emit_fixture {
                let (p, g, mu) = selftest::low_width_fixture(seed)?;
                fs::create_dir_all(&dir).map_err(|e| Failure::Io(dir.clone(), e))?;
                write(&dir.join("pattern.sparql"), &format!("{p}\n"))?;
                write(&dir.join("graph.nt"), &g.to_text())?;
                write(&dir.join("mapping.map"), &mu.to_text())?;
            }
            Ok(decide(results.iter().all(|r| r.failure.is_none())))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("ERROR UsageError: {line}");
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(Verdict::Yes) => ExitCode::SUCCESS,
        Ok(Verdict::No) => ExitCode::from(2),
        Err(f) => {
            eprintln!("ERROR {}: {}", f.kind(), f.to_string().replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
