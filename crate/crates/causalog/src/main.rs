//! Command-line front end for batch use and CI.
//!
//! Exit codes: 0 success, 1 parse or validation error, 2 budget or
//! choice-space exhaustion, 3 checked structure is not a model, 4 the
//! two readings disagree.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::json;

use causalog::grounder::{eliminate_new, flatten, ground_theory, GroundRule, RuleHead};
use causalog::process::{
    compare_readings, enumerate_processes, process_tree_dot, simulate,
    trace_to_json, trace_to_text, DiffError, ProcessError, SeededChooser,
};
use causalog::structures::{
    canonical_string, load_model, load_structure, structure_to_json, Structure,
};
use causalog::wf::{check_model, enumerate_models, Budget, CheckOutcome};
use causalog::{parse_theory, print_theory, Theory};

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_NOT_MODEL: u8 = 3;
const EXIT_DISAGREE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "causalog",
    version,
    about = "Interpreter for causal-logic theories over finite domains"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate every model of the theory extending the input structure.
    Models {
        theory: PathBuf,
        structure: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Print the ground rules of the undecided theory to stderr.
        #[arg(long)]
        dump_ground: bool,
    },
    /// Simulate one run step by step; enumerate the run tree with
    /// `--format dot`.
    Trace {
        theory: PathBuf,
        structure: PathBuf,
        /// Choice seed; drawn and printed when omitted.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Decide whether a structure is a model of the theory.
    Check {
        theory: PathBuf,
        model: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Parse and reprint a theory, optionally rewriting object creation
    /// into selection over a reservoir.
    Transform {
        theory: PathBuf,
        #[arg(long)]
        eliminate_new: bool,
    },
    /// Compare run-reachable final states against the worlds of the
    /// causal part of the theory.
    Diff {
        theory: PathBuf,
        structure: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
struct BudgetArgs {
    /// Creation instances allowed to fire along one search branch.
    #[arg(long)]
    max_new: Option<u32>,
    /// Domain size ceiling, counting created elements.
    #[arg(long)]
    max_elements: Option<usize>,
    /// Simulation steps before a run is abandoned.
    #[arg(long)]
    max_steps: Option<u32>,
    /// Undecided choice points allowed in one assignment sweep.
    #[arg(long)]
    max_branched: Option<usize>,
    /// Assignments allowed in one sweep.
    #[arg(long)]
    max_assignments: Option<u64>,
    /// Worker threads; output is identical regardless.
    #[arg(long)]
    jobs: Option<usize>,
}

impl BudgetArgs {
    fn to_budget(&self) -> Budget {
        let d = Budget::default();
        Budget {
            max_new: self.max_new.unwrap_or(d.max_new),
            max_elements: self.max_elements.unwrap_or(d.max_elements),
            max_steps: self.max_steps.unwrap_or(d.max_steps),
            max_branched: self.max_branched.unwrap_or(d.max_branched),
            max_assignments: self.max_assignments.unwrap_or(d.max_assignments),
            jobs: self.jobs,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}

fn run(cli: Cli) -> u8 {
    match cli.cmd {
        Cmd::Models { theory, structure, budget, format, dump_ground } => {
            cmd_models(&theory, &structure, &budget.to_budget(), format, dump_ground)
        }
        Cmd::Trace { theory, structure, seed, budget, format } => {
            cmd_trace(&theory, &structure, seed, &budget.to_budget(), format)
        }
        Cmd::Check { theory, model, budget } => {
            cmd_check(&theory, &model, &budget.to_budget())
        }
        Cmd::Transform { theory, eliminate_new } => {
            cmd_transform(&theory, eliminate_new)
        }
        Cmd::Diff { theory, structure, budget, format } => {
            cmd_diff(&theory, &structure, &budget.to_budget(), format)
        }
    }
}

/// Reads and parses the theory file, or reports to stderr.
fn read_theory(path: &Path) -> Result<Theory, u8> {
    let source = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_INVALID
    })?;
    parse_theory(&source).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_INVALID
    })
}

fn read_structure(path: &Path, t: &Theory) -> Result<Structure, u8> {
    let source = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_INVALID
    })?;
    load_structure(&source, t).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        EXIT_INVALID
    })
}

fn render_rule(r: &GroundRule) -> String {
    let head = match &r.head {
        RuleHead::Atom(a) => a.to_string(),
        RuleHead::Creation(key) => format!("create@{key}"),
    };
    let mut line = format!("{head} <- {}", r.guard);
    if !r.commitments.is_empty() {
        let resolved: Vec<String> = r
            .commitments
            .iter()
            .map(|(k, res)| format!("{k}: {res}"))
            .collect();
        line.push_str(&format!("  [{}]", resolved.join(", ")));
    }
    line
}

fn cmd_models(
    theory: &Path,
    structure: &Path,
    budget: &Budget,
    format: Format,
    dump_ground: bool,
) -> u8 {
    if format == Format::Dot {
        eprintln!("error: --format dot applies to trace only");
        return EXIT_INVALID;
    }
    let t = match read_theory(theory) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let s = match read_structure(structure, &t) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if dump_ground {
        let tree = ground_theory(&t, &s, &Default::default());
        for rule in flatten(&tree) {
            eprintln!("{}", render_rule(&rule));
        }
    }
    let set = match enumerate_models(&t, &s, budget) {
        Ok(set) => set,
        Err(e) => {
            eprintln!("error: {e}");
            if format == Format::Json {
                println!("{}", json!({ "models": [], "count": 0, "budget_hit": true }));
            }
            return EXIT_BUDGET;
        }
    };
    match format {
        Format::Json => {
            let out = json!({
                "models": set.models.iter().map(structure_to_json).collect::<Vec<_>>(),
                "count": set.models.len(),
                "budget_hit": set.budget_hit,
            });
            println!("{out}");
        }
        Format::Text => {
            for m in &set.models {
                println!("{}", canonical_string(m));
            }
            println!("{} models", set.models.len());
            if set.budget_hit {
                println!("budget hit: the list may be incomplete");
            }
        }
        Format::Dot => unreachable!(),
    }
    if set.budget_hit {
        EXIT_BUDGET
    } else {
        EXIT_OK
    }
}

fn cmd_trace(
    theory: &Path,
    structure: &Path,
    seed: Option<u64>,
    budget: &Budget,
    format: Format,
) -> u8 {
    let t = match read_theory(theory) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let s = match read_structure(structure, &t) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if format == Format::Dot {
        return match enumerate_processes(&t, &s, budget) {
            Ok(space) => {
                print!("{}", process_tree_dot(&space));
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_BUDGET
            }
        };
    }
    let seed = seed.unwrap_or_else(|| rand::thread_rng().gen());
    let mut chooser = SeededChooser::new(seed);
    match simulate(&t, &s, &mut chooser, budget) {
        Ok(mut trace) => {
            trace.seed = Some(seed);
            match format {
                Format::Text => print!("{}", trace_to_text(&trace)),
                Format::Json => println!("{}", trace_to_json(&trace)),
                Format::Dot => unreachable!(),
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_BUDGET
        }
    }
}

fn cmd_check(theory: &Path, model: &Path, budget: &Budget) -> u8 {
    let t = match read_theory(theory) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let source = match fs::read_to_string(model) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", model.display());
            return EXIT_INVALID;
        }
    };
    let m = match load_model(&source, &t) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {}: {e}", model.display());
            return EXIT_INVALID;
        }
    };
    match check_model(&t, &m, budget) {
        Ok(CheckOutcome::Model) => {
            println!("model");
            EXIT_OK
        }
        Ok(CheckOutcome::NotModel(reason)) => {
            println!("not a model: {reason}");
            EXIT_NOT_MODEL
        }
        Ok(CheckOutcome::Inconclusive(reason)) => {
            eprintln!("error: {reason}");
            EXIT_BUDGET
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_BUDGET
        }
    }
}

fn cmd_transform(theory: &Path, run_elimination: bool) -> u8 {
    let t = match read_theory(theory) {
        Ok(t) => t,
        Err(code) => return code,
    };
    if run_elimination {
        let elim = eliminate_new(&t);
        println!(
            "// reservoir: {}; markers: {}",
            elim.reservoir,
            elim.markers.join(", ")
        );
        print!("{}", print_theory(&elim.theory));
    } else {
        print!("{}", print_theory(&t));
    }
    EXIT_OK
}

fn cmd_diff(theory: &Path, structure: &Path, budget: &Budget, format: Format) -> u8 {
    if format == Format::Dot {
        eprintln!("error: --format dot applies to trace only");
        return EXIT_INVALID;
    }
    let t = match read_theory(theory) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let s = match read_structure(structure, &t) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let report = match compare_readings(&t, &s, budget) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                DiffError::Runs(ProcessError::StepLimit(_))
                | DiffError::Runs(ProcessError::ElementLimit(_))
                | DiffError::Runs(ProcessError::RunLimit(_))
                | DiffError::Worlds(_) => EXIT_BUDGET,
            };
        }
    };
    match format {
        Format::Json => {
            let out = json!({
                "agree": report.agree,
                "only_runs": report.only_runs.iter().map(structure_to_json).collect::<Vec<_>>(),
                "only_worlds": report.only_worlds.iter().map(structure_to_json).collect::<Vec<_>>(),
                "budget_hit": report.budget_hit,
            });
            println!("{out}");
        }
        Format::Text => {
            if report.agree {
                println!("readings agree");
            } else {
                println!("readings disagree");
                for m in &report.only_runs {
                    println!("  only a run reaches: {}", canonical_string(m));
                }
                for m in &report.only_worlds {
                    println!("  only a world: {}", canonical_string(m));
                }
            }
            if report.budget_hit {
                println!("budget hit: the comparison may be incomplete");
            }
        }
        Format::Dot => unreachable!(),
    }
    if report.agree {
        EXIT_OK
    } else {
        EXIT_DISAGREE
    }
}
