//! Causal-logic theories over finite domains: parsing, possible-world
//! model enumeration, process simulation, and object-creation elimination.
//!
//! A theory file declares a vocabulary and a set of statements. Effect
//! expressions describe what is caused (conditionally, for all instances,
//! for a nondeterministically chosen instance, or for a newly created
//! object); first-order sentences constrain which candidate worlds count.
//! The engine enumerates every model of the theory that extends a given
//! exogenous input structure, simulates single executions step by step,
//! and rewrites object creation into selection over a reservoir.

pub mod ast;
pub mod eval;
pub mod grounder;
pub mod parser;
pub mod process;
pub mod wf;
pub mod structures;

pub use ast::{print_theory, Cee, Formula, Term, Theory, Vocabulary};
pub use eval::{eval2, eval3, Env, Tri};
pub use parser::{parse_theory, ParseError};
pub use process::{
    compare_readings, enumerate_processes, process_tree_dot, simulate,
    trace_to_json, trace_to_text, Chooser, DiffError, DiffReport, ProcessError,
    ProcessSpace, SeededChooser, Trace,
};
pub use wf::{check_model, enumerate_models, well_founded, Budget, CheckOutcome, EnumError, ModelSet};
pub use structures::{
    canonical_string, default_extension, equal_modulo_created, load_model,
    load_structure, structure_to_json, DomainAtom, DomainElement, PartialStructure,
    Structure,
};
