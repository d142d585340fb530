//! Step-by-step execution of a theory's effects.
//!
//! Where model enumeration asks which finished worlds are admissible,
//! simulation plays the effects forward: starting from the input
//! structure, each step collects everything the current state causes,
//! applies it, and repeats until nothing changes. Choices are made on
//! first contact and kept for the rest of the run: an `COR` picks a
//! branch, a `SELECT` waits until some element satisfies its
//! qualification and then picks one, a `NEW` creates its object the
//! moment it is reached. States grow monotonically, so a run either
//! stabilizes or exhausts its step budget. The two readings need not
//! agree: a select commits to whatever satisfies its qualification at
//! pick time, while the world reading judges witnesses against the final
//! structure.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use thiserror::Error;

use crate::ast::{Cee, OccId, Theory};
use crate::eval::{eval2, eval_term, Env};
use crate::grounder::{CpKey, Resolution};
use crate::structures::{
    canonical_string, structure_to_json, DomainAtom, DomainElement, Structure,
};
use crate::wf::{enumerate_models, Budget, EnumError};

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("run exceeded {0} steps without stabilizing")]
    StepLimit(u32),
    #[error("domain grew past {0} elements")]
    ElementLimit(usize),
    #[error("more than {0} distinct runs")]
    RunLimit(u64),
}

/// Resolves choices as a run first reaches them.
pub trait Chooser {
    /// Picks the right branch of an `COR` when true.
    fn pick_or(&mut self, key: &CpKey) -> bool;
    /// Picks a witness index among the current satisfiers (nonempty).
    fn pick_select(&mut self, key: &CpKey, satisfiers: &[DomainElement]) -> usize;
}

/// Random choices from a fixed seed; the same seed replays the same run.
pub struct SeededChooser {
    rng: ChaCha8Rng,
}

impl SeededChooser {
    pub fn new(seed: u64) -> SeededChooser {
        SeededChooser { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Chooser for SeededChooser {
    fn pick_or(&mut self, _key: &CpKey) -> bool {
        self.rng.gen()
    }
    fn pick_select(&mut self, _key: &CpKey, satisfiers: &[DomainElement]) -> usize {
        self.rng.gen_range(0..satisfiers.len())
    }
}

/// One recorded choice of a run.
#[derive(Clone, Debug)]
pub struct Decision {
    pub key: CpKey,
    pub describe: String,
    pub choice: usize,
    pub options: usize,
}

/// Replays a scripted prefix, then takes the first option everywhere,
/// recording every decision so the caller can advance the script.
struct ScriptChooser {
    script: Vec<usize>,
    taken: Vec<Decision>,
}

impl ScriptChooser {
    fn next(&mut self, key: &CpKey, options: usize, label: impl Fn(usize) -> String) -> usize {
        let i = self.taken.len();
        let choice = self.script.get(i).copied().unwrap_or(0);
        self.taken.push(Decision {
            key: key.clone(),
            describe: label(choice),
            choice,
            options,
        });
        choice
    }
}

impl Chooser for ScriptChooser {
    fn pick_or(&mut self, key: &CpKey) -> bool {
        self.next(key, 2, |c| if c == 1 { "right".into() } else { "left".into() }) == 1
    }
    fn pick_select(&mut self, key: &CpKey, satisfiers: &[DomainElement]) -> usize {
        let sats = satisfiers.to_vec();
        self.next(key, sats.len(), move |c| format!("pick {}", sats[c]))
    }
}

/// What one step caused and which choices it settled.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub caused: Vec<DomainAtom>,
    pub created: Vec<DomainElement>,
    pub committed: Vec<(CpKey, Resolution)>,
}

/// A complete run: the states visited (the last two equal) and what each
/// step caused.
#[derive(Clone, Debug)]
pub struct Trace {
    pub seed: Option<u64>,
    pub states: Vec<Structure>,
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn final_state(&self) -> &Structure {
        self.states.last().expect("at least the initial state")
    }
}

struct Walker<'a, C: Chooser> {
    // Current state extended with this step's creations, so a creation's
    // body sees its object at once.
    view: Structure,
    commitments: &'a mut BTreeMap<CpKey, Resolution>,
    chooser: &'a mut C,
    next_fresh: &'a mut u32,
    caused: BTreeSet<DomainAtom>,
    created: Vec<DomainElement>,
    committed: Vec<(CpKey, Resolution)>,
}

impl<C: Chooser> Walker<'_, C> {
    fn key(&self, path: &OccId, env: &Env) -> CpKey {
        CpKey {
            occ: path.clone(),
            subst: env.bindings().iter().map(|(_, e)| e.clone()).collect(),
        }
    }

    fn commit(&mut self, key: CpKey, res: Resolution) {
        self.committed.push((key.clone(), res.clone()));
        self.commitments.insert(key, res);
    }

    fn walk(&mut self, c: &Cee, path: OccId, env: &mut Env) {
        match c {
            Cee::Atom { pred, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match eval_term(a, &self.view, env) {
                        Some(e) => vals.push(e),
                        None => return,
                    }
                }
                self.caused.insert(DomainAtom::new(pred.clone(), vals));
            }
            Cee::If(cond, body) => {
                if eval2(cond, &self.view, env) {
                    self.walk(body, path.child(0), env);
                }
            }
            Cee::Cand(l, r) => {
                self.walk(l, path.child(0), env);
                self.walk(r, path.child(1), env);
            }
            Cee::Cor(l, r) => {
                let key = self.key(&path, env);
                let res = match self.commitments.get(&key) {
                    Some(r) => r.clone(),
                    None => {
                        let r = if self.chooser.pick_or(&key) {
                            Resolution::OrRight
                        } else {
                            Resolution::OrLeft
                        };
                        self.commit(key, r.clone());
                        r
                    }
                };
                match res {
                    Resolution::OrLeft => self.walk(l, path.child(0), env),
                    _ => self.walk(r, path.child(1), env),
                }
            }
            Cee::All(x, qual, body) => {
                let snapshot: Vec<DomainElement> =
                    self.view.domain.iter().cloned().collect();
                for d in snapshot {
                    env.push(x.clone(), d);
                    if eval2(qual, &self.view, env) {
                        self.walk(body, path.child(0), env);
                    }
                    env.pop();
                }
            }
            Cee::Select(x, qual, body) => {
                let key = self.key(&path, env);
                let witness = match self.commitments.get(&key) {
                    Some(Resolution::Witness(d)) => Some(d.clone()),
                    Some(_) => unreachable!("select committed to a non-witness"),
                    None => {
                        let satisfiers: Vec<DomainElement> = self
                            .view
                            .domain
                            .iter()
                            .filter(|d| {
                                env.push(x.clone(), (*d).clone());
                                let ok = eval2(qual, &self.view, env);
                                env.pop();
                                ok
                            })
                            .cloned()
                            .collect();
                        if satisfiers.is_empty() {
                            // Nothing qualifies yet; try again next step.
                            None
                        } else {
                            let i = self.chooser.pick_select(&key, &satisfiers);
                            let d = satisfiers[i].clone();
                            self.commit(key, Resolution::Witness(d.clone()));
                            Some(d)
                        }
                    }
                };
                if let Some(d) = witness {
                    env.push(x.clone(), d);
                    self.walk(body, path.child(0), env);
                    env.pop();
                }
            }
            Cee::New(x, body) => {
                let key = self.key(&path, env);
                let e = match self.commitments.get(&key) {
                    Some(Resolution::Created(e)) => e.clone(),
                    Some(_) => unreachable!("creation committed to a non-element"),
                    None => {
                        let e = DomainElement::Created(*self.next_fresh);
                        *self.next_fresh += 1;
                        self.view.add_element(e.clone());
                        self.created.push(e.clone());
                        self.commit(key, Resolution::Created(e.clone()));
                        e
                    }
                };
                env.push(x.clone(), e);
                self.walk(body, path.child(0), env);
                env.pop();
            }
        }
    }
}

/// Runs the theory to stability from the input structure.
pub fn simulate(
    t: &Theory,
    exo: &Structure,
    chooser: &mut impl Chooser,
    budget: &Budget,
) -> Result<Trace, ProcessError> {
    let mut commitments: BTreeMap<CpKey, Resolution> = BTreeMap::new();
    let mut next_fresh: u32 = 1;
    let mut states = vec![exo.clone()];
    let mut steps = Vec::new();

    loop {
        if steps.len() as u32 >= budget.max_steps {
            return Err(ProcessError::StepLimit(budget.max_steps));
        }
        let current = states.last().unwrap();
        let mut w = Walker {
            view: current.clone(),
            commitments: &mut commitments,
            chooser,
            next_fresh: &mut next_fresh,
            caused: BTreeSet::new(),
            created: Vec::new(),
            committed: Vec::new(),
        };
        for (i, cee) in t.cees.iter().enumerate() {
            let mut env = Env::new();
            w.walk(cee, OccId::root(i as u16), &mut env);
        }
        let mut next = w.view;
        if next.domain.len() > budget.max_elements {
            return Err(ProcessError::ElementLimit(budget.max_elements));
        }
        for a in &w.caused {
            next.insert(a.clone());
        }
        steps.push(TraceStep {
            caused: w.caused.into_iter().collect(),
            created: w.created,
            committed: w.committed,
        });
        let stable = next == *states.last().unwrap();
        states.push(next);
        if stable {
            return Ok(Trace { seed: None, states, steps });
        }
    }
}

/// One exhaustively enumerated run with the decisions that produced it.
#[derive(Clone, Debug)]
pub struct ProcessRun {
    pub trace: Trace,
    pub decisions: Vec<Decision>,
}

/// All runs of a theory, with their distinct final states.
#[derive(Clone, Debug)]
pub struct ProcessSpace {
    pub runs: Vec<ProcessRun>,
    /// Canonical final states, deduplicated and sorted.
    pub finals: Vec<Structure>,
}

/// Enumerates every run by depth-first search over the choices.
pub fn enumerate_processes(
    t: &Theory,
    exo: &Structure,
    budget: &Budget,
) -> Result<ProcessSpace, ProcessError> {
    let mut runs = Vec::new();
    let mut finals: BTreeMap<String, Structure> = BTreeMap::new();
    let mut script: Vec<usize> = Vec::new();
    loop {
        if runs.len() as u64 >= budget.max_assignments {
            return Err(ProcessError::RunLimit(budget.max_assignments));
        }
        let mut chooser = ScriptChooser { script: script.clone(), taken: Vec::new() };
        let trace = simulate(t, exo, &mut chooser, budget)?;
        let taken = chooser.taken;
        let fin = crate::structures::canonicalize(trace.final_state());
        finals.entry(canonical_string(trace.final_state())).or_insert(fin);
        runs.push(ProcessRun { trace, decisions: taken.clone() });

        // Advance to the next undone branch, deepest first.
        let mut i = taken.len();
        let advanced = loop {
            if i == 0 {
                break None;
            }
            i -= 1;
            if taken[i].choice + 1 < taken[i].options {
                break Some(i);
            }
        };
        match advanced {
            None => {
                return Ok(ProcessSpace {
                    runs,
                    finals: finals.into_values().collect(),
                })
            }
            Some(i) => {
                script = taken[..i].iter().map(|d| d.choice).collect();
                script.push(taken[i].choice + 1);
            }
        }
    }
}

/// How the two readings of a theory relate on one input.
#[derive(Clone, Debug)]
pub struct DiffReport {
    pub agree: bool,
    /// Final states some run reaches that are not worlds.
    pub only_runs: Vec<Structure>,
    /// Worlds no run reaches.
    pub only_worlds: Vec<Structure>,
    pub budget_hit: bool,
}

#[derive(Debug, Error)]
pub enum DiffError {
    #[error(transparent)]
    Worlds(#[from] EnumError),
    #[error(transparent)]
    Runs(#[from] ProcessError),
}

/// Compares run-reachable final states against the worlds of the causal
/// part of the theory. Sentences only filter worlds, never runs, so they
/// are left out on both sides.
pub fn compare_readings(
    t: &Theory,
    exo: &Structure,
    budget: &Budget,
) -> Result<DiffReport, DiffError> {
    let causal = Theory {
        vocabulary: t.vocabulary.clone(),
        cees: t.cees.clone(),
        sentences: Vec::new(),
    };
    let worlds = enumerate_models(&causal, exo, budget)?;
    let space = enumerate_processes(&causal, exo, budget)?;

    let world_keys: BTreeMap<String, &Structure> =
        worlds.models.iter().map(|m| (canonical_string(m), m)).collect();
    let run_keys: BTreeMap<String, &Structure> =
        space.finals.iter().map(|m| (canonical_string(m), m)).collect();

    let only_runs: Vec<Structure> = run_keys
        .iter()
        .filter(|(k, _)| !world_keys.contains_key(*k))
        .map(|(_, m)| (*m).clone())
        .collect();
    let only_worlds: Vec<Structure> = world_keys
        .iter()
        .filter(|(k, _)| !run_keys.contains_key(*k))
        .map(|(_, m)| (*m).clone())
        .collect();
    Ok(DiffReport {
        agree: only_runs.is_empty() && only_worlds.is_empty(),
        only_runs,
        only_worlds,
        budget_hit: worlds.budget_hit,
    })
}

/// Plain-text rendering of a run.
pub fn trace_to_text(trace: &Trace) -> String {
    let mut out = String::new();
    if let Some(seed) = trace.seed {
        out.push_str(&format!("seed: {seed}\n"));
    }
    for (i, state) in trace.states.iter().enumerate() {
        out.push_str(&format!("s{i}: {}\n", structure_to_json(state)));
        if let Some(step) = trace.steps.get(i) {
            let mut parts: Vec<String> =
                step.created.iter().map(|e| format!("new {e}")).collect();
            parts.extend(step.caused.iter().map(|a| a.to_string()));
            let line = if parts.is_empty() {
                "(nothing)".to_string()
            } else {
                parts.join(", ")
            };
            out.push_str(&format!("  -> causes {line}\n"));
        }
    }
    out.push_str(&format!("stable after {} steps\n", trace.steps.len()));
    out
}

/// JSON rendering of a run.
pub fn trace_to_json(trace: &Trace) -> Value {
    json!({
        "seed": trace.seed,
        "states": trace.states.iter().map(structure_to_json).collect::<Vec<_>>(),
        "steps": trace.steps.iter().map(|s| json!({
            "caused": s.caused.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            "created": s.created.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "committed": s.committed.iter()
                .map(|(k, r)| format!("{k} -> {r}"))
                .collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

/// Decision tree of all runs in DOT form; leaves name the final state
/// each run reaches.
pub fn process_tree_dot(space: &ProcessSpace) -> String {
    let mut finals_index: BTreeMap<String, usize> = BTreeMap::new();
    for (i, f) in space.finals.iter().enumerate() {
        finals_index.insert(canonical_string(f), i);
    }

    let mut nodes: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut lines = vec![
        "digraph runs {".to_string(),
        "    node [shape=box, fontname=\"monospace\"];".to_string(),
        "    n0 [label=\"start\"];".to_string(),
    ];
    nodes.insert(Vec::new(), 0);
    let mut next_id = 1;
    let mut edges: BTreeSet<String> = BTreeSet::new();

    for run in &space.runs {
        let mut prefix: Vec<usize> = Vec::new();
        for d in &run.decisions {
            let from = nodes[&prefix];
            prefix.push(d.choice);
            let to = *nodes.entry(prefix.clone()).or_insert_with(|| {
                let id = next_id;
                next_id += 1;
                lines.push(format!("    n{id} [label=\"{}\"];", d.key));
                id
            });
            edges.insert(format!(
                "    n{from} -> n{to} [label=\"{}\"];",
                d.describe
            ));
        }
        let leaf = nodes[&prefix];
        let w = finals_index[&canonical_string(run.trace.final_state())];
        let wid = format!("w{w}");
        edges.insert(format!(
            "    n{leaf} -> {wid} [style=dotted];"
        ));
        edges.insert(format!(
            "    {wid} [shape=ellipse, label=\"world {w}\"];"
        ));
    }
    lines.extend(edges);
    lines.push("}".to_string());
    lines.join("\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_theory;
    use crate::structures::load_structure;

    const GEAR: &str = "
        vocab { pred Turn/1; pred Pedal/0; const BigGear; const SmallGear; }
        theory {
            IF Pedal THEN Turn(BigGear).
            IF Turn(SmallGear) THEN Turn(BigGear).
            IF Turn(BigGear) THEN Turn(SmallGear).
        }";

    fn setup(theory: &str, structure: &str) -> (Theory, Structure) {
        let t = parse_theory(theory).unwrap();
        let s = load_structure(structure, &t).unwrap();
        (t, s)
    }

    #[test]
    fn gear_run_spreads_motion_step_by_step() {
        let (t, s) = setup(GEAR, r#"{"Pedal": true}"#);
        let mut c = SeededChooser::new(7);
        let trace = simulate(&t, &s, &mut c, &Budget::default()).unwrap();
        assert_eq!(trace.states.len(), 4);
        assert_eq!(
            trace.states[trace.states.len() - 1],
            trace.states[trace.states.len() - 2]
        );
        for w in trace.states.windows(2) {
            for (pred, rows) in &w[0].relations {
                for row in rows {
                    assert!(w[1].holds(&DomainAtom::new(pred.clone(), row.clone())));
                }
            }
        }
        let last = trace.steps.last().unwrap();
        assert_eq!(last.caused.len(), 2);
    }

    #[test]
    fn selects_wait_until_something_qualifies() {
        let (t, s) = setup(
            "vocab { pred R/1; pred S/1; pred Go/0; const A; }
             theory { SELECT x WHERE R(x) : S(x). IF Go THEN R(A). }",
            r#"{"Go": true}"#,
        );
        let mut c = SeededChooser::new(1);
        let trace = simulate(&t, &s, &mut c, &Budget::default()).unwrap();
        let fin = trace.final_state();
        assert!(fin.holds(&DomainAtom::new(
            "S",
            vec![DomainElement::Named("A".into())]
        )));
        // Step 1 causes R(A) only; S(A) needs the next step to see it.
        assert_eq!(trace.steps[0].caused.len(), 1);
        assert!(trace.steps[0].committed.is_empty());
        assert!(matches!(
            trace.steps[1].committed.as_slice(),
            [(_, Resolution::Witness(DomainElement::Named(n)))] if n == "A"
        ));
    }

    #[test]
    fn creation_fires_once_and_is_reused() {
        let (t, s) = setup(
            "vocab { pred Pack/1; pred Sent/1; }
             theory { NEW p : Pack(p) CAND Sent(p). }",
            r#"{}"#,
        );
        let mut c = SeededChooser::new(3);
        let trace = simulate(&t, &s, &mut c, &Budget::default()).unwrap();
        let created: Vec<_> =
            trace.steps.iter().flat_map(|s| s.created.clone()).collect();
        assert_eq!(created, vec![DomainElement::Created(1)]);
        assert_eq!(trace.final_state().created(), vec![1]);
    }

    #[test]
    fn same_seed_replays_the_same_run() {
        let (t, s) = setup(
            "vocab { pred P/0; pred Q/0; pred R/1; pred Pick/1; const A; const B; }
             theory { P COR Q. SELECT x WHERE true : Pick(x). }",
            r#"{}"#,
        );
        let run = |seed| {
            let mut c = SeededChooser::new(seed);
            simulate(&t, &s, &mut c, &Budget::default()).unwrap()
        };
        assert_eq!(run(42).states, run(42).states);
    }

    #[test]
    fn run_enumeration_covers_all_choices() {
        let (t, s) = setup(
            "vocab {
                pred Applied/1; pred PassedTest/1; pred PermRes/1; pred Lottery/0;
             }
             theory {
                 ALL p WHERE Applied(p) & PassedTest(p) : PermRes(p).
                 IF Lottery THEN SELECT p WHERE Applied(p) : PermRes(p).
             }",
            r#"{
                "domain": ["Ann", "Bob"],
                "Applied": [["Ann"], ["Bob"]],
                "PassedTest": [["Ann"]],
                "Lottery": true
            }"#,
        );
        let space = enumerate_processes(&t, &s, &Budget::default()).unwrap();
        assert_eq!(space.runs.len(), 2);
        assert_eq!(space.finals.len(), 2);
    }

    #[test]
    fn readings_agree_on_deterministic_theories() {
        let (t, s) = setup(GEAR, r#"{"Pedal": true}"#);
        let report = compare_readings(&t, &s, &Budget::default()).unwrap();
        assert!(report.agree);
    }

    #[test]
    fn early_commitment_can_miss_worlds() {
        // The select commits while A is the only satisfier; the world
        // reading also admits the later satisfier B.
        let (t, s) = setup(
            "vocab { pred R/1; pred S/1; const A; const B; }
             theory { CEE: R(A). IF R(A) THEN R(B). SELECT x WHERE R(x) : S(x). }",
            r#"{}"#,
        );
        let report = compare_readings(&t, &s, &Budget::default()).unwrap();
        assert!(!report.agree);
        assert!(report.only_runs.is_empty());
        assert_eq!(report.only_worlds.len(), 1);
        assert!(report.only_worlds[0].holds(&DomainAtom::new(
            "S",
            vec![DomainElement::Named("B".into())]
        )));
    }

    #[test]
    fn dot_tree_names_runs_and_worlds() {
        let (t, s) = setup(
            "vocab { pred P/0; pred Q/0; }
             theory { P COR Q. }",
            r#"{}"#,
        );
        let space = enumerate_processes(&t, &s, &Budget::default()).unwrap();
        let dot = process_tree_dot(&space);
        assert!(dot.contains("digraph runs"));
        assert!(dot.contains("world 0"));
        assert!(dot.contains("world 1"));
        assert!(dot.contains("left"));
        assert!(dot.contains("right"));
    }

    #[test]
    fn step_limit_stops_runaway_growth() {
        let (t, s) = setup(
            "vocab { pred Pack/1; pred Go/0; }
             theory {
                 IF Go THEN NEW p : Pack(p).
                 ALL x WHERE Pack(x) : NEW y : Pack(y).
             }",
            r#"{"Go": true}"#,
        );
        let tight = Budget { max_elements: 10, ..Budget::default() };
        let mut c = SeededChooser::new(5);
        match simulate(&t, &s, &mut c, &tight) {
            Err(ProcessError::ElementLimit(10)) => {}
            other => panic!("expected element limit, got {other:?}"),
        }
    }
}
