//! Model enumeration under possible-world semantics.
//!
//! A structure is a model when some resolution of every choice point
//! yields it as the total well-founded extension of the resulting rules,
//! the resolutions themselves are justified in it (a select's witness
//! satisfies its qualification, a creation fired exactly when its context
//! held), and every first-order sentence of the theory is true in it.
//!
//! Enumeration runs in two phases. Creation instances are decided first
//! by a depth-first search: firing one extends the domain and regrounds
//! the theory, which can surface further creation instances. Once every
//! creation is decided the domain is final, and the remaining `COR` and
//! `SELECT` resolutions form a finite assignment space that is swept
//! exhaustively, in parallel when the `parallel` feature is enabled.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ast::{Formula, Theory};
use crate::eval::{eval2, eval3, Env, Interp, Tri};
use crate::grounder::{
    flatten, ground_theory, ChoicePoint, CpKey, CpKind, GroundRule, Resolution,
    RuleHead,
};
use crate::structures::{
    canonical_string, canonicalize, exogenous_part, DomainAtom, DomainElement,
    PartialStructure, Structure,
};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Resource limits for enumeration and simulation.
#[derive(Clone, Debug)]
pub struct Budget {
    /// Creation instances allowed to fire along one search branch.
    pub max_new: u32,
    /// Domain size ceiling, counting created elements.
    pub max_elements: usize,
    /// Simulation steps before a run is abandoned.
    pub max_steps: u32,
    /// Genuine branchings allowed along one resolution path of a sweep.
    pub max_branched: usize,
    /// Resolution paths allowed in one sweep.
    pub max_assignments: u64,
    /// Worker threads for the sweep; `None` uses the default pool.
    pub jobs: Option<usize>,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget {
            max_new: 8,
            max_elements: 64,
            max_steps: 1000,
            max_branched: 24,
            max_assignments: 1_000_000,
            jobs: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum EnumError {
    #[error(
        "choice space too large: {cps} undecided choice points, \
         {assignments} assignments (limit {limit})"
    )]
    ChoiceSpace { cps: usize, assignments: u128, limit: u64 },
}

/// The models found for one input structure. `budget_hit` reports that
/// some search branch was cut off by the creation budget, so the list is
/// a sound but possibly incomplete subset.
#[derive(Clone, Debug)]
pub struct ModelSet {
    pub models: Vec<Structure>,
    pub budget_hit: bool,
}

/// Evaluation view in which endogenous atoms are wholly unknown. What
/// comes out true or false here holds in every candidate world over the
/// same domain.
struct AllUnknown<'a> {
    base: &'a Structure,
    endo: &'a BTreeSet<String>,
}

impl Interp for AllUnknown<'_> {
    fn domain(&self) -> &BTreeSet<DomainElement> {
        &self.base.domain
    }
    fn int_range(&self) -> Option<(i64, i64)> {
        self.base.int_range
    }
    fn constant(&self, name: &str) -> Option<&DomainElement> {
        self.base.constants.get(name)
    }
    fn atom(&self, atom: &DomainAtom) -> Tri {
        if self.endo.contains(&atom.pred) {
            Tri::Unknown
        } else {
            Tri::from(self.base.holds(atom))
        }
    }
}

/// Evaluation view overriding a set of atoms to false.
struct Falsified<'a> {
    base: &'a PartialStructure,
    atoms: &'a BTreeSet<DomainAtom>,
}

impl Interp for Falsified<'_> {
    fn domain(&self) -> &BTreeSet<DomainElement> {
        self.base.domain()
    }
    fn int_range(&self) -> Option<(i64, i64)> {
        self.base.int_range()
    }
    fn constant(&self, name: &str) -> Option<&DomainElement> {
        self.base.constant(name)
    }
    fn atom(&self, atom: &DomainAtom) -> Tri {
        if self.atoms.contains(atom) {
            Tri::False
        } else {
            self.base.get(atom)
        }
    }
}

/// Computes the well-founded extension of the given atom rules over the
/// base structure and returns it if total.
///
/// Truths are derived until fixpoint from guards that already hold, then
/// the greatest set of atoms with no remaining possible support is
/// falsified wholesale; the two alternate until stable. Atoms still
/// unknown at that point have no two-valued justification, and a world
/// needs one for everything, so the candidate is rejected.
pub fn well_founded(
    rules: &[(DomainAtom, &Formula)],
    base: &Structure,
    endo: &BTreeSet<String>,
) -> Option<Structure> {
    let mut partial = PartialStructure::new(base.clone(), endo.clone());
    for (head, _) in rules {
        partial.set(head.clone(), Tri::Unknown);
    }
    let mut env = Env::new();

    loop {
        // Derive what must hold.
        loop {
            let mut progressed = false;
            for (head, guard) in rules {
                if partial.get(head) != Tri::True
                    && eval3(guard, &partial, &mut env) == Tri::True
                {
                    partial.set(head.clone(), Tri::True);
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }

        // Find the unknowns that cannot be supported even if every other
        // unknown in the set were false.
        let mut unfounded: BTreeSet<DomainAtom> =
            partial.unknown_atoms().into_iter().collect();
        loop {
            let mut shrunk = false;
            for a in unfounded.clone() {
                let possible = rules.iter().any(|(head, guard)| {
                    head == &a && {
                        let view = Falsified { base: &partial, atoms: &unfounded };
                        eval3(guard, &view, &mut env) != Tri::False
                    }
                });
                if possible {
                    unfounded.remove(&a);
                    shrunk = true;
                }
            }
            if !shrunk {
                break;
            }
        }
        if unfounded.is_empty() {
            break;
        }
        for a in unfounded {
            partial.set(a, Tri::False);
        }
    }

    partial.project()
}

fn quantifier_free(f: &Formula) -> bool {
    match f {
        Formula::True | Formula::False | Formula::Atom { .. } => true,
        Formula::Not(g) => quantifier_free(g),
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
            quantifier_free(l) && quantifier_free(r)
        }
        Formula::Forall(..)
        | Formula::Exists(..)
        | Formula::ForallWhere(..)
        | Formula::ExistsWhere(..) => false,
    }
}

/// True when the choice point's enclosing resolutions were all taken.
fn reached(cp: &ChoicePoint, assign: &BTreeMap<CpKey, Resolution>) -> bool {
    cp.enclosing.iter().all(|(k, r)| assign.get(k) == Some(r))
}

/// Checks that every resolution is justified in the world `m`.
fn resolutions_justified(
    cps: &BTreeMap<CpKey, ChoicePoint>,
    assign: &BTreeMap<CpKey, Resolution>,
    m: &Structure,
) -> bool {
    let mut env = Env::new();
    for cp in cps.values() {
        let res = match assign.get(&cp.key) {
            Some(r) => r,
            None => continue,
        };
        let live = reached(cp, assign) && eval2(&cp.context, m, &mut env);
        let ok = match (cp.kind, res) {
            (CpKind::Or, _) => true,
            (CpKind::Select, Resolution::Witness(d)) => {
                // A live select's witness must satisfy its qualification.
                !live || {
                    let qual = cp
                        .candidates
                        .iter()
                        .find(|(e, _)| e == d)
                        .map(|(_, q)| q)
                        .expect("witness is a domain element");
                    eval2(qual, m, &mut env)
                }
            }
            (CpKind::Select, Resolution::NoFire) => {
                // A live select with a satisfier on offer must fire.
                !live || !cp.candidates.iter().any(|(_, q)| eval2(q, m, &mut env))
            }
            (CpKind::New, Resolution::Created(_)) => live,
            (CpKind::New, Resolution::NoFire) => !live,
            _ => true,
        };
        if !ok {
            return false;
        }
    }
    true
}

/// One phase-two sweep: decides `COR`/`SELECT` resolutions by depth-first
/// search, branching only on choice points the decisions so far actually
/// reach. A choice point behind an untaken branch stays unresolved; it
/// fires nothing and is justified vacuously, so skipping it loses no
/// world. This keeps nested selects (whose instances multiply with the
/// domain) from blowing the assignment space.
struct Sweep<'a> {
    t: &'a Theory,
    s: &'a Structure,
    endo: &'a BTreeSet<String>,
    rules: &'a [GroundRule],
    cps: &'a BTreeMap<CpKey, ChoicePoint>,
    options: &'a BTreeMap<CpKey, Vec<Resolution>>,
}

type Worlds = BTreeMap<String, Structure>;

impl Sweep<'_> {
    /// First reached, still undecided choice point.
    fn next(&self, assign: &BTreeMap<CpKey, Resolution>) -> Option<&CpKey> {
        self.options
            .keys()
            .find(|k| !assign.contains_key(*k) && reached(&self.cps[*k], assign))
    }

    fn leaf(&self, assign: &BTreeMap<CpKey, Resolution>) -> Option<(String, Structure)> {
        let active: Vec<(DomainAtom, &Formula)> = self
            .rules
            .iter()
            .filter_map(|r| match &r.head {
                RuleHead::Atom(a)
                    if r.commitments
                        .iter()
                        .all(|(k, res)| assign.get(k) == Some(res)) =>
                {
                    Some((a.clone(), &r.guard))
                }
                _ => None,
            })
            .collect();
        let m = well_founded(&active, self.s, self.endo)?;
        if !resolutions_justified(self.cps, assign, &m) {
            return None;
        }
        let mut env = Env::new();
        if !self.t.sentences.iter().all(|f| eval2(f, &m, &mut env)) {
            return None;
        }
        let canon = canonicalize(&m);
        Some((canonical_string(&canon), canon))
    }

    fn dfs_seq(&self, assign: &BTreeMap<CpKey, Resolution>, acc: &mut Worlds) {
        match self.next(assign) {
            None => {
                if let Some((k, m)) = self.leaf(assign) {
                    acc.entry(k).or_insert(m);
                }
            }
            Some(key) => {
                for res in &self.options[key] {
                    let mut a = assign.clone();
                    a.insert(key.clone(), res.clone());
                    self.dfs_seq(&a, acc);
                }
            }
        }
    }

    /// Forks only across the top `split` branch levels; that already
    /// yields far more tasks than workers, and the subtrees below run
    /// sequentially so join overhead stays off the leaves.
    #[cfg(feature = "parallel")]
    fn dfs_par(&self, assign: &BTreeMap<CpKey, Resolution>, split: usize) -> Worlds {
        if split == 0 {
            let mut acc = Worlds::new();
            self.dfs_seq(assign, &mut acc);
            return acc;
        }
        match self.next(assign) {
            None => self.leaf(assign).into_iter().collect(),
            Some(key) => self.options[key]
                .par_iter()
                .map(|res| {
                    let mut a = assign.clone();
                    a.insert(key.clone(), res.clone());
                    self.dfs_par(&a, split - 1)
                })
                .reduce(Worlds::new, |mut left, right| {
                    for (k, m) in right {
                        left.entry(k).or_insert(m);
                    }
                    left
                }),
        }
    }
}

#[cfg(feature = "parallel")]
const SPLIT_DEPTH: usize = 6;

/// Exact size of the reachable decision space: how many root-to-leaf
/// resolution paths exist and how many genuine branchings the widest
/// path carries. Choice points form a forest under their innermost
/// enclosing resolution, so both follow by one bottom-up pass.
fn measure(
    key: &CpKey,
    options: &BTreeMap<CpKey, Vec<Resolution>>,
    decided: &BTreeMap<CpKey, Resolution>,
    kids: &BTreeMap<(CpKey, Resolution), Vec<CpKey>>,
) -> (u128, usize) {
    let owned;
    let opts: &[Resolution] = match options.get(key) {
        Some(o) => o,
        None => {
            owned = [decided[key].clone()];
            &owned
        }
    };
    let mut paths: u128 = 0;
    let mut deepest = 0usize;
    for res in opts {
        let (p, d) = kids
            .get(&(key.clone(), res.clone()))
            .map(|cs| {
                cs.iter().fold((1u128, 0usize), |(pa, da), c| {
                    let (pc, dc) = measure(c, options, decided, kids);
                    (pa.saturating_mul(pc), da + dc)
                })
            })
            .unwrap_or((1, 0));
        paths = paths.saturating_add(p);
        deepest = deepest.max(d);
    }
    (paths, (opts.len() > 1) as usize + deepest)
}

/// Sweeps the `COR`/`SELECT` decision space of one fully-decided ground
/// tree, adding each admissible world to `acc` keyed by canonical form.
#[allow(clippy::too_many_arguments)]
fn solve_leaf(
    t: &Theory,
    s: &Structure,
    budget: &Budget,
    endo: &BTreeSet<String>,
    fired: &BTreeMap<CpKey, Option<DomainElement>>,
    tree: &crate::grounder::GroundTree,
    acc: &mut BTreeMap<String, Structure>,
) -> Result<(), EnumError> {
    let rules = flatten(tree);
    let unknown = AllUnknown { base: s, endo };
    let mut env = Env::new();

    // Creation resolutions are already decided.
    let mut base_assign: BTreeMap<CpKey, Resolution> = BTreeMap::new();
    for cp in tree.cps.values() {
        if cp.kind == CpKind::New {
            let res = match fired.get(&cp.key) {
                Some(Some(e)) => Resolution::Created(e.clone()),
                Some(None) => Resolution::NoFire,
                None => unreachable!("creation left undecided at leaf"),
            };
            base_assign.insert(cp.key.clone(), res);
        }
    }

    // Remaining choice points, with options that could still be justified.
    // A choice point whose context is false in every candidate world never
    // fires anything and has every resolution justified, so it gets a
    // single stand-in option instead of multiplying the space. The domain
    // is final here, so contexts with quantifiers are safe to judge.
    let mut options: BTreeMap<CpKey, Vec<Resolution>> = BTreeMap::new();
    for cp in tree.cps.values() {
        let dead = cp.kind != CpKind::New
            && eval3(&cp.context, &unknown, &mut env) == Tri::False;
        if dead {
            let res = match cp.kind {
                CpKind::Or => Resolution::OrLeft,
                _ => Resolution::NoFire,
            };
            options.insert(cp.key.clone(), vec![res]);
            continue;
        }
        match cp.kind {
            CpKind::New => {}
            CpKind::Or => {
                options.insert(
                    cp.key.clone(),
                    vec![Resolution::OrLeft, Resolution::OrRight],
                );
            }
            CpKind::Select => {
                let mut opts = Vec::new();
                let mut satisfied = false;
                for (d, q) in &cp.candidates {
                    match eval3(q, &unknown, &mut env) {
                        // Unsatisfiable in every world: never a witness.
                        Tri::False => {}
                        Tri::True => {
                            opts.push(Resolution::Witness(d.clone()));
                            satisfied = true;
                        }
                        Tri::Unknown => opts.push(Resolution::Witness(d.clone())),
                    }
                }
                // With a satisfier in every world, declining is never
                // justified where the select is live, and where it is not
                // live any witness yields the same world.
                if !satisfied {
                    opts.push(Resolution::NoFire);
                }
                options.insert(cp.key.clone(), opts);
            }
        }
    }

    // Forest of choice points by innermost enclosing resolution.
    let mut kids: BTreeMap<(CpKey, Resolution), Vec<CpKey>> = BTreeMap::new();
    let mut roots: Vec<&CpKey> = Vec::new();
    for cp in tree.cps.values() {
        match cp.enclosing.last() {
            None => roots.push(&cp.key),
            Some(edge) => kids.entry(edge.clone()).or_default().push(cp.key.clone()),
        }
    }
    let mut paths: u128 = 1;
    let mut branched = 0usize;
    for root in roots {
        let (p, d) = measure(root, &options, &base_assign, &kids);
        paths = paths.saturating_mul(p);
        branched += d;
    }
    if branched > budget.max_branched || paths > budget.max_assignments as u128 {
        return Err(EnumError::ChoiceSpace {
            cps: branched,
            assignments: paths,
            limit: budget.max_assignments,
        });
    }

    let sweep = Sweep { t, s, endo, rules: &rules, cps: &tree.cps, options: &options };
    let found = sweep_assignments(&sweep, &base_assign, budget.jobs);
    for (key, m) in found {
        acc.entry(key).or_insert(m);
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn sweep_assignments(
    sweep: &Sweep,
    base: &BTreeMap<CpKey, Resolution>,
    jobs: Option<usize>,
) -> Worlds {
    match jobs {
        Some(1) => {
            let mut acc = Worlds::new();
            sweep.dfs_seq(base, &mut acc);
            acc
        }
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("worker pool")
            .install(|| sweep.dfs_par(base, SPLIT_DEPTH)),
        None => sweep.dfs_par(base, SPLIT_DEPTH),
    }
}

#[cfg(not(feature = "parallel"))]
fn sweep_assignments(
    sweep: &Sweep,
    base: &BTreeMap<CpKey, Resolution>,
    jobs: Option<usize>,
) -> Worlds {
    let _ = jobs;
    let mut acc = Worlds::new();
    sweep.dfs_seq(base, &mut acc);
    acc
}

#[allow(clippy::too_many_arguments)]
fn explore(
    t: &Theory,
    s: &Structure,
    budget: &Budget,
    endo: &BTreeSet<String>,
    fired: &mut BTreeMap<CpKey, Option<DomainElement>>,
    next_fresh: &mut u32,
    acc: &mut BTreeMap<String, Structure>,
    budget_hit: &mut bool,
) -> Result<(), EnumError> {
    let tree = ground_theory(t, s, fired);
    let pending: Vec<ChoicePoint> = tree
        .cps
        .values()
        .filter(|cp| cp.kind == CpKind::New && !fired.contains_key(&cp.key))
        .cloned()
        .collect();

    if !pending.is_empty() {
        let unknown = AllUnknown { base: s, endo };
        let mut env = Env::new();

        // Instances whose context is already settled need no branching.
        // Only quantifier-free contexts are used: their value cannot be
        // disturbed by elements created later.
        let mut forced_none = Vec::new();
        let mut branch: Option<(CpKey, bool)> = None;
        for cp in &pending {
            let verdict = if quantifier_free(&cp.context) {
                eval3(&cp.context, &unknown, &mut env)
            } else {
                Tri::Unknown
            };
            match verdict {
                Tri::False => forced_none.push(cp.key.clone()),
                Tri::True if branch.is_none() => {
                    branch = Some((cp.key.clone(), cp.enclosing.is_empty()))
                }
                _ if branch.is_none() => branch = Some((cp.key.clone(), false)),
                _ => {}
            }
        }

        if !forced_none.is_empty() {
            for k in &forced_none {
                fired.insert(k.clone(), None);
            }
            explore(t, s, budget, endo, fired, next_fresh, acc, budget_hit)?;
            for k in &forced_none {
                fired.remove(k);
            }
            return Ok(());
        }

        let (key, must_fire) = branch.expect("pending instance to branch on");
        if !must_fire {
            fired.insert(key.clone(), None);
            explore(t, s, budget, endo, fired, next_fresh, acc, budget_hit)?;
            fired.remove(&key);
        }
        let fired_count = fired.values().filter(|v| v.is_some()).count() as u32;
        if fired_count >= budget.max_new || s.domain.len() >= budget.max_elements {
            *budget_hit = true;
        } else {
            let e = DomainElement::Created(*next_fresh);
            *next_fresh += 1;
            let mut grown = s.clone();
            grown.add_element(e.clone());
            fired.insert(key.clone(), Some(e));
            explore(t, &grown, budget, endo, fired, next_fresh, acc, budget_hit)?;
            fired.remove(&key);
            *next_fresh -= 1;
        }
        return Ok(());
    }

    solve_leaf(t, s, budget, endo, fired, &tree, acc)
}

/// Enumerates every model of the theory extending the exogenous input.
///
/// Models are returned in canonical form, deduplicated, sorted by their
/// canonical serialization. The same input yields byte-identical output
/// regardless of worker count.
pub fn enumerate_models(
    t: &Theory,
    exo: &Structure,
    budget: &Budget,
) -> Result<ModelSet, EnumError> {
    let endo = t.endogenous();
    let mut acc = BTreeMap::new();
    let mut budget_hit = false;
    let mut fired = BTreeMap::new();
    let mut next_fresh = 1;
    explore(
        t,
        exo,
        budget,
        &endo,
        &mut fired,
        &mut next_fresh,
        &mut acc,
        &mut budget_hit,
    )?;
    Ok(ModelSet { models: acc.into_values().collect(), budget_hit })
}

/// Verdict on a candidate structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckOutcome {
    Model,
    NotModel(String),
    /// The search was cut off before the structure could be confirmed or
    /// refuted.
    Inconclusive(String),
}

fn gather_rules(
    t: &Theory,
    s: &Structure,
    endo: &BTreeSet<String>,
    fired: &mut BTreeMap<CpKey, Option<DomainElement>>,
    remaining: &mut Vec<DomainElement>,
    out: &mut Vec<GroundRule>,
) {
    let tree = ground_theory(t, s, fired);
    let pend = tree
        .cps
        .values()
        .find(|cp| cp.kind == CpKind::New && !fired.contains_key(&cp.key))
        .map(|cp| (cp.key.clone(), cp.context.clone()));
    match pend {
        None => {
            if remaining.is_empty() {
                out.extend(flatten(&tree));
            }
        }
        Some((k, ctx)) => {
            fired.insert(k.clone(), None);
            gather_rules(t, s, endo, fired, remaining, out);
            fired.remove(&k);
            // The domain is fixed here, so a context false with every
            // endogenous atom unknown stays false under any completion;
            // such an instance cannot have produced anything.
            let unknown = AllUnknown { base: s, endo };
            if eval3(&ctx, &unknown, &mut Env::new()) == Tri::False {
                return;
            }
            for i in 0..remaining.len() {
                let e = remaining.remove(i);
                fired.insert(k.clone(), Some(e.clone()));
                gather_rules(t, s, endo, fired, remaining, out);
                fired.remove(&k);
                remaining.insert(i, e);
            }
        }
    }
}

/// Rules the theory could produce over the structure's own domain, under
/// every way of attributing its anonymous elements to creation instances.
fn all_possible_rules(t: &Theory, m: &Structure) -> Vec<GroundRule> {
    let mut remaining: Vec<DomainElement> =
        m.domain.iter().filter(|e| e.is_created()).cloned().collect();
    let mut out = Vec::new();
    gather_rules(t, m, &t.endogenous(), &mut BTreeMap::new(), &mut remaining, &mut out);
    out
}

/// Decides whether `m` is a model of the theory, with a diagnostic when
/// it is not.
pub fn check_model(
    t: &Theory,
    m: &Structure,
    budget: &Budget,
) -> Result<CheckOutcome, EnumError> {
    let exo = exogenous_part(m, t);
    let target = canonical_string(m);
    let set = enumerate_models(t, &exo, budget)?;
    if set.models.iter().any(|s| canonical_string(s) == target) {
        return Ok(CheckOutcome::Model);
    }

    let mut env = Env::new();
    for (i, sent) in t.sentences.iter().enumerate() {
        if !eval2(sent, m, &mut env) {
            return Ok(CheckOutcome::NotModel(format!(
                "constraint {} is false in the structure: {}",
                i + 1,
                sent
            )));
        }
    }

    let rules = all_possible_rules(t, m);
    if !m.created().is_empty() && rules.is_empty() {
        return Ok(CheckOutcome::NotModel(
            "the structure's anonymous elements cannot all be produced by the \
             theory's creations"
                .to_string(),
        ));
    }

    // Shrink the true endogenous atoms down to those with no support from
    // outside the set itself; survivors hold each other up, which the
    // well-founded reading does not allow.
    let endo = t.endogenous();
    let mut unfounded: BTreeSet<DomainAtom> =
        m.true_atoms(&endo).into_iter().collect();
    loop {
        let outside = {
            let mut s = m.clone();
            for a in &unfounded {
                if let Some(rows) = s.relations.get_mut(&a.pred) {
                    rows.remove(&a.args);
                }
            }
            s
        };
        let mut shrunk = false;
        for a in unfounded.clone() {
            let external = rules.iter().any(|r| {
                matches!(&r.head, RuleHead::Atom(h) if *h == a)
                    && eval2(&r.guard, &outside, &mut env)
            });
            if external {
                unfounded.remove(&a);
                shrunk = true;
            }
        }
        if !shrunk {
            break;
        }
    }
    if let Some(atom) = unfounded.first() {
        let circular = rules.iter().any(|r| {
            matches!(&r.head, RuleHead::Atom(h) if h == atom)
                && eval2(&r.guard, m, &mut env)
        });
        let reason = if circular {
            format!("{atom} is true but its only causes are circular")
        } else {
            format!("{atom} is true but nothing causes it")
        };
        return Ok(CheckOutcome::NotModel(reason));
    }

    if set.budget_hit {
        return Ok(CheckOutcome::Inconclusive(
            "enumeration hit the creation budget before this structure was \
             reached"
                .to_string(),
        ));
    }
    Ok(CheckOutcome::NotModel(
        "no resolution of the theory's choices yields this structure".to_string(),
    ))
}
