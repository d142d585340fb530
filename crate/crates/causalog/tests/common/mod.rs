//! Shared plumbing for the integration suites: corpus access, CLI
//! invocation, random theory generation, and an independently coded
//! well-founded oracle to cross-check the enumeration engine.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;

use causalog::ast::validate_theory;
use causalog::structures::default_extension;
use causalog::{
    canonical_string, enumerate_models, load_structure, parse_theory, Budget, Cee, DomainAtom,
    DomainElement, Formula, ModelSet, Structure, Term, Theory, Vocabulary,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("..").join("..").join("corpus")
}

pub fn corpus_theory(name: &str) -> Theory {
    let path = corpus_dir().join(name);
    let src = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    let t = parse_theory(&src).unwrap_or_else(|e| panic!("parse {name}: {e}"));
    validate_theory(&t).unwrap_or_else(|e| panic!("validate {name}: {e}"));
    t
}

pub fn corpus_structure(t: &Theory, name: &str) -> Structure {
    let path = corpus_dir().join(name);
    let src = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    load_structure(&src, t).unwrap_or_else(|e| panic!("load {name}: {e}"))
}

pub fn models(t: &Theory, s: &Structure) -> ModelSet {
    let set = enumerate_models(t, s, &Budget::default()).expect("within budget");
    assert!(!set.budget_hit, "enumeration unexpectedly hit the budget");
    set
}

pub fn canon_set(ms: &ModelSet) -> BTreeSet<String> {
    ms.models.iter().map(canonical_string).collect()
}

/// Runs the installed binary and returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_causalog"))
        .args(args)
        .output()
        .expect("spawn causalog");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

pub fn corpus_path(name: &str) -> String {
    corpus_dir().join(name).display().to_string()
}

// ---------------------------------------------------------------------------
// Random theory generation.
//
// Two classes. The deterministic class (All/If/Atom) exercises the
// well-founded core against the oracle below. The choice class adds
// Cand/Cor/Select (with exogenous qualifications) and avoids negation,
// the fragment on which the stepwise and possible-world readings agree.

const EFFECT_PREDS: &[(&str, usize)] = &[("P", 1), ("Q", 1), ("S", 2), ("R", 0)];
const EXO_PREDS: &[(&str, usize)] = &[("E", 1), ("G", 0)];

fn test_vocabulary() -> Vocabulary {
    Vocabulary {
        predicates: EFFECT_PREDS
            .iter()
            .chain(EXO_PREDS)
            .map(|(p, a)| (p.to_string(), *a))
            .collect(),
        constants: Vec::new(),
        int_range: None,
    }
}

struct Gen {
    rng: StdRng,
    fresh: u32,
}

impl Gen {
    fn new(seed: u64) -> Gen {
        Gen { rng: StdRng::seed_from_u64(seed), fresh: 0 }
    }

    fn fresh_var(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.rng.gen_range(0..items.len())]
    }

    /// A predicate literal whose arguments come from the scope. Arity-0
    /// symbols stand in when the scope cannot fill the slots.
    fn literal(&mut self, scope: &[String], preds: &[(&str, usize)]) -> Formula {
        let usable: Vec<&(&str, usize)> =
            preds.iter().filter(|(_, a)| *a <= scope.len()).collect();
        let (pred, arity) = if usable.is_empty() {
            ("G", 0)
        } else {
            **self.pick(&usable)
        };
        let args = (0..arity)
            .map(|_| Term::Var(self.pick(scope).clone()))
            .collect();
        Formula::Atom { pred: pred.to_string(), args }
    }

    fn comparison(&mut self, scope: &[String]) -> Formula {
        let pred = if self.rng.gen_bool(0.5) { "=" } else { "~=" };
        Formula::Atom {
            pred: pred.to_string(),
            args: vec![
                Term::Var(self.pick(scope).clone()),
                Term::Var(self.pick(scope).clone()),
            ],
        }
    }

    /// A formula over the scope. `negation` allows Not and Implies;
    /// `preds` limits which predicates may appear.
    fn formula(
        &mut self,
        scope: &mut Vec<String>,
        depth: u32,
        negation: bool,
        preds: &[(&str, usize)],
    ) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.4) {
            if !scope.is_empty() && self.rng.gen_bool(0.15) {
                return self.comparison(scope);
            }
            let lit = self.literal(scope, preds);
            if negation && self.rng.gen_bool(0.35) {
                return Formula::Not(Box::new(lit));
            }
            return lit;
        }
        let max = if negation { 7 } else { 4 };
        match self.rng.gen_range(0..=max) {
            0 => Formula::And(
                Box::new(self.formula(scope, depth - 1, negation, preds)),
                Box::new(self.formula(scope, depth - 1, negation, preds)),
            ),
            1 => Formula::Or(
                Box::new(self.formula(scope, depth - 1, negation, preds)),
                Box::new(self.formula(scope, depth - 1, negation, preds)),
            ),
            2 => {
                let v = self.fresh_var();
                scope.push(v.clone());
                let body = self.formula(scope, depth - 1, negation, preds);
                scope.pop();
                Formula::Exists(v, Box::new(body))
            }
            3 => {
                let v = self.fresh_var();
                scope.push(v.clone());
                let body = self.formula(scope, depth - 1, negation, preds);
                scope.pop();
                Formula::Forall(v, Box::new(body))
            }
            4 => {
                // The qualification of a restricted existential stays in
                // positive position, so the negation-free class keeps it.
                let v = self.fresh_var();
                scope.push(v.clone());
                let qual = self.formula(scope, 0, negation, preds);
                let body = self.formula(scope, depth - 1, negation, preds);
                scope.pop();
                Formula::ExistsWhere(v, Box::new(qual), Box::new(body))
            }
            5 => {
                let v = self.fresh_var();
                scope.push(v.clone());
                let qual = self.formula(scope, 0, negation, preds);
                let body = self.formula(scope, depth - 1, negation, preds);
                scope.pop();
                Formula::ForallWhere(v, Box::new(qual), Box::new(body))
            }
            6 => Formula::Not(Box::new(self.formula(scope, depth - 1, negation, preds))),
            _ => Formula::Implies(
                Box::new(self.formula(scope, depth - 1, negation, preds)),
                Box::new(self.formula(scope, depth - 1, negation, preds)),
            ),
        }
    }

    fn effect_atom(&mut self, scope: &[String]) -> Cee {
        let usable: Vec<&(&str, usize)> =
            EFFECT_PREDS.iter().filter(|(_, a)| *a <= scope.len()).collect();
        let (pred, arity) = if usable.is_empty() { ("R", 0) } else { **self.pick(&usable) };
        let args = (0..arity)
            .map(|_| Term::Var(self.pick(scope).clone()))
            .collect();
        Cee::Atom { pred: pred.to_string(), args }
    }

    /// One rule of the deterministic class: All and If wrappers around a
    /// single effect atom, with arbitrary (possibly negated) guards.
    fn det_rule(&mut self) -> Cee {
        let mut scope = Vec::new();
        let wrappers = self.rng.gen_range(0..=2);
        let mut shells: Vec<(String, Formula)> = Vec::new();
        for _ in 0..wrappers {
            let v = self.fresh_var();
            scope.push(v.clone());
            let qual = if self.rng.gen_bool(0.6) {
                self.formula(&mut scope, 1, true, &all_preds())
            } else {
                Formula::True
            };
            shells.push((v, qual));
        }
        let mut body = self.effect_atom(&scope);
        if self.rng.gen_bool(0.6) {
            let guard = self.formula(&mut scope, 2, true, &all_preds());
            body = Cee::If(guard, Box::new(body));
        }
        for (v, qual) in shells.into_iter().rev() {
            body = Cee::All(v, qual, Box::new(body));
        }
        body
    }

    /// One rule of the choice class: additionally Cand, Cor, and Select
    /// with exogenous qualifications; no negation anywhere. `selects`
    /// gates Select and `news` caps creation.
    fn choice_rule(
        &mut self,
        depth: u32,
        scope: &mut Vec<String>,
        news: &mut u32,
        selects: bool,
    ) -> Cee {
        if depth == 0 {
            return self.effect_atom(scope);
        }
        match self.rng.gen_range(0..10) {
            0 | 1 => {
                let guard = self.formula(scope, 1, false, &all_preds());
                Cee::If(guard, Box::new(self.choice_rule(depth - 1, scope, news, selects)))
            }
            2 | 3 => Cee::Cand(
                Box::new(self.choice_rule(depth - 1, scope, news, selects)),
                Box::new(self.choice_rule(depth - 1, scope, news, selects)),
            ),
            4 => Cee::Cor(
                Box::new(self.choice_rule(depth - 1, scope, news, selects)),
                Box::new(self.choice_rule(depth - 1, scope, news, selects)),
            ),
            5 => {
                let v = self.fresh_var();
                scope.push(v.clone());
                let qual = if self.rng.gen_bool(0.5) {
                    self.formula(scope, 1, false, &exo_preds())
                } else {
                    Formula::True
                };
                let body = self.choice_rule(depth - 1, scope, news, selects);
                scope.pop();
                Cee::All(v, qual, Box::new(body))
            }
            6 | 7 if selects => {
                let v = self.fresh_var();
                scope.push(v.clone());
                let qual = if self.rng.gen_bool(0.7) {
                    self.formula(scope, 1, false, &exo_preds())
                } else {
                    Formula::True
                };
                let body = self.choice_rule(depth - 1, scope, news, selects);
                scope.pop();
                Cee::Select(v, qual, Box::new(body))
            }
            8 if *news < 2 => {
                *news += 1;
                let v = self.fresh_var();
                scope.push(v.clone());
                let body = self.choice_rule(depth - 1, scope, news, selects);
                scope.pop();
                Cee::New(v, Box::new(body))
            }
            _ => self.effect_atom(scope),
        }
    }
}

fn all_preds() -> Vec<(&'static str, usize)> {
    EFFECT_PREDS.iter().chain(EXO_PREDS).copied().collect()
}

fn exo_preds() -> Vec<(&'static str, usize)> {
    EXO_PREDS.to_vec()
}

/// Fills every exogenous relation with random rows over the domain.
fn random_exo_structure(g: &mut Gen, t: &Theory, domain_size: usize) -> Structure {
    let mut s = default_extension(&Structure::empty(&t.vocabulary), t);
    let elems: Vec<DomainElement> = (1..=domain_size)
        .map(|i| DomainElement::Named(format!("e{i}")))
        .collect();
    for e in &elems {
        s.add_element(e.clone());
    }
    let endo = t.endogenous();
    for (pred, arity) in &t.vocabulary.predicates {
        if endo.contains(pred) {
            continue;
        }
        for row in tuples(&elems, *arity) {
            if g.rng.gen_bool(0.4) {
                s.insert(DomainAtom::new(pred.clone(), row));
            }
        }
    }
    s
}

fn tuples(elems: &[DomainElement], arity: usize) -> Vec<Vec<DomainElement>> {
    if arity == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in tuples(elems, arity - 1) {
        for e in elems {
            let mut row = vec![e.clone()];
            row.extend(rest.iter().cloned());
            out.push(row);
        }
    }
    out
}

/// A random deterministic theory (All, If, and atoms only) with an input
/// structure: the class cross-checked against the oracle.
pub fn random_det_case(seed: u64) -> (Theory, Structure) {
    let mut g = Gen::new(seed);
    let rules = g.rng.gen_range(1..=12);
    let cees = (0..rules).map(|_| g.det_rule()).collect();
    let t = Theory { vocabulary: test_vocabulary(), cees, sentences: Vec::new() };
    validate_theory(&t).expect("generated theory validates");
    let n = g.rng.gen_range(1..=5);
    let s = random_exo_structure(&mut g, &t, n);
    (t, s)
}

fn random_choice_like(seed: u64, exclusive: bool) -> (Theory, Structure) {
    let mut g = Gen::new(seed);
    let rules = g.rng.gen_range(1..=5);
    let selects = !exclusive || g.rng.gen_bool(0.7);
    let mut news = if exclusive && selects { 2 } else { 0 };
    let cees = (0..rules)
        .map(|_| {
            let mut scope = Vec::new();
            g.choice_rule(2, &mut scope, &mut news, selects)
        })
        .collect();
    let t = Theory { vocabulary: test_vocabulary(), cees, sentences: Vec::new() };
    validate_theory(&t).expect("generated theory validates");
    let n = g.rng.gen_range(2..=3);
    let s = random_exo_structure(&mut g, &t, n);
    (t, s)
}

/// A random negation-free theory with choice (Cor, Select over exogenous
/// qualifications, creation), for properties that hold of enumeration
/// and simulation separately.
pub fn random_choice_case(seed: u64) -> (Theory, Structure) {
    random_choice_like(seed, false)
}

/// The fragment on which the stepwise and possible-world readings
/// coincide: negation-free, selections qualified exogenously, and never
/// selection and creation together, since a created element enlarges the
/// candidate pools of the possible-world reading only.
pub fn random_agreement_case(seed: u64) -> (Theory, Structure) {
    random_choice_like(seed, true)
}

/// A random closed formula paired with a random total structure over the
/// shared test vocabulary, for evaluation cross-checks.
pub fn random_formula_case(seed: u64) -> (Formula, Structure) {
    let mut g = Gen::new(seed);
    let voc = test_vocabulary();
    let v = g.fresh_var();
    let w = g.fresh_var();
    let mut scope = vec![v.clone(), w.clone()];
    let body = g.formula(&mut scope, 3, true, &all_preds());
    let f = Formula::Forall(v, Box::new(Formula::Exists(w, Box::new(body))));
    let n = g.rng.gen_range(1..=4);
    let mut s = Structure::empty(&voc);
    let elems: Vec<DomainElement> = (1..=n)
        .map(|i| DomainElement::Named(format!("e{i}")))
        .collect();
    for e in &elems {
        s.add_element(e.clone());
    }
    for (pred, arity) in &voc.predicates {
        s.relations.entry(pred.clone()).or_default();
        for row in tuples(&elems, *arity) {
            if g.rng.gen_bool(0.4) {
                s.insert(DomainAtom::new(pred.clone(), row));
            }
        }
    }
    (f, s)
}

pub fn all_pred_names() -> BTreeSet<String> {
    test_vocabulary().predicates.iter().map(|(p, _)| p.clone()).collect()
}

// ---------------------------------------------------------------------------
// Independent well-founded oracle.
//
// Grounds All/If/Atom rules by direct substitution and runs the textbook
// alternating fixpoint: one operator application derives heads whose
// guards hold with positive occurrences read from the set under
// construction and negated occurrences read against the previous
// estimate; iterating the squared operator from the empty set yields the
// true atoms, and one more application the possible ones. The theory has
// a model exactly when the two coincide. Nothing here is shared with the
// engine's solver.

pub mod oracle {
    use super::*;

    pub struct GroundRule {
        pub head: DomainAtom,
        pub guards: Vec<Formula>,
    }

    fn subst_term(t: &Term, env: &BTreeMap<String, DomainElement>) -> Term {
        match t {
            Term::Var(x) => match env.get(x) {
                Some(e) => Term::Elem(e.clone()),
                None => t.clone(),
            },
            Term::Plus(l, r) => Term::Plus(
                Box::new(subst_term(l, env)),
                Box::new(subst_term(r, env)),
            ),
            _ => t.clone(),
        }
    }

    fn subst(f: &Formula, env: &BTreeMap<String, DomainElement>) -> Formula {
        let shadowed = |x: &String, env: &BTreeMap<String, DomainElement>| {
            let mut e2 = env.clone();
            e2.remove(x);
            e2
        };
        match f {
            Formula::True | Formula::False => f.clone(),
            Formula::Atom { pred, args } => Formula::Atom {
                pred: pred.clone(),
                args: args.iter().map(|t| subst_term(t, env)).collect(),
            },
            Formula::Not(g) => Formula::Not(Box::new(subst(g, env))),
            Formula::And(l, r) => {
                Formula::And(Box::new(subst(l, env)), Box::new(subst(r, env)))
            }
            Formula::Or(l, r) => {
                Formula::Or(Box::new(subst(l, env)), Box::new(subst(r, env)))
            }
            Formula::Implies(l, r) => {
                Formula::Implies(Box::new(subst(l, env)), Box::new(subst(r, env)))
            }
            Formula::Forall(x, g) => {
                Formula::Forall(x.clone(), Box::new(subst(g, &shadowed(x, env))))
            }
            Formula::Exists(x, g) => {
                Formula::Exists(x.clone(), Box::new(subst(g, &shadowed(x, env))))
            }
            Formula::ForallWhere(x, q, g) => {
                let e2 = shadowed(x, env);
                Formula::ForallWhere(
                    x.clone(),
                    Box::new(subst(q, &e2)),
                    Box::new(subst(g, &e2)),
                )
            }
            Formula::ExistsWhere(x, q, g) => {
                let e2 = shadowed(x, env);
                Formula::ExistsWhere(
                    x.clone(),
                    Box::new(subst(q, &e2)),
                    Box::new(subst(g, &e2)),
                )
            }
        }
    }

    pub fn ground(t: &Theory, s: &Structure) -> Vec<GroundRule> {
        let mut rules = Vec::new();
        for cee in &t.cees {
            ground_cee(cee, s, &mut BTreeMap::new(), &mut Vec::new(), &mut rules);
        }
        rules
    }

    fn ground_cee(
        cee: &Cee,
        s: &Structure,
        env: &mut BTreeMap<String, DomainElement>,
        guards: &mut Vec<Formula>,
        out: &mut Vec<GroundRule>,
    ) {
        match cee {
            Cee::Atom { pred, args } => {
                let elems = args
                    .iter()
                    .map(|a| match subst_term(a, env) {
                        Term::Elem(e) => e,
                        other => panic!("unbound head argument {other:?}"),
                    })
                    .collect();
                out.push(GroundRule {
                    head: DomainAtom::new(pred.clone(), elems),
                    guards: guards.clone(),
                });
            }
            Cee::If(f, body) => {
                guards.push(subst(f, env));
                ground_cee(body, s, env, guards, out);
                guards.pop();
            }
            Cee::All(v, qual, body) => {
                let domain: Vec<DomainElement> = s.domain.iter().cloned().collect();
                for d in domain {
                    let old = env.insert(v.clone(), d);
                    guards.push(subst(qual, env));
                    ground_cee(body, s, env, guards, out);
                    guards.pop();
                    match old {
                        Some(o) => {
                            env.insert(v.clone(), o);
                        }
                        None => {
                            env.remove(v);
                        }
                    }
                }
            }
            other => panic!("oracle covers the deterministic fragment, got {other:?}"),
        }
    }

    fn elem_of(t: &Term) -> DomainElement {
        match t {
            Term::Elem(e) => e.clone(),
            other => panic!("open formula reached evaluation: {other:?}"),
        }
    }

    fn compare(pred: &str, a: &DomainElement, b: &DomainElement) -> bool {
        match pred {
            "=" => a == b,
            "~=" => a != b,
            _ => match (a.as_int(), b.as_int()) {
                (Some(x), Some(y)) => match pred {
                    "<" => x < y,
                    ">" => x > y,
                    "=<" => x <= y,
                    ">=" => x >= y,
                    _ => false,
                },
                _ => false,
            },
        }
    }

    /// Two-set evaluation: positive occurrences of derivable atoms are
    /// read from `pos`, occurrences under a negation from `neg`. The sets
    /// swap at every polarity flip.
    fn holds(
        f: &Formula,
        pos: &BTreeSet<DomainAtom>,
        neg: &BTreeSet<DomainAtom>,
        s: &Structure,
        endo: &BTreeSet<String>,
    ) -> bool {
        match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom { pred, args } => {
                let elems: Vec<DomainElement> = args.iter().map(elem_of).collect();
                if causalog::ast::COMPARISON_PREDS.contains(&pred.as_str()) {
                    compare(pred, &elems[0], &elems[1])
                } else if endo.contains(pred) {
                    pos.contains(&DomainAtom::new(pred.clone(), elems))
                } else {
                    s.holds(&DomainAtom::new(pred.clone(), elems))
                }
            }
            Formula::Not(g) => !holds(g, neg, pos, s, endo),
            Formula::And(l, r) => holds(l, pos, neg, s, endo) && holds(r, pos, neg, s, endo),
            Formula::Or(l, r) => holds(l, pos, neg, s, endo) || holds(r, pos, neg, s, endo),
            Formula::Implies(l, r) => {
                !holds(l, neg, pos, s, endo) || holds(r, pos, neg, s, endo)
            }
            Formula::Forall(x, g) => s.domain.iter().all(|d| {
                let mut env = BTreeMap::new();
                env.insert(x.clone(), d.clone());
                holds(&subst(g, &env), pos, neg, s, endo)
            }),
            Formula::Exists(x, g) => s.domain.iter().any(|d| {
                let mut env = BTreeMap::new();
                env.insert(x.clone(), d.clone());
                holds(&subst(g, &env), pos, neg, s, endo)
            }),
            Formula::ForallWhere(x, q, g) => s.domain.iter().all(|d| {
                let mut env = BTreeMap::new();
                env.insert(x.clone(), d.clone());
                !holds(&subst(q, &env), neg, pos, s, endo)
                    || holds(&subst(g, &env), pos, neg, s, endo)
            }),
            Formula::ExistsWhere(x, q, g) => s.domain.iter().any(|d| {
                let mut env = BTreeMap::new();
                env.insert(x.clone(), d.clone());
                holds(&subst(q, &env), pos, neg, s, endo)
                    && holds(&subst(g, &env), pos, neg, s, endo)
            }),
        }
    }

    /// One operator application: the least set of heads derivable with
    /// negated occurrences judged against `j`.
    fn gamma(
        rules: &[GroundRule],
        j: &BTreeSet<DomainAtom>,
        s: &Structure,
        endo: &BTreeSet<String>,
    ) -> BTreeSet<DomainAtom> {
        let mut k = BTreeSet::new();
        loop {
            let mut changed = false;
            for r in rules {
                if !k.contains(&r.head)
                    && r.guards.iter().all(|g| holds(g, &k, j, s, endo))
                {
                    k.insert(r.head.clone());
                    changed = true;
                }
            }
            if !changed {
                return k;
            }
        }
    }

    /// The unique model when the well-founded fixpoint is total, else None.
    pub fn wf_model(t: &Theory, s: &Structure) -> Option<Structure> {
        let endo = t.endogenous();
        let rules = ground(t, s);
        let mut true_set = BTreeSet::new();
        loop {
            let possible = gamma(&rules, &true_set, s, &endo);
            let next = gamma(&rules, &possible, s, &endo);
            if next == true_set {
                if possible == true_set {
                    let mut m = default_extension(s, t);
                    for a in &true_set {
                        m.insert(a.clone());
                    }
                    return Some(m);
                }
                return None;
            }
            true_set = next;
        }
    }
}
