//! Grounding of effect expressions over a concrete domain.
//!
//! Grounding walks each effect expression, instantiates quantified
//! variables with domain elements, and produces a tree of ground nodes in
//! which every source of nondeterminism (a `COR`, a `SELECT` instance, a
//! `NEW` instance) is a registered choice point. The tree flattens into
//! guarded rules: each caused atom paired with the closed formula that
//! must hold for it to fire and the choice resolutions its branch depends
//! on.
//!
//! `NEW` instances whose fate is not yet decided ground to pending nodes
//! with no body; deciding them (and regrounding over the grown domain) is
//! the enumerator's job. This module also contains the rewriting of `NEW`
//! into `SELECT` over a reservoir predicate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::ast::{Cee, Formula, OccId, Term, Theory};
use crate::eval::{eval_term, Env};
use crate::structures::{DomainAtom, DomainElement, Structure};

/// Identifies one ground instance of a choice construct: the occurrence
/// path in the theory plus the values of all enclosing binder variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CpKey {
    pub occ: OccId,
    pub subst: Vec<DomainElement>,
}

impl fmt::Display for CpKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.occ)?;
        if !self.subst.is_empty() {
            write!(f, "[")?;
            for (i, e) in self.subst.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpKind {
    Or,
    Select,
    New,
}

/// One way a choice point can be resolved.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Resolution {
    OrLeft,
    OrRight,
    /// The select picked this element as its witness.
    Witness(DomainElement),
    /// The select or creation did not fire.
    NoFire,
    /// The creation fired and produced this element.
    Created(DomainElement),
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::OrLeft => write!(f, "left"),
            Resolution::OrRight => write!(f, "right"),
            Resolution::Witness(e) => write!(f, "pick {e}"),
            Resolution::NoFire => write!(f, "none"),
            Resolution::Created(e) => write!(f, "new {e}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ChoicePoint {
    pub key: CpKey,
    pub kind: CpKind,
    /// Conjunction of every enclosing condition and qualification
    /// instance, closed over the domain. The choice is live in a world
    /// exactly when this holds there.
    pub context: Formula,
    /// Choice resolutions required for this point to be reached at all.
    pub enclosing: Vec<(CpKey, Resolution)>,
    /// For selects: each domain element paired with its qualification
    /// instance.
    pub candidates: Vec<(DomainElement, Formula)>,
}

/// A ground effect node.
#[derive(Clone, Debug)]
pub enum GNode {
    Atom(DomainAtom),
    /// An atom whose arguments do not denote (a sum out of range). It can
    /// never be caused.
    Inert,
    If(Formula, Box<GNode>),
    Group(Vec<GNode>),
    Or(CpKey, Box<GNode>, Box<GNode>),
    Select(CpKey, Vec<(DomainElement, Formula, GNode)>),
    /// A creation instance. `Some` carries the element it produced and
    /// the body ground over the extended domain; `None` means the
    /// instance is pending or was decided not to fire.
    New(CpKey, Option<(DomainElement, Box<GNode>)>),
}

#[derive(Clone, Debug)]
pub struct GroundTree {
    pub roots: Vec<GNode>,
    pub cps: BTreeMap<CpKey, ChoicePoint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleHead {
    Atom(DomainAtom),
    Creation(CpKey),
}

/// A guarded ground rule. The head is caused in a world satisfying the
/// guard, provided every listed choice resolution was taken.
#[derive(Clone, Debug)]
pub struct GroundRule {
    pub head: RuleHead,
    pub guard: Formula,
    pub commitments: Vec<(CpKey, Resolution)>,
}

/// Substitutes environment bindings into a term, leaving variables bound
/// by quantifiers inside the formula untouched.
fn subst_term(t: &Term, env: &Env, shadow: &[String]) -> Term {
    match t {
        Term::Var(x) => {
            if shadow.iter().any(|s| s == x) {
                t.clone()
            } else if let Some(e) = env.lookup(x) {
                Term::Elem(e.clone())
            } else {
                t.clone()
            }
        }
        Term::Plus(a, b) => Term::Plus(
            Box::new(subst_term(a, env, shadow)),
            Box::new(subst_term(b, env, shadow)),
        ),
        Term::Const(_) | Term::Num(_) | Term::Elem(_) => t.clone(),
    }
}

/// Substitutes environment bindings into a formula, producing a closed
/// formula when the environment covers all free variables.
pub fn subst_formula(f: &Formula, env: &Env) -> Formula {
    fn go(f: &Formula, env: &Env, shadow: &mut Vec<String>) -> Formula {
        match f {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom { pred, args } => Formula::Atom {
                pred: pred.clone(),
                args: args.iter().map(|a| subst_term(a, env, shadow)).collect(),
            },
            Formula::Not(g) => Formula::Not(Box::new(go(g, env, shadow))),
            Formula::And(l, r) => Formula::And(
                Box::new(go(l, env, shadow)),
                Box::new(go(r, env, shadow)),
            ),
            Formula::Or(l, r) => Formula::Or(
                Box::new(go(l, env, shadow)),
                Box::new(go(r, env, shadow)),
            ),
            Formula::Implies(l, r) => Formula::Implies(
                Box::new(go(l, env, shadow)),
                Box::new(go(r, env, shadow)),
            ),
            Formula::Forall(x, g) => {
                shadow.push(x.clone());
                let g2 = go(g, env, shadow);
                shadow.pop();
                Formula::Forall(x.clone(), Box::new(g2))
            }
            Formula::Exists(x, g) => {
                shadow.push(x.clone());
                let g2 = go(g, env, shadow);
                shadow.pop();
                Formula::Exists(x.clone(), Box::new(g2))
            }
            Formula::ForallWhere(x, q, g) => {
                shadow.push(x.clone());
                let q2 = go(q, env, shadow);
                let g2 = go(g, env, shadow);
                shadow.pop();
                Formula::ForallWhere(x.clone(), Box::new(q2), Box::new(g2))
            }
            Formula::ExistsWhere(x, q, g) => {
                shadow.push(x.clone());
                let q2 = go(q, env, shadow);
                let g2 = go(g, env, shadow);
                shadow.pop();
                Formula::ExistsWhere(x.clone(), Box::new(q2), Box::new(g2))
            }
        }
    }
    go(f, env, &mut Vec::new())
}

struct Grounder<'a> {
    s: &'a Structure,
    fired: &'a BTreeMap<CpKey, Option<DomainElement>>,
    cps: BTreeMap<CpKey, ChoicePoint>,
}

impl Grounder<'_> {
    fn key(&self, path: &OccId, env: &Env) -> CpKey {
        CpKey {
            occ: path.clone(),
            subst: env.bindings().iter().map(|(_, e)| e.clone()).collect(),
        }
    }

    fn register(
        &mut self,
        key: CpKey,
        kind: CpKind,
        guard: &[Formula],
        encl: &[(CpKey, Resolution)],
        candidates: Vec<(DomainElement, Formula)>,
    ) {
        let cp = ChoicePoint {
            key: key.clone(),
            kind,
            context: Formula::conjoin(guard.to_vec()),
            enclosing: encl.to_vec(),
            candidates,
        };
        self.cps.insert(key, cp);
    }

    fn walk(
        &mut self,
        c: &Cee,
        path: OccId,
        env: &mut Env,
        guard: &mut Vec<Formula>,
        encl: &mut Vec<(CpKey, Resolution)>,
    ) -> GNode {
        match c {
            Cee::Atom { pred, args } => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match eval_term(a, self.s, env) {
                        Some(e) => vals.push(e),
                        None => return GNode::Inert,
                    }
                }
                GNode::Atom(DomainAtom::new(pred.clone(), vals))
            }
            Cee::If(cond, body) => {
                let cond2 = subst_formula(cond, env);
                guard.push(cond2.clone());
                let inner = self.walk(body, path.child(0), env, guard, encl);
                guard.pop();
                GNode::If(cond2, Box::new(inner))
            }
            Cee::Cand(l, r) => GNode::Group(vec![
                self.walk(l, path.child(0), env, guard, encl),
                self.walk(r, path.child(1), env, guard, encl),
            ]),
            Cee::Cor(l, r) => {
                let key = self.key(&path, env);
                self.register(key.clone(), CpKind::Or, guard, encl, Vec::new());
                encl.push((key.clone(), Resolution::OrLeft));
                let left = self.walk(l, path.child(0), env, guard, encl);
                encl.pop();
                encl.push((key.clone(), Resolution::OrRight));
                let right = self.walk(r, path.child(1), env, guard, encl);
                encl.pop();
                GNode::Or(key, Box::new(left), Box::new(right))
            }
            Cee::All(x, qual, body) => {
                let domain: Vec<DomainElement> = self.s.domain.iter().cloned().collect();
                let mut parts = Vec::with_capacity(domain.len());
                for d in domain {
                    env.push(x.clone(), d);
                    let q2 = subst_formula(qual, env);
                    guard.push(q2.clone());
                    let inner = self.walk(body, path.child(0), env, guard, encl);
                    guard.pop();
                    env.pop();
                    parts.push(GNode::If(q2, Box::new(inner)));
                }
                GNode::Group(parts)
            }
            Cee::Select(x, qual, body) => {
                let key = self.key(&path, env);
                let domain: Vec<DomainElement> = self.s.domain.iter().cloned().collect();
                let mut cands = Vec::with_capacity(domain.len());
                let mut nodes = Vec::with_capacity(domain.len());
                for d in domain {
                    env.push(x.clone(), d.clone());
                    let q2 = subst_formula(qual, env);
                    guard.push(q2.clone());
                    encl.push((key.clone(), Resolution::Witness(d.clone())));
                    let inner = self.walk(body, path.child(0), env, guard, encl);
                    encl.pop();
                    guard.pop();
                    env.pop();
                    cands.push((d.clone(), q2.clone()));
                    nodes.push((d, q2, inner));
                }
                self.register(key.clone(), CpKind::Select, guard, encl, cands);
                GNode::Select(key, nodes)
            }
            Cee::New(x, body) => {
                let key = self.key(&path, env);
                self.register(key.clone(), CpKind::New, guard, encl, Vec::new());
                match self.fired.get(&key) {
                    Some(Some(e)) => {
                        env.push(x.clone(), e.clone());
                        encl.push((key.clone(), Resolution::Created(e.clone())));
                        let inner = self.walk(body, path.child(0), env, guard, encl);
                        encl.pop();
                        env.pop();
                        GNode::New(key, Some((e.clone(), Box::new(inner))))
                    }
                    _ => GNode::New(key, None),
                }
            }
        }
    }
}

/// Grounds every effect expression of `t` over the domain of `s`.
///
/// `fired` records creation decisions made so far: `Some(e)` means the
/// instance fired and produced `e` (which must already be in the domain
/// of `s`), `None` means it was decided not to fire. Creation instances
/// absent from the map ground as pending nodes.
pub fn ground_theory(
    t: &Theory,
    s: &Structure,
    fired: &BTreeMap<CpKey, Option<DomainElement>>,
) -> GroundTree {
    let mut g = Grounder { s, fired, cps: BTreeMap::new() };
    let mut roots = Vec::with_capacity(t.cees.len());
    for (i, cee) in t.cees.iter().enumerate() {
        let mut env = Env::new();
        let mut guard = Vec::new();
        let mut encl = Vec::new();
        roots.push(g.walk(cee, OccId::root(i as u16), &mut env, &mut guard, &mut encl));
    }
    GroundTree { roots, cps: g.cps }
}

fn flatten_node(
    node: &GNode,
    guard: &mut Vec<Formula>,
    commit: &mut Vec<(CpKey, Resolution)>,
    out: &mut Vec<GroundRule>,
) {
    match node {
        GNode::Atom(a) => out.push(GroundRule {
            head: RuleHead::Atom(a.clone()),
            guard: Formula::conjoin(guard.clone()),
            commitments: commit.clone(),
        }),
        GNode::Inert => {}
        GNode::If(f, b) => {
            guard.push(f.clone());
            flatten_node(b, guard, commit, out);
            guard.pop();
        }
        GNode::Group(parts) => {
            for p in parts {
                flatten_node(p, guard, commit, out);
            }
        }
        GNode::Or(key, l, r) => {
            commit.push((key.clone(), Resolution::OrLeft));
            flatten_node(l, guard, commit, out);
            commit.pop();
            commit.push((key.clone(), Resolution::OrRight));
            flatten_node(r, guard, commit, out);
            commit.pop();
        }
        GNode::Select(key, cands) => {
            for (d, q, b) in cands {
                guard.push(q.clone());
                commit.push((key.clone(), Resolution::Witness(d.clone())));
                flatten_node(b, guard, commit, out);
                commit.pop();
                guard.pop();
            }
        }
        GNode::New(key, Some((e, b))) => {
            out.push(GroundRule {
                head: RuleHead::Creation(key.clone()),
                guard: Formula::conjoin(guard.clone()),
                commitments: commit.clone(),
            });
            commit.push((key.clone(), Resolution::Created(e.clone())));
            flatten_node(b, guard, commit, out);
            commit.pop();
        }
        GNode::New(_, None) => {}
    }
}

/// Flattens a ground tree into guarded rules.
pub fn flatten(tree: &GroundTree) -> Vec<GroundRule> {
    let mut out = Vec::new();
    for root in &tree.roots {
        flatten_node(root, &mut Vec::new(), &mut Vec::new(), &mut out);
    }
    out
}

// -- object creation elimination ---------------------------------------------

/// Result of rewriting creations into selections.
pub struct NewElimination {
    pub theory: Theory,
    /// Predicates introduced by the rewrite: the reservoir plus one
    /// marker per creation occurrence. Models of the rewritten theory
    /// match models of the original once these are projected away.
    pub aux: BTreeSet<String>,
    pub reservoir: String,
    pub markers: Vec<String>,
    /// Enclosing binder variables of each creation occurrence, in marker
    /// order; the marker's arity is one more than this list's length.
    pub marker_binders: Vec<Vec<String>>,
}

fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    let mut i = 2;
    loop {
        let cand = format!("{base}{i}");
        if !taken.contains(&cand) {
            return cand;
        }
        i += 1;
    }
}

struct Rewriter<'a> {
    markers: &'a [String],
    reservoir: &'a str,
    next: usize,
    scope: Vec<String>,
    /// Enclosing binders of each rewritten occurrence, in marker order.
    binders: Vec<Vec<String>>,
}

impl Rewriter<'_> {
    fn scoped(&mut self, x: &str, b: &Cee) -> Box<Cee> {
        self.scope.push(x.to_string());
        let inner = self.rewrite(b);
        self.scope.pop();
        Box::new(inner)
    }

    fn rewrite(&mut self, c: &Cee) -> Cee {
        match c {
            Cee::Atom { .. } => c.clone(),
            Cee::If(f, b) => Cee::If(f.clone(), Box::new(self.rewrite(b))),
            Cee::Cand(l, r) => {
                Cee::Cand(Box::new(self.rewrite(l)), Box::new(self.rewrite(r)))
            }
            Cee::Cor(l, r) => {
                Cee::Cor(Box::new(self.rewrite(l)), Box::new(self.rewrite(r)))
            }
            Cee::All(x, q, b) => Cee::All(x.clone(), q.clone(), self.scoped(x, b)),
            Cee::Select(x, q, b) => {
                Cee::Select(x.clone(), q.clone(), self.scoped(x, b))
            }
            Cee::New(x, b) => {
                let marker = self.markers[self.next].clone();
                // The marker records which instance of the occurrence made
                // the pick: its arguments are the picked element followed
                // by the enclosing binders. A binder shadowed later (or by
                // the creation variable itself) is unreachable here and is
                // left out.
                let mut binders: Vec<String> = Vec::new();
                for v in &self.scope {
                    binders.retain(|b| b != v);
                    if v != x {
                        binders.push(v.clone());
                    }
                }
                self.binders.push(binders.clone());
                self.next += 1;
                let body = self.scoped(x, b);
                let mut args = vec![Term::Var(x.clone())];
                args.extend(binders.into_iter().map(Term::Var));
                let mark = Cee::Atom { pred: marker, args };
                Cee::Select(
                    x.clone(),
                    Formula::Atom {
                        pred: self.reservoir.to_string(),
                        args: vec![Term::Var(x.clone())],
                    },
                    Box::new(Cee::Cand(Box::new(mark), body)),
                )
            }
        }
    }
}

fn marker_atom(pred: &str, first: &str, rest: &[String]) -> Formula {
    let mut args = vec![Term::Var(first.to_string())];
    args.extend(rest.iter().map(|v| Term::Var(v.clone())));
    Formula::Atom { pred: pred.to_string(), args }
}

/// Closes `f` under existential quantifiers over `vars`.
fn exists_all(vars: &[String], f: Formula) -> Formula {
    vars.iter().rev().fold(f, |acc, v| {
        Formula::Exists(v.clone(), Box::new(acc))
    })
}

fn forall_all(vars: &[String], f: Formula) -> Formula {
    vars.iter().rev().fold(f, |acc, v| {
        Formula::Forall(v.clone(), Box::new(acc))
    })
}

/// Rewrites every creation into a selection from a reservoir predicate.
///
/// Each `NEW x : C` under enclosing binders `ys` becomes `SELECT x WHERE
/// Reservoir(x) : Made_i(x, ys) CAND C`, where `Reservoir` is a fresh
/// input predicate holding the spare elements available for creation and
/// `Made_i` is a fresh marker recording which instance of the occurrence
/// picked which element. Added sentences force markers of distinct
/// occurrences to be disjoint and each marker to pick an element for at
/// most one instance, so picks behave like genuinely new objects.
///
/// Models correspond as long as the input interprets the reservoir by
/// exactly as many spare elements as creations fire: a smaller reservoir
/// starves the selects and a larger one leaves unpicked spares that the
/// original theory's models lack.
pub fn eliminate_new(t: &Theory) -> NewElimination {
    let n = t.new_node_count();
    let mut taken: BTreeSet<String> = t
        .vocabulary
        .predicates
        .iter()
        .map(|(p, _)| p.clone())
        .chain(t.vocabulary.constants.iter().cloned())
        .collect();
    let reservoir = fresh_name("Reservoir", &taken);
    taken.insert(reservoir.clone());
    let mut markers = Vec::with_capacity(n);
    for i in 0..n {
        let m = fresh_name(&format!("Made{}", i + 1), &taken);
        taken.insert(m.clone());
        markers.push(m);
    }

    let mut rw = Rewriter {
        markers: &markers,
        reservoir: &reservoir,
        next: 0,
        scope: Vec::new(),
        binders: Vec::new(),
    };
    let cees: Vec<Cee> = t.cees.iter().map(|c| rw.rewrite(c)).collect();
    debug_assert_eq!(rw.next, n);
    let marker_binders = rw.binders;

    let mut vocabulary = t.vocabulary.clone();
    vocabulary.predicates.push((reservoir.clone(), 1));
    for (m, bs) in markers.iter().zip(&marker_binders) {
        vocabulary.predicates.push((m.clone(), 1 + bs.len()));
    }

    let mut sentences = t.sentences.clone();

    // Elements of distinct occurrences never coincide.
    for i in 0..n {
        for j in (i + 1)..n {
            let yi: Vec<String> =
                (0..marker_binders[i].len()).map(|k| format!("y{}", k + 1)).collect();
            let zj: Vec<String> =
                (0..marker_binders[j].len()).map(|k| format!("z{}", k + 1)).collect();
            let both = Formula::And(
                Box::new(exists_all(&yi, marker_atom(&markers[i], "x", &yi))),
                Box::new(exists_all(&zj, marker_atom(&markers[j], "x", &zj))),
            );
            sentences.push(Formula::Not(Box::new(Formula::Exists(
                "x".to_string(),
                Box::new(both),
            ))));
        }
    }

    // Within one occurrence, an element is picked by at most one instance.
    for (m, bs) in markers.iter().zip(&marker_binders) {
        if bs.is_empty() {
            continue;
        }
        let ys: Vec<String> = (0..bs.len()).map(|k| format!("y{}", k + 1)).collect();
        let zs: Vec<String> = (0..bs.len()).map(|k| format!("z{}", k + 1)).collect();
        let same_instance = Formula::conjoin(
            ys.iter()
                .zip(&zs)
                .map(|(y, z)| Formula::Atom {
                    pred: "=".to_string(),
                    args: vec![Term::Var(y.clone()), Term::Var(z.clone())],
                })
                .collect(),
        );
        let premise = Formula::And(
            Box::new(marker_atom(m, "x", &ys)),
            Box::new(marker_atom(m, "x", &zs)),
        );
        let mut vars = vec!["x".to_string()];
        vars.extend(ys.iter().cloned());
        vars.extend(zs.iter().cloned());
        sentences.push(forall_all(
            &vars,
            Formula::Implies(Box::new(premise), Box::new(same_instance)),
        ));
    }

    let mut aux: BTreeSet<String> = markers.iter().cloned().collect();
    aux.insert(reservoir.clone());
    NewElimination {
        theory: Theory { vocabulary, cees, sentences },
        aux,
        reservoir,
        markers,
        marker_binders,
    }
}
