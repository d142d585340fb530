//! Abstract syntax for theories: a vocabulary, causal effect expressions,
//! and first-order sentences.
//!
//! Effect expressions are built from exactly seven constructors: atoms,
//! conditional effects, conjunction and disjunction of effects, bounded
//! universal effects, witness selection, and object creation. Everything
//! else in the language is plain first-order syntax used in conditions,
//! qualifications, and sentences.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::structures::DomainElement;

/// Built-in comparison predicates; usable in formulas, never as effects.
pub const COMPARISON_PREDS: &[&str] = &["<", ">", "=<", ">=", "=", "~="];

const RESERVED_NAMES: &[&str] = &["domain", "int", "created", "true", "false"];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    pub predicates: Vec<(String, usize)>,
    pub constants: Vec<String>,
    pub int_range: Option<(i64, i64)>,
}

impl Vocabulary {
    pub fn pred_arity(&self, name: &str) -> Option<usize> {
        self.predicates.iter().find(|(n, _)| n == name).map(|(_, a)| *a)
    }

    pub fn has_constant(&self, name: &str) -> bool {
        self.constants.iter().any(|c| c == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
    Num(i64),
    Plus(Box<Term>, Box<Term>),
    /// A resolved domain element; produced by grounding, never by parsing.
    Elem(DomainElement),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom { pred: String, args: Vec<Term> },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(String, Box<Formula>),
    Exists(String, Box<Formula>),
    /// `! x WHERE q : f` — universal over the elements satisfying `q`.
    ForallWhere(String, Box<Formula>, Box<Formula>),
    /// `? x WHERE q : f` — existential over the elements satisfying `q`.
    ExistsWhere(String, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn and(l: Formula, r: Formula) -> Formula {
        match (l, r) {
            (Formula::True, r) => r,
            (l, Formula::True) => l,
            (l, r) => Formula::And(Box::new(l), Box::new(r)),
        }
    }

    pub fn conjoin(parts: Vec<Formula>) -> Formula {
        parts.into_iter().fold(Formula::True, Formula::and)
    }
}

/// A causal effect expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cee {
    Atom { pred: String, args: Vec<Term> },
    If(Formula, Box<Cee>),
    Cand(Box<Cee>, Box<Cee>),
    Cor(Box<Cee>, Box<Cee>),
    All(String, Formula, Box<Cee>),
    Select(String, Formula, Box<Cee>),
    New(String, Box<Cee>),
}

/// Position of a node in the effect-expression forest; the first component
/// is the expression's index in the theory, the rest the path of child
/// indices. Stable across printing and reparsing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccId(pub Vec<u16>);

impl OccId {
    pub fn root(cee_index: u16) -> OccId {
        OccId(vec![cee_index])
    }

    pub fn child(&self, i: u16) -> OccId {
        let mut v = self.0.clone();
        v.push(i);
        OccId(v)
    }
}

impl fmt::Display for OccId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolClass {
    Endogenous,
    Exogenous,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theory {
    pub vocabulary: Vocabulary,
    pub cees: Vec<Cee>,
    pub sentences: Vec<Formula>,
}

impl Theory {
    /// Classifies every declared predicate: endogenous if it occurs as the
    /// symbol of an effect atom anywhere in the theory, exogenous otherwise.
    pub fn classify_symbols(&self) -> BTreeMap<String, SymbolClass> {
        let mut endo = BTreeSet::new();
        for cee in &self.cees {
            collect_effect_preds(cee, &mut endo);
        }
        self.vocabulary
            .predicates
            .iter()
            .map(|(p, _)| {
                let class = if endo.contains(p) {
                    SymbolClass::Endogenous
                } else {
                    SymbolClass::Exogenous
                };
                (p.clone(), class)
            })
            .collect()
    }

    pub fn endogenous(&self) -> BTreeSet<String> {
        self.classify_symbols()
            .into_iter()
            .filter(|(_, c)| *c == SymbolClass::Endogenous)
            .map(|(p, _)| p)
            .collect()
    }

    /// Number of creation nodes across all effect expressions.
    pub fn new_node_count(&self) -> usize {
        fn count(c: &Cee) -> usize {
            match c {
                Cee::Atom { .. } => 0,
                Cee::If(_, b) => count(b),
                Cee::Cand(l, r) | Cee::Cor(l, r) => count(l) + count(r),
                Cee::All(_, _, b) | Cee::Select(_, _, b) => count(b),
                Cee::New(_, b) => 1 + count(b),
            }
        }
        self.cees.iter().map(count).sum()
    }
}

fn collect_effect_preds(cee: &Cee, out: &mut BTreeSet<String>) {
    match cee {
        Cee::Atom { pred, .. } => {
            out.insert(pred.clone());
        }
        Cee::If(_, b) => collect_effect_preds(b, out),
        Cee::Cand(l, r) | Cee::Cor(l, r) => {
            collect_effect_preds(l, out);
            collect_effect_preds(r, out);
        }
        Cee::All(_, _, b) | Cee::Select(_, _, b) | Cee::New(_, b) => {
            collect_effect_preds(b, out)
        }
    }
}

/// Rewrites restricted quantifiers into their unrestricted equivalents:
/// `! x WHERE q : f` becomes `! x : q => f`, `? x WHERE q : f` becomes
/// `? x : q & f`.
pub fn desugar_restricted(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom { .. } => f.clone(),
        Formula::Not(g) => Formula::Not(Box::new(desugar_restricted(g))),
        Formula::And(l, r) => Formula::And(
            Box::new(desugar_restricted(l)),
            Box::new(desugar_restricted(r)),
        ),
        Formula::Or(l, r) => Formula::Or(
            Box::new(desugar_restricted(l)),
            Box::new(desugar_restricted(r)),
        ),
        Formula::Implies(l, r) => Formula::Implies(
            Box::new(desugar_restricted(l)),
            Box::new(desugar_restricted(r)),
        ),
        Formula::Forall(x, g) => Formula::Forall(x.clone(), Box::new(desugar_restricted(g))),
        Formula::Exists(x, g) => Formula::Exists(x.clone(), Box::new(desugar_restricted(g))),
        Formula::ForallWhere(x, q, g) => Formula::Forall(
            x.clone(),
            Box::new(Formula::Implies(
                Box::new(desugar_restricted(q)),
                Box::new(desugar_restricted(g)),
            )),
        ),
        Formula::ExistsWhere(x, q, g) => Formula::Exists(
            x.clone(),
            Box::new(Formula::And(
                Box::new(desugar_restricted(q)),
                Box::new(desugar_restricted(g)),
            )),
        ),
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ValidationError {
    #[error("predicate {0} is not declared")]
    UnknownPredicate(String),
    #[error("predicate {name} used with arity {used}, declared /{declared}")]
    ArityMismatch { name: String, used: usize, declared: usize },
    #[error("symbol {0} is declared more than once")]
    Redeclared(String),
    #[error("symbol {0} is reserved")]
    ReservedName(String),
    #[error("unbound variable or undeclared constant: {0}")]
    UnboundSymbol(String),
    #[error("integer syntax used but the vocabulary declares no int range")]
    NoIntRange,
    #[error("sum over a non-integer term")]
    NonIntegerSum,
    #[error("empty int range {0}..{1}")]
    EmptyIntRange(i64, i64),
    #[error("comparison {0} may not be used as an effect")]
    ComparisonEffect(String),
}

pub fn validate_theory(t: &Theory) -> Result<(), ValidationError> {
    let mut seen = BTreeSet::new();
    for (p, _) in &t.vocabulary.predicates {
        if RESERVED_NAMES.contains(&p.as_str()) {
            return Err(ValidationError::ReservedName(p.clone()));
        }
        if !seen.insert(p.clone()) {
            return Err(ValidationError::Redeclared(p.clone()));
        }
    }
    for c in &t.vocabulary.constants {
        if RESERVED_NAMES.contains(&c.as_str()) {
            return Err(ValidationError::ReservedName(c.clone()));
        }
        if !seen.insert(c.clone()) {
            return Err(ValidationError::Redeclared(c.clone()));
        }
    }
    if let Some((lo, hi)) = t.vocabulary.int_range {
        if lo > hi {
            return Err(ValidationError::EmptyIntRange(lo, hi));
        }
    }
    let mut scope = Vec::new();
    for cee in &t.cees {
        validate_cee(cee, t, &mut scope)?;
    }
    for s in &t.sentences {
        validate_formula(s, t, &mut scope)?;
    }
    Ok(())
}

fn validate_cee(c: &Cee, t: &Theory, scope: &mut Vec<String>) -> Result<(), ValidationError> {
    match c {
        Cee::Atom { pred, args } => {
            if COMPARISON_PREDS.contains(&pred.as_str()) {
                return Err(ValidationError::ComparisonEffect(pred.clone()));
            }
            check_applied(pred, args, t, scope)
        }
        Cee::If(cond, body) => {
            validate_formula(cond, t, scope)?;
            validate_cee(body, t, scope)
        }
        Cee::Cand(l, r) | Cee::Cor(l, r) => {
            validate_cee(l, t, scope)?;
            validate_cee(r, t, scope)
        }
        Cee::All(x, q, body) | Cee::Select(x, q, body) => {
            scope.push(x.clone());
            let res =
                validate_formula(q, t, scope).and_then(|_| validate_cee(body, t, scope));
            scope.pop();
            res
        }
        Cee::New(x, body) => {
            scope.push(x.clone());
            let res = validate_cee(body, t, scope);
            scope.pop();
            res
        }
    }
}

fn validate_formula(
    f: &Formula,
    t: &Theory,
    scope: &mut Vec<String>,
) -> Result<(), ValidationError> {
    match f {
        Formula::True | Formula::False => Ok(()),
        Formula::Atom { pred, args } => {
            if COMPARISON_PREDS.contains(&pred.as_str()) {
                for a in args {
                    validate_term(a, t, scope)?;
                }
                return Ok(());
            }
            check_applied(pred, args, t, scope)
        }
        Formula::Not(g) => validate_formula(g, t, scope),
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
            validate_formula(l, t, scope)?;
            validate_formula(r, t, scope)
        }
        Formula::Forall(x, g) | Formula::Exists(x, g) => {
            scope.push(x.clone());
            let res = validate_formula(g, t, scope);
            scope.pop();
            res
        }
        Formula::ForallWhere(x, q, g) | Formula::ExistsWhere(x, q, g) => {
            scope.push(x.clone());
            let res = validate_formula(q, t, scope).and_then(|_| validate_formula(g, t, scope));
            scope.pop();
            res
        }
    }
}

fn check_applied(
    pred: &str,
    args: &[Term],
    t: &Theory,
    scope: &[String],
) -> Result<(), ValidationError> {
    match t.vocabulary.pred_arity(pred) {
        None => Err(ValidationError::UnknownPredicate(pred.to_string())),
        Some(a) if a != args.len() => Err(ValidationError::ArityMismatch {
            name: pred.to_string(),
            used: args.len(),
            declared: a,
        }),
        Some(_) => {
            for arg in args {
                validate_term(arg, t, scope)?;
            }
            Ok(())
        }
    }
}

fn validate_term(term: &Term, t: &Theory, scope: &[String]) -> Result<(), ValidationError> {
    match term {
        Term::Var(x) => {
            if scope.iter().any(|v| v == x) {
                Ok(())
            } else {
                Err(ValidationError::UnboundSymbol(x.clone()))
            }
        }
        Term::Const(c) => {
            if t.vocabulary.has_constant(c) {
                Ok(())
            } else {
                Err(ValidationError::UnboundSymbol(c.clone()))
            }
        }
        Term::Num(_) => {
            if t.vocabulary.int_range.is_none() {
                Err(ValidationError::NoIntRange)
            } else {
                Ok(())
            }
        }
        Term::Plus(l, r) => {
            if t.vocabulary.int_range.is_none() {
                return Err(ValidationError::NoIntRange);
            }
            for side in [l, r] {
                if matches!(**side, Term::Const(_)) {
                    return Err(ValidationError::NonIntegerSum);
                }
                validate_term(side, t, scope)?;
            }
            Ok(())
        }
        Term::Elem(_) => Ok(()),
    }
}

// ---------------------------------------------------------------------------
// Printing. The printed form reparses to a structurally identical theory.

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => write!(f, "{x}"),
            Term::Const(c) => write!(f, "{c}"),
            Term::Num(n) => write!(f, "{n}"),
            Term::Plus(l, r) => {
                write!(f, "{l} + ")?;
                if matches!(**r, Term::Plus(..)) {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            Term::Elem(e) => write!(f, "{e}"),
        }
    }
}

fn fmt_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    if args.is_empty() {
        return Ok(());
    }
    write!(f, "(")?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{a}")?;
    }
    write!(f, ")")
}

// Binding strength, loosest first: => | & ~/quantifiers/atoms.
fn formula_level(f: &Formula) -> u8 {
    match f {
        Formula::Implies(..) => 0,
        Formula::Or(..) => 1,
        Formula::And(..) => 2,
        Formula::Forall(..)
        | Formula::Exists(..)
        | Formula::ForallWhere(..)
        | Formula::ExistsWhere(..) => 0,
        _ => 3,
    }
}

fn fmt_formula(f: &mut fmt::Formatter<'_>, fla: &Formula, min_level: u8) -> fmt::Result {
    let level = formula_level(fla);
    let parens = level < min_level;
    if parens {
        write!(f, "(")?;
    }
    match fla {
        Formula::True => write!(f, "true")?,
        Formula::False => write!(f, "false")?,
        Formula::Atom { pred, args } => {
            if COMPARISON_PREDS.contains(&pred.as_str()) {
                write!(f, "{} {} {}", args[0], pred, args[1])?;
            } else {
                write!(f, "{pred}")?;
                fmt_args(f, args)?;
            }
        }
        Formula::Not(g) => {
            write!(f, "~")?;
            fmt_formula(f, g, 3)?;
        }
        Formula::And(l, r) => {
            fmt_formula(f, l, 2)?;
            write!(f, " & ")?;
            fmt_formula(f, r, 3)?;
        }
        Formula::Or(l, r) => {
            fmt_formula(f, l, 1)?;
            write!(f, " | ")?;
            fmt_formula(f, r, 2)?;
        }
        Formula::Implies(l, r) => {
            fmt_formula(f, l, 1)?;
            write!(f, " => ")?;
            fmt_formula(f, r, 0)?;
        }
        Formula::Forall(x, g) => {
            write!(f, "! {x} : ")?;
            fmt_formula(f, g, 0)?;
        }
        Formula::Exists(x, g) => {
            write!(f, "? {x} : ")?;
            fmt_formula(f, g, 0)?;
        }
        Formula::ForallWhere(x, q, g) => {
            write!(f, "! {x} WHERE ")?;
            fmt_formula(f, q, 1)?;
            write!(f, " : ")?;
            fmt_formula(f, g, 0)?;
        }
        Formula::ExistsWhere(x, q, g) => {
            write!(f, "? {x} WHERE ")?;
            fmt_formula(f, q, 1)?;
            write!(f, " : ")?;
            fmt_formula(f, g, 0)?;
        }
    }
    if parens {
        write!(f, ")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_formula(f, self, 0)
    }
}

fn fmt_cee(f: &mut fmt::Formatter<'_>, cee: &Cee) -> fmt::Result {
    match cee {
        Cee::Atom { pred, args } => {
            write!(f, "{pred}")?;
            fmt_args(f, args)
        }
        Cee::If(cond, body) => {
            write!(f, "IF ")?;
            fmt_formula(f, cond, 1)?;
            write!(f, " THEN ")?;
            fmt_cee(f, body)
        }
        Cee::Cand(..) => fmt_cand_chain(f, cee),
        Cee::Cor(..) => fmt_cor_chain(f, cee),
        Cee::All(x, q, body) => {
            write!(f, "ALL {x} WHERE ")?;
            fmt_formula(f, q, 1)?;
            write!(f, " : ")?;
            fmt_cee(f, body)
        }
        Cee::Select(x, q, body) => {
            write!(f, "SELECT {x} WHERE ")?;
            fmt_formula(f, q, 1)?;
            write!(f, " : ")?;
            fmt_cee(f, body)
        }
        Cee::New(x, body) => {
            write!(f, "NEW {x} : ")?;
            fmt_cee(f, body)
        }
    }
}

fn fmt_cand_chain(f: &mut fmt::Formatter<'_>, cee: &Cee) -> fmt::Result {
    match cee {
        Cee::Cand(l, r) => {
            match **l {
                Cee::Cand(..) => fmt_cand_chain(f, l)?,
                _ => fmt_operand(f, l)?,
            }
            write!(f, " CAND ")?;
            fmt_operand(f, r)
        }
        other => fmt_operand(f, other),
    }
}

fn fmt_cor_chain(f: &mut fmt::Formatter<'_>, cee: &Cee) -> fmt::Result {
    match cee {
        Cee::Cor(l, r) => {
            match **l {
                Cee::Cor(..) => fmt_cor_chain(f, l)?,
                _ => fmt_operand(f, l)?,
            }
            write!(f, " COR ")?;
            fmt_operand(f, r)
        }
        other => fmt_operand(f, other),
    }
}

// An operand of CAND/COR: atoms stand bare, everything else is wrapped so
// the chain stays unambiguous.
fn fmt_operand(f: &mut fmt::Formatter<'_>, cee: &Cee) -> fmt::Result {
    if matches!(cee, Cee::Atom { .. }) {
        fmt_cee(f, cee)
    } else {
        write!(f, "(")?;
        fmt_cee(f, cee)?;
        write!(f, ")")
    }
}

impl fmt::Display for Cee {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_cee(f, self)
    }
}

/// Renders a theory back to source text.
pub fn print_theory(t: &Theory) -> String {
    let mut out = String::new();
    out.push_str("vocab {\n");
    for (p, a) in &t.vocabulary.predicates {
        out.push_str(&format!("    pred {p}/{a};\n"));
    }
    for c in &t.vocabulary.constants {
        out.push_str(&format!("    const {c};\n"));
    }
    if let Some((lo, hi)) = t.vocabulary.int_range {
        out.push_str(&format!("    int {lo}..{hi};\n"));
    }
    out.push_str("}\n\ntheory {\n");
    for cee in &t.cees {
        if matches!(cee, Cee::Atom { .. }) {
            out.push_str(&format!("    CEE: {cee}.\n"));
        } else {
            out.push_str(&format!("    {cee}.\n"));
        }
    }
    for s in &t.sentences {
        out.push_str(&format!("    FO: {s}.\n"));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_theory;

    #[test]
    fn classifies_effect_predicates_as_endogenous() {
        let t = parse_theory(
            "vocab { pred Applied/1; pred PermRes/1; pred Lottery/0; }
             theory { IF Lottery THEN SELECT p WHERE Applied(p) : PermRes(p). }",
        )
        .unwrap();
        let classes = t.classify_symbols();
        assert_eq!(classes["PermRes"], SymbolClass::Endogenous);
        assert_eq!(classes["Applied"], SymbolClass::Exogenous);
        assert_eq!(classes["Lottery"], SymbolClass::Exogenous);
    }

    #[test]
    fn nested_effect_atoms_count_as_endogenous() {
        let t = parse_theory(
            "vocab { pred P/0; pred Q/0; pred R/0; }
             theory { IF P THEN (Q CAND (IF Q THEN R)). }",
        )
        .unwrap();
        let classes = t.classify_symbols();
        assert_eq!(classes["Q"], SymbolClass::Endogenous);
        assert_eq!(classes["R"], SymbolClass::Endogenous);
        assert_eq!(classes["P"], SymbolClass::Exogenous);
    }

    #[test]
    fn theory_without_effects_is_all_exogenous() {
        let t = parse_theory(
            "vocab { pred P/1; } theory { FO: ! x : P(x) => P(x). }",
        )
        .unwrap();
        assert!(t.endogenous().is_empty());
    }

    #[test]
    fn desugars_restricted_quantifiers() {
        let t = parse_theory(
            "vocab { pred P/1; pred Q/1; }
             theory { FO: ! x WHERE P(x) : Q(x). FO: ? x WHERE P(x) : Q(x). }",
        )
        .unwrap();
        let forall = desugar_restricted(&t.sentences[0]);
        let exists = desugar_restricted(&t.sentences[1]);
        assert!(matches!(forall, Formula::Forall(_, ref b)
            if matches!(**b, Formula::Implies(..))));
        assert!(matches!(exists, Formula::Exists(_, ref b)
            if matches!(**b, Formula::And(..))));
    }

    #[test]
    fn desugar_is_identity_on_unrestricted_formulas() {
        let t = parse_theory(
            "vocab { pred P/1; } theory { FO: ! x : ~P(x) | P(x). }",
        )
        .unwrap();
        assert_eq!(desugar_restricted(&t.sentences[0]), t.sentences[0]);
    }

    #[test]
    fn effect_constructors_are_exactly_seven() {
        // Compile-time exhaustiveness: adding a variant breaks this match.
        fn arm_name(c: &Cee) -> &'static str {
            match c {
                Cee::Atom { .. } => "atom",
                Cee::If(..) => "if",
                Cee::Cand(..) => "cand",
                Cee::Cor(..) => "cor",
                Cee::All(..) => "all",
                Cee::Select(..) => "select",
                Cee::New(..) => "new",
            }
        }
        let atom = Cee::Atom { pred: "P".into(), args: vec![] };
        assert_eq!(arm_name(&atom), "atom");
    }

    #[test]
    fn validation_rejects_unknown_predicates() {
        let err = parse_theory("vocab { pred P/0; } theory { Q. }").unwrap_err();
        assert!(err.to_string().contains("not declared") || err.to_string().contains("Q"));
    }
}
