//! Term and formula evaluation, two-valued and three-valued.
//!
//! The three-valued evaluator follows the strong Kleene tables and is
//! monotone in precision: refining an unknown atom to a known value never
//! flips a formula between true and false. Undefined terms (sums that
//! leave the declared integer range) make their smallest enclosing atom
//! false in both evaluators.

use std::collections::BTreeSet;
use std::ops::{BitAnd, BitOr, Not};

use crate::ast::{Formula, Term, COMPARISON_PREDS};
use crate::structures::{DomainAtom, DomainElement, PartialStructure, Structure};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tri {
    False,
    Unknown,
    True,
}

impl From<bool> for Tri {
    fn from(b: bool) -> Tri {
        if b {
            Tri::True
        } else {
            Tri::False
        }
    }
}

impl Not for Tri {
    type Output = Tri;
    fn not(self) -> Tri {
        match self {
            Tri::True => Tri::False,
            Tri::False => Tri::True,
            Tri::Unknown => Tri::Unknown,
        }
    }
}

impl BitAnd for Tri {
    type Output = Tri;
    fn bitand(self, rhs: Tri) -> Tri {
        self.min(rhs)
    }
}

impl BitOr for Tri {
    type Output = Tri;
    fn bitor(self, rhs: Tri) -> Tri {
        self.max(rhs)
    }
}

/// What the evaluators need from a structure.
pub trait Interp {
    fn domain(&self) -> &BTreeSet<DomainElement>;
    fn int_range(&self) -> Option<(i64, i64)>;
    fn constant(&self, name: &str) -> Option<&DomainElement>;
    fn atom(&self, atom: &DomainAtom) -> Tri;
}

impl Interp for Structure {
    fn domain(&self) -> &BTreeSet<DomainElement> {
        &self.domain
    }
    fn int_range(&self) -> Option<(i64, i64)> {
        self.int_range
    }
    fn constant(&self, name: &str) -> Option<&DomainElement> {
        self.constants.get(name)
    }
    fn atom(&self, atom: &DomainAtom) -> Tri {
        Tri::from(self.holds(atom))
    }
}

impl Interp for PartialStructure {
    fn domain(&self) -> &BTreeSet<DomainElement> {
        &self.exo.domain
    }
    fn int_range(&self) -> Option<(i64, i64)> {
        self.exo.int_range
    }
    fn constant(&self, name: &str) -> Option<&DomainElement> {
        self.exo.constants.get(name)
    }
    fn atom(&self, atom: &DomainAtom) -> Tri {
        self.get(atom)
    }
}

/// Variable bindings; later bindings shadow earlier ones.
#[derive(Clone, Debug, Default)]
pub struct Env(Vec<(String, DomainElement)>);

impl Env {
    pub fn new() -> Env {
        Env(Vec::new())
    }

    pub fn push(&mut self, var: impl Into<String>, value: DomainElement) {
        self.0.push((var.into(), value));
    }

    pub fn pop(&mut self) {
        self.0.pop();
    }

    pub fn lookup(&self, var: &str) -> Option<&DomainElement> {
        self.0.iter().rev().find(|(v, _)| v == var).map(|(_, e)| e)
    }

    pub fn bindings(&self) -> &[(String, DomainElement)] {
        &self.0
    }
}

/// Evaluates a term; `None` means undefined (a sum left the declared range
/// or was applied to a non-integer).
pub fn eval_term(term: &Term, s: &impl Interp, env: &Env) -> Option<DomainElement> {
    match term {
        Term::Var(x) => env.lookup(x).cloned(),
        Term::Const(c) => s.constant(c).cloned(),
        Term::Num(n) => {
            let (lo, hi) = s.int_range()?;
            if *n >= lo && *n <= hi {
                Some(DomainElement::Int(*n))
            } else {
                None
            }
        }
        Term::Plus(l, r) => {
            let (lo, hi) = s.int_range()?;
            let a = eval_term(l, s, env)?.as_int()?;
            let b = eval_term(r, s, env)?.as_int()?;
            let sum = a.checked_add(b)?;
            if sum >= lo && sum <= hi {
                Some(DomainElement::Int(sum))
            } else {
                None
            }
        }
        Term::Elem(e) => Some(e.clone()),
    }
}

fn eval_comparison(pred: &str, a: &DomainElement, b: &DomainElement) -> bool {
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

/// Three-valued evaluation under the strong Kleene tables.
pub fn eval3(f: &Formula, s: &impl Interp, env: &mut Env) -> Tri {
    match f {
        Formula::True => Tri::True,
        Formula::False => Tri::False,
        Formula::Atom { pred, args } => {
            let mut elems = Vec::with_capacity(args.len());
            for a in args {
                match eval_term(a, s, env) {
                    Some(e) => elems.push(e),
                    None => return Tri::False,
                }
            }
            if COMPARISON_PREDS.contains(&pred.as_str()) {
                Tri::from(eval_comparison(pred, &elems[0], &elems[1]))
            } else {
                s.atom(&DomainAtom { pred: pred.clone(), args: elems })
            }
        }
        Formula::Not(g) => !eval3(g, s, env),
        Formula::And(l, r) => eval3(l, s, env) & eval3(r, s, env),
        Formula::Or(l, r) => eval3(l, s, env) | eval3(r, s, env),
        Formula::Implies(l, r) => !eval3(l, s, env) | eval3(r, s, env),
        Formula::Forall(x, g) => {
            let mut acc = Tri::True;
            for e in s.domain().iter() {
                env.push(x.clone(), e.clone());
                acc = acc & eval3(g, s, env);
                env.pop();
                if acc == Tri::False {
                    break;
                }
            }
            acc
        }
        Formula::Exists(x, g) => {
            let mut acc = Tri::False;
            for e in s.domain().iter() {
                env.push(x.clone(), e.clone());
                acc = acc | eval3(g, s, env);
                env.pop();
                if acc == Tri::True {
                    break;
                }
            }
            acc
        }
        Formula::ForallWhere(x, q, g) => {
            let mut acc = Tri::True;
            for e in s.domain().iter() {
                env.push(x.clone(), e.clone());
                let v = !eval3(q, s, env) | eval3(g, s, env);
                env.pop();
                acc = acc & v;
                if acc == Tri::False {
                    break;
                }
            }
            acc
        }
        Formula::ExistsWhere(x, q, g) => {
            let mut acc = Tri::False;
            for e in s.domain().iter() {
                env.push(x.clone(), e.clone());
                let v = eval3(q, s, env) & eval3(g, s, env);
                env.pop();
                acc = acc | v;
                if acc == Tri::True {
                    break;
                }
            }
            acc
        }
    }
}

/// Two-valued evaluation over a total structure.
pub fn eval2(f: &Formula, s: &Structure, env: &mut Env) -> bool {
    match eval3(f, s, env) {
        Tri::True => true,
        Tri::False => false,
        Tri::Unknown => unreachable!("two-valued evaluation over a total structure"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn small_structure() -> Structure {
        let mut domain = BTreeSet::new();
        domain.insert(DomainElement::Named("a".into()));
        domain.insert(DomainElement::Named("b".into()));
        for n in 0..=3 {
            domain.insert(DomainElement::Int(n));
        }
        let mut s = Structure {
            domain,
            int_range: Some((0, 3)),
            constants: BTreeMap::new(),
            relations: BTreeMap::new(),
        };
        s.constants.insert("c".into(), DomainElement::Named("a".into()));
        s.insert(DomainAtom::new("P", vec![DomainElement::Named("a".into())]));
        s.relations.entry("Q".into()).or_default();
        s
    }

    fn atom(pred: &str, args: Vec<Term>) -> Formula {
        Formula::Atom { pred: pred.into(), args }
    }

    #[test]
    fn term_evaluation() {
        let s = small_structure();
        let env = Env::new();
        assert_eq!(
            eval_term(&Term::Const("c".into()), &s, &env),
            Some(DomainElement::Named("a".into()))
        );
        assert_eq!(
            eval_term(
                &Term::Plus(Box::new(Term::Num(1)), Box::new(Term::Num(2))),
                &s,
                &env
            ),
            Some(DomainElement::Int(3))
        );
        assert_eq!(
            eval_term(
                &Term::Plus(Box::new(Term::Num(2)), Box::new(Term::Num(2))),
                &s,
                &env
            ),
            None
        );
    }

    #[test]
    fn undefined_terms_make_atoms_false() {
        let s = small_structure();
        let mut env = Env::new();
        let overflow = atom(
            "=",
            vec![
                Term::Plus(Box::new(Term::Num(3)), Box::new(Term::Num(3))),
                Term::Num(0),
            ],
        );
        assert_eq!(eval3(&overflow, &s, &mut env), Tri::False);
        // The negation of a false-by-undefinedness atom is true.
        assert_eq!(eval3(&Formula::Not(Box::new(overflow)), &s, &mut env), Tri::True);
    }

    #[test]
    fn comparisons_on_non_integers_are_false() {
        let s = small_structure();
        let mut env = Env::new();
        let f = atom("<", vec![Term::Const("c".into()), Term::Num(1)]);
        assert_eq!(eval3(&f, &s, &mut env), Tri::False);
        let eq = atom("=", vec![Term::Const("c".into()), Term::Const("c".into())]);
        assert_eq!(eval3(&eq, &s, &mut env), Tri::True);
    }

    #[test]
    fn two_valued_evaluation() {
        let s = small_structure();
        let mut env = Env::new();
        let named_a = atom("P", vec![Term::Const("c".into())]);
        assert!(eval2(&named_a, &s, &mut env));
        let all_q = Formula::Forall(
            "x".into(),
            Box::new(atom("Q", vec![Term::Var("x".into())])),
        );
        assert!(!eval2(&all_q, &s, &mut env));
        let some_p = Formula::Exists(
            "x".into(),
            Box::new(atom("P", vec![Term::Var("x".into())])),
        );
        assert!(eval2(&some_p, &s, &mut env));
    }

    #[test]
    fn kleene_tables() {
        use Tri::*;
        assert_eq!(True & Unknown, Unknown);
        assert_eq!(False & Unknown, False);
        assert_eq!(True | Unknown, True);
        assert_eq!(False | Unknown, Unknown);
        assert_eq!(!Unknown, Unknown);
    }

    #[test]
    fn three_valued_quantifiers_shortcut_correctly() {
        let s = small_structure();
        let endo: BTreeSet<String> = ["R".to_string()].into_iter().collect();
        let mut ps = PartialStructure::new(s, endo);
        ps.set(
            DomainAtom::new("R", vec![DomainElement::Named("a".into())]),
            Tri::Unknown,
        );
        let mut env = Env::new();
        let f = Formula::Exists(
            "x".into(),
            Box::new(atom("R", vec![Term::Var("x".into())])),
        );
        assert_eq!(eval3(&f, &ps, &mut env), Tri::Unknown);
        let g = Formula::Forall(
            "x".into(),
            Box::new(atom("R", vec![Term::Var("x".into())])),
        );
        assert_eq!(eval3(&g, &ps, &mut env), Tri::False);
    }
}
