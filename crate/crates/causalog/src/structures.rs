//! Finite structures: domains, relation interpretations, and the partial
//! (three-valued) structures the fixpoint engine refines.
//!
//! A structure interprets a vocabulary over a finite domain of named
//! elements, bounded integers, and elements created during evaluation.
//! Created elements are anonymous; two structures that differ only by a
//! renaming of created elements are considered the same model, which is
//! what [`equal_modulo_created`] decides.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::ast::{SymbolClass, Theory, Vocabulary};
use crate::eval::Tri;

/// One element of a finite domain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DomainElement {
    Named(String),
    Int(i64),
    /// Allocated by an object-creating expression; rendered `_p<n>`.
    Created(u32),
}

impl DomainElement {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            DomainElement::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn is_created(&self) -> bool {
        matches!(self, DomainElement::Created(_))
    }
}

impl fmt::Display for DomainElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainElement::Named(s) => write!(f, "{s}"),
            DomainElement::Int(n) => write!(f, "{n}"),
            DomainElement::Created(i) => write!(f, "_p{i}"),
        }
    }
}

/// A ground atom: predicate name applied to domain elements.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DomainAtom {
    pub pred: String,
    pub args: Vec<DomainElement>,
}

impl DomainAtom {
    pub fn new(pred: impl Into<String>, args: Vec<DomainElement>) -> Self {
        DomainAtom { pred: pred.into(), args }
    }
}

impl fmt::Display for DomainAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            return write!(f, "{}", self.pred);
        }
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// A total two-valued structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Structure {
    pub domain: BTreeSet<DomainElement>,
    pub int_range: Option<(i64, i64)>,
    pub constants: BTreeMap<String, DomainElement>,
    pub relations: BTreeMap<String, BTreeSet<Vec<DomainElement>>>,
}

impl Structure {
    pub fn empty(voc: &Vocabulary) -> Structure {
        let mut domain = BTreeSet::new();
        if let Some((lo, hi)) = voc.int_range {
            for n in lo..=hi {
                domain.insert(DomainElement::Int(n));
            }
        }
        Structure {
            domain,
            int_range: voc.int_range,
            constants: BTreeMap::new(),
            relations: BTreeMap::new(),
        }
    }

    pub fn holds(&self, atom: &DomainAtom) -> bool {
        self.relations
            .get(&atom.pred)
            .map(|rows| rows.contains(&atom.args))
            .unwrap_or(false)
    }

    pub fn insert(&mut self, atom: DomainAtom) {
        self.relations.entry(atom.pred).or_default().insert(atom.args);
    }

    pub fn add_element(&mut self, e: DomainElement) {
        self.domain.insert(e);
    }

    /// Indices of created elements present in the domain, ascending.
    pub fn created(&self) -> Vec<u32> {
        self.domain
            .iter()
            .filter_map(|e| match e {
                DomainElement::Created(i) => Some(*i),
                _ => None,
            })
            .collect()
    }

    /// True atoms of the given predicates, in canonical order.
    pub fn true_atoms(&self, preds: &BTreeSet<String>) -> Vec<DomainAtom> {
        let mut out = Vec::new();
        for (pred, rows) in &self.relations {
            if preds.contains(pred) {
                for row in rows {
                    out.push(DomainAtom::new(pred.clone(), row.clone()));
                }
            }
        }
        out
    }
}

/// A three-valued structure: exogenous part fixed, endogenous atoms graded.
///
/// Atoms absent from `atoms` are false; the fixpoint engine seeds the atoms
/// it may still derive with [`Tri::Unknown`] and refines from there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialStructure {
    pub exo: Structure,
    pub endo_preds: BTreeSet<String>,
    pub atoms: BTreeMap<DomainAtom, Tri>,
}

impl PartialStructure {
    pub fn new(exo: Structure, endo_preds: BTreeSet<String>) -> Self {
        PartialStructure { exo, endo_preds, atoms: BTreeMap::new() }
    }

    pub fn get(&self, atom: &DomainAtom) -> Tri {
        if self.endo_preds.contains(&atom.pred) {
            self.atoms.get(atom).copied().unwrap_or(Tri::False)
        } else {
            Tri::from(self.exo.holds(atom))
        }
    }

    pub fn set(&mut self, atom: DomainAtom, value: Tri) {
        self.atoms.insert(atom, value);
    }

    pub fn is_total(&self) -> bool {
        !self.atoms.values().any(|v| *v == Tri::Unknown)
    }

    pub fn unknown_atoms(&self) -> Vec<DomainAtom> {
        self.atoms
            .iter()
            .filter(|(_, v)| **v == Tri::Unknown)
            .map(|(a, _)| a.clone())
            .collect()
    }

    /// Projects a total partial structure down to a two-valued one.
    pub fn project(&self) -> Option<Structure> {
        if !self.is_total() {
            return None;
        }
        let mut s = self.exo.clone();
        for p in &self.endo_preds {
            s.relations.entry(p.clone()).or_default();
        }
        for (atom, v) in &self.atoms {
            if *v == Tri::True {
                s.insert(atom.clone());
            }
        }
        Some(s)
    }

    /// Lifts a total structure back into a partial one with no unknowns.
    pub fn from_total(s: &Structure, endo_preds: &BTreeSet<String>) -> PartialStructure {
        let mut exo = s.clone();
        let mut atoms = BTreeMap::new();
        for p in endo_preds {
            if let Some(rows) = exo.relations.remove(p) {
                for row in rows {
                    atoms.insert(DomainAtom::new(p.clone(), row), Tri::True);
                }
            }
            exo.relations.insert(p.clone(), BTreeSet::new());
        }
        PartialStructure { exo, endo_preds: endo_preds.clone(), atoms }
    }
}

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("structure file is not a JSON object")]
    NotAnObject,
    #[error("bad value for {key}: {detail}")]
    BadValue { key: String, detail: String },
    #[error("unknown symbol in structure: {0}")]
    UnknownSymbol(String),
    #[error("symbol {0} is endogenous and may not be interpreted by the input")]
    EndogenousInput(String),
    #[error("element {0} is outside the declared domain")]
    OutsideDomain(String),
    #[error("int range {found:?} falls outside the declared range {declared:?}")]
    RangeMismatch { declared: (i64, i64), found: (i64, i64) },
    #[error("constant {0} is not interpreted and names no domain element")]
    UnboundConstant(String),
    #[error("domain name {0} is reserved or malformed")]
    BadDomainName(String),
}

fn element_from_json(
    v: &Value,
    domain: &BTreeSet<DomainElement>,
    key: &str,
) -> Result<DomainElement, StructureError> {
    let el = match v {
        Value::String(s) => {
            if let Some(rest) = s.strip_prefix("_p") {
                match rest.parse::<u32>() {
                    Ok(i) => DomainElement::Created(i),
                    Err(_) => DomainElement::Named(s.clone()),
                }
            } else {
                DomainElement::Named(s.clone())
            }
        }
        Value::Number(n) => match n.as_i64() {
            Some(i) => DomainElement::Int(i),
            None => {
                return Err(StructureError::BadValue {
                    key: key.to_string(),
                    detail: format!("non-integer number {n}"),
                })
            }
        },
        other => {
            return Err(StructureError::BadValue {
                key: key.to_string(),
                detail: format!("expected element, found {other}"),
            })
        }
    };
    if !domain.contains(&el) {
        return Err(StructureError::OutsideDomain(el.to_string()));
    }
    Ok(el)
}

fn parse_structure(
    source: &str,
    voc: &Vocabulary,
    forbidden_preds: &BTreeSet<String>,
    allow_created: bool,
) -> Result<Structure, StructureError> {
    let root: Value =
        serde_json::from_str(source).map_err(|e| StructureError::BadValue {
            key: "<root>".to_string(),
            detail: e.to_string(),
        })?;
    let obj = root.as_object().ok_or(StructureError::NotAnObject)?;

    let mut domain: BTreeSet<DomainElement> = BTreeSet::new();

    if let Some(names) = obj.get("domain") {
        let arr = names.as_array().ok_or_else(|| StructureError::BadValue {
            key: "domain".to_string(),
            detail: "expected an array of names".to_string(),
        })?;
        for n in arr {
            let s = n.as_str().ok_or_else(|| StructureError::BadValue {
                key: "domain".to_string(),
                detail: format!("expected string, found {n}"),
            })?;
            if s.is_empty() || s.starts_with("_p") || s.chars().all(|c| c.is_ascii_digit()) {
                return Err(StructureError::BadDomainName(s.to_string()));
            }
            domain.insert(DomainElement::Named(s.to_string()));
        }
    }

    let mut int_range = voc.int_range;
    if let Some(r) = obj.get("int") {
        let pair = r
            .as_array()
            .and_then(|a| {
                if a.len() == 2 {
                    Some((a[0].as_i64()?, a[1].as_i64()?))
                } else {
                    None
                }
            })
            .ok_or_else(|| StructureError::BadValue {
                key: "int".to_string(),
                detail: "expected [lo, hi]".to_string(),
            })?;
        // The vocabulary declares the widest range the theory is written
        // for; the input may interpret a sub-range of it.
        match voc.int_range {
            Some(declared) if pair.0 < declared.0 || declared.1 < pair.1 => {
                return Err(StructureError::RangeMismatch { declared, found: pair })
            }
            _ => int_range = Some(pair),
        }
    }
    if let Some((lo, hi)) = int_range {
        for n in lo..=hi {
            domain.insert(DomainElement::Int(n));
        }
    }

    if let Some(c) = obj.get("created") {
        let arr = c.as_array().ok_or_else(|| StructureError::BadValue {
            key: "created".to_string(),
            detail: "expected an array".to_string(),
        })?;
        if !allow_created && !arr.is_empty() {
            return Err(StructureError::BadValue {
                key: "created".to_string(),
                detail: "input structures may not contain created elements".to_string(),
            });
        }
        for n in arr {
            let s = n.as_str().unwrap_or("");
            let idx = s
                .strip_prefix("_p")
                .and_then(|r| r.parse::<u32>().ok())
                .ok_or_else(|| StructureError::BadValue {
                    key: "created".to_string(),
                    detail: format!("expected _p<n>, found {n}"),
                })?;
            domain.insert(DomainElement::Created(idx));
        }
    }

    // Constants denote the same-named element and pull it into the domain.
    let mut constants = BTreeMap::new();
    for c in &voc.constants {
        let el = match obj.get(c.as_str()) {
            Some(v) => element_from_json(v, &domain, c)?,
            None => {
                let el = DomainElement::Named(c.clone());
                domain.insert(el.clone());
                el
            }
        };
        constants.insert(c.clone(), el);
    }

    let mut relations: BTreeMap<String, BTreeSet<Vec<DomainElement>>> = BTreeMap::new();
    for (key, value) in obj {
        if key == "domain" || key == "int" || key == "created" || voc.has_constant(key) {
            continue;
        }
        let arity = match voc.pred_arity(key) {
            Some(a) => a,
            None => return Err(StructureError::UnknownSymbol(key.clone())),
        };
        if forbidden_preds.contains(key) {
            return Err(StructureError::EndogenousInput(key.clone()));
        }
        let mut rows = BTreeSet::new();
        match value {
            Value::Bool(b) if arity == 0 => {
                if *b {
                    rows.insert(Vec::new());
                }
            }
            Value::Array(tuples) => {
                for t in tuples {
                    let tup = t.as_array().ok_or_else(|| StructureError::BadValue {
                        key: key.clone(),
                        detail: format!("expected tuple array, found {t}"),
                    })?;
                    if tup.len() != arity {
                        return Err(StructureError::BadValue {
                            key: key.clone(),
                            detail: format!("tuple arity {} does not match /{arity}", tup.len()),
                        });
                    }
                    let row = tup
                        .iter()
                        .map(|v| element_from_json(v, &domain, key))
                        .collect::<Result<Vec<_>, _>>()?;
                    rows.insert(row);
                }
            }
            other => {
                return Err(StructureError::BadValue {
                    key: key.clone(),
                    detail: format!("expected relation rows, found {other}"),
                })
            }
        }
        relations.insert(key.clone(), rows);
    }

    Ok(Structure { domain, int_range, constants, relations })
}

/// Loads the exogenous part of a structure from JSON source.
///
/// Only exogenous symbols may be interpreted; unmentioned exogenous
/// predicates default to empty relations.
pub fn load_structure(source: &str, theory: &Theory) -> Result<Structure, StructureError> {
    let classes = theory.classify_symbols();
    let endo: BTreeSet<String> = classes
        .iter()
        .filter(|(_, c)| **c == SymbolClass::Endogenous)
        .map(|(p, _)| p.clone())
        .collect();
    let mut s = parse_structure(source, &theory.vocabulary, &endo, false)?;
    for (pred, _) in &theory.vocabulary.predicates {
        if !endo.contains(pred) {
            s.relations.entry(pred.clone()).or_default();
        }
    }
    Ok(s)
}

/// Loads a full candidate model (endogenous relations and created elements
/// included) from JSON source.
pub fn load_model(source: &str, theory: &Theory) -> Result<Structure, StructureError> {
    let mut s = parse_structure(source, &theory.vocabulary, &BTreeSet::new(), true)?;
    for (pred, _) in &theory.vocabulary.predicates {
        s.relations.entry(pred.clone()).or_default();
    }
    Ok(s)
}

/// The starting point of every evaluation: exogenous part as given, every
/// endogenous relation empty (all endogenous atoms at their default).
pub fn default_extension(exo: &Structure, theory: &Theory) -> Structure {
    let mut s = exo.clone();
    for (pred, _) in &theory.vocabulary.predicates {
        s.relations.entry(pred.clone()).or_default();
    }
    s
}

fn element_to_json(e: &DomainElement) -> Value {
    match e {
        DomainElement::Named(s) => json!(s),
        DomainElement::Int(n) => json!(n),
        DomainElement::Created(i) => json!(format!("_p{i}")),
    }
}

/// The exogenous input a structure extends: created elements dropped,
/// endogenous relations removed.
pub fn exogenous_part(m: &Structure, theory: &Theory) -> Structure {
    let endo = theory.endogenous();
    Structure {
        domain: m.domain.iter().filter(|e| !e.is_created()).cloned().collect(),
        int_range: m.int_range,
        constants: m.constants.clone(),
        relations: m
            .relations
            .iter()
            .filter(|(p, _)| !endo.contains(*p))
            .map(|(p, rows)| (p.clone(), rows.clone()))
            .collect(),
    }
}

/// Serializes a structure to the canonical JSON object form.
pub fn structure_to_json(s: &Structure) -> Value {
    let mut obj = Map::new();
    let named: Vec<Value> = s
        .domain
        .iter()
        .filter_map(|e| match e {
            DomainElement::Named(n) => Some(json!(n)),
            _ => None,
        })
        .collect();
    obj.insert("domain".to_string(), Value::Array(named));
    if let Some((lo, hi)) = s.int_range {
        obj.insert("int".to_string(), json!([lo, hi]));
    }
    let created: Vec<Value> = s
        .created()
        .iter()
        .map(|i| json!(format!("_p{i}")))
        .collect();
    obj.insert("created".to_string(), Value::Array(created));
    for (c, e) in &s.constants {
        obj.insert(c.clone(), element_to_json(e));
    }
    for (pred, rows) in &s.relations {
        if rows.iter().any(|r| r.is_empty()) {
            obj.insert(pred.clone(), json!(true));
        } else {
            let tuples: Vec<Value> = rows
                .iter()
                .map(|r| Value::Array(r.iter().map(element_to_json).collect()))
                .collect();
            obj.insert(pred.clone(), Value::Array(tuples));
        }
    }
    Value::Object(obj)
}

/// Renames created elements to the permutation giving the least
/// serialization, producing the canonical representative of the
/// structure's isomorphism class.
pub fn canonicalize(s: &Structure) -> Structure {
    let created = s.created();
    let targets: Vec<u32> = (1..=created.len() as u32).collect();
    if created.len() <= 1 {
        return rename_created(s, &created, &targets);
    }
    let mut best: Option<(String, Structure)> = None;
    for perm in permutations(&created) {
        let renamed = rename_created(s, &perm, &targets);
        let text = structure_to_json(&renamed).to_string();
        if best.as_ref().map(|(b, _)| text < *b).unwrap_or(true) {
            best = Some((text, renamed));
        }
    }
    best.unwrap().1
}

/// Canonical byte form of a structure: created elements renamed to the
/// lexicographically least serialization.
pub fn canonical_string(s: &Structure) -> String {
    structure_to_json(&canonicalize(s)).to_string()
}

fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, x) in items.iter().enumerate() {
        let mut rest: Vec<u32> = items.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, *x);
            out.push(tail);
        }
    }
    out
}

fn rename_created(s: &Structure, from: &[u32], to: &[u32]) -> Structure {
    let map: BTreeMap<u32, u32> = from.iter().copied().zip(to.iter().copied()).collect();
    let ren = |e: &DomainElement| match e {
        DomainElement::Created(i) => DomainElement::Created(*map.get(i).unwrap_or(i)),
        other => other.clone(),
    };
    Structure {
        domain: s.domain.iter().map(&ren).collect(),
        int_range: s.int_range,
        constants: s.constants.iter().map(|(k, v)| (k.clone(), ren(v))).collect(),
        relations: s
            .relations
            .iter()
            .map(|(p, rows)| {
                (p.clone(), rows.iter().map(|r| r.iter().map(&ren).collect()).collect())
            })
            .collect(),
    }
}

/// Decides whether two structures are equal up to a renaming of their
/// anonymous elements, ignoring the `aux` predicates.
///
/// The renaming may move created elements and any element named by the
/// first argument of an `aux` relation row; every other element must map
/// to itself. This makes the check usable both for plain model
/// deduplication (`aux` empty: bijection between created elements only)
/// and for comparing a theory against its creation-free rewrite, where
/// auxiliary predicates mark the stand-in element they apply to in their
/// first argument and may carry ordinary elements in the rest.
pub fn equal_modulo_created(
    m1: &Structure,
    m2: &Structure,
    aux: &BTreeSet<String>,
) -> bool {
    let strip = |s: &Structure| {
        let mut t = s.clone();
        for p in aux {
            t.relations.remove(p);
        }
        t
    };
    let marked = |s: &Structure| -> BTreeSet<DomainElement> {
        let mut out: BTreeSet<DomainElement> =
            s.domain.iter().filter(|e| e.is_created()).cloned().collect();
        for p in aux {
            if let Some(rows) = s.relations.get(p) {
                for row in rows {
                    out.extend(row.first().cloned());
                }
            }
        }
        out
    };

    let a: Vec<DomainElement> = marked(m1).into_iter().collect();
    let b: Vec<DomainElement> = marked(m2).into_iter().collect();
    if a.len() != b.len() || a.len() > 8 {
        return a.len() == b.len() && a.is_empty() && strip(m1) == strip(m2);
    }

    let fixed1: BTreeSet<_> = m1.domain.iter().filter(|e| !a.contains(e)).cloned().collect();
    let fixed2: BTreeSet<_> = m2.domain.iter().filter(|e| !b.contains(e)).cloned().collect();
    if fixed1 != fixed2 {
        return false;
    }

    let s1 = strip(m1);
    let s2 = strip(m2);
    if a.is_empty() {
        return s1 == s2;
    }

    for perm in permute_elements(&b) {
        let map: BTreeMap<&DomainElement, &DomainElement> =
            a.iter().zip(perm.iter()).collect();
        if apply_renaming(&s1, &map) == s2 {
            return true;
        }
    }
    false
}

fn permute_elements(items: &[DomainElement]) -> Vec<Vec<DomainElement>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, x) in items.iter().enumerate() {
        let mut rest: Vec<DomainElement> = items.to_vec();
        rest.remove(i);
        for mut tail in permute_elements(&rest) {
            tail.insert(0, x.clone());
            out.push(tail);
        }
    }
    out
}

fn apply_renaming(
    s: &Structure,
    map: &BTreeMap<&DomainElement, &DomainElement>,
) -> Structure {
    let ren = |e: &DomainElement| map.get(e).map(|t| (*t).clone()).unwrap_or_else(|| e.clone());
    Structure {
        domain: s.domain.iter().map(&ren).collect(),
        int_range: s.int_range,
        constants: s.constants.iter().map(|(k, v)| (k.clone(), ren(v))).collect(),
        relations: s
            .relations
            .iter()
            .map(|(p, rows)| {
                (p.clone(), rows.iter().map(|r| r.iter().map(&ren).collect()).collect())
            })
            .collect(),
    }
}
