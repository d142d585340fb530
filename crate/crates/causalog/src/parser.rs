//! Lexer and recursive-descent parser for theory files.
//!
//! A file is a `vocab { ... }` block followed by an optional
//! `theory { ... }` block whose statements are `.`-terminated effect
//! expressions or first-order sentences. Effect keywords (`ALL`, `SELECT`,
//! `NEW`, `IF`, `CAND`, `COR`) disambiguate the two; a bare atom statement
//! is read as a sentence unless prefixed with `CEE:`.
//!
//! Grammar notes:
//! - `CAND` and `COR` may not be mixed without parentheses.
//! - A quantifier body extends as far right as possible, so a quantified
//!   operand inside a chain must be parenthesized unless it is last.
//! - `ALL x, y WHERE q : C` sugars to nested binders with the
//!   qualification attached to the innermost one; same for `SELECT`,
//!   `NEW`, `!`, and `?`.
//! - Sums are left-associative chains over integer terms; terms take no
//!   parentheses.

use std::fmt;

use thiserror::Error;

use crate::ast::{
    validate_theory, Cee, Formula, Term, Theory, ValidationError, Vocabulary,
};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(i64),
    KwVocab,
    KwTheory,
    KwPred,
    KwConst,
    KwInt,
    KwAll,
    KwSelect,
    KwNew,
    KwIf,
    KwThen,
    KwCand,
    KwCor,
    KwWhere,
    KwTrue,
    KwFalse,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Slash,
    Semi,
    Dot,
    DotDot,
    Comma,
    Colon,
    Amp,
    Pipe,
    Tilde,
    Arrow,
    Bang,
    Question,
    Plus,
    Minus,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Neq,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Num(n) => return write!(f, "number `{n}`"),
            Tok::KwVocab => "vocab",
            Tok::KwTheory => "theory",
            Tok::KwPred => "pred",
            Tok::KwConst => "const",
            Tok::KwInt => "int",
            Tok::KwAll => "ALL",
            Tok::KwSelect => "SELECT",
            Tok::KwNew => "NEW",
            Tok::KwIf => "IF",
            Tok::KwThen => "THEN",
            Tok::KwCand => "CAND",
            Tok::KwCor => "COR",
            Tok::KwWhere => "WHERE",
            Tok::KwTrue => "true",
            Tok::KwFalse => "false",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Slash => "/",
            Tok::Semi => ";",
            Tok::Dot => ".",
            Tok::DotDot => "..",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Tilde => "~",
            Tok::Arrow => "=>",
            Tok::Bang => "!",
            Tok::Question => "?",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Le => "=<",
            Tok::Ge => ">=",
            Tok::Eq => "=",
            Tok::Neq => "~=",
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: u32,
    col: u32,
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{line}:{col}: expected {expected}, found {found}")]
    UnexpectedToken { expected: String, found: String, line: u32, col: u32 },
    #[error("{line}:{col}: {message}")]
    Syntax { message: String, line: u32, col: u32 },
    #[error("unexpected end of input")]
    UnexpectedEof,
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

pub type ParseResult<T> = Result<T, ParseError>;

fn lex(source: &str) -> ParseResult<Vec<Spanned>> {
    let mut toks = Vec::new();
    let mut chars = source.chars().peekable();
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else if c.is_some() {
                col += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                bump!();
            }
            '/' => {
                bump!();
                if chars.peek() == Some(&'/') {
                    while let Some(&n) = chars.peek() {
                        if n == '\n' {
                            break;
                        }
                        bump!();
                    }
                } else {
                    toks.push(Spanned { tok: Tok::Slash, line: tline, col: tcol });
                }
            }
            '{' | '}' | '(' | ')' | ';' | ',' | ':' | '&' | '|' | '!' | '?' | '+' | '-'
            | '<' | '>' => {
                bump!();
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    ':' => Tok::Colon,
                    '&' => Tok::Amp,
                    '|' => Tok::Pipe,
                    '!' => Tok::Bang,
                    '?' => Tok::Question,
                    '+' => Tok::Plus,
                    '-' => Tok::Minus,
                    '<' => Tok::Lt,
                    '>' => {
                        if chars.peek() == Some(&'=') {
                            bump!();
                            Tok::Ge
                        } else {
                            Tok::Gt
                        }
                    }
                    _ => unreachable!(),
                };
                toks.push(Spanned { tok, line: tline, col: tcol });
            }
            '.' => {
                bump!();
                if chars.peek() == Some(&'.') {
                    bump!();
                    toks.push(Spanned { tok: Tok::DotDot, line: tline, col: tcol });
                } else {
                    toks.push(Spanned { tok: Tok::Dot, line: tline, col: tcol });
                }
            }
            '~' => {
                bump!();
                if chars.peek() == Some(&'=') {
                    bump!();
                    toks.push(Spanned { tok: Tok::Neq, line: tline, col: tcol });
                } else {
                    toks.push(Spanned { tok: Tok::Tilde, line: tline, col: tcol });
                }
            }
            '=' => {
                bump!();
                match chars.peek() {
                    Some('>') => {
                        bump!();
                        toks.push(Spanned { tok: Tok::Arrow, line: tline, col: tcol });
                    }
                    Some('<') => {
                        bump!();
                        toks.push(Spanned { tok: Tok::Le, line: tline, col: tcol });
                    }
                    _ => toks.push(Spanned { tok: Tok::Eq, line: tline, col: tcol }),
                }
            }
            '0'..='9' => {
                let mut n: i64 = 0;
                while let Some(&d) = chars.peek() {
                    if let Some(v) = d.to_digit(10) {
                        bump!();
                        n = n
                            .checked_mul(10)
                            .and_then(|m| m.checked_add(v as i64))
                            .ok_or(ParseError::Syntax {
                                message: "integer literal overflows".to_string(),
                                line: tline,
                                col: tcol,
                            })?;
                    } else {
                        break;
                    }
                }
                toks.push(Spanned { tok: Tok::Num(n), line: tline, col: tcol });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() || d == '_' {
                        word.push(d);
                        bump!();
                    } else {
                        break;
                    }
                }
                let tok = match word.as_str() {
                    "vocab" => Tok::KwVocab,
                    "theory" => Tok::KwTheory,
                    "pred" => Tok::KwPred,
                    "const" => Tok::KwConst,
                    "int" => Tok::KwInt,
                    "ALL" => Tok::KwAll,
                    "SELECT" => Tok::KwSelect,
                    "NEW" => Tok::KwNew,
                    "IF" => Tok::KwIf,
                    "THEN" => Tok::KwThen,
                    "CAND" => Tok::KwCand,
                    "COR" => Tok::KwCor,
                    "WHERE" => Tok::KwWhere,
                    "true" => Tok::KwTrue,
                    "false" => Tok::KwFalse,
                    _ => Tok::Ident(word),
                };
                toks.push(Spanned { tok, line: tline, col: tcol });
            }
            other => {
                return Err(ParseError::Syntax {
                    message: format!("unexpected character `{other}`"),
                    line: tline,
                    col: tcol,
                })
            }
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    scope: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|s| &s.tok)
    }

    fn here(&self) -> (u32, u32) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|s| (s.line, s.col))
            .unwrap_or((0, 0))
    }

    fn next(&mut self) -> ParseResult<Spanned> {
        let s = self.toks.get(self.pos).cloned().ok_or(ParseError::UnexpectedEof)?;
        self.pos += 1;
        Ok(s)
    }

    fn expect(&mut self, want: Tok) -> ParseResult<()> {
        match self.toks.get(self.pos) {
            Some(s) if s.tok == want => {
                self.pos += 1;
                Ok(())
            }
            Some(s) => Err(ParseError::UnexpectedToken {
                expected: want.to_string(),
                found: s.tok.to_string(),
                line: s.line,
                col: s.col,
            }),
            None => Err(ParseError::UnexpectedEof),
        }
    }

    fn expect_ident(&mut self, what: &str) -> ParseResult<String> {
        match self.toks.get(self.pos).cloned() {
            Some(Spanned { tok: Tok::Ident(s), .. }) => {
                self.pos += 1;
                Ok(s)
            }
            Some(s) => Err(ParseError::UnexpectedToken {
                expected: what.to_string(),
                found: s.tok.to_string(),
                line: s.line,
                col: s.col,
            }),
            None => Err(ParseError::UnexpectedEof),
        }
    }

    fn expect_num(&mut self) -> ParseResult<i64> {
        let neg = self.peek() == Some(&Tok::Minus);
        if neg {
            self.pos += 1;
        }
        match self.toks.get(self.pos).cloned() {
            Some(Spanned { tok: Tok::Num(n), .. }) => {
                self.pos += 1;
                Ok(if neg { -n } else { n })
            }
            Some(s) => Err(ParseError::UnexpectedToken {
                expected: "number".to_string(),
                found: s.tok.to_string(),
                line: s.line,
                col: s.col,
            }),
            None => Err(ParseError::UnexpectedEof),
        }
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax { message: message.into(), line, col }
    }

    // -- vocabulary ---------------------------------------------------------

    fn vocabulary(&mut self) -> ParseResult<Vocabulary> {
        self.expect(Tok::KwVocab)?;
        self.expect(Tok::LBrace)?;
        let mut voc = Vocabulary::default();
        loop {
            match self.peek() {
                Some(Tok::RBrace) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::KwPred) => {
                    self.pos += 1;
                    let name = self.expect_ident("predicate name")?;
                    self.expect(Tok::Slash)?;
                    let arity = self.expect_num()?;
                    if arity < 0 {
                        return Err(self.syntax("negative arity"));
                    }
                    self.expect(Tok::Semi)?;
                    voc.predicates.push((name, arity as usize));
                }
                Some(Tok::KwConst) => {
                    self.pos += 1;
                    let name = self.expect_ident("constant name")?;
                    self.expect(Tok::Semi)?;
                    voc.constants.push(name);
                }
                Some(Tok::KwInt) => {
                    self.pos += 1;
                    let lo = self.expect_num()?;
                    self.expect(Tok::DotDot)?;
                    let hi = self.expect_num()?;
                    self.expect(Tok::Semi)?;
                    if voc.int_range.is_some() {
                        return Err(self.syntax("int range declared twice"));
                    }
                    voc.int_range = Some((lo, hi));
                }
                Some(_) => {
                    let s = self.next()?;
                    return Err(ParseError::UnexpectedToken {
                        expected: "`pred`, `const`, `int`, or `}`".to_string(),
                        found: s.tok.to_string(),
                        line: s.line,
                        col: s.col,
                    });
                }
                None => return Err(ParseError::UnexpectedEof),
            }
        }
        Ok(voc)
    }

    // -- statements ---------------------------------------------------------

    /// True when a token can only occur in an effect expression.
    fn statement_is_cee(&self) -> bool {
        let mut depth = 0usize;
        for s in &self.toks[self.pos..] {
            match s.tok {
                Tok::LParen => depth += 1,
                Tok::RParen => depth = depth.saturating_sub(1),
                Tok::Dot if depth == 0 => return false,
                Tok::KwAll
                | Tok::KwSelect
                | Tok::KwNew
                | Tok::KwIf
                | Tok::KwThen
                | Tok::KwCand
                | Tok::KwCor => return true,
                _ => {}
            }
        }
        false
    }

    fn theory_body(&mut self, voc: Vocabulary) -> ParseResult<Theory> {
        let mut cees = Vec::new();
        let mut sentences = Vec::new();
        self.expect(Tok::LBrace)?;
        loop {
            match self.peek() {
                Some(Tok::RBrace) => {
                    self.pos += 1;
                    break;
                }
                Some(Tok::Ident(s)) if s == "CEE" && self.peek2() == Some(&Tok::Colon) => {
                    self.pos += 2;
                    cees.push(self.cee()?);
                    self.expect(Tok::Dot)?;
                }
                Some(Tok::Ident(s)) if s == "FO" && self.peek2() == Some(&Tok::Colon) => {
                    self.pos += 2;
                    sentences.push(self.formula()?);
                    self.expect(Tok::Dot)?;
                }
                Some(_) => {
                    if self.statement_is_cee() {
                        cees.push(self.cee()?);
                    } else {
                        sentences.push(self.formula()?);
                    }
                    self.expect(Tok::Dot)?;
                }
                None => return Err(ParseError::UnexpectedEof),
            }
        }
        Ok(Theory { vocabulary: voc, cees, sentences })
    }

    // -- effect expressions -------------------------------------------------

    fn binder_vars(&mut self) -> ParseResult<Vec<String>> {
        let mut vars = vec![self.expect_ident("variable")?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            vars.push(self.expect_ident("variable")?);
        }
        Ok(vars)
    }

    fn cee(&mut self) -> ParseResult<Cee> {
        match self.peek() {
            Some(Tok::KwAll) => {
                self.pos += 1;
                self.binder_cee(true)
            }
            Some(Tok::KwSelect) => {
                self.pos += 1;
                self.binder_cee(false)
            }
            Some(Tok::KwNew) => {
                self.pos += 1;
                let vars = self.binder_vars()?;
                self.expect(Tok::Colon)?;
                for v in &vars {
                    self.scope.push(v.clone());
                }
                let body = self.cee();
                for _ in &vars {
                    self.scope.pop();
                }
                let mut out = body?;
                for v in vars.into_iter().rev() {
                    out = Cee::New(v, Box::new(out));
                }
                Ok(out)
            }
            Some(Tok::KwIf) => {
                self.pos += 1;
                let cond = self.formula()?;
                self.expect(Tok::KwThen)?;
                let body = self.cee()?;
                Ok(Cee::If(cond, Box::new(body)))
            }
            _ => self.cee_chain(),
        }
    }

    /// `ALL`/`SELECT` binders: multiple variables share one `WHERE` clause,
    /// which attaches to the innermost binder.
    fn binder_cee(&mut self, is_all: bool) -> ParseResult<Cee> {
        let vars = self.binder_vars()?;
        self.expect(Tok::KwWhere)?;
        for v in &vars {
            self.scope.push(v.clone());
        }
        let qual = self.where_clause();
        let body = qual.and_then(|q| {
            self.expect(Tok::Colon)?;
            Ok((q, self.cee()?))
        });
        for _ in &vars {
            self.scope.pop();
        }
        let (qual, body) = body?;
        let mut out = if is_all {
            Cee::All(vars.last().unwrap().clone(), qual, Box::new(body))
        } else {
            Cee::Select(vars.last().unwrap().clone(), qual, Box::new(body))
        };
        for v in vars.iter().rev().skip(1) {
            out = if is_all {
                Cee::All(v.clone(), Formula::True, Box::new(out))
            } else {
                Cee::Select(v.clone(), Formula::True, Box::new(out))
            };
        }
        Ok(out)
    }

    fn cee_chain(&mut self) -> ParseResult<Cee> {
        let first = self.cee_primary()?;
        match self.peek() {
            Some(Tok::KwCand) => {
                let mut acc = first;
                while self.peek() == Some(&Tok::KwCand) {
                    self.pos += 1;
                    let rhs = if matches!(
                        self.peek(),
                        Some(Tok::KwAll | Tok::KwSelect | Tok::KwNew | Tok::KwIf)
                    ) {
                        self.cee()?
                    } else {
                        self.cee_primary()?
                    };
                    acc = Cee::Cand(Box::new(acc), Box::new(rhs));
                }
                if self.peek() == Some(&Tok::KwCor) {
                    return Err(self.syntax(
                        "CAND and COR may not be mixed without parentheses",
                    ));
                }
                Ok(acc)
            }
            Some(Tok::KwCor) => {
                let mut acc = first;
                while self.peek() == Some(&Tok::KwCor) {
                    self.pos += 1;
                    let rhs = if matches!(
                        self.peek(),
                        Some(Tok::KwAll | Tok::KwSelect | Tok::KwNew | Tok::KwIf)
                    ) {
                        self.cee()?
                    } else {
                        self.cee_primary()?
                    };
                    acc = Cee::Cor(Box::new(acc), Box::new(rhs));
                }
                if self.peek() == Some(&Tok::KwCand) {
                    return Err(self.syntax(
                        "CAND and COR may not be mixed without parentheses",
                    ));
                }
                Ok(acc)
            }
            _ => Ok(first),
        }
    }

    fn cee_primary(&mut self) -> ParseResult<Cee> {
        match self.peek() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.cee()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(_)) => {
                let pred = self.expect_ident("predicate")?;
                let args = self.maybe_args()?;
                Ok(Cee::Atom { pred, args })
            }
            Some(other) => {
                let found = other.to_string();
                let (line, col) = self.here();
                Err(ParseError::UnexpectedToken {
                    expected: "effect expression".to_string(),
                    found,
                    line,
                    col,
                })
            }
            None => Err(ParseError::UnexpectedEof),
        }
    }

    fn maybe_args(&mut self) -> ParseResult<Vec<Term>> {
        if self.peek() != Some(&Tok::LParen) {
            return Ok(Vec::new());
        }
        self.pos += 1;
        let mut args = vec![self.term()?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    // -- formulas -----------------------------------------------------------

    fn formula(&mut self) -> ParseResult<Formula> {
        let lhs = self.formula_or()?;
        if self.peek() == Some(&Tok::Arrow) {
            self.pos += 1;
            let rhs = self.formula()?;
            Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)))
        } else {
            Ok(lhs)
        }
    }

    /// Qualifications stop below `=>` so the following `:` stays unambiguous.
    fn where_clause(&mut self) -> ParseResult<Formula> {
        self.formula_or()
    }

    fn formula_or(&mut self) -> ParseResult<Formula> {
        let mut acc = self.formula_and()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let rhs = self.formula_and()?;
            acc = Formula::Or(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn formula_and(&mut self) -> ParseResult<Formula> {
        let mut acc = self.formula_unary()?;
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            let rhs = self.formula_unary()?;
            acc = Formula::And(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn formula_unary(&mut self) -> ParseResult<Formula> {
        match self.peek() {
            Some(Tok::Tilde) => {
                self.pos += 1;
                let inner = self.formula_unary()?;
                Ok(Formula::Not(Box::new(inner)))
            }
            Some(Tok::Bang) => {
                self.pos += 1;
                self.quantified(true)
            }
            Some(Tok::Question) => {
                self.pos += 1;
                self.quantified(false)
            }
            Some(Tok::KwTrue) => {
                self.pos += 1;
                Ok(Formula::True)
            }
            Some(Tok::KwFalse) => {
                self.pos += 1;
                Ok(Formula::False)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            _ => self.atom_or_comparison(),
        }
    }

    fn quantified(&mut self, universal: bool) -> ParseResult<Formula> {
        let vars = self.binder_vars()?;
        let qual = if self.peek() == Some(&Tok::KwWhere) {
            self.pos += 1;
            for v in &vars {
                self.scope.push(v.clone());
            }
            let q = self.where_clause();
            for _ in &vars {
                self.scope.pop();
            }
            Some(q?)
        } else {
            None
        };
        self.expect(Tok::Colon)?;
        for v in &vars {
            self.scope.push(v.clone());
        }
        let body = self.formula();
        for _ in &vars {
            self.scope.pop();
        }
        let body = body?;
        let innermost = vars.last().unwrap().clone();
        let mut out = match (universal, qual) {
            (true, Some(q)) => Formula::ForallWhere(innermost, Box::new(q), Box::new(body)),
            (true, None) => Formula::Forall(innermost, Box::new(body)),
            (false, Some(q)) => Formula::ExistsWhere(innermost, Box::new(q), Box::new(body)),
            (false, None) => Formula::Exists(innermost, Box::new(body)),
        };
        for v in vars.iter().rev().skip(1) {
            out = if universal {
                Formula::Forall(v.clone(), Box::new(out))
            } else {
                Formula::Exists(v.clone(), Box::new(out))
            };
        }
        Ok(out)
    }

    fn atom_or_comparison(&mut self) -> ParseResult<Formula> {
        if let (Some(Tok::Ident(_)), Some(Tok::LParen)) = (self.peek(), self.peek2()) {
            let pred = self.expect_ident("predicate")?;
            let args = self.maybe_args()?;
            return Ok(Formula::Atom { pred, args });
        }
        let lhs = self.term()?;
        let op = match self.peek() {
            Some(Tok::Lt) => Some("<"),
            Some(Tok::Gt) => Some(">"),
            Some(Tok::Le) => Some("=<"),
            Some(Tok::Ge) => Some(">="),
            Some(Tok::Eq) => Some("="),
            Some(Tok::Neq) => Some("~="),
            _ => None,
        };
        match op {
            Some(op) => {
                self.pos += 1;
                let rhs = self.term()?;
                Ok(Formula::Atom { pred: op.to_string(), args: vec![lhs, rhs] })
            }
            None => match lhs {
                Term::Var(name) | Term::Const(name) => {
                    Ok(Formula::Atom { pred: name, args: Vec::new() })
                }
                _ => Err(self.syntax("expected a formula")),
            },
        }
    }

    fn term(&mut self) -> ParseResult<Term> {
        let mut acc = self.term_factor()?;
        while self.peek() == Some(&Tok::Plus) {
            self.pos += 1;
            let rhs = self.term_factor()?;
            acc = Term::Plus(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn term_factor(&mut self) -> ParseResult<Term> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                let n = match self.next()? {
                    Spanned { tok: Tok::Num(n), .. } => n,
                    s => {
                        return Err(ParseError::UnexpectedToken {
                            expected: "number".to_string(),
                            found: s.tok.to_string(),
                            line: s.line,
                            col: s.col,
                        })
                    }
                };
                Ok(Term::Num(-n))
            }
            Some(Tok::Num(_)) => {
                let n = match self.next()?.tok {
                    Tok::Num(n) => n,
                    _ => unreachable!(),
                };
                Ok(Term::Num(n))
            }
            Some(Tok::Ident(_)) => {
                let name = self.expect_ident("term")?;
                if self.scope.contains(&name) {
                    Ok(Term::Var(name))
                } else {
                    Ok(Term::Const(name))
                }
            }
            Some(other) => {
                let found = other.to_string();
                let (line, col) = self.here();
                Err(ParseError::UnexpectedToken {
                    expected: "term".to_string(),
                    found,
                    line,
                    col,
                })
            }
            None => Err(ParseError::UnexpectedEof),
        }
    }
}

/// Parses and validates a theory file.
pub fn parse_theory(source: &str) -> ParseResult<Theory> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0, scope: Vec::new() };
    let voc = p.vocabulary()?;
    let theory = if p.peek() == Some(&Tok::KwTheory) {
        p.pos += 1;
        p.theory_body(voc)?
    } else {
        Theory { vocabulary: voc, cees: Vec::new(), sentences: Vec::new() }
    };
    if let Some(s) = p.toks.get(p.pos) {
        return Err(ParseError::UnexpectedToken {
            expected: "end of input".to_string(),
            found: s.tok.to_string(),
            line: s.line,
            col: s.col,
        });
    }
    validate_theory(&theory)?;
    Ok(theory)
}
