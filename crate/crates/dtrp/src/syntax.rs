//! The expression and condition mini-language used inside domain files.
//!
//! Expressions are affine: `cost + 120`, `-(cost + COST_FATALITY)`,
//! `ton_delivered + 0.9 * ton_intruck`, `cost + [120, 300]`.
//! Conditions are a conjunction of atoms, `sunny = 1 & warehouse = 1`, a
//! disjunction of parenthesised conjunctions, or `true` / `false`.

use std::fmt::Write as _;

use dtrp_core::model::{AffineExpr, Atom, AttrId, Clause, Condition, Relation, Term, Var};
use dtrp_core::Interval;

/// A parse error with a 1-based column inside the source string.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntaxError {
    pub column: usize,
    pub message: String,
    /// Set when the error is an identifier that resolves to nothing.
    pub unresolved: Option<String>,
}

impl SyntaxError {
    fn new(column: usize, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            column,
            message: message.into(),
            unresolved: None,
        }
    }

    fn unresolved(column: usize, message: String, name: &str) -> SyntaxError {
        SyntaxError {
            unresolved: Some(name.to_string()),
            ..SyntaxError::new(column, message)
        }
    }
}

/// Resolves identifiers appearing in expressions and conditions.
pub trait Names {
    fn attr(&self, name: &str) -> Option<AttrId>;
    fn constant(&self, name: &str) -> Option<usize>;
    fn attr_name(&self, a: AttrId) -> &str;
    fn constant_name(&self, c: usize) -> &str;
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(&'static str),
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let col = i + 1;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| SyntaxError::new(col, format!("malformed number `{text}`")))?;
            out.push((Tok::Num(v), col));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), col));
            continue;
        }
        let two = src.get(i..i + 2);
        let op: &'static str = match (two, c) {
            (Some("<="), _) => "<=",
            (Some(">="), _) => ">=",
            (_, '<') => "<",
            (_, '>') => ">",
            (_, '=') => "=",
            (_, '+') => "+",
            (_, '-') => "-",
            (_, '*') => "*",
            (_, '(') => "(",
            (_, ')') => ")",
            (_, '[') => "[",
            (_, ']') => "]",
            (_, ',') => ",",
            (_, '&') => "&",
            (_, '|') => "|",
            _ => {
                return Err(SyntaxError::new(col, format!("unexpected character `{c}`")))
            }
        };
        i += op.len();
        out.push((Tok::Op(op), col));
    }
    Ok(out)
}

struct Parser<'a, N: Names> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    names: &'a N,
}

impl<N: Names> Parser<'_, N> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError::new(self.col(), message))
    }

    fn eat(&mut self, op: &'static str) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &'static str) -> Result<(), SyntaxError> {
        if self.eat(op) {
            Ok(())
        } else {
            self.err(format!("expected `{op}`"))
        }
    }

    fn finish(&self) -> Result<(), SyntaxError> {
        if self.pos < self.toks.len() {
            self.err("unexpected trailing input")
        } else {
            Ok(())
        }
    }

    fn number(&mut self) -> Result<f64, SyntaxError> {
        let neg = self.eat("-");
        match self.peek() {
            Some(Tok::Num(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(if neg { -v } else { v })
            }
            _ => self.err("expected a number"),
        }
    }

    fn expr(&mut self) -> Result<AffineExpr, SyntaxError> {
        let mut acc = self.term()?;
        loop {
            if self.eat("+") {
                acc = acc.add(&self.term()?);
            } else if self.eat("-") {
                acc = acc.add(&self.term()?.scale(Interval::point(-1.0)));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<AffineExpr, SyntaxError> {
        let mut acc = self.factor()?;
        while self.eat("*") {
            let col = self.col();
            let rhs = self.factor()?;
            acc = if acc.is_constant() {
                rhs.scale(acc.constant)
            } else if rhs.is_constant() {
                acc.scale(rhs.constant)
            } else {
                return Err(SyntaxError::new(col, "product of two variables is not affine"));
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<AffineExpr, SyntaxError> {
        let col = self.col();
        match self.peek().cloned() {
            Some(Tok::Op("-")) => {
                self.pos += 1;
                Ok(self.factor()?.scale(Interval::point(-1.0)))
            }
            Some(Tok::Op("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Some(Tok::Op("[")) => {
                self.pos += 1;
                let lo = self.number()?;
                self.expect(",")?;
                let hi = self.number()?;
                self.expect("]")?;
                match Interval::checked(lo, hi) {
                    Some(i) => Ok(AffineExpr::constant(i)),
                    None => Err(SyntaxError::new(col, format!("malformed interval [{lo}, {hi}]"))),
                }
            }
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(AffineExpr::constant(Interval::point(v)))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let var = if let Some(a) = self.names.attr(&name) {
                    Var::Attr(a)
                } else if let Some(c) = self.names.constant(&name) {
                    Var::Const(c)
                } else {
                    return Err(SyntaxError::unresolved(col, format!("unknown name `{name}`"), &name));
                };
                Ok(AffineExpr::new(Interval::ZERO, [Term { coef: Interval::ONE, var }]))
            }
            _ => self.err("expected a number, name, interval or `(`"),
        }
    }

    fn clause(&mut self) -> Result<Clause, SyntaxError> {
        if self.eat("(") {
            let c = self.clause()?;
            self.expect(")")?;
            return Ok(c);
        }
        match self.peek() {
            Some(Tok::Ident(w)) if w == "true" => {
                self.pos += 1;
                return Ok(Clause::All(Vec::new()));
            }
            Some(Tok::Ident(w)) if w == "false" => {
                self.pos += 1;
                return Ok(Clause::Never);
            }
            _ => {}
        }
        let mut atoms = vec![self.atom()?];
        while self.eat("&") {
            atoms.push(self.atom()?);
        }
        Ok(Clause::All(atoms))
    }

    fn atom(&mut self) -> Result<Atom, SyntaxError> {
        let col = self.col();
        let Some(Tok::Ident(name)) = self.peek().cloned() else {
            return self.err("expected an attribute name");
        };
        self.pos += 1;
        let Some(attr) = self.names.attr(&name) else {
            return Err(SyntaxError::unresolved(col, format!("unknown attribute `{name}`"), &name));
        };
        let rel = match self.peek() {
            Some(Tok::Op("=")) => Relation::Eq,
            Some(Tok::Op("<=")) => Relation::Le,
            Some(Tok::Op(">=")) => Relation::Ge,
            Some(Tok::Op("<")) => Relation::Lt,
            Some(Tok::Op(">")) => Relation::Gt,
            _ => return self.err("expected one of = <= >= < >"),
        };
        self.pos += 1;
        let threshold = self.number()?;
        Ok(Atom::new(attr, rel, threshold))
    }

    fn condition(&mut self) -> Result<Condition, SyntaxError> {
        let first = self.clause()?;
        if !self.eat("|") {
            return Ok(Condition::All(first));
        }
        let mut clauses = vec![first, self.clause()?];
        while self.eat("|") {
            clauses.push(self.clause()?);
        }
        Ok(Condition::Any(clauses))
    }
}

fn parser<'a, N: Names>(src: &str, names: &'a N) -> Result<Parser<'a, N>, SyntaxError> {
    let toks = lex(src)?;
    if toks.is_empty() {
        return Err(SyntaxError::new(1, "empty input"));
    }
    Ok(Parser {
        toks,
        pos: 0,
        end: src.len() + 1,
        names,
    })
}

pub fn parse_expr(src: &str, names: &impl Names) -> Result<AffineExpr, SyntaxError> {
    let mut p = parser(src, names)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

pub fn parse_condition(src: &str, names: &impl Names) -> Result<Condition, SyntaxError> {
    let mut p = parser(src, names)?;
    let c = p.condition()?;
    p.finish()?;
    Ok(c)
}

/// Shortest decimal that parses back to the same double.
pub fn number(x: f64) -> String {
    format!("{}", x + 0.0)
}

fn interval(i: Interval) -> String {
    if i.is_point() {
        number(i.lo())
    } else {
        format!("[{}, {}]", number(i.lo()), number(i.hi()))
    }
}

pub fn format_expr(e: &AffineExpr, names: &impl Names) -> String {
    let mut out = String::new();
    for t in e.terms() {
        let name = match t.var {
            Var::Attr(a) => names.attr_name(a),
            Var::Const(c) => names.constant_name(c),
        };
        let c = t.coef;
        let (sign, mag) = if c.is_point() && c.lo() < 0.0 {
            ("-", Interval::point(-c.lo()))
        } else {
            ("+", c)
        };
        if out.is_empty() {
            if sign == "-" {
                out.push('-');
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag == Interval::ONE {
            out.push_str(name);
        } else {
            let _ = write!(out, "{} * {name}", interval(mag));
        }
    }
    let k = e.constant;
    if out.is_empty() {
        return interval(k);
    }
    if k != Interval::ZERO {
        if k.is_point() && k.lo() < 0.0 {
            let _ = write!(out, " - {}", number(-k.lo()));
        } else {
            let _ = write!(out, " + {}", interval(k));
        }
    }
    out
}

fn format_clause(c: &Clause, names: &impl Names) -> String {
    match c {
        Clause::Never => "false".into(),
        Clause::All(atoms) if atoms.is_empty() => "true".into(),
        Clause::All(atoms) => atoms
            .iter()
            .map(|a| format!("{} {} {}", names.attr_name(a.attr), a.rel.symbol(), number(a.threshold)))
            .collect::<Vec<_>>()
            .join(" & "),
    }
}

pub fn format_condition(c: &Condition, names: &impl Names) -> String {
    match c {
        Condition::All(cl) => format_clause(cl, names),
        Condition::Any(cls) => cls
            .iter()
            .map(|cl| format!("({})", format_clause(cl, names)))
            .collect::<Vec<_>>()
            .join(" | "),
    }
}
