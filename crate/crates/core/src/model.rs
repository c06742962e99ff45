//! World states and the expression, condition and effect algebra evaluated
//! over them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::interval::Interval;

pub type AttrId = usize;
pub type ActionId = usize;
pub type ConstId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttrKind {
    Numeric,
    /// Encoded as 0/1.
    Boolean,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributeDecl {
    pub name: String,
    pub kind: AttrKind,
    pub default: f64,
    /// Declared value range; drives exhaustiveness sampling in the validator.
    pub range: Option<Interval>,
}

impl AttributeDecl {
    pub fn numeric(name: &str, default: f64) -> AttributeDecl {
        AttributeDecl {
            name: name.into(),
            kind: AttrKind::Numeric,
            default,
            range: None,
        }
    }

    pub fn boolean(name: &str, default: bool) -> AttributeDecl {
        AttributeDecl {
            name: name.into(),
            kind: AttrKind::Boolean,
            default: if default { 1.0 } else { 0.0 },
            range: Some(Interval::UNIT),
        }
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> AttributeDecl {
        self.range = Some(Interval::new(lo, hi));
        self
    }

    /// Declared range, `[0,1]` for booleans.
    pub fn effective_range(&self) -> Option<Interval> {
        match self.kind {
            AttrKind::Boolean => Some(Interval::UNIT),
            AttrKind::Numeric => self.range,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Attr(AttrId),
    /// A named numeric constant of the domain, bound before evaluation.
    Const(ConstId),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub coef: Interval,
    pub var: Var,
}

/// `constant + Σ coef·var` with interval constant and coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineExpr {
    pub constant: Interval,
    terms: Vec<Term>,
}

impl AffineExpr {
    /// Builds a normalised expression: like variables are merged, exact zero
    /// coefficients dropped and terms sorted by variable.
    pub fn new(constant: Interval, terms: impl IntoIterator<Item = Term>) -> AffineExpr {
        let mut merged: Vec<Term> = Vec::new();
        for t in terms {
            match merged.iter_mut().find(|m| m.var == t.var) {
                Some(m) => m.coef = m.coef + t.coef,
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.coef != Interval::ZERO);
        merged.sort_by(|a, b| a.var.cmp(&b.var));
        AffineExpr {
            constant,
            terms: merged,
        }
    }

    pub fn constant(c: Interval) -> AffineExpr {
        AffineExpr {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn attr(a: AttrId) -> AffineExpr {
        AffineExpr::new(
            Interval::ZERO,
            [Term {
                coef: Interval::ONE,
                var: Var::Attr(a),
            }],
        )
    }

    /// `attr + delta`.
    pub fn shift(a: AttrId, delta: Interval) -> AffineExpr {
        let mut e = AffineExpr::attr(a);
        e.constant = delta;
        e
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn coef_of(&self, var: Var) -> Interval {
        self.terms
            .iter()
            .find(|t| t.var == var)
            .map(|t| t.coef)
            .unwrap_or(Interval::ZERO)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// True iff the expression is `attr` itself.
    pub fn is_identity_of(&self, a: AttrId) -> bool {
        self.constant == Interval::ZERO
            && self.terms.len() == 1
            && self.terms[0].var == Var::Attr(a)
            && self.terms[0].coef == Interval::ONE
    }

    pub fn add(&self, other: &AffineExpr) -> AffineExpr {
        AffineExpr::new(
            self.constant + other.constant,
            self.terms.iter().chain(other.terms.iter()).copied(),
        )
    }

    pub fn scale(&self, k: Interval) -> AffineExpr {
        AffineExpr::new(
            self.constant * k,
            self.terms.iter().map(|t| Term {
                coef: t.coef * k,
                var: t.var,
            }),
        )
    }

    /// Replaces constant variables by their values.
    pub fn bind_constants(&self, values: &[f64]) -> Result<AffineExpr> {
        let mut constant = self.constant;
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match t.var {
                Var::Const(c) => {
                    let v = *values.get(c).ok_or(Error::UnboundConstant(c))?;
                    constant = constant + t.coef * Interval::point(v);
                }
                Var::Attr(_) => terms.push(*t),
            }
        }
        Ok(AffineExpr::new(constant, terms))
    }

    /// Substitutes `assign(a)` for every attribute `a` it covers.
    pub fn substitute(&self, assign: impl Fn(AttrId) -> Option<AffineExpr>) -> AffineExpr {
        let mut out = AffineExpr::constant(self.constant);
        for t in &self.terms {
            let piece = match t.var {
                Var::Attr(a) => match assign(a) {
                    Some(e) => e.scale(t.coef),
                    None => AffineExpr::new(Interval::ZERO, [*t]),
                },
                Var::Const(_) => AffineExpr::new(Interval::ZERO, [*t]),
            };
            out = out.add(&piece);
        }
        out
    }

    /// Coefficient-wise hull; sound for every state since each operand's
    /// coefficients lie inside the hulled ones.
    pub fn hull(&self, other: &AffineExpr) -> AffineExpr {
        let mut vars: Vec<Var> = self.terms.iter().chain(other.terms.iter()).map(|t| t.var).collect();
        vars.sort();
        vars.dedup();
        AffineExpr::new(
            self.constant.hull(other.constant),
            vars.into_iter().map(|v| Term {
                coef: self.coef_of(v).hull(other.coef_of(v)),
                var: v,
            }),
        )
    }

    /// Sum of constant width and coefficient widths, weighted per variable.
    pub fn spread(&self, weight: impl Fn(Var) -> f64) -> f64 {
        self.constant.width() + self.terms.iter().map(|t| t.coef.width() * weight(t.var)).sum::<f64>()
    }

    pub fn attrs(&self) -> impl Iterator<Item = AttrId> + '_ {
        self.terms.iter().filter_map(|t| match t.var {
            Var::Attr(a) => Some(a),
            Var::Const(_) => None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
    Lt,
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Lt => "<",
            Relation::Gt => ">",
        }
    }

    pub fn holds(self, x: f64, t: f64) -> bool {
        match self {
            Relation::Eq => x == t,
            Relation::Le => x <= t,
            Relation::Ge => x >= t,
            Relation::Lt => x < t,
            Relation::Gt => x > t,
        }
    }
}

/// Three-valued truth over interval states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    pub fn and(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    pub fn or(self, other: Truth) -> Truth {
        match (self, other) {
            (Truth::True, _) | (_, Truth::True) => Truth::True,
            (Truth::False, Truth::False) => Truth::False,
            _ => Truth::Unknown,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub attr: AttrId,
    pub rel: Relation,
    pub threshold: f64,
}

impl Atom {
    pub fn new(attr: AttrId, rel: Relation, threshold: f64) -> Atom {
        Atom { attr, rel, threshold }
    }

    pub fn eval(&self, v: Interval) -> Truth {
        let t = self.threshold;
        let (lo, hi) = (v.lo(), v.hi());
        let (always, never) = match self.rel {
            Relation::Eq => (lo == t && hi == t, t < lo || t > hi),
            Relation::Le => (hi <= t, lo > t),
            Relation::Lt => (hi < t, lo >= t),
            Relation::Ge => (lo >= t, hi < t),
            Relation::Gt => (lo > t, hi <= t),
        };
        if always {
            Truth::True
        } else if never {
            Truth::False
        } else {
            Truth::Unknown
        }
    }
}

/// A conjunction of atoms, or the unsatisfiable clause.
#[derive(Clone, Debug, PartialEq)]
pub enum Clause {
    Never,
    All(Vec<Atom>),
}

impl Clause {
    pub fn eval(&self, s: &WorldState) -> Result<Truth> {
        match self {
            Clause::Never => Ok(Truth::False),
            Clause::All(atoms) => {
                let mut acc = Truth::True;
                for a in atoms {
                    acc = acc.and(a.eval(s.get(a.attr)?));
                    if acc == Truth::False {
                        break;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Conjunction of two clauses; collapses to `Never` when two atoms on the
    /// same attribute cannot hold together.
    pub fn and(&self, other: &Clause) -> Clause {
        match (self, other) {
            (Clause::Never, _) | (_, Clause::Never) => Clause::Never,
            (Clause::All(a), Clause::All(b)) => {
                let mut atoms = a.clone();
                for atom in b {
                    if !atoms.contains(atom) {
                        atoms.push(*atom);
                    }
                }
                if contradictory(&atoms) {
                    Clause::Never
                } else {
                    Clause::All(atoms)
                }
            }
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        match self {
            Clause::Never => &[],
            Clause::All(a) => a,
        }
    }
}

fn contradictory(atoms: &[Atom]) -> bool {
    // Intersect the feasible set per attribute: [lo, hi] with open flags.
    let mut attrs: Vec<AttrId> = atoms.iter().map(|a| a.attr).collect();
    attrs.sort_unstable();
    attrs.dedup();
    for attr in attrs {
        let (mut lo, mut lo_open) = (f64::NEG_INFINITY, false);
        let (mut hi, mut hi_open) = (f64::INFINITY, false);
        for a in atoms.iter().filter(|a| a.attr == attr) {
            let t = a.threshold;
            let (new_lo, new_hi) = match a.rel {
                Relation::Eq => (Some((t, false)), Some((t, false))),
                Relation::Ge => (Some((t, false)), None),
                Relation::Gt => (Some((t, true)), None),
                Relation::Le => (None, Some((t, false))),
                Relation::Lt => (None, Some((t, true))),
            };
            if let Some((t, open)) = new_lo {
                if t > lo || (t == lo && open) {
                    lo = t;
                    lo_open = open;
                }
            }
            if let Some((t, open)) = new_hi {
                if t < hi || (t == hi && open) {
                    hi = t;
                    hi_open = open;
                }
            }
        }
        if lo > hi || (lo == hi && (lo_open || hi_open)) {
            return true;
        }
    }
    false
}

/// Branch and guard conditions.
///
/// `Any` is a disjunction of conjunctions. Abstract action descriptions use
/// it with one clause per member branch, and projection then treats the
/// clauses as alternatives (see [`Condition::alternatives`]).
#[derive(Clone, Debug, PartialEq)]
pub enum Condition {
    All(Clause),
    Any(Vec<Clause>),
}

impl Condition {
    pub const TRUE: Condition = Condition::All(Clause::All(Vec::new()));
    pub const FALSE: Condition = Condition::All(Clause::Never);

    pub fn atoms(atoms: Vec<Atom>) -> Condition {
        Condition::All(Clause::All(atoms))
    }

    pub fn clauses(&self) -> &[Clause] {
        match self {
            Condition::All(c) => core::slice::from_ref(c),
            Condition::Any(cs) => cs,
        }
    }

    pub fn is_false(&self) -> bool {
        self.clauses().iter().all(|c| *c == Clause::Never)
    }

    /// Standard three-valued semantics: `True` iff the condition holds at
    /// every point of `s`, `False` iff at none.
    pub fn eval(&self, s: &WorldState) -> Result<Truth> {
        match self {
            Condition::All(c) => c.eval(s),
            Condition::Any(cs) => {
                let mut acc = Truth::False;
                for c in cs {
                    acc = acc.or(c.eval(s)?);
                    if acc == Truth::True {
                        break;
                    }
                }
                Ok(acc)
            }
        }
    }

    /// Alternative semantics used for abstract branches: each clause is the
    /// condition under one alternative realisation, so the branch's
    /// probability bounds are only trustworthy when every alternative holds.
    pub fn alternatives(&self, s: &WorldState) -> Result<Truth> {
        match self {
            Condition::All(c) => c.eval(s),
            Condition::Any(cs) => {
                let mut all_true = true;
                let mut all_false = true;
                for c in cs {
                    match c.eval(s)? {
                        Truth::True => all_false = false,
                        Truth::False => all_true = false,
                        Truth::Unknown => {
                            all_true = false;
                            all_false = false;
                        }
                    }
                }
                Ok(if cs.is_empty() || all_false {
                    Truth::False
                } else if all_true {
                    Truth::True
                } else {
                    Truth::Unknown
                })
            }
        }
    }

    /// Conjunction, distributing over clauses when either side is `Any`.
    pub fn and(&self, other: &Condition) -> Condition {
        match (self, other) {
            (Condition::All(a), Condition::All(b)) => Condition::All(a.and(b)),
            _ => {
                let mut out = Vec::new();
                for a in self.clauses() {
                    for b in other.clauses() {
                        out.push(a.and(b));
                    }
                }
                Condition::Any(out)
            }
        }
    }

    pub fn attrs(&self) -> impl Iterator<Item = AttrId> + '_ {
        self.clauses().iter().flat_map(|c| c.atoms().iter().map(|a| a.attr))
    }

    pub fn thresholds(&self) -> impl Iterator<Item = (AttrId, f64)> + '_ {
        self.clauses()
            .iter()
            .flat_map(|c| c.atoms().iter().map(|a| (a.attr, a.threshold)))
    }
}

/// Simultaneous assignments; attributes not mentioned persist.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Effect {
    assignments: Vec<(AttrId, AffineExpr)>,
}

impl Effect {
    /// Sorts by attribute; a repeated attribute is an error.
    pub fn new(mut assignments: Vec<(AttrId, AffineExpr)>) -> Result<Effect> {
        assignments.sort_by_key(|(a, _)| *a);
        for w in assignments.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Domain(format!("attribute #{} assigned twice in one effect", w[0].0)));
            }
        }
        Ok(Effect { assignments })
    }

    pub fn none() -> Effect {
        Effect::default()
    }

    pub fn assignments(&self) -> &[(AttrId, AffineExpr)] {
        &self.assignments
    }

    pub fn get(&self, attr: AttrId) -> Option<&AffineExpr> {
        self.assignments
            .binary_search_by_key(&attr, |(a, _)| *a)
            .ok()
            .map(|i| &self.assignments[i].1)
    }

    /// Drops identity assignments (`x := x`).
    pub fn simplified(mut self) -> Effect {
        self.assignments.retain(|(a, e)| !e.is_identity_of(*a));
        self
    }

    /// `self` followed by `next`, as one simultaneous effect.
    pub fn then(&self, next: &Effect) -> Effect {
        let mut out: Vec<(AttrId, AffineExpr)> = next
            .assignments
            .iter()
            .map(|(a, e)| (*a, e.substitute(|v| self.get(v).cloned())))
            .collect();
        for (a, e) in &self.assignments {
            if next.get(*a).is_none() {
                out.push((*a, e.clone()));
            }
        }
        out.sort_by_key(|(a, _)| *a);
        Effect { assignments: out }.simplified()
    }

    pub fn bind_constants(&self, values: &[f64]) -> Result<Effect> {
        let assignments = self
            .assignments
            .iter()
            .map(|(a, e)| Ok((*a, e.bind_constants(values)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Effect { assignments })
    }
}

/// The end state of a chronicle: one interval per attribute.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    values: Vec<Interval>,
}

impl WorldState {
    pub fn new(values: Vec<Interval>) -> WorldState {
        WorldState { values }
    }

    pub fn concrete(values: &[f64]) -> WorldState {
        WorldState {
            values: values.iter().map(|v| Interval::point(*v)).collect(),
        }
    }

    pub fn get(&self, attr: AttrId) -> Result<Interval> {
        self.values.get(attr).copied().ok_or(Error::UnknownAttribute(attr))
    }

    pub fn set(&mut self, attr: AttrId, v: Interval) -> Result<()> {
        let slot = self.values.get_mut(attr).ok_or(Error::UnknownAttribute(attr))?;
        *slot = v;
        Ok(())
    }

    pub fn values(&self) -> &[Interval] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Every value is a point up to `tol`.
    pub fn is_concrete(&self, tol: f64) -> bool {
        self.values.iter().all(|v| v.width() <= tol)
    }

    /// Pointwise containment `other ⊆ self`.
    pub fn encloses(&self, other: &WorldState) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a.encloses(*b))
    }

    pub fn encloses_within(&self, other: &WorldState, tol: f64) -> bool {
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.encloses_within(*b, tol))
    }

    pub fn hull(&self, other: &WorldState) -> WorldState {
        WorldState {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a.hull(*b)).collect(),
        }
    }

    /// Bit-exact key, used to merge identical chronicles.
    pub(crate) fn key(&self) -> Vec<u64> {
        self.values
            .iter()
            .flat_map(|v| [v.lo().to_bits(), v.hi().to_bits()])
            .collect()
    }
}

impl fmt::Display for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "#{i}={v}")?;
        }
        f.write_str("}")
    }
}

pub fn eval_expr(e: &AffineExpr, s: &WorldState) -> Result<Interval> {
    let mut acc = e.constant;
    for t in e.terms() {
        let v = match t.var {
            Var::Attr(a) => s.get(a)?,
            Var::Const(c) => return Err(Error::UnboundConstant(c)),
        };
        acc = acc + t.coef * v;
    }
    Ok(acc)
}

pub fn eval_condition(c: &Condition, s: &WorldState) -> Result<Truth> {
    c.eval(s)
}

/// Applies every assignment against the pre-state.
pub fn apply_effect(e: &Effect, s: &WorldState) -> Result<WorldState> {
    let mut next = s.clone();
    for (a, rhs) in e.assignments() {
        next.set(*a, eval_expr(rhs, s)?)?;
    }
    Ok(next)
}

/// Renders a state with attribute indices, for error messages.
pub(crate) fn describe_state(s: &WorldState) -> String {
    format!("{s}")
}
