//! Planning domains and their structural validation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::abstraction::{BranchGrouping, Model};
use crate::interval::Interval;
use crate::model::{
    ActionId, AffineExpr, AttrId, AttrKind, AttributeDecl, Condition, ConstId, Effect, Truth, Var,
    WorldState,
};

/// Tolerance on probability sums of primitive branches.
pub const PROB_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionKind {
    Primitive,
    Abstract,
    Decomposable,
}

/// One `(condition, probability, effect)` tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub condition: Condition,
    pub prob: Interval,
    pub effect: Effect,
}

impl Branch {
    pub fn new(condition: Condition, prob: Interval, effect: Effect) -> Branch {
        Branch {
            condition,
            prob,
            effect,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionDef {
    pub name: String,
    pub kind: ActionKind,
    /// Authored for primitives; derived for abstract and decomposable actions.
    pub branches: Vec<Branch>,
    pub instantiations: Vec<ActionId>,
    pub subplan: Vec<ActionId>,
    /// Authored branch grouping for an abstract action.
    pub grouping: Option<BranchGrouping>,
}

impl ActionDef {
    pub fn primitive(name: &str, branches: Vec<Branch>) -> ActionDef {
        ActionDef {
            name: name.into(),
            kind: ActionKind::Primitive,
            branches,
            instantiations: Vec::new(),
            subplan: Vec::new(),
            grouping: None,
        }
    }

    pub fn abstraction(name: &str, instantiations: Vec<ActionId>) -> ActionDef {
        ActionDef {
            name: name.into(),
            kind: ActionKind::Abstract,
            branches: Vec::new(),
            instantiations,
            subplan: Vec::new(),
            grouping: None,
        }
    }

    pub fn decomposition(name: &str, subplan: Vec<ActionId>) -> ActionDef {
        ActionDef {
            name: name.into(),
            kind: ActionKind::Decomposable,
            branches: Vec::new(),
            instantiations: Vec::new(),
            subplan,
            grouping: None,
        }
    }

    pub fn is_primitive(&self) -> bool {
        self.kind == ActionKind::Primitive
    }

    /// Actions this one refers to in the network.
    pub fn children(&self) -> &[ActionId] {
        match self.kind {
            ActionKind::Primitive => &[],
            ActionKind::Abstract => &self.instantiations,
            ActionKind::Decomposable => &self.subplan,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Guarded {
    pub guard: Condition,
    pub value: AffineExpr,
}

/// `U(c) = UG(c) + k_r · UR(c)`, each part a guarded expression list over
/// the final state.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityModel {
    pub ug: Vec<Guarded>,
    pub ur: Vec<Guarded>,
    pub k_r: f64,
}

impl UtilityModel {
    pub fn zero() -> UtilityModel {
        let zero = || {
            vec![Guarded {
                guard: Condition::TRUE,
                value: AffineExpr::constant(Interval::ZERO),
            }]
        };
        UtilityModel {
            ug: zero(),
            ur: zero(),
            k_r: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub attributes: Vec<AttributeDecl>,
    /// Named numeric constants usable in expressions (e.g. a fatality cost).
    pub constants: Vec<(String, f64)>,
    pub actions: Vec<ActionDef>,
    pub root: ActionId,
    /// Concrete initial value per attribute.
    pub initial: Vec<f64>,
    pub utility: UtilityModel,
    /// Fixed-priority strategy weights; absent actions have priority 0.
    pub priorities: BTreeMap<ActionId, i64>,
}

impl Domain {
    pub fn attr(&self, name: &str) -> Option<AttrId> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn action(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<ConstId> {
        self.constants.iter().position(|(n, _)| n == name)
    }

    /// Overrides a named constant; returns false if it does not exist.
    pub fn set_constant(&mut self, name: &str, value: f64) -> bool {
        match self.constants.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => {
                slot.1 = value;
                true
            }
            None => false,
        }
    }

    pub fn constant_values(&self) -> Vec<f64> {
        self.constants.iter().map(|(_, v)| *v).collect()
    }

    pub fn initial_state(&self) -> WorldState {
        WorldState::concrete(&self.initial)
    }

    pub fn priority(&self, a: ActionId) -> i64 {
        self.priorities.get(&a).copied().unwrap_or(0)
    }

    pub fn action_name(&self, a: ActionId) -> &str {
        self.actions.get(a).map(|x| x.name.as_str()).unwrap_or("?")
    }

    pub fn plan_names(&self, steps: &[ActionId]) -> Vec<String> {
        steps.iter().map(|a| self.action_name(*a).to_string()).collect()
    }
}

/// One violated invariant, with a location such as `action IPG, branch 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Issue {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue {
            location: location.into(),
            message: message.into(),
        });
    }
}

/// Checks every structural invariant of a domain. An empty report means the
/// domain can be compiled and planned over.
pub fn validate_domain(d: &Domain) -> ValidationReport {
    let mut r = ValidationReport::default();
    check_names(d, &mut r);
    check_references(d, &mut r);
    if !r.is_empty() {
        return r;
    }
    check_network(d, &mut r);
    check_initial(d, &mut r);
    for a in &d.actions {
        check_action(d, a, &mut r);
    }
    check_utility(d, &mut r);
    if r.is_empty() {
        if let Err(e) = Model::new(d.clone()) {
            r.push("network", format!("cannot build abstractions: {e}"));
        }
    }
    r
}

fn check_names(d: &Domain, r: &mut ValidationReport) {
    let mut seen = BTreeMap::new();
    for a in &d.attributes {
        if seen.insert(a.name.as_str(), ()).is_some() {
            r.push(format!("attribute {}", a.name), "duplicate attribute name");
        }
    }
    let mut seen = BTreeMap::new();
    for a in &d.actions {
        if seen.insert(a.name.as_str(), ()).is_some() {
            r.push(format!("action {}", a.name), "duplicate action name");
        }
    }
    let mut seen = BTreeMap::new();
    for (n, v) in &d.constants {
        if seen.insert(n.as_str(), ()).is_some() {
            r.push(format!("constant {n}"), "duplicate constant name");
        }
        if !v.is_finite() {
            r.push(format!("constant {n}"), "value is not finite");
        }
    }
}

fn check_expr(d: &Domain, e: &AffineExpr, at: &str, r: &mut ValidationReport) {
    for t in e.terms() {
        match t.var {
            Var::Attr(a) if a >= d.attributes.len() => r.push(at, format!("unknown attribute #{a}")),
            Var::Const(c) if c >= d.constants.len() => r.push(at, format!("unknown constant #{c}")),
            _ => {}
        }
    }
}

fn check_condition(d: &Domain, c: &Condition, at: &str, r: &mut ValidationReport) {
    for a in c.attrs() {
        if a >= d.attributes.len() {
            r.push(at, format!("unknown attribute #{a}"));
        }
    }
}

fn check_references(d: &Domain, r: &mut ValidationReport) {
    let n = d.actions.len();
    if d.root >= n {
        r.push("network", format!("root action #{} does not exist", d.root));
    }
    for a in &d.actions {
        for c in a.instantiations.iter().chain(&a.subplan) {
            if *c >= n {
                r.push(format!("action {}", a.name), format!("refers to missing action #{c}"));
            }
        }
        for (i, b) in a.branches.iter().enumerate() {
            let at = format!("action {}, branch {i}", a.name);
            check_condition(d, &b.condition, &at, r);
            for (attr, e) in b.effect.assignments() {
                if *attr >= d.attributes.len() {
                    r.push(&at, format!("assigns unknown attribute #{attr}"));
                }
                check_expr(d, e, &at, r);
            }
        }
    }
    for (list, gs) in [("ug", &d.utility.ug), ("ur", &d.utility.ur)] {
        for (i, g) in gs.iter().enumerate() {
            let at = format!("utility {list}, entry {i}");
            check_condition(d, &g.guard, &at, r);
            check_expr(d, &g.value, &at, r);
        }
    }
    for a in d.priorities.keys() {
        if *a >= n {
            r.push("priorities", format!("refers to missing action #{a}"));
        }
    }
    if d.initial.len() != d.attributes.len() {
        r.push(
            "initial",
            format!("{} values for {} attributes", d.initial.len(), d.attributes.len()),
        );
    }
}

fn check_network(d: &Domain, r: &mut ValidationReport) {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut mark = vec![0u8; d.actions.len()];
    let mut reported = false;
    for start in 0..d.actions.len() {
        if mark[start] != 0 {
            continue;
        }
        let mut stack: Vec<(ActionId, usize)> = vec![(start, 0)];
        mark[start] = 1;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let children = d.actions[node].children();
            if *next < children.len() {
                let c = children[*next];
                *next += 1;
                match mark[c] {
                    0 => {
                        mark[c] = 1;
                        stack.push((c, 0));
                    }
                    1 if !reported => {
                        r.push(
                            format!("action {}", d.actions[c].name),
                            format!("cycle in the network through {}", d.actions[c].name),
                        );
                        reported = true;
                    }
                    _ => {}
                }
            } else {
                mark[node] = 2;
                stack.pop();
            }
        }
    }
}

fn check_initial(d: &Domain, r: &mut ValidationReport) {
    for (a, v) in d.attributes.iter().zip(&d.initial) {
        if !v.is_finite() {
            r.push(format!("initial {}", a.name), "value is not finite");
        }
        if a.kind == AttrKind::Boolean && *v != 0.0 && *v != 1.0 {
            r.push(format!("initial {}", a.name), format!("boolean attribute holds {v}"));
        }
        if let Some(range) = a.effective_range() {
            if !range.contains(*v) {
                r.push(format!("initial {}", a.name), format!("{v} outside declared range {range}"));
            }
        }
    }
}

fn check_action(d: &Domain, a: &ActionDef, r: &mut ValidationReport) {
    let at = format!("action {}", a.name);
    match a.kind {
        ActionKind::Primitive => {
            if a.branches.is_empty() {
                r.push(&at, "primitive action has no branches");
            }
            if !a.instantiations.is_empty() || !a.subplan.is_empty() {
                r.push(&at, "primitive action lists instantiations or a subplan");
            }
            for (i, b) in a.branches.iter().enumerate() {
                let bat = format!("{at}, branch {i}");
                if !b.prob.is_point() {
                    r.push(&bat, format!("primitive probability {} is not a point", b.prob));
                }
                if b.prob.lo() < 0.0 || b.prob.hi() > 1.0 {
                    r.push(&bat, format!("probability {} outside [0, 1]", b.prob));
                }
                for (attr, e) in b.effect.assignments() {
                    let decl = &d.attributes[*attr];
                    if decl.kind == AttrKind::Boolean && e.is_constant() {
                        let c = e.constant;
                        if !(c.is_point() && (c.lo() == 0.0 || c.lo() == 1.0)) {
                            r.push(&bat, format!("boolean {} assigned {c}", decl.name));
                        }
                    }
                }
            }
            check_probability_groups(a, &at, r);
            let conds: Vec<&Condition> = a.branches.iter().map(|b| &b.condition).collect();
            check_partition(d, &conds, &at, "branch conditions", r);
        }
        ActionKind::Abstract => {
            if a.instantiations.len() < 2 {
                r.push(&at, "abstract action needs at least 2 instantiations");
            }
            if !a.branches.is_empty() {
                r.push(&at, "abstract action descriptions are derived, not authored");
            }
            if let Some(g) = &a.grouping {
                let counts: Vec<usize> = a
                    .instantiations
                    .iter()
                    .map(|i| {
                        let inst = &d.actions[*i];
                        if inst.is_primitive() {
                            inst.branches.len()
                        } else {
                            usize::MAX
                        }
                    })
                    .collect();
                if let Err(e) = g.check(&counts) {
                    r.push(&at, format!("{e}"));
                }
            }
            let mut seen = a.instantiations.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != a.instantiations.len() {
                r.push(&at, "instantiation listed twice");
            }
        }
        ActionKind::Decomposable => {
            if a.subplan.len() < 2 {
                r.push(&at, "decomposable action needs at least 2 subplan steps");
            }
            if !a.branches.is_empty() {
                r.push(&at, "decomposable action descriptions are derived, not authored");
            }
        }
    }
    if a.kind != ActionKind::Abstract && a.grouping.is_some() {
        r.push(&at, "only abstract actions take a branch grouping");
    }
}

/// Point probabilities within each condition group must sum to one.
fn check_probability_groups(a: &ActionDef, at: &str, r: &mut ValidationReport) {
    let mut groups: Vec<(&Condition, f64, usize)> = Vec::new();
    for (i, b) in a.branches.iter().enumerate() {
        if b.condition.is_false() {
            continue;
        }
        match groups.iter_mut().find(|(c, _, _)| **c == b.condition) {
            Some(g) => g.1 += b.prob.mid(),
            None => groups.push((&b.condition, b.prob.mid(), i)),
        }
    }
    for (_, sum, first) in groups {
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            r.push(
                format!("{at}, branch {first}"),
                format!("probabilities sum to {} under this condition", round9(sum)),
            );
        }
    }
}

fn round9(x: f64) -> f64 {
    let scaled = x * 1e9;
    let r = if scaled >= 0.0 { (scaled + 0.5) as i64 } else { (scaled - 0.5) as i64 };
    r as f64 / 1e9
}

/// Candidate values per attribute: declared range ends, every threshold,
/// midpoints between consecutive candidates and one step beyond the ends.
pub(crate) fn sample_values(d: &Domain, conds: &[&Condition]) -> Vec<(AttrId, Vec<f64>)> {
    let mut per_attr: BTreeMap<AttrId, Vec<f64>> = BTreeMap::new();
    for c in conds {
        for (a, t) in c.thresholds() {
            per_attr.entry(a).or_default().push(t);
        }
    }
    let mut out = Vec::new();
    for (a, mut vals) in per_attr {
        let decl = &d.attributes[a];
        let range = decl.effective_range();
        if let Some(r) = range {
            vals.push(r.lo());
            vals.push(r.hi());
        }
        vals.sort_by(|x, y| x.total_cmp(y));
        vals.dedup();
        let mut cands = Vec::new();
        for w in vals.windows(2) {
            cands.push((w[0] + w[1]) / 2.0);
        }
        cands.extend(vals.iter().copied());
        if range.is_none() {
            cands.push(vals[0] - 1.0);
            cands.push(vals[vals.len() - 1] + 1.0);
        }
        if decl.kind == AttrKind::Boolean {
            cands = vec![0.0, 1.0];
        }
        if let Some(r) = range {
            cands.retain(|v| r.contains(*v));
        }
        cands.sort_by(|x, y| x.total_cmp(y));
        cands.dedup();
        out.push((a, cands));
    }
    out
}

/// Enumerates sample points (capped), calling `f` with each concrete state.
pub(crate) fn for_each_sample(d: &Domain, conds: &[&Condition], mut f: impl FnMut(&WorldState) -> bool) {
    const CAP: usize = 50_000;
    let samples = sample_values(d, conds);
    let total = samples
        .iter()
        .try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len().max(1)))
        .unwrap_or(usize::MAX);
    let stride = if total > CAP { total / CAP + 1 } else { 1 };
    let mut base = d.initial.clone();
    let mut k = 0usize;
    while k < total {
        let mut rem = k;
        for (a, vals) in &samples {
            base[*a] = vals[rem % vals.len()];
            rem /= vals.len();
        }
        if !f(&WorldState::concrete(&base)) {
            return;
        }
        k = match k.checked_add(stride) {
            Some(n) => n,
            None => break,
        };
    }
}

/// Distinct conditions must be pairwise exclusive and jointly exhaustive.
fn check_partition(d: &Domain, conds: &[&Condition], at: &str, what: &str, r: &mut ValidationReport) {
    let mut distinct: Vec<&Condition> = Vec::new();
    for c in conds {
        if !c.is_false() && !distinct.contains(c) {
            distinct.push(c);
        }
    }
    let mut problem: Option<String> = None;
    for_each_sample(d, &distinct, |s| {
        let mut holding = 0;
        for c in &distinct {
            match c.eval(s) {
                Ok(Truth::True) => holding += 1,
                Ok(_) => {}
                Err(e) => {
                    problem = Some(format!("{e}"));
                    return false;
                }
            }
        }
        if holding != 1 {
            let point: Vec<String> = d
                .attributes
                .iter()
                .zip(s.values())
                .map(|(a, v)| format!("{}={}", a.name, v.lo()))
                .collect();
            problem = Some(if holding == 0 {
                format!("{what} are not exhaustive at {}", point.join(", "))
            } else {
                format!("{what} are not mutually exclusive at {}", point.join(", "))
            });
            return false;
        }
        true
    });
    if let Some(p) = problem {
        r.push(at, p);
    }
}

fn check_utility(d: &Domain, r: &mut ValidationReport) {
    if !d.utility.k_r.is_finite() {
        r.push("utility", "k_r is not finite");
    }
    for (name, list) in [("ug", &d.utility.ug), ("ur", &d.utility.ur)] {
        let at = format!("utility {name}");
        if list.is_empty() {
            r.push(&at, "empty guard list");
            continue;
        }
        let conds: Vec<&Condition> = list.iter().map(|g| &g.guard).collect();
        check_partition(d, &conds, &at, "guards", r);
    }
}
