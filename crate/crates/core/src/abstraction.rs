//! Inter-action and sequential abstraction, and the compiled [`Model`] that
//! holds one projection description per action.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::domain::{ActionDef, ActionKind, Branch, Domain, Guarded, UtilityModel};
use crate::error::{Error, Result};
use crate::interval::{add_down, add_up, Interval};
use crate::model::{
    ActionId, AffineExpr, Atom, AttrId, Clause, Condition, Effect, Truth, Var, WorldState,
};

/// A branch reference inside an abstraction: `input` indexes the list of
/// instantiations, `branch` that instantiation's description.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BranchRef {
    pub input: usize,
    pub branch: usize,
}

impl fmt::Display for BranchRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.input, self.branch)
    }
}

/// Disjoint branch groups; each group holds at most one branch per input.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchGrouping {
    pub groups: Vec<Vec<BranchRef>>,
}

impl BranchGrouping {
    /// Validates against the branch count of every input. A count of
    /// `usize::MAX` means "unknown yet" and only disjointness is checked for
    /// that input.
    pub fn check(&self, branch_counts: &[usize]) -> Result<()> {
        let mut seen: Vec<Vec<bool>> = branch_counts
            .iter()
            .map(|n| if *n == usize::MAX { Vec::new() } else { vec![false; *n] })
            .collect();
        let mut seen_unknown: Vec<BranchRef> = Vec::new();
        for (gi, g) in self.groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidGrouping(format!("group {gi} is empty")));
            }
            let mut inputs: Vec<usize> = g.iter().map(|r| r.input).collect();
            inputs.sort_unstable();
            inputs.dedup();
            if inputs.len() != g.len() {
                return Err(Error::InvalidGrouping(format!(
                    "group {gi} holds two branches of the same action"
                )));
            }
            for r in g {
                let n = *branch_counts
                    .get(r.input)
                    .ok_or_else(|| Error::InvalidGrouping(format!("group {gi} names input {}", r.input)))?;
                if n == usize::MAX {
                    if seen_unknown.contains(r) {
                        return Err(Error::InvalidGrouping(format!("branch {r} grouped twice")));
                    }
                    seen_unknown.push(*r);
                    continue;
                }
                if r.branch >= n {
                    return Err(Error::InvalidGrouping(format!("branch {r} does not exist")));
                }
                if seen[r.input][r.branch] {
                    return Err(Error::InvalidGrouping(format!("branch {r} grouped twice")));
                }
                seen[r.input][r.branch] = true;
            }
        }
        for (i, s) in seen.iter().enumerate() {
            if let Some(b) = s.iter().position(|x| !x) {
                return Err(Error::InvalidGrouping(format!("branch {i}#{b} is not grouped")));
            }
        }
        Ok(())
    }

    /// `members[g][i]`: branch of input `i` in group `g`, `None` if padded.
    pub fn members(&self, inputs: usize) -> Vec<Vec<Option<usize>>> {
        self.groups
            .iter()
            .map(|g| {
                let mut row = vec![None; inputs];
                for r in g {
                    row[r.input] = Some(r.branch);
                }
                row
            })
            .collect()
    }
}

/// Effect hull where attributes untouched by one side are hulled against the
/// identity assignment.
fn effect_hull(a: &Effect, b: &Effect) -> Effect {
    let mut attrs: Vec<AttrId> = a
        .assignments()
        .iter()
        .chain(b.assignments())
        .map(|(x, _)| *x)
        .collect();
    attrs.sort_unstable();
    attrs.dedup();
    let assignments = attrs
        .into_iter()
        .map(|x| {
            let ea = a.get(x).cloned().unwrap_or_else(|| AffineExpr::attr(x));
            let eb = b.get(x).cloned().unwrap_or_else(|| AffineExpr::attr(x));
            (x, ea.hull(&eb))
        })
        .collect();
    Effect::new(assignments)
        .expect("attributes deduplicated")
        .simplified()
}

/// Inter-action abstraction of `inputs` (each an instantiation id and its
/// description) under `grouping`.
///
/// Groups smaller than the number of inputs are padded with never-applicable
/// zero-probability branches; the abstract condition keeps one clause per
/// input so that projection can tell when every alternative applies.
pub fn inter_abstract(
    name: &str,
    inputs: &[(ActionId, &[Branch])],
    grouping: &BranchGrouping,
) -> Result<ActionDef> {
    if inputs.len() < 2 {
        return Err(Error::Contract("inter-action abstraction needs at least two actions"));
    }
    let counts: Vec<usize> = inputs.iter().map(|(_, b)| b.len()).collect();
    grouping.check(&counts)?;
    let members = grouping.members(inputs.len());
    let mut branches = Vec::with_capacity(members.len());
    for row in &members {
        let mut clauses = Vec::new();
        let mut prob: Option<Interval> = None;
        let mut effect: Option<Effect> = None;
        for (i, m) in row.iter().enumerate() {
            match m {
                Some(b) => {
                    let br = &inputs[i].1[*b];
                    clauses.extend(br.condition.clauses().iter().cloned());
                    prob = Some(prob.map_or(br.prob, |p| p.hull(br.prob)));
                    effect = Some(match effect {
                        None => br.effect.clone(),
                        Some(e) => effect_hull(&e, &br.effect),
                    });
                }
                None => {
                    clauses.push(Clause::Never);
                    prob = Some(prob.map_or(Interval::ZERO, |p| p.hull(Interval::ZERO)));
                }
            }
        }
        branches.push(Branch {
            condition: Condition::Any(clauses),
            prob: prob.expect("non-empty group"),
            effect: effect.expect("non-empty group"),
        });
    }
    Ok(ActionDef {
        name: name.into(),
        kind: ActionKind::Abstract,
        branches,
        instantiations: inputs.iter().map(|(a, _)| *a).collect(),
        subplan: Vec::new(),
        grouping: Some(grouping.clone()),
    })
}

enum Regressed {
    Holds,
    Fails,
    Atom(Atom),
    /// The effect leaves the atom's truth undetermined.
    Open,
}

/// Rewrites `atom` so that it holds before `effect` iff the original holds
/// after it.
fn regress_atom(atom: &Atom, effect: &Effect) -> Regressed {
    let Some(rhs) = effect.get(atom.attr) else {
        return Regressed::Atom(*atom);
    };
    if rhs.is_constant() {
        return match atom.eval(rhs.constant) {
            Truth::True => Regressed::Holds,
            Truth::False => Regressed::Fails,
            Truth::Unknown => Regressed::Open,
        };
    }
    let terms = rhs.terms();
    if terms.len() == 1
        && terms[0].var == Var::Attr(atom.attr)
        && terms[0].coef == Interval::ONE
        && rhs.constant.is_point()
    {
        let shift = rhs.constant.lo();
        let lo = add_down(atom.threshold, -shift);
        let hi = add_up(atom.threshold, -shift);
        if lo == hi {
            return Regressed::Atom(Atom::new(atom.attr, atom.rel, lo));
        }
    }
    Regressed::Open
}

/// The regressed clause and whether some atom could not be regressed
/// exactly; in that case the clause is only a necessary condition.
fn regress_clause(c: &Clause, effect: &Effect) -> (Clause, bool) {
    let atoms = match c {
        Clause::Never => return (Clause::Never, false),
        Clause::All(atoms) => atoms,
    };
    let mut out = Clause::All(Vec::new());
    let mut open = false;
    for a in atoms {
        match regress_atom(a, effect) {
            Regressed::Holds => {}
            Regressed::Fails => return (Clause::Never, false),
            Regressed::Atom(x) => out = out.and(&Clause::All(vec![x])),
            Regressed::Open => open = true,
        }
    }
    (out, open)
}

/// The condition that must hold before `effect` for `c` to hold after it.
///
/// Atoms whose truth the effect leaves undetermined (an interval-valued
/// assignment, a shift whose threshold is not representable, a non-shift
/// expression) are dropped and a `Never` alternative is added, so that under
/// [`Condition::alternatives`] the result is never `True` and is `False`
/// only where the remaining atoms already fail.
pub fn regress(c: &Condition, effect: &Effect) -> Result<Condition> {
    let (mut clauses, mut open) = (Vec::new(), false);
    for cl in c.clauses() {
        let (r, o) = regress_clause(cl, effect);
        open |= o;
        clauses.push(r);
    }
    if open {
        clauses.push(Clause::Never);
        return Ok(Condition::Any(clauses));
    }
    Ok(match c {
        Condition::All(_) => Condition::All(clauses.pop().expect("one clause")),
        Condition::Any(_) => Condition::Any(clauses),
    })
}

/// Sequential abstraction of `first` followed by `second`: one branch per
/// branch pair, with regressed conditions, multiplied probabilities and
/// composed effects. Pairs whose condition is unsatisfiable are dropped.
pub fn seq_abstract(name: &str, first: &ActionDef, second: &ActionDef) -> Result<ActionDef> {
    let branches = compose_branches(&first.branches, &second.branches).map_err(|e| match e {
        Error::Unsupported(msg) => Error::Unsupported(format!("{} then {}: {msg}", first.name, second.name)),
        other => other,
    })?;
    Ok(ActionDef {
        name: name.into(),
        kind: ActionKind::Decomposable,
        branches,
        instantiations: Vec::new(),
        subplan: Vec::new(),
        grouping: None,
    })
}

fn compose_branches(first: &[Branch], second: &[Branch]) -> Result<Vec<Branch>> {
    let mut out = Vec::with_capacity(first.len() * second.len());
    for (i, b1) in first.iter().enumerate() {
        for (j, b2) in second.iter().enumerate() {
            let regressed = regress(&b2.condition, &b1.effect)
                .map_err(|e| match e {
                    Error::Unsupported(m) => Error::Unsupported(format!("branch pair ({i}, {j}): {m}")),
                    other => other,
                })?;
            let condition = b1.condition.and(&regressed);
            if condition.is_false() {
                continue;
            }
            out.push(Branch {
                condition,
                prob: b1.prob * b2.prob,
                effect: b1.effect.then(&b2.effect),
            });
        }
    }
    Ok(out)
}

/// Merges branches with identical condition and effect by adding their
/// probability intervals.
fn merge_duplicates(branches: Vec<Branch>) -> Vec<Branch> {
    let mut out: Vec<Branch> = Vec::with_capacity(branches.len());
    for b in branches {
        match out
            .iter_mut()
            .find(|o| o.condition == b.condition && o.effect == b.effect)
        {
            Some(o) => o.prob = (o.prob + b.prob).clamp(0.0, 1.0),
            None => out.push(b),
        }
    }
    out
}

/// Most branches kept in the derived description of a decomposable action.
pub const MACRO_BRANCH_CAP: usize = 48;

/// One branch standing for both `a` and `b`: the alternatives of both
/// conditions, the summed probability and the hulled effect.
fn merge_pair(a: &Branch, b: &Branch) -> Branch {
    let condition = if a.condition == b.condition {
        a.condition.clone()
    } else {
        let mut clauses = a.condition.clauses().to_vec();
        for c in b.condition.clauses() {
            if !clauses.contains(c) {
                clauses.push(c.clone());
            }
        }
        Condition::Any(clauses)
    };
    Branch {
        condition,
        prob: (a.prob + b.prob).clamp(0.0, 1.0),
        effect: effect_hull(&a.effect, &b.effect),
    }
}

/// Merges branches until at most `cap` remain. Each round pairs branches
/// cheapest first, where the cost is the probability-weighted growth of the
/// effect hull and any condition mismatch dominates.
pub fn compact(d: &Domain, mut branches: Vec<Branch>, cap: usize) -> Vec<Branch> {
    const CONDITION_MISMATCH: f64 = 1e6;
    let cap = cap.max(1);
    let weights = attr_weights(d, &[branches.as_slice()]);
    while branches.len() > cap {
        let spread: Vec<f64> = branches.iter().map(|b| effect_spread(&b.effect, &weights)).collect();
        let mut costs: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..branches.len() {
            for j in i + 1..branches.len() {
                let (a, b) = (&branches[i], &branches[j]);
                let (pa, pb) = (a.prob.hi(), b.prob.hi());
                let hull = effect_spread(&effect_hull(&a.effect, &b.effect), &weights);
                let mut cost = (hull * (pa + pb) - spread[i] * pa - spread[j] * pb).max(0.0);
                if a.condition != b.condition {
                    cost += CONDITION_MISMATCH + pa + pb;
                }
                costs.push((cost, i, j));
            }
        }
        costs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut excess = branches.len() - cap;
        let mut merged: Vec<Option<Branch>> = vec![None; branches.len()];
        let mut used = vec![false; branches.len()];
        for (_, i, j) in costs {
            if excess == 0 {
                break;
            }
            if used[i] || used[j] {
                continue;
            }
            used[i] = true;
            used[j] = true;
            merged[i] = Some(merge_pair(&branches[i], &branches[j]));
            excess -= 1;
        }
        branches = branches
            .into_iter()
            .enumerate()
            .filter_map(|(i, b)| match merged[i].take() {
                Some(m) => Some(m),
                None if used[i] => None,
                None => Some(b),
            })
            .collect();
    }
    branches
}

/// Refinements of a non-primitive action: one single-step sequence per
/// instantiation, or the subplan.
pub fn expand(a: ActionId, d: &Domain) -> Result<Vec<Vec<ActionId>>> {
    let def = d.actions.get(a).ok_or(Error::UnknownAction(a))?;
    match def.kind {
        ActionKind::Primitive => Err(Error::Contract("primitive actions cannot be expanded")),
        ActionKind::Abstract => Ok(def.instantiations.iter().map(|i| vec![*i]).collect()),
        ActionKind::Decomposable => Ok(vec![def.subplan.clone()]),
    }
}

/// Per-attribute weights for grouping costs: the inverse of the declared
/// range width, or of the largest magnitude an effect assigns.
fn attr_weights(d: &Domain, inputs: &[&[Branch]]) -> Vec<f64> {
    let mut scale = vec![1.0_f64; d.attributes.len()];
    for (a, decl) in d.attributes.iter().enumerate() {
        if let Some(r) = decl.effective_range() {
            scale[a] = scale[a].max(r.width());
        }
    }
    for bs in inputs {
        for b in bs.iter() {
            for (a, e) in b.effect.assignments() {
                if d.attributes[*a].effective_range().is_none() {
                    let m = e.constant.lo().abs().max(e.constant.hi().abs());
                    scale[*a] = scale[*a].max(m);
                }
            }
        }
    }
    scale.into_iter().map(|s| 1.0 / s).collect()
}

fn effect_spread(e: &Effect, weights: &[f64]) -> f64 {
    // a coefficient on attribute b spreads the result by roughly the
    // magnitude of b, which is 1 / weight(b)
    e.assignments()
        .iter()
        .map(|(a, x)| {
            x.spread(|v| match v {
                Var::Attr(b) => 1.0 / weights[b],
                Var::Const(_) => 1.0,
            }) * weights[*a]
        })
        .sum()
}

/// Greedy default grouping: seeds one group per branch of the input with the
/// most branches, then assigns the other inputs' branches pair by pair,
/// cheapest first, where the cost is the growth of the weighted effect hull
/// and probability hull, and any condition mismatch dominates.
pub fn greedy_grouping(d: &Domain, inputs: &[&[Branch]]) -> BranchGrouping {
    const CONDITION_MISMATCH: f64 = 1e6;
    let weights = attr_weights(d, inputs);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    order.sort_by(|a, b| inputs[*b].len().cmp(&inputs[*a].len()));
    let seed = order[0];
    struct Group {
        refs: Vec<BranchRef>,
        condition: Condition,
        prob: Interval,
        effect: Effect,
    }
    let mut groups: Vec<Group> = inputs[seed]
        .iter()
        .enumerate()
        .map(|(b, br)| Group {
            refs: vec![BranchRef { input: seed, branch: b }],
            condition: br.condition.clone(),
            prob: br.prob,
            effect: br.effect.clone(),
        })
        .collect();
    for &input in &order[1..] {
        let branches = inputs[input];
        let mut costs: Vec<(f64, usize, usize)> = Vec::new();
        for (b, br) in branches.iter().enumerate() {
            for (g, grp) in groups.iter().enumerate() {
                let hull = effect_hull(&grp.effect, &br.effect);
                let mut cost = effect_spread(&hull, &weights) - effect_spread(&grp.effect, &weights);
                cost += grp.prob.hull(br.prob).width() - grp.prob.width();
                if grp.condition != br.condition {
                    cost += CONDITION_MISMATCH;
                }
                costs.push((cost, b, g));
            }
        }
        costs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut branch_done = vec![false; branches.len()];
        let mut group_taken = vec![false; groups.len()];
        for (_, b, g) in costs {
            if branch_done[b] || group_taken[g] {
                continue;
            }
            branch_done[b] = true;
            group_taken[g] = true;
            let br = &branches[b];
            let grp = &mut groups[g];
            grp.refs.push(BranchRef { input, branch: b });
            grp.effect = effect_hull(&grp.effect, &br.effect);
            grp.prob = grp.prob.hull(br.prob);
        }
        for (b, done) in branch_done.iter().enumerate() {
            if !done {
                let br = &branches[b];
                groups.push(Group {
                    refs: vec![BranchRef { input, branch: b }],
                    condition: br.condition.clone(),
                    prob: br.prob,
                    effect: br.effect.clone(),
                });
            }
        }
    }
    BranchGrouping {
        groups: groups
            .into_iter()
            .map(|g| {
                let mut r = g.refs;
                r.sort();
                r
            })
            .collect(),
    }
}

/// How projection decides whether a branch of a description applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Semantics {
    /// Standard three-valued evaluation of authored conditions.
    Authored,
    /// Clause-per-alternative evaluation of derived descriptions.
    Alternatives,
}

/// What projection uses for one action.
#[derive(Clone, Debug, PartialEq)]
pub struct Description {
    pub branches: Vec<Branch>,
    pub semantics: Semantics,
    /// For abstract actions, `members[g][i]` is the branch of instantiation
    /// `i` that abstract branch `g` stands for.
    pub members: Option<Vec<Vec<Option<usize>>>>,
}

impl Description {
    pub fn applies(&self, b: &Branch, s: &WorldState) -> Result<Truth> {
        match self.semantics {
            Semantics::Authored => b.condition.eval(s),
            Semantics::Alternatives => b.condition.alternatives(s),
        }
    }
}

/// A validated domain with constants bound and a projection description for
/// every primitive and abstract action (and for every decomposable action an
/// abstraction needs).
#[derive(Clone, Debug)]
pub struct Model {
    domain: Domain,
    descriptions: Vec<Option<Description>>,
    atoms: Vec<Vec<ActionId>>,
    initial: WorldState,
}

impl Model {
    pub fn new(domain: Domain) -> Result<Model> {
        let n = domain.actions.len();
        if domain.root >= n {
            return Err(Error::UnknownAction(domain.root));
        }
        let consts = domain.constant_values();
        let mut bound = domain.clone();
        for a in &mut bound.actions {
            for b in &mut a.branches {
                b.effect = b.effect.bind_constants(&consts)?;
            }
        }
        let bind = |gs: &[Guarded]| -> Result<Vec<Guarded>> {
            gs.iter()
                .map(|g| {
                    Ok(Guarded {
                        guard: g.guard.clone(),
                        value: g.value.bind_constants(&consts)?,
                    })
                })
                .collect()
        };
        bound.utility = UtilityModel {
            ug: bind(&domain.utility.ug)?,
            ur: bind(&domain.utility.ur)?,
            k_r: domain.utility.k_r,
        };
        let initial = bound.initial_state();
        let mut model = Model {
            domain: bound,
            descriptions: vec![None; n],
            atoms: vec![Vec::new(); n],
            initial,
        };
        let mut visiting = vec![false; n];
        for a in 0..n {
            model.flatten(a, &mut visiting)?;
        }
        for a in 0..n {
            if model.domain.actions[a].kind != ActionKind::Decomposable {
                model.describe(a, 0)?;
            }
        }
        Ok(model)
    }

    fn flatten(&mut self, a: ActionId, visiting: &mut [bool]) -> Result<()> {
        if !self.atoms[a].is_empty() {
            return Ok(());
        }
        if visiting[a] {
            return Err(Error::Domain(format!("cycle through {}", self.domain.actions[a].name)));
        }
        visiting[a] = true;
        let def = &self.domain.actions[a];
        let atoms = match def.kind {
            ActionKind::Decomposable => {
                let sub = def.subplan.clone();
                let mut out = Vec::new();
                for s in sub {
                    self.flatten(s, visiting)?;
                    out.extend_from_slice(&self.atoms[s]);
                }
                out
            }
            _ => {
                for c in def.instantiations.clone() {
                    self.flatten(c, visiting)?;
                }
                vec![a]
            }
        };
        visiting[a] = false;
        self.atoms[a] = atoms;
        Ok(())
    }

    fn describe(&mut self, a: ActionId, depth: usize) -> Result<()> {
        if self.descriptions[a].is_some() {
            return Ok(());
        }
        if depth > self.domain.actions.len() {
            return Err(Error::Domain("network is cyclic".into()));
        }
        let def = self.domain.actions[a].clone();
        let desc = match def.kind {
            ActionKind::Primitive => Description {
                branches: def.branches.clone(),
                semantics: Semantics::Authored,
                members: None,
            },
            ActionKind::Abstract => {
                for i in &def.instantiations {
                    self.describe(*i, depth + 1)?;
                }
                let inputs: Vec<(ActionId, &[Branch])> = def
                    .instantiations
                    .iter()
                    .map(|i| (*i, self.descriptions[*i].as_ref().expect("described").branches.as_slice()))
                    .collect();
                let grouping = match &def.grouping {
                    Some(g) => g.clone(),
                    None => {
                        let slices: Vec<&[Branch]> = inputs.iter().map(|(_, b)| *b).collect();
                        greedy_grouping(&self.domain, &slices)
                    }
                };
                let abs = inter_abstract(&def.name, &inputs, &grouping)?;
                Description {
                    branches: abs.branches,
                    semantics: Semantics::Alternatives,
                    members: Some(grouping.members(inputs.len())),
                }
            }
            ActionKind::Decomposable => {
                for s in &def.subplan {
                    self.describe(*s, depth + 1)?;
                }
                let mut acc: Option<Vec<Branch>> = None;
                for s in &def.subplan {
                    let next = &self.descriptions[*s].as_ref().expect("described").branches;
                    acc = Some(match acc {
                        None => next.clone(),
                        Some(prev) => {
                            let composed = merge_duplicates(compose_branches(&prev, next).map_err(|e| match e {
                                Error::Unsupported(m) => Error::Unsupported(format!(
                                    "sequential abstraction of {} at {}: {m}",
                                    def.name, self.domain.actions[*s].name
                                )),
                                other => other,
                            })?);
                            compact(&self.domain, composed, MACRO_BRANCH_CAP)
                        }
                    });
                }
                Description {
                    branches: acc.unwrap_or_default(),
                    semantics: Semantics::Alternatives,
                    members: None,
                }
            }
        };
        self.descriptions[a] = Some(desc);
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn initial_state(&self) -> &WorldState {
        &self.initial
    }

    pub fn utility(&self) -> &UtilityModel {
        &self.domain.utility
    }

    pub fn kind(&self, a: ActionId) -> ActionKind {
        self.domain.actions[a].kind
    }

    pub fn is_primitive(&self, a: ActionId) -> bool {
        self.kind(a) == ActionKind::Primitive
    }

    pub fn is_primitive_plan(&self, steps: &[ActionId]) -> bool {
        steps.iter().all(|a| self.is_primitive(*a))
    }

    /// The description projection uses for `a`; `None` for a decomposable
    /// action no abstraction needed.
    pub fn description(&self, a: ActionId) -> Option<&Description> {
        self.descriptions.get(a).and_then(|d| d.as_ref())
    }

    /// Primitive and abstract actions a step projects through, with
    /// decomposable actions replaced by their subplans recursively.
    pub fn atoms(&self, a: ActionId) -> &[ActionId] {
        &self.atoms[a]
    }

    pub fn flatten_plan(&self, steps: &[ActionId]) -> Vec<ActionId> {
        steps.iter().flat_map(|s| self.atoms[*s].iter().copied()).collect()
    }

    /// Number of child plans expanding `a` produces.
    pub fn expansion_count(&self, a: ActionId) -> usize {
        let def = &self.domain.actions[a];
        match def.kind {
            ActionKind::Primitive => 0,
            ActionKind::Abstract => def.instantiations.len(),
            ActionKind::Decomposable => 1,
        }
    }

    pub fn expand(&self, a: ActionId) -> Result<Vec<Vec<ActionId>>> {
        expand(a, &self.domain)
    }

    pub fn materialized(&self) -> BTreeMap<ActionId, usize> {
        self.descriptions
            .iter()
            .enumerate()
            .filter_map(|(a, d)| d.as_ref().map(|d| (a, d.branches.len())))
            .collect()
    }

    /// Human-readable label for an action.
    pub fn name(&self, a: ActionId) -> &str {
        self.domain.action_name(a)
    }

    pub fn describe_plan(&self, steps: &[ActionId]) -> String {
        let names: Vec<&str> = steps.iter().map(|a| self.name(*a)).collect();
        format!("<{}>", names.join(", "))
    }
}
