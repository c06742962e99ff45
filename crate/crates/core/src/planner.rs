//! The refinement loop: evaluate, prune, pick the most promising abstract
//! plan, expand one of its steps, repeat until every survivor is primitive.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::abstraction::Model;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::model::ActionId;
use crate::projection::{evaluate_plan, Evaluation};
use crate::sensitivity::{step_sensitivity, TracedPlan};

/// Default slack when comparing expected utilities for pruning and ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    /// Creation order; the tie-breaker for plan selection.
    pub id: usize,
    pub steps: Vec<ActionId>,
    pub eu: Interval,
    pub parent: Option<usize>,
    pub refined_position: Option<usize>,
    pub primitive: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub plans_evaluated: usize,
    pub expansions: usize,
    /// Largest number of chronicle entries held by any single projection.
    pub peak_states: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Strategy {
    FirstAction,
    FixedPriority,
    /// `fraction` of the most likely chronicles analysed; 1.0 is exact.
    Sensitivity { fraction: f64 },
}

impl Strategy {
    pub fn sensitivity() -> Strategy {
        Strategy::Sensitivity { fraction: 1.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::FirstAction => "first",
            Strategy::FixedPriority => "priority",
            Strategy::Sensitivity { .. } => "sensitivity",
        }
    }
}

/// Evaluates the children of one expansion. Implementations may run the
/// evaluations concurrently but must return results in input order.
pub trait Evaluator {
    fn evaluate_all(&self, model: &Model, plans: &[Vec<ActionId>]) -> Vec<Result<Evaluation>>;
}

pub struct Sequential;

impl Evaluator for Sequential {
    fn evaluate_all(&self, model: &Model, plans: &[Vec<ActionId>]) -> Vec<Result<Evaluation>> {
        plans.iter().map(|p| evaluate_plan(model, p)).collect()
    }
}

/// Hooks into the loop, for tracing and for checking invariants.
pub trait Observer {
    fn expanded(&mut self, _parent: &Plan, _position: usize, _children: &[Plan]) {}
    /// Called after every prune with the current frontier; the frontier seen
    /// after `n` expansions is what a run with budget `n` returns.
    fn frontier(&mut self, _plans: &[Plan], _stats: &Stats) {}
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub plans: Vec<Plan>,
    pub stats: Stats,
    /// False when a budget stopped the run before every plan was primitive.
    pub complete: bool,
}

/// Index of the non-primitive plan with the highest upper bound, lowest id
/// first among equals.
pub fn select_plan(plans: &[Plan]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in plans.iter().enumerate() {
        if p.primitive {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let q = &plans[b];
                if p.eu.hi() > q.eu.hi() || (p.eu.hi() == q.eu.hi() && p.id < q.id) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Removes every plan whose upper bound is below the best lower bound by
/// more than `tol`; plans touching the bound survive.
pub fn prune(plans: &mut Vec<Plan>, tol: f64) {
    let Some(max_lo) = plans.iter().map(|p| p.eu.lo()).reduce(f64::max) else {
        return;
    };
    plans.retain(|p| p.eu.hi() >= max_lo - tol);
}

fn non_primitive<'a>(model: &'a Model, steps: &'a [ActionId]) -> impl Iterator<Item = usize> + 'a {
    steps
        .iter()
        .enumerate()
        .filter(move |(_, a)| !model.is_primitive(**a))
        .map(|(i, _)| i)
}

pub fn select_action_first(model: &Model, steps: &[ActionId]) -> Result<usize> {
    non_primitive(model, steps)
        .next()
        .ok_or(Error::Contract("plan is primitive"))
}

/// Leftmost non-primitive step of highest priority.
pub fn select_action_priority(model: &Model, steps: &[ActionId]) -> Result<usize> {
    let mut best: Option<(usize, i64)> = None;
    for i in non_primitive(model, steps) {
        let p = model.domain().priority(steps[i]);
        if best.is_none_or(|(_, bp)| p > bp) {
            best = Some((i, p));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::Contract("plan is primitive"))
}

/// Sensitivity per instantiation, for every non-primitive step.
pub fn step_weights(model: &Model, steps: &[ActionId], fraction: f64) -> Result<(Vec<(usize, f64)>, usize)> {
    let tp = TracedPlan::new(model, steps)?;
    let mut out = Vec::new();
    for i in non_primitive(model, steps) {
        let s = step_sensitivity(model, &tp, i, fraction)?;
        out.push((i, s / model.expansion_count(steps[i]) as f64));
    }
    Ok((out, tp.peak_states))
}

/// Leftmost non-primitive step maximising sensitivity per child plan.
pub fn select_action_sensitivity(model: &Model, steps: &[ActionId], fraction: f64) -> Result<usize> {
    Ok(select_weighted(&step_weights(model, steps, fraction)?.0)?)
}

fn select_weighted(weights: &[(usize, f64)]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(i, w) in weights {
        let better = match best {
            None => true,
            Some((_, bw)) => w > bw + 1e-12 * (1.0 + bw.abs()),
        };
        if better {
            best = Some((i, w));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::Contract("plan is primitive"))
}

/// A configured run of the refinement loop.
pub struct Planner<'a> {
    model: &'a Model,
    strategy: Strategy,
    max_expansions: Option<usize>,
    tie_tolerance: f64,
    evaluator: &'a dyn Evaluator,
    observer: Option<&'a mut dyn Observer>,
    stop: Option<Box<dyn FnMut() -> bool + 'a>>,
}

impl<'a> Planner<'a> {
    pub fn new(model: &'a Model, strategy: Strategy) -> Planner<'a> {
        Planner {
            model,
            strategy,
            max_expansions: None,
            tie_tolerance: TIE_TOLERANCE,
            evaluator: &Sequential,
            observer: None,
            stop: None,
        }
    }

    pub fn max_expansions(mut self, n: usize) -> Self {
        self.max_expansions = Some(n);
        self
    }

    pub fn tie_tolerance(mut self, tol: f64) -> Self {
        self.tie_tolerance = tol;
        self
    }

    pub fn evaluator(mut self, e: &'a dyn Evaluator) -> Self {
        self.evaluator = e;
        self
    }

    pub fn observer(mut self, o: &'a mut dyn Observer) -> Self {
        self.observer = Some(o);
        self
    }

    /// Polled before every expansion; returning true stops the run (used for
    /// wall-clock budgets).
    pub fn stop_when(mut self, f: impl FnMut() -> bool + 'a) -> Self {
        self.stop = Some(Box::new(f));
        self
    }

    fn select_action(&self, steps: &[ActionId], stats: &mut Stats) -> Result<usize> {
        match self.strategy {
            Strategy::FirstAction => select_action_first(self.model, steps),
            Strategy::FixedPriority => select_action_priority(self.model, steps),
            Strategy::Sensitivity { fraction } => {
                let (w, peak) = step_weights(self.model, steps, fraction)?;
                stats.peak_states = stats.peak_states.max(peak);
                select_weighted(&w)
            }
        }
    }

    pub fn run(mut self) -> Result<Outcome> {
        let model = self.model;
        let mut stats = Stats::default();
        let root = model.domain().root;
        let eval = evaluate_plan(model, &[root])?;
        stats.plans_evaluated = 1;
        stats.peak_states = eval.peak_states;
        let mut next_id = 1;
        let mut plans = alloc::vec![Plan {
            id: 0,
            steps: alloc::vec![root],
            eu: eval.eu,
            parent: None,
            refined_position: None,
            primitive: model.is_primitive(root),
        }];
        let complete = loop {
            prune(&mut plans, self.tie_tolerance);
            if let Some(o) = self.observer.as_deref_mut() {
                o.frontier(&plans, &stats);
            }
            let Some(pi) = select_plan(&plans) else {
                break true;
            };
            if self.max_expansions.is_some_and(|m| stats.expansions >= m) {
                break false;
            }
            if let Some(stop) = self.stop.as_mut() {
                if stop() {
                    break false;
                }
            }
            let parent = plans.remove(pi);
            let pos = self.select_action(&parent.steps, &mut stats)?;
            let mut child_steps = Vec::new();
            for seq in model.expand(parent.steps[pos])? {
                let mut steps = Vec::with_capacity(parent.steps.len() + seq.len() - 1);
                steps.extend_from_slice(&parent.steps[..pos]);
                steps.extend_from_slice(&seq);
                steps.extend_from_slice(&parent.steps[pos + 1..]);
                // the same sequence can be reachable along two network paths
                if plans.iter().any(|p| p.steps == steps) || child_steps.contains(&steps) {
                    continue;
                }
                child_steps.push(steps);
            }
            let results = self.evaluator.evaluate_all(model, &child_steps);
            stats.expansions += 1;
            let mut children = Vec::with_capacity(child_steps.len());
            for (steps, r) in child_steps.into_iter().zip(results) {
                let e = r?;
                stats.plans_evaluated += 1;
                stats.peak_states = stats.peak_states.max(e.peak_states);
                children.push(Plan {
                    id: next_id,
                    primitive: model.is_primitive_plan(&steps),
                    steps,
                    eu: e.eu,
                    parent: Some(parent.id),
                    refined_position: Some(pos),
                });
                next_id += 1;
            }
            if let Some(o) = self.observer.as_deref_mut() {
                o.expanded(&parent, pos, &children);
            }
            plans.extend(children);
        };
        Ok(Outcome { plans, stats, complete })
    }
}

/// Runs the loop to completion or until `max_expansions`.
pub fn drips_plan(model: &Model, strategy: Strategy, max_expansions: Option<usize>) -> Result<Outcome> {
    let mut p = Planner::new(model, strategy);
    if let Some(m) = max_expansions {
        p = p.max_expansions(m);
    }
    p.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ActionDef, Branch, Domain, Guarded, UtilityModel};
    use crate::model::{AffineExpr, AttributeDecl, Condition, Effect};
    use alloc::collections::BTreeMap;
    use alloc::vec;

    fn plan(id: usize, lo: f64, hi: f64, primitive: bool) -> Plan {
        Plan {
            id,
            steps: vec![id],
            eu: Interval::new(lo, hi),
            parent: None,
            refined_position: None,
            primitive,
        }
    }

    #[test]
    fn plan_selection() {
        assert_eq!(select_plan(&[plan(1, 2.0, 9.0, false), plan(2, 4.0, 7.0, true)]), Some(0));
        assert_eq!(select_plan(&[plan(1, 2.0, 9.0, false), plan(2, 3.0, 9.0, false)]), Some(0));
        assert_eq!(select_plan(&[plan(1, 5.0, 5.0, true), plan(2, 1.0, 5.0, false)]), Some(1));
        assert_eq!(select_plan(&[plan(1, 5.0, 5.0, true)]), None);
    }

    fn ids(plans: &[Plan]) -> Vec<usize> {
        plans.iter().map(|p| p.id).collect()
    }

    #[test]
    fn pruning() {
        let mut f = vec![plan(1, 5.0, 6.0, false), plan(2, 1.0, 4.0, false)];
        prune(&mut f, 0.0);
        assert_eq!(ids(&f), vec![1]);
        let mut f = vec![plan(1, 5.0, 6.0, false), plan(2, 1.0, 5.0, false)];
        prune(&mut f, 0.0);
        assert_eq!(ids(&f), vec![1, 2]);
        let mut f = vec![plan(1, 2.0, 9.0, false), plan(2, 4.0, 7.0, false), plan(3, 0.0, 3.0, false)];
        prune(&mut f, TIE_TOLERANCE);
        assert_eq!(ids(&f), vec![1, 2]);
    }

    fn gain(name: &str, v: f64) -> ActionDef {
        ActionDef::primitive(
            name,
            vec![Branch::new(
                Condition::TRUE,
                Interval::ONE,
                Effect::new(vec![(0, AffineExpr::shift(0, Interval::point(v)))]).unwrap(),
            )],
        )
    }

    fn selection_domain() -> Domain {
        // 0 P, 1 Q primitives; 2 A abstract; 3 B abstract; 4 D decomposable
        Domain {
            attributes: vec![AttributeDecl::numeric("score", 0.0)],
            constants: Vec::new(),
            actions: vec![
                gain("P", 5.0),
                gain("Q", 3.0),
                ActionDef::abstraction("A", vec![0, 1]),
                ActionDef::abstraction("B", vec![0, 1]),
                ActionDef::decomposition("D", vec![0, 1]),
            ],
            root: 2,
            initial: vec![0.0],
            utility: UtilityModel {
                ug: vec![Guarded {
                    guard: Condition::TRUE,
                    value: AffineExpr::attr(0),
                }],
                ur: UtilityModel::zero().ur,
                k_r: 1.0,
            },
            priorities: BTreeMap::new(),
        }
    }

    #[test]
    fn action_selection() {
        let mut d = selection_domain();
        d.priorities.insert(2, 3);
        d.priorities.insert(3, 7);
        let m = Model::new(d.clone()).unwrap();
        assert_eq!(select_action_first(&m, &[0, 3]).unwrap(), 1);
        assert_eq!(select_action_first(&m, &[2, 3]).unwrap(), 0);
        assert_eq!(select_action_first(&m, &[4]).unwrap(), 0);
        assert!(matches!(select_action_first(&m, &[0, 1]), Err(Error::Contract(_))));
        assert_eq!(select_action_priority(&m, &[2, 3, 3]).unwrap(), 1);
        d.priorities.clear();
        let m = Model::new(d.clone()).unwrap();
        assert_eq!(select_action_priority(&m, &[2, 3]).unwrap(), 0);
        d.priorities.insert(0, 9);
        d.priorities.insert(1, 9);
        d.priorities.insert(3, 1);
        let m = Model::new(d).unwrap();
        assert_eq!(select_action_priority(&m, &[0, 1, 3]).unwrap(), 2);
    }

    #[test]
    fn weighted_selection_ties_go_left() {
        assert_eq!(select_weighted(&[(0, 3.0), (1, 2.0)]).unwrap(), 0);
        assert_eq!(select_weighted(&[(0, 2.0), (3, 2.0)]).unwrap(), 0);
        assert_eq!(select_weighted(&[(2, 0.0), (4, 0.0)]).unwrap(), 2);
    }

    #[test]
    fn single_primitive_root() {
        let mut d = selection_domain();
        d.root = 0;
        let m = Model::new(d).unwrap();
        let out = drips_plan(&m, Strategy::FirstAction, None).unwrap();
        assert_eq!(out.plans.len(), 1);
        assert_eq!(out.stats.plans_evaluated, 1);
    }

    #[test]
    fn picks_the_better_instantiation() {
        let m = Model::new(selection_domain()).unwrap();
        for s in [Strategy::FirstAction, Strategy::FixedPriority, Strategy::sensitivity()] {
            let out = drips_plan(&m, s, None).unwrap();
            assert_eq!(out.plans.len(), 1);
            assert_eq!(out.plans[0].steps, vec![0]);
            assert_eq!(out.plans[0].eu, Interval::point(5.0));
            assert_eq!(out.stats.plans_evaluated, 3);
            assert!(out.complete);
        }
    }

    #[test]
    fn zero_budget_returns_root() {
        let m = Model::new(selection_domain()).unwrap();
        let out = drips_plan(&m, Strategy::FirstAction, Some(0)).unwrap();
        assert_eq!(out.plans.len(), 1);
        assert_eq!(out.plans[0].steps, vec![2]);
        assert_eq!(out.plans[0].eu, Interval::new(3.0, 5.0));
        assert!(!out.complete);
    }
}
