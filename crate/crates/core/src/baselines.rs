//! Reference answers: exhaustive enumeration of the concrete plan space and a
//! depth-first branch-and-bound over the decision tree of action choices.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::abstraction::Model;
use crate::domain::ActionKind;
use crate::error::Result;
use crate::interval::Interval;
use crate::model::ActionId;
use crate::planner::TIE_TOLERANCE;
use crate::projection::{evaluate_plan, evaluate_set, project_step, ChronicleSet, Merge};

/// Every distinct primitive sequence derivable from the root, expanding the
/// leftmost non-primitive step first.
pub fn enumerate_plans(model: &Model) -> Vec<Vec<ActionId>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut stack = vec![vec![model.domain().root]];
    while let Some(steps) = stack.pop() {
        let Some(pos) = steps.iter().position(|a| !model.is_primitive(*a)) else {
            if seen.insert(steps.clone()) {
                out.push(steps);
            }
            continue;
        };
        let children = model.expand(steps[pos]).expect("non-primitive step");
        // reversed so the first refinement is explored first
        for seq in children.into_iter().rev() {
            let mut next = Vec::with_capacity(steps.len() + seq.len());
            next.extend_from_slice(&steps[..pos]);
            next.extend_from_slice(&seq);
            next.extend_from_slice(&steps[pos + 1..]);
            stack.push(next);
        }
    }
    out
}

/// Number of concrete plans without materialising them; duplicates reachable
/// along several network paths are counted once per path.
pub fn count_plan_paths(model: &Model) -> u128 {
    fn count(model: &Model, a: ActionId, memo: &mut Vec<Option<u128>>) -> u128 {
        if let Some(n) = memo[a] {
            return n;
        }
        let def = &model.domain().actions[a];
        let n = match def.kind {
            ActionKind::Primitive => 1,
            ActionKind::Abstract => def.instantiations.iter().map(|i| count(model, *i, memo)).sum(),
            ActionKind::Decomposable => def.subplan.iter().map(|s| count(model, *s, memo)).product(),
        };
        memo[a] = Some(n);
        n
    }
    let mut memo = vec![None; model.domain().actions.len()];
    count(model, model.domain().root, &mut memo)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub steps: Vec<ActionId>,
    pub eu: Interval,
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    /// Optimal plans in enumeration order.
    pub optimal: Vec<Scored>,
    pub plans_evaluated: usize,
    pub peak_states: usize,
}

/// Evaluates every concrete plan and keeps those within `TIE_TOLERANCE` of
/// the best midpoint.
pub fn enumerate_optimal(model: &Model) -> Result<Enumeration> {
    let plans = enumerate_plans(model);
    let mut scored = Vec::with_capacity(plans.len());
    let mut peak = 0;
    for steps in plans {
        let e = evaluate_plan(model, &steps)?;
        peak = peak.max(e.peak_states);
        scored.push(Scored { steps, eu: e.eu });
    }
    let n = scored.len();
    let best = scored.iter().map(|s| s.eu.mid()).fold(f64::NEG_INFINITY, f64::max);
    scored.retain(|s| s.eu.mid() >= best - TIE_TOLERANCE);
    Ok(Enumeration {
        optimal: scored,
        plans_evaluated: n,
        peak_states: peak,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BbStats {
    /// Decision-tree nodes visited.
    pub nodes: usize,
    /// Expected-utility computations: complete plans plus bounds.
    pub evaluations: usize,
    pub leaves: usize,
    pub prunes: usize,
    /// World states produced by projection, at tree nodes and inside bounds:
    /// the chance-node work of evaluating the tree.
    pub states_projected: usize,
    /// Largest number of chronicle entries held at once across the retained
    /// node sets and the projection in progress.
    pub peak_states: usize,
}

#[derive(Clone, Debug)]
pub struct BbOutcome {
    pub optimal: Vec<Scored>,
    pub stats: BbStats,
}

struct Search<'m> {
    model: &'m Model,
    best: f64,
    /// Optimal plans so far, keyed by their choice route for ordering.
    optimal: Vec<(Vec<u32>, Scored)>,
    retained: usize,
    stats: BbStats,
}

/// A decision-tree node: the concrete prefix with its chronicle set, and the
/// unresolved suffix, which is empty or starts with a choice.
struct Node {
    prefix: Vec<ActionId>,
    set: ChronicleSet,
    suffix: Vec<ActionId>,
    route: Vec<u32>,
}

impl Search<'_> {
    fn hold(&mut self, extra: usize) {
        self.stats.peak_states = self.stats.peak_states.max(self.retained + extra);
    }

    /// Projects leading primitive steps, splicing in subplans, until the next
    /// choice or the end of the plan.
    fn advance(&mut self, mut node: Node) -> Result<Node> {
        let mut at = 0;
        while let Some(&first) = node.suffix.get(at) {
            let def = &self.model.domain().actions[first];
            match def.kind {
                ActionKind::Primitive => {
                    let next = project_step(self.model, &node.set, first, Merge::States)?;
                    self.stats.states_projected += next.len();
                    self.hold(node.set.len() + next.len());
                    node.set = next;
                    node.prefix.push(first);
                    at += 1;
                }
                ActionKind::Decomposable => {
                    let sub = def.subplan.clone();
                    node.suffix.splice(at..=at, sub);
                }
                ActionKind::Abstract => break,
            }
        }
        node.suffix.drain(..at);
        Ok(node)
    }

    fn leaf(&mut self, node: &Node) -> Result<()> {
        let (eu, _) = evaluate_set(&node.set, self.model.utility())?;
        self.stats.evaluations += 1;
        self.stats.leaves += 1;
        let v = eu.mid();
        if v > self.best + TIE_TOLERANCE {
            self.best = v;
            self.optimal.retain(|(_, s)| s.eu.mid() >= v - TIE_TOLERANCE);
        }
        if v >= self.best - TIE_TOLERANCE {
            match self.optimal.iter_mut().find(|(_, s)| s.steps == node.prefix) {
                Some((route, _)) => *route = route.clone().min(node.route.clone()),
                None => self.optimal.push((
                    node.route.clone(),
                    Scored {
                        steps: node.prefix.clone(),
                        eu,
                    },
                )),
            }
        }
        Ok(())
    }

    /// Upper bound on the best completion: the abstract remainder projected
    /// from the node's set.
    fn bound(&mut self, node: &Node) -> Result<f64> {
        let atoms = self.model.flatten_plan(&node.suffix);
        let mut cur = node.set.clone();
        for a in atoms {
            let next = project_step(self.model, &cur, a, Merge::States)?;
            self.stats.states_projected += next.len();
            self.hold(cur.len() + next.len());
            cur = next;
        }
        let (eu, _) = evaluate_set(&cur, self.model.utility())?;
        self.stats.evaluations += 1;
        Ok(eu.hi())
    }

    /// Materialises every child of a choice node, keeps their sets while the
    /// subtree is searched, and visits them best bound first.
    fn choice(&mut self, node: Node) -> Result<()> {
        self.stats.nodes += 1;
        if node.suffix.is_empty() {
            return self.leaf(&node);
        }
        let def = &self.model.domain().actions[node.suffix[0]];
        let insts = def.instantiations.clone();
        let mut children = Vec::with_capacity(insts.len());
        for (k, i) in insts.into_iter().enumerate() {
            let mut suffix = Vec::with_capacity(node.suffix.len());
            suffix.push(i);
            suffix.extend_from_slice(&node.suffix[1..]);
            let mut route = node.route.clone();
            route.push(k as u32);
            let child = self.advance(Node {
                prefix: node.prefix.clone(),
                set: node.set.clone(),
                suffix,
                route,
            })?;
            self.retained += child.set.len();
            self.hold(0);
            children.push(child);
        }
        let mut scored = Vec::with_capacity(children.len());
        for child in children {
            if child.suffix.is_empty() {
                self.stats.nodes += 1;
                self.leaf(&child)?;
                self.retained -= child.set.len();
            } else {
                let b = self.bound(&child)?;
                scored.push((b, child));
            }
        }
        scored.sort_by(|x, y| y.0.total_cmp(&x.0));
        for (b, child) in scored {
            let held = child.set.len();
            if b < self.best - TIE_TOLERANCE {
                self.stats.prunes += 1;
            } else {
                self.choice(child)?;
            }
            self.retained -= held;
        }
        Ok(())
    }
}

/// Depth-first branch and bound over the decision tree of action choices.
/// A choice node projects all of its children and keeps their chronicle sets
/// while its subtree is searched; children are visited best bound first and
/// cut when projecting their abstract remainder cannot reach the best
/// complete plan found so far.
pub fn bb_decision_tree(model: &Model) -> Result<BbOutcome> {
    let mut s = Search {
        model,
        best: f64::NEG_INFINITY,
        optimal: Vec::new(),
        retained: 0,
        stats: BbStats::default(),
    };
    let root = s.advance(Node {
        prefix: Vec::new(),
        set: ChronicleSet::singleton(model.initial_state().clone()),
        suffix: vec![model.domain().root],
        route: Vec::new(),
    })?;
    s.retained = root.set.len();
    s.hold(0);
    s.choice(root)?;
    let best = s.best;
    let mut optimal = s.optimal;
    optimal.retain(|(_, p)| p.eu.mid() >= best - TIE_TOLERANCE);
    optimal.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(BbOutcome {
        optimal: optimal.into_iter().map(|(_, p)| p).collect(),
        stats: s.stats,
    })
}
