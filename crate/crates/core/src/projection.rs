//! Plan projection into chronicle sets and expected-utility bounds.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::abstraction::Model;
use crate::domain::{Guarded, UtilityModel};
use crate::error::{Error, Result};
use crate::interval::{add_down, add_up, mul_down, mul_up, Interval};
use crate::model::{describe_state, eval_expr, ActionId, Truth, WorldState};

/// Slack allowed on `Σ lo ≤ 1 ≤ Σ hi` before a box counts as infeasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// A chronicle collapsed to its end state and path probability. `trace`
/// holds the branch index taken at every projected atom.
#[derive(Clone, Debug, PartialEq)]
pub struct Chronicle {
    pub state: WorldState,
    pub prob: Interval,
    pub trace: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ChronicleSet {
    pub entries: Vec<Chronicle>,
}

impl ChronicleSet {
    pub fn singleton(state: WorldState) -> ChronicleSet {
        ChronicleSet {
            entries: vec![Chronicle {
                state,
                prob: Interval::ONE,
                trace: Vec::new(),
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `[Σ lo, Σ hi]` with outward rounding.
    pub fn prob_sum(&self) -> Interval {
        Interval::sum(self.entries.iter().map(|c| c.prob))
    }
}

/// Whether projection merges chronicles with identical states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Merge {
    States,
    /// Keep one entry per branch path, with full traces.
    Never,
}

/// A chronicle set plus the largest number of entries held at once while
/// producing it (the current set and the one being built).
#[derive(Clone, Debug)]
pub struct Projection {
    pub chronicles: ChronicleSet,
    pub peak_states: usize,
}

struct Builder {
    merge: Merge,
    out: Vec<Chronicle>,
    index: BTreeMap<Vec<u64>, usize>,
}

impl Builder {
    fn new(merge: Merge) -> Builder {
        Builder {
            merge,
            out: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    fn push(&mut self, c: Chronicle) {
        if self.merge == Merge::States {
            let key = c.state.key();
            if let Some(&i) = self.index.get(&key) {
                let slot = &mut self.out[i];
                slot.prob = (slot.prob + c.prob).clamp(0.0, 1.0);
                return;
            }
            self.index.insert(key, self.out.len());
        }
        self.out.push(c);
    }
}

/// The branch probability a chronicle takes given the branch's truth value:
/// its own interval when it applies, `[0, hi]` when it may apply.
pub(crate) fn branch_prob(truth: Truth, prob: Interval) -> Option<Interval> {
    match truth {
        Truth::False => None,
        Truth::True => Some(prob),
        Truth::Unknown => Some(prob.widen_to_zero()),
    }
}

/// Advances `set` through one primitive or abstract action.
pub fn project_step(model: &Model, set: &ChronicleSet, atom: ActionId, merge: Merge) -> Result<ChronicleSet> {
    let desc = model
        .description(atom)
        .ok_or(Error::Contract("projection needs a primitive or abstract action"))?;
    let mut b = Builder::new(merge);
    for c in &set.entries {
        for (bi, br) in desc.branches.iter().enumerate() {
            let Some(p) = branch_prob(desc.applies(br, &c.state)?, br.prob) else {
                continue;
            };
            let prob = (c.prob * p).clamp(0.0, 1.0);
            if prob.hi() == 0.0 {
                continue;
            }
            let state = crate::model::apply_effect(&br.effect, &c.state)?;
            let mut trace = Vec::new();
            if merge == Merge::Never {
                trace.reserve(c.trace.len() + 1);
                trace.extend_from_slice(&c.trace);
                trace.push(bi as u32);
            }
            b.push(Chronicle { state, prob, trace });
        }
    }
    Ok(ChronicleSet { entries: b.out })
}

/// Projects `start` through `atoms` (primitive or abstract actions).
pub fn project_from(model: &Model, start: ChronicleSet, atoms: &[ActionId], merge: Merge) -> Result<Projection> {
    let mut peak = start.len();
    let mut cur = start;
    for a in atoms {
        let next = project_step(model, &cur, *a, merge)?;
        peak = peak.max(cur.len() + next.len());
        cur = next;
    }
    Ok(Projection {
        chronicles: cur,
        peak_states: peak,
    })
}

/// Projects a plan of network actions from the initial state, descending
/// into decomposable actions step by step.
pub fn project(model: &Model, plan: &[ActionId]) -> Result<Projection> {
    project_with(model, plan, Merge::States)
}

pub fn project_with(model: &Model, plan: &[ActionId], merge: Merge) -> Result<Projection> {
    let atoms = model.flatten_plan(plan);
    project_from(model, ChronicleSet::singleton(model.initial_state().clone()), &atoms, merge)
}

fn guarded_hull(list: &'static str, gs: &[Guarded], s: &WorldState) -> Result<Interval> {
    let mut acc: Option<Interval> = None;
    for g in gs {
        if g.guard.eval(s)? == Truth::False {
            continue;
        }
        let v = eval_expr(&g.value, s)?;
        acc = Some(acc.map_or(v, |a| a.hull(v)));
    }
    acc.ok_or_else(|| Error::NoApplicableGuard {
        list,
        state: describe_state(s),
    })
}

/// `UG` hull over the guards that are not false at `s`.
pub fn goal_utility(s: &WorldState, u: &UtilityModel) -> Result<Interval> {
    guarded_hull("UG", &u.ug, s)
}

/// `UR` hull over the guards that are not false at `s`.
pub fn residual_utility(s: &WorldState, u: &UtilityModel) -> Result<Interval> {
    guarded_hull("UR", &u.ur, s)
}

/// `UG(c) + k_r · UR(c)`.
pub fn chronicle_utility(c: &Chronicle, u: &UtilityModel) -> Result<Interval> {
    state_utility(&c.state, u)
}

pub fn state_utility(s: &WorldState, u: &UtilityModel) -> Result<Interval> {
    Ok(goal_utility(s, u)? + residual_utility(s, u)?.scale(u.k_r))
}

/// Upper end of `Σ uᵢpᵢ` over `pᵢ ∈ boxᵢ, Σ pᵢ = 1` for fixed `uᵢ`, by
/// filling the highest utilities first.
fn fill_upper(us: &[f64], probs: &[Interval]) -> f64 {
    let mut order: Vec<usize> = (0..us.len()).collect();
    order.sort_by(|a, b| us[*b].total_cmp(&us[*a]).then(a.cmp(b)));
    let lo_sum: f64 = probs.iter().map(|p| p.lo()).sum();
    let mut rem = 1.0 - lo_sum;
    let mut p: Vec<f64> = probs.iter().map(|p| p.lo()).collect();
    for i in order {
        if rem <= 0.0 {
            break;
        }
        let add = (probs[i].hi() - probs[i].lo()).min(rem);
        p[i] += add;
        rem -= add;
    }
    let mut acc = 0.0;
    for (u, w) in us.iter().zip(&p) {
        acc = add_up(acc, mul_up(*u, *w));
    }
    acc
}

fn fill_lower(us: &[f64], probs: &[Interval]) -> f64 {
    let mut order: Vec<usize> = (0..us.len()).collect();
    order.sort_by(|a, b| us[*a].total_cmp(&us[*b]).then(a.cmp(b)));
    let lo_sum: f64 = probs.iter().map(|p| p.lo()).sum();
    let mut rem = 1.0 - lo_sum;
    let mut p: Vec<f64> = probs.iter().map(|p| p.lo()).collect();
    for i in order {
        if rem <= 0.0 {
            break;
        }
        let add = (probs[i].hi() - probs[i].lo()).min(rem);
        p[i] += add;
        rem -= add;
    }
    let mut acc = 0.0;
    for (u, w) in us.iter().zip(&p) {
        acc = add_down(acc, mul_down(*u, *w));
    }
    acc
}

fn check_feasible(probs: &[Interval]) -> Result<()> {
    let lo_sum: f64 = probs.iter().map(|p| p.lo()).sum();
    let hi_sum: f64 = probs.iter().map(|p| p.hi()).sum();
    if lo_sum > 1.0 + FEASIBILITY_TOL || hi_sum < 1.0 - FEASIBILITY_TOL {
        return Err(Error::Infeasible { lo_sum, hi_sum });
    }
    Ok(())
}

/// Tight bounds on `Σ uᵢpᵢ` over `uᵢ ∈ utilityᵢ`, `pᵢ ∈ probᵢ`, `Σ pᵢ = 1`.
pub fn bound_weighted_sum(items: &[(Interval, Interval)]) -> Result<Interval> {
    let probs: Vec<Interval> = items.iter().map(|(_, p)| *p).collect();
    check_feasible(&probs)?;
    let his: Vec<f64> = items.iter().map(|(u, _)| u.hi()).collect();
    let los: Vec<f64> = items.iter().map(|(u, _)| u.lo()).collect();
    let hi = fill_upper(&his, &probs);
    let lo = fill_lower(&los, &probs);
    Ok(Interval::new(lo.min(hi), hi))
}

/// Upper bound only, for callers that vary utilities per item.
pub fn upper_weighted_sum(utilities: &[f64], probs: &[Interval]) -> Result<f64> {
    check_feasible(probs)?;
    Ok(fill_upper(utilities, probs))
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub eu: Interval,
    /// `(utility, probability)` per chronicle.
    pub per_chronicle: Vec<(Interval, Interval)>,
    pub peak_states: usize,
}

pub fn evaluate_set(set: &ChronicleSet, u: &UtilityModel) -> Result<(Interval, Vec<(Interval, Interval)>)> {
    let items = set
        .entries
        .iter()
        .map(|c| Ok((chronicle_utility(c, u)?, c.prob)))
        .collect::<Result<Vec<_>>>()?;
    let eu = bound_weighted_sum(&items)?;
    Ok((eu, items))
}

pub fn evaluate_plan(model: &Model, plan: &[ActionId]) -> Result<Evaluation> {
    let p = project(model, plan)?;
    let (eu, per_chronicle) = evaluate_set(&p.chronicles, model.utility())?;
    Ok(Evaluation {
        eu,
        per_chronicle,
        peak_states: p.peak_states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ActionDef, Branch, Domain};
    use crate::model::{AffineExpr, Atom, AttributeDecl, Condition, Effect, Relation, Term, Var};

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    #[test]
    fn weighted_sum_examples() {
        let b = bound_weighted_sum(&[(iv(10.0, 10.0), iv(0.2, 0.6)), (iv(0.0, 0.0), iv(0.4, 0.8))]).unwrap();
        assert!((b.lo() - 2.0).abs() < 1e-9 && (b.hi() - 6.0).abs() < 1e-9, "{b}");
        let b = bound_weighted_sum(&[(iv(-300.0, -120.0), Interval::ONE)]).unwrap();
        assert_eq!(b, iv(-300.0, -120.0));
        let b = bound_weighted_sum(&[(iv(5.0, 5.0), iv(0.1, 0.7)), (iv(5.0, 5.0), iv(0.0, 0.9))]).unwrap();
        assert!((b.lo() - 5.0).abs() < 1e-9 && (b.hi() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_box() {
        let e = bound_weighted_sum(&[(Interval::ONE, iv(0.1, 0.2)), (Interval::ONE, iv(0.1, 0.3))]);
        assert!(matches!(e, Err(Error::Infeasible { .. })));
    }

    fn coin_domain() -> Domain {
        let flip = |name: &str, p: f64| {
            ActionDef::primitive(
                name,
                vec![
                    Branch::new(
                        Condition::TRUE,
                        Interval::point(p),
                        Effect::new(vec![(0, AffineExpr::shift(0, Interval::ONE))]).unwrap(),
                    ),
                    Branch::new(Condition::TRUE, Interval::point(1.0 - p), Effect::none()),
                ],
            )
        };
        Domain {
            attributes: vec![AttributeDecl::numeric("heads", 0.0)],
            constants: Vec::new(),
            actions: vec![flip("A", 0.25), flip("B", 0.5), ActionDef::decomposition("AB", vec![0, 1])],
            root: 2,
            initial: vec![0.0],
            utility: UtilityModel {
                ug: vec![Guarded {
                    guard: Condition::TRUE,
                    value: AffineExpr::attr(0),
                }],
                ur: vec![Guarded {
                    guard: Condition::TRUE,
                    value: AffineExpr::constant(Interval::ZERO),
                }],
                k_r: 1.0,
            },
            priorities: BTreeMap::new(),
        }
    }

    #[test]
    fn empty_plan_is_initial_state() {
        let m = Model::new(coin_domain()).unwrap();
        let p = project(&m, &[]).unwrap();
        assert_eq!(p.chronicles, ChronicleSet::singleton(m.initial_state().clone()));
        let mut d = coin_domain();
        d.utility = UtilityModel::zero();
        let m = Model::new(d).unwrap();
        assert_eq!(evaluate_plan(&m, &[]).unwrap().eu, Interval::ZERO);
    }

    #[test]
    fn two_step_paths_multiply() {
        let m = Model::new(coin_domain()).unwrap();
        let p = project_with(&m, &[0, 1], Merge::Never).unwrap();
        let probs: Vec<f64> = p.chronicles.entries.iter().map(|c| c.prob.mid()).collect();
        assert_eq!(probs.len(), 4);
        for (got, want) in probs.iter().zip([0.125, 0.125, 0.375, 0.375]) {
            assert!((got - want).abs() < 1e-12);
        }
        let s = p.chronicles.prob_sum();
        assert!(s.contains(1.0) && s.width() < 1e-9);
        let merged = project(&m, &[2]).unwrap();
        assert_eq!(merged.chronicles.len(), 3);
        let eu = evaluate_plan(&m, &[2]).unwrap().eu;
        assert!((eu.mid() - 0.75).abs() < 1e-12 && eu.width() < 1e-9);
    }

    #[test]
    fn deliver_tomato_first_branch() {
        // time, fuel, sunny, warehouse, ton_delivered, ton_intruck
        let attrs = ["time", "fuel", "sunny", "warehouse", "ton_delivered", "ton_intruck"];
        let deliver = Branch::new(
            Condition::atoms(vec![Atom::new(2, Relation::Eq, 1.0), Atom::new(3, Relation::Eq, 1.0)]),
            Interval::point(0.8),
            Effect::new(vec![
                (0, AffineExpr::shift(0, Interval::point(70.0))),
                (1, AffineExpr::shift(1, Interval::point(-5.0))),
                (3, AffineExpr::constant(Interval::ZERO)),
                (
                    4,
                    AffineExpr::new(
                        Interval::ZERO,
                        [
                            Term { coef: Interval::ONE, var: Var::Attr(4) },
                            Term { coef: Interval::point(0.9), var: Var::Attr(5) },
                        ],
                    ),
                ),
            ])
            .unwrap(),
        );
        let d = Domain {
            attributes: attrs.iter().map(|a| AttributeDecl::numeric(a, 0.0)).collect(),
            constants: Vec::new(),
            actions: vec![ActionDef::primitive("Deliver", vec![deliver])],
            root: 0,
            initial: vec![0.0, 10.0, 1.0, 1.0, 0.0, 10.0],
            utility: UtilityModel::zero(),
            priorities: BTreeMap::new(),
        };
        let m = Model::new(d).unwrap();
        let p = project(&m, &[0]).unwrap();
        let c = &p.chronicles.entries[0];
        assert_eq!(c.prob, Interval::point(0.8));
        assert_eq!(c.state.get(0).unwrap(), Interval::point(70.0));
        assert_eq!(c.state.get(1).unwrap(), Interval::point(5.0));
    }

    fn utility_with_fatality() -> UtilityModel {
        // attrs: dead, cost; constant 0 = COST_FATALITY
        let dead = |v| Condition::atoms(vec![Atom::new(0, Relation::Eq, v)]);
        let neg_cost = AffineExpr::new(Interval::ZERO, [Term { coef: Interval::point(-1.0), var: Var::Attr(1) }]);
        UtilityModel {
            ug: vec![Guarded {
                guard: Condition::TRUE,
                value: AffineExpr::constant(Interval::ZERO),
            }],
            ur: vec![
                Guarded {
                    guard: dead(1.0),
                    value: AffineExpr::constant(Interval::point(-50_000.0)).add(&neg_cost),
                },
                Guarded {
                    guard: dead(0.0),
                    value: neg_cost,
                },
            ],
            k_r: 1.0,
        }
    }

    #[test]
    fn utility_examples() {
        let u = utility_with_fatality();
        let s = WorldState::concrete(&[1.0, 100.0]);
        assert_eq!(state_utility(&s, &u).unwrap(), Interval::point(-50_100.0));
        let s = WorldState::new(vec![Interval::ZERO, iv(120.0, 300.0)]);
        assert_eq!(state_utility(&s, &u).unwrap(), iv(-300.0, -120.0));
        let s = WorldState::concrete(&[0.0, 0.0]);
        assert_eq!(state_utility(&s, &UtilityModel::zero()).unwrap(), Interval::ZERO);
    }

    #[test]
    fn missing_guard_names_state() {
        let mut u = utility_with_fatality();
        u.ur.pop();
        let s = WorldState::concrete(&[0.0, 5.0]);
        match state_utility(&s, &u) {
            Err(Error::NoApplicableGuard { list, state }) => {
                assert_eq!(list, "UR");
                assert!(state.contains("#1=[5, 5]"), "{state}");
            }
            other => panic!("{other:?}"),
        }
    }
}
