//! How much expanding one step of a plan can lower its upper bound on
//! expected utility.
//!
//! Every chronicle of the plan's traced projection is replayed with the
//! abstract branch it took at the step swapped for the matching member
//! branch of each instantiation. The differences in goal utility, residual
//! utility and probability bounds are the Δ functions; combining them per
//! instantiation under the sum-to-one constraint gives the least upper
//! bound reachable by the expansion.

use alloc::vec::Vec;

use crate::abstraction::Model;
use crate::domain::ActionKind;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::model::{apply_effect, ActionId, WorldState};
use crate::projection::{
    branch_prob, goal_utility, project_with, residual_utility, upper_weighted_sum, Chronicle, Merge,
};

/// Decreases in the upper bounds of `UG` and `UR`, and the narrowing of a
/// chronicle's probability interval: `d_p.0` is how far the upper end can
/// drop, `d_p.1` how far the lower end can rise.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Deltas {
    pub d_ug: f64,
    pub d_ur: f64,
    pub d_p: (f64, f64),
}

/// A chronicle replayed under one instantiation; `None` when the chronicle
/// cannot occur under it.
#[derive(Clone, Debug, PartialEq)]
pub struct Replayed {
    pub state: WorldState,
    pub prob: Interval,
}

/// The traced projection of a plan, kept for repeated analysis.
#[derive(Clone, Debug)]
pub struct TracedPlan {
    pub atoms: Vec<ActionId>,
    /// Atom range covered by each plan step.
    pub spans: Vec<(usize, usize)>,
    pub chronicles: Vec<Chronicle>,
    pub peak_states: usize,
}

impl TracedPlan {
    pub fn new(model: &Model, steps: &[ActionId]) -> Result<TracedPlan> {
        let mut atoms = Vec::new();
        let mut spans = Vec::with_capacity(steps.len());
        for s in steps {
            let start = atoms.len();
            atoms.extend_from_slice(model.atoms(*s));
            spans.push((start, atoms.len()));
        }
        let p = project_with(model, steps, Merge::Never)?;
        Ok(TracedPlan {
            atoms,
            spans,
            chronicles: p.chronicles.entries,
            peak_states: p.peak_states,
        })
    }
}

/// Replays `c` with the abstract atom at `k` realised by instantiation
/// `inst` (an index into that action's instantiation list).
pub fn replay(model: &Model, tp: &TracedPlan, c: &Chronicle, k: usize, inst: usize) -> Result<Option<Replayed>> {
    let (state, prob) = replay_prefix(model, tp, c, k)?;
    replay_from(model, tp, c, k, inst, state, prob)
}

fn replay_prefix(model: &Model, tp: &TracedPlan, c: &Chronicle, k: usize) -> Result<(WorldState, Interval)> {
    let mut state = model.initial_state().clone();
    let mut prob = Interval::ONE;
    for j in 0..k {
        let desc = model.description(tp.atoms[j]).expect("atoms are described");
        let br = &desc.branches[c.trace[j] as usize];
        let p = branch_prob(desc.applies(br, &state)?, br.prob).ok_or(Error::Contract("trace does not match plan"))?;
        prob = (prob * p).clamp(0.0, 1.0);
        state = apply_effect(&br.effect, &state)?;
    }
    Ok((state, prob))
}

fn replay_from(
    model: &Model,
    tp: &TracedPlan,
    c: &Chronicle,
    k: usize,
    inst: usize,
    mut state: WorldState,
    mut prob: Interval,
) -> Result<Option<Replayed>> {
    let atom = tp.atoms[k];
    let desc = model.description(atom).expect("atoms are described");
    let members = desc
        .members
        .as_ref()
        .ok_or(Error::Contract("only abstract actions have instantiations"))?;
    let Some(member) = members[c.trace[k] as usize][inst] else {
        return Ok(None);
    };
    let inst_action = model.domain().actions[atom].instantiations[inst];
    let inst_desc = model.description(inst_action).expect("instantiations are described");
    let mb = &inst_desc.branches[member];
    let Some(p) = branch_prob(inst_desc.applies(mb, &state)?, mb.prob) else {
        return Ok(None);
    };
    prob = (prob * p).clamp(0.0, 1.0);
    state = apply_effect(&mb.effect, &state)?;
    for j in k + 1..tp.atoms.len() {
        let desc = model.description(tp.atoms[j]).expect("atoms are described");
        let br = &desc.branches[c.trace[j] as usize];
        let Some(p) = branch_prob(desc.applies(br, &state)?, br.prob) else {
            return Ok(None);
        };
        prob = (prob * p).clamp(0.0, 1.0);
        state = apply_effect(&br.effect, &state)?;
    }
    if prob.hi() == 0.0 {
        return Ok(None);
    }
    Ok(Some(Replayed { state, prob }))
}

/// Per-chronicle upper bounds before the expansion.
struct Baseline {
    ug_hi: f64,
    ur_hi: f64,
    u_hi: f64,
}

fn baseline(model: &Model, c: &Chronicle) -> Result<Baseline> {
    let u = model.utility();
    let ug_hi = goal_utility(&c.state, u)?.hi();
    let ur_hi = residual_utility(&c.state, u)?.hi();
    Ok(Baseline {
        ug_hi,
        ur_hi,
        u_hi: ug_hi + u.k_r * ur_hi,
    })
}

fn deltas_for(model: &Model, c: &Chronicle, base: &Baseline, r: &Option<Replayed>) -> Result<Deltas> {
    Ok(match r {
        None => Deltas {
            d_ug: 0.0,
            d_ur: 0.0,
            d_p: (c.prob.hi(), 0.0),
        },
        Some(r) => {
            let u = model.utility();
            Deltas {
                d_ug: (base.ug_hi - goal_utility(&r.state, u)?.hi()).max(0.0),
                d_ur: (base.ur_hi - residual_utility(&r.state, u)?.hi()).max(0.0),
                d_p: ((c.prob.hi() - r.prob.hi()).max(0.0), (r.prob.lo() - c.prob.lo()).max(0.0)),
            }
        }
    })
}

fn abstract_atom(model: &Model, tp: &TracedPlan, k: usize) -> Result<ActionId> {
    let a = tp.atoms[k];
    if model.kind(a) != ActionKind::Abstract {
        return Err(Error::Contract("Δ functions need an abstract action"));
    }
    Ok(a)
}

/// ΔUG⁺, ΔUR⁺ and ΔP of chronicle `c` for the abstract atom at `k`: the
/// largest change over the atom's instantiations.
pub fn delta_functions(model: &Model, tp: &TracedPlan, k: usize, c: &Chronicle) -> Result<Deltas> {
    let a = abstract_atom(model, tp, k)?;
    let base = baseline(model, c)?;
    let (state, prob) = replay_prefix(model, tp, c, k)?;
    let mut out = Deltas::default();
    for inst in 0..model.domain().actions[a].instantiations.len() {
        let r = replay_from(model, tp, c, k, inst, state.clone(), prob)?;
        let d = deltas_for(model, c, &base, &r)?;
        out.d_ug = out.d_ug.max(d.d_ug);
        out.d_ur = out.d_ur.max(d.d_ur);
        out.d_p.0 = out.d_p.0.max(d.d_p.0);
        out.d_p.1 = out.d_p.1.max(d.d_p.1);
    }
    Ok(out)
}

/// The chronicles analysed when only the most likely `fraction` of them
/// (by upper probability) is used; ties keep projection order.
fn selected(tp: &TracedPlan, fraction: f64) -> Vec<bool> {
    let n = tp.chronicles.len();
    if fraction >= 1.0 {
        return alloc::vec![true; n];
    }
    let want = n as f64 * fraction.max(0.0);
    let mut keep = want as usize;
    if (keep as f64) < want {
        keep += 1;
    }
    let keep = keep.clamp(1, n.max(1));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| {
        tp.chronicles[*b]
            .prob
            .hi()
            .total_cmp(&tp.chronicles[*a].prob.hi())
            .then(a.cmp(b))
    });
    let mut sel = alloc::vec![false; n];
    for i in order.into_iter().take(keep) {
        sel[i] = true;
    }
    sel
}

/// Sensitivity of the abstract atom at `k`: the plan's upper bound minus the
/// least of the per-instantiation bounds `ub(Σ Û·P̂)`, never negative.
pub fn atom_sensitivity(model: &Model, tp: &TracedPlan, k: usize, fraction: f64) -> Result<f64> {
    let a = abstract_atom(model, tp, k)?;
    let k_r = model.utility().k_r;
    let n = tp.chronicles.len();
    let sel = selected(tp, fraction);
    let bases = tp
        .chronicles
        .iter()
        .map(|c| baseline(model, c))
        .collect::<Result<Vec<_>>>()?;
    let probs: Vec<Interval> = tp.chronicles.iter().map(|c| c.prob).collect();
    let u_hi: Vec<f64> = bases.iter().map(|b| b.u_hi).collect();
    let before = upper_weighted_sum(&u_hi, &probs)?;
    let prefixes = tp
        .chronicles
        .iter()
        .zip(&sel)
        .map(|(c, s)| if *s { replay_prefix(model, tp, c, k).map(Some) } else { Ok(None) })
        .collect::<Result<Vec<_>>>()?;
    let mut least = before;
    for inst in 0..model.domain().actions[a].instantiations.len() {
        let mut us = u_hi.clone();
        let mut ps = probs.clone();
        for i in 0..n {
            let Some((state, prob)) = &prefixes[i] else {
                continue;
            };
            let c = &tp.chronicles[i];
            let r = replay_from(model, tp, c, k, inst, state.clone(), *prob)?;
            let d = deltas_for(model, c, &bases[i], &r)?;
            us[i] = (bases[i].ug_hi - d.d_ug) + k_r * (bases[i].ur_hi - d.d_ur);
            let hi = (c.prob.hi() - d.d_p.0).max(0.0);
            let lo = (c.prob.lo() + d.d_p.1).min(hi);
            ps[i] = Interval::new(lo, hi);
        }
        // rounding can leave the narrowed box marginally infeasible
        let ub = match upper_weighted_sum(&us, &ps) {
            Ok(v) => v,
            Err(Error::Infeasible { .. }) => upper_weighted_sum(&us, &probs)?,
            Err(e) => return Err(e),
        };
        least = least.min(ub);
    }
    Ok((before - least).max(0.0))
}

/// Sensitivity of plan step `pos`. A decomposable step changes no bound by
/// itself, so it inherits the largest sensitivity among the abstract atoms
/// its expansion exposes.
pub fn step_sensitivity(model: &Model, tp: &TracedPlan, pos: usize, fraction: f64) -> Result<f64> {
    let (start, end) = tp.spans[pos];
    let mut best = 0.0_f64;
    for k in start..end {
        if model.kind(tp.atoms[k]) == ActionKind::Abstract {
            best = best.max(atom_sensitivity(model, tp, k, fraction)?);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ActionDef, Branch, Domain, Guarded, UtilityModel};
    use crate::model::{AffineExpr, AttributeDecl, Condition, Effect, Term, Var};
    use crate::projection::evaluate_plan;
    use alloc::collections::BTreeMap;
    use alloc::vec;

    fn pay(name: &str, cost: f64) -> ActionDef {
        ActionDef::primitive(
            name,
            vec![Branch::new(
                Condition::TRUE,
                Interval::ONE,
                Effect::new(vec![(0, AffineExpr::shift(0, Interval::point(cost)))]).unwrap(),
            )],
        )
    }

    fn neg_cost() -> UtilityModel {
        UtilityModel {
            ug: vec![Guarded {
                guard: Condition::TRUE,
                value: AffineExpr::constant(Interval::ZERO),
            }],
            ur: vec![Guarded {
                guard: Condition::TRUE,
                value: AffineExpr::new(Interval::ZERO, [Term { coef: Interval::point(-1.0), var: Var::Attr(0) }]),
            }],
            k_r: 1.0,
        }
    }

    fn test_domain(costs: (f64, f64)) -> Model {
        let d = Domain {
            attributes: vec![AttributeDecl::numeric("cost", 0.0)],
            constants: Vec::new(),
            actions: vec![
                pay("Test_A", costs.0),
                pay("Test_B", costs.1),
                ActionDef::abstraction("Test", vec![0, 1]),
            ],
            root: 2,
            initial: vec![0.0],
            utility: neg_cost(),
            priorities: BTreeMap::new(),
        };
        Model::new(d).unwrap()
    }

    #[test]
    fn cost_range_delta() {
        let m = test_domain((120.0, 300.0));
        let tp = TracedPlan::new(&m, &[2]).unwrap();
        assert_eq!(tp.chronicles.len(), 1);
        let d = delta_functions(&m, &tp, 0, &tp.chronicles[0]).unwrap();
        assert_eq!(d.d_ur, 180.0);
        assert_eq!(d.d_ug, 0.0);
        assert_eq!(d.d_p, (0.0, 0.0));
        assert_eq!(atom_sensitivity(&m, &tp, 0, 1.0).unwrap(), 180.0);
    }

    #[test]
    fn identical_instantiations_are_insensitive() {
        let m = test_domain((50.0, 50.0));
        let tp = TracedPlan::new(&m, &[2]).unwrap();
        let d = delta_functions(&m, &tp, 0, &tp.chronicles[0]).unwrap();
        assert_eq!(d, Deltas::default());
        assert_eq!(atom_sensitivity(&m, &tp, 0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn primitive_atom_is_a_contract_violation() {
        let m = test_domain((1.0, 2.0));
        let tp = TracedPlan::new(&m, &[0]).unwrap();
        assert!(matches!(
            delta_functions(&m, &tp, 0, &tp.chronicles[0]),
            Err(Error::Contract(_))
        ));
        let _ = evaluate_plan(&m, &[0]).unwrap();
    }
}
