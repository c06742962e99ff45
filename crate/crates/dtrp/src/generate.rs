//! Seeded random domains with a controlled number of concrete plans.
//!
//! Shape: `Root = <Nature, Strategy>`. `Nature` draws hidden boolean facts.
//! `Strategy` chooses between alternatives, each a sequence of slots; a slot
//! is an abstraction tree over primitive variants that pursue the same goal at
//! different cost and reliability. The plan count is the sum over
//! alternatives of the product of their slot sizes.

use std::collections::BTreeMap;

use dtrp_core::model::{AffineExpr, Atom, AttributeDecl, Condition, Effect, Relation};
use dtrp_core::{ActionDef, Branch, Domain, Guarded, Interval, UtilityModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub seed: u64,
    pub depth: u32,
    pub branching: u32,
    pub plans_target: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            seed: 0,
            depth: 2,
            branching: 4,
            plans_target: 100,
        }
    }
}

const HIDDEN: usize = 2;
const MAX_SLOTS: usize = 8;
/// Probabilities are multiples of 1/DENOM so branch sums are exact.
const DENOM: f64 = 32.0;
const LEAF_CAP: u64 = 200;
const COST: usize = 0;
const fn hidden(h: usize) -> usize {
    1 + h
}
const fn goal(g: usize) -> usize {
    1 + HIDDEN + g
}

/// Slot sizes whose product is closest to `target`, each in `1..=cap`,
/// using the fewest slots that can reach it (or one more).
fn factor(target: u64, cap: u64) -> Vec<u64> {
    let target = target.max(1);
    let rel = |p: u64| (p as f64 - target as f64).abs() / target as f64;
    let mut fewest = 1;
    while fewest < MAX_SLOTS && cap.saturating_pow(fewest as u32) < target {
        fewest += 1;
    }
    let mut best = vec![target.min(cap)];
    let mut best_err = rel(best[0]);
    for slots in fewest..=(fewest + 1).min(MAX_SLOTS) {
        // nondecreasing size sequences, pruned once the product overshoots
        let mut cur = Vec::with_capacity(slots);
        search(slots, cap, 1, 1, target, &mut cur, &mut |sizes, p| {
            let e = rel(p);
            if e < best_err {
                best_err = e;
                best = sizes.to_vec();
            }
        });
    }
    best
}

fn search(slots: usize, cap: u64, min: u64, prod: u64, target: u64, cur: &mut Vec<u64>, visit: &mut impl FnMut(&[u64], u64)) {
    if cur.len() == slots {
        visit(cur, prod);
        return;
    }
    let left = (slots - cur.len()) as u32;
    for n in min..=cap {
        let p = prod.saturating_mul(n);
        if p.saturating_mul(n.saturating_pow(left - 1)) > target * 2 {
            break;
        }
        if left == 1 || p.saturating_mul(cap.saturating_pow(left - 1)) * 2 >= target {
            cur.push(n);
            search(slots, cap, n, p, target, cur, visit);
            cur.pop();
        }
    }
}

struct Builder {
    rng: ChaCha8Rng,
    actions: Vec<ActionDef>,
    depth: u32,
    branching: u64,
}

impl Builder {
    fn push(&mut self, a: ActionDef) -> usize {
        self.actions.push(a);
        self.actions.len() - 1
    }

    fn variant(&mut self, name: String, slot: usize, base_cost: f64, quality: f64) -> usize {
        let h = slot % HIDDEN;
        let g = slot;
        let cost = (base_cost + self.rng.gen_range(0.0..20.0f64)).round();
        let p1 = ((quality + self.rng.gen_range(-0.05..0.05f64)).clamp(0.05, 0.95) * DENOM).round();
        let p0 = ((quality * 0.4 + self.rng.gen_range(0.0..0.1f64)).clamp(0.03, 0.9) * DENOM).round();
        let mut branches = Vec::new();
        for (hv, p) in [(1.0, p1), (0.0, p0)] {
            let when = Condition::atoms(vec![Atom::new(hidden(h), Relation::Eq, hv)]);
            let success = Effect::new(vec![
                (goal(g), AffineExpr::constant(Interval::ONE)),
                (COST, AffineExpr::shift(COST, Interval::point(cost))),
            ])
            .expect("distinct attributes");
            let failure = Effect::new(vec![(COST, AffineExpr::shift(COST, Interval::point(cost)))]).expect("one attribute");
            branches.push(Branch::new(when.clone(), Interval::point(p / DENOM), success));
            branches.push(Branch::new(when, Interval::point(1.0 - p / DENOM), failure));
        }
        self.push(ActionDef::primitive(&name, branches))
    }

    /// Abstraction tree over `n` fresh variants; returns the tree's root.
    fn slot(&mut self, prefix: &str, slot: usize, n: u64) -> usize {
        let mut leaves = Vec::new();
        let base = self.rng.gen_range(20.0..120.0f64);
        for i in 0..n {
            let t = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
            leaves.push(self.variant(format!("{prefix}v{i}"), slot, base + 60.0 * t, 0.35 + 0.55 * t));
        }
        self.tree(prefix, &leaves, self.depth)
    }

    fn tree(&mut self, name: &str, leaves: &[usize], depth: u32) -> usize {
        if leaves.len() == 1 {
            return leaves[0];
        }
        let per_child = self.branching.pow(depth.saturating_sub(1)) as usize;
        if leaves.len() <= self.branching as usize || per_child <= 1 {
            return self.push(ActionDef::abstraction(name, leaves.to_vec()));
        }
        let chunks = leaves.len().div_ceil(per_child).min(self.branching as usize).max(2);
        let size = leaves.len().div_ceil(chunks);
        let kids: Vec<usize> = leaves
            .chunks(size)
            .enumerate()
            .map(|(i, c)| self.tree(&format!("{name}_{i}"), c, depth - 1))
            .collect();
        if kids.len() == 1 {
            return kids[0];
        }
        self.push(ActionDef::abstraction(name, kids))
    }
}

/// Maximum number of leaves one slot can hold.
fn slot_cap(p: &GenParams) -> u64 {
    (p.branching as u64).checked_pow(p.depth).unwrap_or(u64::MAX).min(LEAF_CAP)
}

pub fn generate(p: &GenParams) -> Domain {
    assert!(p.depth >= 1 && p.branching >= 2 && p.plans_target >= 1, "parameters must be positive");
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(p.seed),
        actions: Vec::new(),
        depth: p.depth,
        branching: p.branching as u64,
    };
    let cap = slot_cap(p);
    let target = p.plans_target;
    let min_k = target.div_ceil(cap.saturating_pow(MAX_SLOTS as u32)).max(1);
    let k = (b.rng.gen_range(2..=4u64)).max(min_k).min(target);


    // Nature: one branch per assignment of the hidden facts.
    let cells = 1usize << HIDDEN;
    let mut weights: Vec<u32> = (0..cells).map(|_| b.rng.gen_range(1..=8)).collect();
    let total: u32 = weights.iter().sum();
    let scale = 64.0 / total as f64;
    for w in &mut weights {
        *w = ((*w as f64) * scale).floor().max(1.0) as u32;
    }
    let rest = 64 - weights.iter().sum::<u32>();
    weights[0] += rest;
    let nature_branches = (0..cells)
        .map(|c| {
            let assign = (0..HIDDEN)
                .map(|h| (hidden(h), AffineExpr::constant(Interval::point(((c >> h) & 1) as f64))))
                .collect();
            Branch::new(
                Condition::TRUE,
                Interval::point(weights[c] as f64 / 64.0),
                Effect::new(assign).expect("distinct attributes"),
            )
        })
        .collect();
    let nature = b.push(ActionDef::primitive("Nature", nature_branches));

    let mut alternatives = Vec::new();
    let mut goals = 0;
    let mut remaining = target;
    for i in 0..k {
        let left = k - i;
        let share = remaining as f64 / left as f64;
        let t = if left == 1 {
            remaining
        } else {
            (share * b.rng.gen_range(0.7..1.3)).round().clamp(1.0, (remaining - (left - 1)) as f64) as u64
        };
        let sizes = factor(t, cap);
        goals = goals.max(sizes.len());
        remaining = remaining.saturating_sub(sizes.iter().product()).max(left - 1);
        let slots: Vec<usize> = sizes
            .iter()
            .enumerate()
            .map(|(s, n)| b.slot(&format!("A{i}s{s}"), s, *n))
            .collect();
        let alt = if slots.len() == 1 {
            slots[0]
        } else {
            b.push(ActionDef::decomposition(&format!("Alt{i}"), slots))
        };
        alternatives.push(alt);
    }
    let mut subplan = vec![nature];
    if alternatives.len() == 1 {
        subplan.push(alternatives[0]);
    } else {
        subplan.push(b.push(ActionDef::abstraction("Strategy", alternatives)));
    }
    let root = b.push(ActionDef::decomposition("Root", subplan));

    let mut attributes = vec![AttributeDecl::numeric("cost", 0.0).with_range(0.0, 100_000.0)];
    for h in 0..HIDDEN {
        attributes.push(AttributeDecl::boolean(&format!("h{h}"), false));
    }
    for g in 0..goals {
        attributes.push(AttributeDecl::boolean(&format!("g{g}"), false));
    }
    let mut ug = AffineExpr::constant(Interval::ZERO);
    for g in 0..goals {
        let w = (b.rng.gen_range(200.0..1000.0f64)).round();
        ug = ug.add(&AffineExpr::attr(goal(g)).scale(Interval::point(w)));
    }
    let utility = UtilityModel {
        ug: vec![Guarded {
            guard: Condition::TRUE,
            value: ug,
        }],
        ur: vec![Guarded {
            guard: Condition::TRUE,
            value: AffineExpr::attr(COST).scale(Interval::point(-1.0)),
        }],
        k_r: 1.0,
    };
    let initial = attributes.iter().map(|a| a.default).collect();
    Domain {
        attributes,
        constants: Vec::new(),
        actions: b.actions,
        root,
        initial,
        utility,
        priorities: BTreeMap::new(),
    }
}
