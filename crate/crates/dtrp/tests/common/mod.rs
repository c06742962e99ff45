#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use dtrp::generate::{generate, GenParams};
use dtrp::{bundled::bundled, parse_domain};
use dtrp_core::model::ActionId;
use dtrp_core::{Interval, Model};

pub fn bundled_model(name: &str) -> Model {
    Model::new(parse_domain(bundled(name).expect("bundled domain")).expect("parses")).expect("builds")
}

pub fn generated(seed: u64, plans_target: u64) -> Model {
    Model::new(generate(&GenParams {
        seed,
        plans_target,
        ..GenParams::default()
    }))
    .expect("generated domains build")
}

pub fn plan_set<'a>(plans: impl IntoIterator<Item = &'a Vec<ActionId>>) -> BTreeSet<Vec<ActionId>> {
    plans.into_iter().cloned().collect()
}

pub fn within(inner: Interval, outer: Interval, tol: f64) -> bool {
    inner.lo() >= outer.lo() - tol && inner.hi() <= outer.hi() + tol
}

/// Positions in `concrete` where a derivation of `a` starting at `i` can end.
fn ends(model: &Model, a: ActionId, concrete: &[ActionId], i: usize, out: &mut BTreeSet<usize>) {
    if model.is_primitive(a) {
        if concrete.get(i) == Some(&a) {
            out.insert(i + 1);
        }
        return;
    }
    for seq in model.expand(a).expect("non-primitive") {
        let mut at = BTreeSet::from([i]);
        for s in seq {
            let mut next = BTreeSet::new();
            for j in at {
                ends(model, s, concrete, j, &mut next);
            }
            at = next;
        }
        out.extend(at);
    }
}

/// Whether refining `steps` can produce the primitive plan `concrete`.
pub fn derives(model: &Model, steps: &[ActionId], concrete: &[ActionId]) -> bool {
    let mut at = BTreeSet::from([0]);
    for s in steps {
        let mut next = BTreeSet::new();
        for j in at {
            ends(model, *s, concrete, j, &mut next);
        }
        at = next;
    }
    at.contains(&concrete.len())
}

/// Concrete plans below one action, counted per derivation path.
pub fn instantiation_count(model: &Model, a: ActionId, memo: &mut HashMap<ActionId, u128>) -> u128 {
    if model.is_primitive(a) {
        return 1;
    }
    if let Some(n) = memo.get(&a) {
        return *n;
    }
    let n = model
        .expand(a)
        .expect("non-primitive")
        .iter()
        .map(|seq| seq.iter().map(|s| instantiation_count(model, *s, memo)).product::<u128>())
        .sum();
    memo.insert(a, n);
    n
}

/// Every primitive plan derivable from `steps`.
pub fn instantiations(model: &Model, steps: &[ActionId]) -> BTreeSet<Vec<ActionId>> {
    let mut out = BTreeSet::new();
    let mut stack = vec![steps.to_vec()];
    while let Some(steps) = stack.pop() {
        let Some(pos) = steps.iter().position(|a| !model.is_primitive(*a)) else {
            out.insert(steps);
            continue;
        };
        for seq in model.expand(steps[pos]).expect("non-primitive") {
            let mut next = steps[..pos].to_vec();
            next.extend(seq);
            next.extend_from_slice(&steps[pos + 1..]);
            stack.push(next);
        }
    }
    out
}

/// Max and min of `Σ uᵢ·pᵢ` over `{p : pᵢ ∈ boxᵢ, Σ pᵢ = 1}` by visiting
/// every vertex: all coordinates but at most one sit at a bound.
pub fn lp_vertex_bounds(items: &[(Interval, Interval)]) -> Option<(f64, f64)> {
    let n = items.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for free in 0..n {
        for mask in 0u32..(1 << n) {
            if mask >> free & 1 == 1 {
                continue;
            }
            let mut p = vec![0.0; n];
            let mut fixed = 0.0;
            for i in (0..n).filter(|i| *i != free) {
                p[i] = if mask >> i & 1 == 1 { items[i].1.hi() } else { items[i].1.lo() };
                fixed += p[i];
            }
            p[free] = 1.0 - fixed;
            let b = items[free].1;
            if p[free] < b.lo() - 1e-12 || p[free] > b.hi() + 1e-12 {
                continue;
            }
            let up: f64 = items.iter().zip(&p).map(|((u, _), w)| u.hi() * w).sum();
            let down: f64 = items.iter().zip(&p).map(|((u, _), w)| u.lo() * w).sum();
            hi = hi.max(up);
            lo = lo.min(down);
        }
    }
    (lo <= hi).then_some((lo, hi))
}
