use dtrp_core::model::{apply_effect, eval_expr, Term, Var};
use dtrp_core::{bound_weighted_sum, AffineExpr, Effect, Interval, WorldState};
use proptest::prelude::*;

fn interval() -> impl Strategy<Value = Interval> {
    (-1e3..1e3f64, 0.0..1e3f64).prop_map(|(lo, w)| Interval::new(lo, lo + w))
}

/// An interval with a point inside it.
fn interval_and_point() -> impl Strategy<Value = (Interval, f64)> {
    (interval(), 0.0..=1.0f64).prop_map(|(i, t)| (i, (i.lo() + t * i.width()).clamp(i.lo(), i.hi())))
}

/// Vertex enumeration of `{p : pᵢ ∈ boxᵢ, Σ pᵢ = 1}`: every vertex has all
/// but at most one coordinate at a bound.
fn lp_oracle(items: &[(Interval, Interval)]) -> (f64, f64) {
    let n = items.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for free in 0..n {
        for mask in 0u32..(1 << n) {
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
    (lo, hi)
}

/// Up to six items whose probability boxes surround a distribution.
fn weighted_items() -> impl Strategy<Value = Vec<(Interval, Interval)>> {
    prop::collection::vec((interval(), 0.01..1.0f64, 0.0..0.3f64, 0.0..0.3f64), 1..=6).prop_map(|raw| {
        let total: f64 = raw.iter().map(|r| r.1).sum();
        raw.into_iter()
            .map(|(u, w, down, up)| {
                let p = w / total;
                (u.scale(0.1), Interval::new((p - down).max(0.0), (p + up).min(1.0)))
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn arithmetic_is_inclusion_monotone((a, x) in interval_and_point(), (b, y) in interval_and_point()) {
        prop_assert!((a + b).contains(x + y));
        prop_assert!((a - b).contains(x - y));
        prop_assert!((a * b).contains(x * y));
        prop_assert!((-a).contains(-x));
        let h = a.hull(b);
        prop_assert!(h.contains(x) && h.contains(y));
    }

    #[test]
    fn affine_evaluation_encloses_points(
        c in interval_and_point(),
        k in interval_and_point(),
        v in interval_and_point(),
    ) {
        let e = AffineExpr::new(c.0, [Term { var: Var::Attr(0), coef: k.0 }]);
        let wide = eval_expr(&e, &WorldState::new(vec![v.0])).unwrap();
        let exact = c.1 + k.1 * v.1;
        prop_assert!(wide.lo() <= exact + 1e-9 * exact.abs().max(1.0));
        prop_assert!(wide.hi() >= exact - 1e-9 * exact.abs().max(1.0));
    }

    #[test]
    fn effects_enclose_concrete_successors(
        (a, x) in interval_and_point(),
        (b, y) in interval_and_point(),
        (shift, d) in interval_and_point(),
    ) {
        // x := x + shift, y := x simultaneously
        let effect = Effect::new(vec![
            (0, AffineExpr::shift(0, shift)),
            (1, AffineExpr::attr(0)),
        ]).unwrap();
        let abs = apply_effect(&effect, &WorldState::new(vec![a, b])).unwrap();
        let con = apply_effect(
            &Effect::new(vec![(0, AffineExpr::shift(0, Interval::point(d))), (1, AffineExpr::attr(0))]).unwrap(),
            &WorldState::concrete(&[x, y]),
        ).unwrap();
        for i in 0..2 {
            let v = con.values()[i];
            prop_assert!(abs.values()[i].encloses_within(v, 1e-9), "{i}: {v} outside {}", abs.values()[i]);
        }
    }

    #[test]
    fn weighted_sum_matches_vertex_enumeration(items in weighted_items()) {
        let got = bound_weighted_sum(&items).unwrap();
        let (lo, hi) = lp_oracle(&items);
        prop_assert!((got.hi() - hi).abs() <= 1e-9, "upper {} vs {}", got.hi(), hi);
        prop_assert!((got.lo() - lo).abs() <= 1e-9, "lower {} vs {}", got.lo(), lo);
    }
}
