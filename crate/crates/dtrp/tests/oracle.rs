mod common;

use common::*;
use dtrp::generate::{generate, GenParams};
use dtrp_core::baselines::{bb_decision_tree, enumerate_optimal, enumerate_plans};
use dtrp_core::planner::TIE_TOLERANCE;
use dtrp_core::sensitivity::{step_sensitivity, TracedPlan};
use dtrp_core::{drips_plan, evaluate_plan, Interval, Model, Strategy};
use proptest::prelude::*;

fn names(m: &Model, steps: &[usize]) -> Vec<String> {
    m.domain().plan_names(steps)
}

#[test]
fn dvt_like_optimum() {
    let m = bundled_model("dvt-like");
    let e = enumerate_optimal(&m).unwrap();
    assert_eq!(e.plans_evaluated, 6206);
    assert_eq!(e.optimal.len(), 1);
    assert_eq!(names(&m, &e.optimal[0].steps), ["Presentation", "RUS", "No_Wait", "RUS", "Treat_Any+"]);
    assert!(e.optimal[0].eu.encloses_within(Interval::point(-616.501), 1e-9));
    let want = plan_set(e.optimal.iter().map(|s| &s.steps));
    for st in [Strategy::FirstAction, Strategy::FixedPriority, Strategy::sensitivity()] {
        let out = drips_plan(&m, st, None).unwrap();
        assert_eq!(plan_set(out.plans.iter().map(|p| &p.steps)), want, "{}", st.name());
    }
}

#[test]
fn dvt_small_optimum() {
    let m = bundled_model("dvt-small");
    let e = enumerate_optimal(&m).unwrap();
    assert_eq!(e.plans_evaluated, 30);
    assert_eq!(names(&m, &e.optimal[0].steps), ["Presentation", "Veno", "Treat_Veno+"]);
    assert!(e.optimal[0].eu.encloses_within(Interval::point(-659.75), 1e-9));
    let bb = bb_decision_tree(&m).unwrap();
    assert_eq!(plan_set(bb.optimal.iter().map(|s| &s.steps)), plan_set(e.optimal.iter().map(|s| &s.steps)));
}

#[test]
fn test_choice_costs_differ_by_180() {
    let m = bundled_model("test-pair");
    let id = |n: &str| m.domain().action(n).unwrap();
    let tp = TracedPlan::new(&m, &[id("Presentation"), id("Test"), id("Treat_if_positive")]).unwrap();
    assert_eq!(step_sensitivity(&m, &tp, 0, 1.0).unwrap(), 0.0);
    assert!(step_sensitivity(&m, &tp, 1, 1.0).unwrap() > 0.0);
    let a = evaluate_plan(&m, &[id("Presentation"), id("Test_A"), id("Treat_if_positive")]).unwrap().eu;
    let b = evaluate_plan(&m, &[id("Presentation"), id("Test_B"), id("Treat_if_positive")]).unwrap().eu;
    let abs = evaluate_plan(&m, &[id("Presentation"), id("Test"), id("Treat_if_positive")]).unwrap().eu;
    assert!(within(a, abs, 1e-9) && within(b, abs, 1e-9));
}

#[test]
fn enumeration_agrees_with_scoring_every_plan() {
    let m = generated(7, 60);
    let plans = enumerate_plans(&m);
    let eus: Vec<f64> = plans.iter().map(|p| evaluate_plan(&m, p).unwrap().eu.lo()).collect();
    let best = eus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let want = plan_set(plans.iter().zip(&eus).filter(|(_, e)| **e >= best - TIE_TOLERANCE).map(|(p, _)| p));
    let e = enumerate_optimal(&m).unwrap();
    assert_eq!(plan_set(e.optimal.iter().map(|s| &s.steps)), want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn planners_match_enumeration(seed in 0u64..100_000, depth in 1u32..=3, branching in 2u32..=4, target in 2u64..150) {
        let m = Model::new(generate(&GenParams { seed, depth, branching, plans_target: target })).unwrap();
        let want = plan_set(enumerate_optimal(&m).unwrap().optimal.iter().map(|s| &s.steps));
        for st in [Strategy::FirstAction, Strategy::FixedPriority, Strategy::sensitivity(), Strategy::Sensitivity { fraction: 0.3 }] {
            let out = drips_plan(&m, st, None).unwrap();
            prop_assert!(out.complete);
            prop_assert_eq!(&plan_set(out.plans.iter().map(|p| &p.steps)), &want, "{}", st.name());
        }
        let bb = bb_decision_tree(&m).unwrap();
        prop_assert_eq!(&plan_set(bb.optimal.iter().map(|s| &s.steps)), &want);
    }

    #[test]
    fn budgets_stop_early(seed in 0u64..1000, budget in 0usize..4) {
        let m = generated(seed, 80);
        let out = drips_plan(&m, Strategy::FixedPriority, Some(budget)).unwrap();
        prop_assert!(out.stats.expansions <= budget);
        if !out.complete {
            prop_assert_eq!(out.stats.expansions, budget);
        }
    }
}
