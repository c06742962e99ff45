//! Child-plan evaluation on the rayon pool.

use dtrp_core::model::ActionId;
use dtrp_core::planner::Evaluator;
use dtrp_core::projection::{evaluate_plan, Evaluation};
use dtrp_core::{Model, Result};
use rayon::prelude::*;

/// Evaluates the children of an expansion concurrently on the current rayon
/// pool; results come back in input order so runs stay deterministic.
pub struct RayonEvaluator;

impl Evaluator for RayonEvaluator {
    fn evaluate_all(&self, model: &Model, plans: &[Vec<ActionId>]) -> Vec<Result<Evaluation>> {
        plans.par_iter().map(|p| evaluate_plan(model, p)).collect()
    }
}
