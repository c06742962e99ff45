//! The result document written by `dtrp plan` and `dtrp enumerate`.

use dtrp_core::{Interval, Model};
use serde_json::{json, Map, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct PlanEntry {
    pub steps: Vec<String>,
    pub eu: Interval,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub plans_evaluated: usize,
    pub expansions: usize,
    pub peak_states: usize,
    pub wall_ms: f64,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultDoc {
    pub plans: Vec<PlanEntry>,
    pub stats: RunStats,
    /// Echo of the run configuration, written verbatim under `config`.
    pub config: Map<String, Value>,
}

impl ResultDoc {
    pub fn entries(model: &Model, plans: impl IntoIterator<Item = (Vec<usize>, Interval)>) -> Vec<PlanEntry> {
        let mut out: Vec<PlanEntry> = plans
            .into_iter()
            .map(|(steps, eu)| PlanEntry {
                steps: model.domain().plan_names(&steps),
                eu,
            })
            .collect();
        out.sort_by(|a, b| b.eu.hi().total_cmp(&a.eu.hi()).then_with(|| a.steps.cmp(&b.steps)));
        out
    }

    pub fn to_json(&self) -> Value {
        let plans: Vec<Value> = self
            .plans
            .iter()
            .map(|p| json!({ "steps": p.steps, "eu_lo": p.eu.lo(), "eu_hi": p.eu.hi() }))
            .collect();
        json!({
            "plans": plans,
            "stats": {
                "plans_evaluated": self.stats.plans_evaluated,
                "expansions": self.stats.expansions,
                "peak_states": self.stats.peak_states,
                "wall_ms": self.stats.wall_ms,
                "complete": self.stats.complete,
            },
            "config": self.config,
        })
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json values serialise");
        s.push('\n');
        s
    }
}
