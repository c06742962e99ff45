//! Benchmark rows for planner strategies and the branch-and-bound baseline,
//! optionally swept over one utility constant.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use dtrp_core::baselines::bb_decision_tree;
use dtrp_core::{drips_plan, Domain, Model, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algo {
    Drips,
    Bb,
    Both,
}

impl FromStr for Algo {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "drips" => Ok(Algo::Drips),
            "bb" => Ok(Algo::Bb),
            "both" => Ok(Algo::Both),
            other => Err(format!("unknown algorithm `{other}` (expected drips, bb or both)")),
        }
    }
}

pub fn parse_strategy(s: &str) -> Result<Strategy, String> {
    match s {
        "first" => Ok(Strategy::FirstAction),
        "priority" => Ok(Strategy::FixedPriority),
        "sensitivity" => Ok(Strategy::sensitivity()),
        other => Err(format!("unknown strategy `{other}` (expected first, priority or sensitivity)")),
    }
}

/// `name=lo:hi:steps`: `steps` evenly spaced values from `lo` to `hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

impl FromStr for Sweep {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("sweep `{s}` is not of the form name=lo:hi:steps");
        let (name, range) = s.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        let [lo, hi, steps] = parts.as_slice() else {
            return Err(bad());
        };
        let sweep = Sweep {
            name: name.trim().to_string(),
            lo: lo.trim().parse().map_err(|_| bad())?,
            hi: hi.trim().parse().map_err(|_| bad())?,
            steps: steps.trim().parse().map_err(|_| bad())?,
        };
        if sweep.name.is_empty() || sweep.steps == 0 || !sweep.lo.is_finite() || !sweep.hi.is_finite() {
            return Err(bad());
        }
        Ok(sweep)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub domain: String,
    pub algo: &'static str,
    /// `-` for the baseline.
    pub strategy: &'static str,
    pub param: Option<String>,
    pub param_value: Option<f64>,
    pub plans_evaluated: usize,
    pub expansions: usize,
    pub peak_states: usize,
    pub wall_ms: f64,
    pub optimal_eu: f64,
    pub n_optimal_plans: usize,
}

pub const CSV_HEADER: [&str; 11] = [
    "domain",
    "algo",
    "strategy",
    "param",
    "param_value",
    "plans_evaluated",
    "expansions",
    "peak_states",
    "wall_ms",
    "optimal_eu",
    "n_optimal_plans",
];

/// Runs every requested algorithm on `domain` at each sweep point. The
/// baseline reports decision-tree nodes as expansions and its leaf and bound
/// evaluations as plans evaluated.
pub fn bench_domain(
    name: &str,
    domain: &Domain,
    strategies: &[Strategy],
    sweep: Option<&Sweep>,
    algo: Algo,
) -> dtrp_core::Result<Vec<BenchRow>> {
    let points: Vec<Option<f64>> = match sweep {
        Some(s) => s.values().into_iter().map(Some).collect(),
        None => vec![None],
    };
    let mut rows = Vec::new();
    for value in points {
        let mut d = domain.clone();
        if let (Some(s), Some(v)) = (sweep, value) {
            if !d.set_constant(&s.name, v) {
                return Err(dtrp_core::Error::Domain(format!("no constant named {}", s.name)));
            }
        }
        let model = Model::new(d)?;
        let row = |algo, strategy, plans_evaluated, expansions, peak_states, wall_ms, optimal_eu, n_optimal_plans| BenchRow {
            domain: name.to_string(),
            algo,
            strategy,
            param: sweep.map(|s| s.name.clone()),
            param_value: value,
            plans_evaluated,
            expansions,
            peak_states,
            wall_ms,
            optimal_eu,
            n_optimal_plans,
        };
        if algo != Algo::Bb {
            for st in strategies {
                let t = Instant::now();
                let out = drips_plan(&model, *st, None)?;
                let ms = t.elapsed().as_secs_f64() * 1e3;
                let eu = out.plans.first().map_or(f64::NAN, |p| p.eu.mid());
                rows.push(row(
                    "drips",
                    st.name(),
                    out.stats.plans_evaluated,
                    out.stats.expansions,
                    out.stats.peak_states,
                    ms,
                    eu,
                    out.plans.len(),
                ));
            }
        }
        if algo != Algo::Drips {
            let t = Instant::now();
            let out = bb_decision_tree(&model)?;
            let ms = t.elapsed().as_secs_f64() * 1e3;
            let eu = out.optimal.first().map_or(f64::NAN, |p| p.eu.mid());
            rows.push(row(
                "bb",
                "-",
                out.stats.evaluations,
                out.stats.nodes,
                out.stats.peak_states,
                ms,
                eu,
                out.optimal.len(),
            ));
        }
    }
    Ok(rows)
}

/// Optimal EUs are written to six decimals so that algorithms agreeing
/// within rounding noise print the same value.
pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.domain.clone(),
            r.algo.to_string(),
            r.strategy.to_string(),
            r.param.clone().unwrap_or_default(),
            r.param_value.map(|v| v.to_string()).unwrap_or_default(),
            r.plans_evaluated.to_string(),
            r.expansions.to_string(),
            r.peak_states.to_string(),
            format!("{:.3}", r.wall_ms),
            format!("{:.6}", r.optimal_eu),
            r.n_optimal_plans.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_values() {
        let s: Sweep = "COST_FATALITY=50000:500000:10".parse().unwrap();
        let v = s.values();
        assert_eq!(v.len(), 10);
        assert_eq!(v[0], 50000.0);
        assert_eq!(v[1], 100000.0);
        assert_eq!(v[9], 500000.0);
        assert_eq!("X=1:1:1".parse::<Sweep>().unwrap().values(), vec![1.0]);
        for bad in ["X", "X=1:2", "=1:2:3", "X=a:2:3", "X=1:2:0"] {
            assert!(bad.parse::<Sweep>().is_err(), "{bad}");
        }
    }
}
