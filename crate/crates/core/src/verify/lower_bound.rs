use rayon::prelude::*;
use serde_json::json;

use super::SuiteReport;
use crate::harness::{mean_se, run_game, ExperimentConfig, GameOutput};

#[derive(Clone, Debug)]
pub struct LowerBoundParams {
    pub horizon: usize,
    pub d: usize,
    pub budgets: Vec<u64>,
    pub seeds: u64,
}

impl Default for LowerBoundParams {
    fn default() -> Self {
        LowerBoundParams {
            horizon: 2000,
            d: 1,
            budgets: vec![0, 1, 4, 10],
            seeds: 500,
        }
    }
}

impl LowerBoundParams {
    pub fn quick() -> Self {
        LowerBoundParams {
            horizon: 300,
            seeds: 60,
            ..Default::default()
        }
    }
}

/// `T/2 * min(1, d/(Q+1)) - Q/2`.
pub fn regret_floor(horizon: usize, d: usize, budget: u64) -> f64 {
    let ratio = (d as f64 / (budget as f64 + 1.0)).min(1.0);
    horizon as f64 / 2.0 * ratio - budget as f64 / 2.0
}

/// Measurements for one query budget.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetOutcome {
    pub budget: u64,
    pub floor: f64,
    pub mean_regret: f64,
    pub se_regret: f64,
    /// Expected loss per round over rounds without a charged query.
    pub quiet_rate: f64,
    pub se_quiet_rate: f64,
    pub max_query_rounds: usize,
    pub max_raw_queries: u64,
    /// Seeds whose comparator loss differs from the phase bookkeeping.
    pub comparator_mismatches: usize,
    pub errors: Vec<String>,
}

impl BudgetOutcome {
    pub fn regret_ok(&self) -> bool {
        self.mean_regret >= self.floor - 3.0 * self.se_regret
    }

    pub fn quiet_rate_ok(&self) -> bool {
        (self.quiet_rate - 0.5).abs() <= 3.0 * self.se_quiet_rate
    }
}

fn quiet_rate(out: &GameOutput) -> Option<f64> {
    let quiet: Vec<f64> = out
        .transcript
        .iter()
        .filter(|row| out.stats.round(row.round) == 0)
        .map(|row| row.expected_loss)
        .collect();
    (!quiet.is_empty()).then(|| quiet.iter().sum::<f64>() / quiet.len() as f64)
}

fn phase_comparator(out: &GameOutput, d: usize) -> Option<u64> {
    let mut p: Vec<u64> = out.phases.as_ref()?.iter().map(|r| r.positives).collect();
    let total: u64 = p.iter().sum();
    p.sort_unstable_by(|a, b| b.cmp(a));
    Some(total - p.iter().take(d).sum::<u64>())
}

pub fn config(horizon: usize, d: usize, budget: u64) -> ExperimentConfig {
    serde_json::from_value(json!({
        "class": {"type": "block_union", "d": d},
        "adversary": {"type": "phase_reset", "d": d},
        "learner": {"query_budget": budget},
        "T": horizon,
    }))
    .expect("well-formed config")
}

pub fn measure(params: &LowerBoundParams, budget: u64) -> BudgetOutcome {
    let cfg = config(params.horizon, params.d, budget);
    let runs: Vec<Result<GameOutput, String>> = (0..params.seeds)
        .into_par_iter()
        .map(|seed| run_game(&cfg, seed).map_err(|e| format!("seed {seed}: {e}")))
        .collect();
    let mut regrets = Vec::new();
    let mut rates = Vec::new();
    let mut max_query_rounds = 0;
    let mut max_raw_queries = 0;
    let mut comparator_mismatches = 0;
    let mut errors = Vec::new();
    for run in runs {
        match run {
            Ok(out) => {
                regrets.push(out.summary.expected_regret);
                rates.extend(quiet_rate(&out));
                max_query_rounds = max_query_rounds.max(out.summary.query_rounds);
                max_raw_queries = max_raw_queries.max(out.summary.raw_queries);
                if phase_comparator(&out, params.d) != Some(out.summary.comparator_loss) {
                    comparator_mismatches += 1;
                }
            }
            Err(e) => errors.push(e),
        }
    }
    let (mean_regret, se_regret) = mean_se(&regrets);
    let (quiet_rate, se_quiet_rate) = mean_se(&rates);
    BudgetOutcome {
        budget,
        floor: regret_floor(params.horizon, params.d, budget),
        mean_regret,
        se_regret,
        quiet_rate,
        se_quiet_rate,
        max_query_rounds,
        max_raw_queries,
        comparator_mismatches,
        errors,
    }
}

/// Throttled tree against the phase-reset adversary at each budget.
pub fn run(params: &LowerBoundParams) -> SuiteReport {
    let mut r = SuiteReport::new("lower_bound");
    for &budget in &params.budgets {
        let o = measure(params, budget);
        r.note(format!(
            "Q={budget}: mean expected regret {:.2} (SE {:.2}) vs floor {:.2}; quiet-round loss rate {:.4} (SE {:.4}); max query rounds {}",
            o.mean_regret, o.se_regret, o.floor, o.quiet_rate, o.se_quiet_rate, o.max_query_rounds
        ));
        for e in &o.errors {
            r.fail(format!("Q={budget} {e}"));
        }
        r.check(o.regret_ok(), || {
            format!("Q={budget}: mean regret {} < floor {} - 3 SE ({})", o.mean_regret, o.floor, o.se_regret)
        });
        r.check(o.quiet_rate_ok(), || {
            format!("Q={budget}: quiet-round loss rate {} not within 3 SE ({}) of 1/2", o.quiet_rate, o.se_quiet_rate)
        });
        r.check(o.max_raw_queries <= budget && o.max_query_rounds as u64 <= budget, || {
            format!("Q={budget}: {} charged queries over {} rounds", o.max_raw_queries, o.max_query_rounds)
        });
        r.check(o.comparator_mismatches == 0, || {
            format!("Q={budget}: {} seeds with comparator loss off the phase bookkeeping", o.comparator_mismatches)
        });
    }
    r
}
