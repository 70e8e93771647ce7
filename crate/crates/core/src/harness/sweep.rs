use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, LearnerSpec, ReductionKind};
use super::game::{run_game, Summary};
use crate::combinatorics::expert_count;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    /// Horizons; defaults to the base config's `T`.
    #[serde(rename = "T", default)]
    pub horizons: Vec<usize>,
    /// Lazy exponents. A value of 1 or more means plain ADEPT.
    #[serde(default)]
    pub c: Vec<f64>,
    /// Learner variants; defaults to the base learner.
    #[serde(default)]
    pub learners: Vec<LearnerSpec>,
    #[serde(default)]
    pub replicates: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub grid: Grid,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Expands the grid into one config per cell, in T-major order.
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let horizons = if self.grid.horizons.is_empty() {
            vec![self.base.horizon]
        } else {
            self.grid.horizons.clone()
        };
        let learners = if self.grid.learners.is_empty() {
            vec![self.base.learner.clone()]
        } else {
            self.grid.learners.clone()
        };
        let cs: Vec<Option<f64>> = if self.grid.c.is_empty() {
            vec![None]
        } else {
            self.grid.c.iter().copied().map(Some).collect()
        };
        let mut out = Vec::new();
        for &horizon in &horizons {
            for learner in &learners {
                for &c in &cs {
                    let mut cfg = self.base.clone();
                    cfg.horizon = horizon;
                    cfg.learner = learner.clone();
                    if let Some(r) = self.grid.replicates {
                        cfg.replicates = r;
                    }
                    match c {
                        Some(c) if c >= 1.0 => {
                            cfg.learner.reduction = ReductionKind::Adept;
                            cfg.learner.wrapper = None;
                            cfg.learner.c = None;
                            cfg.learner.k = None;
                        }
                        Some(c) => {
                            cfg.learner.wrapper = Some("lazy".into());
                            cfg.learner.c = Some(c);
                            cfg.learner.k = None;
                        }
                        None => {}
                    }
                    out.push(cfg);
                }
            }
        }
        out
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Aggregate row for one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub learner: String,
    pub replicates: usize,
    pub failed: usize,
    pub mean_regret: f64,
    pub se_regret: f64,
    pub mean_expected_regret: f64,
    pub se_expected_regret: f64,
    pub mean_regret_per_round: f64,
    pub mean_raw_queries: f64,
    pub se_raw_queries: f64,
    pub mean_query_rounds: f64,
    pub max_active: usize,
    /// Experts an explicit ensemble would need, `sum_{j<=M} C(T, j)`, in decimal.
    pub bdpss_experts: String,
    pub mean_wall_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Default)]
pub struct SweepResult {
    pub cells: Vec<CellSummary>,
    /// Per-replicate summaries keyed by cell index, sorted by (cell, seed).
    pub runs: Vec<(usize, Summary)>,
}

impl SweepResult {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.failed > 0 || c.error.is_some()).count()
    }
}

fn aggregate(cell: usize, cfg: &ExperimentConfig, runs: &[Summary], errors: &[String]) -> CellSummary {
    let col = |f: fn(&Summary) -> f64| runs.iter().map(f).collect::<Vec<_>>();
    let (mean_regret, se_regret) = mean_se(&col(|s| s.regret as f64));
    let (mean_expected_regret, se_expected_regret) = mean_se(&col(|s| s.expected_regret));
    let (mean_raw_queries, se_raw_queries) = mean_se(&col(|s| s.raw_queries as f64));
    let resolved = cfg.resolve();
    let bdpss_experts = match &resolved {
        Ok(r) => expert_count(cfg.horizon, r.budget).to_string(),
        Err(_) => String::new(),
    };
    CellSummary {
        cell,
        horizon: cfg.horizon,
        learner: cfg.learner.label(),
        replicates: runs.len(),
        failed: errors.len(),
        mean_regret,
        se_regret,
        mean_expected_regret,
        se_expected_regret,
        mean_regret_per_round: if cfg.horizon == 0 {
            0.0
        } else {
            mean_expected_regret / cfg.horizon as f64
        },
        mean_raw_queries,
        se_raw_queries,
        mean_query_rounds: mean_se(&col(|s| s.query_rounds as f64)).0,
        max_active: runs.iter().map(|s| s.max_active).max().unwrap_or(0),
        bdpss_experts,
        mean_wall_ms: mean_se(&col(|s| s.wall_ms)).0,
        error: errors.first().cloned(),
    }
}

/// Runs every cell. Replicate `r` uses seed `base.seed + r`; replicates run in
/// parallel. Failures are recorded per cell rather than aborting the sweep.
pub fn sweep(cfg: &SweepConfig) -> SweepResult {
    let mut result = SweepResult::default();
    for (i, cell) in cfg.cells().into_iter().enumerate() {
        if let Err(e) = cell.resolve() {
            log::warn!("cell {i}: {e}");
            result.cells.push(aggregate(i, &cell, &[], &[e.to_string()]));
            continue;
        }
        let outcomes: Vec<(u64, Result<Summary>)> = (0..cell.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let seed = cell.seed.wrapping_add(r);
                (seed, run_game(&cell, seed).map(|o| o.summary))
            })
            .collect();
        let mut runs = Vec::new();
        let mut errors = Vec::new();
        for (seed, outcome) in outcomes {
            match outcome {
                Ok(s) => runs.push(s),
                Err(e) => {
                    log::warn!("cell {i} seed {seed}: {e}");
                    errors.push(format!("seed {seed}: {e}"));
                }
            }
        }
        runs.sort_by_key(|s| s.seed);
        result.cells.push(aggregate(i, &cell, &runs, &errors));
        result.runs.extend(runs.into_iter().map(|s| (i, s)));
    }
    result
}
