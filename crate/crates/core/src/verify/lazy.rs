use rand::seq::index::sample;
use serde_json::json;

use super::SuiteReport;
use crate::combinatorics::sauer_bound;
use crate::harness::{labeled_rng, run_game, sweep, write_rows, ExperimentConfig, Format, Game, SweepConfig};
use crate::subsampling::{lazy_horizon, SampledSet};

#[derive(Clone, Debug)]
pub struct LazyParams {
    /// Horizons for the `K = T` identity check.
    pub identity_horizons: Vec<usize>,
    pub identity_seeds: u64,
    /// Horizon and seeds for swapping the unrevealed part of the sample.
    pub blind_horizon: usize,
    pub blind_seeds: u64,
    pub c: f64,
    pub trend_horizons: Vec<usize>,
    pub trend_seeds: usize,
}

impl Default for LazyParams {
    fn default() -> Self {
        LazyParams {
            identity_horizons: vec![64, 512],
            identity_seeds: 5,
            blind_horizon: 256,
            blind_seeds: 8,
            c: 0.5,
            trend_horizons: vec![256, 1024, 4096],
            trend_seeds: 100,
        }
    }
}

impl LazyParams {
    pub fn quick() -> Self {
        LazyParams {
            identity_horizons: vec![48],
            identity_seeds: 2,
            blind_horizon: 96,
            blind_seeds: 3,
            trend_horizons: vec![64, 256, 1024],
            trend_seeds: 30,
            ..Default::default()
        }
    }
}

fn noisy_block(horizon: usize, learner: serde_json::Value) -> ExperimentConfig {
    serde_json::from_value(json!({
        "class": {"type": "block_union", "d": 1},
        "adversary": {"type": "noisy", "concept": [0], "flip": 0.2},
        "learner": learner,
        "T": horizon,
    }))
    .expect("well-formed config")
}

fn noisy_powerset(horizon: usize, learner: serde_json::Value) -> ExperimentConfig {
    serde_json::from_value(json!({
        "class": {"type": "finite", "domain_size": 2, "concepts": [[0,0],[0,1],[1,0],[1,1]]},
        "adversary": {"type": "noisy", "concept": 1, "flip": 0.3},
        "learner": learner,
        "T": horizon,
    }))
    .expect("well-formed config")
}

fn csv_bytes(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<u8>, String> {
    let out = run_game(cfg, seed).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_rows(&out.transcript, &mut buf, Format::Csv).map_err(|e| e.to_string())?;
    Ok(buf)
}

/// With `K = T` every round is sampled, so the wrapper must reproduce the
/// plain tree byte for byte.
pub fn identity(params: &LazyParams, r: &mut SuiteReport) {
    type Make = fn(usize, serde_json::Value) -> ExperimentConfig;
    let makers: [(&str, Make); 2] = [("block d=1", noisy_block), ("powerset(2)", noisy_powerset)];
    for (name, make) in makers {
        for &horizon in &params.identity_horizons {
            let plain = make(horizon, json!({}));
            let lazy = make(horizon, json!({"wrapper": "lazy", "K": horizon}));
            for seed in 0..params.identity_seeds {
                match (csv_bytes(&plain, seed), csv_bytes(&lazy, seed)) {
                    (Ok(a), Ok(b)) => {
                        r.check(a == b, || {
                            format!("{name} T={horizon} seed {seed}: lazy K=T transcript differs from the plain run")
                        });
                    }
                    (a, b) => r.fail(format!("{name} T={horizon} seed {seed}: {:?} / {:?}", a.err(), b.err())),
                }
            }
        }
    }
}

/// Replaces the sample's rounds from `cut` on by a different draw of the same
/// size; predictions up to and including round `cut` must not move.
pub fn blindness(params: &LazyParams, r: &mut SuiteReport) {
    let horizon = params.blind_horizon;
    let cfg = noisy_block(horizon, json!({"wrapper": "lazy", "c": params.c}));
    for seed in 0..params.blind_seeds {
        let original = match Game::new(&cfg, seed) {
            Ok(g) => g,
            Err(e) => return r.fail(format!("blind seed {seed}: {e}")),
        };
        let drawn = match original.learner() {
            crate::harness::LearnerRuntime::Lazy(l) => l.sample().set().clone(),
            _ => unreachable!("lazy config"),
        };
        let base = match run_game(&cfg, seed) {
            Ok(o) => o,
            Err(e) => return r.fail(format!("blind seed {seed}: {e}")),
        };
        for cut in [1, horizon / 4, horizon / 2, horizon] {
            let kept: Vec<usize> = drawn.rounds().into_iter().filter(|&t| t < cut).collect();
            let need = drawn.len() - kept.len();
            let mut rng = labeled_rng(seed, 0x5eed + cut as u64);
            let fresh = sample(&mut rng, horizon - cut + 1, need).into_iter().map(|i| i + cut);
            let swapped = SampledSet::from_members(horizon, kept.into_iter().chain(fresh));
            let mut game = match Game::with_sample(&cfg, seed, swapped) {
                Ok(g) => g,
                Err(e) => return r.fail(format!("blind seed {seed}: {e}")),
            };
            for t in 1..=cut {
                let row = match game.step() {
                    Ok(row) => row.clone(),
                    Err(e) => return r.fail(format!("blind seed {seed} cut {cut}: {e}")),
                };
                let before = &base.transcript[t - 1];
                r.check(row.p1.to_bits() == before.p1.to_bits(), || {
                    format!(
                        "seed {seed}: swapping the sample from round {cut} on moved round {t}'s p1 from {} to {}",
                        before.p1, row.p1
                    )
                });
            }
        }
    }
}

/// Regret per round at exponent `c` across horizons, with early reads and the
/// query bound checked on every run.
pub fn trend(params: &LazyParams, r: &mut SuiteReport) {
    let sweep_cfg = SweepConfig {
        base: {
            let mut b = noisy_block(params.trend_horizons[0], json!({"wrapper": "lazy", "c": params.c}));
            b.replicates = params.trend_seeds;
            b
        },
        grid: crate::harness::Grid {
            horizons: params.trend_horizons.clone(),
            ..Default::default()
        },
    };
    let result = sweep(&sweep_cfg);
    for cell in &result.cells {
        if let Some(e) = &cell.error {
            r.fail(format!("T={}: {e}", cell.horizon));
        }
        r.note(format!(
            "T={}: mean expected regret/T {:.5} (regret {:.2}, SE {:.2}), mean queries {:.0}",
            cell.horizon, cell.mean_regret_per_round, cell.mean_expected_regret, cell.se_expected_regret, cell.mean_raw_queries
        ));
    }
    for (i, s) in &result.runs {
        let horizon = result.cells[*i].horizon;
        let k = lazy_horizon(horizon, params.c).expect("valid exponent");
        let bound = 2 * horizon as u128 * sauer_bound(k, 1);
        r.check(s.raw_queries as u128 <= bound, || {
            format!("T={horizon} seed {}: {} queries > 2 T Phi_1(K) = {bound}", s.seed, s.raw_queries)
        });
        r.check(s.early_reads == Some(0), || {
            format!("T={horizon} seed {}: {:?} sample reads before prediction", s.seed, s.early_reads)
        });
        r.check(s.committed_rounds == Some(k), || {
            format!("T={horizon} seed {}: committed {:?} of K = {k} rounds", s.seed, s.committed_rounds)
        });
    }
    let rates: Vec<f64> = result.cells.iter().map(|c| c.mean_regret_per_round).collect();
    r.check(rates.windows(2).all(|w| w[1] < w[0]), || {
        format!("regret/T is not strictly decreasing across {:?}: {rates:?}", params.trend_horizons)
    });
}

pub fn run(params: &LazyParams) -> SuiteReport {
    let mut r = SuiteReport::new("sample_blind");
    identity(params, &mut r);
    blindness(params, &mut r);
    trend(params, &mut r);
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_scale_passes() {
        let r = run(&LazyParams::quick());
        assert!(r.passed(), "{r}");
    }
}
