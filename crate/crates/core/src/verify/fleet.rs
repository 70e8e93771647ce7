use std::collections::BTreeSet;

use serde_json::json;

use super::SuiteReport;
use crate::combinatorics::sauer_bound;
use crate::concepts::{ConceptClass, Dichotomy, Instance, LabeledData};
use crate::harness::{ExperimentConfig, Game};
use crate::learners::BaseLearner;
use crate::oracles::OracleFront;
use crate::reductions::{Adept, AdeptConfig, PotentialRecord};

const POTENTIAL_TOL: f64 = 1e-9;

/// One fleet entry: a config played under several seeds.
#[derive(Clone, Debug)]
pub struct FleetGame {
    pub name: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
}

fn finite_rows(rows: &[&str]) -> serde_json::Value {
    let concepts: Vec<Vec<u8>> = rows
        .iter()
        .map(|r| r.bytes().map(|b| b - b'0').collect())
        .collect();
    json!({"type": "finite", "domain_size": rows[0].len(), "concepts": concepts})
}

fn entry(name: &str, v: serde_json::Value, seeds: u64) -> FleetGame {
    FleetGame {
        name: name.to_string(),
        config: serde_json::from_value(v).expect("fleet configs are well formed"),
        seeds: (0..seeds).collect(),
    }
}

/// Games whose structural invariants every fleet suite checks. Finite
/// classes run at their base learner's mistake bound.
pub fn test_fleet(quick: bool) -> Vec<FleetGame> {
    let seeds = if quick { 2 } else { 6 };
    let long = if quick { 24 } else { 64 };
    let powerset2 = finite_rows(&["00", "01", "10", "11"]);
    let powerset3 = finite_rows(&["000", "001", "010", "011", "100", "101", "110", "111"]);
    let singletons4 = finite_rows(&["0000", "1000", "0100", "0010", "0001"]);
    let thresholds5 = finite_rows(&["00000", "00001", "00011", "00111", "01111", "11111"]);
    let irregular = finite_rows(&["00000", "10100", "01110", "11001", "00111", "10011", "01000"]);
    vec![
        entry(
            "powerset(2) noisy",
            json!({"class": powerset2, "adversary": {"type": "noisy", "concept": 1, "flip": 0.3}, "T": 24}),
            seeds,
        ),
        entry(
            "powerset(3) realizable",
            json!({"class": powerset3, "adversary": {"type": "realizable", "concept": 5}, "T": 24}),
            seeds,
        ),
        entry(
            "powerset(3) halving noisy",
            json!({"class": powerset3, "learner": {"base": "halving"},
                   "adversary": {"type": "noisy", "concept": 2, "flip": 0.2}, "T": 24}),
            seeds,
        ),
        entry(
            "singletons(4) noisy",
            json!({"class": singletons4, "adversary": {"type": "noisy", "concept": 2, "flip": 0.2}, "T": 30}),
            seeds,
        ),
        entry(
            "thresholds(5) noisy",
            json!({"class": thresholds5, "adversary": {"type": "noisy", "concept": 3, "flip": 0.15}, "T": 30}),
            seeds,
        ),
        entry(
            "thresholds(5) halving noisy",
            json!({"class": thresholds5, "learner": {"base": "halving"},
                   "adversary": {"type": "noisy", "concept": 1, "flip": 0.25}, "T": 30}),
            seeds,
        ),
        entry(
            "irregular(5x7) noisy",
            json!({"class": irregular, "adversary": {"type": "noisy", "concept": 3, "flip": 0.25}, "T": 30}),
            seeds,
        ),
        entry(
            "block d=1 noisy",
            json!({"class": {"type": "block_union", "d": 1},
                   "adversary": {"type": "noisy", "concept": [0], "flip": 0.2}, "T": long}),
            seeds,
        ),
        entry(
            "block d=2 noisy",
            json!({"class": {"type": "block_union", "d": 2},
                   "adversary": {"type": "noisy", "concept": [0, 2], "flip": 0.2, "blocks": 5}, "T": long}),
            seeds,
        ),
        entry(
            "block d=1 phase reset",
            json!({"class": {"type": "block_union", "d": 1},
                   "adversary": {"type": "phase_reset", "d": 1}, "T": long}),
            seeds,
        ),
    ]
}

/// Plays one game, calling `each` after every round.
fn play(
    game: &FleetGame,
    seed: u64,
    report: &mut SuiteReport,
    mut each: impl FnMut(&Game, &mut SuiteReport),
) -> Option<Game> {
    let mut g = match Game::new(&game.config, seed) {
        Ok(g) => g,
        Err(e) => {
            report.fail(format!("{} seed {seed}: {e}", game.name));
            return None;
        }
    };
    while !g.is_done() {
        if let Err(e) = g.step() {
            report.fail(format!("{} seed {seed} round {}: {e}", game.name, g.round() + 1));
            return None;
        }
        each(&g, report);
    }
    Some(g)
}

fn adept_of(g: &Game) -> &Adept {
    g.learner().as_adept().expect("fleet games run the tree")
}

/// `|V_t| <= Phi_d(t)` on every round of every fleet game.
pub fn width(fleet: &[FleetGame]) -> SuiteReport {
    let mut r = SuiteReport::new("width");
    for game in fleet {
        for &seed in &game.seeds {
            let mut vc = None;
            play(game, seed, &mut r, |g, r| {
                let d = *vc.get_or_insert_with(|| g.resolved().class.vc_dimension().expect("fleet classes are small"));
                let row = g.transcript().last().expect("a round was played");
                let bound = sauer_bound(row.round, d);
                r.check(row.active as u128 <= bound, || {
                    format!("{} seed {seed} round {}: |V_t| = {} > Phi_{d}(t) = {bound}", game.name, row.round, row.active)
                });
            });
        }
    }
    r
}

/// Projection identity for finite classes, two pruning queries per live
/// prefix, and survival of the comparator's prefix with capacity 1.
pub fn survival(fleet: &[FleetGame]) -> SuiteReport {
    let mut r = SuiteReport::new("survival");
    for game in fleet {
        for &seed in &game.seeds {
            let mut previous = 1usize;
            let finished = play(game, seed, &mut r, |g, r| {
                let row = g.transcript().last().expect("a round was played");
                r.check(row.pruning_queries == 2 * previous as u64, || {
                    format!(
                        "{} seed {seed} round {}: {} pruning queries with |V_(t-1)| = {previous}",
                        game.name, row.round, row.pruning_queries
                    )
                });
                if let ConceptClass::Finite(fin) = g.resolved().class.as_ref() {
                    r.check(row.wc_queries == row.pruning_queries, || {
                        format!("{} seed {seed} round {}: a finite-class learner queried the oracle", game.name, row.round)
                    });
                    let xs: Vec<Instance> = g.sequence().instances().collect();
                    let projected = fin.project(&xs);
                    let active: BTreeSet<Dichotomy> = adept_of(g).active_dichotomies().into_iter().collect();
                    r.check(active == projected, || {
                        format!(
                            "{} seed {seed} round {}: active set {:?} differs from the projection {:?}",
                            game.name, row.round, active, projected
                        )
                    });
                }
                previous = row.active;
            });
            let Some(g) = finished else { continue };
            let class = &g.resolved().class;
            let (comparator, _) = class.erm(g.sequence());
            let xs: Vec<Instance> = g.sequence().instances().collect();
            let target = match class.labels(&comparator, &xs) {
                Ok(l) => Dichotomy(l),
                Err(e) => {
                    r.fail(format!("{} seed {seed}: {e}", game.name));
                    continue;
                }
            };
            let adept = adept_of(&g);
            let node = adept
                .active()
                .iter()
                .find(|n| adept.arena().dichotomy(n.prefix) == target);
            r.check(node.is_some(), || {
                format!("{} seed {seed}: comparator {comparator:?} with labels {target:?} left the active set", game.name)
            });
            if let Some(node) = node {
                let cap = adept.node_log_capacity(node);
                r.check(cap == 0.0, || {
                    format!("{} seed {seed}: comparator prefix has ln capacity {cap} at the horizon", game.name)
                });
            }
        }
    }
    r
}

fn replay_exact(g: &Game, game: &FleetGame) -> Result<Vec<PotentialRecord>, String> {
    let class = g.resolved().class.clone();
    let learner = BaseLearner::new(game.config.learner.base, &class).map_err(|e| e.to_string())?;
    let mut adept = Adept::new(learner, AdeptConfig::new(g.resolved().hedge).exact().with_potentials());
    let mut oracle = OracleFront::new(class);
    let mut out = Ok(());
    g.sequence().for_each_pair(|x, y| {
        if out.is_err() {
            return;
        }
        out = adept
            .round(x, &mut oracle)
            .and_then(|t| adept.observe(t, y))
            .map_err(|e| e.to_string());
    });
    out.map(|()| adept.potentials().to_vec())
}

/// Potential chain `Z'_t <= Z_(t-1)` and `Z_t <= Z'_t exp(-eta l_t + eta^2 / 8)`,
/// replaying each fleet sequence in exact arithmetic.
pub fn potentials(fleet: &[FleetGame]) -> SuiteReport {
    let mut r = SuiteReport::new("potentials");
    for game in fleet {
        for &seed in &game.seeds {
            let Some(g) = play(game, seed, &mut r, |_, _| {}) else { continue };
            let records = match replay_exact(&g, game) {
                Ok(p) => p,
                Err(e) => {
                    r.fail(format!("{} seed {seed}: exact replay failed: {e}", game.name));
                    continue;
                }
            };
            r.check(records.len() == g.transcript().len(), || {
                format!("{} seed {seed}: {} potential records for {} rounds", game.name, records.len(), g.transcript().len())
            });
            for rec in &records {
                let verdict = rec.check(POTENTIAL_TOL);
                r.check(verdict.is_ok(), || {
                    format!("{} seed {seed} round {}: {}", game.name, rec.round, verdict.clone().unwrap_err())
                });
            }
            if let Some(first) = records.first() {
                let ln_z0 = adept_of(&g).ln_z0();
                r.check((first.ln_z_prev - ln_z0).abs() <= POTENTIAL_TOL * ln_z0.abs().max(1.0), || {
                    format!("{} seed {seed}: ln Z_0 = {} but the closed form gives {ln_z0}", game.name, first.ln_z_prev)
                });
            }
            for (row, rec) in g.transcript().iter().zip(&records) {
                r.check((row.expected_loss - rec.expected_loss).abs() <= POTENTIAL_TOL, || {
                    format!(
                        "{} seed {seed} round {}: log-mode expected loss {} vs exact {}",
                        game.name, row.round, row.expected_loss, rec.expected_loss
                    )
                });
            }
        }
    }
    r
}

/// Cached learner states equal a replay of their prefix from scratch, and
/// both give the same prediction on the next instance.
pub fn purity(fleet: &[FleetGame]) -> SuiteReport {
    let mut r = SuiteReport::new("purity");
    for game in fleet {
        for &seed in &game.seeds {
            let Some(g) = play(game, seed, &mut r, |_, _| {}) else { continue };
            let class = g.resolved().class.clone();
            let Ok(learner) = BaseLearner::new(game.config.learner.base, &class) else { continue };
            let pairs = g.sequence().to_pairs();
            let mut adept = Adept::new(learner.clone(), AdeptConfig::new(g.resolved().hedge));
            let mut oracle = OracleFront::new(class.clone());
            let mut probe = OracleFront::new(class);
            for (t, &(x, y)) in pairs.iter().enumerate() {
                for node in adept.active() {
                    let prefix = adept.arena().view(adept.history(), node.prefix).to_pairs();
                    let fresh = learner.replay(&prefix);
                    r.check(fresh == node.state, || {
                        format!("{} seed {seed} round {}: cached state differs from replay of {:?}", game.name, t + 1, adept.arena().dichotomy(node.prefix))
                    });
                    let cached = learner.predict(&node.state, &prefix, x, &mut probe);
                    let replayed = learner.predict(&fresh, &prefix, x, &mut probe);
                    r.check(cached.is_ok() && cached == replayed, || {
                        format!("{} seed {seed} round {}: prediction {cached:?} from cache vs {replayed:?} from replay", game.name, t + 1)
                    });
                }
                match adept.round(x, &mut oracle).and_then(|tent| adept.observe(tent, y)) {
                    Ok(()) => {}
                    Err(e) => {
                        r.fail(format!("{} seed {seed} round {}: {e}", game.name, t + 1));
                        break;
                    }
                }
            }
        }
    }
    r
}
