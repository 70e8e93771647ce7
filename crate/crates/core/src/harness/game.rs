use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ReductionKind, Resolved};
use super::seeds::{stream_rng, Stream};
use crate::adversaries::{Adversary, PhaseRecord, RoundView};
use crate::concepts::{ConceptId, Instance, Label, LabeledData, LabeledSequence};
use crate::error::Result;
use crate::learners::BaseLearner;
use crate::oracles::{Charging, OracleFront, OracleStats};
use crate::reductions::{Adept, AdeptConfig, BdpssEnsemble, PotentialRecord};
use crate::subsampling::{draw_sample, LazyAdept, SampledSet};

mod instance_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::concepts::Instance;

    pub fn serialize<S: Serializer>(x: &Instance, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(x)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Instance, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// One transcript row. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    #[serde(with = "instance_text")]
    pub x: Instance,
    pub p1: f64,
    pub y_hat: Label,
    pub y: Label,
    /// Active prefixes (alive experts for the explicit ensemble) after the round.
    pub active: usize,
    /// Weak-consistency calls counted this round.
    pub wc_queries: u64,
    /// The subset of `wc_queries` spent on realizability pruning.
    pub pruning_queries: u64,
    pub cum_raw: u64,
    /// Cumulative distinct charged calls; empty unless dedup charging is on.
    pub cum_dedup: Option<u64>,
    pub expected_loss: f64,
    pub realized_loss: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub horizon: usize,
    pub learner: String,
    pub learner_loss: u64,
    pub expected_loss: f64,
    pub comparator_loss: u64,
    pub regret: i64,
    pub expected_regret: f64,
    pub raw_queries: u64,
    pub dedup_queries: Option<u64>,
    pub pruning_queries: u64,
    pub learner_queries: u64,
    pub throttled: u64,
    pub max_active: usize,
    pub query_rounds: usize,
    pub committed_rounds: Option<usize>,
    pub early_reads: Option<u64>,
    pub sink_experts: Option<usize>,
    pub wall_ms: f64,
}

/// The reduction driving a game.
#[derive(Debug)]
pub enum LearnerRuntime {
    Adept(Adept),
    Bdpss(BdpssEnsemble),
    Lazy(LazyAdept),
}

impl LearnerRuntime {
    pub fn as_adept(&self) -> Option<&Adept> {
        match self {
            LearnerRuntime::Adept(a) => Some(a),
            LearnerRuntime::Lazy(l) => Some(l.inner()),
            LearnerRuntime::Bdpss(_) => None,
        }
    }

    fn active(&self) -> usize {
        match self {
            LearnerRuntime::Adept(a) => a.active().len(),
            LearnerRuntime::Lazy(l) => l.inner().active().len(),
            LearnerRuntime::Bdpss(b) => b.alive(),
        }
    }
}

/// Everything a finished game produced.
#[derive(Debug)]
pub struct GameOutput {
    pub summary: Summary,
    pub transcript: Vec<RoundRecord>,
    pub potentials: Vec<PotentialRecord>,
    pub phases: Option<Vec<PhaseRecord>>,
    pub stats: OracleStats,
    pub sequence: LabeledSequence,
    pub comparator: ConceptId,
}

/// A game in progress, advanced one round at a time.
#[derive(Debug)]
pub struct Game {
    resolved: Resolved,
    horizon: usize,
    seed: u64,
    label: String,
    oracle: OracleFront,
    learner: LearnerRuntime,
    adversary: Adversary,
    adversary_rng: ChaCha8Rng,
    learner_rng: ChaCha8Rng,
    sequence: LabeledSequence,
    transcript: Vec<RoundRecord>,
    learner_loss: u64,
    expected_loss: f64,
    max_active: usize,
    last_weak: u64,
    started: Instant,
}

impl Game {
    pub fn new(cfg: &ExperimentConfig, seed: u64) -> Result<Self> {
        let resolved = cfg.resolve()?;
        Self::with_resolved(cfg, resolved, seed, None)
    }

    /// Like [`Game::new`] but with an explicit lazy sample instead of a draw.
    pub fn with_sample(cfg: &ExperimentConfig, seed: u64, sample: SampledSet) -> Result<Self> {
        let resolved = cfg.resolve()?;
        Self::with_resolved(cfg, resolved, seed, Some(sample))
    }

    fn with_resolved(
        cfg: &ExperimentConfig,
        resolved: Resolved,
        seed: u64,
        sample: Option<SampledSet>,
    ) -> Result<Self> {
        let class = resolved.class.clone();
        let spec = &cfg.learner;
        let adept_cfg = || {
            let mut c = AdeptConfig::new(resolved.hedge);
            c.numeric = cfg.numeric;
            c.allow_sink = spec.query_budget.is_some();
            c
        };
        let learner = match resolved.reduction {
            ReductionKind::Adept => {
                LearnerRuntime::Adept(Adept::new(BaseLearner::new(spec.base, &class)?, adept_cfg()))
            }
            ReductionKind::Bdpss => LearnerRuntime::Bdpss(BdpssEnsemble::new(
                &class,
                spec.base,
                resolved.hedge,
                spec.prune_experts,
            )?),
            ReductionKind::LazyAdept => {
                let k = resolved.lazy_k.expect("resolved lazy horizon");
                let sample = match sample {
                    Some(s) => s,
                    None if cfg.horizon == 0 => SampledSet::from_members(0, []),
                    None => draw_sample(cfg.horizon, k, &mut stream_rng(seed, Stream::Sampler))?,
                };
                let inner = Adept::new(BaseLearner::new(spec.base, &class)?, adept_cfg());
                LearnerRuntime::Lazy(LazyAdept::new(inner, sample))
            }
        };
        let oracle = OracleFront::new(class)
            .with_charging(cfg.charging)
            .with_budget(spec.query_budget);
        Ok(Game {
            horizon: cfg.horizon,
            seed,
            label: spec.label(),
            oracle,
            learner,
            adversary: cfg.adversary.build(),
            adversary_rng: stream_rng(seed, Stream::Adversary),
            learner_rng: stream_rng(seed, Stream::Learner),
            sequence: LabeledSequence::default(),
            transcript: Vec::with_capacity(cfg.horizon),
            learner_loss: 0,
            expected_loss: 0.0,
            max_active: 1,
            last_weak: 0,
            started: Instant::now(),
            resolved,
        })
    }

    pub fn resolved(&self) -> &Resolved {
        &self.resolved
    }

    pub fn round(&self) -> usize {
        self.transcript.len()
    }

    pub fn is_done(&self) -> bool {
        self.round() >= self.horizon
    }

    pub fn learner(&self) -> &LearnerRuntime {
        &self.learner
    }

    pub fn oracle(&self) -> &OracleFront {
        &self.oracle
    }

    pub fn adversary(&self) -> &Adversary {
        &self.adversary
    }

    pub fn sequence(&self) -> &LabeledSequence {
        &self.sequence
    }

    pub fn transcript(&self) -> &[RoundRecord] {
        &self.transcript
    }

    /// Plays one round in protocol order: example, prediction, label,
    /// update, query notification.
    pub fn step(&mut self) -> Result<&RoundRecord> {
        let t = self.round() + 1;
        assert!(t <= self.horizon, "game already finished");
        self.oracle.begin_round(t);
        let class = self.resolved.class.clone();
        let (x, y) = self
            .adversary
            .next_example(t, &class, &mut self.adversary_rng)?;

        let (p1, y_hat) = match &mut self.learner {
            LearnerRuntime::Adept(a) => {
                let tent = a.round(x, &mut self.oracle)?;
                let p1 = tent.p1();
                let y_hat = sample_label(&mut self.learner_rng, p1);
                a.observe(tent, y)?;
                (p1, y_hat)
            }
            LearnerRuntime::Lazy(l) => {
                let tent = l.predict(x, &mut self.oracle)?;
                let p1 = tent.p1();
                let y_hat = sample_label(&mut self.learner_rng, p1);
                l.observe(tent, y)?;
                (p1, y_hat)
            }
            LearnerRuntime::Bdpss(b) => {
                let r = b.round(x, &mut self.oracle)?;
                let y_hat = sample_label(&mut self.learner_rng, r.p1);
                b.observe(x, y);
                (r.p1, y_hat)
            }
        };
        let pruning = self.oracle.round_pruning_queries();
        let events = self.oracle.end_round();
        self.adversary.on_round_complete(RoundView {
            round: t,
            x,
            y_hat,
            y,
            events: &events,
        });

        let expected = if y.is_one() { 1.0 - p1 } else { p1 };
        let realized = u8::from(y_hat != y);
        self.learner_loss += u64::from(realized);
        self.expected_loss += expected;
        self.sequence.push(x, y);
        let active = self.learner.active();
        self.max_active = self.max_active.max(active);
        let stats = self.oracle.stats();
        let wc = stats.weak_consistency_queries - self.last_weak;
        self.last_weak = stats.weak_consistency_queries;
        self.transcript.push(RoundRecord {
            round: t,
            x,
            p1,
            y_hat,
            y,
            active,
            wc_queries: wc,
            pruning_queries: pruning,
            cum_raw: stats.total_queries,
            cum_dedup: (self.oracle.charging() == Charging::Dedup).then_some(stats.distinct_charged),
            expected_loss: expected,
            realized_loss: realized,
        });
        Ok(self.transcript.last().expect("just pushed"))
    }

    /// Computes the comparator with an uncharged ERM call and packages the run.
    pub fn finish(self) -> GameOutput {
        let (comparator, comparator_loss) = self.resolved.class.erm(&self.sequence);
        let stats = self.oracle.stats().clone();
        let (committed_rounds, early_reads) = match &self.learner {
            LearnerRuntime::Lazy(l) => (Some(l.committed()), Some(l.sample().early_reads())),
            _ => (None, None),
        };
        let sink_experts = match &self.learner {
            LearnerRuntime::Bdpss(b) => Some(b.sink_experts()),
            _ => None,
        };
        let potentials = self
            .learner
            .as_adept()
            .map(|a| a.potentials().to_vec())
            .unwrap_or_default();
        let summary = Summary {
            seed: self.seed,
            horizon: self.horizon,
            learner: self.label,
            learner_loss: self.learner_loss,
            expected_loss: self.expected_loss,
            comparator_loss,
            regret: self.learner_loss as i64 - comparator_loss as i64,
            expected_regret: self.expected_loss - comparator_loss as f64,
            raw_queries: stats.total_queries,
            dedup_queries: (self.oracle.charging() == Charging::Dedup).then_some(stats.distinct_charged),
            pruning_queries: stats.pruning_queries,
            learner_queries: stats.learner_queries,
            throttled: stats.throttled,
            max_active: self.max_active,
            query_rounds: stats.query_rounds(),
            committed_rounds,
            early_reads,
            sink_experts,
            wall_ms: self.started.elapsed().as_secs_f64() * 1e3,
        };
        debug_assert_eq!(self.sequence.len(), self.transcript.len());
        GameOutput {
            summary,
            transcript: self.transcript,
            potentials,
            phases: self.adversary.phase_reset().map(|p| p.phases().to_vec()),
            stats,
            sequence: self.sequence,
            comparator,
        }
    }
}

fn sample_label(rng: &mut ChaCha8Rng, p1: f64) -> Label {
    Label::from(rng.random::<f64>() < p1)
}

/// Plays a whole game.
pub fn run_game(cfg: &ExperimentConfig, seed: u64) -> Result<GameOutput> {
    let mut game = Game::new(cfg, seed)?;
    while !game.is_done() {
        game.step()?;
    }
    Ok(game.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    #[test]
    fn realizable_run_has_zero_comparator_loss() {
        let cfg = config(
            r#"{"class":{"type":"finite","domain_size":3,"concepts":[[0,0,1],[0,1,1],[1,1,1]]},
                "adversary":{"type":"realizable","concept":1},"T":30}"#,
        );
        for seed in 0..5 {
            let out = run_game(&cfg, seed).unwrap();
            assert_eq!(out.summary.comparator_loss, 0);
            assert_eq!(out.summary.regret, out.summary.learner_loss as i64);
            let sum: u64 = out.stats.per_round_queries.iter().sum();
            assert_eq!(sum, out.stats.total_queries);
            assert_eq!(out.transcript.last().unwrap().cum_raw, out.stats.total_queries);
        }
    }

    #[test]
    fn empty_horizon() {
        let cfg = config(
            r#"{"class":{"type":"block_union","d":1},
                "adversary":{"type":"phase_reset","d":1},"T":0}"#,
        );
        let out = run_game(&cfg, 3).unwrap();
        assert!(out.transcript.is_empty());
        assert_eq!(out.summary.regret, 0);
        assert_eq!(out.summary.expected_regret, 0.0);
    }

    #[test]
    fn same_seed_same_transcript() {
        let cfg = config(
            r#"{"class":{"type":"block_union","d":1},
                "adversary":{"type":"noisy","concept":[0],"flip":0.2},"T":40}"#,
        );
        let a = run_game(&cfg, 11).unwrap();
        let b = run_game(&cfg, 11).unwrap();
        assert_eq!(a.transcript, b.transcript);
        let c = run_game(&cfg, 12).unwrap();
        assert_ne!(a.transcript, c.transcript);
    }
}
