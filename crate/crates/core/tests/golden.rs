//! Hand-computed values, frozen.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use adeptlab::adversaries::{Adversary, PhaseReset, RoundView};
use adeptlab::combinatorics::{expert_count, future_capacity_exact, log_binomial, sauer_bound};
use adeptlab::concepts::{
    BlockUnionClass, ConceptClass, ConceptId, FiniteConceptClass, Instance, Label, LabeledSequence,
};
use adeptlab::harness::run_game;
use adeptlab::learners::{BaseKind, BaseLearner};
use adeptlab::oracles::{OracleFront, OracleKind, QueryEvent, QuerySource, Realizability};
use adeptlab::reductions::{adaptive_eta, bdpss_run, Adept, AdeptConfig, HedgeParams};
use adeptlab::subsampling::{draw_sample, LazyAdept, SampledSet};
use adeptlab::verify::lower_bound::{self, regret_floor};

fn pt(i: u32) -> Instance {
    Instance::point(i)
}

fn lab(b: u8) -> Label {
    Label::from_bit(b).unwrap()
}

fn blk(b: u64, s: u64, y: u8) -> (Instance, Label) {
    (Instance::block(b, s), lab(y))
}

fn finite(rows: &[&str]) -> Arc<ConceptClass> {
    Arc::new(ConceptClass::Finite(FiniteConceptClass::from_bit_strings(rows).unwrap()))
}

fn block(d: usize) -> Arc<ConceptClass> {
    Arc::new(ConceptClass::BlockUnion(BlockUnionClass::new(d)))
}

#[test]
fn log_binomials() {
    assert!((log_binomial(5, 2).ln() - std::f64::consts::LN_10).abs() < 1e-12);
    assert_eq!(log_binomial(7, 0).ln(), 0.0);
    assert_eq!(log_binomial(3, 4).ln(), f64::NEG_INFINITY);
}

#[test]
fn capacities() {
    let w = |k| future_capacity_exact(5, 3, 1, k).to_f64();
    assert_eq!((w(0), w(1), w(2)), (3.0, 1.0, 0.0));
}

#[test]
fn sauer_values() {
    assert_eq!(sauer_bound(100, 1), 101);
    assert_eq!(sauer_bound(3, 0), 1);
    assert_eq!(sauer_bound(2, 5), 4);
}

#[test]
fn singleton_dimensions() {
    let c = FiniteConceptClass::singletons(3);
    assert_eq!(adeptlab::concepts::vc_dimension(&c).unwrap(), 1);
    assert_eq!(adeptlab::concepts::littlestone_dimension(&c).unwrap(), 1);
}

#[test]
fn block_weak_consistency() {
    let one = BlockUnionClass::new(1);
    let two = BlockUnionClass::new(2);
    let conflict = LabeledSequence::new(vec![blk(1, 0, 1), blk(1, 1, 0)]);
    let spread = LabeledSequence::new(vec![blk(1, 0, 1), blk(2, 0, 1)]);
    assert!(!one.weak_consistent_analytic(&conflict));
    assert!(!one.weak_consistent_analytic(&spread));
    assert!(two.weak_consistent_analytic(&spread));
}

#[test]
fn finite_oracle_answers() {
    let mut o = OracleFront::new(finite(&["00", "11"]));
    let s = LabeledSequence::new(vec![(pt(0), lab(0)), (pt(1), lab(1))]);
    assert_eq!(o.weak_consistency(&s, QuerySource::Other), Realizability::Unrealizable);
    assert_eq!(o.erm(&s, QuerySource::Other).unwrap(), (ConceptId::Index(0), 1));
}

#[test]
fn block_erm_keeps_heaviest_block() {
    let s = LabeledSequence::new(vec![
        blk(2, 0, 1),
        blk(2, 1, 1),
        blk(2, 2, 1),
        blk(5, 0, 1),
        blk(3, 0, 0),
        blk(4, 0, 0),
    ]);
    assert_eq!(BlockUnionClass::new(1).erm(&s), (ConceptId::Blocks(vec![2]), 1));
}

#[test]
fn dedup_ignores_order() {
    let mut o = OracleFront::new(finite(&["00", "01", "11"])).with_dedup_charging();
    let a = LabeledSequence::new(vec![(pt(0), lab(0)), (pt(1), lab(1))]);
    let b = LabeledSequence::new(vec![(pt(1), lab(1)), (pt(0), lab(0))]);
    o.weak_consistency(&a, QuerySource::Other);
    o.weak_consistency(&b, QuerySource::Other);
    assert_eq!(o.stats().total_queries, 2);
    assert_eq!(o.stats().distinct_charged, 1);
}

#[test]
fn soa_ties_predict_zero() {
    for rows in [&["00", "01", "10", "11"][..], &["00", "11"][..]] {
        let class = finite(rows);
        let soa = BaseLearner::new(BaseKind::Soa, &class).unwrap();
        let mut o = OracleFront::new(class.clone());
        let empty = LabeledSequence::default();
        let y = soa.predict(&soa.initial_state(), &empty, pt(0), &mut o).unwrap();
        assert_eq!(y, Label::ZERO, "{rows:?}");
    }
    let singletons = Arc::new(ConceptClass::Finite(FiniteConceptClass::singletons(3)));
    assert_eq!(BaseLearner::new(BaseKind::Soa, &singletons).unwrap().mistake_bound(), 1);
}

#[test]
fn symmetric_first_round() {
    let class = finite(&["00", "01", "10", "11"]);
    let soa = BaseLearner::new(BaseKind::Soa, &class).unwrap();
    let adept = Adept::new(soa, AdeptConfig::new(HedgeParams::with_eta(2, 2, 0.7)).exact());
    let mut o = OracleFront::new(class);
    o.begin_round(1);
    let tent = adept.round(pt(0), &mut o).unwrap();
    assert_eq!(tent.p1(), 0.5);
    assert_eq!(tent.len(), 2);
}

#[test]
fn pruned_extension() {
    let class = finite(&["00", "11"]);
    let soa = BaseLearner::new(BaseKind::Soa, &class).unwrap();
    let mut adept = Adept::new(soa, AdeptConfig::new(HedgeParams::fixed(2, 1)));
    let mut o = OracleFront::new(class);
    o.begin_round(1);
    let tent = adept.round(pt(0), &mut o).unwrap();
    adept.observe(tent, Label::ZERO).unwrap();
    o.end_round();
    o.begin_round(2);
    let tent = adept.round(pt(1), &mut o).unwrap();
    assert_eq!(o.round_pruning_queries(), 4);
    assert_eq!(tent.len(), 2);
    adept.observe(tent, Label::ZERO).unwrap();
    let mut prefixes: Vec<Vec<Label>> = adept.active_dichotomies().into_iter().map(|d| d.0).collect();
    prefixes.sort();
    assert_eq!(prefixes, vec![vec![lab(0), lab(0)], vec![lab(1), lab(1)]]);
}

#[test]
fn adaptive_rate() {
    assert!((adaptive_eta(0, 0.04) - 0.2).abs() < 1e-15);
    assert_eq!(adaptive_eta(0, 100.0), 0.5);
}

#[test]
fn ensemble_size() {
    assert_eq!(expert_count(2, 2), 4u32.into());
    let class = finite(&["00", "01", "10", "11"]);
    let run = bdpss_run(&class, BaseKind::Soa, HedgeParams::fixed(2, 2), &[(pt(0), lab(1)), (pt(1), lab(0))], false)
        .unwrap();
    assert_eq!(run.experts, 4);
}

#[test]
fn initial_potential() {
    let class = finite(&["00", "01", "10", "11"]);
    let soa = BaseLearner::new(BaseKind::Soa, &class).unwrap();
    for (horizon, budget) in [(2, 2), (10, 3), (40, 1)] {
        let adept = Adept::new(soa.clone(), AdeptConfig::new(HedgeParams::fixed(horizon, budget)));
        let want = future_capacity_exact(horizon, 0, budget, 0).ln();
        assert!((adept.ln_z0() - want).abs() < 1e-12);
    }
}

#[test]
fn phase_advances_once_per_query_round() {
    let class = block(1);
    let mut adv = Adversary::PhaseReset(PhaseReset::new(1));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let events = [QueryEvent { round: 1, kind: OracleKind::WeakConsistency }; 3];
    let (x, y) = adv.next_example(1, &class, &mut rng).unwrap();
    adv.on_round_complete(RoundView { round: 1, x, y_hat: y, y, events: &events });
    assert_eq!(adv.phase_reset().unwrap().phases().len(), 2);
    let (x, y) = adv.next_example(2, &class, &mut rng).unwrap();
    assert!(matches!(x, Instance::Block { block: 3 | 4, .. }));
    adv.on_round_complete(RoundView { round: 2, x, y_hat: y, y, events: &[] });
    assert_eq!(adv.phase_reset().unwrap().phases().len(), 2);
}

#[test]
fn phase_comparator() {
    for (d, budget) in [(1, 3), (2, 6)] {
        for seed in 0..5 {
            let out = run_game(&lower_bound::config(200, d, budget), seed).unwrap();
            let phases = out.phases.as_ref().unwrap();
            assert!(phases.len() <= out.summary.query_rounds + 1);
            let mut p: Vec<u64> = phases.iter().map(|r| r.positives).collect();
            let total: u64 = p.iter().sum();
            p.sort_unstable_by(|a, b| b.cmp(a));
            assert_eq!(out.summary.comparator_loss, total - p[..d.min(p.len())].iter().sum::<u64>());
        }
    }
}

#[test]
fn lazy_queries_every_round() {
    let class = finite(&["00", "01", "10", "11"]);
    let soa = BaseLearner::new(BaseKind::Soa, &class).unwrap();
    let inner = Adept::new(soa, AdeptConfig::new(HedgeParams::fixed(4, 2)));
    let mut lazy = LazyAdept::new(inner, SampledSet::from_members(12, [2, 5, 9, 11]));
    let mut o = OracleFront::new(class);
    for t in 1..=12 {
        o.begin_round(t);
        let before = lazy.inner().active().len() as u64;
        let tent = lazy.predict(pt((t % 2) as u32), &mut o).unwrap();
        assert_eq!(o.round_pruning_queries(), 2 * before, "round {t}");
        let committed = lazy.observe(tent, lab((t % 3 == 0) as u8)).unwrap();
        assert_eq!(committed, [2, 5, 9, 11].contains(&t));
        o.end_round();
    }
    assert_eq!(lazy.committed(), 4);
}

#[test]
fn sample_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 100_000;
    let mut hits = [0u32; 10];
    for _ in 0..draws {
        let s = draw_sample(10, 3, &mut rng).unwrap();
        assert_eq!(s.len(), 3);
        for t in s.rounds() {
            hits[t - 1] += 1;
        }
    }
    let se = (0.3f64 * 0.7 / draws as f64).sqrt();
    for h in hits {
        assert!((h as f64 / draws as f64 - 0.3).abs() <= 3.0 * se, "{hits:?}");
    }
}

#[test]
fn lower_bound_floors() {
    assert_eq!(regret_floor(2000, 1, 0), 1000.0);
    assert_eq!(regret_floor(2000, 1, 1), 499.5);
    assert_eq!(regret_floor(2000, 1, 4), 198.0);
    assert!((regret_floor(2000, 1, 10) - 85.909).abs() < 1e-3);
}

#[test]
fn regret_bound_at_2048() {
    let (t, m) = (2048f64, 2f64);
    let bound = (0.5 * t * m * (std::f64::consts::E * t / m).ln()).sqrt();
    assert!((bound - 127.45).abs() < 0.01, "{bound}");
}
