//! Weak-consistency and ERM oracle fronts with query accounting.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::concepts::{ConceptClass, ConceptId, Instance, Label, LabeledData};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("query budget of {budget} exhausted")]
    BudgetExhausted { budget: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    WeakConsistency,
    Erm,
}

/// Who issued a query; used only for bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QuerySource {
    /// Realizability checks on candidate extensions.
    Pruning,
    /// Queries made by a base learner to form its prediction.
    Learner,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Realizability {
    Realizable,
    Unrealizable,
}

impl Realizability {
    pub fn is_realizable(self) -> bool {
        self == Realizability::Realizable
    }
}

impl From<bool> for Realizability {
    fn from(ok: bool) -> Self {
        if ok {
            Realizability::Realizable
        } else {
            Realizability::Unrealizable
        }
    }
}

/// A query notification; carries no query content.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryEvent {
    pub round: usize,
    pub kind: OracleKind,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Charging {
    #[default]
    Raw,
    Dedup,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OracleStats {
    pub total_queries: u64,
    /// Index 0 holds calls made outside any round.
    pub per_round_queries: Vec<u64>,
    pub distinct_charged: u64,
    pub weak_consistency_queries: u64,
    pub erm_queries: u64,
    pub pruning_queries: u64,
    pub learner_queries: u64,
    pub other_queries: u64,
    /// Calls refused by the budget and answered with the default.
    pub throttled: u64,
}

impl OracleStats {
    pub fn round(&self, t: usize) -> u64 {
        self.per_round_queries.get(t).copied().unwrap_or(0)
    }

    /// Number of rounds (excluding slot 0) in which at least one query was counted.
    pub fn query_rounds(&self) -> usize {
        self.per_round_queries.iter().skip(1).filter(|&&q| q > 0).count()
    }
}

#[derive(Clone, Debug)]
enum Cached {
    Weak(bool),
    Erm(ConceptId, u64),
}

/// A multiset of pairs, keyed by an order-independent 128-bit fingerprint:
/// the wrapping sum of a mixed hash of every pair under two salts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct CacheKey {
    kind: OracleKind,
    len: usize,
    fingerprint: [u64; 2],
}

const SALTS: [u64; 2] = [0x243f_6a88_85a3_08d3, 0x1319_8a2e_0370_7344];

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn pair_hash(x: Instance, y: Label, salt: u64) -> u64 {
    let (tag, a, b) = match x {
        Instance::Point(i) => (1, u64::from(i), 0),
        Instance::Block { block, serial } => (2, block, serial),
    };
    let h = mix(salt ^ tag);
    let h = mix(h ^ a);
    let h = mix(h.wrapping_add(b));
    mix(h ^ u64::from(y.bit()))
}

/// The single access point to a concept class during a game.
#[derive(Debug)]
pub struct OracleFront {
    class: Arc<ConceptClass>,
    round: usize,
    stats: OracleStats,
    charging: Charging,
    budget: Option<u64>,
    cache: HashMap<CacheKey, Cached>,
    events: Vec<QueryEvent>,
    round_pruning: u64,
}

impl OracleFront {
    pub fn new(class: Arc<ConceptClass>) -> Self {
        OracleFront {
            class,
            round: 0,
            stats: OracleStats {
                per_round_queries: vec![0],
                ..OracleStats::default()
            },
            charging: Charging::Raw,
            budget: None,
            cache: HashMap::new(),
            events: Vec::new(),
            round_pruning: 0,
        }
    }

    /// Identical multisets of pairs are charged once.
    pub fn with_dedup_charging(mut self) -> Self {
        self.charging = Charging::Dedup;
        self
    }

    pub fn with_charging(mut self, charging: Charging) -> Self {
        self.charging = charging;
        self
    }

    /// Caps the number of charged calls. Past the cap, weak-consistency calls
    /// answer `Realizable` without being counted, and ERM calls fail.
    pub fn with_budget(mut self, budget: Option<u64>) -> Self {
        self.budget = budget;
        self
    }

    pub fn class(&self) -> &ConceptClass {
        &self.class
    }

    pub fn class_arc(&self) -> &Arc<ConceptClass> {
        &self.class
    }

    pub fn charging(&self) -> Charging {
        self.charging
    }

    pub fn stats(&self) -> &OracleStats {
        &self.stats
    }

    pub fn current_round(&self) -> usize {
        self.round
    }

    pub fn begin_round(&mut self, t: usize) {
        assert!(t >= 1, "rounds are numbered from 1");
        self.round = t;
        self.round_pruning = 0;
        if self.stats.per_round_queries.len() <= t {
            self.stats.per_round_queries.resize(t + 1, 0);
        }
    }

    /// Closes the round and hands back its events in issue order.
    pub fn end_round(&mut self) -> Vec<QueryEvent> {
        self.round = 0;
        std::mem::take(&mut self.events)
    }

    /// Pruning-source queries issued so far in the current round.
    pub fn round_pruning_queries(&self) -> u64 {
        self.round_pruning
    }

    fn charged(&self) -> u64 {
        match self.charging {
            Charging::Raw => self.stats.total_queries,
            Charging::Dedup => self.stats.distinct_charged,
        }
    }

    fn over_budget(&self) -> bool {
        self.budget.is_some_and(|b| self.charged() >= b)
    }

    fn count(&mut self, kind: OracleKind, source: QuerySource, fresh: bool) {
        let s = &mut self.stats;
        s.total_queries += 1;
        s.per_round_queries[self.round] += 1;
        if fresh {
            s.distinct_charged += 1;
        }
        match kind {
            OracleKind::WeakConsistency => s.weak_consistency_queries += 1,
            OracleKind::Erm => s.erm_queries += 1,
        }
        match source {
            QuerySource::Pruning => {
                s.pruning_queries += 1;
                self.round_pruning += 1;
            }
            QuerySource::Learner => s.learner_queries += 1,
            QuerySource::Other => s.other_queries += 1,
        }
        self.events.push(QueryEvent {
            round: self.round,
            kind,
        });
    }

    fn cache_key<D: LabeledData + ?Sized>(kind: OracleKind, data: &D) -> CacheKey {
        let mut key = CacheKey {
            kind,
            len: 0,
            fingerprint: [0; 2],
        };
        data.for_each_pair(|x, y| {
            key.len += 1;
            for (slot, salt) in key.fingerprint.iter_mut().zip(SALTS) {
                *slot = slot.wrapping_add(pair_hash(x, y, salt));
            }
        });
        key
    }

    pub fn weak_consistency<D: LabeledData + ?Sized>(
        &mut self,
        data: &D,
        source: QuerySource,
    ) -> Realizability {
        match self.charging {
            Charging::Raw => {
                if self.over_budget() {
                    self.stats.throttled += 1;
                    return Realizability::Realizable;
                }
                self.count(OracleKind::WeakConsistency, source, true);
                self.class.weak_consistent(data).into()
            }
            Charging::Dedup => {
                let key = Self::cache_key(OracleKind::WeakConsistency, data);
                if let Some(Cached::Weak(ok)) = self.cache.get(&key) {
                    let ok = *ok;
                    self.count(OracleKind::WeakConsistency, source, false);
                    return ok.into();
                }
                if self.over_budget() {
                    self.stats.throttled += 1;
                    return Realizability::Realizable;
                }
                let ok = self.class.weak_consistent(data);
                self.cache.insert(key, Cached::Weak(ok));
                self.count(OracleKind::WeakConsistency, source, true);
                ok.into()
            }
        }
    }

    pub fn erm<D: LabeledData + ?Sized>(
        &mut self,
        data: &D,
        source: QuerySource,
    ) -> Result<(ConceptId, u64), OracleError> {
        let key = match self.charging {
            Charging::Raw => None,
            Charging::Dedup => {
                let key = Self::cache_key(OracleKind::Erm, data);
                if let Some(Cached::Erm(c, e)) = self.cache.get(&key) {
                    let hit = (c.clone(), *e);
                    self.count(OracleKind::Erm, source, false);
                    return Ok(hit);
                }
                Some(key)
            }
        };
        if self.over_budget() {
            self.stats.throttled += 1;
            return Err(OracleError::BudgetExhausted {
                budget: self.budget.unwrap_or(0),
            });
        }
        let answer = self.class.erm(data);
        if let Some(key) = key {
            self.cache.insert(key, Cached::Erm(answer.0.clone(), answer.1));
        }
        self.count(OracleKind::Erm, source, true);
        Ok(answer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::{BlockUnionClass, FiniteConceptClass, LabeledSequence};

    fn diagonal() -> Arc<ConceptClass> {
        Arc::new(ConceptClass::Finite(
            FiniteConceptClass::from_bit_strings(&["00", "11"]).unwrap(),
        ))
    }

    fn seq(pairs: &[(u32, u8)]) -> LabeledSequence {
        pairs
            .iter()
            .map(|&(x, y)| (Instance::point(x), Label::from_bit(y).unwrap()))
            .collect()
    }

    #[test]
    fn weak_consistency_examples() {
        let mut o = OracleFront::new(diagonal());
        assert!(o.weak_consistency(&seq(&[]), QuerySource::Other).is_realizable());
        assert!(!o
            .weak_consistency(&seq(&[(0, 0), (1, 1)]), QuerySource::Other)
            .is_realizable());
        let mut b = OracleFront::new(Arc::new(ConceptClass::BlockUnion(BlockUnionClass::new(1))));
        let s: LabeledSequence = vec![(Instance::block(1, 0), Label::ONE)].into_iter().collect();
        assert!(b.weak_consistency(&s, QuerySource::Other).is_realizable());
        assert_eq!(o.stats().total_queries, 2);
        assert_eq!(o.stats().per_round_queries, vec![2]);
    }

    #[test]
    fn erm_examples() {
        let mut o = OracleFront::new(diagonal());
        assert_eq!(o.erm(&seq(&[]), QuerySource::Other), Ok((ConceptId::Index(0), 0)));
        assert_eq!(
            o.erm(&seq(&[(0, 0), (1, 1)]), QuerySource::Other),
            Ok((ConceptId::Index(0), 1))
        );
        assert_eq!(o.stats().erm_queries, 2);
    }

    #[test]
    fn dedup_charges_multisets_once() {
        let mut o = OracleFront::new(diagonal()).with_dedup_charging();
        let s = seq(&[(0, 1), (1, 1)]);
        o.weak_consistency(&s, QuerySource::Other);
        o.weak_consistency(&s, QuerySource::Other);
        assert_eq!((o.stats().total_queries, o.stats().distinct_charged), (2, 1));
        o.weak_consistency(&seq(&[(1, 1), (0, 1)]), QuerySource::Other);
        assert_eq!(o.stats().distinct_charged, 1);
        o.weak_consistency(&seq(&[(0, 1), (1, 0)]), QuerySource::Other);
        assert_eq!(o.stats().distinct_charged, 2);
        // same content, other oracle: a separate charge
        o.erm(&s, QuerySource::Other).unwrap();
        assert_eq!(o.stats().distinct_charged, 3);
    }

    #[test]
    fn rounds_and_events() {
        let mut o = OracleFront::new(diagonal());
        o.begin_round(1);
        assert!(o.end_round().is_empty());
        o.begin_round(2);
        o.weak_consistency(&seq(&[(0, 1)]), QuerySource::Pruning);
        o.erm(&seq(&[(0, 1)]), QuerySource::Learner).unwrap();
        o.weak_consistency(&seq(&[(0, 0)]), QuerySource::Pruning);
        assert_eq!(o.round_pruning_queries(), 2);
        let events = o.end_round();
        let kinds: Vec<_> = events.iter().map(|e| e.kind).collect();
        assert_eq!(
            kinds,
            vec![OracleKind::WeakConsistency, OracleKind::Erm, OracleKind::WeakConsistency]
        );
        assert!(events.iter().all(|e| e.round == 2));
        let s = o.stats();
        assert_eq!(s.per_round_queries, vec![0, 0, 3]);
        assert_eq!(s.total_queries, s.per_round_queries.iter().sum::<u64>());
        assert_eq!(s.query_rounds(), 1);
        assert_eq!((s.pruning_queries, s.learner_queries), (2, 1));
    }

    #[test]
    fn budget_throttles_silently() {
        let mut o = OracleFront::new(diagonal()).with_budget(Some(1));
        o.begin_round(1);
        let bad = seq(&[(0, 0), (1, 1)]);
        assert!(!o.weak_consistency(&bad, QuerySource::Pruning).is_realizable());
        assert!(o.weak_consistency(&bad, QuerySource::Pruning).is_realizable());
        assert!(o.erm(&bad, QuerySource::Other).is_err());
        assert_eq!(o.end_round().len(), 1);
        assert_eq!((o.stats().total_queries, o.stats().throttled), (1, 2));
    }
}
