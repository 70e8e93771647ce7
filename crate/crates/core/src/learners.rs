//! Deterministic mistake-bounded realizable learners.

use std::cell::RefCell;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::concepts::{
    ClassError, ConceptClass, ConceptSet, FiniteConceptClass, Instance, Label, LabeledData,
    LittlestoneMemo,
};
use crate::oracles::{OracleFront, QuerySource};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LearnerError {
    #[error("{learner} does not support {what}")]
    Unsupported {
        learner: &'static str,
        what: &'static str,
    },
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error("base learner asked to predict from an empty version space")]
    EmptyVersionSpace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    #[default]
    Soa,
    Halving,
}

/// Per-prefix learner state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LearnerState {
    /// Concepts consistent with the prefix.
    VersionSpace(ConceptSet),
    /// The learner keeps nothing and re-derives its prediction from the prefix.
    Stateless,
    /// Reached after an unrealizable prefix; predicts 0 forever.
    Sink,
}

impl LearnerState {
    pub fn is_sink(&self) -> bool {
        matches!(self, LearnerState::Sink)
    }
}

#[derive(Clone, Debug)]
enum Inner {
    Soa {
        class: FiniteConceptClass,
        memo: RefCell<LittlestoneMemo>,
        bound: usize,
    },
    Halving {
        class: FiniteConceptClass,
    },
    /// SOA for block unions, driven by one weak-consistency call per prediction.
    BlockSoa {
        d: usize,
    },
}

/// A base learner bound to one concept class.
#[derive(Clone, Debug)]
pub struct BaseLearner {
    inner: Inner,
}

impl BaseLearner {
    pub fn new(kind: BaseKind, class: &Arc<ConceptClass>) -> Result<Self, LearnerError> {
        let inner = match (kind, class.as_ref()) {
            (BaseKind::Soa, ConceptClass::Finite(c)) => {
                let mut memo = LittlestoneMemo::new(c)?;
                let full = memo.full_mask();
                let bound = memo.ldim(full);
                Inner::Soa {
                    class: c.clone(),
                    memo: RefCell::new(memo),
                    bound,
                }
            }
            (BaseKind::Halving, ConceptClass::Finite(c)) => Inner::Halving { class: c.clone() },
            (BaseKind::Soa, ConceptClass::BlockUnion(b)) => Inner::BlockSoa { d: b.d() },
            (BaseKind::Halving, ConceptClass::BlockUnion(_)) => {
                return Err(LearnerError::Unsupported {
                    learner: "halving",
                    what: "block-union classes",
                })
            }
        };
        Ok(BaseLearner { inner })
    }

    pub fn name(&self) -> &'static str {
        match self.inner {
            Inner::Soa { .. } | Inner::BlockSoa { .. } => "soa",
            Inner::Halving { .. } => "halving",
        }
    }

    /// Worst-case number of mistakes on a realizable sequence.
    pub fn mistake_bound(&self) -> usize {
        match &self.inner {
            Inner::Soa { bound, .. } => *bound,
            Inner::Halving { class } => class.len().ilog2() as usize,
            Inner::BlockSoa { d } => *d,
        }
    }

    /// True when predictions consult the oracle.
    pub fn queries_oracle(&self) -> bool {
        matches!(self.inner, Inner::BlockSoa { .. })
    }

    pub fn initial_state(&self) -> LearnerState {
        match &self.inner {
            Inner::Soa { class, .. } | Inner::Halving { class } => {
                LearnerState::VersionSpace(class.full_version_space())
            }
            Inner::BlockSoa { .. } => LearnerState::Stateless,
        }
    }

    /// Prediction on `x` after `prefix`, whose state is `state`.
    pub fn predict<D: LabeledData + ?Sized>(
        &self,
        state: &LearnerState,
        prefix: &D,
        x: Instance,
        oracle: &mut OracleFront,
    ) -> Result<Label, LearnerError> {
        let vs = match state {
            LearnerState::Sink => return Ok(Label::ZERO),
            LearnerState::VersionSpace(vs) => {
                if vs.is_empty() {
                    return Err(LearnerError::EmptyVersionSpace);
                }
                Some(vs)
            }
            LearnerState::Stateless => None,
        };
        match (&self.inner, vs) {
            (Inner::Soa { class, memo, .. }, Some(vs)) => {
                let (Some(zero), Some(one)) = (
                    class.agreeing(&x, Label::ZERO),
                    class.agreeing(&x, Label::ONE),
                ) else {
                    return Ok(Label::ZERO);
                };
                let mask = vs.as_word().expect("SOA classes fit one word");
                let v0 = mask & zero.as_word().expect("one word");
                let v1 = mask & one.as_word().expect("one word");
                if v1 == 0 {
                    return Ok(Label::ZERO);
                }
                if v0 == 0 {
                    return Ok(Label::ONE);
                }
                let mut memo = memo.borrow_mut();
                Ok(Label::from(memo.ldim(v1) > memo.ldim(v0)))
            }
            (Inner::Halving { class }, Some(vs)) => {
                let (Some(zero), Some(one)) = (
                    class.agreeing(&x, Label::ZERO),
                    class.agreeing(&x, Label::ONE),
                ) else {
                    return Ok(Label::ZERO);
                };
                let ones = vs.intersection(one).len();
                let zeros = vs.intersection(zero).len();
                Ok(Label::from(ones > zeros))
            }
            (Inner::BlockSoa { .. }, _) => {
                let with_zero = prefix.with_pair(x, Label::ZERO);
                let answer = oracle.weak_consistency(&with_zero, QuerySource::Learner);
                Ok(Label::from(!answer.is_realizable()))
            }
            _ => unreachable!("state kind matches learner kind"),
        }
    }

    /// Successor state after seeing `(x, y)`.
    pub fn advance(&self, state: &LearnerState, x: Instance, y: Label) -> LearnerState {
        match state {
            LearnerState::Sink => LearnerState::Sink,
            LearnerState::Stateless => LearnerState::Stateless,
            LearnerState::VersionSpace(vs) => {
                let class = match &self.inner {
                    Inner::Soa { class, .. } | Inner::Halving { class } => class,
                    Inner::BlockSoa { .. } => unreachable!("block learner is stateless"),
                };
                let next = match class.agreeing(&x, y) {
                    Some(col) => vs.intersection(col),
                    None => ConceptSet::empty(vs.capacity()),
                };
                if next.is_empty() {
                    LearnerState::Sink
                } else {
                    LearnerState::VersionSpace(next)
                }
            }
        }
    }

    /// State reached by feeding `prefix` from scratch.
    pub fn replay(&self, prefix: &[(Instance, Label)]) -> LearnerState {
        prefix
            .iter()
            .fold(self.initial_state(), |s, &(x, y)| self.advance(&s, x, y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::BlockUnionClass;

    fn finite(rows: &[&str]) -> Arc<ConceptClass> {
        Arc::new(ConceptClass::Finite(
            FiniteConceptClass::from_bit_strings(rows).unwrap(),
        ))
    }

    fn predict_empty(l: &BaseLearner, class: &Arc<ConceptClass>, x: u32) -> Label {
        let mut o = OracleFront::new(class.clone());
        l.predict(&l.initial_state(), &Vec::new(), Instance::point(x), &mut o)
            .unwrap()
    }

    #[test]
    fn soa_ties_predict_zero() {
        let p2 = Arc::new(ConceptClass::Finite(FiniteConceptClass::powerset(2)));
        let soa = BaseLearner::new(BaseKind::Soa, &p2).unwrap();
        assert_eq!(predict_empty(&soa, &p2, 0), Label::ZERO);
        assert_eq!(soa.mistake_bound(), 2);
        let diag = finite(&["00", "11"]);
        let soa = BaseLearner::new(BaseKind::Soa, &diag).unwrap();
        assert_eq!(predict_empty(&soa, &diag, 0), Label::ZERO);
    }

    #[test]
    fn soa_prefers_richer_restriction() {
        // label 1 on point 0 leaves two concepts that split on point 1
        let c = finite(&["000", "110", "100"]);
        let soa = BaseLearner::new(BaseKind::Soa, &c).unwrap();
        assert_eq!(predict_empty(&soa, &c, 0), Label::ONE);
    }

    #[test]
    fn halving_majority() {
        let c = finite(&["1", "0"]);
        let h = BaseLearner::new(BaseKind::Halving, &c).unwrap();
        assert_eq!(predict_empty(&h, &c, 0), Label::ZERO);
        let c = finite(&["10", "11", "00"]);
        let h = BaseLearner::new(BaseKind::Halving, &c).unwrap();
        assert_eq!(predict_empty(&h, &c, 0), Label::ONE);
    }

    #[test]
    fn mistake_bounds() {
        let p3 = Arc::new(ConceptClass::Finite(FiniteConceptClass::powerset(3)));
        assert_eq!(BaseLearner::new(BaseKind::Halving, &p3).unwrap().mistake_bound(), 3);
        let s3 = Arc::new(ConceptClass::Finite(FiniteConceptClass::singletons(3)));
        assert_eq!(BaseLearner::new(BaseKind::Soa, &s3).unwrap().mistake_bound(), 1);
        let blocks = Arc::new(ConceptClass::BlockUnion(BlockUnionClass::new(2)));
        assert_eq!(BaseLearner::new(BaseKind::Soa, &blocks).unwrap().mistake_bound(), 2);
        assert!(BaseLearner::new(BaseKind::Halving, &blocks).is_err());
        let big = Arc::new(ConceptClass::Finite(FiniteConceptClass::powerset(7)));
        assert!(BaseLearner::new(BaseKind::Soa, &big).is_err());
    }

    #[test]
    fn advance_filters_and_sinks() {
        let c = finite(&["00", "11"]);
        let soa = BaseLearner::new(BaseKind::Soa, &c).unwrap();
        let s = soa.advance(&soa.initial_state(), Instance::point(0), Label::ONE);
        assert_eq!(s, LearnerState::VersionSpace(ConceptSet::from_indices(2, [1])));
        assert_eq!(soa.advance(&s, Instance::point(0), Label::ONE), s);
        let sink = soa.advance(&s, Instance::point(1), Label::ZERO);
        assert!(sink.is_sink());
        let mut o = OracleFront::new(c.clone());
        assert_eq!(
            soa.predict(&sink, &Vec::new(), Instance::point(0), &mut o),
            Ok(Label::ZERO)
        );
    }

    #[test]
    fn block_soa_predicts_known_positive_blocks() {
        let c = Arc::new(ConceptClass::BlockUnion(BlockUnionClass::new(1)));
        let l = BaseLearner::new(BaseKind::Soa, &c).unwrap();
        let mut o = OracleFront::new(c.clone());
        let prefix = vec![(Instance::block(3, 0), Label::ONE)];
        let s = l.initial_state();
        assert_eq!(l.predict(&s, &prefix, Instance::block(3, 1), &mut o), Ok(Label::ONE));
        assert_eq!(l.predict(&s, &prefix, Instance::block(4, 0), &mut o), Ok(Label::ZERO));
        assert_eq!(o.stats().learner_queries, 2);
    }
}
