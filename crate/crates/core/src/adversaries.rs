//! Example streams: realizable and noisy draws, fixed sequences, and the
//! query-coupled phase-reset adversary.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::concepts::{ConceptClass, ConceptId, Instance, Label};
use crate::oracles::QueryEvent;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("invalid adversary spec: {field}: {reason}")]
    InvalidSpec { field: String, reason: String },
    #[error("fixed sequence has {len} pairs but round {round} was requested")]
    Exhausted { len: usize, round: usize },
}

fn default_blocks() -> u64 {
    4
}

/// JSON adversary description.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    Realizable {
        concept: ConceptId,
        /// Blocks to draw from on block classes.
        #[serde(default = "default_blocks")]
        blocks: u64,
    },
    Noisy {
        concept: ConceptId,
        flip: f64,
        #[serde(default = "default_blocks")]
        blocks: u64,
    },
    PhaseReset {
        d: usize,
    },
    Fixed {
        pairs: Vec<(Instance, Label)>,
    },
}

impl AdversarySpec {
    /// Checks the spec against the class and horizon.
    pub fn validate(&self, class: &ConceptClass, horizon: usize) -> Result<(), AdversaryError> {
        let bad = |field: &str, reason: String| AdversaryError::InvalidSpec {
            field: field.into(),
            reason,
        };
        match self {
            AdversarySpec::Realizable { concept, blocks } | AdversarySpec::Noisy { concept, blocks, .. } => {
                if !class.contains_concept(concept) {
                    return Err(bad("concept", format!("{concept} is not a concept of the class")));
                }
                if *blocks == 0 {
                    return Err(bad("blocks", "must be positive".into()));
                }
                if let ConceptClass::Finite(f) = class {
                    if f.domain_size() == 0 && horizon > 0 {
                        return Err(bad("concept", "the class has an empty domain".into()));
                    }
                }
                if let AdversarySpec::Noisy { flip, .. } = self {
                    if !(0.0..=1.0).contains(flip) {
                        return Err(bad("flip", format!("{flip} is not a probability")));
                    }
                }
            }
            AdversarySpec::PhaseReset { d } => {
                match class {
                    ConceptClass::BlockUnion(b) if b.d() == *d => {}
                    ConceptClass::BlockUnion(b) => {
                        return Err(bad("d", format!("class has d = {}, adversary has d = {d}", b.d())))
                    }
                    ConceptClass::Finite(_) => {
                        return Err(bad("type", "phase_reset needs a block_union class".into()))
                    }
                }
            }
            AdversarySpec::Fixed { pairs } => {
                if pairs.len() < horizon {
                    return Err(bad(
                        "pairs",
                        format!("{} pairs given for horizon {horizon}", pairs.len()),
                    ));
                }
                if let Some(i) = pairs.iter().position(|(x, _)| !class.contains_instance(x)) {
                    return Err(bad(&format!("pairs[{i}]"), "instance outside the class's domain".into()));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Adversary {
        match self {
            AdversarySpec::Realizable { concept, blocks } => Adversary::Stochastic(Stochastic {
                concept: concept.clone(),
                flip: 0.0,
                blocks: *blocks,
                serials: HashMap::new(),
            }),
            AdversarySpec::Noisy { concept, flip, blocks } => Adversary::Stochastic(Stochastic {
                concept: concept.clone(),
                flip: *flip,
                blocks: *blocks,
                serials: HashMap::new(),
            }),
            AdversarySpec::PhaseReset { d } => Adversary::PhaseReset(PhaseReset::new(*d)),
            AdversarySpec::Fixed { pairs } => Adversary::Fixed(pairs.clone()),
        }
    }
}

/// Positive count of one phase of the phase-reset adversary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhaseRecord {
    pub index: u64,
    pub positives: u64,
    pub blocks: (u64, u64),
}

/// Draws fresh points from block `2i+1` (label 1) or `2i+2` (label 0) of the
/// current phase `i`, and ends the phase after any round with a query.
#[derive(Clone, Debug)]
pub struct PhaseReset {
    d: usize,
    phases: Vec<PhaseRecord>,
    serials: HashMap<u64, u64>,
}

impl PhaseReset {
    pub fn new(d: usize) -> Self {
        PhaseReset {
            d,
            phases: vec![PhaseRecord {
                index: 0,
                positives: 0,
                blocks: (1, 2),
            }],
            serials: HashMap::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn phases(&self) -> &[PhaseRecord] {
        &self.phases
    }

    /// `P - (sum of the d largest P_i)`: the best union of `d` blocks.
    pub fn predicted_comparator_loss(&self) -> u64 {
        let mut p: Vec<u64> = self.phases.iter().map(|r| r.positives).collect();
        let total: u64 = p.iter().sum();
        p.sort_unstable_by(|a, b| b.cmp(a));
        total - p.iter().take(self.d).sum::<u64>()
    }
}

#[derive(Clone, Debug)]
pub struct Stochastic {
    concept: ConceptId,
    flip: f64,
    blocks: u64,
    serials: HashMap<u64, u64>,
}

fn fresh(serials: &mut HashMap<u64, u64>, block: u64) -> Instance {
    let s = serials.entry(block).or_insert(0);
    let x = Instance::block(block, *s);
    *s += 1;
    x
}

/// What an adversary sees once a round is over.
#[derive(Clone, Copy, Debug)]
pub struct RoundView<'a> {
    pub round: usize,
    pub x: Instance,
    pub y_hat: Label,
    pub y: Label,
    pub events: &'a [QueryEvent],
}

#[derive(Clone, Debug)]
pub enum Adversary {
    Stochastic(Stochastic),
    PhaseReset(PhaseReset),
    Fixed(Vec<(Instance, Label)>),
}

impl Adversary {
    /// The example of round `t`; the label is fixed before the learner moves.
    pub fn next_example(
        &mut self,
        t: usize,
        class: &ConceptClass,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Instance, Label), AdversaryError> {
        match self {
            Adversary::Stochastic(s) => {
                let x = match class {
                    ConceptClass::Finite(f) => {
                        Instance::point(rng.random_range(0..f.domain_size() as u32))
                    }
                    ConceptClass::BlockUnion(_) => {
                        let b = rng.random_range(0..s.blocks);
                        fresh(&mut s.serials, b)
                    }
                };
                let clean = class
                    .evaluate(&s.concept, &x)
                    .expect("concept validated against class");
                let noisy = s.flip > 0.0 && rng.random_bool(s.flip);
                Ok((x, if noisy { clean.flip() } else { clean }))
            }
            Adversary::PhaseReset(p) => {
                let phase = p.phases.last_mut().expect("at least one phase");
                let (pos, neg) = phase.blocks;
                if rng.random_bool(0.5) {
                    phase.positives += 1;
                    Ok((fresh(&mut p.serials, pos), Label::ONE))
                } else {
                    Ok((fresh(&mut p.serials, neg), Label::ZERO))
                }
            }
            Adversary::Fixed(pairs) => pairs.get(t - 1).copied().ok_or(AdversaryError::Exhausted {
                len: pairs.len(),
                round: t,
            }),
        }
    }

    pub fn on_round_complete(&mut self, view: RoundView<'_>) {
        if let Adversary::PhaseReset(p) = self {
            if !view.events.is_empty() {
                let i = p.phases.len() as u64;
                p.phases.push(PhaseRecord {
                    index: i,
                    positives: 0,
                    blocks: (2 * i + 1, 2 * i + 2),
                });
            }
        }
    }

    pub fn phase_reset(&self) -> Option<&PhaseReset> {
        match self {
            Adversary::PhaseReset(p) => Some(p),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::concepts::{BlockUnionClass, FiniteConceptClass, LabeledSequence};
    use crate::oracles::OracleKind;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn realizable_labels_follow_the_concept() {
        let class = ConceptClass::Finite(FiniteConceptClass::from_bit_strings(&["0110"]).unwrap());
        let spec = AdversarySpec::Realizable {
            concept: ConceptId::Index(0),
            blocks: 4,
        };
        spec.validate(&class, 10).unwrap();
        let mut adv = spec.build();
        let mut r = rng();
        for t in 1..=50 {
            let (x, y) = adv.next_example(t, &class, &mut r).unwrap();
            assert_eq!(class.evaluate(&ConceptId::Index(0), &x).unwrap(), y);
        }
    }

    #[test]
    fn zero_noise_matches_realizable() {
        let class = ConceptClass::BlockUnion(BlockUnionClass::new(1));
        let concept = ConceptId::Blocks(vec![2]);
        let mut a = AdversarySpec::Realizable { concept: concept.clone(), blocks: 4 }.build();
        let mut b = AdversarySpec::Noisy { concept, flip: 0.0, blocks: 4 }.build();
        let (mut ra, mut rb) = (rng(), rng());
        for t in 1..=40 {
            assert_eq!(
                a.next_example(t, &class, &mut ra).unwrap(),
                b.next_example(t, &class, &mut rb).unwrap()
            );
        }
    }

    #[test]
    fn phase_reset_advances_once_per_query_round() {
        let class = ConceptClass::BlockUnion(BlockUnionClass::new(1));
        let mut adv = AdversarySpec::PhaseReset { d: 1 }.build();
        let mut r = rng();
        let ev = QueryEvent {
            round: 1,
            kind: OracleKind::WeakConsistency,
        };
        let mut seen = std::collections::HashSet::new();
        let mut seq = LabeledSequence::default();
        for t in 1..=60 {
            let (x, y) = adv.next_example(t, &class, &mut r).unwrap();
            assert!(seen.insert(x), "instance repeated");
            let Instance::Block { block, .. } = x else { panic!() };
            let phase = adv.phase_reset().unwrap().phases().len() as u64 - 1;
            assert_eq!(block, if y.is_one() { 2 * phase + 1 } else { 2 * phase + 2 });
            seq.push(x, y);
            let events = if t % 20 == 0 { vec![ev; 3] } else { vec![] };
            adv.on_round_complete(RoundView { round: t, x, y_hat: Label::ZERO, y, events: &events });
        }
        let p = adv.phase_reset().unwrap();
        assert_eq!(p.phases().len(), 4);
        assert_eq!(class.erm(&seq).1, p.predicted_comparator_loss());
    }

    #[test]
    fn spec_validation() {
        let class = ConceptClass::BlockUnion(BlockUnionClass::new(1));
        assert!(AdversarySpec::PhaseReset { d: 2 }.validate(&class, 5).is_err());
        let bad: Result<AdversarySpec, _> =
            serde_json::from_str(r#"{"type":"noisy","concept":[1],"flip":0.2,"extra":1}"#);
        assert!(bad.is_err());
        let spec: AdversarySpec =
            serde_json::from_str(r#"{"type":"noisy","concept":[1],"flip":1.5}"#).unwrap();
        assert!(spec.validate(&class, 5).is_err());
        let fixed: AdversarySpec =
            serde_json::from_str(r#"{"type":"fixed","pairs":[[[1,0],1]]}"#).unwrap();
        assert!(fixed.validate(&class, 1).is_ok());
        assert!(fixed.validate(&class, 2).is_err());
    }
}
