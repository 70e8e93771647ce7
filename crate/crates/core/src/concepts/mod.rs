//! Concept classes, labeled data, and brute-force dimension computations.

mod block;
mod dimension;
mod finite;
mod set;

use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use block::{BlockUnionClass, Finitized};
pub use dimension::{littlestone_dimension, vc_dimension, LittlestoneMemo, MAX_BRUTE_FORCE_CONCEPTS};
pub use finite::FiniteConceptClass;
pub use set::ConceptSet;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ClassError {
    #[error("invalid class spec: {field}: {reason}")]
    InvalidSpec { field: String, reason: String },
    #[error("unknown concept {0}")]
    UnknownConcept(String),
    #[error("instance {instance} is outside the class's domain")]
    InstanceOutsideDomain { instance: Instance },
    #[error("{what} has {size} elements, brute-force limit is {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },
}

/// A binary label.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Label(bool);

impl Label {
    pub const ZERO: Label = Label(false);
    pub const ONE: Label = Label(true);

    pub fn from_bit(bit: u8) -> Option<Label> {
        match bit {
            0 => Some(Label::ZERO),
            1 => Some(Label::ONE),
            _ => None,
        }
    }

    #[inline]
    pub fn is_one(self) -> bool {
        self.0
    }

    #[inline]
    pub fn bit(self) -> u8 {
        self.0 as u8
    }

    #[inline]
    pub fn flip(self) -> Label {
        Label(!self.0)
    }

    pub fn both() -> [Label; 2] {
        [Label::ZERO, Label::ONE]
    }
}

impl From<bool> for Label {
    fn from(b: bool) -> Self {
        Label(b)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.bit())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let bit = u8::deserialize(d)?;
        Label::from_bit(bit)
            .ok_or_else(|| serde::de::Error::custom(format!("label must be 0 or 1, got {bit}")))
    }
}

/// A point of the instance space.
///
/// Finite domains use plain indices; block-structured domains use a
/// `(block, serial)` pair. Ordering is lexicographic on the encoding.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Instance {
    Point(u32),
    Block { block: u64, serial: u64 },
}

impl Instance {
    pub fn point(index: u32) -> Self {
        Instance::Point(index)
    }

    pub fn block(block: u64, serial: u64) -> Self {
        Instance::Block { block, serial }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instance::Point(i) => write!(f, "{i}"),
            Instance::Block { block, serial } => write!(f, "{block}:{serial}"),
        }
    }
}

impl FromStr for Instance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None => s
                .parse()
                .map(Instance::Point)
                .map_err(|e| format!("bad instance {s:?}: {e}")),
            Some((b, r)) => {
                let block = b.parse().map_err(|e| format!("bad block in {s:?}: {e}"))?;
                let serial = r.parse().map_err(|e| format!("bad serial in {s:?}: {e}"))?;
                Ok(Instance::Block { block, serial })
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InstanceRepr {
    Point(u32),
    Block([u64; 2]),
}

impl Serialize for Instance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Instance::Point(i) => InstanceRepr::Point(i),
            Instance::Block { block, serial } => InstanceRepr::Block([block, serial]),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match InstanceRepr::deserialize(d)? {
            InstanceRepr::Point(i) => Instance::Point(i),
            InstanceRepr::Block([block, serial]) => Instance::Block { block, serial },
        })
    }
}

/// Read access to a finite multiset of labeled pairs.
///
/// Pairs may be visited in any order; every consumer in this crate is
/// order-invariant.
pub trait LabeledData {
    fn len(&self) -> usize;

    fn try_for_each_pair<F>(&self, f: F) -> ControlFlow<()>
    where
        F: FnMut(Instance, Label) -> ControlFlow<()>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn for_each_pair<F: FnMut(Instance, Label)>(&self, mut f: F) {
        let _ = self.try_for_each_pair(|x, y| {
            f(x, y);
            ControlFlow::Continue(())
        });
    }

    fn to_pairs(&self) -> Vec<(Instance, Label)> {
        let mut out = Vec::with_capacity(self.len());
        self.for_each_pair(|x, y| out.push((x, y)));
        out
    }

    /// This data followed by one more pair.
    fn with_pair(&self, x: Instance, y: Label) -> WithPair<'_, Self> {
        WithPair {
            base: self,
            x,
            y,
        }
    }
}

/// An ordered list of labeled pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub pairs: Vec<(Instance, Label)>,
}

impl LabeledSequence {
    pub fn new(pairs: Vec<(Instance, Label)>) -> Self {
        LabeledSequence { pairs }
    }

    pub fn push(&mut self, x: Instance, y: Label) {
        self.pairs.push((x, y));
    }

    pub fn instances(&self) -> impl Iterator<Item = Instance> + '_ {
        self.pairs.iter().map(|p| p.0)
    }
}

impl FromIterator<(Instance, Label)> for LabeledSequence {
    fn from_iter<I: IntoIterator<Item = (Instance, Label)>>(iter: I) -> Self {
        LabeledSequence::new(iter.into_iter().collect())
    }
}

impl LabeledData for LabeledSequence {
    fn len(&self) -> usize {
        self.pairs.len()
    }

    fn try_for_each_pair<F>(&self, f: F) -> ControlFlow<()>
    where
        F: FnMut(Instance, Label) -> ControlFlow<()>,
    {
        self.pairs.as_slice().try_for_each_pair(f)
    }
}

impl LabeledData for [(Instance, Label)] {
    fn len(&self) -> usize {
        <[_]>::len(self)
    }

    fn try_for_each_pair<F>(&self, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(Instance, Label) -> ControlFlow<()>,
    {
        for &(x, y) in self {
            f(x, y)?;
        }
        ControlFlow::Continue(())
    }
}

impl LabeledData for Vec<(Instance, Label)> {
    fn len(&self) -> usize {
        self.as_slice().len()
    }

    fn try_for_each_pair<F>(&self, f: F) -> ControlFlow<()>
    where
        F: FnMut(Instance, Label) -> ControlFlow<()>,
    {
        self.as_slice().try_for_each_pair(f)
    }
}

/// See [`LabeledData::with_pair`].
pub struct WithPair<'a, D: ?Sized> {
    base: &'a D,
    x: Instance,
    y: Label,
}

impl<D: LabeledData + ?Sized> LabeledData for WithPair<'_, D> {
    fn len(&self) -> usize {
        self.base.len() + 1
    }

    fn try_for_each_pair<F>(&self, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(Instance, Label) -> ControlFlow<()>,
    {
        f(self.x, self.y)?;
        self.base.try_for_each_pair(f)
    }
}

/// A label vector over a fixed instance list.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dichotomy(pub Vec<Label>);

impl fmt::Debug for Dichotomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

impl Dichotomy {
    pub fn parse(bits: &str) -> Option<Dichotomy> {
        bits.bytes()
            .map(|b| Label::from_bit(b.wrapping_sub(b'0')))
            .collect::<Option<Vec<_>>>()
            .map(Dichotomy)
    }
}

/// Identifies one concept of a class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConceptId {
    /// Row index of a finite class.
    Index(usize),
    /// Sorted positive blocks of a block-union concept.
    Blocks(Vec<u64>),
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConceptId::Index(i) => write!(f, "#{i}"),
            ConceptId::Blocks(b) => write!(f, "blocks{b:?}"),
        }
    }
}

/// JSON class description.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSpec {
    Finite {
        domain_size: usize,
        concepts: Vec<Vec<i64>>,
    },
    BlockUnion {
        d: usize,
    },
}

impl ClassSpec {
    pub fn build(&self) -> Result<ConceptClass, ClassError> {
        match self {
            ClassSpec::Finite {
                domain_size,
                concepts,
            } => {
                let mut rows = Vec::with_capacity(concepts.len());
                for (i, row) in concepts.iter().enumerate() {
                    if row.len() != *domain_size {
                        return Err(ClassError::InvalidSpec {
                            field: format!("concepts[{i}]"),
                            reason: format!(
                                "expected {domain_size} entries, found {}",
                                row.len()
                            ),
                        });
                    }
                    let mut bits = Vec::with_capacity(row.len());
                    for (j, &v) in row.iter().enumerate() {
                        match v {
                            0 => bits.push(false),
                            1 => bits.push(true),
                            other => {
                                return Err(ClassError::InvalidSpec {
                                    field: format!("concepts[{i}][{j}]"),
                                    reason: format!("value {other} is not 0 or 1"),
                                })
                            }
                        }
                    }
                    rows.push(bits);
                }
                FiniteConceptClass::new(*domain_size, rows).map(ConceptClass::Finite)
            }
            ClassSpec::BlockUnion { d } => Ok(ConceptClass::BlockUnion(BlockUnionClass::new(*d))),
        }
    }
}

/// Any concept class the oracles can answer for.
#[derive(Clone, Debug)]
pub enum ConceptClass {
    Finite(FiniteConceptClass),
    BlockUnion(BlockUnionClass),
}

impl ConceptClass {
    pub fn evaluate(&self, concept: &ConceptId, x: &Instance) -> Result<Label, ClassError> {
        match self {
            ConceptClass::Finite(c) => c.evaluate(concept, x),
            ConceptClass::BlockUnion(c) => c.evaluate(concept, x),
        }
    }

    pub fn contains_instance(&self, x: &Instance) -> bool {
        match self {
            ConceptClass::Finite(c) => c.contains_instance(x),
            ConceptClass::BlockUnion(_) => matches!(x, Instance::Block { .. }),
        }
    }

    pub fn contains_concept(&self, concept: &ConceptId) -> bool {
        match self {
            ConceptClass::Finite(c) => matches!(concept, ConceptId::Index(i) if *i < c.len()),
            ConceptClass::BlockUnion(c) => c.is_valid_concept(concept),
        }
    }

    /// True iff some concept agrees with every pair.
    pub fn weak_consistent<D: LabeledData + ?Sized>(&self, data: &D) -> bool {
        match self {
            ConceptClass::Finite(c) => c.weak_consistent(data),
            ConceptClass::BlockUnion(c) => c.weak_consistent_analytic(data),
        }
    }

    /// A concept of minimum empirical error and that error.
    pub fn erm<D: LabeledData + ?Sized>(&self, data: &D) -> (ConceptId, u64) {
        match self {
            ConceptClass::Finite(c) => c.erm(data),
            ConceptClass::BlockUnion(c) => c.erm(data),
        }
    }

    /// Labels of `concept` on each instance.
    pub fn labels(&self, concept: &ConceptId, xs: &[Instance]) -> Result<Vec<Label>, ClassError> {
        xs.iter().map(|x| self.evaluate(concept, x)).collect()
    }

    pub fn as_finite(&self) -> Option<&FiniteConceptClass> {
        match self {
            ConceptClass::Finite(c) => Some(c),
            ConceptClass::BlockUnion(_) => None,
        }
    }

    /// VC dimension: exhaustive for finite classes, `d` for block unions.
    pub fn vc_dimension(&self) -> Result<usize, ClassError> {
        match self {
            ConceptClass::Finite(c) => vc_dimension(c),
            ConceptClass::BlockUnion(c) => Ok(c.d()),
        }
    }

    pub fn littlestone_dimension(&self) -> Result<usize, ClassError> {
        match self {
            ConceptClass::Finite(c) => littlestone_dimension(c),
            ConceptClass::BlockUnion(c) => Ok(c.d()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_ordering_is_lexicographic() {
        let mut xs = vec![
            Instance::block(2, 0),
            Instance::block(1, 5),
            Instance::block(1, 2),
        ];
        xs.sort();
        assert_eq!(
            xs,
            vec![Instance::block(1, 2), Instance::block(1, 5), Instance::block(2, 0)]
        );
        assert!(Instance::point(3) < Instance::point(4));
    }

    #[test]
    fn instance_text_and_json_forms() {
        for x in [Instance::point(7), Instance::block(3, 17)] {
            assert_eq!(x.to_string().parse::<Instance>().unwrap(), x);
            let json = serde_json::to_string(&x).unwrap();
            assert_eq!(serde_json::from_str::<Instance>(&json).unwrap(), x);
        }
        assert_eq!(serde_json::to_string(&Instance::block(3, 17)).unwrap(), "[3,17]");
    }

    #[test]
    fn class_spec_errors_name_the_field() {
        let spec: ClassSpec = serde_json::from_str(
            r#"{"type":"finite","domain_size":2,"concepts":[[0,0],[1]]}"#,
        )
        .unwrap();
        match spec.build() {
            Err(ClassError::InvalidSpec { field, .. }) => assert_eq!(field, "concepts[1]"),
            other => panic!("unexpected {other:?}"),
        }
        let spec: ClassSpec = serde_json::from_str(
            r#"{"type":"finite","domain_size":2,"concepts":[[0,2]]}"#,
        )
        .unwrap();
        match spec.build() {
            Err(ClassError::InvalidSpec { field, .. }) => assert_eq!(field, "concepts[0][1]"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(serde_json::from_str::<ClassSpec>(r#"{"type":"block_union","d":1,"x":2}"#).is_err());
        let spec: ClassSpec = serde_json::from_str(r#"{"type":"block_union","d":2}"#).unwrap();
        assert!(matches!(spec.build(), Ok(ConceptClass::BlockUnion(_))));
    }

    #[test]
    fn with_pair_appends() {
        let base = LabeledSequence::new(vec![(Instance::point(0), Label::ONE)]);
        let ext = base.with_pair(Instance::point(1), Label::ZERO);
        assert_eq!(ext.len(), 2);
        let mut pairs = ext.to_pairs();
        pairs.sort();
        assert_eq!(
            pairs,
            vec![(Instance::point(0), Label::ONE), (Instance::point(1), Label::ZERO)]
        );
    }
}
