use std::collections::BTreeMap;
use std::ops::ControlFlow;

use smallvec::SmallVec;

use super::{ClassError, ConceptId, FiniteConceptClass, Instance, LabeledData, Label};

/// Unions of at most `d` blocks over the `(block, serial)` instance space.
///
/// Never materialized; every query is answered from block counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockUnionClass {
    d: usize,
}

/// A finite restriction of a [`BlockUnionClass`] to a grid of instances.
#[derive(Clone, Debug)]
pub struct Finitized {
    pub class: FiniteConceptClass,
    /// `instances[i]` is the block instance behind point `i`.
    pub instances: Vec<Instance>,
    /// `unions[c]` is the sorted block set behind row `c`.
    pub unions: Vec<Vec<u64>>,
}

impl Finitized {
    pub fn point_of(&self, x: &Instance) -> Option<Instance> {
        self.instances
            .iter()
            .position(|y| y == x)
            .map(|i| Instance::Point(i as u32))
    }
}

fn block_of(x: &Instance) -> Option<u64> {
    match *x {
        Instance::Block { block, .. } => Some(block),
        Instance::Point(_) => None,
    }
}

impl BlockUnionClass {
    pub fn new(d: usize) -> Self {
        BlockUnionClass { d }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_valid_concept(&self, concept: &ConceptId) -> bool {
        match concept {
            ConceptId::Blocks(b) => b.len() <= self.d && b.windows(2).all(|w| w[0] < w[1]),
            ConceptId::Index(_) => false,
        }
    }

    pub fn evaluate(&self, concept: &ConceptId, x: &Instance) -> Result<Label, ClassError> {
        if !self.is_valid_concept(concept) {
            return Err(ClassError::UnknownConcept(concept.to_string()));
        }
        let ConceptId::Blocks(blocks) = concept else {
            unreachable!("validated above")
        };
        let b = block_of(x).ok_or(ClassError::InstanceOutsideDomain { instance: *x })?;
        Ok(Label::from(blocks.binary_search(&b).is_ok()))
    }

    /// Realizable iff at most `d` blocks carry a positive label and no
    /// positive block carries a negative label.
    ///
    /// A point-encoded instance makes the data unrealizable.
    pub fn weak_consistent_analytic<D: LabeledData + ?Sized>(&self, data: &D) -> bool {
        let mut positive: SmallVec<[u64; 4]> = SmallVec::new();
        let flow = data.try_for_each_pair(|x, y| {
            let Some(b) = block_of(&x) else {
                return ControlFlow::Break(());
            };
            if y.is_one() && !positive.contains(&b) {
                if positive.len() == self.d {
                    return ControlFlow::Break(());
                }
                positive.push(b);
            }
            ControlFlow::Continue(())
        });
        if flow.is_break() {
            return false;
        }
        if positive.is_empty() {
            return true;
        }
        data.try_for_each_pair(|x, y| {
            if !y.is_one() && positive.contains(&block_of(&x).expect("checked in first pass")) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .is_continue()
    }

    /// Keeps the (at most `d`) blocks with the largest positive surplus.
    ///
    /// Ties go to the lower block id; blocks with no surplus are left out,
    /// so the empty union is returned when nothing helps.
    pub fn erm<D: LabeledData + ?Sized>(&self, data: &D) -> (ConceptId, u64) {
        let mut gain: BTreeMap<u64, i64> = BTreeMap::new();
        let mut positives = 0u64;
        let mut outside = 0u64;
        data.for_each_pair(|x, y| match block_of(&x) {
            Some(b) => {
                let g = gain.entry(b).or_insert(0);
                if y.is_one() {
                    positives += 1;
                    *g += 1;
                } else {
                    *g -= 1;
                }
            }
            None => outside += 1,
        });
        let mut ranked: Vec<(u64, i64)> = gain.into_iter().filter(|&(_, g)| g > 0).collect();
        ranked.sort_by_key(|&(b, g)| (std::cmp::Reverse(g), b));
        ranked.truncate(self.d);
        let saved: i64 = ranked.iter().map(|&(_, g)| g).sum();
        let mut blocks: Vec<u64> = ranked.into_iter().map(|(b, _)| b).collect();
        blocks.sort_unstable();
        (
            ConceptId::Blocks(blocks),
            positives - saved as u64 + outside,
        )
    }

    /// Restricts the class to `blocks × serials`, listing every union of at
    /// most `d` of the given blocks.
    pub fn finitize(&self, blocks: &[u64], serials: u64) -> Finitized {
        let instances: Vec<Instance> = blocks
            .iter()
            .flat_map(|&b| (0..serials).map(move |s| Instance::block(b, s)))
            .collect();
        let mut sorted_blocks = blocks.to_vec();
        sorted_blocks.sort_unstable();
        sorted_blocks.dedup();
        let mut unions = Vec::new();
        let n = sorted_blocks.len();
        assert!(n < 24, "too many blocks to finitize");
        for mask in 0u32..1 << n {
            if mask.count_ones() as usize <= self.d {
                unions.push(
                    (0..n)
                        .filter(|i| mask >> i & 1 == 1)
                        .map(|i| sorted_blocks[i])
                        .collect::<Vec<_>>(),
                );
            }
        }
        unions.sort();
        let rows = unions
            .iter()
            .map(|u| {
                instances
                    .iter()
                    .map(|x| u.contains(&block_of(x).expect("block instance")))
                    .collect()
            })
            .collect();
        let class = FiniteConceptClass::new(instances.len(), rows)
            .expect("distinct unions give distinct rows when serials > 0");
        Finitized {
            class,
            instances,
            unions,
        }
    }
}
