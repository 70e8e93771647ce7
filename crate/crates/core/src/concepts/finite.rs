use std::collections::{BTreeSet, HashSet};
use std::ops::ControlFlow;

use super::{ClassError, ConceptId, ConceptSet, Dichotomy, Instance, LabeledData, Label};

/// An explicit concept class over the points `0..n`.
#[derive(Clone, Debug)]
pub struct FiniteConceptClass {
    domain_size: usize,
    rows: Vec<Vec<bool>>,
    // columns[x][b]: concepts labeling point x with b
    columns: Vec<[ConceptSet; 2]>,
}

impl FiniteConceptClass {
    /// Builds the class, dropping duplicate rows (first occurrence kept).
    pub fn new(domain_size: usize, rows: Vec<Vec<bool>>) -> Result<Self, ClassError> {
        if rows.is_empty() {
            return Err(ClassError::InvalidSpec {
                field: "concepts".into(),
                reason: "a class needs at least one concept".into(),
            });
        }
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != domain_size {
                return Err(ClassError::InvalidSpec {
                    field: format!("concepts[{i}]"),
                    reason: format!("expected {domain_size} entries, found {}", row.len()),
                });
            }
            if seen.insert(row.clone()) {
                kept.push(row);
            } else {
                log::warn!("dropping duplicate concept row {i}");
            }
        }
        let count = kept.len();
        let columns = (0..domain_size)
            .map(|x| {
                let mut zero = ConceptSet::empty(count);
                let mut one = ConceptSet::empty(count);
                for (c, row) in kept.iter().enumerate() {
                    if row[x] {
                        one.insert(c);
                    } else {
                        zero.insert(c);
                    }
                }
                [zero, one]
            })
            .collect();
        Ok(FiniteConceptClass {
            domain_size,
            rows: kept,
            columns,
        })
    }

    /// Parses rows written as bit strings, e.g. `["00", "11"]`.
    pub fn from_bit_strings(rows: &[&str]) -> Result<Self, ClassError> {
        let n = rows.first().map_or(0, |r| r.len());
        let parsed = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.bytes()
                    .map(|b| match b {
                        b'0' => Ok(false),
                        b'1' => Ok(true),
                        _ => Err(ClassError::InvalidSpec {
                            field: format!("concepts[{i}]"),
                            reason: format!("{r:?} is not a bit string"),
                        }),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(n, parsed)
    }

    /// All `2^n` labelings of `n` points.
    pub fn powerset(n: usize) -> Self {
        assert!(n < 20, "powerset of {n} points is too large");
        let rows = (0..1usize << n)
            .map(|mask| (0..n).map(|i| mask >> i & 1 == 1).collect())
            .collect();
        Self::new(n, rows).expect("powerset rows are valid")
    }

    /// The `n` indicator functions of single points.
    pub fn singletons(n: usize) -> Self {
        let rows = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
        Self::new(n, rows).expect("singleton rows are valid")
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.rows
    }

    pub fn instances(&self) -> Vec<Instance> {
        (0..self.domain_size as u32).map(Instance::Point).collect()
    }

    fn point(&self, x: &Instance) -> Option<usize> {
        match *x {
            Instance::Point(i) if (i as usize) < self.domain_size => Some(i as usize),
            _ => None,
        }
    }

    pub fn contains_instance(&self, x: &Instance) -> bool {
        self.point(x).is_some()
    }

    pub fn evaluate(&self, concept: &ConceptId, x: &Instance) -> Result<Label, ClassError> {
        let row = match concept {
            ConceptId::Index(i) if *i < self.rows.len() => &self.rows[*i],
            other => return Err(ClassError::UnknownConcept(other.to_string())),
        };
        let p = self
            .point(x)
            .ok_or(ClassError::InstanceOutsideDomain { instance: *x })?;
        Ok(Label::from(row[p]))
    }

    pub fn full_version_space(&self) -> ConceptSet {
        ConceptSet::full(self.len())
    }

    /// Concepts labeling `x` with `y`; empty for points outside the domain.
    pub fn agreeing(&self, x: &Instance, y: Label) -> Option<&ConceptSet> {
        self.point(x).map(|p| &self.columns[p][y.bit() as usize])
    }

    /// Concepts consistent with every pair of `data`.
    pub fn version_space<D: LabeledData + ?Sized>(&self, data: &D) -> ConceptSet {
        let mut vs = self.full_version_space();
        let flow = data.try_for_each_pair(|x, y| match self.agreeing(&x, y) {
            Some(col) => {
                vs.intersect_with(col);
                ControlFlow::Continue(())
            }
            None => ControlFlow::Break(()),
        });
        if flow.is_break() {
            ConceptSet::empty(self.len())
        } else {
            vs
        }
    }

    pub fn weak_consistent<D: LabeledData + ?Sized>(&self, data: &D) -> bool {
        if self.len() <= 64 {
            let mut word = self.full_version_space().as_word().unwrap_or(0);
            let flow = data.try_for_each_pair(|x, y| {
                match self.agreeing(&x, y).and_then(ConceptSet::as_word) {
                    Some(col) => word &= col,
                    None => word = 0,
                }
                if word == 0 {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            flow.is_continue() && word != 0
        } else {
            !self.version_space(data).is_empty()
        }
    }

    /// Lowest-index concept of minimum empirical error.
    ///
    /// Pairs outside the domain count as an error for every concept.
    pub fn erm<D: LabeledData + ?Sized>(&self, data: &D) -> (ConceptId, u64) {
        let mut errors = vec![0u64; self.len()];
        let mut universal = 0u64;
        data.for_each_pair(|x, y| match self.agreeing(&x, y.flip()) {
            Some(wrong) => {
                for c in wrong.iter() {
                    errors[c] += 1;
                }
            }
            None => universal += 1,
        });
        let (best, min) = errors
            .iter()
            .enumerate()
            .min_by_key(|&(i, &e)| (e, i))
            .map(|(i, &e)| (i, e))
            .expect("class is nonempty");
        (ConceptId::Index(best), min + universal)
    }

    /// The set of labelings the class induces on `instances`.
    pub fn project(&self, instances: &[Instance]) -> BTreeSet<Dichotomy> {
        let points: Vec<Option<usize>> = instances.iter().map(|x| self.point(x)).collect();
        if points.iter().any(Option::is_none) {
            return BTreeSet::new();
        }
        self.rows
            .iter()
            .map(|row| {
                Dichotomy(
                    points
                        .iter()
                        .map(|p| Label::from(row[p.expect("checked above")]))
                        .collect(),
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::LabeledSequence;

    fn diagonal() -> FiniteConceptClass {
        FiniteConceptClass::from_bit_strings(&["00", "11"]).unwrap()
    }

    fn seq(pairs: &[(u32, u8)]) -> LabeledSequence {
        pairs
            .iter()
            .map(|&(x, y)| (Instance::point(x), Label::from_bit(y).unwrap()))
            .collect()
    }

    #[test]
    fn evaluate_table_lookup() {
        let c = diagonal();
        assert_eq!(c.evaluate(&ConceptId::Index(1), &Instance::point(0)), Ok(Label::ONE));
        assert!(c.evaluate(&ConceptId::Index(2), &Instance::point(0)).is_err());
        assert!(c.evaluate(&ConceptId::Index(0), &Instance::point(2)).is_err());
    }

    #[test]
    fn duplicates_are_dropped() {
        let c = FiniteConceptClass::from_bit_strings(&["01", "01", "10"]).unwrap();
        assert_eq!(c.len(), 2);
        assert!(FiniteConceptClass::new(2, vec![]).is_err());
    }

    #[test]
    fn projection_examples() {
        let c = diagonal();
        let both = c.project(&[Instance::point(0), Instance::point(1)]);
        let expected: BTreeSet<_> = ["00", "11"].iter().map(|s| Dichotomy::parse(s).unwrap()).collect();
        assert_eq!(both, expected);
        assert_eq!(c.project(&[Instance::point(0)]).len(), 2);
        let p = FiniteConceptClass::powerset(2);
        assert_eq!(p.project(&[Instance::point(0), Instance::point(1)]).len(), 4);
    }

    #[test]
    fn weak_consistency_and_erm() {
        let c = diagonal();
        assert!(c.weak_consistent(&seq(&[])));
        assert!(!c.weak_consistent(&seq(&[(0, 0), (1, 1)])));
        assert!(c.weak_consistent(&seq(&[(0, 1), (1, 1), (0, 1)])));
        assert!(!c.weak_consistent(&seq(&[(0, 1), (0, 0)])));
        assert!(!c.weak_consistent(&seq(&[(5, 1)])));
        assert_eq!(c.erm(&seq(&[])), (ConceptId::Index(0), 0));
        assert_eq!(c.erm(&seq(&[(0, 0), (1, 1)])), (ConceptId::Index(0), 1));
        assert_eq!(c.erm(&seq(&[(0, 1), (1, 1), (1, 0)])), (ConceptId::Index(1), 1));
    }

    #[test]
    fn wide_class_uses_general_path() {
        let c = FiniteConceptClass::powerset(7);
        assert_eq!(c.len(), 128);
        assert!(c.weak_consistent(&seq(&[(0, 1), (6, 0)])));
        assert!(!c.weak_consistent(&seq(&[(0, 1), (0, 0)])));
        assert_eq!(c.version_space(&seq(&[(0, 1), (6, 0)])).len(), 32);
    }
}
