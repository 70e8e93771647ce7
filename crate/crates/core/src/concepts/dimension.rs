//! Exhaustive VC and Littlestone dimension computations for small classes.

use std::collections::{HashMap, HashSet};

use super::{ClassError, FiniteConceptClass};

/// Largest class the Littlestone recursion accepts (one `u64` mask).
pub const MAX_BRUTE_FORCE_CONCEPTS: usize = 64;

const MAX_VC_DOMAIN: usize = 24;

fn shatters(class: &FiniteConceptClass, subset: &[usize]) -> bool {
    let mut patterns = HashSet::with_capacity(1 << subset.len());
    for row in class.rows() {
        let mut code = 0u32;
        for (bit, &p) in subset.iter().enumerate() {
            if row[p] {
                code |= 1 << bit;
            }
        }
        patterns.insert(code);
    }
    patterns.len() == 1 << subset.len()
}

fn any_shattered(class: &FiniteConceptClass, m: usize) -> bool {
    fn walk(class: &FiniteConceptClass, m: usize, start: usize, buf: &mut Vec<usize>) -> bool {
        if buf.len() == m {
            return shatters(class, buf);
        }
        let n = class.domain_size();
        for p in start..=n - (m - buf.len()) {
            buf.push(p);
            if walk(class, m, p + 1, buf) {
                return true;
            }
            buf.pop();
        }
        false
    }
    walk(class, m, 0, &mut Vec::with_capacity(m))
}

/// Size of the largest shattered subset of the domain.
pub fn vc_dimension(class: &FiniteConceptClass) -> Result<usize, ClassError> {
    if class.domain_size() > MAX_VC_DOMAIN {
        return Err(ClassError::TooLarge {
            what: "domain",
            size: class.domain_size(),
            limit: MAX_VC_DOMAIN,
        });
    }
    // shattering m points needs 2^m distinct concepts
    let cap = usize::BITS as usize - 1 - class.len().leading_zeros() as usize;
    let mut best = 0;
    for m in 1..=cap.min(class.domain_size()) {
        if any_shattered(class, m) {
            best = m;
        } else {
            break;
        }
    }
    Ok(best)
}

/// Memoized Littlestone recursion over version-space masks.
#[derive(Clone, Debug)]
pub struct LittlestoneMemo {
    columns: Vec<[u64; 2]>,
    memo: HashMap<u64, usize>,
    full: u64,
}

impl LittlestoneMemo {
    pub fn new(class: &FiniteConceptClass) -> Result<Self, ClassError> {
        if class.len() > MAX_BRUTE_FORCE_CONCEPTS {
            return Err(ClassError::TooLarge {
                what: "concept class",
                size: class.len(),
                limit: MAX_BRUTE_FORCE_CONCEPTS,
            });
        }
        let mut columns = Vec::with_capacity(class.domain_size());
        for p in 0..class.domain_size() {
            let mut col = [0u64; 2];
            for (c, row) in class.rows().iter().enumerate() {
                col[row[p] as usize] |= 1 << c;
            }
            columns.push(col);
        }
        let full = if class.len() == 64 {
            u64::MAX
        } else {
            (1u64 << class.len()) - 1
        };
        Ok(LittlestoneMemo {
            columns,
            memo: HashMap::new(),
            full,
        })
    }

    pub fn full_mask(&self) -> u64 {
        self.full
    }

    /// Restriction of `mask` to concepts labeling point `p` with `bit`.
    pub fn restrict(&self, mask: u64, p: usize, bit: u8) -> u64 {
        mask & self.columns[p][bit as usize]
    }

    /// Littlestone dimension of the sub-class `mask`; an empty class counts as 0.
    pub fn ldim(&mut self, mask: u64) -> usize {
        if mask.count_ones() <= 1 {
            return 0;
        }
        if let Some(&v) = self.memo.get(&mask) {
            return v;
        }
        let ceiling = mask.count_ones().ilog2() as usize;
        let mut best = 0;
        for p in 0..self.columns.len() {
            let zero = mask & self.columns[p][0];
            let one = mask & self.columns[p][1];
            if zero == 0 || one == 0 {
                continue;
            }
            let sub = 1 + self.ldim(zero).min(self.ldim(one));
            if sub > best {
                best = sub;
                if best >= ceiling {
                    break;
                }
            }
        }
        self.memo.insert(mask, best);
        best
    }
}

/// Depth of the deepest mistake tree the class shatters.
pub fn littlestone_dimension(class: &FiniteConceptClass) -> Result<usize, ClassError> {
    let mut memo = LittlestoneMemo::new(class)?;
    let full = memo.full_mask();
    Ok(memo.ldim(full))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let p3 = FiniteConceptClass::powerset(3);
        assert_eq!(vc_dimension(&p3), Ok(3));
        let s3 = FiniteConceptClass::singletons(3);
        assert_eq!(vc_dimension(&s3), Ok(1));
        assert_eq!(littlestone_dimension(&s3), Ok(1));
        let zero = FiniteConceptClass::from_bit_strings(&["000"]).unwrap();
        assert_eq!(vc_dimension(&zero), Ok(0));
        assert_eq!(littlestone_dimension(&zero), Ok(0));
        assert_eq!(littlestone_dimension(&FiniteConceptClass::powerset(2)), Ok(2));
    }

    #[test]
    fn thresholds_separate_the_dimensions() {
        // thresholds on 7 points: VC 1, Littlestone floor(log2 8) = 3
        let rows: Vec<String> = (0..=7)
            .map(|k| (0..7).map(|i| if i < k { '1' } else { '0' }).collect())
            .collect();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        let c = FiniteConceptClass::from_bit_strings(&refs).unwrap();
        assert_eq!(vc_dimension(&c), Ok(1));
        assert_eq!(littlestone_dimension(&c), Ok(3));
    }

    #[test]
    fn oversized_class_is_rejected() {
        let c = FiniteConceptClass::powerset(7);
        assert!(matches!(
            littlestone_dimension(&c),
            Err(ClassError::TooLarge { size: 128, .. })
        ));
    }
}
