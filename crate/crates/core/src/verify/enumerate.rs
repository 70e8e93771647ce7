use crate::concepts::FiniteConceptClass;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..n {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

fn permute(mask: u32, perm: &[usize]) -> u32 {
    perm.iter()
        .enumerate()
        .filter(|&(i, _)| mask >> i & 1 == 1)
        .fold(0, |acc, (_, &j)| acc | 1 << j)
}

/// Every class of at most `max_concepts` distinct concepts over exactly `n`
/// points for `n = 1..=max_domain`, one representative per relabeling of the
/// domain points.
pub fn small_classes(max_domain: usize, max_concepts: usize) -> Vec<FiniteConceptClass> {
    let mut out = Vec::new();
    for n in 1..=max_domain {
        let perms = permutations(n);
        let rows = 1u32 << n;
        let mut chosen = Vec::new();
        let mut emit = |set: &[u32]| {
            let canonical = perms.iter().all(|p| {
                let mut image: Vec<u32> = set.iter().map(|&m| permute(m, p)).collect();
                image.sort_unstable();
                image.as_slice() >= set
            });
            if canonical {
                let rows = set
                    .iter()
                    .map(|&m| (0..n).map(|i| m >> i & 1 == 1).collect())
                    .collect();
                out.push(FiniteConceptClass::new(n, rows).expect("distinct nonempty rows"));
            }
        };
        subsets(rows, max_concepts, 0, &mut chosen, &mut emit);
    }
    out
}

fn subsets(universe: u32, max: usize, start: u32, chosen: &mut Vec<u32>, emit: &mut impl FnMut(&[u32])) {
    for m in start..universe {
        chosen.push(m);
        emit(chosen);
        if chosen.len() < max {
            subsets(universe, max, m + 1, chosen, emit);
        }
        chosen.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_up_to_relabeling() {
        // One point: {0}, {1}, {0,1}.
        assert_eq!(small_classes(1, 6).len(), 3);
        // Two points, brute-forced by hand: 3 singletons, 4 pairs, 3 triples, 1 full.
        let two: Vec<_> = small_classes(2, 6).into_iter().filter(|c| c.domain_size() == 2).collect();
        assert_eq!(two.len(), 11);
        assert_eq!(permutations(4).len(), 24);
    }
}
