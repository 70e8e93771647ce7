//! Lazy-rollback wrapper: an internal `K`-horizon tree updated only on a
//! uniformly random `K`-subset of the `T` rounds.

use std::cell::Cell;

use rand::seq::index;
use rand_chacha::ChaCha8Rng;

use crate::concepts::{Instance, Label};
use crate::oracles::OracleFront;
use crate::reductions::{Adept, ReductionError, Tentative};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("sample size {k} must satisfy 0 < K <= T = {horizon}")]
    InvalidSize { k: usize, horizon: usize },
    #[error("exponent c = {0} must lie in (0, 1]")]
    InvalidExponent(f64),
}

/// `floor(T^c)`, clamped to `[1, T]`.
pub fn lazy_horizon(horizon: usize, c: f64) -> Result<usize, SampleError> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(SampleError::InvalidExponent(c));
    }
    if horizon == 0 {
        return Ok(0);
    }
    let target = c * (horizon as f64).ln();
    let mut k = (horizon as f64).powf(c).floor() as usize;
    // undo floating-point undershoot at exact powers
    while ((k + 1) as f64).ln() <= target + 1e-12 {
        k += 1;
    }
    while k > 1 && (k as f64).ln() > target + 1e-12 {
        k -= 1;
    }
    Ok(k.clamp(1, horizon))
}

/// A set of rounds in `1..=T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledSet {
    horizon: usize,
    members: Vec<bool>,
}

impl SampledSet {
    pub fn from_members(horizon: usize, rounds: impl IntoIterator<Item = usize>) -> Self {
        let mut members = vec![false; horizon + 1];
        for t in rounds {
            assert!((1..=horizon).contains(&t), "round {t} outside 1..={horizon}");
            members[t] = true;
        }
        SampledSet { horizon, members }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, t: usize) -> bool {
        self.members.get(t).copied().unwrap_or(false)
    }

    /// Sorted members.
    pub fn rounds(&self) -> Vec<usize> {
        (1..=self.horizon).filter(|&t| self.members[t]).collect()
    }
}

/// Uniform `K`-subset of `1..=T`.
pub fn draw_sample(horizon: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<SampledSet, SampleError> {
    if k == 0 || k > horizon {
        return Err(SampleError::InvalidSize { k, horizon });
    }
    let picks = index::sample(rng, horizon, k);
    Ok(SampledSet::from_members(horizon, picks.into_iter().map(|i| i + 1)))
}

/// A [`SampledSet`] that records membership reads made before the round's
/// prediction was emitted.
#[derive(Debug)]
pub struct GuardedSample {
    set: SampledSet,
    predicted_through: usize,
    early_reads: Cell<u64>,
}

impl GuardedSample {
    pub fn new(set: SampledSet) -> Self {
        GuardedSample {
            set,
            predicted_through: 0,
            early_reads: Cell::new(0),
        }
    }

    pub fn mark_predicted(&mut self, t: usize) {
        self.predicted_through = self.predicted_through.max(t);
    }

    pub fn contains(&self, t: usize) -> bool {
        if t > self.predicted_through {
            self.early_reads.set(self.early_reads.get() + 1);
        }
        self.set.contains(t)
    }

    pub fn early_reads(&self) -> u64 {
        self.early_reads.get()
    }

    pub fn set(&self) -> &SampledSet {
        &self.set
    }
}

/// The lazy wrapper around a `K`-horizon [`Adept`].
#[derive(Debug)]
pub struct LazyAdept {
    inner: Adept,
    sample: GuardedSample,
    round: usize,
}

impl LazyAdept {
    /// `inner` must be configured with horizon `K = sample.len()`.
    pub fn new(inner: Adept, sample: SampledSet) -> Self {
        debug_assert_eq!(inner.config().hedge.horizon, sample.len());
        LazyAdept {
            inner,
            sample: GuardedSample::new(sample),
            round: 0,
        }
    }

    pub fn inner(&self) -> &Adept {
        &self.inner
    }

    pub fn sample(&self) -> &GuardedSample {
        &self.sample
    }

    /// Internal rounds committed so far.
    pub fn committed(&self) -> usize {
        self.inner.rounds()
    }

    /// Speculative internal round on the committed state.
    pub fn predict(&mut self, x: Instance, oracle: &mut OracleFront) -> Result<Tentative, ReductionError> {
        self.round += 1;
        self.inner.round(x, oracle)
    }

    /// Reveals membership of the current round; commits if sampled and
    /// otherwise drops the speculative state.
    pub fn observe(&mut self, tentative: Tentative, y: Label) -> Result<bool, ReductionError> {
        self.sample.mark_predicted(self.round);
        if self.sample.contains(self.round) {
            self.inner.observe(tentative, y)?;
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;

    #[test]
    fn horizon_exponent() {
        assert_eq!(lazy_horizon(4096, 0.5), Ok(64));
        assert_eq!(lazy_horizon(1024, 0.5), Ok(32));
        assert_eq!(lazy_horizon(1000, 1.0 / 3.0), Ok(10));
        assert_eq!(lazy_horizon(10, 1.0), Ok(10));
        assert_eq!(lazy_horizon(2, 0.1), Ok(1));
        assert!(lazy_horizon(10, 0.0).is_err());
    }

    #[test]
    fn draw_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let all = draw_sample(6, 6, &mut rng).unwrap();
        assert_eq!(all.rounds(), vec![1, 2, 3, 4, 5, 6]);
        let one = draw_sample(6, 1, &mut rng).unwrap();
        assert_eq!(one.len(), 1);
        assert!(draw_sample(3, 4, &mut rng).is_err());
        assert!(draw_sample(3, 0, &mut rng).is_err());
    }

    #[test]
    fn draws_are_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 100_000;
        let mut hits = [0u64; 11];
        for _ in 0..draws {
            for t in draw_sample(10, 3, &mut rng).unwrap().rounds() {
                hits[t] += 1;
            }
        }
        let se = (0.3f64 * 0.7 / draws as f64).sqrt();
        for &h in &hits[1..] {
            let rate = h as f64 / draws as f64;
            assert!((rate - 0.3).abs() <= 3.0 * se, "rate {rate}");
        }
    }

    #[test]
    fn guard_counts_early_reads() {
        let mut g = GuardedSample::new(SampledSet::from_members(4, [2]));
        assert!(!g.contains(1));
        assert_eq!(g.early_reads(), 1);
        g.mark_predicted(2);
        assert!(g.contains(2));
        assert_eq!(g.early_reads(), 1);
    }
}
