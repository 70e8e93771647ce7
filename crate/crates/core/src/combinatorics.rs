//! Binomial arithmetic for future-capacity weights and Sauer bounds.
//!
//! Two backends are provided. [`LogWeight`] keeps weights as natural logs so
//! that sums of binomials with horizons in the hundreds of thousands stay
//! representable; [`ExactWeight`] keeps them as arbitrary-precision integers
//! for brute-force comparisons at small horizons.

use std::cmp::Ordering;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

/// A nonnegative weight stored as its natural logarithm.
///
/// Weight zero is encoded as negative infinity. NaN is never stored.
#[derive(Clone, Copy, PartialEq)]
pub struct LogWeight(f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    /// Wraps a log value. Panics on NaN or `+inf`.
    pub fn from_ln(ln: f64) -> Self {
        assert!(
            !ln.is_nan() && ln != f64::INFINITY,
            "log weight must be finite or -inf, got {ln}"
        );
        LogWeight(ln)
    }

    pub fn from_value(value: f64) -> Self {
        assert!(value >= 0.0, "weights are nonnegative, got {value}");
        Self::from_ln(value.ln())
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Multiplies by `exp(exponent)`.
    #[inline]
    pub fn scale_exp(self, exponent: f64) -> LogWeight {
        if self.is_zero() {
            self
        } else {
            LogWeight::from_ln(self.0 + exponent)
        }
    }
}

impl PartialOrd for LogWeight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl fmt::Debug for LogWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogWeight(ln={})", self.0)
    }
}

impl std::iter::Sum for LogWeight {
    fn sum<I: Iterator<Item = LogWeight>>(iter: I) -> LogWeight {
        LogWeight(log_sum_exp(iter.map(LogWeight::ln)))
    }
}

/// Sum of two weights, computed stably.
impl std::ops::Add for LogWeight {
    type Output = LogWeight;

    #[inline]
    fn add(self, other: LogWeight) -> LogWeight {
        LogWeight(log_add_exp(self.0, other.0))
    }
}

impl std::ops::Mul for LogWeight {
    type Output = LogWeight;

    #[inline]
    fn mul(self, other: LogWeight) -> LogWeight {
        if self.is_zero() || other.is_zero() {
            LogWeight::ZERO
        } else {
            LogWeight(self.0 + other.0)
        }
    }
}

#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Streaming log-sum-exp. Empty input (or all `-inf`) yields `-inf`.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut max = f64::NEG_INFINITY;
    let mut scaled = 0.0f64;
    for v in values {
        if v == f64::NEG_INFINITY {
            continue;
        }
        if v > max {
            scaled = scaled * (max - v).exp() + 1.0;
            max = v;
        } else {
            scaled += (v - max).exp();
        }
    }
    if max == f64::NEG_INFINITY {
        max
    } else {
        max + scaled.ln()
    }
}

/// A nonnegative integer weight with exact arithmetic.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct ExactWeight(BigUint);

impl ExactWeight {
    pub fn zero() -> Self {
        ExactWeight(BigUint::zero())
    }

    pub fn one() -> Self {
        ExactWeight(BigUint::one())
    }

    pub fn from_u64(v: u64) -> Self {
        ExactWeight(BigUint::from(v))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }

    pub fn into_biguint(self) -> BigUint {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    /// Natural log, for comparing against the log backend.
    pub fn ln(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.0.bits();
        if bits < 1000 {
            return self.to_f64().ln();
        }
        let shift = bits - 64;
        let top = (&self.0 >> shift).to_f64().unwrap_or(f64::INFINITY);
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

impl From<BigUint> for ExactWeight {
    fn from(v: BigUint) -> Self {
        ExactWeight(v)
    }
}

impl std::ops::Add for &ExactWeight {
    type Output = ExactWeight;
    fn add(self, rhs: &ExactWeight) -> ExactWeight {
        ExactWeight(&self.0 + &rhs.0)
    }
}

impl std::iter::Sum for ExactWeight {
    fn sum<I: Iterator<Item = ExactWeight>>(iter: I) -> ExactWeight {
        ExactWeight(iter.map(|w| w.0).sum())
    }
}

/// Table of `ln n!` built with compensated summation.
#[derive(Debug)]
pub struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn new(max_n: usize) -> Self {
        let mut table = Vec::with_capacity(max_n + 1);
        table.push(0.0);
        let mut sum = 0.0f64;
        let mut compensation = 0.0f64;
        for i in 1..=max_n {
            let y = (i as f64).ln() - compensation;
            let t = sum + y;
            compensation = (t - sum) - y;
            sum = t;
            table.push(sum);
        }
        LogFactorials { table }
    }

    pub fn max_n(&self) -> usize {
        self.table.len() - 1
    }

    #[inline]
    pub fn ln_factorial(&self, n: usize) -> f64 {
        self.table[n]
    }

    pub fn ln_binomial(&self, n: usize, k: i64) -> f64 {
        if k < 0 || k as usize > n {
            return f64::NEG_INFINITY;
        }
        let k = k as usize;
        if k == 0 || k == n {
            return 0.0;
        }
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

fn shared_factorials() -> &'static Mutex<Arc<LogFactorials>> {
    static TABLE: OnceLock<Mutex<Arc<LogFactorials>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(Arc::new(LogFactorials::new(1024))))
}

/// Process-wide log-factorial table covering at least `n`.
///
/// The table only ever grows; callers keep the returned `Arc` for the
/// lifetime of a game.
pub fn log_factorials(n: usize) -> Arc<LogFactorials> {
    let mut guard = shared_factorials().lock().unwrap_or_else(|e| e.into_inner());
    if guard.max_n() < n {
        let target = n.max(guard.max_n() * 2);
        *guard = Arc::new(LogFactorials::new(target));
    }
    Arc::clone(&guard)
}

/// `ln C(n, k)`; `-inf` when `k < 0` or `k > n`.
pub fn log_binomial(n: usize, k: i64) -> LogWeight {
    LogWeight::from_ln(log_factorials(n).ln_binomial(n, k))
}

/// Exact `C(n, k)`; zero outside `0 <= k <= n`.
pub fn binomial(n: usize, k: i64) -> BigUint {
    if k < 0 || k as usize > n {
        return BigUint::zero();
    }
    let k = (k as usize).min(n - k as usize);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

/// Log of `sum_{j=0}^{M-k} C(T-t, j)`, the number of mistake schedules that
/// extend a prefix of length `t` with `k` mistakes already used.
///
/// Rounds past the horizon are treated as having no remaining future.
pub fn future_capacity(horizon: usize, t: usize, budget: usize, k: usize) -> LogWeight {
    if k > budget {
        return LogWeight::ZERO;
    }
    let remaining = horizon.saturating_sub(t);
    let slack = budget - k;
    if slack == 0 || remaining == 0 {
        return LogWeight::ONE;
    }
    let table = log_factorials(remaining);
    let top = slack.min(remaining);
    LogWeight::from_ln(log_sum_exp(
        (0..=top).map(|j| table.ln_binomial(remaining, j as i64)),
    ))
}

/// Exact counterpart of [`future_capacity`].
pub fn future_capacity_exact(horizon: usize, t: usize, budget: usize, k: usize) -> ExactWeight {
    if k > budget {
        return ExactWeight::zero();
    }
    let remaining = horizon.saturating_sub(t);
    let slack = (budget - k).min(remaining);
    let mut term = BigUint::one();
    let mut total = BigUint::one();
    for j in 0..slack {
        term *= remaining - j;
        term /= j + 1;
        total += &term;
    }
    ExactWeight(total)
}

/// Sauer bound `Phi_d(t) = sum_{i=0}^{d} C(t, i)`, saturating at `u128::MAX`.
pub fn sauer_bound(t: usize, d: usize) -> u128 {
    if t <= d {
        return if t >= 128 { u128::MAX } else { 1u128 << t };
    }
    let mut term: u128 = 1;
    let mut total: u128 = 1;
    for i in 0..d {
        // C(t, i+1) = C(t, i) * (t - i) / (i + 1); exact because the product
        // is divisible before truncation.
        term = match term.checked_mul((t - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
        total = match total.checked_add(term) {
            Some(v) => v,
            None => return u128::MAX,
        };
    }
    total
}

/// Number of experts in the explicit ensemble: `sum_{j<=M} C(T, j)`.
pub fn expert_count(horizon: usize, budget: usize) -> BigUint {
    future_capacity_exact(horizon, 0, budget, 0).into_biguint()
}

/// Precomputed `future_capacity(T, t, M, k)` for one game.
#[derive(Clone, Debug)]
pub struct CapacityTable {
    horizon: usize,
    budget: usize,
    // row = remaining rounds (T - t), column = slack (M - k)
    log: Vec<f64>,
}

impl CapacityTable {
    pub fn new(horizon: usize, budget: usize) -> Self {
        let factorials = log_factorials(horizon.max(1));
        let width = budget + 1;
        let mut log = Vec::with_capacity((horizon + 1) * width);
        for remaining in 0..=horizon {
            let mut acc = f64::NEG_INFINITY;
            for j in 0..=budget {
                acc = log_add_exp(acc, factorials.ln_binomial(remaining, j as i64));
                log.push(acc);
            }
        }
        CapacityTable {
            horizon,
            budget,
            log,
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Same contract as [`future_capacity`] for this table's `T` and `M`.
    #[inline]
    pub fn log_weight(&self, t: usize, k: usize) -> LogWeight {
        if k > self.budget {
            return LogWeight::ZERO;
        }
        let remaining = self.horizon.saturating_sub(t);
        LogWeight(self.log[remaining * (self.budget + 1) + (self.budget - k)])
    }
}

/// Exact counterpart of [`CapacityTable`].
#[derive(Clone, Debug)]
pub struct ExactCapacityTable {
    horizon: usize,
    budget: usize,
    weights: Vec<ExactWeight>,
}

impl ExactCapacityTable {
    pub fn new(horizon: usize, budget: usize) -> Self {
        let mut weights = Vec::with_capacity((horizon + 1) * (budget + 1));
        for remaining in 0..=horizon {
            let mut acc = BigUint::zero();
            for j in 0..=budget {
                acc += binomial(remaining, j as i64);
                weights.push(ExactWeight(acc.clone()));
            }
        }
        ExactCapacityTable {
            horizon,
            budget,
            weights,
        }
    }

    pub fn weight(&self, t: usize, k: usize) -> ExactWeight {
        if k > self.budget {
            return ExactWeight::zero();
        }
        let remaining = self.horizon.saturating_sub(t);
        self.weights[remaining * (self.budget + 1) + (self.budget - k)].clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u64) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn log_binomial_matches_factorials() {
        let direct = factorial(5) / (factorial(2) * factorial(3));
        assert_eq!(direct, 10.0);
        assert!((log_binomial(5, 2).ln() - direct.ln()).abs() < 1e-12);
        assert!((log_binomial(5, 2).ln() - std::f64::consts::LN_10).abs() < 1e-12);
        assert_eq!(log_binomial(7, 0).ln(), 0.0);
        assert!(log_binomial(3, 4).is_zero());
        assert!(log_binomial(3, -1).is_zero());
    }

    #[test]
    fn future_capacity_examples() {
        // C(2,0) + C(2,1)
        assert_eq!(future_capacity_exact(5, 3, 1, 0), ExactWeight::from_u64(3));
        assert!((future_capacity(5, 3, 1, 0).value() - 3.0).abs() < 1e-12);
        assert_eq!(future_capacity_exact(5, 3, 1, 1), ExactWeight::one());
        assert_eq!(future_capacity(5, 3, 1, 1), LogWeight::ONE);
        assert!(future_capacity_exact(5, 3, 1, 2).is_zero());
        assert!(future_capacity(5, 3, 1, 2).is_zero());
        // end of horizon
        assert_eq!(future_capacity_exact(9, 9, 4, 2), ExactWeight::one());
    }

    #[test]
    fn tables_agree_with_free_functions() {
        let log = CapacityTable::new(40, 4);
        let exact = ExactCapacityTable::new(40, 4);
        for t in 0..=40 {
            for k in 0..=5 {
                assert_eq!(exact.weight(t, k), future_capacity_exact(40, t, 4, k));
                let a = log.log_weight(t, k);
                let b = future_capacity(40, t, 4, k);
                if a.is_zero() {
                    assert!(b.is_zero());
                } else {
                    assert!((a.ln() - b.ln()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sauer_examples() {
        assert_eq!(sauer_bound(100, 1), 101);
        assert_eq!(sauer_bound(3, 0), 1);
        assert_eq!(sauer_bound(2, 5), 4);
        assert_eq!(sauer_bound(10, 2), 1 + 10 + 45);
        assert_eq!(sauer_bound(200, 200), u128::MAX);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = log_sum_exp([1234.0, 1232.0]);
        assert!((v - 1_234.126_928_011_043).abs() < 1e-9);
        assert_eq!(log_sum_exp(std::iter::empty()), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY, 2.0]), 2.0);
    }

    #[test]
    fn large_horizon_stays_finite() {
        let w = future_capacity(100_000, 0, 30, 0);
        assert!(w.ln().is_finite());
        let exact = future_capacity_exact(100_000, 0, 30, 0);
        assert!((exact.ln() - w.ln()).abs() / w.ln() < 1e-12);
    }

    #[test]
    fn expert_count_small() {
        assert_eq!(expert_count(2, 2), BigUint::from(4u32));
        assert_eq!(expert_count(512, 2), BigUint::from(1u32 + 512 + 130_816));
    }
}
