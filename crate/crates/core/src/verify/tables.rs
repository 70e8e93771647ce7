use std::sync::Arc;

use num_bigint::BigUint;

use super::{small_classes, SuiteReport};
use crate::combinatorics::{
    binomial, future_capacity, future_capacity_exact, log_add_exp, sauer_bound, CapacityTable,
    ExactCapacityTable,
};
use crate::concepts::{BlockUnionClass, ConceptClass, FiniteConceptClass, Instance};

const LOG_TOL: f64 = 1e-9;

/// Capacity values against the binomial sum, Pascal's rule in both numeric
/// modes, and log/exact agreement, for every `T <= max_horizon`, `M <= max_budget`.
pub fn pascal(max_horizon: usize, max_budget: usize) -> SuiteReport {
    let mut r = SuiteReport::new("pascal");
    for horizon in 0..=max_horizon {
        for budget in 0..=max_budget {
            let table = CapacityTable::new(horizon, budget);
            let exact_table = ExactCapacityTable::new(horizon, budget);
            for t in 0..=horizon {
                for k in 0..=budget + 1 {
                    let exact = future_capacity_exact(horizon, t, budget, k);
                    let direct: BigUint = if k > budget {
                        BigUint::default()
                    } else {
                        (0..=budget - k).map(|j| binomial(horizon - t, j as i64)).sum()
                    };
                    r.check(*exact.as_biguint() == direct, || {
                        format!("W(T={horizon}, t={t}, M={budget}, k={k}) = {exact:?}, binomial sum {direct}")
                    });
                    r.check(exact_table.weight(t, k) == exact, || {
                        format!("exact table differs at T={horizon} t={t} M={budget} k={k}")
                    });
                    let log = future_capacity(horizon, t, budget, k);
                    let log_ok = if exact.is_zero() {
                        log.is_zero()
                    } else {
                        (log.ln() - exact.ln()).abs() <= LOG_TOL * exact.ln().abs().max(1.0)
                    };
                    r.check(log_ok, || {
                        format!("log mode ln W = {} vs exact {} at T={horizon} t={t} M={budget} k={k}", log.ln(), exact.ln())
                    });
                    let from_table = table.log_weight(t, k).ln();
                    let table_ok = if exact.is_zero() {
                        from_table == f64::NEG_INFINITY
                    } else {
                        (from_table - exact.ln()).abs() <= LOG_TOL * exact.ln().abs().max(1.0)
                    };
                    r.check(table_ok, || {
                        format!("log table gives {from_table} vs exact {} at T={horizon} t={t} M={budget} k={k}", exact.ln())
                    });
                    if t == 0 || k > budget {
                        continue;
                    }
                    let before = future_capacity_exact(horizon, t - 1, budget, k);
                    if k < budget {
                        let next = future_capacity_exact(horizon, t, budget, k + 1);
                        let sum = exact.as_biguint() + next.as_biguint();
                        r.check(*before.as_biguint() == sum, || {
                            format!("Pascal fails: W(t-1={}, k={k}) = {before:?} but W(t,k) + W(t,k+1) = {sum} (T={horizon}, M={budget})", t - 1)
                        });
                        let lhs = future_capacity(horizon, t - 1, budget, k).ln();
                        let rhs = log_add_exp(log.ln(), future_capacity(horizon, t, budget, k + 1).ln());
                        r.check((lhs - rhs).abs() <= LOG_TOL * lhs.abs().max(1.0), || {
                            format!("log Pascal: {lhs} vs {rhs} at T={horizon} t={t} M={budget} k={k}")
                        });
                    } else {
                        let one = BigUint::from(1u8);
                        r.check(*before.as_biguint() == one && *exact.as_biguint() == one, || {
                            format!("boundary W(k=M) != 1 at T={horizon} t={t} M={budget}")
                        });
                    }
                }
            }
        }
    }
    r
}

/// The Sauer bound against its definition, and the growth of every small
/// class against the bound at its VC dimension.
pub fn sauer(max_domain: usize) -> SuiteReport {
    let mut r = SuiteReport::new("sauer");
    for t in 0..=40usize {
        for d in 0..=6usize {
            let direct: BigUint = (0..=d.min(t)).map(|i| binomial(t, i as i64)).sum();
            r.check(BigUint::from(sauer_bound(t, d)) == direct, || {
                format!("sauer_bound({t}, {d}) = {} but the binomial sum is {direct}", sauer_bound(t, d))
            });
        }
    }
    for class in small_classes(max_domain, 6) {
        let n = class.domain_size();
        let vc = crate::concepts::vc_dimension(&class).expect("small class");
        for subset in 0u32..1 << n {
            let xs: Vec<Instance> = (0..n as u32)
                .filter(|i| subset >> i & 1 == 1)
                .map(Instance::point)
                .collect();
            let width = class.project(&xs).len() as u128;
            r.check(width <= sauer_bound(xs.len(), vc), || {
                format!("class {:?}: {width} patterns on {} points exceeds the bound at VC {vc}", class.rows(), xs.len())
            });
        }
    }
    r
}

fn thresholds(n: usize) -> FiniteConceptClass {
    let rows = (0..=n).map(|c| (0..n).map(|i| i >= c).collect()).collect();
    FiniteConceptClass::new(n, rows).expect("distinct thresholds")
}

/// Brute-force VC and Littlestone dimensions on classes with known values.
pub fn dims() -> SuiteReport {
    let mut r = SuiteReport::new("dims");
    let mut rows: Vec<(String, ConceptClass, (usize, usize))> = Vec::new();
    for d in 1..=3 {
        rows.push((format!("powerset({d})"), ConceptClass::Finite(FiniteConceptClass::powerset(d)), (d, d)));
    }
    for n in 2..=4 {
        rows.push((format!("singletons({n})"), ConceptClass::Finite(FiniteConceptClass::singletons(n)), (1, 1)));
    }
    for d in 1..=3usize {
        let blocks: Vec<u64> = (0..d as u64 + 2).collect();
        let fin = BlockUnionClass::new(d).finitize(&blocks, 2);
        rows.push((
            format!("block_union(d={d}) on {} blocks x 2 serials", blocks.len()),
            ConceptClass::Finite(fin.class),
            (d, d),
        ));
    }
    rows.push(("thresholds(7)".into(), ConceptClass::Finite(thresholds(7)), (1, 3)));
    for (name, class, expected) in rows {
        let class = Arc::new(class);
        let got = class.vc_dimension().and_then(|v| Ok((v, class.littlestone_dimension()?)));
        match got {
            Ok(got) => {
                r.check(got == expected, || format!("{name}: (VC, Ldim) = {got:?}, expected {expected:?}"));
                r.note(format!("{name}: VC {} Ldim {}", got.0, got.1));
            }
            Err(e) => r.fail(format!("{name}: {e}")),
        }
    }
    r
}
