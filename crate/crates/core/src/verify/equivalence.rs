use std::sync::Arc;

use super::{small_classes, SuiteReport};
use crate::concepts::{ConceptClass, FiniteConceptClass, Instance, Label};
use crate::learners::{BaseKind, BaseLearner};
use crate::oracles::OracleFront;
use crate::reductions::{Adept, AdeptConfig, BdpssEnsemble, HedgeParams, ReductionError};

#[derive(Clone, Debug)]
pub struct EquivalenceParams {
    pub max_domain: usize,
    pub max_concepts: usize,
    pub max_horizon: usize,
    pub budgets: Vec<usize>,
    pub base: BaseKind,
}

impl Default for EquivalenceParams {
    fn default() -> Self {
        EquivalenceParams {
            max_domain: 4,
            max_concepts: 6,
            max_horizon: 8,
            budgets: vec![1, 2],
            base: BaseKind::Soa,
        }
    }
}

impl EquivalenceParams {
    pub fn quick() -> Self {
        EquivalenceParams {
            max_domain: 3,
            max_concepts: 4,
            max_horizon: 5,
            ..Default::default()
        }
    }
}

/// Instance orders tried for a domain of `n` points and horizon `horizon`:
/// a cycle through the domain, and the same cycle with every point repeated.
pub fn instance_orders(n: usize, horizon: usize) -> Vec<Vec<Instance>> {
    let cycle = (0..horizon).map(|t| Instance::point((t % n) as u32)).collect();
    let stutter: Vec<Instance> = (0..horizon).map(|t| Instance::point((t / 2 % n) as u32)).collect();
    let mut out = vec![cycle];
    if out[0] != stutter {
        out.push(stutter);
    }
    out
}

struct Walk<'a> {
    report: &'a mut SuiteReport,
    oracle: OracleFront,
    xs: &'a [Instance],
    labels: Vec<Label>,
    context: String,
}

fn describe(context: &str, xs: &[Instance], labels: &[Label], what: &str) -> String {
    let ys: String = labels.iter().map(|l| l.to_string()).collect();
    let xs: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("{context}, xs [{}], labels so far {ys:?}: {what}", xs.join(" "))
}

impl Walk<'_> {
    /// Walks every label sequence depth-first so shared prefixes are played once.
    fn visit(&mut self, adept: Adept, mut ens: BdpssEnsemble) {
        let t = adept.rounds();
        if t == self.xs.len() {
            return;
        }
        let x = self.xs[t];
        let a = adept.round(x, &mut self.oracle);
        let b = ens.round(x, &mut self.oracle);
        let (tent, round) = match (a, b) {
            (Err(ReductionError::EmptyActiveSet { .. }), Err(ReductionError::EmptyActiveSet { .. })) => {
                self.report.check(true, String::new);
                return;
            }
            (Ok(tent), Ok(round)) => (tent, round),
            (a, b) => {
                let what = format!(
                    "round {}: tree gave {:?}, ensemble gave {:?}",
                    t + 1,
                    a.map(|x| x.p1()),
                    b.map(|x| x.p1)
                );
                self.report
                    .check(false, || describe(&self.context, self.xs, &self.labels, &what));
                return;
            }
        };
        let (num, den) = tent.polynomials().expect("exact mode");
        let same = *num == round.numerator && *den == round.denominator && tent.p1() == round.p1;
        let agreed = self.report.check(same, || {
            let what = format!(
                "round {}: tree p1 {} ({num:?} / {den:?}) vs ensemble p1 {} ({:?} / {:?})",
                t + 1,
                tent.p1(),
                round.p1,
                round.numerator,
                round.denominator
            );
            describe(&self.context, self.xs, &self.labels, &what)
        });
        if !agreed {
            return;
        }
        let mut adept = Some(adept);
        for y in Label::both() {
            let mut a = if y.is_one() {
                adept.take().expect("second branch")
            } else {
                adept.clone().expect("first branch")
            };
            if let Err(err) = a.observe(tent.clone(), y) {
                let what = format!("tree observe failed: {err}");
                self.report
                    .check(false, || describe(&self.context, self.xs, &self.labels, &what));
                continue;
            }
            let mut e = ens.clone();
            e.observe(x, y);
            self.labels.push(y);
            self.visit(a, e);
            self.labels.pop();
        }
    }
}

/// Exact-mode tree against the pruned explicit ensemble: identical numerator
/// and denominator polynomials in `exp(-eta)` every round, for every label
/// sequence, over all small classes.
pub fn run(params: &EquivalenceParams) -> SuiteReport {
    let mut report = SuiteReport::new("equivalence");
    let classes = small_classes(params.max_domain, params.max_concepts);
    report.note(format!(
        "{} classes (up to relabeling of points), T <= {}, M in {:?}",
        classes.len(),
        params.max_horizon,
        params.budgets
    ));
    for fin in classes {
        check_class(&mut report, fin, params);
    }
    report
}

fn check_class(report: &mut SuiteReport, fin: FiniteConceptClass, params: &EquivalenceParams) {
    let rows: Vec<String> = fin
        .rows()
        .iter()
        .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
        .collect();
    let n = fin.domain_size();
    let class = Arc::new(ConceptClass::Finite(fin));
    let learner = match BaseLearner::new(params.base, &class) {
        Ok(l) => l,
        Err(e) => return report.fail(format!("class {rows:?}: {e}")),
    };
    for horizon in 1..=params.max_horizon {
        for &budget in &params.budgets {
            let hedge = HedgeParams::fixed(horizon, budget);
            for xs in instance_orders(n, horizon) {
                let ens = match BdpssEnsemble::new(&class, params.base, hedge, true) {
                    Ok(e) => e,
                    Err(e) => return report.fail(format!("class {rows:?}: {e}")),
                };
                let adept = Adept::new(learner.clone(), AdeptConfig::new(hedge).exact());
                let mut walk = Walk {
                    report,
                    oracle: OracleFront::new(class.clone()),
                    xs: &xs,
                    labels: Vec::new(),
                    context: format!("class {rows:?}, T={horizon}, M={budget}"),
                };
                walk.visit(adept, ens);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_grid_agrees() {
        let r = run(&EquivalenceParams {
            max_domain: 2,
            max_concepts: 4,
            max_horizon: 4,
            ..Default::default()
        });
        assert!(r.passed(), "{r}");
        assert!(r.checks > 100);
    }

    #[test]
    fn orders() {
        let o = instance_orders(3, 5);
        assert_eq!(o.len(), 2);
        assert_eq!(o[1][..4], [0, 0, 1, 1].map(Instance::point));
        assert_eq!(instance_orders(1, 3).len(), 1);
    }
}
