use std::cell::RefCell;

use serde::Serialize;

use super::{
    ratio_from_polynomials, HedgeParams, NumericMode, PrefixArena, ReductionError, WeightPolynomial,
};
use crate::combinatorics::{log_sum_exp, CapacityTable, ExactCapacityTable};
use crate::concepts::{Dichotomy, Instance, Label, LabeledData};
use crate::learners::{BaseLearner, LearnerState};
use crate::oracles::{OracleFront, QuerySource};

#[derive(Clone, Debug)]
pub struct AdeptConfig {
    pub hedge: HedgeParams,
    pub numeric: NumericMode,
    pub track_potentials: bool,
    /// Tolerate learner states emptied by prefixes the oracle failed to
    /// reject (only possible when answers are defaulted under a budget).
    pub allow_sink: bool,
}

impl AdeptConfig {
    pub fn new(hedge: HedgeParams) -> Self {
        AdeptConfig {
            hedge,
            numeric: NumericMode::Log,
            track_potentials: false,
            allow_sink: false,
        }
    }

    pub fn exact(mut self) -> Self {
        self.numeric = NumericMode::Exact;
        self
    }

    pub fn with_potentials(mut self) -> Self {
        self.track_potentials = true;
        self
    }
}

/// One surviving pseudo-label prefix.
#[derive(Clone, Debug)]
pub struct ActiveNode {
    pub prefix: u32,
    /// Disagreements between the prefix and the base learner.
    pub k: u32,
    /// Cumulative 0-1 loss of the prefix against the true labels.
    pub loss: u64,
    pub state: LearnerState,
}

#[derive(Clone, Copy, Debug)]
struct Child {
    parent: u32,
    bit: Label,
    k: u32,
}

/// Per-round potentials, as natural logs, evaluated at that round's rate.
#[derive(Clone, Debug, Serialize)]
pub struct PotentialRecord {
    pub round: usize,
    pub eta: f64,
    pub expected_loss: f64,
    /// Normalizer before the round.
    pub ln_z_prev: f64,
    /// Normalizer after pruning, before the label is seen.
    pub ln_z_pre: f64,
    /// Normalizer after the label is seen.
    pub ln_z_post: f64,
    #[serde(skip)]
    pub exact: Option<[WeightPolynomial; 3]>,
}

impl PotentialRecord {
    /// Checks `Z'_t <= Z_{t-1}` and `Z_t <= Z'_t exp(-eta l_t + eta^2 / 8)`.
    ///
    /// The first inequality is checked coefficient-wise when exact
    /// polynomials are present; the second always numerically.
    pub fn check(&self, rel_tol: f64) -> Result<(), String> {
        let slack = rel_tol.ln_1p();
        match &self.exact {
            Some([prev, pre, _]) => {
                if !pre.dominated_by(prev) {
                    return Err(format!("round {}: Z' exceeds Z_prev coefficient-wise", self.round));
                }
            }
            None => {
                if self.ln_z_pre > self.ln_z_prev + slack {
                    return Err(format!(
                        "round {}: ln Z' = {} > ln Z_prev = {}",
                        self.round, self.ln_z_pre, self.ln_z_prev
                    ));
                }
            }
        }
        let bound = self.ln_z_pre - self.eta * self.expected_loss + self.eta * self.eta / 8.0;
        if self.ln_z_post > bound + slack {
            return Err(format!(
                "round {}: ln Z = {} exceeds Hoeffding bound {}",
                self.round, self.ln_z_post, bound
            ));
        }
        Ok(())
    }
}

/// Predictions and candidate extensions for one round, before the label.
///
/// Dropping a `Tentative` leaves the reduction untouched.
#[derive(Clone, Debug)]
pub struct Tentative {
    round: usize,
    x: Instance,
    children: Vec<Child>,
    p1: f64,
    eta: f64,
    polys: Option<(WeightPolynomial, WeightPolynomial)>,
    ln_z_prev: f64,
    ln_z_pre: f64,
    z_prev_poly: Option<WeightPolynomial>,
}

impl Tentative {
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    /// Hedge masses of the label-1 extensions and of all extensions.
    pub fn polynomials(&self) -> Option<(&WeightPolynomial, &WeightPolynomial)> {
        self.polys.as_ref().map(|(n, d)| (n, d))
    }
}

#[derive(Clone, Debug, Default)]
struct DecayCache {
    eta: f64,
    table: Vec<f64>,
}

impl DecayCache {
    fn get(&mut self, eta: f64, j: u64) -> f64 {
        if eta != self.eta {
            self.eta = eta;
            self.table.clear();
        }
        let j = j as usize;
        while self.table.len() <= j {
            let next = (-eta * self.table.len() as f64).exp();
            self.table.push(next);
        }
        self.table[j]
    }
}

/// The pruned expert tree over realizable pseudo-label prefixes.
#[derive(Clone, Debug)]
pub struct Adept {
    learner: BaseLearner,
    cfg: AdeptConfig,
    cap: CapacityTable,
    exact_cap: Option<ExactCapacityTable>,
    arena: PrefixArena,
    history: Vec<Instance>,
    active: Vec<ActiveNode>,
    potentials: Vec<PotentialRecord>,
    decay: RefCell<DecayCache>,
}

impl Adept {
    pub fn new(learner: BaseLearner, cfg: AdeptConfig) -> Self {
        let HedgeParams { horizon, budget, .. } = cfg.hedge;
        let exact_cap = (cfg.numeric == NumericMode::Exact)
            .then(|| ExactCapacityTable::new(horizon, budget));
        let root = ActiveNode {
            prefix: PrefixArena::ROOT,
            k: 0,
            loss: 0,
            state: learner.initial_state(),
        };
        Adept {
            learner,
            cap: CapacityTable::new(horizon, budget),
            exact_cap,
            cfg,
            arena: PrefixArena::new(),
            history: Vec::new(),
            active: vec![root],
            potentials: Vec::new(),
            decay: RefCell::default(),
        }
    }

    pub fn config(&self) -> &AdeptConfig {
        &self.cfg
    }

    pub fn learner(&self) -> &BaseLearner {
        &self.learner
    }

    /// Number of committed rounds.
    pub fn rounds(&self) -> usize {
        self.history.len()
    }

    pub fn history(&self) -> &[Instance] {
        &self.history
    }

    pub fn arena(&self) -> &PrefixArena {
        &self.arena
    }

    pub fn active(&self) -> &[ActiveNode] {
        &self.active
    }

    pub fn potentials(&self) -> &[PotentialRecord] {
        &self.potentials
    }

    /// Active prefixes as label vectors, in active-set order.
    pub fn active_dichotomies(&self) -> Vec<Dichotomy> {
        self.active
            .iter()
            .map(|n| self.arena.dichotomy(n.prefix))
            .collect()
    }

    /// Smallest cumulative loss among active prefixes.
    pub fn best_loss(&self) -> u64 {
        self.active.iter().map(|n| n.loss).min().unwrap_or(0)
    }

    /// `ln W_t` of an active node at the current round.
    pub fn node_log_capacity(&self, node: &ActiveNode) -> f64 {
        self.cap.log_weight(self.rounds(), node.k as usize).ln()
    }

    fn exact_mass(&self, t: usize, k: u32) -> num_bigint::BigUint {
        self.exact_cap
            .as_ref()
            .expect("exact mode")
            .weight(t, k as usize)
            .into_biguint()
    }

    /// Runs the prediction half of a round on `x`: base-learner step,
    /// realizability pruning of both extensions of every prefix, and the
    /// Hedge marginal for label 1.
    pub fn round(&self, x: Instance, oracle: &mut OracleFront) -> Result<Tentative, ReductionError> {
        let t = self.rounds() + 1;
        let budget = self.cfg.hedge.budget as u32;
        let eta = self.cfg.hedge.eta(self.best_loss());
        let mut children = Vec::with_capacity(self.active.len() * 2);
        for (i, node) in self.active.iter().enumerate() {
            if node.state.is_sink() && !self.cfg.allow_sink {
                return Err(ReductionError::SinkReached { round: t });
            }
            let view = self.arena.view(&self.history, node.prefix);
            let p = self.learner.predict(&node.state, &view, x, oracle)?;
            for bit in Label::both() {
                let ext = view.with_pair(x, bit);
                if !oracle.weak_consistency(&ext, QuerySource::Pruning).is_realizable() {
                    continue;
                }
                let k = node.k + u32::from(bit != p);
                if k <= budget {
                    children.push(Child {
                        parent: i as u32,
                        bit,
                        k,
                    });
                }
            }
        }
        if children.is_empty() {
            return Err(ReductionError::EmptyActiveSet { round: t });
        }

        let exact = self.cfg.numeric == NumericMode::Exact;
        let (p1, polys, ln_z_pre) = if exact {
            let mut num = WeightPolynomial::new();
            let mut den = WeightPolynomial::new();
            for c in &children {
                let w = self.exact_mass(t, c.k);
                let l = self.active[c.parent as usize].loss as usize;
                if c.bit.is_one() {
                    num.add_term(l, &w);
                }
                den.add_term(l, &w);
            }
            let p1 = ratio_from_polynomials(&num, &den, eta);
            let ln_den = den.ln_eval(eta);
            (p1, Some((num, den)), ln_den)
        } else {
            let (ln_num, ln_den) = self.log_masses(t, &children, eta);
            let p1 = if ln_num == f64::NEG_INFINITY {
                0.0
            } else {
                (ln_num - ln_den).exp().min(1.0)
            };
            (p1, None, ln_den)
        };

        let (ln_z_prev, z_prev_poly) = if self.cfg.track_potentials {
            let ln = log_sum_exp(self.active.iter().map(|n| {
                self.cap.log_weight(t - 1, n.k as usize).ln() - eta * n.loss as f64
            }));
            let poly = exact.then(|| {
                let mut p = WeightPolynomial::new();
                for n in &self.active {
                    p.add_term(n.loss as usize, &self.exact_mass(t - 1, n.k));
                }
                p
            });
            let ln = poly.as_ref().map_or(ln, |p| p.ln_eval(eta));
            (ln, poly)
        } else {
            (f64::NAN, None)
        };

        Ok(Tentative {
            round: t,
            x,
            children,
            p1,
            eta,
            polys,
            ln_z_prev,
            ln_z_pre,
            z_prev_poly,
        })
    }

    /// `ln` of the label-1 and total Hedge masses, shifting each mistake
    /// count by its own smallest loss so no bucket underflows.
    fn log_masses(&self, t: usize, children: &[Child], eta: f64) -> (f64, f64) {
        let width = self.cfg.hedge.budget + 1;
        let mut lmin = vec![u64::MAX; width];
        for c in children {
            let l = self.active[c.parent as usize].loss;
            let slot = &mut lmin[c.k as usize];
            *slot = (*slot).min(l);
        }
        let mut sums = vec![[0.0f64; 2]; width];
        let mut decay = self.decay.borrow_mut();
        for c in children {
            let k = c.k as usize;
            let l = self.active[c.parent as usize].loss;
            sums[k][c.bit.bit() as usize] += decay.get(eta, l - lmin[k]);
        }
        let terms = |pick: fn(&[f64; 2]) -> f64| {
            log_sum_exp((0..width).filter(|&k| lmin[k] != u64::MAX).map(|k| {
                let s = pick(&sums[k]);
                if s > 0.0 {
                    self.cap.log_weight(t, k).ln() - eta * lmin[k] as f64 + s.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }))
        };
        (terms(|s| s[1]), terms(|s| s[0] + s[1]))
    }

    /// Commits a round: updates losses, advances learner states and
    /// replaces the active set with the surviving extensions.
    pub fn observe(&mut self, tentative: Tentative, y: Label) -> Result<(), ReductionError> {
        assert_eq!(tentative.round, self.rounds() + 1, "stale tentative round");
        let t = tentative.round;
        let x = tentative.x;
        let mut next = Vec::with_capacity(tentative.children.len());
        for c in &tentative.children {
            let parent = &self.active[c.parent as usize];
            let state = self.learner.advance(&parent.state, x, c.bit);
            if state.is_sink() && !self.cfg.allow_sink {
                return Err(ReductionError::SinkReached { round: t });
            }
            next.push(ActiveNode {
                prefix: self.arena.push(parent.prefix, c.bit),
                k: c.k,
                loss: parent.loss + u64::from(c.bit != y),
                state,
            });
        }
        self.active = next;
        self.history.push(x);

        if self.cfg.track_potentials {
            let eta = tentative.eta;
            let expected_loss = if y.is_one() { 1.0 - tentative.p1 } else { tentative.p1 };
            let exact = tentative.polys.map(|(_, pre)| {
                let mut post = WeightPolynomial::new();
                for n in &self.active {
                    post.add_term(n.loss as usize, &self.exact_mass(t, n.k));
                }
                let prev = tentative.z_prev_poly.expect("tracked with polynomials");
                [prev, pre, post]
            });
            let ln_z_post = match &exact {
                Some([_, _, post]) => post.ln_eval(eta),
                None => log_sum_exp(self.active.iter().map(|n| {
                    self.cap.log_weight(t, n.k as usize).ln() - eta * n.loss as f64
                })),
            };
            self.potentials.push(PotentialRecord {
                round: t,
                eta,
                expected_loss,
                ln_z_prev: tentative.ln_z_prev,
                ln_z_pre: tentative.ln_z_pre,
                ln_z_post,
                exact,
            });
        }
        Ok(())
    }

    /// Initial normalizer `Z_0`, as a log.
    pub fn ln_z0(&self) -> f64 {
        self.cap.log_weight(0, 0).ln()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::concepts::{ConceptClass, FiniteConceptClass};
    use crate::learners::BaseKind;

    fn setup(rows: &[&str], horizon: usize, budget: usize, exact: bool) -> (Adept, OracleFront) {
        let class = Arc::new(ConceptClass::Finite(
            FiniteConceptClass::from_bit_strings(rows).unwrap(),
        ));
        let learner = BaseLearner::new(BaseKind::Soa, &class).unwrap();
        let mut cfg = AdeptConfig::new(HedgeParams::fixed(horizon, budget)).with_potentials();
        if exact {
            cfg = cfg.exact();
        }
        (Adept::new(learner, cfg), OracleFront::new(class))
    }

    #[test]
    fn singleton_class_is_deterministic() {
        let (mut a, mut o) = setup(&["10"], 2, 0, true);
        let tent = a.round(Instance::point(0), &mut o).unwrap();
        assert_eq!(tent.p1(), 1.0);
        assert_eq!(tent.len(), 1);
        a.observe(tent, Label::ZERO).unwrap();
        let tent = a.round(Instance::point(1), &mut o).unwrap();
        assert_eq!(tent.p1(), 0.0);
    }

    #[test]
    fn symmetric_class_gives_one_half() {
        for exact in [false, true] {
            let (a, mut o) = setup(&["00", "01", "10", "11"], 2, 2, exact);
            let tent = a.round(Instance::point(0), &mut o).unwrap();
            assert_eq!(tent.len(), 2);
            assert!((tent.p1() - 0.5).abs() < 1e-15, "{}", tent.p1());
            assert_eq!(o.stats().pruning_queries, 2);
        }
    }

    #[test]
    fn oracle_prunes_unrealizable_extension() {
        let (mut a, mut o) = setup(&["00", "11"], 3, 1, true);
        let tent = a.round(Instance::point(0), &mut o).unwrap();
        a.observe(tent, Label::ZERO).unwrap();
        let tent = a.round(Instance::point(1), &mut o).unwrap();
        a.observe(tent, Label::ZERO).unwrap();
        let got: Vec<String> = a
            .active_dichotomies()
            .iter()
            .map(|d| format!("{d:?}"))
            .collect();
        assert_eq!(got, vec!["00", "11"]);
    }

    #[test]
    fn losses_split_by_one() {
        let (mut a, mut o) = setup(&["00", "01", "10", "11"], 2, 2, false);
        let tent = a.round(Instance::point(0), &mut o).unwrap();
        a.observe(tent, Label::ONE).unwrap();
        let losses: Vec<u64> = a.active().iter().map(|n| n.loss).collect();
        assert_eq!(losses, vec![1, 0]);
    }

    #[test]
    fn initial_normalizer_and_pascal_round() {
        let (mut a, mut o) = setup(&["00", "01", "10", "11"], 5, 2, true);
        assert!((a.ln_z0() - (1.0f64 + 5.0 + 10.0).ln()).abs() < 1e-12);
        let tent = a.round(Instance::point(0), &mut o).unwrap();
        a.observe(tent, Label::ONE).unwrap();
        let rec = &a.potentials()[0];
        let [prev, pre, _] = rec.exact.as_ref().unwrap();
        // nothing was pruned, so the split is exact
        assert_eq!(prev, pre);
        rec.check(1e-9).unwrap();
    }
}
