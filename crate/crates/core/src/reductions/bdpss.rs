use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;

use super::{ratio_from_polynomials, HedgeParams, ReductionError, WeightPolynomial};
use crate::concepts::{ConceptClass, Instance, Label};
use crate::learners::{BaseKind, BaseLearner, LearnerState};
use crate::oracles::{OracleFront, QuerySource};

pub const BDPSS_MAX_HORIZON: usize = 12;
pub const BDPSS_MAX_BUDGET: usize = 3;

#[derive(Clone, Debug)]
struct Expert {
    /// Bit `t - 1` set iff the expert flips the base learner at round `t`.
    schedule: u16,
    state: LearnerState,
    prefix: Vec<(Instance, Label)>,
    loss: u64,
    alive: bool,
    pending: Label,
}

/// Outcome of one ensemble round.
#[derive(Clone, Debug)]
pub struct BdpssRound {
    pub p1: f64,
    pub eta: f64,
    /// Hedge mass of live experts voting 1, as a polynomial in `exp(-eta)`.
    pub numerator: WeightPolynomial,
    /// Hedge mass of all live experts.
    pub denominator: WeightPolynomial,
    pub alive: usize,
}

/// One expert per mistake schedule with at most `M` flips.
#[derive(Clone, Debug)]
pub struct BdpssEnsemble {
    learner: BaseLearner,
    hedge: HedgeParams,
    prune: bool,
    experts: Vec<Expert>,
    rounds: usize,
    sink_experts: usize,
}

impl BdpssEnsemble {
    pub fn new(class: &Arc<ConceptClass>, kind: BaseKind, hedge: HedgeParams, prune: bool) -> Result<Self, ReductionError> {
        if !matches!(class.as_ref(), ConceptClass::Finite(_)) {
            return Err(ReductionError::Capability(
                "the explicit ensemble runs on finite classes only".into(),
            ));
        }
        if hedge.horizon > BDPSS_MAX_HORIZON || hedge.budget > BDPSS_MAX_BUDGET {
            return Err(ReductionError::Capability(format!(
                "the explicit ensemble is limited to T <= {BDPSS_MAX_HORIZON} and M <= {BDPSS_MAX_BUDGET}, got T = {}, M = {}",
                hedge.horizon, hedge.budget
            )));
        }
        let learner = BaseLearner::new(kind, class)?;
        let experts = (0u32..1 << hedge.horizon)
            .filter(|s| s.count_ones() as usize <= hedge.budget)
            .map(|schedule| Expert {
                schedule: schedule as u16,
                state: learner.initial_state(),
                prefix: Vec::new(),
                loss: 0,
                alive: true,
                pending: Label::ZERO,
            })
            .collect();
        Ok(BdpssEnsemble {
            learner,
            hedge,
            prune,
            experts,
            rounds: 0,
            sink_experts: 0,
        })
    }

    pub fn expert_count(&self) -> usize {
        self.experts.len()
    }

    pub fn alive(&self) -> usize {
        self.experts.iter().filter(|e| e.alive).count()
    }

    /// Experts whose base learner has been driven onto an unrealizable prefix.
    pub fn sink_experts(&self) -> usize {
        self.sink_experts
    }

    pub fn round(&mut self, x: Instance, oracle: &mut OracleFront) -> Result<BdpssRound, ReductionError> {
        let t = self.rounds + 1;
        assert!(t <= self.hedge.horizon, "ensemble run past its horizon");
        for e in self.experts.iter_mut().filter(|e| e.alive) {
            let p = self.learner.predict(&e.state, &e.prefix, x, oracle)?;
            let flip = e.schedule >> (t - 1) & 1 == 1;
            e.pending = if flip { p.flip() } else { p };
            if self.prune {
                let mut ext = e.prefix.clone();
                ext.push((x, e.pending));
                if !oracle.weak_consistency(&ext, QuerySource::Pruning).is_realizable() {
                    e.alive = false;
                }
            }
        }
        let l_star = self.experts.iter().filter(|e| e.alive).map(|e| e.loss).min();
        let Some(l_star) = l_star else {
            return Err(ReductionError::EmptyActiveSet { round: t });
        };
        let eta = self.hedge.eta(l_star);
        let one = BigUint::one();
        let mut numerator = WeightPolynomial::new();
        let mut denominator = WeightPolynomial::new();
        for e in self.experts.iter().filter(|e| e.alive) {
            if e.pending.is_one() {
                numerator.add_term(e.loss as usize, &one);
            }
            denominator.add_term(e.loss as usize, &one);
        }
        Ok(BdpssRound {
            p1: ratio_from_polynomials(&numerator, &denominator, eta),
            eta,
            numerator,
            denominator,
            alive: self.alive(),
        })
    }

    pub fn observe(&mut self, x: Instance, y: Label) {
        self.rounds += 1;
        for e in self.experts.iter_mut().filter(|e| e.alive) {
            e.loss += u64::from(e.pending != y);
            let was_sink = e.state.is_sink();
            e.state = self.learner.advance(&e.state, x, e.pending);
            if e.state.is_sink() && !was_sink {
                self.sink_experts += 1;
            }
            e.prefix.push((x, e.pending));
        }
    }
}

#[derive(Clone, Debug)]
pub struct BdpssRun {
    pub rounds: Vec<BdpssRound>,
    pub experts: usize,
    pub sink_experts: usize,
}

/// Runs the explicit ensemble over a fixed labeled sequence.
pub fn bdpss_run(
    class: &Arc<ConceptClass>,
    kind: BaseKind,
    hedge: HedgeParams,
    sequence: &[(Instance, Label)],
    prune_experts: bool,
) -> Result<BdpssRun, ReductionError> {
    let mut ens = BdpssEnsemble::new(class, kind, hedge, prune_experts)?;
    let mut oracle = OracleFront::new(class.clone());
    let mut rounds = Vec::with_capacity(sequence.len());
    for &(x, y) in sequence {
        rounds.push(ens.round(x, &mut oracle)?);
        ens.observe(x, y);
    }
    Ok(BdpssRun {
        rounds,
        experts: ens.expert_count(),
        sink_experts: ens.sink_experts(),
    })
}
