use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::adversaries::AdversarySpec;
use crate::concepts::{ClassSpec, ConceptClass};
use crate::error::{Error, Result};
use crate::learners::{BaseKind, BaseLearner};
use crate::oracles::Charging;
use crate::reductions::{HedgeParams, NumericMode, BDPSS_MAX_BUDGET, BDPSS_MAX_HORIZON};
use crate::subsampling::lazy_horizon;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReductionKind {
    #[default]
    Adept,
    Bdpss,
    LazyAdept,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaSpec {
    #[default]
    Fixed,
    Adaptive,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    #[serde(default)]
    pub reduction: ReductionKind,
    #[serde(default)]
    pub base: BaseKind,
    #[serde(rename = "M_override", default, skip_serializing_if = "Option::is_none")]
    pub m_override: Option<usize>,
    #[serde(default)]
    pub eta: EtaSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_override: Option<f64>,
    /// `"lazy"` selects the lazy wrapper, like `reduction: "lazy-adept"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wrapper: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Cap on charged oracle calls; later weak-consistency calls answer
    /// "realizable" without being counted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_budget: Option<u64>,
    /// Explicit ensemble only: delete experts whose prefix becomes unrealizable.
    #[serde(default = "yes")]
    pub prune_experts: bool,
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec {
            reduction: ReductionKind::Adept,
            base: BaseKind::Soa,
            m_override: None,
            eta: EtaSpec::Fixed,
            eta_override: None,
            wrapper: None,
            c: None,
            k: None,
            query_budget: None,
            prune_experts: true,
        }
    }
}

impl LearnerSpec {
    pub fn effective_reduction(&self) -> ReductionKind {
        if self.wrapper.as_deref() == Some("lazy") {
            ReductionKind::LazyAdept
        } else {
            self.reduction
        }
    }

    /// Short label for tables.
    pub fn label(&self) -> String {
        let mut s = match self.effective_reduction() {
            ReductionKind::Adept => "adept".to_string(),
            ReductionKind::Bdpss => "bdpss".to_string(),
            ReductionKind::LazyAdept => match (self.c, self.k) {
                (Some(c), _) => format!("lazy(c={c})"),
                (_, Some(k)) => format!("lazy(K={k})"),
                _ => "lazy".to_string(),
            },
        };
        s.push_str(match self.base {
            BaseKind::Soa => "/soa",
            BaseKind::Halving => "/halving",
        });
        if let Some(q) = self.query_budget {
            s.push_str(&format!("/Q={q}"));
        }
        s
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub class: ClassSpec,
    #[serde(default)]
    pub learner: LearnerSpec,
    pub adversary: AdversarySpec,
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub numeric: NumericMode,
    #[serde(default)]
    pub charging: Charging,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// A validated config with its class and learner parameters resolved.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub class: Arc<ConceptClass>,
    pub reduction: ReductionKind,
    /// Mistake budget `M` handed to the reduction.
    pub budget: usize,
    /// Hedge parameters; their horizon is `K` for the lazy wrapper.
    pub hedge: HedgeParams,
    /// Internal horizon of the lazy wrapper.
    pub lazy_k: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// The class of a full config, or a bare class spec.
    pub fn class_from_json(text: &str) -> Result<ClassSpec> {
        match Self::from_json(text) {
            Ok(cfg) => Ok(cfg.class),
            Err(_) => serde_json::from_str(text).map_err(|e| Error::Config(e.to_string())),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks every field and derives the run parameters.
    pub fn resolve(&self) -> Result<Resolved> {
        let class = Arc::new(self.class.build()?);
        let spec = &self.learner;
        let reduction = spec.effective_reduction();
        if let Some(w) = &spec.wrapper {
            if w != "lazy" {
                return Err(Error::Config(format!("learner.wrapper: unknown wrapper {w:?}")));
            }
        }
        if self.replicates == 0 {
            return Err(Error::Config("replicates: must be at least 1".into()));
        }
        if let Some(eta) = spec.eta_override {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::Config(format!("learner.eta_override: {eta} is not positive")));
            }
        }
        if spec.eta_override.is_some() && spec.eta == EtaSpec::Adaptive {
            return Err(Error::Config(
                "learner.eta_override: cannot be combined with adaptive eta".into(),
            ));
        }
        let base = BaseLearner::new(spec.base, &class)?;
        let budget = spec.m_override.unwrap_or_else(|| base.mistake_bound());
        self.adversary.validate(&class, self.horizon)?;

        let lazy_k = match reduction {
            ReductionKind::LazyAdept => {
                let k = match (spec.c, spec.k) {
                    (Some(_), Some(_)) => {
                        return Err(Error::Config("learner: give either c or K, not both".into()))
                    }
                    (Some(c), None) => lazy_horizon(self.horizon, c)?,
                    (None, Some(k)) => {
                        if k == 0 || k > self.horizon {
                            return Err(Error::Config(format!(
                                "learner.K: {k} must lie in 1..={}",
                                self.horizon
                            )));
                        }
                        k
                    }
                    (None, None) => {
                        return Err(Error::Config("learner: the lazy wrapper needs c or K".into()))
                    }
                };
                Some(k)
            }
            _ => {
                if spec.c.is_some() || spec.k.is_some() {
                    return Err(Error::Config(
                        "learner: c and K only apply to the lazy wrapper".into(),
                    ));
                }
                None
            }
        };
        if reduction == ReductionKind::Bdpss {
            if !matches!(class.as_ref(), ConceptClass::Finite(_)) {
                return Err(Error::Config("learner.reduction: bdpss needs a finite class".into()));
            }
            if self.horizon > BDPSS_MAX_HORIZON || budget > BDPSS_MAX_BUDGET {
                return Err(Error::Config(format!(
                    "learner.reduction: bdpss is limited to T <= {BDPSS_MAX_HORIZON}, M <= {BDPSS_MAX_BUDGET}"
                )));
            }
            if spec.query_budget.is_some() {
                return Err(Error::Config(
                    "learner.query_budget: not supported by bdpss".into(),
                ));
            }
        }
        let horizon = lazy_k.unwrap_or(self.horizon);
        let hedge = match (spec.eta, spec.eta_override) {
            (EtaSpec::Adaptive, _) => HedgeParams::adaptive(horizon, budget),
            (EtaSpec::Fixed, Some(eta)) => HedgeParams::with_eta(horizon, budget, eta),
            (EtaSpec::Fixed, None) => HedgeParams::fixed(horizon, budget),
        };
        Ok(Resolved {
            class,
            reduction,
            budget,
            hedge,
            lazy_k,
        })
    }
}
