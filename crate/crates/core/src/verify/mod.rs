//! Named verification suites. Each returns a report listing every
//! counterexample it found.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

mod enumerate;
pub mod equivalence;
pub mod fleet;
pub mod lazy;
pub mod lower_bound;
pub mod tables;

pub use enumerate::small_classes;
pub use equivalence::EquivalenceParams;
pub use fleet::{test_fleet, FleetGame};
pub use lazy::LazyParams;
pub use lower_bound::LowerBoundParams;

/// Failures kept verbatim per suite; later ones are only counted.
const KEPT_FAILURES: usize = 50;

#[derive(Clone, Debug, Default)]
pub struct SuiteReport {
    pub name: String,
    pub checks: u64,
    pub failed: u64,
    pub failures: Vec<String>,
    /// Measured quantities worth printing next to the verdict.
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn new(name: &str) -> Self {
        SuiteReport {
            name: name.to_string(),
            ..Default::default()
        }
    }

    pub fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) -> bool {
        self.checks += 1;
        if !ok {
            self.fail(describe());
        }
        ok
    }

    pub fn fail(&mut self, msg: String) {
        self.failed += 1;
        if self.failures.len() < KEPT_FAILURES {
            self.failures.push(msg);
        }
    }

    pub fn note(&mut self, msg: String) {
        self.notes.push(msg);
    }

    pub fn passed(&self) -> bool {
        self.failed == 0 && self.checks > 0
    }

    pub fn merge(&mut self, other: SuiteReport) {
        self.checks += other.checks;
        self.failed += other.failed;
        let room = KEPT_FAILURES.saturating_sub(self.failures.len());
        self.failures.extend(other.failures.into_iter().take(room));
        self.notes.extend(other.notes);
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {} ({} checks, {} failed)", self.name, self.checks, self.failed)?;
        for n in &self.notes {
            write!(f, "\n  {n}")?;
        }
        for m in &self.failures {
            write!(f, "\n  counterexample: {m}")?;
        }
        if self.failed as usize > self.failures.len() {
            write!(f, "\n  ... {} more", self.failed as usize - self.failures.len())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Pascal,
    Equivalence,
    Sauer,
    Survival,
    Potentials,
    Purity,
    LowerBound,
    SampleBlind,
    Dims,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Pascal,
        Suite::Equivalence,
        Suite::Sauer,
        Suite::Survival,
        Suite::Potentials,
        Suite::Purity,
        Suite::LowerBound,
        Suite::SampleBlind,
        Suite::Dims,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Pascal => "pascal",
            Suite::Equivalence => "equivalence",
            Suite::Sauer => "sauer",
            Suite::Survival => "survival",
            Suite::Potentials => "potentials",
            Suite::Purity => "purity",
            Suite::LowerBound => "lower_bound",
            Suite::SampleBlind => "sample_blind",
            Suite::Dims => "dims",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

/// How much work a suite does.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Scale {
    /// Reduced grids and seed counts, seconds per suite.
    Quick,
    /// The full grids.
    #[default]
    Full,
}

pub fn run_suite(suite: Suite, scale: Scale) -> SuiteReport {
    let quick = scale == Scale::Quick;
    match suite {
        Suite::Pascal => tables::pascal(if quick { 24 } else { 64 }, 8),
        Suite::Equivalence => equivalence::run(&if quick {
            EquivalenceParams::quick()
        } else {
            EquivalenceParams::default()
        }),
        Suite::Sauer => {
            let mut r = tables::sauer(if quick { 3 } else { 4 });
            r.merge(fleet::width(&test_fleet(quick)));
            r.name = "sauer".into();
            r
        }
        Suite::Survival => fleet::survival(&test_fleet(quick)),
        Suite::Potentials => fleet::potentials(&test_fleet(quick)),
        Suite::Purity => fleet::purity(&test_fleet(quick)),
        Suite::LowerBound => lower_bound::run(&if quick {
            LowerBoundParams::quick()
        } else {
            LowerBoundParams::default()
        }),
        Suite::SampleBlind => lazy::run(&if quick {
            LazyParams::quick()
        } else {
            LazyParams::default()
        }),
        Suite::Dims => tables::dims(),
    }
}
