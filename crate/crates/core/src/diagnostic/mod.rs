//! Statistical estimators of the finite-quadratic-variation probability
//! under `Q` and of `E^P[Z_t]`, the verdict rule built on them, their
//! cross-check, a per-path integrability guard and Feller's explosion test.

mod estimators;
mod feller;
mod stats;
mod verdict;

pub use estimators::{
    consistency_check, consistency_from, estimate_expectation_z, estimate_finite_qv_prob,
    estimate_finite_qv_with_horizon, pathwise_integrability_guard, CapRow, ConsistencyReport,
    ExpectationReport, FiniteQvReport, HorizonEstimate, McParams, HEAVY_TAIL_KURTOSIS,
};
pub use feller::{feller_explosion_test, EndpointBehaviour, EndpointReport, FellerPreset, FellerProblem, FellerReport};
pub use stats::{mean_interval, wilson_interval, Censoring, EstimateWithCI, MeanStats, Z95};
pub use verdict::{
    classify, martingale_verdict, HorizonVerdict, TimeDecision, TimeVerdict, UiSource, Verdict, VerdictRule,
};

use std::fmt;
use std::str::FromStr;

/// Outcome of the martingale diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Classification {
    UIMartingale,
    MartingaleNotUI,
    StrictLocal,
    Inconclusive,
}

impl Classification {
    pub const ALL: [Classification; 4] = [
        Classification::UIMartingale,
        Classification::MartingaleNotUI,
        Classification::StrictLocal,
        Classification::Inconclusive,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::UIMartingale => "UIMartingale",
            Classification::MartingaleNotUI => "MartingaleNotUI",
            Classification::StrictLocal => "StrictLocal",
            Classification::Inconclusive => "Inconclusive",
        }
    }

    /// Numeric code used in tabular output.
    pub fn code(&self) -> u8 {
        match self {
            Classification::UIMartingale => 0,
            Classification::MartingaleNotUI => 1,
            Classification::StrictLocal => 2,
            Classification::Inconclusive => 3,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Classification {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Classification::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown classification `{s}`"))
    }
}

/// Analytically known status of uniform integrability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UiStatus {
    Holds,
    Fails,
    Unknown,
}

impl UiStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            UiStatus::Holds => "holds",
            UiStatus::Fails => "fails",
            UiStatus::Unknown => "unknown",
        }
    }
}
