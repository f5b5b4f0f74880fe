//! Digital contact tracing: message exchange and the risk policies.

mod bct;
mod bluetooth;
mod cluster;
mod heuristic;
mod messages;
mod risk;

use serde::{Deserialize, Serialize};

pub use bct::{bct_compute_risk, Hops, SECOND_HOP_SIGNAL};
pub use bluetooth::{capture_encounter, is_captured, perceived_distance, CAPTURE_DISTANCE_M, CAPTURE_MIN_DURATION_MIN};
pub use cluster::{cluster_inbox, expire_clusters, Cluster, ClusterStats};
pub use heuristic::{heuristic_compute_risk, HeuristicInputs, HeuristicParams, SymptomTiers};
pub use messages::{propagate_updates, EncounterMessage, Mailbox, MessageId, Outgoing, Received, UpdateMessage};
pub use risk::{RiskHistory, RiskLevel, N_RISK_LEVELS, R_MAX};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TracingMethod {
    #[default]
    None,
    Bct1,
    Bct2,
    Heuristic,
}

impl TracingMethod {
    pub const ALL: [TracingMethod; 4] = [Self::None, Self::Bct1, Self::Bct2, Self::Heuristic];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Bct1 => "bct1",
            Self::Bct2 => "bct2",
            Self::Heuristic => "heuristic",
        }
    }

    pub fn uses_app(self) -> bool {
        self != Self::None
    }
}

impl std::str::FromStr for TracingMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown tracing method `{s}`"))
    }
}

/// Highest recommendation a policy emits; it maps to quarantine.
pub const TOP_RECOMMENDATION: u8 = 3;
