//! Grouping of received messages into clusters that stand for one contact each.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::messages::{EncounterMessage, MessageId, UpdateMessage};
use super::risk::RiskLevel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub encounter_day: u32,
    pub risk: RiskLevel,
    pub messages: Vec<MessageId>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClusterStats {
    pub created: usize,
    pub split: usize,
    pub relabeled: usize,
    pub dropped_updates: usize,
}

/// Adds fresh messages and applies updates.
///
/// Fresh messages join a cluster created in this call with the same encounter
/// day and risk, so one day of messages opens at most one cluster per risk
/// level. An update group that covers only part of its cluster splits it.
pub fn cluster_inbox(
    clusters: &mut Vec<Cluster>,
    fresh: &[EncounterMessage],
    updates: &[UpdateMessage],
) -> ClusterStats {
    let mut stats = ClusterStats::default();

    let mut opened: HashMap<(u32, RiskLevel), usize> = HashMap::new();
    for m in fresh {
        let idx = *opened.entry((m.encounter_day, m.risk)).or_insert_with(|| {
            clusters.push(Cluster {
                encounter_day: m.encounter_day,
                risk: m.risk,
                messages: Vec::new(),
            });
            stats.created += 1;
            clusters.len() - 1
        });
        clusters[idx].messages.push(m.id);
    }

    if updates.is_empty() {
        return stats;
    }
    let owner: HashMap<MessageId, usize> = clusters
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.messages.iter().map(move |&id| (id, i)))
        .collect();

    // Later updates for the same id supersede earlier ones.
    let mut latest: BTreeMap<MessageId, RiskLevel> = BTreeMap::new();
    for u in updates {
        if owner.contains_key(&u.id) {
            latest.insert(u.id, u.new_risk);
        } else {
            stats.dropped_updates += 1;
        }
    }

    let mut groups: BTreeMap<(usize, RiskLevel), Vec<MessageId>> = BTreeMap::new();
    for (id, r) in latest {
        groups.entry((owner[&id], r)).or_default().push(id);
    }

    for ((ci, r), ids) in groups {
        if ids.len() == clusters[ci].messages.len() {
            clusters[ci].risk = r;
            stats.relabeled += 1;
            continue;
        }
        clusters[ci].messages.retain(|id| !ids.contains(id));
        let day = clusters[ci].encounter_day;
        clusters.push(Cluster {
            encounter_day: day,
            risk: r,
            messages: ids,
        });
        stats.split += 1;
    }
    clusters.retain(|c| !c.messages.is_empty());
    stats
}

pub fn expire_clusters(clusters: &mut Vec<Cluster>, today: u32, d_max: u32) {
    clusters.retain(|c| c.encounter_day + d_max > today);
}
