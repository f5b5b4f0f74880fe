//! Encounter and update messages, plus the per-agent mailbox state.

use serde::{Deserialize, Serialize};

use super::risk::{RiskHistory, RiskLevel};
use crate::population::AgentId;

/// Opaque id shared by the two copies of one encounter record.
pub type MessageId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncounterMessage {
    pub id: MessageId,
    pub encounter_day: u32,
    pub risk: RiskLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateMessage {
    pub id: MessageId,
    pub new_risk: RiskLevel,
    pub sent_day: u32,
    pub old_risk: RiskLevel,
    pub encounter_day: u32,
}

/// What the sender remembers about a message it sent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outgoing {
    pub id: MessageId,
    pub peer: AgentId,
    pub encounter_day: u32,
    pub last_sent: RiskLevel,
}

/// A message as the receiver currently sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Received {
    pub id: MessageId,
    pub encounter_day: u32,
    pub risk: RiskLevel,
    pub received_day: u32,
}

#[derive(Debug, Clone, Default)]
pub struct Mailbox {
    pub outgoing: Vec<Outgoing>,
    pub inbox: Vec<Received>,
}

impl Mailbox {
    pub fn record_sent(&mut self, msg: &EncounterMessage, peer: AgentId) {
        self.outgoing.push(Outgoing {
            id: msg.id,
            peer,
            encounter_day: msg.encounter_day,
            last_sent: msg.risk,
        });
    }

    pub fn receive(&mut self, msg: &EncounterMessage, day: u32) {
        self.inbox.push(Received {
            id: msg.id,
            encounter_day: msg.encounter_day,
            risk: msg.risk,
            received_day: day,
        });
    }

    /// Applies an update to the matching inbox entry. Returns false for unknown ids.
    pub fn apply_update(&mut self, upd: &UpdateMessage) -> bool {
        match self.inbox.iter_mut().find(|m| m.id == upd.id) {
            Some(m) => {
                m.risk = upd.new_risk;
                m.received_day = upd.sent_day;
                true
            }
            None => false,
        }
    }

    /// Drops records whose encounter fell out of the `d_max` window.
    pub fn expire(&mut self, today: u32, d_max: u32) {
        let keep = |d: u32| d + d_max > today;
        self.outgoing.retain(|o| keep(o.encounter_day));
        self.inbox.retain(|m| keep(m.encounter_day));
    }
}

/// Emits one update per stored encounter whose day now carries a different
/// risk than was last sent, and records the new value.
pub fn propagate_updates(
    outgoing: &mut [Outgoing],
    history: &RiskHistory,
    today: u32,
) -> Vec<(AgentId, UpdateMessage)> {
    let mut out = Vec::new();
    for o in outgoing.iter_mut() {
        let Some(now) = history.at(today, o.encounter_day) else {
            continue;
        };
        if now != o.last_sent {
            out.push((
                o.peer,
                UpdateMessage {
                    id: o.id,
                    new_risk: now,
                    sent_day: today,
                    old_risk: o.last_sent,
                    encounter_day: o.encounter_day,
                },
            ));
            o.last_sent = now;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn out(id: u64, peer: u32, day: u32, r: u8) -> Outgoing {
        Outgoing {
            id,
            peer: AgentId(peer),
            encounter_day: day,
            last_sent: r,
        }
    }

    #[test]
    fn unchanged_history_sends_nothing() {
        let mut o = vec![out(1, 1, 8, 0)];
        assert!(propagate_updates(&mut o, &RiskHistory::zeros(14), 10).is_empty());
    }

    #[test]
    fn positive_test_lifts_past_day() {
        let today = 10;
        let mut o = vec![out(1, 1, 7, 5), out(2, 2, 7, 5), out(3, 3, 9, 15)];
        let h = RiskHistory(vec![15; 14]);
        let ups = propagate_updates(&mut o, &h, today);
        assert_eq!(ups.len(), 2);
        for (_, u) in &ups {
            assert_eq!((u.new_risk, u.sent_day, u.old_risk, u.encounter_day), (15, 10, 5, 7));
        }
        assert!(propagate_updates(&mut o, &h, today).is_empty());
    }

    #[test]
    fn update_and_expiry() {
        let mut mb = Mailbox::default();
        mb.receive(&EncounterMessage { id: 4, encounter_day: 2, risk: 0 }, 2);
        let upd = UpdateMessage { id: 4, new_risk: 15, sent_day: 5, old_risk: 0, encounter_day: 2 };
        assert!(mb.apply_update(&upd));
        assert_eq!(mb.inbox[0].risk, 15);
        assert_eq!(mb.inbox[0].received_day, 5);
        assert!(!mb.apply_update(&UpdateMessage { id: 9, ..upd }));
        mb.expire(15, 14);
        assert_eq!(mb.inbox.len(), 1);
        mb.expire(16, 14);
        assert!(mb.inbox.is_empty());
    }
}
