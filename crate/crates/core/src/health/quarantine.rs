use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuarantineTrigger {
    PositiveTest,
    AwaitingResult,
    SelfReport,
    AppRecommendation,
    HouseholdMember,
}

/// Isolation state of one agent; days are simulation days.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quarantine {
    /// First day the agent is free again.
    pub until: u32,
    pub trigger: Option<QuarantineTrigger>,
}

impl Quarantine {
    pub fn is_active(&self, day: u32) -> bool {
        day < self.until
    }

    /// Extends isolation to cover `[day, day + days)`. Returns true when the
    /// agent was not already isolated through that period.
    pub fn apply(&mut self, trigger: QuarantineTrigger, day: u32, days: u32) -> bool {
        let until = day + days;
        if until > self.until {
            self.until = until;
            self.trigger = Some(trigger);
            true
        } else {
            false
        }
    }
}

/// First free day after a positive result: isolation runs through
/// `result_day + extra_days - 1`.
pub fn positive_test_release(result_day: u32, extra_days: u32) -> u32 {
    result_day + extra_days
}
