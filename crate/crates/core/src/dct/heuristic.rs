//! Rule-based risk estimation from tests, reported symptoms and received messages.
//!
//! All day-indexed inputs use index 0 for today and index `k` for `k` days ago.

use serde::{Deserialize, Serialize};

use super::messages::Received;
use super::risk::{RiskHistory, RiskLevel, R_MAX};
use crate::disease::{Symptom, SymptomSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymptomTiers {
    pub high: Vec<Symptom>,
    pub moderate: Vec<Symptom>,
}

impl Default for SymptomTiers {
    fn default() -> Self {
        use Symptom::*;
        Self {
            high: vec![LossOfTaste, ModerateTroubleBreathing, HeavyTroubleBreathing, SevereChestPain],
            moderate: vec![Fever, Cough, Chills],
        }
    }
}

impl SymptomTiers {
    fn mask(v: &[Symptom]) -> SymptomSet {
        let mut s = SymptomSet::default();
        for &x in v {
            s.insert(x);
        }
        s
    }

    /// 3 for a high-tier symptom, 2 moderate, 1 for anything else, 0 for none.
    pub fn tier(&self, s: SymptomSet) -> u8 {
        let high = Self::mask(&self.high);
        let moderate = Self::mask(&self.moderate);
        if s.iter().any(|x| high.contains(x)) {
            3
        } else if s.iter().any(|x| moderate.contains(x)) {
            2
        } else if !s.is_empty() {
            1
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicParams {
    pub r_high: RiskLevel,
    pub r_moderate: RiskLevel,
    pub r_mild: RiskLevel,
    pub d_max: u32,
    pub negative_test_window: u32,
    pub tiers: SymptomTiers,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        Self {
            r_high: 12,
            r_moderate: 10,
            r_mild: 6,
            d_max: 14,
            negative_test_window: 8,
            tiers: SymptomTiers::default(),
        }
    }
}

impl HeuristicParams {
    pub fn validate(&self) -> Result<()> {
        if !(0 < self.r_mild && self.r_mild < self.r_moderate && self.r_moderate < self.r_high && self.r_high < R_MAX) {
            return Err(Error::config("heuristic risk levels must satisfy 0 < mild < moderate < high < 15"));
        }
        if self.d_max < 2 || self.negative_test_window >= self.d_max {
            return Err(Error::config("heuristic window sizes out of range"));
        }
        if self.tiers.high.iter().any(|s| self.tiers.moderate.contains(s)) {
            return Err(Error::config("symptom tiers overlap"));
        }
        Ok(())
    }

    fn recent(&self) -> usize {
        (self.d_max / 2) as usize
    }
}

pub struct HeuristicInputs<'a> {
    pub today: u32,
    /// +1 positive, -1 negative, 0 nothing, per day.
    pub tests: &'a [i8],
    pub symptoms: &'a [SymptomSet],
    pub messages: &'a [Received],
    /// Yesterday's output, still indexed from yesterday.
    pub previous: &'a RiskHistory,
}

fn fill(r: &mut RiskHistory, upto: usize, level: RiskLevel) {
    let n = r.len().min(upto + 1);
    r.0[..n].fill(level);
}

fn tests_risk(tests: &[i8], p: &HeuristicParams) -> (RiskHistory, u8) {
    let mut r = RiskHistory::zeros(p.d_max as usize);
    if tests.iter().any(|&t| t == 1) {
        r.0.fill(R_MAX);
        return (r, 3);
    }
    (r, 0)
}

fn symptoms_risk(symptoms: &[SymptomSet], p: &HeuristicParams) -> (RiskHistory, u8) {
    let mut r = RiskHistory::zeros(p.d_max as usize);
    let all = symptoms.iter().take(p.d_max as usize).fold(SymptomSet::default(), |a, &s| a.union(s));
    let zeta = p.tiers.tier(all);
    let level = match zeta {
        3 => p.r_high,
        2 => p.r_moderate,
        1 => p.r_mild,
        _ => return (r, 0),
    };
    fill(&mut r, p.recent(), level);
    (r, zeta)
}

fn messages_risk(today: u32, msgs: &[Received], p: &HeuristicParams) -> (RiskHistory, u8) {
    let mut r = RiskHistory::zeros(p.d_max as usize);
    let in_window: Vec<&Received> = msgs.iter().filter(|m| m.encounter_day + p.d_max > today).collect();
    for (signal, level, zeta) in [(R_MAX, p.r_moderate, 2), (p.r_high, p.r_mild, 1), (p.r_moderate, p.r_mild, 1)] {
        if let Some(first) = in_window.iter().filter(|m| m.risk == signal).map(|m| m.received_day).min() {
            fill(&mut r, today.saturating_sub(first) as usize, level);
            return (r, zeta);
        }
    }
    (r, 0)
}

/// Whether the agent shows no recent evidence of infection.
fn recovered(inp: &HeuristicInputs, p: &HeuristicParams) -> bool {
    let recent_symptoms = inp.symptoms.iter().take(p.recent() + 1).any(|s| !s.is_empty());
    if recent_symptoms || inp.tests.iter().any(|&t| t == 1) {
        return false;
    }
    let received_within = |level: RiskLevel, days: u32| {
        inp.messages
            .iter()
            .any(|m| m.encounter_day + p.d_max > inp.today && m.risk >= level && m.received_day + days >= inp.today)
    };
    !(received_within(p.r_high, 7) || received_within(p.r_moderate, 4) || received_within(p.r_mild, 1))
}

/// One daily update of the heuristic policy. Returns the new history and the
/// recommendation `0..=3`, where 3 means quarantine.
pub fn heuristic_compute_risk(inp: &HeuristicInputs, p: &HeuristicParams) -> (RiskHistory, u8) {
    let prev = inp.previous.shifted();
    if recovered(inp, p) {
        let mut r = prev;
        fill(&mut r, p.recent(), 0);
        return (r, 0);
    }

    let (rt, zt) = tests_risk(inp.tests, p);
    let (rs, zs) = symptoms_risk(inp.symptoms, p);
    let (rm, zm) = messages_risk(inp.today, inp.messages, p);
    let mut r = prev;
    r.max_with(&rt);
    r.max_with(&rs);
    r.max_with(&rm);
    let mut zeta = zt.max(zs).max(zm);

    // A positive result takes priority, so a negative one is only applied without it.
    if zt == 0 {
        if let Some(k) = inp.tests.iter().position(|&t| t == -1) {
            let half = (p.negative_test_window / 2) as usize;
            let lo = k.saturating_sub(half);
            let hi = (k + half).min(r.len() - 1);
            r.0[lo..=hi].fill(0);
            if r.today() == 0 {
                zeta = 0;
            }
        }
    }
    (r, zeta)
}
