//! Straight-line restatement of the heuristic tracing rules over absolute
//! days, written without the library's helpers. Used to cross-check
//! `heuristic_compute_risk`.

use std::collections::BTreeMap;

use ctsim_core::disease::Symptom;

pub const D_MAX: u32 = 14;
pub const R_MAX: u8 = 15;
pub const R_HIGH: u8 = 12;
pub const R_MODERATE: u8 = 10;
pub const R_MILD: u8 = 6;
pub const W: u32 = 8;

pub struct Msg {
    pub encounter_day: u32,
    pub risk: u8,
    pub received_day: u32,
}

pub struct Case {
    pub today: u32,
    /// (day, +1 or -1)
    pub tests: Vec<(u32, i8)>,
    pub symptoms: Vec<(u32, Vec<Symptom>)>,
    pub messages: Vec<Msg>,
    /// Yesterday's risk by absolute day.
    pub previous: BTreeMap<u32, u8>,
}

fn is_high(s: Symptom) -> bool {
    matches!(
        s,
        Symptom::LossOfTaste | Symptom::ModerateTroubleBreathing | Symptom::HeavyTroubleBreathing | Symptom::SevereChestPain
    )
}

fn is_moderate(s: Symptom) -> bool {
    matches!(s, Symptom::Fever | Symptom::Cough | Symptom::Chills)
}

/// Days covered by the history on `today`, oldest first.
fn window(today: u32) -> Vec<u32> {
    (0..D_MAX).filter(|k| *k <= today).map(|k| today - k).rev().collect()
}

/// Returns risk by absolute day and the recommendation.
pub fn compute(c: &Case) -> (BTreeMap<u32, u8>, u8) {
    let today = c.today;
    let days = window(today);
    let in_window = |d: u32| d <= today && today - d < D_MAX;
    let half = D_MAX / 2;
    let recent = |d: u32| d <= today && today - d <= half;

    let any_positive = c.tests.iter().any(|(d, r)| in_window(*d) && *r == 1);
    let live: Vec<&Msg> = c.messages.iter().filter(|m| m.encounter_day + D_MAX > today).collect();

    // Recovery check.
    let mut rx = true;
    if c.symptoms.iter().any(|(d, s)| recent(*d) && !s.is_empty()) || any_positive {
        rx = false;
    }
    if live.iter().any(|m| m.risk >= R_HIGH && m.received_day + 7 >= today) {
        rx = false;
    } else if live.iter().any(|m| m.risk >= R_MODERATE && m.received_day + 4 >= today) {
        rx = false;
    } else if live.iter().any(|m| m.risk >= R_MILD && m.received_day + 1 >= today) {
        rx = false;
    }

    let mut prev = BTreeMap::new();
    for &d in &days {
        let v = if d == today { 0 } else { *c.previous.get(&d).unwrap_or(&0) };
        prev.insert(d, v);
    }
    if rx {
        let mut r = prev;
        for &d in &days {
            if recent(d) {
                r.insert(d, 0);
            }
        }
        return (r, 0);
    }

    // Tests.
    let mut rt = BTreeMap::new();
    let mut zt = 0;
    for &d in &days {
        rt.insert(d, if any_positive { R_MAX } else { 0 });
    }
    if any_positive {
        zt = 3;
    }

    // Symptoms.
    let seen: Vec<Symptom> = c
        .symptoms
        .iter()
        .filter(|(d, _)| in_window(*d))
        .flat_map(|(_, s)| s.iter().copied())
        .collect();
    let (sym_level, zs) = if seen.iter().any(|s| is_high(*s)) {
        (R_HIGH, 3)
    } else if seen.iter().any(|s| is_moderate(*s)) {
        (R_MODERATE, 2)
    } else if !seen.is_empty() {
        (R_MILD, 1)
    } else {
        (0, 0)
    };
    let mut rs = BTreeMap::new();
    for &d in &days {
        rs.insert(d, if recent(d) { sym_level } else { 0 });
    }

    // Messages.
    let earliest = |level: u8| live.iter().filter(|m| m.risk == level).map(|m| m.received_day).min();
    let (msg_level, from, zm) = if let Some(d) = earliest(R_MAX) {
        (R_MODERATE, d, 2)
    } else if let Some(d) = earliest(R_HIGH) {
        (R_MILD, d, 1)
    } else if let Some(d) = earliest(R_MODERATE) {
        (R_MILD, d, 1)
    } else {
        (0, today + 1, 0)
    };
    let mut rm = BTreeMap::new();
    for &d in &days {
        rm.insert(d, if d >= from { msg_level } else { 0 });
    }

    let mut r = BTreeMap::new();
    for &d in &days {
        let v = prev[&d].max(rt[&d]).max(rs[&d]).max(rm[&d]);
        r.insert(d, v);
    }
    let mut zeta = zt.max(zs).max(zm);

    let latest_negative = c
        .tests
        .iter()
        .filter(|(d, v)| in_window(*d) && *v == -1)
        .map(|(d, _)| *d)
        .max();
    if let (Some(dn), false) = (latest_negative, any_positive) {
        for &d in &days {
            if d + W / 2 >= dn && d <= dn + W / 2 {
                r.insert(d, 0);
            }
        }
        if r[&today] == 0 {
            zeta = 0;
        }
    }
    (r, zeta)
}
