//! Daily activity schedules at one-hour resolution.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disease::Severity;
use crate::population::{Agent, AgentId, LocationId, LocationKind, Population};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    pub location: LocationId,
    pub start: u8,
    pub end: u8,
}

impl Visit {
    pub fn hours(&self) -> u8 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Grocery = 0,
    Socialize = 1,
    Exercise = 2,
}

impl Activity {
    pub const ALL: [Activity; 3] = [Activity::Grocery, Activity::Socialize, Activity::Exercise];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleParams {
    pub work_hours: [u8; 2],
    pub school_hours: [u8; 2],
    pub common_room_hours: [u8; 2],
    /// Daily probability of each activity on a weekday, before recency suppression.
    pub activity_prob: [f64; 3],
    pub weekend_activity_multiplier: f64,
    /// Probability multiplier applied once per repeat of an activity within the week.
    pub recency_factor: f64,
    pub activity_duration_h: [u8; 3],
    /// Probability of skipping each out-of-home block when mildly, moderately
    /// or severely symptomatic.
    pub sick_skip_prob: [f64; 3],
    /// Probability a young child joins each household adult's outing.
    pub child_join_prob: f64,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        Self {
            work_hours: [9, 17],
            school_hours: [8, 16],
            common_room_hours: [10, 16],
            activity_prob: [0.35, 0.25, 0.3],
            weekend_activity_multiplier: 1.5,
            recency_factor: 0.5,
            activity_duration_h: [1, 2, 1],
            sick_skip_prob: [0.25, 0.5, 0.9],
            child_join_prob: 0.5,
        }
    }
}

/// Per-agent activity counts for the current week.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityMemory {
    pub week: u32,
    pub counts: [u8; 3],
}

/// What the scheduler needs to know about an agent's state today.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DayContext {
    pub day: u32,
    pub quarantined: bool,
    pub hospital: Option<LocationId>,
    pub severity: Option<Severity>,
}

pub fn is_weekend(day: u32) -> bool {
    day % 7 >= 5
}

fn overlaps(blocks: &[Visit], start: u8, end: u8) -> bool {
    blocks.iter().any(|b| b.start < end && start < b.end)
}

fn fill_home(home: LocationId, mut blocks: Vec<Visit>) -> Vec<Visit> {
    blocks.sort_by_key(|b| b.start);
    let mut out = Vec::with_capacity(blocks.len() * 2 + 1);
    let mut t = 0u8;
    for b in blocks {
        if b.start > t {
            out.push(Visit { location: home, start: t, end: b.start });
        }
        t = b.end;
        out.push(b);
    }
    if t < 24 {
        out.push(Visit { location: home, start: t, end: 24 });
    }
    out
}

fn pick(rng: &mut impl Rng, v: &[LocationId]) -> Option<LocationId> {
    if v.is_empty() {
        None
    } else {
        Some(v[rng.random_range(0..v.len())])
    }
}

/// Hour-resolution plan for one agent; contiguous and covering the whole day.
pub fn build_schedule(
    agent: &Agent,
    pop: &Population,
    ctx: &DayContext,
    memory: &mut ActivityMemory,
    params: &ScheduleParams,
    rng: &mut impl Rng,
) -> Vec<Visit> {
    if let Some(h) = ctx.hospital {
        return vec![Visit { location: h, start: 0, end: 24 }];
    }
    if ctx.quarantined {
        return vec![Visit { location: agent.household, start: 0, end: 24 }];
    }
    let week = ctx.day / 7;
    if memory.week != week {
        *memory = ActivityMemory { week, counts: [0; 3] };
    }
    let skip = match ctx.severity {
        None => 0.0,
        Some(Severity::Mild) => params.sick_skip_prob[0],
        Some(Severity::Moderate) => params.sick_skip_prob[1],
        Some(Severity::Severe) => params.sick_skip_prob[2],
    };
    let weekend = is_weekend(ctx.day);
    let mut blocks = Vec::new();
    if let Some(w) = agent.workplace {
        let kind = pop.location(w).kind;
        let hours = match kind {
            LocationKind::School => params.school_hours,
            LocationKind::CommonRoom => params.common_room_hours,
            _ => params.work_hours,
        };
        let attends = kind == LocationKind::CommonRoom || !weekend;
        let skipped = rng.random::<f64>() < skip;
        if attends && !skipped {
            blocks.push(Visit { location: w, start: hours[0], end: hours[1] });
        }
    }
    let resident = pop.location(agent.household).kind == LocationKind::SeniorResidence;
    if agent.needs_supervision() || resident {
        return fill_home(agent.household, blocks);
    }
    for act in Activity::ALL {
        let i = act as usize;
        let mut p = params.activity_prob[i] * params.recency_factor.powi(memory.counts[i] as i32);
        if weekend {
            p *= params.weekend_activity_multiplier;
        }
        let go = rng.random::<f64>() < p;
        let skipped = rng.random::<f64>() < skip;
        let len = params.activity_duration_h[i].max(1);
        let (lo, hi) = if weekend { (9u8, 21u8) } else { (17u8, 22u8) };
        let start = rng.random_range(lo..=hi.saturating_sub(len).max(lo));
        let candidates = match act {
            Activity::Grocery => &pop.stores,
            Activity::Socialize => &pop.restaurants,
            Activity::Exercise => &pop.parks,
        };
        let loc = pick(rng, candidates);
        let end = (start + len).min(24);
        if go && !skipped && !overlaps(&blocks, start, end) {
            if let Some(location) = loc {
                blocks.push(Visit { location, start, end });
                memory.counts[i] = memory.counts[i].saturating_add(1);
            }
        }
    }
    fill_home(agent.household, blocks)
}

/// Lets each young child tag along on outings of adults from the same household.
///
/// `schedules[k]` belongs to `members[k]`; `free[k]` says whether that member
/// may leave home today.
pub fn attach_children(
    pop: &Population,
    members: &[AgentId],
    schedules: &mut [Vec<Visit>],
    free: &[bool],
    params: &ScheduleParams,
    rng: &mut impl Rng,
) {
    let outings: Vec<Visit> = members
        .iter()
        .zip(schedules.iter())
        .filter(|(m, _)| !pop.agent(**m).needs_supervision())
        .flat_map(|(_, s)| s.iter().copied())
        .filter(|v| {
            matches!(
                pop.location(v.location).kind,
                LocationKind::Store | LocationKind::Park | LocationKind::Restaurant
            )
        })
        .collect();
    if outings.is_empty() {
        return;
    }
    for (k, m) in members.iter().enumerate() {
        if !pop.agent(*m).needs_supervision() || !free[k] {
            continue;
        }
        let home = pop.agent(*m).household;
        for o in &outings {
            let join = rng.random::<f64>() < params.child_join_prob;
            let at_home = schedules[k]
                .iter()
                .filter(|v| v.start < o.end && o.start < v.end)
                .all(|v| v.location == home);
            if join && at_home {
                let mut blocks: Vec<Visit> = schedules[k].iter().copied().filter(|v| v.location != home).collect();
                blocks.push(*o);
                schedules[k] = fill_home(home, blocks);
            }
        }
    }
}
