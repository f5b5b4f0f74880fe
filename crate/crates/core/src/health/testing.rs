//! RT-PCR testing: a capacity-limited priority queue and phase-dependent
//! false negatives.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disease::Severity;
use crate::error::{Error, Result};
use crate::population::AgentId;

static DEFAULT_FN_TABLE: &str = include_str!("../../data/false_negative.csv");

/// False-negative rate by whole days since infection, linear between rows and
/// flat outside them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalseNegativeTable {
    pub points: Vec<(f64, f64)>,
}

impl FalseNegativeTable {
    pub fn from_csv(src: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(src.as_bytes());
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::parse("false-negative table", e))?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::parse("false-negative table", "missing column"))?
                    .trim()
                    .parse()
                    .map_err(|e| Error::parse("false-negative table", e))
            };
            points.push((get(0)?, get(1)?));
        }
        let t = Self { points };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::config("false-negative table is empty"));
        }
        if self.points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::config("false-negative table days must increase"));
        }
        if self.points.iter().any(|p| !(0.0..=1.0).contains(&p.1)) {
            return Err(Error::config("false-negative rates must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn rate(&self, days: f64) -> f64 {
        let p = &self.points;
        if days <= p[0].0 {
            return p[0].1;
        }
        for w in p.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if days <= x1 {
                return y0 + (y1 - y0) * (days - x0) / (x1 - x0);
            }
        }
        p[p.len() - 1].1
    }
}

impl Default for FalseNegativeTable {
    fn default() -> Self {
        Self::from_csv(DEFAULT_FN_TABLE).expect("bundled table parses")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestingParams {
    /// Tests processed per day as a fraction of the population (at least one).
    pub capacity_fraction: f64,
    pub result_delay_days: u32,
    pub specificity: f64,
    /// Probability of requesting a test on a day with mild, moderate or
    /// severe symptoms.
    pub seek_test_prob: [f64; 3],
    /// Probability that an app recommendation leads to a test request.
    pub app_seek_test_prob: f64,
    /// Priority added for app-recommended requests.
    pub app_priority_bonus: f64,
    /// Unserved requests are dropped after this many days.
    pub request_ttl_days: Option<u32>,
    /// Extra isolation after a positive result, in days.
    pub positive_isolation_days: u32,
    /// Days a negative result stays visible to the app after it arrives.
    pub negative_visibility_days: u32,
    #[serde(default)]
    pub false_negative: FalseNegativeTable,
}

impl Default for TestingParams {
    fn default() -> Self {
        Self {
            capacity_fraction: 0.001,
            result_delay_days: 2,
            specificity: 1.0,
            seek_test_prob: [0.3, 0.6, 0.95],
            app_seek_test_prob: 1.0,
            app_priority_bonus: 0.5,
            request_ttl_days: Some(7),
            positive_isolation_days: 12,
            negative_visibility_days: 2,
            false_negative: FalseNegativeTable::default(),
        }
    }
}

impl TestingParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.capacity_fraction) || !(0.0..=1.0).contains(&self.specificity) {
            return Err(Error::config("testing: fractions must lie in [0, 1]"));
        }
        if self.seek_test_prob.iter().chain([&self.app_seek_test_prob]).any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::config("testing: probabilities must lie in [0, 1]"));
        }
        self.false_negative.validate()
    }

    pub fn daily_capacity(&self, population: usize) -> usize {
        ((self.capacity_fraction * population as f64).round() as usize).max(1)
    }

    pub fn seek_probability(&self, severity: Option<Severity>) -> f64 {
        match severity {
            None => 0.0,
            Some(Severity::Mild) => self.seek_test_prob[0],
            Some(Severity::Moderate) => self.seek_test_prob[1],
            Some(Severity::Severe) => self.seek_test_prob[2],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestReason {
    Symptoms,
    AppRecommendation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestRequest {
    pub agent: AgentId,
    pub request_day: u32,
    pub priority: f64,
    pub reason: TestReason,
}

/// Severity score used to rank requests; app recommendations add a bonus.
pub fn test_priority(severity: Option<Severity>, reason: TestReason, params: &TestingParams) -> f64 {
    let base = match severity {
        None => 0.0,
        Some(Severity::Mild) => 1.0,
        Some(Severity::Moderate) => 2.0,
        Some(Severity::Severe) => 3.0,
    };
    match reason {
        TestReason::Symptoms => base,
        TestReason::AppRecommendation => base + params.app_priority_bonus,
    }
}

fn rank(a: &TestRequest, b: &TestRequest) -> Ordering {
    b.priority
        .total_cmp(&a.priority)
        .then(b.request_day.cmp(&a.request_day))
        .then(a.agent.cmp(&b.agent))
}

/// Pending requests, at most one per agent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TestQueue {
    pending: BTreeMap<AgentId, TestRequest>,
}

impl TestQueue {
    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn contains(&self, agent: AgentId) -> bool {
        self.pending.contains_key(&agent)
    }

    /// Enqueues `req`; a second request from the same agent is merged into the
    /// first, keeping the higher priority and the earlier day. Returns whether
    /// a new entry was created.
    pub fn request(&mut self, req: TestRequest) -> bool {
        match self.pending.get_mut(&req.agent) {
            Some(cur) => {
                if req.priority > cur.priority {
                    cur.priority = req.priority;
                    cur.reason = req.reason;
                }
                cur.request_day = cur.request_day.min(req.request_day);
                false
            }
            None => {
                self.pending.insert(req.agent, req);
                true
            }
        }
    }

    pub fn cancel(&mut self, agent: AgentId) {
        self.pending.remove(&agent);
    }

    /// Drops expired requests and removes up to `capacity` of the best-ranked
    /// ones, returning them in service order together with the expired ones.
    pub fn process(&mut self, day: u32, capacity: usize, ttl: Option<u32>) -> (Vec<TestRequest>, Vec<TestRequest>) {
        let mut expired = Vec::new();
        if let Some(ttl) = ttl {
            self.pending.retain(|_, r| {
                let keep = day.saturating_sub(r.request_day) <= ttl;
                if !keep {
                    expired.push(*r);
                }
                keep
            });
        }
        let mut all: Vec<TestRequest> = self.pending.values().copied().collect();
        all.sort_by(rank);
        all.truncate(capacity);
        for r in &all {
            self.pending.remove(&r.agent);
        }
        (all, expired)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestOutcome {
    Positive,
    Negative,
}

impl TestOutcome {
    pub fn sign(self) -> i8 {
        match self {
            TestOutcome::Positive => 1,
            TestOutcome::Negative => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub agent: AgentId,
    pub request_day: u32,
    pub test_day: u32,
    pub result_day: u32,
    pub priority: f64,
    pub reason: TestReason,
    pub outcome: TestOutcome,
    /// The result disagrees with the true infection status.
    pub is_false: bool,
}

/// Tests an agent today. `infected_since` is the exposure time of a current
/// infection, if any.
pub fn resolve_test(
    req: &TestRequest,
    day: u32,
    infected_since: Option<f64>,
    params: &TestingParams,
    rng: &mut impl Rng,
) -> TestRecord {
    let u: f64 = rng.random();
    let (outcome, is_false) = match infected_since {
        Some(t) => {
            let days = (day as f64 - t).max(0.0).floor();
            if u < params.false_negative.rate(days) {
                (TestOutcome::Negative, true)
            } else {
                (TestOutcome::Positive, false)
            }
        }
        None => {
            if u < params.specificity {
                (TestOutcome::Negative, false)
            } else {
                (TestOutcome::Positive, true)
            }
        }
    };
    TestRecord {
        agent: req.agent,
        request_day: req.request_day,
        test_day: day,
        result_day: day + params.result_delay_days,
        priority: req.priority,
        reason: req.reason,
        outcome,
        is_false,
    }
}

/// Results an agent has received, as seen by its app.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TestHistory {
    /// `(test_day, result_day, outcome)`, in arrival order.
    pub results: Vec<(u32, u32, TestOutcome)>,
}

impl TestHistory {
    pub fn push(&mut self, rec: &TestRecord) {
        self.results.push((rec.test_day, rec.result_day, rec.outcome));
    }

    /// `T[k]` for day `today - k`, `k < d_max`, in `{+1, 0, -1}`.
    ///
    /// A result is placed on its test day once it has arrived. Positives stay
    /// visible for `d_max` days after arrival and negatives for `d_min`.
    pub fn view(&self, today: u32, d_max: usize, d_min: u32) -> Vec<i8> {
        let mut out = vec![0i8; d_max];
        for &(test_day, result_day, outcome) in &self.results {
            if result_day > today || test_day > today {
                continue;
            }
            let keep = match outcome {
                TestOutcome::Positive => d_max as u32,
                TestOutcome::Negative => d_min,
            };
            if today - result_day >= keep {
                continue;
            }
            let k = (today - test_day) as usize;
            if k < d_max {
                // A positive always wins over a negative on the same day.
                if out[k] != 1 {
                    out[k] = outcome.sign();
                }
            }
        }
        out
    }

    pub fn drop_older_than(&mut self, day: u32) {
        self.results.retain(|r| r.1 >= day);
    }
}
