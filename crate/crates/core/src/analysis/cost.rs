//! Disease burden (DALYs), temporary productivity loss and ICERs.

use serde::{Deserialize, Serialize};

use crate::engine::{AgentSummary, SimTrace};
use crate::error::{Error, Result};
use crate::population::{Sex, N_AGE_BINS};

static DEFAULT_LIFE_TABLE: &str = include_str!("../../data/life_table.csv");

/// Disability weights per day spent in each state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DwTable {
    /// Symptomatic, not in hospital.
    pub symptomatic: f64,
    pub hospitalized: f64,
    pub critical: f64,
}

impl Default for DwTable {
    fn default() -> Self {
        Self {
            symptomatic: 0.051,
            hospitalized: 0.133,
            critical: 0.408,
        }
    }
}

impl DwTable {
    pub fn validate(&self) -> Result<()> {
        for w in [self.symptomatic, self.hospitalized, self.critical] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::config("disability weights must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Remaining life expectancy by age, linear between rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifeTable {
    pub points: Vec<(f64, f64)>,
}

impl Default for LifeTable {
    fn default() -> Self {
        Self::from_csv(DEFAULT_LIFE_TABLE).expect("bundled life table parses")
    }
}

impl LifeTable {
    pub fn from_csv(src: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(src.as_bytes());
        let mut points = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            points.push(rec.map_err(|e| Error::parse("life table", e))?);
        }
        if points.is_empty() || points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::parse("life table", "ages must be non-empty and increasing"));
        }
        if points.iter().any(|p| p.1 < 0.0) {
            return Err(Error::parse("life table", "negative life expectancy"));
        }
        Ok(Self { points })
    }

    pub fn remaining(&self, age: f64) -> f64 {
        let p = &self.points;
        if age <= p[0].0 {
            return p[0].1;
        }
        for w in p.windows(2) {
            if age <= w[1].0 {
                let t = (age - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + t * (w[1].1 - w[0].1);
            }
        }
        p[p.len() - 1].1
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Daly {
    pub yll: f64,
    pub yld: f64,
}

impl Daly {
    pub fn total(&self) -> f64 {
        self.yll + self.yld
    }

    fn add(&mut self, o: &Daly) {
        self.yll += o.yll;
        self.yld += o.yld;
    }
}

pub fn agent_daly(a: &AgentSummary, life: &LifeTable, dw: &DwTable) -> Daly {
    let yll = if a.death.is_some() { life.remaining(a.age as f64) } else { 0.0 };
    let yld = (dw.symptomatic * a.symptomatic_days as f64
        + dw.hospitalized * a.hospital_days as f64
        + dw.critical * a.icu_days as f64)
        / 365.0;
    Daly { yll, yld }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DalyReport {
    pub total: Daly,
    /// Ten-year age bins, the last one open-ended.
    pub by_age: Vec<Daly>,
    pub male: Daly,
    pub female: Daly,
    pub per_agent: Vec<Daly>,
}

pub fn age_bin(age: u32) -> usize {
    (age as usize / 10).min(N_AGE_BINS - 1)
}

pub fn compute_dalys(trace: &SimTrace, life: &LifeTable, dw: &DwTable) -> DalyReport {
    let mut r = DalyReport {
        total: Daly::default(),
        by_age: vec![Daly::default(); N_AGE_BINS],
        male: Daly::default(),
        female: Daly::default(),
        per_agent: Vec::with_capacity(trace.agents.len()),
    };
    for a in &trace.agents {
        let d = agent_daly(a, life, dw);
        r.total.add(&d);
        r.by_age[age_bin(a.age)].add(&d);
        match a.sex {
            Some(Sex::Male) => r.male.add(&d),
            Some(Sex::Female) => r.female.add(&d),
            None => {}
        }
        r.per_agent.push(d);
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    pub hourly_wage: f64,
    /// Share of quarantine hours that are lost; the rest is worked from home.
    pub wfh_factor: f64,
    pub min_working_age: u32,
    pub max_working_age: u32,
    pub dw: DwTable,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            hourly_wage: 27.67,
            wfh_factor: 0.49,
            min_working_age: 25,
            max_working_age: 65,
            dw: DwTable::default(),
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.hourly_wage > 0.0) {
            return Err(Error::config("hourly_wage must be positive"));
        }
        if !(0.0..=1.0).contains(&self.wfh_factor) {
            return Err(Error::config("wfh_factor must lie in [0, 1]"));
        }
        if self.min_working_age > self.max_working_age {
            return Err(Error::config("min_working_age exceeds max_working_age"));
        }
        self.dw.validate()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tpl {
    pub quarantine_hours: f64,
    pub supervision_hours: f64,
    pub illness_hours: f64,
    pub total: f64,
}

/// Lost wages from quarantine, child supervision and illness.
pub fn tpl_from_hours(quarantine: f64, supervision: f64, illness: f64, p: &CostParams) -> f64 {
    (quarantine * p.wfh_factor + supervision + illness) * p.hourly_wage
}

pub fn compute_tpl(trace: &SimTrace, p: &CostParams) -> Tpl {
    let mut t = Tpl::default();
    for a in trace
        .agents
        .iter()
        .filter(|a| (p.min_working_age..=p.max_working_age).contains(&a.age))
    {
        t.quarantine_hours += a.quarantine_work_hours;
        t.supervision_hours += a.supervision_work_hours;
        t.illness_hours += a.illness_work_hours;
    }
    t.total = tpl_from_hours(t.quarantine_hours, t.supervision_hours, t.illness_hours, p);
    t
}

/// Outcome of comparing one method's costs against another's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Icer {
    /// Cost per DALY averted.
    Ratio(f64),
    /// Fewer DALYs and no extra cost.
    Dominant,
    /// More DALYs than the comparator.
    Dominated,
    /// No DALYs averted.
    Undefined,
}

impl Icer {
    pub fn value(&self) -> Option<f64> {
        match self {
            Icer::Ratio(v) => Some(*v),
            _ => None,
        }
    }
}

impl std::fmt::Display for Icer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Icer::Ratio(v) => write!(f, "{v:.2}"),
            Icer::Dominant => f.write_str("dominant"),
            Icer::Dominated => f.write_str("dominated"),
            Icer::Undefined => f.write_str("undefined"),
        }
    }
}

/// ICER of a method with `(dalys, tpl)` against a comparator.
pub fn icer(method: (f64, f64), comparator: (f64, f64)) -> Icer {
    let averted = comparator.0 - method.0;
    let extra_cost = method.1 - comparator.1;
    if averted > 0.0 {
        if extra_cost <= 0.0 {
            Icer::Dominant
        } else {
            Icer::Ratio(extra_cost / averted)
        }
    } else if averted < 0.0 {
        Icer::Dominated
    } else {
        Icer::Undefined
    }
}
