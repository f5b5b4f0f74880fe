//! Run output: a typed event log plus per-day and per-agent aggregates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dct::TracingMethod;
use crate::disease::Severity;
use crate::health::{QuarantineTrigger, TestRecord, Ward};
use crate::mobility::Encounter;
use crate::population::{AgentId, LocationId, LocationKind, Sex};

pub const TRACE_SCHEMA: &str = "ctsim-trace/1";
pub const DAILY_SCHEMA: &str = "ctsim-daily/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Seed {
        agent: AgentId,
        time: f64,
    },
    Encounter(Encounter),
    Infection {
        infector: Option<AgentId>,
        infectee: AgentId,
        time: f64,
        location: LocationId,
        kind: LocationKind,
    },
    SymptomOnset {
        agent: AgentId,
        time: f64,
        severity: Severity,
    },
    Test(TestRecord),
    Quarantine {
        agent: AgentId,
        day: u32,
        until: u32,
        trigger: QuarantineTrigger,
    },
    Admission {
        agent: AgentId,
        day: u32,
        hospital: LocationId,
        ward: Ward,
    },
    Discharge {
        agent: AgentId,
        day: u32,
    },
    Recovery {
        agent: AgentId,
        time: f64,
    },
    Death {
        agent: AgentId,
        time: f64,
    },
    Daily(DailyRecord),
}

impl TraceEvent {
    /// Day the event belongs to, for ordering checks.
    pub fn day(&self) -> u32 {
        match self {
            TraceEvent::Seed { time, .. }
            | TraceEvent::Infection { time, .. }
            | TraceEvent::SymptomOnset { time, .. }
            | TraceEvent::Recovery { time, .. }
            | TraceEvent::Death { time, .. } => *time as u32,
            TraceEvent::Encounter(e) => e.day,
            TraceEvent::Test(t) => t.test_day,
            TraceEvent::Quarantine { day, .. } | TraceEvent::Admission { day, .. } | TraceEvent::Discharge { day, .. } => {
                *day
            }
            TraceEvent::Daily(d) => d.day,
        }
    }
}

/// End-of-day aggregates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub day: u32,
    pub susceptible: u32,
    pub exposed: u32,
    pub infectious: u32,
    pub recovered: u32,
    pub dead: u32,
    pub new_infections: u32,
    pub encounters: u64,
    /// Encounters exchanged by phones.
    pub captured_encounters: u64,
    pub alive: u32,
    pub tests: u32,
    pub positive_tests: u32,
    pub test_queue: u32,
    pub quarantined: u32,
    pub hospitalized: u32,
    pub icu: u32,
    pub messages_sent: u64,
    pub updates_sent: u64,
    pub dropped_updates: u64,
    pub clusters: u64,
    /// Mean behavior level over alive agents.
    pub mean_level: f64,
}

impl DailyRecord {
    pub fn csv_header() -> &'static str {
        "day,susceptible,exposed,infectious,recovered,dead,new_infections,encounters,captured_encounters,alive,\
         tests,positive_tests,test_queue,quarantined,hospitalized,icu,messages_sent,updates_sent,dropped_updates,\
         clusters,mean_level"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.6}",
            self.day,
            self.susceptible,
            self.exposed,
            self.infectious,
            self.recovered,
            self.dead,
            self.new_infections,
            self.encounters,
            self.captured_encounters,
            self.alive,
            self.tests,
            self.positive_tests,
            self.test_queue,
            self.quarantined,
            self.hospitalized,
            self.icu,
            self.messages_sent,
            self.updates_sent,
            self.dropped_updates,
            self.clusters,
            self.mean_level
        )
    }
}

/// Per-agent totals accumulated over a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub age: u32,
    pub sex: Option<Sex>,
    pub has_app: bool,
    pub exposure: Option<f64>,
    pub infector: Option<AgentId>,
    pub incubation_days: Option<f64>,
    pub infectiousness_onset: Option<f64>,
    pub symptom_onset: Option<f64>,
    pub recovery: Option<f64>,
    pub asymptomatic: bool,
    pub severity: Option<Severity>,
    pub death: Option<f64>,
    /// Days with COVID-19 symptoms outside hospital.
    pub symptomatic_days: u32,
    pub hospital_days: u32,
    pub icu_days: u32,
    pub quarantine_days: u32,
    pub quarantine_work_hours: f64,
    pub supervision_work_hours: f64,
    pub illness_work_hours: f64,
}

impl AgentSummary {
    pub fn was_infected(&self) -> bool {
        self.exposure.is_some()
    }

    /// Finished the infection (recovered or died) by `t`.
    pub fn resolved_by(&self, t: f64) -> bool {
        match (self.death, self.recovery) {
            (Some(d), _) => d <= t,
            (None, Some(r)) => r <= t,
            _ => false,
        }
    }
}

/// Receives events as the simulation produces them.
pub trait TraceSink {
    fn record(&mut self, event: &TraceEvent);
}

/// Discards events; aggregates are still kept in [`SimTrace`].
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _: &TraceEvent) {}
}

impl TraceSink for Vec<TraceEvent> {
    fn record(&mut self, event: &TraceEvent) {
        self.push(event.clone());
    }
}

/// Streams events as JSON lines behind a schema header.
pub struct JsonlSink<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{{\"schema\":\"{TRACE_SCHEMA}\"}}")?;
        Ok(Self { out, error: None })
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TraceSink for JsonlSink<W> {
    fn record(&mut self, event: &TraceEvent) {
        if self.error.is_some() {
            return;
        }
        let line = serde_json::to_string(event).expect("event serializes");
        if let Err(e) = writeln!(self.out, "{line}") {
            self.error = Some(e);
        }
    }
}

/// Everything the analysis layer needs from one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub schema: String,
    pub seed: u64,
    pub method: TracingMethod,
    pub beta: f64,
    pub adoption: f64,
    pub n_days: u32,
    pub population: usize,
    pub seeded: Vec<AgentId>,
    pub daily: Vec<DailyRecord>,
    pub agents: Vec<AgentSummary>,
    /// Transmissions in the order they happened within each day.
    pub infections: Vec<InfectionEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfectionEdge {
    pub infector: AgentId,
    pub infectee: AgentId,
    pub time: f64,
}

impl SimTrace {
    pub fn daily_csv(&self) -> String {
        let mut s = format!("# {DAILY_SCHEMA}\n{}\n", DailyRecord::csv_header());
        for d in &self.daily {
            s.push_str(&d.csv_row());
            s.push('\n');
        }
        s
    }

    pub fn final_fraction_infected(&self) -> f64 {
        let n = self.agents.iter().filter(|a| a.was_infected()).count();
        n as f64 / self.population.max(1) as f64
    }

    pub fn write_json(&self, out: impl Write) -> std::io::Result<()> {
        serde_json::to_writer(out, self).map_err(std::io::Error::other)
    }

    pub fn read_json(input: impl std::io::Read) -> std::io::Result<Self> {
        serde_json::from_reader(input).map_err(std::io::Error::other)
    }
}
