//! The daily simulation loop and its outputs.

mod config;
mod sim;
mod trace;
mod tree;

pub use config::{EnvironmentalParams, SelfIsolation, SimConfig};
pub use sim::{run_simulation, seed_infections, Simulation};
pub use trace::{
    AgentSummary, DailyRecord, InfectionEdge, JsonlSink, NullSink, SimTrace, TraceEvent, TraceSink, DAILY_SCHEMA,
    TRACE_SCHEMA,
};
pub use tree::InfectionTree;
