//! Agent-based simulation of respiratory-virus spread with smartphone contact
//! tracing, plus the analysis used to compare tracing policies.

pub mod analysis;
pub mod dct;
pub mod disease;
pub mod engine;
pub mod error;
pub mod health;
pub mod metrics;
pub mod mobility;
pub mod population;
pub mod rng;

pub use dct::TracingMethod;
pub use engine::{run_simulation, SimConfig, SimTrace, Simulation};
pub use error::{Error, Result};
