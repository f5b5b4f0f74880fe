use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dct::{HeuristicParams, TracingMethod};
use crate::disease::{DiseaseParams, Severity};
use crate::error::{Error, Result};
use crate::health::{HospitalParams, TestingParams};
use crate::mobility::{BehaviorLevels, ContactParams, ScheduleParams};
use crate::population::RegionConfig;

/// Isolation after self-reported symptoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfIsolation {
    pub enabled: bool,
    pub min_severity: Severity,
    pub days: u32,
    /// Limit the trigger to agents running the app.
    pub app_users_only: bool,
}

impl Default for SelfIsolation {
    fn default() -> Self {
        Self {
            enabled: true,
            min_severity: Severity::Severe,
            days: 7,
            app_users_only: false,
        }
    }
}

/// Surface contamination left behind by infectious visitors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvironmentalParams {
    pub enabled: bool,
    /// Hazard per unit of contamination per hour of exposure.
    pub rate: f64,
    /// Days for a contamination to decay linearly to zero.
    pub decay_days: f64,
}

impl Default for EnvironmentalParams {
    fn default() -> Self {
        Self {
            enabled: false,
            rate: 0.01,
            decay_days: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub n_days: u32,
    pub init_fraction_sick: f64,
    pub asymptomatic_fraction: f64,
    /// Population-wide mobility multiplier.
    pub beta: f64,
    pub tracing_method: TracingMethod,
    pub adoption: f64,
    pub region: RegionConfig,
    pub disease: DiseaseParams,
    pub behavior: BehaviorLevels,
    /// Level every agent starts at and returns to without a recommendation.
    pub baseline_level: u8,
    pub contacts: ContactParams,
    pub schedule: ScheduleParams,
    pub testing: TestingParams,
    pub hospital: HospitalParams,
    pub heuristic: HeuristicParams,
    pub self_isolation: SelfIsolation,
    pub household_follows_quarantine: bool,
    pub environmental: EnvironmentalParams,
    /// Maintain per-agent message clusters (costly, only needed for analysis).
    pub cluster_messages: bool,
    /// Log every encounter in the trace.
    pub record_encounters: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_days: 60,
            init_fraction_sick: 0.002,
            asymptomatic_fraction: 0.3,
            beta: 1.0,
            tracing_method: TracingMethod::None,
            adoption: 0.6,
            region: RegionConfig::default(),
            disease: DiseaseParams::default(),
            behavior: BehaviorLevels::default(),
            baseline_level: 1,
            contacts: ContactParams::default(),
            schedule: ScheduleParams::default(),
            testing: TestingParams::default(),
            hospital: HospitalParams::default(),
            heuristic: HeuristicParams::default(),
            self_isolation: SelfIsolation::default(),
            household_follows_quarantine: true,
            environmental: EnvironmentalParams::default(),
            cluster_messages: false,
            record_encounters: false,
        }
    }
}

fn unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::config(format!("{name} must lie in [0, 1]")));
    }
    Ok(())
}

impl SimConfig {
    pub fn from_yaml_str(s: &str) -> Result<Self> {
        serde_yaml::from_str(s).map_err(|e| Error::parse("simulation config", e))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_yaml_str(&s)
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("config serializes")
    }

    /// Applies a `dotted.key=value` override; the value is parsed as YAML.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{assignment}` is not key=value")))?;
        let value: serde_yaml::Value =
            serde_yaml::from_str(value).map_err(|e| Error::parse(format!("value for `{key}`"), e))?;
        let mut tree = serde_yaml::to_value(&*self).map_err(|e| Error::parse("config", e))?;
        let mut node = &mut tree;
        for part in key.split('.') {
            let map = node
                .as_mapping_mut()
                .ok_or_else(|| Error::config(format!("`{key}` does not name a config field")))?;
            node = map
                .get_mut(part)
                .ok_or_else(|| Error::config(format!("unknown config key `{key}`")))?;
        }
        *node = value;
        *self = serde_yaml::from_value(tree).map_err(|e| Error::parse(format!("override `{key}`"), e))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_days == 0 {
            return Err(Error::config("n_days must be at least 1"));
        }
        unit("init_fraction_sick", self.init_fraction_sick)?;
        unit("asymptomatic_fraction", self.asymptomatic_fraction)?;
        unit("adoption", self.adoption)?;
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::config("beta must lie in (0, 1]"));
        }
        if self.baseline_level >= self.behavior.quarantine() {
            return Err(Error::config("baseline_level must be below the quarantine level"));
        }
        if self.environmental.enabled && !(self.environmental.rate >= 0.0 && self.environmental.decay_days > 0.0) {
            return Err(Error::config("environmental rate must be non-negative and decay_days positive"));
        }
        self.region.validate()?;
        self.disease.validate()?;
        self.behavior.validate()?;
        self.testing.validate()?;
        self.hospital.validate()?;
        self.heuristic.validate()?;
        Ok(())
    }
}
