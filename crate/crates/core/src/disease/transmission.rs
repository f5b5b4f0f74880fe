use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::disease::{DiseaseCourse, Severity};
use crate::error::{Error, Result};
use crate::mobility::Encounter;
use crate::population::{AgentId, LocationKind, N_AGE_BINS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Infectiousness {
    pub asymptomatic: f64,
    pub mild: f64,
    pub moderate: f64,
    pub severe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionParams {
    /// Overall scale, the one free calibration constant.
    pub r: f64,
    pub susceptibility: [f64; N_AGE_BINS],
    pub infectiousness: Infectiousness,
    pub location_factor: BTreeMap<LocationKind, f64>,
    /// Normalizer for the infectiousness of an average case.
    pub mean_infectiousness: f64,
    pub min_duration_min: u16,
}

impl TransmissionParams {
    pub fn validate(&self) -> Result<()> {
        let i = &self.infectiousness;
        let all = self
            .susceptibility
            .iter()
            .copied()
            .chain([i.asymptomatic, i.mild, i.moderate, i.severe])
            .chain(self.location_factor.values().copied())
            .chain([self.mean_infectiousness]);
        for v in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config("transmission constants must be positive"));
            }
        }
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::config("transmission.r must be non-negative"));
        }
        Ok(())
    }

    pub fn location_factor(&self, kind: LocationKind) -> f64 {
        self.location_factor.get(&kind).copied().unwrap_or(1.0)
    }

    pub fn infectiousness_ratio(&self, severity: Option<Severity>) -> f64 {
        let i = &self.infectiousness;
        match severity {
            None => i.asymptomatic,
            Some(Severity::Mild) => i.mild,
            Some(Severity::Moderate) => i.moderate,
            Some(Severity::Severe) => i.severe,
        }
    }

    /// Hazard of one contact: `r * S_a * A_s * B_n / I_bar * integral`.
    pub fn hazard(&self, s_a: f64, a_s: f64, b_n: f64, evl_integral: f64) -> f64 {
        self.r * s_a * a_s * b_n * evl_integral / self.mean_infectiousness
    }
}

/// `1 - exp(-lambda)`.
pub fn transmission_probability(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        0.0
    } else {
        -(-lambda).exp_m1()
    }
}

/// A successful transmission, to be applied by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Infection {
    pub infector: AgentId,
    pub infectee: AgentId,
    /// Days since the start of the simulation.
    pub time: f64,
    pub location: LocationKind,
}

/// State of an encounter endpoint as seen by the transmission step.
#[derive(Debug, Clone, Copy)]
pub enum Side<'a> {
    Susceptible { age_bin: usize },
    Infected(&'a DiseaseCourse),
    Immune,
}

/// Resolves one encounter. Only an encounter of at least the minimum duration
/// between an infected and a susceptible agent can transmit.
pub fn maybe_transmit(
    enc: &Encounter,
    kind: LocationKind,
    a: Side<'_>,
    b: Side<'_>,
    params: &TransmissionParams,
    rng: &mut impl Rng,
) -> Option<Infection> {
    if enc.duration_min < params.min_duration_min {
        return None;
    }
    let (infector, course, infectee, bin) = match (a, b) {
        (Side::Infected(c), Side::Susceptible { age_bin }) => (enc.a, c, enc.b, age_bin),
        (Side::Susceptible { age_bin }, Side::Infected(c)) => (enc.b, c, enc.a, age_bin),
        _ => return None,
    };
    let t0 = enc.day as f64 + enc.start_min as f64 / 1440.0;
    let t1 = t0 + enc.duration_min as f64 / 1440.0;
    let integral = course.viral_load.integral(t0, t1);
    if integral <= 0.0 {
        return None;
    }
    let lambda = params.hazard(
        params.susceptibility[bin],
        params.infectiousness_ratio(course.severity),
        params.location_factor(kind),
        integral,
    );
    let p = transmission_probability(lambda);
    let u: f64 = rng.random();
    (u < p).then(|| Infection {
        infector,
        infectee,
        time: 0.5 * (t0 + t1),
        location: kind,
    })
}
