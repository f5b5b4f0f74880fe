use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{AgentId, LocationId, Population};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HospitalParams {
    pub beds_per_1000: f64,
    pub icu_beds_per_1000: f64,
}

impl Default for HospitalParams {
    fn default() -> Self {
        Self {
            beds_per_1000: 2.8,
            icu_beds_per_1000: 0.29,
        }
    }
}

impl HospitalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beds_per_1000 >= 0.0 && self.icu_beds_per_1000 >= 0.0) {
            return Err(Error::config("hospital bed densities must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ward {
    General,
    Icu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HospitalState {
    pub hospital_id: LocationId,
    pub beds: usize,
    pub icu_beds: usize,
    pub patients: Vec<(AgentId, Ward)>,
    pub staff: Vec<AgentId>,
}

impl HospitalState {
    pub fn occupancy(&self, ward: Ward) -> usize {
        self.patients.iter().filter(|p| p.1 == ward).count()
    }

    fn capacity(&self, ward: Ward) -> usize {
        match ward {
            Ward::General => self.beds,
            Ward::Icu => self.icu_beds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Admission {
    Admitted { hospital: LocationId, ward: Ward },
    Deferred,
}

/// All hospitals of a region plus patients waiting for a bed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HospitalSystem {
    pub hospitals: Vec<HospitalState>,
    pub waiting: VecDeque<(AgentId, bool)>,
}

impl HospitalSystem {
    pub fn new(pop: &Population, params: &HospitalParams) -> Self {
        let n = pop.hospitals.len().max(1);
        let per = |rate: f64| ((pop.len() as f64 * rate / 1000.0 / n as f64).round() as usize).max(1);
        let hospitals = pop
            .hospitals
            .iter()
            .map(|h| HospitalState {
                hospital_id: *h,
                beds: per(params.beds_per_1000),
                icu_beds: per(params.icu_beds_per_1000),
                patients: Vec::new(),
                staff: pop.location(*h).members.clone(),
            })
            .collect();
        Self {
            hospitals,
            waiting: VecDeque::new(),
        }
    }

    fn place(&mut self, agent: AgentId, needs_icu: bool) -> Option<(LocationId, Ward)> {
        let order: &[Ward] = if needs_icu { &[Ward::Icu, Ward::General] } else { &[Ward::General] };
        for &ward in order {
            let best = self
                .hospitals
                .iter_mut()
                .filter(|h| h.occupancy(ward) < h.capacity(ward))
                .min_by_key(|h| h.occupancy(ward));
            if let Some(h) = best {
                h.patients.push((agent, ward));
                return Some((h.hospital_id, ward));
            }
        }
        None
    }

    /// Admits a patient, or queues them until a bed frees up.
    pub fn admit(&mut self, agent: AgentId, needs_icu: bool) -> Admission {
        if self.is_admitted(agent) {
            return Admission::Deferred;
        }
        match self.place(agent, needs_icu) {
            Some((hospital, ward)) => Admission::Admitted { hospital, ward },
            None => {
                if !self.waiting.iter().any(|w| w.0 == agent) {
                    self.waiting.push_back((agent, needs_icu));
                }
                Admission::Deferred
            }
        }
    }

    pub fn is_admitted(&self, agent: AgentId) -> bool {
        self.hospitals.iter().any(|h| h.patients.iter().any(|p| p.0 == agent))
    }

    pub fn discharge(&mut self, agent: AgentId) {
        for h in &mut self.hospitals {
            h.patients.retain(|p| p.0 != agent);
        }
        self.waiting.retain(|w| w.0 != agent);
    }

    /// Moves waiting patients into freed beds, in arrival order.
    pub fn admit_waiting(&mut self) -> Vec<(AgentId, LocationId, Ward)> {
        let mut admitted = Vec::new();
        let mut still = VecDeque::new();
        while let Some((agent, icu)) = self.waiting.pop_front() {
            match self.place(agent, icu) {
                Some((h, w)) => admitted.push((agent, h, w)),
                None => still.push_back((agent, icu)),
            }
        }
        self.waiting = still;
        admitted
    }
}
