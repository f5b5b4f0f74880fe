//! Synthetic population: agents, dwellings, schools, workplaces and the
//! shared "other" locations agents visit.

mod config;

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{HouseholdComposition, OtherLocationDensity, RegionConfig, SchoolGroup, SexTable};

pub const N_AGE_BINS: usize = 9;
/// Children below this age need an adult from their household when away from school.
pub const SUPERVISION_AGE: u32 = 14;
const CHILD_AGE: u32 = 18;

pub fn age_bin(age: u32) -> usize {
    ((age / 10) as usize).min(N_AGE_BINS - 1)
}

pub fn age_bin_label(bin: usize) -> String {
    if bin + 1 == N_AGE_BINS {
        format!("{}+", bin * 10)
    } else {
        format!("{}-{}", bin * 10, bin * 10 + 9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LocationId(pub u32);

impl AgentId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl LocationId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    HeartDisease,
    Stroke,
    Asthma,
    Copd,
    Cancer,
    Diabetes,
    #[serde(rename = "obesity_1_2")]
    Obesity12,
    #[serde(rename = "obesity_3")]
    Obesity3,
    Ckd,
    Asplenia,
    Immunosuppression,
    Smoking,
}

impl Condition {
    pub const ALL: [Condition; 12] = [
        Condition::HeartDisease,
        Condition::Stroke,
        Condition::Asthma,
        Condition::Copd,
        Condition::Cancer,
        Condition::Diabetes,
        Condition::Obesity12,
        Condition::Obesity3,
        Condition::Ckd,
        Condition::Asplenia,
        Condition::Immunosuppression,
        Condition::Smoking,
    ];

    fn bit(self) -> u16 {
        1 << (self as u16)
    }
}

/// Bit set over [`Condition`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConditionSet(u16);

impl ConditionSet {
    pub fn contains(self, c: Condition) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn insert(&mut self, c: Condition) {
        self.0 |= c.bit();
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Condition> {
        Condition::ALL.into_iter().filter(move |c| self.contains(*c))
    }
}

impl FromIterator<Condition> for ConditionSet {
    fn from_iter<I: IntoIterator<Item = Condition>>(iter: I) -> Self {
        let mut s = ConditionSet::default();
        for c in iter {
            s.insert(c);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationKind {
    Household,
    SeniorResidence,
    /// Daytime gathering room attached to a senior residence.
    CommonRoom,
    Workplace,
    School,
    Hospital,
    Store,
    Park,
    Restaurant,
}

impl LocationKind {
    pub const ALL: [LocationKind; 9] = [
        LocationKind::Household,
        LocationKind::SeniorResidence,
        LocationKind::CommonRoom,
        LocationKind::Workplace,
        LocationKind::School,
        LocationKind::Hospital,
        LocationKind::Store,
        LocationKind::Park,
        LocationKind::Restaurant,
    ];

    pub fn is_home(self) -> bool {
        matches!(self, LocationKind::Household | LocationKind::SeniorResidence)
    }

    pub fn name(self) -> &'static str {
        match self {
            LocationKind::Household => "household",
            LocationKind::SeniorResidence => "senior_residence",
            LocationKind::CommonRoom => "common_room",
            LocationKind::Workplace => "workplace",
            LocationKind::School => "school",
            LocationKind::Hospital => "hospital",
            LocationKind::Store => "store",
            LocationKind::Park => "park",
            LocationKind::Restaurant => "restaurant",
        }
    }
}

impl fmt::Display for LocationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub age: u32,
    pub sex: Sex,
    pub conditions: ConditionSet,
    pub carefulness: f64,
    pub household: LocationId,
    /// Workplace, school, common room or hospital the agent attends on weekdays.
    pub workplace: Option<LocationId>,
    pub has_smartphone: bool,
    pub has_app: bool,
    pub bluetooth_noise: f64,
}

impl Agent {
    pub fn age_bin(&self) -> usize {
        age_bin(self.age)
    }

    pub fn needs_supervision(&self) -> bool {
        self.age < SUPERVISION_AGE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: LocationId,
    pub kind: LocationKind,
    pub social_contact_factor: f64,
    pub capacity: Option<u32>,
    /// Residents, pupils or staff. Empty for stores, parks and restaurants.
    pub members: Vec<AgentId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub agents: Vec<Agent>,
    pub locations: Vec<Location>,
    pub hospitals: Vec<LocationId>,
    pub stores: Vec<LocationId>,
    pub parks: Vec<LocationId>,
    pub restaurants: Vec<LocationId>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agent(&self, id: AgentId) -> &Agent {
        &self.agents[id.idx()]
    }

    pub fn location(&self, id: LocationId) -> &Location {
        &self.locations[id.idx()]
    }

    pub fn household_of(&self, id: AgentId) -> &[AgentId] {
        &self.locations[self.agents[id.idx()].household.idx()].members
    }

    pub fn homes(&self) -> impl Iterator<Item = &Location> {
        self.locations.iter().filter(|l| l.kind.is_home())
    }

    pub fn set_contact_factors(&mut self, factor: impl Fn(LocationKind) -> f64) {
        for loc in &mut self.locations {
            loc.social_contact_factor = factor(loc.kind);
        }
    }

    fn add_location(&mut self, kind: LocationKind, capacity: Option<u32>) -> LocationId {
        let id = LocationId(self.locations.len() as u32);
        let factor = if kind.is_home() { 2.0 } else { 1.0 };
        self.locations.push(Location {
            id,
            kind,
            social_contact_factor: factor,
            capacity,
            members: Vec::new(),
        });
        id
    }

    fn add_locations(&mut self, kind: LocationKind, n: usize) -> Vec<LocationId> {
        (0..n).map(|_| self.add_location(kind, None)).collect()
    }
}

fn bernoulli(rng: &mut impl Rng, p: f64) -> bool {
    p > 0.0 && rng.random::<f64>() < p
}

fn sample_age(rng: &mut impl Rng, bin: usize) -> u32 {
    let base = (bin * 10) as u32;
    if bin + 1 == N_AGE_BINS {
        base + rng.random_range(0..20)
    } else {
        base + rng.random_range(0..10)
    }
}

/// Pools of not-yet-housed agents by age group, each pre-shuffled.
struct Pools {
    kids: Vec<AgentId>,
    adults: Vec<AgentId>,
    seniors: Vec<AgentId>,
}

impl Pools {
    fn remaining(&self) -> usize {
        self.kids.len() + self.adults.len() + self.seniors.len()
    }

    fn take_first(&mut self, order: [u8; 3]) -> Option<AgentId> {
        for p in order {
            let pool = match p {
                0 => &mut self.kids,
                1 => &mut self.adults,
                _ => &mut self.seniors,
            };
            if let Some(a) = pool.pop() {
                return Some(a);
            }
        }
        None
    }

    fn adult(&mut self) -> Option<AgentId> {
        self.take_first([1, 2, 0])
    }

    fn kid(&mut self) -> Option<AgentId> {
        self.take_first([0, 1, 2])
    }

    fn any(&mut self, rng: &mut impl Rng) -> Option<AgentId> {
        let n = self.remaining();
        if n == 0 {
            return None;
        }
        let mut k = rng.random_range(0..n);
        for pool in [&mut self.kids, &mut self.adults, &mut self.seniors] {
            if k < pool.len() {
                return Some(pool.swap_remove(k));
            }
            k -= pool.len();
        }
        unreachable!()
    }
}

/// Builds agents, dwellings and activity locations from `config`.
pub fn generate_population(config: &RegionConfig, rng: &mut impl Rng) -> Result<Population> {
    config.validate()?;
    let n = config.population_size;
    let mut pop = Population::default();
    if n == 0 {
        return Ok(pop);
    }
    let size_dist = WeightedIndex::new(&config.household_size_distribution)
        .map_err(|e| Error::config(format!("household_size_distribution: {e}")))?;
    let age_dist = WeightedIndex::new(&config.age_distribution)
        .map_err(|e| Error::config(format!("age_distribution: {e}")))?;

    for i in 0..n {
        let bin = age_dist.sample(rng);
        let age = sample_age(rng, bin);
        let sex = if bernoulli(rng, config.male_fraction_per_bin[bin]) {
            Sex::Male
        } else {
            Sex::Female
        };
        let mut conditions = ConditionSet::default();
        for (cond, table) in &config.condition_prevalence {
            let p = match sex {
                Sex::Male => table.male[bin],
                Sex::Female => table.female[bin],
            };
            if bernoulli(rng, p) {
                conditions.insert(*cond);
            }
        }
        let shift = config.carefulness_age_slope * (age as f64 - 40.0) / 40.0;
        let carefulness = (rng.random::<f64>() + shift).clamp(0.0, 1.0);
        let has_smartphone = bernoulli(rng, config.smartphone_ownership_per_age_bin[bin]);
        pop.agents.push(Agent {
            id: AgentId(i as u32),
            age,
            sex,
            conditions,
            carefulness,
            household: LocationId(u32::MAX),
            workplace: None,
            has_smartphone,
            has_app: false,
            bluetooth_noise: 0.0,
        });
    }

    // Senior residences.
    let mut seniors: Vec<AgentId> = pop
        .agents
        .iter()
        .filter(|a| a.age >= config.senior_residence_age)
        .map(|a| a.id)
        .collect();
    seniors.shuffle(rng);
    let n_residents = (config.senior_residence_fraction * seniors.len() as f64).round() as usize;
    let residents: Vec<AgentId> = seniors.drain(..n_residents).collect();
    if !residents.is_empty() {
        let n_res = residents.len().div_ceil(config.senior_residence_size);
        let homes = pop.add_locations(LocationKind::SeniorResidence, n_res);
        let rooms = pop.add_locations(LocationKind::CommonRoom, n_res);
        for (k, a) in residents.iter().enumerate() {
            let r = k % n_res;
            pop.locations[homes[r].idx()].members.push(*a);
            pop.locations[rooms[r].idx()].members.push(*a);
            let agent = &mut pop.agents[a.idx()];
            agent.household = homes[r];
            agent.workplace = Some(rooms[r]);
        }
    }

    // Private households.
    let mut pools = Pools {
        kids: Vec::new(),
        adults: Vec::new(),
        seniors: Vec::new(),
    };
    for a in &pop.agents {
        if a.household.0 != u32::MAX {
            continue;
        }
        if a.age < CHILD_AGE {
            pools.kids.push(a.id);
        } else if a.age < 65 {
            pools.adults.push(a.id);
        } else {
            pools.seniors.push(a.id);
        }
    }
    pools.kids.shuffle(rng);
    pools.adults.shuffle(rng);
    pools.seniors.shuffle(rng);
    let comp = &config.household_composition;
    let comp_dist = WeightedIndex::new([comp.couple_with_kids, comp.single_parent_with_kids, comp.random])
        .map_err(|e| Error::config(format!("household_composition: {e}")))?;
    while pools.remaining() > 0 {
        let size = (size_dist.sample(rng) + 1).min(pools.remaining());
        let mut members = Vec::with_capacity(size);
        if size == 1 {
            members.extend(pools.adult());
        } else {
            let n_adults = match comp_dist.sample(rng) {
                0 => 2,
                1 => 1,
                _ => 0,
            };
            if n_adults == 0 {
                for _ in 0..size {
                    members.extend(pools.any(rng));
                }
            } else {
                for _ in 0..n_adults {
                    members.extend(pools.adult());
                }
                while members.len() < size {
                    members.extend(pools.kid());
                }
            }
        }
        let ages = |m: &[AgentId]| m.iter().map(|a| pop.agents[a.idx()].age).collect::<Vec<_>>();
        let a = ages(&members);
        let has_young = a.iter().any(|&x| x < SUPERVISION_AGE);
        let has_supervisor = a.iter().any(|&x| x > SUPERVISION_AGE);
        if has_young && !has_supervisor {
            if let Some(adult) = pools.adults.pop().or_else(|| pools.seniors.pop()) {
                let k = members.len() - 1;
                pools.kids.push(members[k]);
                members[k] = adult;
            }
        }
        let home = pop.add_location(LocationKind::Household, Some(members.len() as u32));
        for m in &members {
            pop.agents[m.idx()].household = home;
        }
        pop.locations[home.idx()].members = members;
    }

    // Schools.
    let mut students = vec![false; n];
    for g in &config.school_groups {
        let mut group: Vec<AgentId> = Vec::new();
        for a in &pop.agents {
            if a.workplace.is_none() && !students[a.id.idx()] && (g.min_age..g.max_age).contains(&a.age) {
                if bernoulli(rng, g.fraction) {
                    group.push(a.id);
                }
            }
        }
        if group.is_empty() {
            continue;
        }
        group.shuffle(rng);
        let n_schools = group.len().div_ceil(config.school_size);
        let schools = pop.add_locations(LocationKind::School, n_schools);
        for (k, a) in group.iter().enumerate() {
            let s = schools[k % n_schools];
            students[a.idx()] = true;
            pop.agents[a.idx()].workplace = Some(s);
            pop.locations[s.idx()].members.push(*a);
        }
    }

    // Hospitals, staffed from the working-age population.
    let n_hospitals = ((n as f64 * config.hospitals_per_100k / 1e5).round() as usize).max(1);
    pop.hospitals = pop.add_locations(LocationKind::Hospital, n_hospitals);
    let [emp_min, emp_max] = config.employment_age_range;
    let mut workers: Vec<AgentId> = pop
        .agents
        .iter()
        .filter(|a| a.workplace.is_none() && a.age >= emp_min && a.age < emp_max)
        .map(|a| a.id)
        .collect();
    workers.shuffle(rng);
    let n_staff = ((n as f64 * config.hospital_staff_fraction).round() as usize).min(workers.len());
    for (k, a) in workers.drain(..n_staff).enumerate() {
        let h = pop.hospitals[k % n_hospitals];
        pop.agents[a.idx()].workplace = Some(h);
        pop.locations[h.idx()].members.push(a);
    }
    if !workers.is_empty() {
        let n_work = workers.len().div_ceil(config.workplace_size);
        let offices = pop.add_locations(LocationKind::Workplace, n_work);
        for a in workers {
            let w = offices[rng.random_range(0..n_work)];
            pop.agents[a.idx()].workplace = Some(w);
            pop.locations[w.idx()].members.push(a);
        }
    }

    let count = |per_1000: f64| ((n as f64 * per_1000 / 1000.0).round() as usize).max(1);
    let o = &config.other_locations_per_1000;
    pop.stores = pop.add_locations(LocationKind::Store, count(o.store));
    pop.parks = pop.add_locations(LocationKind::Park, count(o.park));
    pop.restaurants = pop.add_locations(LocationKind::Restaurant, count(o.restaurant));
    for loc in &mut pop.locations {
        loc.members.sort_unstable();
    }
    Ok(pop)
}

/// Installs the tracing app on smartphone owners with probability `uptake`.
///
/// Every agent consumes the same draws whatever the uptake, so app users at a
/// lower uptake are a subset of those at a higher one under the same seed.
pub fn assign_apps(population: &mut Population, uptake: f64, rng: &mut impl Rng) {
    let uptake = uptake.clamp(0.0, 1.0);
    for agent in &mut population.agents {
        let u: f64 = rng.random();
        agent.bluetooth_noise = rng.random();
        agent.has_app = agent.has_smartphone && u < uptake;
    }
}
