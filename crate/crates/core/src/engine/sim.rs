use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use super::config::SimConfig;
use super::trace::{AgentSummary, DailyRecord, InfectionEdge, SimTrace, TraceEvent, TraceSink, TRACE_SCHEMA};
use crate::dct::{
    bct_compute_risk, capture_encounter, cluster_inbox, expire_clusters, heuristic_compute_risk, propagate_updates,
    Cluster, EncounterMessage, HeuristicInputs, Hops, Mailbox, RiskHistory, TracingMethod, UpdateMessage,
    TOP_RECOMMENDATION,
};
use crate::disease::{
    covid_phase, flu_phase, maybe_transmit, sample_cold_symptoms, sample_covid_symptoms, sample_disease_course,
    sample_flu_symptoms, transmission_probability, DiseaseCourse, Illness, Person, Severity, Side, SymptomSet,
};
use crate::error::{Error, Result};
use crate::health::{
    positive_test_release, resolve_test, test_priority, Admission, HospitalSystem, Quarantine, QuarantineTrigger,
    TestHistory, TestOutcome, TestQueue, TestReason, TestRecord, TestRequest, Ward,
};
use crate::mobility::{
    attach_children, build_schedule, is_weekend, sample_contacts, ActivityMemory, Attendee, ContactCategory,
    ContactMatrices, ContactTally, DayContext, Encounter, Visit,
};
use crate::population::{assign_apps, generate_population, AgentId, LocationId, LocationKind, Population};
use crate::rng::{keyed, stream, Stream};

/// Picks `round(alpha * n)` distinct agents uniformly at random.
pub fn seed_infections(n_agents: usize, alpha: f64, rng: &mut impl Rng) -> Result<Vec<AgentId>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config("init_fraction_sick must lie in [0, 1]"));
    }
    let k = (alpha * n_agents as f64).round() as usize;
    if k > n_agents {
        return Err(Error::TooManySeeds {
            requested: k,
            available: n_agents,
        });
    }
    let mut ids: Vec<AgentId> = sample(rng, n_agents, k).into_iter().map(|i| AgentId(i as u32)).collect();
    ids.sort();
    Ok(ids)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Susceptible,
    Infected,
    Recovered,
    Dead,
}

#[derive(Debug, Clone)]
struct AgentState {
    status: Status,
    course: Option<DiseaseCourse>,
    infected_today: bool,
    gastro: bool,
    onset_seen: bool,
    background: Option<(Illness, u32, u32)>,
    /// Reported symptoms, index 0 is today.
    symptoms: Vec<SymptomSet>,
    memory: ActivityMemory,
    quarantine: Quarantine,
    policy_level: u8,
    risk: RiskHistory,
    mailbox: Mailbox,
    clusters: Vec<Cluster>,
    tests: TestHistory,
    last_test_request: Option<u32>,
    hospital: Option<(LocationId, Ward)>,
}

/// Location contamination: value at `since`, decaying linearly.
#[derive(Debug, Clone, Copy, Default)]
struct Contamination {
    level: f64,
    since: u32,
}

#[derive(Clone)]
pub struct Simulation {
    cfg: SimConfig,
    pop: Population,
    matrices: ContactMatrices,
    agents: Vec<AgentState>,
    summary: Vec<AgentSummary>,
    hospitals: HospitalSystem,
    queue: TestQueue,
    pending_results: Vec<TestRecord>,
    contamination: Vec<Contamination>,
    attendance: Vec<Vec<Attendee>>,
    tally: ContactTally,
    next_message: u64,
    day: u32,
    seeded: Vec<AgentId>,
    daily: Vec<DailyRecord>,
    edges: Vec<InfectionEdge>,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let mut pop = generate_population(&cfg.region, &mut stream(cfg.seed, Stream::Population))?;
        if cfg.tracing_method.uses_app() {
            assign_apps(&mut pop, cfg.adoption, &mut stream(cfg.seed, Stream::Apps));
        } else {
            assign_apps(&mut pop, 0.0, &mut stream(cfg.seed, Stream::Apps));
        }
        Self::with_population(cfg, pop)
    }

    /// Starts from a prebuilt population; app assignment is taken as given.
    pub fn with_population(cfg: SimConfig, pop: Population) -> Result<Self> {
        cfg.validate()?;
        let d_max = cfg.heuristic.d_max as usize;
        let baseline = cfg.baseline_level;
        let agents = pop
            .agents
            .iter()
            .map(|_| AgentState {
                status: Status::Susceptible,
                course: None,
                infected_today: false,
                gastro: false,
                onset_seen: false,
                background: None,
                symptoms: vec![SymptomSet::default(); d_max],
                memory: ActivityMemory::default(),
                quarantine: Quarantine::default(),
                policy_level: baseline,
                risk: RiskHistory::zeros(d_max),
                mailbox: Mailbox::default(),
                clusters: Vec::new(),
                tests: TestHistory::default(),
                last_test_request: None,
                hospital: None,
            })
            .collect();
        let summary = pop
            .agents
            .iter()
            .map(|a| AgentSummary {
                age: a.age,
                sex: Some(a.sex),
                has_app: a.has_app,
                ..Default::default()
            })
            .collect();
        let hospitals = HospitalSystem::new(&pop, &cfg.hospital);
        let n_loc = pop.locations.len();
        let mut sim = Self {
            matrices: ContactMatrices::default(),
            agents,
            summary,
            hospitals,
            queue: TestQueue::default(),
            pending_results: Vec::new(),
            contamination: vec![Contamination::default(); n_loc],
            attendance: vec![Vec::new(); n_loc],
            tally: ContactTally::default(),
            next_message: 0,
            day: 0,
            seeded: Vec::new(),
            daily: Vec::new(),
            edges: Vec::new(),
            cfg,
            pop,
        };
        sim.seeded = seed_infections(
            sim.pop.len(),
            sim.cfg.init_fraction_sick,
            &mut stream(sim.cfg.seed, Stream::Seeding),
        )?;
        Ok(sim)
    }

    pub fn population(&self) -> &Population {
        &self.pop
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn contact_tally(&self) -> &ContactTally {
        &self.tally
    }

    pub fn is_finished(&self) -> bool {
        self.day >= self.cfg.n_days
    }

    fn infect(&mut self, agent: AgentId, infector: Option<AgentId>, time: f64) {
        let a = &self.pop.agents[agent.idx()];
        let mut rng = keyed(self.cfg.seed, Stream::Disease, agent.0 as u64, 0);
        let course = sample_disease_course(a, time, self.cfg.asymptomatic_fraction, &self.cfg.disease, &mut rng);
        let st = &mut self.agents[agent.idx()];
        st.status = Status::Infected;
        st.course = Some(course);
        st.infected_today = true;
        let s = &mut self.summary[agent.idx()];
        s.exposure = Some(time);
        s.infector = infector;
        s.incubation_days = Some(course.incubation_days);
        s.infectiousness_onset = Some(course.infectiousness_onset);
        s.symptom_onset = (!course.asymptomatic).then_some(course.symptom_onset);
        s.recovery = Some(course.recovery);
        s.death = course.death;
        s.asymptomatic = course.asymptomatic;
        s.severity = course.severity;
        if let Some(src) = infector {
            self.edges.push(InfectionEdge {
                infector: src,
                infectee: agent,
                time,
            });
        }
    }

    fn quarantine(&mut self, agent: AgentId, trigger: QuarantineTrigger, from: u32, days: u32, sink: &mut dyn TraceSink) {
        self.quarantine_one(agent, trigger, from, days, sink);
        if trigger == QuarantineTrigger::HouseholdMember || !self.cfg.household_follows_quarantine {
            return;
        }
        let home = self.pop.agents[agent.idx()].household;
        if self.pop.location(home).kind != LocationKind::Household {
            return;
        }
        let until = self.agents[agent.idx()].quarantine.until;
        let members = self.pop.household_of(agent).to_vec();
        for m in members {
            if m != agent && until > from {
                self.quarantine_one(m, QuarantineTrigger::HouseholdMember, from, until - from, sink);
            }
        }
    }

    fn quarantine_one(&mut self, agent: AgentId, trigger: QuarantineTrigger, from: u32, days: u32, sink: &mut dyn TraceSink) {
        let st = &mut self.agents[agent.idx()];
        if st.status == Status::Dead {
            return;
        }
        let was_active = st.quarantine.is_active(from);
        if st.quarantine.apply(trigger, from, days) && !was_active {
            sink.record(&TraceEvent::Quarantine {
                agent,
                day: from,
                until: st.quarantine.until,
                trigger,
            });
        }
    }

    fn request_test(&mut self, agent: AgentId, severity: Option<Severity>, reason: TestReason) {
        let day = self.day;
        let st = &mut self.agents[agent.idx()];
        if st.status == Status::Dead {
            return;
        }
        let priority = test_priority(severity, reason, &self.cfg.testing);
        st.last_test_request = Some(day);
        self.queue.request(TestRequest {
            agent,
            request_day: day,
            priority,
            reason,
        });
    }

    fn recently_tested(&self, agent: AgentId) -> bool {
        let st = &self.agents[agent.idx()];
        self.queue.contains(agent)
            || st
                .last_test_request
                .is_some_and(|d| d + self.cfg.testing.request_ttl_days.unwrap_or(7) >= self.day)
            || st.tests.results.iter().any(|r| r.2 == TestOutcome::Positive)
    }

    /// Deaths, recoveries, admissions and arriving test results.
    fn health_phase(&mut self, sink: &mut dyn TraceSink) {
        let day = self.day;
        let t = day as f64;
        for i in 0..self.agents.len() {
            let id = AgentId(i as u32);
            self.agents[i].infected_today = false;
            if self.agents[i].status != Status::Infected {
                continue;
            }
            let c = self.agents[i].course.expect("infected agents have a course");
            if let Some(death) = c.death.filter(|d| *d <= t) {
                self.agents[i].status = Status::Dead;
                self.agents[i].hospital = None;
                self.hospitals.discharge(id);
                self.queue.cancel(id);
                sink.record(&TraceEvent::Death { agent: id, time: death });
                continue;
            }
            if c.death.is_none() && c.recovery <= t {
                self.agents[i].status = Status::Recovered;
                if self.agents[i].hospital.take().is_some() {
                    sink.record(&TraceEvent::Discharge { agent: id, day });
                }
                self.hospitals.discharge(id);
                sink.record(&TraceEvent::Recovery { agent: id, time: c.recovery });
                continue;
            }
            let due = c.hospital_admission.is_some_and(|a| a <= t);
            if due && self.agents[i].hospital.is_none() && !self.hospitals.waiting.iter().any(|w| w.0 == id) {
                if let Admission::Admitted { hospital, ward } = self.hospitals.admit(id, c.will_need_icu) {
                    self.agents[i].hospital = Some((hospital, ward));
                    sink.record(&TraceEvent::Admission { agent: id, day, hospital, ward });
                }
                if !self.recently_tested(id) {
                    self.request_test(id, Some(Severity::Severe), TestReason::Symptoms);
                }
            }
        }
        for (agent, hospital, ward) in self.hospitals.admit_waiting() {
            self.agents[agent.idx()].hospital = Some((hospital, ward));
            sink.record(&TraceEvent::Admission { agent, day, hospital, ward });
        }

        let (arrived, later): (Vec<_>, Vec<_>) = self.pending_results.drain(..).partition(|r| r.result_day <= day);
        self.pending_results = later;
        for rec in arrived {
            let a = rec.agent;
            if self.agents[a.idx()].status == Status::Dead {
                continue;
            }
            self.agents[a.idx()].tests.push(&rec);
            match rec.outcome {
                TestOutcome::Positive => {
                    let until = positive_test_release(day, self.cfg.testing.positive_isolation_days);
                    self.quarantine(a, QuarantineTrigger::PositiveTest, day, until - day, sink);
                }
                TestOutcome::Negative => {
                    let q = &mut self.agents[a.idx()].quarantine;
                    if q.trigger == Some(QuarantineTrigger::AwaitingResult) && q.until > day {
                        let old = q.until;
                        q.until = day;
                        // Members held only because of this wait go home too.
                        for m in self.pop.household_of(a).to_vec() {
                            let mq = &mut self.agents[m.idx()].quarantine;
                            if m != a && mq.trigger == Some(QuarantineTrigger::HouseholdMember) && mq.until == old {
                                mq.until = day;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Daily symptoms, test seeking and self-isolation. Returns each agent's
    /// illness severity today, if any.
    fn symptom_phase(&mut self, sink: &mut dyn TraceSink) -> Vec<Option<Severity>> {
        let day = self.day;
        let t = day as f64 + 0.5;
        let seed = self.cfg.seed;
        let mut out = vec![None; self.agents.len()];
        let mut seek = Vec::new();
        let mut isolate = Vec::new();
        for i in 0..self.agents.len() {
            let id = AgentId(i as u32);
            let a = &self.pop.agents[i];
            let st = &mut self.agents[i];
            st.symptoms.rotate_right(1);
            st.symptoms[0] = SymptomSet::default();
            if st.status == Status::Dead {
                continue;
            }
            let mut rng = keyed(seed, Stream::Symptoms, day as u64, i as u64);
            let mut today = SymptomSet::default();
            let mut severity = None;
            if let (Status::Infected, Some(c)) = (st.status, st.course.as_ref()) {
                if let Some(phase) = covid_phase(c, t) {
                    let who = Person {
                        age: a.age,
                        carefulness: a.carefulness,
                    };
                    today = sample_covid_symptoms(c, phase, who, &mut st.gastro, &mut rng);
                }
                if c.is_symptomatic_at(t) {
                    severity = c.severity;
                    if !st.onset_seen {
                        st.onset_seen = true;
                        let sev = c.severity.unwrap_or(Severity::Mild);
                        sink.record(&TraceEvent::SymptomOnset {
                            agent: id,
                            time: c.symptom_onset,
                            severity: sev,
                        });
                        if rng.random::<f64>() < self.cfg.testing.seek_probability(Some(sev)) {
                            seek.push((id, Some(sev)));
                        }
                    }
                    let si = &self.cfg.self_isolation;
                    if si.enabled && sev_at_least(c.severity, si.min_severity) && (a.has_app || !si.app_users_only) {
                        isolate.push(id);
                    }
                }
            }

            let dp = &self.cfg.disease;
            if st.background.is_some_and(|b| b.2 <= day) {
                st.background = None;
            }
            if st.background.is_none() {
                let u: f64 = rng.random();
                let started = if u < dp.flu_daily_hazard {
                    Some((Illness::Flu, dp.flu_days))
                } else if u < dp.flu_daily_hazard + dp.cold_daily_hazard {
                    Some((Illness::Cold, dp.cold_days))
                } else {
                    None
                };
                if let Some((ill, [lo, hi])) = started {
                    let len = rng.random_range(lo..=hi);
                    st.background = Some((ill, day, day + len));
                    let sev = if ill == Illness::Flu { Severity::Moderate } else { Severity::Mild };
                    if rng.random::<f64>() < self.cfg.testing.seek_probability(Some(sev)) {
                        seek.push((id, Some(sev)));
                    }
                }
            }
            if let Some((ill, start, end)) = st.background {
                let extra = match ill {
                    Illness::Flu => flu_phase(day, start, end).map(|p| sample_flu_symptoms(p, &mut rng)),
                    _ => Some(sample_cold_symptoms(&mut rng)),
                };
                today = today.union(extra.unwrap_or_default());
                let sev = if ill == Illness::Flu { Severity::Moderate } else { Severity::Mild };
                severity = severity.max(Some(sev));
            }
            st.symptoms[0] = today.closed();
            out[i] = severity;
        }
        for (id, sev) in seek {
            if !self.recently_tested(id) {
                self.request_test(id, sev, TestReason::Symptoms);
            }
        }
        for id in isolate {
            if !self.agents[id.idx()].quarantine.is_active(day) {
                let days = self.cfg.self_isolation.days;
                self.quarantine(id, QuarantineTrigger::SelfReport, day, days, sink);
            }
        }
        out
    }

    fn level_of(&self, i: usize, rng: &mut impl Rng) -> u8 {
        let st = &self.agents[i];
        let q = self.cfg.behavior.quarantine();
        let level = if st.quarantine.is_active(self.day) {
            q
        } else {
            st.policy_level
        };
        let drop = self.cfg.behavior.dropout.get(level as usize).copied().unwrap_or(0.0);
        if drop > 0.0 && rng.random::<f64>() < drop {
            0
        } else {
            level
        }
    }

    /// Builds schedules and per-location attendance; returns the level of every agent.
    fn mobility_phase(&mut self, severity: &[Option<Severity>]) -> Vec<u8> {
        let day = self.day;
        let seed = self.cfg.seed;
        let q = self.cfg.behavior.quarantine();
        let weekday = !is_weekend(day);
        let n = self.agents.len();
        let mut levels = vec![0u8; n];
        let mut schedules: Vec<Vec<Visit>> = vec![Vec::new(); n];
        for i in 0..n {
            if self.agents[i].status == Status::Dead {
                continue;
            }
            let mut rng = keyed(seed, Stream::Behavior, day as u64, i as u64);
            levels[i] = self.level_of(i, &mut rng);
            let ctx = DayContext {
                day,
                quarantined: levels[i] == q,
                hospital: self.agents[i].hospital.map(|h| h.0),
                severity: severity[i],
            };
            let mut rng = keyed(seed, Stream::Schedule, day as u64, i as u64);
            let agent = &self.pop.agents[i];
            schedules[i] = build_schedule(agent, &self.pop, &ctx, &mut self.agents[i].memory, &self.cfg.schedule, &mut rng);
        }

        for home in 0..self.pop.locations.len() {
            let loc = &self.pop.locations[home];
            if loc.kind != LocationKind::Household || loc.members.len() < 2 {
                continue;
            }
            let members = loc.members.clone();
            let mut local: Vec<Vec<Visit>> = members.iter().map(|m| std::mem::take(&mut schedules[m.idx()])).collect();
            let free: Vec<bool> = members
                .iter()
                .map(|m| self.agents[m.idx()].status != Status::Dead && levels[m.idx()] != q && self.agents[m.idx()].hospital.is_none())
                .collect();
            let mut rng = keyed(seed, Stream::Schedule, day as u64, (1u64 << 32) | home as u64);
            attach_children(&self.pop, &members, &mut local, &free, &self.cfg.schedule, &mut rng);
            if weekday {
                self.supervise(&members, &mut local, &levels, severity);
            }
            for (m, s) in members.iter().zip(local) {
                schedules[m.idx()] = s;
            }
        }

        for a in &mut self.attendance {
            a.clear();
        }
        for (i, sched) in schedules.iter().enumerate() {
            if self.agents[i].status == Status::Dead {
                continue;
            }
            self.account_work(i, sched, levels[i], severity[i]);
            let agent = &self.pop.agents[i];
            let bin = agent.age_bin();
            let level = if self.agents[i].hospital.is_some() { self.cfg.baseline_level } else { levels[i] };
            for v in sched {
                let cat = ContactCategory::of(self.pop.location(v.location).kind);
                self.attendance[v.location.idx()].push(Attendee {
                    agent: agent.id,
                    bin,
                    start: v.start,
                    end: v.end,
                    gamma: self.cfg.behavior.gamma(level, cat),
                });
            }
        }
        levels
    }

    /// On weekdays an adult stays home with a school child kept home by
    /// quarantine or illness.
    fn supervise(&mut self, members: &[AgentId], local: &mut [Vec<Visit>], levels: &[u8], severity: &[Option<Severity>]) {
        let q = self.cfg.behavior.quarantine();
        let needs = members.iter().any(|m| {
            let a = &self.pop.agents[m.idx()];
            let st = &self.agents[m.idx()];
            a.needs_supervision()
                && a.workplace.is_some_and(|w| self.pop.location(w).kind == LocationKind::School)
                && st.status != Status::Dead
                && st.hospital.is_none()
                && (levels[m.idx()] == q || severity[m.idx()].is_some())
        });
        if !needs {
            return;
        }
        let is_work = |pop: &Population, v: &Visit| {
            matches!(pop.location(v.location).kind, LocationKind::Workplace | LocationKind::Hospital)
        };
        let adults: Vec<usize> = (0..members.len())
            .filter(|&k| {
                let a = &self.pop.agents[members[k].idx()];
                a.age >= 18 && self.agents[members[k].idx()].status != Status::Dead && self.agents[members[k].idx()].hospital.is_none()
            })
            .collect();
        if adults.iter().any(|&k| !local[k].iter().any(|v| is_work(&self.pop, v))) {
            return;
        }
        let Some(&k) = adults.first() else {
            return;
        };
        let home = self.pop.agents[members[k].idx()].household;
        let mut hours = 0.0;
        for v in local[k].iter_mut() {
            if is_work(&self.pop, v) {
                hours += v.hours() as f64;
                v.location = home;
            }
        }
        self.summary[members[k].idx()].supervision_work_hours += hours;
    }

    fn account_work(&mut self, i: usize, sched: &[Visit], level: u8, severity: Option<Severity>) {
        let agent = &self.pop.agents[i];
        let Some(w) = agent.workplace else {
            return;
        };
        let kind = self.pop.location(w).kind;
        if !matches!(kind, LocationKind::Workplace | LocationKind::Hospital) || is_weekend(self.day) {
            return;
        }
        let st = &self.agents[i];
        let s = &mut self.summary[i];
        if level == self.cfg.behavior.quarantine() && st.hospital.is_none() {
            s.quarantine_days += 1;
        }
        if sched.iter().any(|v| v.location == w) {
            return;
        }
        let [a, b] = self.cfg.schedule.work_hours;
        let hours = b.saturating_sub(a) as f64;
        if st.hospital.is_some() || (severity.is_some() && level != self.cfg.behavior.quarantine()) {
            s.illness_work_hours += hours;
        } else if level == self.cfg.behavior.quarantine() {
            s.quarantine_work_hours += hours;
        }
    }

    fn contact_phase(&self) -> Vec<Encounter> {
        let day = self.day;
        let seed = self.cfg.seed;
        let beta = self.cfg.beta;
        let per_location: Vec<Vec<Encounter>> = self
            .attendance
            .par_iter()
            .enumerate()
            .map(|(l, att)| {
                if att.len() < 2 {
                    return Vec::new();
                }
                let loc = &self.pop.locations[l];
                let m = self.matrices.get(ContactCategory::of(loc.kind));
                let mut rng = keyed(seed, Stream::Contacts, day as u64, l as u64);
                sample_contacts(loc.id, att, m, beta * loc.social_contact_factor, &self.cfg.contacts, day, &mut rng)
            })
            .collect();
        per_location.into_iter().flatten().collect()
    }

    fn side(&self, id: AgentId) -> Side<'_> {
        let st = &self.agents[id.idx()];
        match st.status {
            Status::Susceptible => Side::Susceptible {
                age_bin: self.pop.agents[id.idx()].age_bin(),
            },
            Status::Infected if !st.infected_today => Side::Infected(st.course.as_ref().expect("course")),
            _ => Side::Immune,
        }
    }

    fn transmission_phase(&mut self, encounters: &[Encounter], sink: &mut dyn TraceSink) -> u32 {
        let mut rng = keyed(self.cfg.seed, Stream::Transmission, self.day as u64, 0);
        let mut new = 0;
        for e in encounters {
            let kind = self.pop.location(e.location).kind;
            let inf = maybe_transmit(e, kind, self.side(e.a), self.side(e.b), &self.cfg.disease.transmission, &mut rng);
            if let Some(inf) = inf {
                self.infect(inf.infectee, Some(inf.infector), inf.time);
                sink.record(&TraceEvent::Infection {
                    infector: Some(inf.infector),
                    infectee: inf.infectee,
                    time: inf.time,
                    location: e.location,
                    kind,
                });
                new += 1;
            }
        }
        if self.cfg.environmental.enabled {
            new += self.environmental_phase(sink);
        }
        new
    }

    fn environmental_phase(&mut self, sink: &mut dyn TraceSink) -> u32 {
        let day = self.day;
        let t = day as f64 + 0.5;
        let env = self.cfg.environmental.clone();
        let mut rng = keyed(self.cfg.seed, Stream::Transmission, day as u64, 1);
        let mut new = 0;
        for l in 0..self.attendance.len() {
            let fresh: f64 = self.attendance[l]
                .iter()
                .filter_map(|a| {
                    let st = &self.agents[a.agent.idx()];
                    (st.status == Status::Infected && !st.infected_today)
                        .then(|| st.course.as_ref().expect("course").viral_load.eval(t) * (a.end - a.start) as f64 / 24.0)
                })
                .sum();
            let c = &mut self.contamination[l];
            let current = c.level * (1.0 - (day - c.since) as f64 / env.decay_days).max(0.0);
            if fresh > current {
                *c = Contamination { level: fresh, since: day };
            }
            let level = fresh.max(current);
            if level <= 0.0 {
                continue;
            }
            let kind = self.pop.locations[l].kind;
            for k in 0..self.attendance[l].len() {
                let a = self.attendance[l][k];
                let st = &self.agents[a.agent.idx()];
                if st.status != Status::Susceptible {
                    continue;
                }
                let s_a = self.cfg.disease.transmission.susceptibility[a.bin];
                let p = transmission_probability(env.rate * s_a * level * (a.end - a.start) as f64);
                if rng.random::<f64>() < p {
                    let time = day as f64 + (a.start as f64 + 0.5 * (a.end - a.start) as f64) / 24.0;
                    self.infect(a.agent, None, time);
                    sink.record(&TraceEvent::Infection {
                        infector: None,
                        infectee: a.agent,
                        time,
                        location: LocationId(l as u32),
                        kind,
                    });
                    new += 1;
                }
            }
        }
        new
    }

    fn testing_phase(&mut self, sink: &mut dyn TraceSink) -> u32 {
        let day = self.day;
        let capacity = self.cfg.testing.daily_capacity(self.pop.len());
        let (served, _expired) = self.queue.process(day, capacity, self.cfg.testing.request_ttl_days);
        let mut rng = keyed(self.cfg.seed, Stream::Testing, day as u64, 0);
        let mut n = 0;
        for req in served {
            let st = &self.agents[req.agent.idx()];
            if st.status == Status::Dead {
                continue;
            }
            let since = match (st.status, st.course.as_ref()) {
                (Status::Infected, Some(c)) => Some(c.exposure),
                _ => None,
            };
            let rec = resolve_test(&req, day, since, &self.cfg.testing, &mut rng);
            sink.record(&TraceEvent::Test(rec));
            let wait = rec.result_day - day;
            if wait > 0 {
                self.quarantine(req.agent, QuarantineTrigger::AwaitingResult, day + 1, wait, sink);
            }
            self.pending_results.push(rec);
            n += 1;
        }
        n
    }

    /// Message exchange, risk recomputation and update propagation.
    fn tracing_phase(&mut self, encounters: &[Encounter], severity: &[Option<Severity>], sink: &mut dyn TraceSink, rec: &mut DailyRecord) {
        let method = self.cfg.tracing_method;
        if !method.uses_app() {
            return;
        }
        let day = self.day;
        let d_max = self.cfg.heuristic.d_max;
        let clustering = self.cfg.cluster_messages;
        let mut fresh: Vec<Vec<EncounterMessage>> = if clustering { vec![Vec::new(); self.agents.len()] } else { Vec::new() };
        let mut rng = keyed(self.cfg.seed, Stream::Bluetooth, day as u64, 0);
        for e in encounters {
            let (a, b) = (&self.pop.agents[e.a.idx()], &self.pop.agents[e.b.idx()]);
            if capture_encounter(e, (a.has_app, b.has_app), (a.bluetooth_noise, b.bluetooth_noise), &mut rng).is_none() {
                continue;
            }
            rec.captured_encounters += 1;
            for (from, to) in [(e.a, e.b), (e.b, e.a)] {
                let msg = EncounterMessage {
                    id: self.next_message,
                    encounter_day: day,
                    risk: self.agents[from.idx()].risk.today(),
                };
                self.next_message += 1;
                self.agents[from.idx()].mailbox.record_sent(&msg, to);
                self.agents[to.idx()].mailbox.receive(&msg, day);
                if clustering {
                    fresh[to.idx()].push(msg);
                }
                rec.messages_sent += 1;
            }
        }

        let hops = if method == TracingMethod::Bct2 { Hops::Two } else { Hops::One };
        let mut zetas = vec![0u8; self.agents.len()];
        for i in 0..self.agents.len() {
            if !self.pop.agents[i].has_app || self.agents[i].status == Status::Dead {
                continue;
            }
            let st = &self.agents[i];
            let tests = st.tests.view(day, d_max as usize, self.cfg.testing.negative_visibility_days);
            let (risk, zeta) = match method {
                TracingMethod::Heuristic => {
                    let inp = HeuristicInputs {
                        today: day,
                        tests: &tests,
                        symptoms: &st.symptoms,
                        messages: &st.mailbox.inbox,
                        previous: &st.risk,
                    };
                    heuristic_compute_risk(&inp, &self.cfg.heuristic)
                }
                _ => bct_compute_risk(day, &tests, &st.mailbox.inbox, hops, d_max),
            };
            self.agents[i].risk = risk;
            zetas[i] = zeta;
        }

        let mut updates: Vec<(AgentId, UpdateMessage)> = Vec::new();
        for i in 0..self.agents.len() {
            if self.pop.agents[i].has_app && self.agents[i].status != Status::Dead {
                let st = &mut self.agents[i];
                updates.extend(propagate_updates(&mut st.mailbox.outgoing, &st.risk, day));
            }
        }
        rec.updates_sent = updates.len() as u64;
        let mut by_receiver: Vec<Vec<UpdateMessage>> = if clustering { vec![Vec::new(); self.agents.len()] } else { Vec::new() };
        for (to, u) in updates {
            if !self.agents[to.idx()].mailbox.apply_update(&u) {
                rec.dropped_updates += 1;
            }
            if clustering {
                by_receiver[to.idx()].push(u);
            }
        }
        for i in 0..self.agents.len() {
            let st = &mut self.agents[i];
            st.mailbox.expire(day + 1, d_max);
            if clustering {
                let stats = cluster_inbox(&mut st.clusters, &fresh[i], &by_receiver[i]);
                rec.dropped_updates += stats.dropped_updates as u64;
                expire_clusters(&mut st.clusters, day + 1, d_max);
                rec.clusters += st.clusters.len() as u64;
            }
        }

        for i in 0..self.agents.len() {
            if !self.pop.agents[i].has_app || self.agents[i].status == Status::Dead {
                continue;
            }
            let id = AgentId(i as u32);
            let zeta = zetas[i];
            self.agents[i].policy_level = self.cfg.behavior.from_recommendation(zeta, TOP_RECOMMENDATION);
            if zeta >= TOP_RECOMMENDATION {
                self.quarantine(id, QuarantineTrigger::AppRecommendation, day + 1, 1, sink);
            }
            let wants_test = match method {
                TracingMethod::Heuristic => zeta >= 2,
                _ => zeta >= TOP_RECOMMENDATION,
            };
            if wants_test && !self.recently_tested(id) {
                let mut r = keyed(self.cfg.seed, Stream::Testing, day as u64, 1 + i as u64);
                if r.random::<f64>() < self.cfg.testing.app_seek_test_prob {
                    self.request_test(id, severity[i], TestReason::AppRecommendation);
                }
            }
        }
    }

    fn daily_record(&mut self, levels: &[u8], rec: &mut DailyRecord) {
        let t_end = self.day as f64 + 1.0;
        let mut level_sum = 0u64;
        for (i, st) in self.agents.iter().enumerate() {
            match st.status {
                Status::Susceptible => rec.susceptible += 1,
                Status::Infected => {
                    let c = st.course.as_ref().expect("course");
                    if t_end <= c.infectiousness_onset {
                        rec.exposed += 1;
                    } else {
                        rec.infectious += 1;
                    }
                }
                Status::Recovered => rec.recovered += 1,
                Status::Dead => rec.dead += 1,
            }
            if st.status == Status::Dead {
                continue;
            }
            rec.alive += 1;
            level_sum += levels[i] as u64;
            if st.quarantine.is_active(self.day) {
                rec.quarantined += 1;
            }
            let s = &mut self.summary[i];
            match st.hospital {
                Some((_, Ward::Icu)) => {
                    rec.icu += 1;
                    rec.hospitalized += 1;
                    s.icu_days += 1;
                }
                Some(_) => {
                    rec.hospitalized += 1;
                    s.hospital_days += 1;
                }
                None => {
                    if let (Status::Infected, Some(c)) = (st.status, st.course.as_ref()) {
                        if c.is_symptomatic_at(self.day as f64 + 0.5) {
                            s.symptomatic_days += 1;
                        }
                    }
                }
            }
        }
        rec.mean_level = if rec.alive > 0 { level_sum as f64 / rec.alive as f64 } else { 0.0 };
        rec.test_queue = self.queue.len() as u32;
    }

    /// Advances one day.
    pub fn step(&mut self, sink: &mut dyn TraceSink) {
        let day = self.day;
        let mut rec = DailyRecord {
            day,
            ..Default::default()
        };
        if day == 0 {
            for id in self.seeded.clone() {
                self.infect(id, None, 0.0);
                sink.record(&TraceEvent::Seed { agent: id, time: 0.0 });
            }
            rec.new_infections += self.seeded.len() as u32;
        }
        self.health_phase(sink);
        let severity = self.symptom_phase(sink);
        let levels = self.mobility_phase(&severity);
        let encounters = self.contact_phase();
        rec.encounters = encounters.len() as u64;
        for e in &encounters {
            let (ba, bb) = (self.pop.agents[e.a.idx()].age_bin(), self.pop.agents[e.b.idx()].age_bin());
            self.tally.record(ContactCategory::of(self.pop.location(e.location).kind), ba, bb);
        }
        for (i, st) in self.agents.iter().enumerate() {
            if st.status != Status::Dead {
                self.tally.add_person_days(self.pop.agents[i].age_bin(), 1);
            }
        }
        if self.cfg.record_encounters {
            for e in &encounters {
                sink.record(&TraceEvent::Encounter(*e));
            }
        }
        rec.new_infections += self.transmission_phase(&encounters, sink);
        rec.tests = self.testing_phase(sink);
        rec.positive_tests = self
            .pending_results
            .iter()
            .filter(|r| r.test_day == day && r.outcome == TestOutcome::Positive)
            .count() as u32;
        self.tracing_phase(&encounters, &severity, sink, &mut rec);
        self.daily_record(&levels, &mut rec);
        sink.record(&TraceEvent::Daily(rec.clone()));
        self.daily.push(rec);
        self.day += 1;
    }

    pub fn finish(self) -> SimTrace {
        SimTrace {
            schema: TRACE_SCHEMA.to_string(),
            seed: self.cfg.seed,
            method: self.cfg.tracing_method,
            beta: self.cfg.beta,
            adoption: if self.cfg.tracing_method.uses_app() { self.cfg.adoption } else { 0.0 },
            n_days: self.cfg.n_days,
            population: self.pop.len(),
            seeded: self.seeded,
            daily: self.daily,
            agents: self.summary,
            infections: self.edges,
        }
    }
}

fn sev_at_least(s: Option<Severity>, min: Severity) -> bool {
    s.is_some_and(|s| s >= min)
}

/// Runs a full simulation, streaming events to `sink`.
pub fn run_simulation(config: &SimConfig, sink: &mut dyn TraceSink) -> Result<SimTrace> {
    let mut sim = Simulation::new(config.clone())?;
    while !sim.is_finished() {
        sim.step(sink);
    }
    Ok(sim.finish())
}
