//! Case curves, the reproduction-number estimate and summary epidemiology.

use serde::{Deserialize, Serialize};

use crate::engine::{AgentSummary, InfectionTree, SimTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyMetrics {
    pub day: u32,
    pub daily_cases_pct: f64,
    pub cumulative_cases_pct: f64,
    pub prevalence_pct: f64,
    pub incidence_per_1000_susceptible: f64,
    pub mean_contacts: f64,
    pub mean_captured_contacts: f64,
    pub rhat: Option<f64>,
}

impl DailyMetrics {
    pub fn csv_header() -> &'static str {
        "day,daily_cases_pct,cumulative_cases_pct,prevalence_pct,incidence_per_1000_susceptible,mean_contacts,\
         mean_captured_contacts,rhat"
    }

    pub fn csv_row(&self) -> String {
        let rhat = self.rhat.map(|r| format!("{r:.6}")).unwrap_or_default();
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            self.day,
            self.daily_cases_pct,
            self.cumulative_cases_pct,
            self.prevalence_pct,
            self.incidence_per_1000_susceptible,
            self.mean_contacts,
            self.mean_captured_contacts,
            rhat
        )
    }
}

/// Whether an agent counts as a finished parent at time `t`.
fn is_parent(a: &AgentSummary, t: f64, include_dead: bool) -> bool {
    match (a.death, a.recovery) {
        (Some(d), _) => include_dead && d <= t,
        (None, Some(r)) => r <= t,
        _ => false,
    }
}

/// Mean number of children over agents whose infection has ended by time `t`.
/// `None` when nobody has finished yet.
pub fn rhat(tree: &InfectionTree, agents: &[AgentSummary], t: f64, include_dead: bool) -> Option<f64> {
    let mut parents = 0usize;
    let mut children = 0usize;
    for a in tree.nodes() {
        if is_parent(&agents[a.idx()], t, include_dead) {
            parents += 1;
            children += tree.children(a).len();
        }
    }
    (parents > 0).then(|| children as f64 / parents as f64)
}

/// R̂ at the end of the run.
pub fn final_rhat(trace: &SimTrace) -> Option<f64> {
    let tree = InfectionTree::from_trace(trace).ok()?;
    rhat(&tree, &trace.agents, trace.n_days as f64, true)
}

pub fn case_curves(trace: &SimTrace) -> Vec<DailyMetrics> {
    let n = trace.population.max(1) as f64;
    let tree = InfectionTree::from_trace(trace).ok();
    let mut cumulative = 0u64;
    trace
        .daily
        .iter()
        .map(|d| {
            cumulative += d.new_infections as u64;
            let s_start = d.susceptible + d.new_infections;
            let alive = d.alive.max(1) as f64;
            DailyMetrics {
                day: d.day,
                daily_cases_pct: 100.0 * d.new_infections as f64 / n,
                cumulative_cases_pct: 100.0 * cumulative as f64 / n,
                prevalence_pct: 100.0 * (d.exposed + d.infectious) as f64 / n,
                incidence_per_1000_susceptible: if s_start > 0 {
                    1000.0 * d.new_infections as f64 / s_start as f64
                } else {
                    0.0
                },
                mean_contacts: 2.0 * d.encounters as f64 / alive,
                mean_captured_contacts: 2.0 * d.captured_encounters as f64 / alive,
                rhat: tree.as_ref().and_then(|t| rhat(t, &trace.agents, d.day as f64 + 1.0, true)),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpiStatistics {
    pub n_infections: usize,
    pub n_transmissions: usize,
    pub incubation: Option<f64>,
    pub infectiousness_onset: Option<f64>,
    pub recovery: Option<f64>,
    pub generation_time: Option<f64>,
    pub daily_contacts: Option<f64>,
    /// Transmissions before the infector's symptom onset, over all transmissions.
    pub presymptomatic_fraction: Option<f64>,
    /// Transmissions after the infector's symptom onset, over all transmissions.
    pub symptomatic_fraction: Option<f64>,
    /// Transmissions by never-symptomatic infectors, over all transmissions.
    pub asymptomatic_fraction: Option<f64>,
    /// Before onset, over transmissions by infectors who develop symptoms.
    pub presymptomatic_of_symptomatic: Option<f64>,
    /// Fewer infections than the reliable minimum.
    pub partial: bool,
}

pub const MIN_INFECTIONS: usize = 100;

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

pub fn epi_statistics(trace: &SimTrace) -> EpiStatistics {
    let infected: Vec<&AgentSummary> = trace.agents.iter().filter(|a| a.was_infected()).collect();
    let mut st = EpiStatistics {
        n_infections: infected.len(),
        n_transmissions: trace.infections.len(),
        partial: infected.len() < MIN_INFECTIONS,
        ..Default::default()
    };
    st.incubation = mean(infected.iter().filter_map(|a| a.incubation_days));
    st.infectiousness_onset = mean(infected.iter().filter_map(|a| Some(a.infectiousness_onset? - a.exposure?)));
    st.recovery = mean(
        infected
            .iter()
            .filter(|a| a.death.is_none())
            .filter_map(|a| Some(a.recovery? - a.exposure?)),
    );
    st.generation_time = mean(
        trace
            .infections
            .iter()
            .filter_map(|e| Some(trace.agents[e.infectee.idx()].exposure? - trace.agents[e.infector.idx()].exposure?)),
    );
    st.daily_contacts = mean(trace.daily.iter().map(|d| 2.0 * d.encounters as f64 / d.alive.max(1) as f64));

    let (mut pre, mut post, mut asym) = (0usize, 0usize, 0usize);
    for e in &trace.infections {
        let src = &trace.agents[e.infector.idx()];
        match src.symptom_onset {
            None => asym += 1,
            Some(on) if e.time < on => pre += 1,
            Some(_) => post += 1,
        }
    }
    let total = pre + post + asym;
    if pre + post > 0 {
        st.presymptomatic_of_symptomatic = Some(pre as f64 / (pre + post) as f64);
    }
    if total > 0 {
        let t = total as f64;
        st.presymptomatic_fraction = Some(pre as f64 / t);
        st.symptomatic_fraction = Some(post as f64 / t);
        st.asymptomatic_fraction = Some(asym as f64 / t);
    }
    st
}
