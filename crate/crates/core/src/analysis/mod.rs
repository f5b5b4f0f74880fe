//! Cross-run comparison: Pareto fits, R̂ advantage and cost accounting.

pub mod bootstrap;
pub mod cost;
pub mod gp;
pub mod pareto;

pub use bootstrap::{bootstrap, mean_of, MeanSe};
pub use cost::{
    age_bin, agent_daly, compute_dalys, compute_tpl, icer, tpl_from_hours, CostParams, Daly, DalyReport, DwTable, Icer,
    LifeTable, Tpl,
};
pub use gp::{GpConfig, GpFit, GpHyper};
pub use pareto::{delta_rhat, delta_rhat_fn, delta_rhat_with_ci, first_crossing, quantile, DeltaRhat};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dct::TracingMethod;
use crate::engine::SimTrace;
use crate::error::Result;
use crate::metrics::final_rhat;
use crate::population::N_AGE_BINS;

/// One run reduced to the numbers the comparison needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPoint {
    pub method: TracingMethod,
    pub beta: f64,
    pub adoption: f64,
    pub seed: u64,
    /// Mean daily contacts per living agent.
    pub contacts: f64,
    pub captured_contacts: f64,
    pub rhat: Option<f64>,
    pub final_infected: f64,
}

impl RunPoint {
    pub fn from_trace(t: &SimTrace) -> Self {
        let days = t.daily.len().max(1) as f64;
        let per_agent = |n: u64, alive: u32| 2.0 * n as f64 / alive.max(1) as f64;
        Self {
            method: t.method,
            beta: t.beta,
            adoption: t.adoption,
            seed: t.seed,
            contacts: t.daily.iter().map(|d| per_agent(d.encounters, d.alive)).sum::<f64>() / days,
            captured_contacts: t
                .daily
                .iter()
                .map(|d| per_agent(d.captured_encounters, d.alive))
                .sum::<f64>()
                / days,
            rhat: final_rhat(t),
            final_infected: t.final_fraction_infected(),
        }
    }
}

/// GP fit of R̂ against contacts over one method's runs.
pub fn fit_pareto(points: &[RunPoint], cfg: &GpConfig) -> Result<GpFit> {
    let xy: Vec<(f64, f64)> = points.iter().filter_map(|p| Some((p.contacts, p.rhat?))).collect();
    GpFit::fit(&xy, cfg)
}

/// Burden and cost of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCost {
    pub daly: Daly,
    pub daly_by_age: Vec<f64>,
    pub daly_male: f64,
    pub daly_female: f64,
    pub tpl: Tpl,
}

impl RunCost {
    pub fn from_trace(t: &SimTrace, life: &LifeTable, p: &CostParams) -> Self {
        let d = compute_dalys(t, life, &p.dw);
        Self {
            daly: d.total,
            daly_by_age: d.by_age.iter().map(Daly::total).collect(),
            daly_male: d.male.total(),
            daly_female: d.female.total(),
            tpl: compute_tpl(t, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCosts {
    pub method: TracingMethod,
    pub runs: usize,
    pub yll: MeanSe,
    pub yld: MeanSe,
    pub dalys: MeanSe,
    pub tpl: MeanSe,
    pub dalys_by_age: Vec<MeanSe>,
    pub dalys_male: MeanSe,
    pub dalys_female: MeanSe,
    /// Against the baseline method; `None` for the baseline itself.
    pub icer: Option<Icer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapParams {
    pub resamples: usize,
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for BootstrapParams {
    fn default() -> Self {
        Self {
            resamples: 100,
            sample_size: 6,
            seed: 0,
        }
    }
}

pub fn method_costs(method: TracingMethod, runs: &[RunCost], b: &BootstrapParams) -> Result<MethodCosts> {
    let mut rng = ChaCha8Rng::seed_from_u64(b.seed);
    let mut bs = |f: &dyn Fn(&RunCost) -> f64| bootstrap(runs, mean_of(f), b.resamples, b.sample_size, &mut rng);
    Ok(MethodCosts {
        method,
        runs: runs.len(),
        yll: bs(&|r| r.daly.yll)?,
        yld: bs(&|r| r.daly.yld)?,
        dalys: bs(&|r| r.daly.total())?,
        tpl: bs(&|r| r.tpl.total)?,
        dalys_by_age: (0..N_AGE_BINS)
            .map(|k| bs(&|r: &RunCost| r.daly_by_age[k]))
            .collect::<Result<_>>()?,
        dalys_male: bs(&|r| r.daly_male)?,
        dalys_female: bs(&|r| r.daly_female)?,
        icer: None,
    })
}

/// Fills in each method's ICER against `baseline`.
pub fn attach_icers(table: &mut [MethodCosts], baseline: TracingMethod) {
    let Some(base) = table.iter().find(|m| m.method == baseline).map(|m| (m.dalys.mean, m.tpl.mean)) else {
        return;
    };
    for m in table.iter_mut() {
        m.icer = (m.method != baseline).then(|| icer((m.dalys.mean, m.tpl.mean), base));
    }
}
