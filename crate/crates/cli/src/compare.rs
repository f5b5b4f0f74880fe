use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use ctsim_core::analysis::{
    attach_icers, delta_rhat_with_ci, fit_pareto, method_costs, BootstrapParams, CostParams, GpConfig, GpFit,
    LifeTable, MethodCosts, RunCost, RunPoint,
};
use ctsim_core::TracingMethod;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::files::{csv_bytes, json_bytes, write_atomic};
use crate::run::read_trace;
use crate::svg;
use crate::sweep::Manifest;
use crate::require_file;

#[derive(Args)]
pub struct CompareArgs {
    /// Manifest written by `sweep`.
    pub manifest: PathBuf,
    /// Method the others are measured against.
    #[arg(long, default_value = "none")]
    pub baseline: TracingMethod,
    /// Output directory [default: <manifest dir>/compare]
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Posterior draws for ΔR̂ intervals.
    #[arg(long, default_value_t = 200)]
    pub draws: usize,
    /// YAML with `cost`, `bootstrap` and `gp` sections.
    #[arg(long)]
    pub analysis_config: Option<PathBuf>,
    /// Life-expectancy CSV (age, remaining years).
    #[arg(long)]
    pub life_table: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub cost: CostParams,
    pub bootstrap: BootstrapParams,
    pub gp: GpConfig,
}

#[derive(Serialize)]
struct PointRow<'a> {
    method: &'a str,
    beta: f64,
    adoption: f64,
    seed: u64,
    contacts: f64,
    captured_contacts: f64,
    rhat: Option<f64>,
    final_infected: f64,
}

#[derive(Serialize)]
struct FitRow<'a> {
    method: &'a str,
    contacts: f64,
    mean: f64,
    lower: f64,
    upper: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaRow {
    /// Method whose break-even contact level is used.
    pub method: TracingMethod,
    pub over: TracingMethod,
    pub crossing: Option<f64>,
    pub delta_rhat: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
}

#[derive(Serialize)]
struct CostRow<'a> {
    method: &'a str,
    runs: usize,
    dalys: f64,
    dalys_se: f64,
    yll: f64,
    yld: f64,
    tpl: f64,
    tpl_se: f64,
    icer: String,
}

#[derive(Serialize)]
struct AgeRow<'a> {
    method: &'a str,
    age_group: String,
    dalys: f64,
    dalys_se: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    baseline: TracingMethod,
    delta_rhat: &'a [DeltaRow],
    costs: &'a [MethodCosts],
    warnings: &'a [String],
}

struct Group {
    points: Vec<RunPoint>,
    costs: Vec<RunCost>,
}

pub fn cmd_compare(a: CompareArgs) -> Result<()> {
    let manifest = Manifest::load(&a.manifest)?;
    let acfg: AnalysisConfig = match &a.analysis_config {
        Some(p) => {
            require_file(p)?;
            serde_yaml::from_str(&std::fs::read_to_string(p)?).with_context(|| format!("parsing {}", p.display()))?
        }
        None => AnalysisConfig::default(),
    };
    acfg.cost.validate()?;
    let life = match &a.life_table {
        Some(p) => {
            require_file(p)?;
            LifeTable::from_csv(&std::fs::read_to_string(p)?)?
        }
        None => LifeTable::default(),
    };

    let paths = manifest.done_traces(&a.manifest);
    let per_run: Vec<(RunPoint, RunCost)> = paths
        .par_iter()
        .map(|p| {
            let t = read_trace(p)?;
            Ok((RunPoint::from_trace(&t), RunCost::from_trace(&t, &life, &acfg.cost)))
        })
        .collect::<Result<_>>()?;
    let mut groups: BTreeMap<TracingMethod, Group> = BTreeMap::new();
    for (p, c) in per_run {
        let g = groups.entry(p.method).or_insert_with(|| Group { points: Vec::new(), costs: Vec::new() });
        g.points.push(p);
        g.costs.push(c);
    }
    if groups.len() < 2 || !groups.contains_key(&a.baseline) {
        bail!(
            "need completed runs for at least two methods including the baseline `{}`; found: {}",
            a.baseline.name(),
            groups.keys().map(|m| m.name()).collect::<Vec<_>>().join(", ")
        );
    }
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| a.manifest.parent().unwrap_or(std::path::Path::new(".")).join("compare"));
    let mut warnings = Vec::new();

    // Pareto points and fits.
    let mut point_rows = Vec::new();
    for (m, g) in &groups {
        for p in &g.points {
            point_rows.push(PointRow {
                method: m.name(),
                beta: p.beta,
                adoption: p.adoption,
                seed: p.seed,
                contacts: p.contacts,
                captured_contacts: p.captured_contacts,
                rhat: p.rhat,
                final_infected: p.final_infected,
            });
        }
    }
    let mut fits: BTreeMap<TracingMethod, GpFit> = BTreeMap::new();
    for (m, g) in &groups {
        match fit_pareto(&g.points, &acfg.gp) {
            Ok(f) => {
                fits.insert(*m, f);
            }
            Err(e) => warnings.push(format!("{}: no Pareto fit ({e})", m.name())),
        }
    }
    let mut fit_rows = Vec::new();
    let mut series = Vec::new();
    for (m, f) in &fits {
        let (lo, hi) = f.x_range();
        let mut curve = Vec::new();
        for i in 0..=100 {
            let x = lo + (hi - lo) * i as f64 / 100.0;
            let (mean, sd) = (f.mean(x), f.variance(x).sqrt());
            fit_rows.push(FitRow { method: m.name(), contacts: x, mean, lower: mean - 1.96 * sd, upper: mean + 1.96 * sd });
            curve.push((x, mean));
        }
        series.push(svg::Series { name: m.name(), points: f.points().collect(), curve });
    }

    // ΔR̂ for every ordered pair with fits.
    let mut deltas = Vec::new();
    for (ma, fa) in &fits {
        for (mb, fb) in &fits {
            if ma == mb {
                continue;
            }
            let d = delta_rhat_with_ci(fa, fb, a.draws, acfg.gp.seed)?;
            if d.is_none() {
                warnings.push(format!("{} vs {}: R̂ of {} never crosses 1 in the shared range", ma.name(), mb.name(), ma.name()));
            }
            deltas.push(DeltaRow {
                method: *ma,
                over: *mb,
                crossing: d.as_ref().map(|d| d.crossing),
                delta_rhat: d.as_ref().map(|d| d.delta),
                ci_lower: d.as_ref().and_then(|d| d.ci.map(|c| c.0)),
                ci_upper: d.as_ref().and_then(|d| d.ci.map(|c| c.1)),
            });
        }
    }

    // Costs.
    let mut costs = Vec::new();
    for (m, g) in &groups {
        if g.costs.len() < 2 {
            warnings.push(format!("{}: fewer than 2 runs, no cost estimate", m.name()));
            continue;
        }
        let b = BootstrapParams { sample_size: acfg.bootstrap.sample_size.min(g.costs.len()), ..acfg.bootstrap.clone() };
        costs.push(method_costs(*m, &g.costs, &b)?);
    }
    attach_icers(&mut costs, a.baseline);
    let cost_rows: Vec<CostRow> = costs
        .iter()
        .map(|c| CostRow {
            method: c.method.name(),
            runs: c.runs,
            dalys: c.dalys.mean,
            dalys_se: c.dalys.se,
            yll: c.yll.mean,
            yld: c.yld.mean,
            tpl: c.tpl.mean,
            tpl_se: c.tpl.se,
            icer: c.icer.map_or_else(|| "REF".to_string(), |i| i.to_string()),
        })
        .collect();
    let mut age_rows = Vec::new();
    for c in &costs {
        for (k, v) in c.dalys_by_age.iter().enumerate() {
            let label = if k + 1 == c.dalys_by_age.len() { format!("{}+", 10 * k) } else { format!("{}-{}", 10 * k, 10 * k + 9) };
            age_rows.push(AgeRow { method: c.method.name(), age_group: label, dalys: v.mean, dalys_se: v.se });
        }
    }

    write_atomic(&out.join("points.csv"), &csv_bytes(&point_rows)?)?;
    write_atomic(&out.join("pareto_fit.csv"), &csv_bytes(&fit_rows)?)?;
    write_atomic(&out.join("delta_rhat.csv"), &csv_bytes(&deltas)?)?;
    write_atomic(&out.join("costs.csv"), &csv_bytes(&cost_rows)?)?;
    write_atomic(&out.join("dalys_by_age.csv"), &csv_bytes(&age_rows)?)?;
    let chart = svg::chart("Contacts vs R̂", "mean daily contacts", "R̂", &series, Some(1.0));
    write_atomic(&out.join("pareto.svg"), chart.as_bytes())?;
    let report = Report { baseline: a.baseline, delta_rhat: &deltas, costs: &costs, warnings: &warnings };
    write_atomic(&out.join("report.json"), &json_bytes(&report)?)?;

    for d in deltas.iter().filter(|d| d.over == a.baseline || d.method != a.baseline) {
        if let Some(v) = d.delta_rhat {
            println!("ΔR̂ {} over {}: {v:.4}", d.method.name(), d.over.name());
        }
    }
    for r in &cost_rows {
        println!("{}: DALYs {:.2} ± {:.2}, TPL {:.0} ± {:.0}, ICER {}", r.method, r.dalys, r.dalys_se, r.tpl, r.tpl_se, r.icer);
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {}", out.display());
    Ok(())
}
