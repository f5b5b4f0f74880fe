use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use ctsim_core::engine::{run_simulation, JsonlSink, NullSink, SimTrace};
use ctsim_core::metrics::{case_curves, epi_statistics, final_rhat, DailyMetrics, EpiStatistics};
use serde::Serialize;

use crate::files::{json_bytes, write_atomic};
use crate::{load_config, out_root, require_file, ConfigArgs};

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: $CTSIM_OUT/run-<method>-s<seed>]
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Also write the full event stream as JSON lines.
    #[arg(long)]
    pub events: bool,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    method: &'a str,
    seed: u64,
    population: usize,
    final_fraction_infected: f64,
    rhat: Option<f64>,
    epi: EpiStatistics,
}

pub fn metrics_csv(rows: &[DailyMetrics]) -> String {
    let mut s = String::from(DailyMetrics::csv_header());
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

pub fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = load_config(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let dir = a
        .out
        .unwrap_or_else(|| out_root(None).join(format!("run-{}-s{}", cfg.tracing_method.name(), cfg.seed)));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let trace = if a.events {
        let mut sink = JsonlSink::new(Vec::new())?;
        let t = run_simulation(&cfg, &mut sink)?;
        write_atomic(&dir.join("events.jsonl"), &sink.finish()?)?;
        t
    } else {
        run_simulation(&cfg, &mut NullSink)?
    };

    let mut json = Vec::new();
    trace.write_json(&mut json)?;
    write_atomic(&dir.join("trace.json"), &json)?;
    write_atomic(&dir.join("daily.csv"), trace.daily_csv().as_bytes())?;
    write_atomic(&dir.join("metrics.csv"), metrics_csv(&case_curves(&trace)).as_bytes())?;
    write_atomic(&dir.join("config.yaml"), cfg.to_yaml().as_bytes())?;
    let summary = RunSummary {
        method: cfg.tracing_method.name(),
        seed: cfg.seed,
        population: trace.population,
        final_fraction_infected: trace.final_fraction_infected(),
        rhat: final_rhat(&trace),
        epi: epi_statistics(&trace),
    };
    write_atomic(&dir.join("summary.json"), &json_bytes(&summary)?)?;
    println!(
        "{}: seed {} infected {:.4} R̂ {} -> {}",
        summary.method,
        summary.seed,
        summary.final_fraction_infected,
        summary.rhat.map_or("n/a".into(), |r| format!("{r:.3}")),
        dir.display()
    );
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<SimTrace> {
    require_file(path)?;
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    SimTrace::read_json(BufReader::new(f)).with_context(|| format!("reading trace {}", path.display()))
}

#[derive(Args)]
pub struct EpiStatsArgs {
    /// Trace files written by `run` or `sweep`.
    pub traces: Vec<PathBuf>,
    /// Use every completed trace in a sweep manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct EpiReport {
    runs: Vec<(String, EpiStatistics)>,
    mean: EpiStatistics,
}

fn mean_of(v: &[EpiStatistics], f: impl Fn(&EpiStatistics) -> Option<f64>) -> Option<f64> {
    let xs: Vec<f64> = v.iter().filter_map(f).collect();
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn cmd_epi_stats(a: EpiStatsArgs) -> Result<()> {
    let mut paths = a.traces;
    if let Some(m) = &a.manifest {
        paths.extend(crate::sweep::Manifest::load(m)?.done_traces(m));
    }
    anyhow::ensure!(!paths.is_empty(), "no traces given");
    let runs: Vec<(String, EpiStatistics)> = paths
        .iter()
        .map(|p| Ok((p.display().to_string(), epi_statistics(&read_trace(p)?))))
        .collect::<Result<_>>()?;
    let stats: Vec<EpiStatistics> = runs.iter().map(|r| r.1.clone()).collect();
    let mean = EpiStatistics {
        n_infections: stats.iter().map(|s| s.n_infections).sum::<usize>() / stats.len(),
        n_transmissions: stats.iter().map(|s| s.n_transmissions).sum::<usize>() / stats.len(),
        incubation: mean_of(&stats, |s| s.incubation),
        infectiousness_onset: mean_of(&stats, |s| s.infectiousness_onset),
        recovery: mean_of(&stats, |s| s.recovery),
        generation_time: mean_of(&stats, |s| s.generation_time),
        daily_contacts: mean_of(&stats, |s| s.daily_contacts),
        presymptomatic_fraction: mean_of(&stats, |s| s.presymptomatic_fraction),
        symptomatic_fraction: mean_of(&stats, |s| s.symptomatic_fraction),
        asymptomatic_fraction: mean_of(&stats, |s| s.asymptomatic_fraction),
        presymptomatic_of_symptomatic: mean_of(&stats, |s| s.presymptomatic_of_symptomatic),
        partial: stats.iter().any(|s| s.partial),
    };
    print!("{}", String::from_utf8(json_bytes(&EpiReport { runs, mean })?)?);
    Ok(())
}
