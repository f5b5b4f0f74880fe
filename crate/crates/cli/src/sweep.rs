use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{bail, Context, Result};
use clap::Args;
use ctsim_core::engine::{run_simulation, NullSink};
use ctsim_core::{SimConfig, TracingMethod};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::files::{json_bytes, write_atomic};
use crate::{load_config, out_root, require_file, ConfigArgs};

pub const MANIFEST_SCHEMA: &str = "ctsim-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

/// A grid axis: explicit values or an inclusive `start:stop:step` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

fn tidy(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Axis::Values(v) => Ok(v.clone()),
            Axis::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    bail!("range {start}:{stop}:{step} is empty or has a non-positive step");
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..n).map(|i| tidy(start + step * i as f64)).collect())
            }
        }
    }

    fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| p.trim().parse::<f64>().with_context(|| format!("bad number `{p}` in `{s}`"));
        match parts.as_slice() {
            [start, stop, step] => Ok(Axis::Range { start: num(start)?, stop: num(stop)?, step: num(step)? }),
            _ => Ok(Axis::Values(s.split(',').map(num).collect::<Result<_>>()?)),
        }
    }
}

/// Seeds as a list or a half-open `from..to` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { from: u64, to: u64 },
}

impl Seeds {
    pub fn values(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { from, to } => (*from..*to).collect(),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        if let Some((a, b)) = s.split_once("..") {
            return Ok(Seeds::Range { from: a.trim().parse()?, to: b.trim().parse()? });
        }
        Ok(Seeds::List(s.split(',').map(|p| p.trim().parse()).collect::<Result<_, _>>()?))
    }
}

/// Experiment grid as read from a YAML spec file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Base config, relative to the spec file.
    pub config: Option<PathBuf>,
    pub set: Vec<String>,
    pub methods: Vec<TracingMethod>,
    pub betas: Option<Axis>,
    pub adoptions: Option<Axis>,
    pub seeds: Option<Seeds>,
    pub jobs: Option<usize>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// YAML experiment spec; flags below override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Tracing methods, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<TracingMethod>,
    /// β values as `a,b,c` or `start:stop:step`.
    #[arg(long)]
    pub beta: Option<String>,
    /// Adoption rates as `a,b,c` or `start:stop:step`.
    #[arg(long)]
    pub adoption: Option<String>,
    /// Seeds as `a,b,c` or `from..to`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output directory [default: $CTSIM_OUT/sweep]
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: available cores]
    #[arg(short, long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: TracingMethod,
    pub beta: f64,
    pub adoption: f64,
    pub seed: u64,
    /// Relative to the manifest's directory.
    pub trace: String,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    /// Overrides applied on top of the base config, in order.
    pub overrides: Vec<String>,
    /// The resolved base config every cell started from.
    pub base_config: String,
    pub cells: Vec<Cell>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        require_file(path)?;
        let s = std::fs::read_to_string(path)?;
        let m: Manifest = serde_json::from_str(&s).with_context(|| format!("parsing {}", path.display()))?;
        if m.schema != MANIFEST_SCHEMA {
            bail!("{}: unsupported manifest schema `{}`", path.display(), m.schema);
        }
        Ok(m)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        json_bytes(self)
    }

    /// Paths of completed traces.
    pub fn done_traces(&self, manifest_path: &Path) -> Vec<PathBuf> {
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        self.cells
            .iter()
            .filter(|c| c.status == CellStatus::Done)
            .map(|c| dir.join(&c.trace))
            .collect()
    }
}

pub fn trace_name(method: TracingMethod, beta: f64, adoption: f64, seed: u64) -> String {
    format!("traces/{}_b{beta:.4}_a{adoption:.3}_s{seed}.json", method.name())
}

/// Every (method, β, adoption, seed) cell. Adoption is meaningless without
/// the app, so no-tracing cells are enumerated once with adoption 0.
pub fn enumerate(methods: &[TracingMethod], betas: &[f64], adoptions: &[f64], seeds: &[u64]) -> Vec<Cell> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for &m in methods {
        for &b in betas {
            for &a in adoptions {
                let a = if m.uses_app() { a } else { 0.0 };
                for &s in seeds {
                    let trace = trace_name(m, b, a, s);
                    if seen.insert(trace.clone()) {
                        out.push(Cell { method: m, beta: b, adoption: a, seed: s, trace, status: CellStatus::Pending, error: None });
                    }
                }
            }
        }
    }
    out
}

struct Plan {
    base: SimConfig,
    overrides: Vec<String>,
    cells: Vec<Cell>,
    jobs: Option<usize>,
}

fn plan(a: &SweepArgs) -> Result<Plan> {
    let spec = match &a.spec {
        Some(p) => {
            require_file(p)?;
            let s = std::fs::read_to_string(p)?;
            let mut spec: ExperimentSpec = serde_yaml::from_str(&s).with_context(|| format!("parsing {}", p.display()))?;
            if let (Some(c), Some(dir)) = (&spec.config, p.parent()) {
                spec.config = Some(dir.join(c));
            }
            spec
        }
        None => ExperimentSpec::default(),
    };
    let cfg_args = ConfigArgs {
        config: a.config.config.clone().or(spec.config.clone()),
        overrides: spec.set.iter().chain(&a.config.overrides).cloned().collect(),
    };
    let base = load_config(&cfg_args)?;

    let methods = if !a.method.is_empty() {
        a.method.clone()
    } else if !spec.methods.is_empty() {
        spec.methods.clone()
    } else {
        vec![base.tracing_method]
    };
    let axis = |flag: &Option<String>, from_spec: &Option<Axis>, default: f64| -> Result<Vec<f64>> {
        match (flag, from_spec) {
            (Some(s), _) => Axis::parse(s)?.values(),
            (None, Some(ax)) => ax.values(),
            (None, None) => Ok(vec![default]),
        }
    };
    let betas = axis(&a.beta, &spec.betas, base.beta)?;
    let adoptions = axis(&a.adoption, &spec.adoptions, base.adoption)?;
    let seeds = match (&a.seeds, &spec.seeds) {
        (Some(s), _) => Seeds::parse(s)?.values(),
        (None, Some(s)) => s.values(),
        (None, None) => vec![base.seed],
    };
    if betas.is_empty() || adoptions.is_empty() || seeds.is_empty() {
        bail!("sweep grid is empty");
    }
    Ok(Plan {
        cells: enumerate(&methods, &betas, &adoptions, &seeds),
        base,
        overrides: cfg_args.overrides,
        jobs: a.jobs.or(spec.jobs),
    })
}

fn cell_config(base: &SimConfig, c: &Cell) -> Result<SimConfig> {
    let mut cfg = base.clone();
    cfg.tracing_method = c.method;
    cfg.beta = c.beta;
    cfg.adoption = c.adoption;
    cfg.seed = c.seed;
    cfg.validate()?;
    Ok(cfg)
}

fn run_cell(base: &SimConfig, c: &Cell, dir: &Path) -> Result<()> {
    let cfg = cell_config(base, c)?;
    let trace = run_simulation(&cfg, &mut NullSink)?;
    let mut json = Vec::new();
    trace.write_json(&mut json)?;
    write_atomic(&dir.join(&c.trace), &json)
}

pub fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let Plan { base, overrides, mut cells, jobs } = plan(&a)?;
    let dir = a.out.clone().unwrap_or_else(|| out_root(None).join("sweep"));
    std::fs::create_dir_all(dir.join("traces"))?;

    let todo: Vec<usize> = (0..cells.len()).filter(|&i| !dir.join(&cells[i].trace).is_file()).collect();
    for c in cells.iter_mut() {
        c.status = CellStatus::Done;
    }
    let skipped = cells.len() - todo.len();
    eprintln!("sweep: {} cells, {} to run, {} already done", cells.len(), todo.len(), skipped);

    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build()?;
    let finished = AtomicUsize::new(0);
    let results: Vec<(usize, Result<()>)> = pool.install(|| {
        todo.par_iter()
            .map(|&i| {
                let r = run_cell(&base, &cells[i], &dir);
                let k = finished.fetch_add(1, Ordering::Relaxed) + 1;
                let c = &cells[i];
                eprintln!(
                    "[{k}/{}] {} β={} adoption={} seed={} {}",
                    todo.len(),
                    c.method.name(),
                    c.beta,
                    c.adoption,
                    c.seed,
                    if r.is_ok() { "ok" } else { "FAILED" }
                );
                (i, r)
            })
            .collect()
    });
    let mut failed = 0;
    for (i, r) in results {
        if let Err(e) = r {
            cells[i].status = CellStatus::Failed;
            cells[i].error = Some(format!("{e:#}"));
            failed += 1;
        }
    }
    let manifest = Manifest { schema: MANIFEST_SCHEMA.into(), overrides, base_config: base.to_yaml(), cells };
    let path = dir.join(MANIFEST_FILE);
    write_atomic(&path, &manifest.to_bytes()?)?;
    println!("ran {} cells, skipped {skipped}, failed {failed}; manifest {}", todo.len(), path.display());
    if failed > 0 {
        bail!("{failed} cells failed; see {}", path.display());
    }
    Ok(())
}
