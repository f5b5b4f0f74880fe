use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn ctsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctsim"))
        .args(args)
        .current_dir(cwd)
        .env("CTSIM_OUT", cwd.join("out"))
        .output()
        .expect("spawn ctsim")
}

fn ok(o: &Output) -> String {
    let stdout = String::from_utf8_lossy(&o.stdout).into_owned();
    assert!(o.status.success(), "stdout:\n{stdout}\nstderr:\n{}", String::from_utf8_lossy(&o.stderr));
    stdout
}

const SMALL: [&str; 4] = ["--set", "region.population_size=100", "--set", "n_days=5"];

#[test]
fn smoke_run_is_quick() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = ctsim(&[&["run"], &SMALL[..], &["-o", "r"]].concat(), dir.path());
    ok(&o);
    assert!(start.elapsed() < Duration::from_secs(5));
    for f in ["trace.json", "daily.csv", "metrics.csv", "config.yaml", "summary.json"] {
        assert!(dir.path().join("r").join(f).is_file(), "{f}");
    }
}

#[test]
fn missing_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = ctsim(&["run", "-c", "nope/missing.yaml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope/missing.yaml"));
}

#[test]
fn bad_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = ctsim(&["validate-config", "--set", "no_such_key=1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = ctsim(&["validate-config", "--set", "beta=1.5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    ok(&ctsim(&["validate-config", "--set", "beta=0.5"], dir.path()));
}

#[test]
fn validate_config_accepts_written_config() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ctsim(&[&["run"], &SMALL[..], &["-o", "r"]].concat(), dir.path()));
    ok(&ctsim(&["validate-config", "-c", "r/config.yaml"], dir.path()));
}

#[test]
fn no_seeds_gives_flat_case_curves() {
    let dir = tempfile::tempdir().unwrap();
    let args = [&["run"], &SMALL[..], &["--set", "init_fraction_sick=0", "-o", "r"]].concat();
    ok(&ctsim(&args, dir.path()));
    let csv = std::fs::read_to_string(dir.path().join("r/metrics.csv")).unwrap();
    let mut rows = csv.lines();
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let cols: Vec<usize> = ["daily_cases_pct", "cumulative_cases_pct", "prevalence_pct"]
        .iter()
        .map(|c| header.iter().position(|h| h == c).unwrap())
        .collect();
    let mut n = 0;
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        for &c in &cols {
            assert_eq!(f[c].parse::<f64>().unwrap(), 0.0, "{row}");
        }
        n += 1;
    }
    assert_eq!(n, 5);
}

fn sweep(dir: &Path) -> String {
    let args = [
        &["sweep"],
        &SMALL[..],
        &["--method", "none", "--beta", "0.4,0.8", "--seeds", "0..2", "-o", "sw", "-j", "1"],
    ]
    .concat();
    let o = ctsim(&args, dir);
    ok(&o) + &String::from_utf8_lossy(&o.stderr)
}

#[test]
fn sweep_writes_traces_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let out = sweep(dir.path());
    assert!(out.contains("4 to run"), "{out}");
    let traces: Vec<_> = std::fs::read_dir(dir.path().join("sw/traces")).unwrap().collect();
    assert_eq!(traces.len(), 4);
    assert!(dir.path().join("sw/manifest.json").is_file());

    let victim = dir.path().join("sw/traces/none_b0.4000_a0.000_s1.json");
    let before = std::fs::read(&victim).unwrap();
    std::fs::remove_file(&victim).unwrap();
    let out = sweep(dir.path());
    assert!(out.contains("1 to run, 3 already done"), "{out}");
    assert_eq!(std::fs::read(&victim).unwrap(), before);
}

#[test]
fn manifest_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    sweep(dir.path());
    let raw = std::fs::read_to_string(dir.path().join("sw/manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&raw).unwrap();
    assert_eq!(v["schema"], "ctsim-manifest/1");
    assert_eq!(v["cells"].as_array().unwrap().len(), 4);
    assert!(v["cells"].as_array().unwrap().iter().all(|c| c["status"] == "done"));
    let cfg = v["base_config"].as_str().unwrap();
    assert!(cfg.contains("population_size: 100"));
}

#[test]
fn compare_needs_two_methods() {
    let dir = tempfile::tempdir().unwrap();
    sweep(dir.path());
    let o = ctsim(&["compare", "sw/manifest.json"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least two methods"));
}

#[test]
fn compare_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        &["sweep"],
        &["--set", "region.population_size=200", "--set", "n_days=20"][..],
        &["--method", "none,bct1", "--beta", "0.3:0.9:0.15", "--seeds", "0..2", "-o", "sw"],
    ]
    .concat();
    ok(&ctsim(&args, dir.path()));
    ok(&ctsim(&["compare", "sw/manifest.json", "--draws", "20"], dir.path()));
    for f in ["points.csv", "pareto_fit.csv", "delta_rhat.csv", "costs.csv", "dalys_by_age.csv", "report.json", "pareto.svg"] {
        assert!(dir.path().join("sw/compare").join(f).is_file(), "{f}");
    }
    let costs = std::fs::read_to_string(dir.path().join("sw/compare/costs.csv")).unwrap();
    assert!(costs.lines().any(|l| l.starts_with("none,") && l.ends_with(",REF")), "{costs}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |o: &'static str| [&["run"][..], &SMALL[..], &["--set", "tracing_method=heuristic", "--seed", "3", "-o", o]].concat();
    ok(&ctsim(&args("a"), dir.path()));
    ok(&ctsim(&args("b"), dir.path()));
    for f in ["daily.csv", "metrics.csv", "trace.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn epi_stats_reads_traces() {
    let dir = tempfile::tempdir().unwrap();
    ok(&ctsim(&[&["run"], &SMALL[..], &["-o", "r"]].concat(), dir.path()));
    let out = ok(&ctsim(&["epi-stats", "r/trace.json"], dir.path()));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v.is_object(), "{out}");
}
