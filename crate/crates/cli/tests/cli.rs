use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nocmap(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nocmap"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

const SMALL: &str = r#"
name = "small"
strategies = ["distance", "post-run", "sampling:2"]

[workload]
[[workload.layers]]
name = "conv"
kind = "conv"
input_h = 8
input_w = 8
in_channels = 1
out_channels = 4
kernel = 3

[output]
path = "out/small.csv"
"#;

#[test]
fn run_writes_metrics_and_totals() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.toml"), SMALL).unwrap();
    let out = nocmap(&["run", "--config", "s.toml"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(dir.path().join("out/small.csv")).unwrap();
    assert!(metrics.starts_with("scenario,layer,strategy,pe,accumulated,mean_end_to_end,makespan,rho,improvement_pct\n"));
    // 4 strategies x (14 PEs + summary) + header
    assert_eq!(metrics.lines().count(), 1 + 4 * 15);
    let totals = fs::read_to_string(dir.path().join("out/small_model.csv")).unwrap();
    assert_eq!(totals.lines().count(), 1 + 4);
    assert!(String::from_utf8_lossy(&out.stdout).contains("small\tpost-run"));
    assert!(!dir.path().join("out/small_records").exists());
}

#[test]
fn dump_records_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.toml"), SMALL).unwrap();
    let out = nocmap(
        &["run", "--config", "s.toml", "--output", "r.csv", "--dump-records", "--trace"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records = fs::read_dir(dir.path().join("r_records")).unwrap().count();
    assert_eq!(records, 4);
    let traces = fs::read_dir(dir.path().join("r_trace")).unwrap().count();
    assert_eq!(traces, 4);
    let rec = fs::read_to_string(dir.path().join("r_records/small_row-major.csv")).unwrap();
    assert!(rec.starts_with("layer,pe,task,t_req,t_mem,t_resp,t_compu,t_travel\n"));
    assert_eq!(rec.lines().count(), 1 + 6 * 6 * 4);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.toml"), SMALL).unwrap();
    for name in ["a.csv", "b.csv"] {
        let out = nocmap(&["run", "--config", "s.toml", "--output", name], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(
        fs::read(dir.path().join("a.csv")).unwrap(),
        fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn sweep_combines_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}\n[sweep]\naxis = \"architecture\"\n");
    fs::write(dir.path().join("s.toml"), cfg).unwrap();
    let out = nocmap(&["sweep", "--config", "s.toml"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(dir.path().join("out/small.csv")).unwrap();
    let summaries: Vec<&str> = metrics.lines().filter(|l| l.split(',').nth(3) == Some("all")).collect();
    assert_eq!(summaries.len(), 2 * 4);
    assert!(summaries[0].starts_with("small/arch=2mc,"));
    assert!(summaries[7].starts_with("small/arch=4mc,"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "name = \"x\"\n[workload]\npreset = \"nope\"\n").unwrap();
    assert_eq!(nocmap(&["run", "--config", "bad.toml"], dir.path()).status.code(), Some(1));
    assert_eq!(nocmap(&["run", "--config", "missing.toml"], dir.path()).status.code(), Some(1));
    // sweep without an axis
    fs::write(dir.path().join("s.toml"), SMALL).unwrap();
    assert_eq!(nocmap(&["sweep", "--config", "s.toml"], dir.path()).status.code(), Some(1));
    assert_eq!(nocmap(&["frobnicate"], dir.path()).status.code(), Some(1));
}

#[test]
fn livelock_guard_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SMALL.replace("[workload]", "[sim]\nlivelock_bound = 1\n\n[workload]");
    fs::write(dir.path().join("s.toml"), cfg).unwrap();
    let out = nocmap(&["run", "--config", "s.toml"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no forward progress"));
}

#[test]
fn shipped_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            nocmap::experiments::ScenarioConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert_eq!(n, 5);
}
