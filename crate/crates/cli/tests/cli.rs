mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use common::greenplan;
use greenplan_cli::artifacts::sha256_hex;
use greenplan_cli::{parse_scenarios, tax_levels, CliError};
use greenplan_core::ScenarioId;

fn run_ok(args: &[&str]) -> String {
    let out = greenplan(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}

fn all_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn run_reports_every_scenario_in_nesting_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let stdout = run_ok(&["run", "--instance", "micro1", "--out", out.to_str().unwrap()]);
    assert_eq!(stdout.lines().count(), 8);

    let costs = read_csv(&out.join("costs.csv"));
    let names: Vec<&str> = costs.iter().map(|r| r["scenario"].as_str()).collect();
    assert_eq!(names, ["B", "S", "O", "Z", "S+O", "S+Z", "S+Z0", "FS+Z"]);
    let z: BTreeMap<&str, f64> = costs.iter().map(|r| (r["scenario"].as_str(), r["Z"].parse().unwrap())).collect();
    for (small, large) in
        [("S+Z", "S"), ("S", "B"), ("S+Z", "Z"), ("Z", "O"), ("O", "B"), ("S+Z", "S+Z0"), ("S+Z", "FS+Z")]
    {
        assert!(z[small] <= z[large] * (1.0 + 1e-9), "{small} {} > {large} {}", z[small], z[large]);
    }
    assert_eq!(costs[0]["delta_pct"], "0");

    let energy = read_csv(&out.join("energy.csv"));
    assert_eq!(energy.len(), 8);
    for slug in ["B", "S", "O", "Z", "S_O", "S_Z", "S_Z0", "FS_Z"] {
        for file in ["solution.sol", "violations.txt", "timeline.csv", "assignments.csv"] {
            assert!(out.join(slug).join(file).is_file(), "{slug}/{file}");
        }
        assert_eq!(fs::read_to_string(out.join(slug).join("violations.txt")).unwrap(), "no violations\n");
    }
}

#[test]
fn manifest_checksums_match_the_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_ok(&["run", "--instance", "micro2", "--scenario", "B,S+Z", "--out", out.to_str().unwrap()]);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "run");
    assert_eq!(manifest["scenarios"], serde_json::json!(["B", "S+Z"]));
    assert_eq!(manifest["results"].as_array().unwrap().len(), 2);
    let files = manifest["files"].as_object().unwrap();
    assert_eq!(files.len(), 2 + 2 * 4);
    for (name, sum) in files {
        assert_eq!(sha256_hex(&fs::read(out.join(name)).unwrap()), sum.as_str().unwrap(), "{name}");
    }
    let text = greenplan_core::bundled::source("micro2").unwrap();
    assert_eq!(manifest["instance_sha256"], sha256_hex(text.as_bytes()));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        run_ok(&["run", "--instance", "micro3", "--out", out.to_str().unwrap()]);
    }
    let (fa, fb) = (all_files(&a), all_files(&b));
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        assert!(bytes == &fb[name], "{name} differs between runs");
    }
}

#[test]
fn peak_only_keeps_the_busiest_period() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_ok(&["run", "--instance", "micro1", "--scenario", "Z", "--peak-only", "--out", out.to_str().unwrap()]);
    let rows = read_csv(&out.join("Z/assignments.csv"));
    assert!(!rows.is_empty());
    // micro1 traffic peaks in its second period
    assert!(rows.iter().all(|r| r["period"] == "2"));
    let full = dir.path().join("full");
    run_ok(&["run", "--instance", "micro1", "--scenario", "Z", "--out", full.to_str().unwrap()]);
    assert!(read_csv(&full.join("Z/assignments.csv")).len() > rows.len());
}

#[test]
fn tax_override_raises_costs() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain");
    let taxed = dir.path().join("taxed");
    run_ok(&["run", "--instance", "micro1", "--scenario", "B", "--out", plain.to_str().unwrap()]);
    run_ok(&[
        "run",
        "--instance",
        "micro1",
        "--scenario",
        "B",
        "--tax-start",
        "20",
        "--tax-step",
        "5",
        "--out",
        taxed.to_str().unwrap(),
    ]);
    let z = |p: &Path| read_csv(&p.join("costs.csv"))[0]["Z_CO2"].parse::<f64>().unwrap();
    assert_eq!(z(&plain), 0.0);
    assert!(z(&taxed) > 0.0);
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let o = out.to_str().unwrap();
    for args in [
        vec!["run", "--instance", "micro1", "--scenario", "X", "--out", o],
        vec!["run", "--instance", "no-such-instance", "--out", o],
        vec!["run", "--out", o],
        vec!["frobnicate"],
        vec!["run", "--instance", "micro1", "--gap", "-1", "--out", o],
        vec!["sweep", "--instance", "micro1", "--scenario", "B", "--out", o],
        vec!["sweep", "--instance", "micro1", "--tax-start", "0,10", "--tax-step", "0,5,10", "--out", o],
    ] {
        let r = greenplan(&args);
        assert_eq!(r.status.code(), Some(64), "{args:?}");
        assert!(!r.stderr.is_empty(), "{args:?}");
    }
    let r = greenplan(&["run", "--instance", "micro1", "--scenario", "X", "--out", o]);
    assert!(String::from_utf8_lossy(&r.stderr).contains("unknown scenario `X`"));
    assert!(!out.exists());
}

#[test]
fn help_and_version_exit_0() {
    assert!(run_ok(&["--help"]).contains("sweep"));
    assert!(run_ok(&["--version"]).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn solver_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let r = greenplan(&[
        "run",
        "--instance",
        "micro1",
        "--scenario",
        "B",
        "--solver",
        "/nonexistent/solver",
        "--out",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2));
    let r = greenplan(&[
        "run",
        "--instance",
        "p1-like",
        "--scenario",
        "B",
        "--out",
        dir.path().join("y").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stderr).contains("free binaries"));
}

#[test]
fn instance_files_load_by_path() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("mine.toml");
    fs::write(&file, greenplan_core::bundled::source("micro2").unwrap()).unwrap();
    let out = dir.path().join("run");
    run_ok(&["run", "--instance", file.to_str().unwrap(), "--scenario", "B", "--out", out.to_str().unwrap()]);
    assert_eq!(read_csv(&out.join("costs.csv")).len(), 1);
}

#[test]
fn export_writes_eight_distinct_deterministic_models() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["lp", "mps"] {
        let a = dir.path().join(format!("{format}-a"));
        let b = dir.path().join(format!("{format}-b"));
        for out in [&a, &b] {
            let stdout =
                run_ok(&["export", "--instance", "micro1", "--format", format, "--out", out.to_str().unwrap()]);
            assert_eq!(stdout.lines().count(), 8);
        }
        let (fa, fb) = (all_files(&a), all_files(&b));
        assert_eq!(fa, fb);
        let models: Vec<&Vec<u8>> = fa.iter().filter(|(k, _)| k.ends_with(format)).map(|(_, v)| v).collect();
        assert_eq!(models.len(), 8);
        let sums: std::collections::BTreeSet<String> = models.iter().map(|m| sha256_hex(m)).collect();
        assert_eq!(sums.len(), 8);
        assert!(a.join("S_Z0.".to_string() + format).is_file());
    }
}

#[test]
fn validate_accepts_run_output_and_rejects_foreign_plans() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_ok(&["run", "--instance", "micro1", "--scenario", "B,FS+Z", "--out", out.to_str().unwrap()]);
    let sol = out.join("FS_Z/solution.sol");
    let stdout =
        run_ok(&["validate", "--instance", "micro1", "--scenario", "FS+Z", "--solution", sol.to_str().unwrap()]);
    assert!(stdout.starts_with("no violations"));
    // FS+Z installs a solar type, which B runs at full power without a battery
    let r = greenplan(&["validate", "--instance", "micro1", "--scenario", "B", "--solution", sol.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stdout).contains("scenario["));

    let tampered = dir.path().join("tampered.sol");
    let text = fs::read_to_string(&sol).unwrap();
    let objective = text.lines().nth(1).unwrap().to_string();
    fs::write(&tampered, text.replace(&objective, "# objective 1")).unwrap();
    let r = greenplan(&[
        "validate",
        "--instance",
        "micro1",
        "--scenario",
        "FS+Z",
        "--solution",
        tampered.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("differs from priced cost"));

    let r = greenplan(&[
        "validate",
        "--instance",
        "micro1",
        "--scenario",
        "B",
        "--solution",
        dir.path().join("missing").to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(64));
}

#[test]
fn sweep_finds_the_solar_threshold_on_micro1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    run_ok(&["sweep", "--instance", "micro1", "--oracle", "--out", out.to_str().unwrap()]);
    let rows = read_csv(&out.join("sweep.csv"));
    let counts: Vec<usize> = rows.iter().map(|r| r["solar_count"].parse().unwrap()).collect();
    assert_eq!(counts, [0, 0, 0, 1, 1, 1]);
    for r in &rows {
        assert_eq!(r["Z"], r["oracle_Z"]);
    }
    let z: Vec<f64> = rows.iter().map(|r| r["Z"].parse().unwrap()).collect();
    assert!(z.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn scenario_lists_parse_and_deduplicate() {
    let names: Vec<String> = ["S+Z", "B", " B", "FS+Z"].iter().map(|s| s.to_string()).collect();
    assert_eq!(parse_scenarios(&names).unwrap(), [ScenarioId::B, ScenarioId::SZ, ScenarioId::FSZ]);
    assert_eq!(parse_scenarios(&[]).unwrap(), ScenarioId::ALL);
    assert!(matches!(parse_scenarios(&["Q".into()]), Err(CliError::Usage(_))));
}

#[test]
fn tax_levels_pair_or_broadcast() {
    assert_eq!(tax_levels(&[0.0, 10.0], &[5.0]).unwrap(), [(0.0, 5.0), (10.0, 5.0)]);
    assert_eq!(tax_levels(&[0.0, 10.0], &[1.0, 2.0]).unwrap(), [(0.0, 1.0), (10.0, 2.0)]);
    assert_eq!(tax_levels(&[0.0, 10.0], &[1.0, 2.0, 3.0]).unwrap_err().exit_code(), 64);
}
