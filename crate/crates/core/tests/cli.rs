use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dualiscope"));
    c.env_remove("DUALISCOPE_JOBS");
    c
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .args(["run", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn shipped_configs_run_with_documented_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let o = run(&path, &dir.path().join(&name), &[]);
        let expected = if name == "comparison-non-pd" { 2 } else { 0 };
        assert_eq!(o.status.code(), Some(expected), "{name}: {}", stderr(&o));
        if expected == 0 {
            let report: serde_json::Value = serde_json::from_slice(
                &std::fs::read(dir.path().join(&name).join("report.json")).unwrap(),
            )
            .unwrap();
            assert_eq!(report["schema"], "dualiscope.report");
            assert_eq!(report["version"], 1);
            assert_eq!(report["passed"], true);
            let csv = std::fs::read_to_string(dir.path().join(&name).join("cases.csv")).unwrap();
            assert_eq!(
                csv.lines().count() - 1,
                report["cases"].as_u64().unwrap() as usize
            );
        } else {
            assert!(
                stderr(&o).contains("not positive definite"),
                "{}",
                stderr(&o)
            );
        }
        seen += 1;
    }
    assert!(seen >= 10);
}

#[test]
fn seeded_reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs_dir().join("sip-correlations.json");
    let mut files = Vec::new();
    for (i, jobs) in ["1", "3", "1"].iter().enumerate() {
        let out = dir.path().join(format!("r{i}"));
        let o = run(&config, &out, &["--jobs", jobs, "--seed", "77"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        files.push((
            std::fs::read(out.join("cases.csv")).unwrap(),
            std::fs::read(out.join("report.json")).unwrap(),
        ));
    }
    assert!(files.windows(2).all(|w| w[0] == w[1]));
    let other = dir.path().join("other");
    run(&config, &other, &["--seed", "78"]);
    assert_ne!(std::fs::read(other.join("cases.csv")).unwrap(), files[0].0);
}

#[test]
fn parse_errors_name_the_offending_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"experiment":"meeting","process":{"variant":"SIP","m":"1"},"graph":{"kind":"cycle","sites":4},"points":[0,2],"times":"soon"}"#,
            "times",
        ),
        (
            r#"{"experiment":"meeting","graph":{"kind":"cycle","sites":"four"}}"#,
            "graph",
        ),
        (r#"{"experiment":"teleport"}"#, "experiment"),
        (r#"{"experiment":"profile","colour":1}"#, "colour"),
    ];
    for (i, (json, field)) in cases.iter().enumerate() {
        let p = write_config(dir.path(), &format!("bad{i}.json"), json);
        let o = run(&p, &dir.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(2));
        let e = stderr(&o);
        assert!(e.contains("parse error") && e.contains(field), "{e}");
    }
}

#[test]
fn invalid_runs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty_times = write_config(
        dir.path(),
        "t.json",
        r#"{"experiment":"meeting","process":{"variant":"SIP","m":"1"},"graph":{"kind":"cycle","sites":4},"points":[0,2],"times":[]}"#,
    );
    assert_eq!(run(&empty_times, dir.path(), &[]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&missing, dir.path(), &[]).status.code(), Some(2));
    let ok = configs_dir().join("profile.json");
    assert_eq!(
        run(&ok, dir.path(), &["--jobs", "0"]).status.code(),
        Some(2)
    );
    let o = bin().args(["suite", "bogus"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .env("DUALISCOPE_JOBS", "many")
        .args(["run", "--config"])
        .arg(&ok)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_verdict_exits_1_and_names_worst_case() {
    let dir = tempfile::tempdir().unwrap();
    // a 1e-9 sigma band cannot contain a 100-replica estimate
    let p = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment":"sip-correlations","graph":{"kind":"path","sites":3},"measure":{"family":"DiscreteGamma","m":"1","profile":["1/2","2/3","3/4"]},"points":[0,2],"times":[0.5],"replicas":100,"seed":3,"sigmas":1e-9}"#,
    );
    let out = dir.path().join("out");
    let o = run(&p, &out, &[]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("FAIL; worst case"));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    assert!(report["worst_case"].is_string());
}

#[test]
fn dump_prints_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["--dump", "run", "--config"])
        .arg(configs_dir().join("profile.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let written: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(printed, written);
    assert_eq!(printed["experiment"], "profile");
}

#[test]
fn profile_csv_reports_the_linear_formula_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&configs_dir().join("profile.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("cases.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "site,profile,linear_formula,deviation");
    // m = 1, N = 4, ρL = 0, ρR = 1: profile (i+1)/7, linear i/5
    assert_eq!(lines[1], "1,2/7,1/5,3/35");
    assert_eq!(lines[4], "4,5/7,4/5,-3/35");
}
