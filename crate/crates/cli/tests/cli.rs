use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rmtl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmtl")).args(args).output().unwrap()
}

/// Four groups with status levels 0..=3, laid out like a 2x2 design.
fn write_factorial_csv(path: &Path) {
    let mut text = String::from("group,time,status\n");
    for (g, label) in ["a1b1", "a1b2", "a2b1", "a2b2"].iter().enumerate() {
        for i in 0..40 {
            let t = ((i * 37 + g * 11) % 97) as f64 / 7.0 + 0.25 * g as f64;
            let _ = writeln!(text, "{label},{t},{}", (i + g) % 4);
        }
    }
    fs::write(path, text).unwrap();
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn factorial_per_event_gives_nine_adjusted_p_values() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    let out = dir.path().join("report.json");
    write_factorial_csv(&input);
    let o = rmtl(&[
        "analyze", "--input", path_str(&input), "--tau", "12", "--contrast", "2x2", "--per-event",
        "--B", "199", "--out", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let blocks = report["multiple_test"]["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 9);
    assert!(blocks.iter().all(|b| b["adjusted_p_value"].as_f64().unwrap() <= 1.0));
    assert_eq!(report["groups"][0]["label"], "a1b1");
    assert_eq!(report["causes"], 3);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    write_factorial_csv(&input);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = rmtl(&[
            "analyze", "--input", path_str(&input), "--tau", "12", "--method", "permutation-bonf",
            "--per-event", "--B", "99", "--seed", "7", "--out", path_str(&out),
        ]);
        assert!(o.status.success());
        fs::read(out).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn table_output_and_causes_selection() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    write_factorial_csv(&input);
    let o = rmtl(&[
        "analyze", "--input", path_str(&input), "--tau", "12", "--contrast", "tukey", "--causes", "1,3",
        "--method", "asymptotic-bonf",
    ]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("g2-g1 [cause 3]"));
    assert!(!text.contains("[cause 2]"));
}

#[test]
fn custom_contrast_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    let contrast = dir.path().join("h.txt");
    write_factorial_csv(&input);
    fs::write(&contrast, "@ b2 vs b1 at a1\n-1 1 0 0\n").unwrap();
    let spec = format!("file:{}", path_str(&contrast));
    let o = rmtl(&["analyze", "--input", path_str(&input), "--tau", "12", "--contrast", &spec, "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["multiple_test"]["blocks"][0]["label"], "b2 vs b1 at a1");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "group,time,status\na,1,1\na,oops,0\n").unwrap();
    let o = rmtl(&["analyze", "--input", path_str(&bad), "--tau", "5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = rmtl(&["analyze", "--input", "/nonexistent.csv", "--tau", "5"]);
    assert_eq!(o.status.code(), Some(3));

    // identical constant groups: every covariance block vanishes
    let flat = dir.path().join("flat.csv");
    fs::write(&flat, "group,time,status\na,1,1\na,1,1\nb,1,1\nb,1,1\n").unwrap();
    let o = rmtl(&["analyze", "--input", path_str(&flat), "--tau", "5", "--method", "asymptotic"]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_preset_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = rmtl(&[
        "simulate", "--preset", "exp-alt", "--replications", "5", "--B", "19", "--out", path_str(dir.path()),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("FWER") && stdout.contains("any-reject"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["true_null"].as_array().unwrap().iter().filter(|t| !t.as_bool().unwrap()).count(), 3);
    assert!(fs::read_to_string(dir.path().join("report.csv")).unwrap().starts_with("method,hypothesis"));
}

#[test]
fn simulate_config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.toml");
    fs::write(
        &cfg,
        r#"
contrast = "dunnett"
mode = "per_event"

[scenario]
event_laws = [{ law = "lognormal", mu = 1.0 }]
censoring_laws = [{ law = "none" }]
cause_probabilities = [1.0]
sample_sizes = [10, 10]
tau = 5.0
"#,
    )
    .unwrap();
    let o = rmtl(&["simulate", "--config", path_str(&cfg), "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("lognormal"), "{err}");
}

#[test]
fn unknown_preset() {
    let dir = tempfile::tempdir().unwrap();
    let o = rmtl(&["simulate", "--preset", "nope", "--out", path_str(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exp-null"));
}
