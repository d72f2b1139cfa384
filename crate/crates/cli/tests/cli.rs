use std::path::Path;
use std::process::{Command, Output};

use ualign_cli::report::row_header;
use ualign_cli::{Report, SCHEMA_VERSION};

fn ualign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ualign"))
        .args(args)
        .env_remove("UALIGN_CAP")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn report(o: &Output) -> Report {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stderr(o)))
}

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn solve_csv_header_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = ualign(&["solve", "--instance", "condorcet-cycle", "--k", "2", "--iters", "50", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, golden("solve_header.csv").trim_end());
    assert_eq!(header, row_header().join(","));
    assert_eq!(csv.lines().count(), 2);

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("solve.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], SCHEMA_VERSION);
    let keys: Vec<&str> = json["rows"][0].as_object().unwrap().keys().map(String::as_str).collect();
    let mut want = row_header().to_vec();
    want.sort();
    let mut got = keys.clone();
    got.sort();
    assert_eq!(got, want);
}

#[test]
fn uniform_pl_reproduction_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = ualign(&["reproduce", "prop-3.2", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("prop-3.2.csv")).unwrap();
    assert_eq!(csv, golden("prop-3.2.csv"));
}

#[test]
fn reruns_with_the_same_seed_are_bitwise_identical() {
    let args = [
        "solve", "--instance", "majority:0.1", "--k", "1,2,3", "--l", "1,2", "--algo", "mwu", "--iters", "500",
        "--seed", "7",
    ];
    let strip = |mut r: Report| {
        for row in &mut r.rows {
            row.wall_time_ms = 0.0;
        }
        r
    };
    let a = strip(report(&ualign(&args)));
    let b = strip(report(&ualign(&args)));
    assert_eq!(a.rows.len(), 6);
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x.certified_rate.to_bits(), y.certified_rate.to_bits());
        assert_eq!(x.regret_slack.to_bits(), y.regret_slack.to_bits());
        assert_eq!(x.seed, 7);
    }
    assert_eq!(a, b);
}

#[test]
fn failing_certification_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("pi.json");
    std::fs::write(&policy, "[0.0, 1.0]").unwrap();
    let o = ualign(&["certify", "--instance", "majority:0.1", "--k", "1", "--policy", policy.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = report(&o);
    assert!(!r.pass);
    assert!((r.rows[0].certified_rate - 0.4).abs() < 1e-12);
    assert_eq!(r.rows[0].witness, "{y1}");
}

#[test]
fn malformed_policy_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("pi.json");
    std::fs::write(&policy, "{\n  \"probs\": [0.5,\n    0.5,, ]\n}").unwrap();
    let o = ualign(&["certify", "--instance", "majority:0.1", "--k", "1", "--policy", policy.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn empty_k_list_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(&cfg, r#"{"instance": "majority:0.1", "k": []}"#).unwrap();
    let o = ualign(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`k`"), "{}", stderr(&o));
}

#[test]
fn config_document_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{"instance": "condorcet-cycle", "k": [4], "l": [1, 2, 3],
            "solver": {"algorithm": "mwu", "iterations": 2000, "step_size": "auto", "seed": 3, "tolerance": 1e-9}}"#,
    )
    .unwrap();
    let r = report(&ualign(&["solve", "--config", cfg.to_str().unwrap()]));
    assert_eq!(r.rows.len(), 3);
    assert!(r.pass);
    for (row, l) in r.rows.iter().zip(1..) {
        assert_eq!(row.l, l);
        assert_eq!(row.seed, 3);
        assert!(row.certified_rate >= (5 - l) as f64 / 5.0 - l as f64 * row.regret_slack - 1e-9);
    }
    let r = report(&ualign(&["solve", "--config", cfg.to_str().unwrap(), "--l", "1", "--seed", "9"]));
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.rows[0].seed, 9);
}

#[test]
fn cap_from_environment_raises_an_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_ualign"))
        .args(["solve", "--instance", "majority:0.1", "--k", "3", "--iters", "10"])
        .env("UALIGN_CAP", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("cap"), "{}", stderr(&o));
    // An explicit flag wins over the environment.
    let o = Command::new(env!("CARGO_BIN_EXE_ualign"))
        .args(["solve", "--instance", "majority:0.1", "--k", "3", "--iters", "10", "--cap", "1000"])
        .env("UALIGN_CAP", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn custom_directory_gives_one_row_per_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let cycle = r#"{"responses": ["a", "b", "c"], "kind": "ranking", "components": [
        {"weight": 0.3333333333, "order": ["a", "b", "c"]},
        {"weight": 0.3333333333, "order": ["b", "c", "a"]},
        {"weight": 0.3333333334, "order": ["c", "a", "b"]}]}"#;
    let pl = r#"{"responses": ["u", "v", "w"], "kind": "pl", "components": [
        {"weight": 0.5, "rewards": [0.0, 1.0, -1.0]},
        {"weight": 0.5, "rewards": [2.0, 0.0, 0.5]}]}"#;
    std::fs::write(dir.path().join("p1.json"), cycle).unwrap();
    std::fs::write(dir.path().join("p2.json"), pl).unwrap();
    std::fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let spec = format!("custom:{}", dir.path().display());
    let r = report(&ualign(&["solve", "--instance", &spec, "--k", "2", "--iters", "300"]));
    let prompts: Vec<&str> = r.rows.iter().map(|r| r.prompt.as_str()).collect();
    assert_eq!(prompts, ["p1", "p2"]);
    assert!(r.pass);
}

#[test]
fn lp_nlhf_on_majority_stays_at_point_mass() {
    let r = report(&ualign(&["solve", "--instance", "majority:0.1", "--k", "1,2,4,8", "--algo", "lp-nlhf"]));
    for row in &r.rows {
        assert_eq!(row.candidate, "1;0");
        assert!((row.certified_rate - 0.6).abs() < 1e-12);
    }
    // 0.6 clears 1/2 but not 2/3 and above.
    let passes: Vec<bool> = r.rows.iter().map(|r| r.pass).collect();
    assert_eq!(passes, [true, false, false, false]);
}

#[test]
fn sweep_threshold_rises_with_iterations() {
    let r = report(&ualign(&["sweep", "--instance", "majority:0.1", "--k", "2", "--iters", "100,1000,10000"]));
    let t: Vec<f64> = r.rows.iter().map(|r| r.threshold).collect();
    assert_eq!(t.len(), 3);
    assert!(t[0] < t[1] && t[1] < t[2] && t[2] < 2.0 / 3.0);
    assert!(r.rows.iter().all(|r| r.certified_rate >= r.threshold));
}

#[test]
fn unknown_target_is_a_usage_error() {
    let o = ualign(&["reproduce", "prop-9.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("thm-4.4"));
}
