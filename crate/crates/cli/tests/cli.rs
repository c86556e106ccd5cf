use std::process::Command;

fn eprqdba(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_eprqdba"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn scratch(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("eprqdba-cli-{}-{name}", std::process::id()))
}

#[test]
fn accounting_csv() {
    let (ok, out, _) = eprqdba(&["accounting", "--n", "3,5", "--m", "4", "--format", "csv"]);
    assert!(ok);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(
        lines[0],
        "n,m,round,messages,symbols,wire_bits,epr_pairs,plus_qubits"
    );
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert_eq!(lines[4], "5,4,1,4,64,128,16,48");
    assert_eq!(lines[5], "5,4,2,12,192,384,16,48");
}

#[test]
fn simulate_writes_a_replayable_trace() {
    let path = scratch("trace.jsonl");
    let (ok, _, summary) = eprqdba(&[
        "simulate",
        "--n",
        "3",
        "--m",
        "64",
        "--scenario",
        "equivocation",
        "--paper-literal",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(ok);
    let summary: serde_json::Value = serde_json::from_str(summary.trim()).unwrap();
    assert_eq!(summary["verdict"]["consistency"], false);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["event"], "run");
    assert_eq!(
        first["detail"]["config"]["tolerance"]["paper_literal"],
        true
    );
    assert!(text
        .lines()
        .all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
}

#[test]
fn scenario_from_file_and_config_sweep() {
    let scenario = scratch("scenario.json");
    std::fs::write(
        &scenario,
        r#"{"name":"forger_pair","order":false,"lieutenants":[{"kind":"random_fill_forger"},{"kind":"honest"},{"kind":"honest"}]}"#,
    )
    .unwrap();
    let (ok, out, err) = eprqdba(&[
        "sweep",
        "--n",
        "4",
        "--m",
        "16",
        "--trials",
        "10",
        "--scenario",
        scenario.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    std::fs::remove_file(&scenario).unwrap();
    assert!(ok, "{err}");
    let row: Vec<_> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..5], ["forger_pair", "4", "16", "10", "0"]);
    // validity only fails after a recorded forgery pass
    assert_eq!(row[10], "0");

    let spec = scratch("spec.json");
    std::fs::write(
        &spec,
        r#"{"config":{"n":3,"m":32,"seed":0},"scenario":{"name":"all_loyal","order":true,"lieutenants":[{"kind":"honest"},{"kind":"honest"}]},"trials":5}"#,
    )
    .unwrap();
    let (ok, out, err) = eprqdba(&["sweep", "--config", spec.to_str().unwrap()]);
    std::fs::remove_file(&spec).unwrap();
    assert!(ok, "{err}");
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["summary"]["counts"]["all_loyal_agreement"], 5);
    assert_eq!(report["trials"].as_array().unwrap().len(), 5);
}

#[test]
fn forgery_and_oracle() {
    let (ok, out, _) = eprqdba(&["forgery", "--m", "8", "--trials", "2000", "--format", "csv"]);
    assert!(ok);
    assert!(out.lines().nth(1).unwrap().starts_with("8,1/6,"));
    let (ok, out, _) = eprqdba(&["oracle-check", "--trials", "5000"]);
    assert!(ok);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report[0]["occupied_categories"], 256);
}

#[test]
fn bad_input_fails() {
    assert!(!eprqdba(&["simulate", "--scenario", "nonsense"]).0);
    assert!(!eprqdba(&["simulate", "--format", "csv"]).0);
    assert!(!eprqdba(&["sweep", "--z", "-1", "--trials", "1"]).0);
    assert!(!eprqdba(&["forgery", "--m", "6", "--trials", "1000"]).0);
}
