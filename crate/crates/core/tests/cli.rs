use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid-market")).args(args).output().unwrap()
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr)
}

fn small_config(dir: &Path) -> String {
    let mut cfg: serde_json::Value = serde_json::from_str(include_str!("../scenarios/default.json")).unwrap();
    cfg["maxTrades"] = 60.into();
    let path = dir.join("scenario.json");
    fs::write(&path, cfg.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_replay_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let out_s = out.to_string_lossy().into_owned();
    let o = cli(&["run", "--config", &cfg, "--seed", "9", "--out", &out_s]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("tradesCompleted"));
    for f in ["events.jsonl", "metrics.csv", "registry.json", "disputes.json", "pool.json", "trades.json", "report.json"] {
        assert!(out.join(f).exists(), "missing {f}");
    }

    let log = out.join("events.jsonl");
    let o = cli(&["replay", "--log", &log.to_string_lossy()]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("replay PASS"));

    let o = cli(&["inspect-nft", "1", "--out", &out_s]);
    assert!(o.status.success(), "{}", text(&o));
    let o = cli(&["inspect-trade", "1", "--out", &out_s]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("\"trade_id\""), "{}", text(&o));

    let body = fs::read_to_string(&log).unwrap();
    let cut: String = body.lines().take(40).map(|l| format!("{l}\n")).collect();
    let partial = dir.path().join("partial.jsonl");
    fs::write(&partial, cut).unwrap();
    let o = cli(&["replay", "--log", &partial.to_string_lossy()]);
    assert!(!o.status.success());
    assert!(text(&o).contains("PARTIAL"), "{}", text(&o));
}

#[test]
fn payoff_table_reports_the_equilibrium() {
    let o = cli(&["payoff-table"]);
    assert!(o.status.success(), "{}", text(&o));
    let t = text(&o);
    assert!(t.contains("nash equilibria: (s1,s1)"), "{t}");
    assert!(t.contains("social optimum: (s1,s1)"), "{t}");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"tradeValue": "100", "stakeAmount": "50", "stakeReturnRate": "1/20", "reputationWeight": "-100", "reputationPoint": "10", "alphaPrime": 50, "iotaPrime": 100}"#).unwrap();
    let o = cli(&["payoff-table", "--config", &bad.to_string_lossy()]);
    assert!(!o.status.success());
    assert!(text(&o).contains("[FAIL]"), "{}", text(&o));
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("even.json");
    let mut cfg: serde_json::Value = serde_json::from_str(include_str!("../scenarios/default.json")).unwrap();
    cfg["jurySize"] = 4.into();
    fs::write(&path, cfg.to_string()).unwrap();
    let o = cli(&["run", "--config", &path.to_string_lossy(), "--seed", "1", "--out", &dir.path().to_string_lossy()]);
    assert!(!o.status.success());
    assert!(text(&o).contains("even"), "{}", text(&o));
}
