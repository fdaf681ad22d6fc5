use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn votexfer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_votexfer"))
        .args(args)
        .env_remove("VOTEXFER_FIXTURE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(&votexfer(args))).unwrap()
}

fn totals(v: &Value) -> Vec<u64> {
    v["parties"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["total_seats"].as_u64().unwrap())
        .collect()
}

#[test]
fn example1_table() {
    let text = stdout(&votexfer(&["example1"]));
    let row = |f: &str| {
        text.lines()
            .find(|l| l.starts_with(f) && l.contains(" A "))
            .unwrap()
            .to_string()
    };
    assert!(row("DVT").ends_with("52.000000"));
    assert!(row("PVT").contains("0.521428571429"));
    assert!(row("NVT").ends_with("53.125000"));

    let zero = json(&["example1", "--alpha", "0", "--json"]);
    for a in zero.as_array().unwrap() {
        assert_eq!(a["seat_share"], a["list_share"]);
    }
}

#[test]
fn curves_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curves.csv");
    stdout(&votexfer(&[
        "curves",
        "--alpha",
        "0.3",
        "--grid-step",
        "0.05",
        "--out",
        path.to_str().unwrap(),
    ]));
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("x,side,formula,seat_share\n"));
    assert!(text.lines().any(|l| l == "0.6,Dominant,NVT,0.65"));
    assert_eq!(text.lines().count(), 1 + 7 * 11);

    let b = stdout(&votexfer(&["curves", "--alpha", "0.6", "--grid-step", "0.05"]));
    assert!(b.lines().any(|l| l == "0.5,Dominant,DVT,0.8"));
    let one = stdout(&votexfer(&["curves", "--alpha", "1", "--grid-step", "0.1"]));
    assert!(one
        .lines()
        .filter(|l| l.contains(",Dominant,"))
        .all(|l| l.ends_with(",1")));
}

#[test]
fn allocate_fixture() {
    let nvt = json(&[
        "allocate",
        "--fixture",
        "hungary2014",
        "--formula",
        "nvt",
        "--list-seats",
        "93",
    ]);
    assert_eq!(totals(&nvt), [133, 38, 23, 5]);
    assert_eq!(nvt["house_size"], 199);
    let none = json(&[
        "allocate",
        "--fixture",
        "hungary2014",
        "--formula",
        "dvt",
        "--list-seats",
        "0",
    ]);
    assert_eq!(totals(&none), [96, 10, 0, 0]);
}

#[test]
fn allocate_election_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("votes.csv");
    fs::write(&path, "district_id,party,votes\nC1,A,65\nC1,B,35\nC2,A,45\nC2,B,55\n").unwrap();
    let v = json(&[
        "allocate",
        "--election",
        path.to_str().unwrap(),
        "--formula",
        "pvt",
        "--list-seats",
        "2",
    ]);
    assert_eq!(v["house_size"], 4);
}

#[test]
fn sweep_reports_minimum() {
    let v = json(&["sweep", "--formula", "pvt"]);
    assert_eq!(v["min_diff_at"], 77);
    assert_eq!(totals(&v["best"]), [122, 35, 21, 5]);
    assert_eq!(v["supermajority_boundary"], 75);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let d = json(&["sweep", "--formula", "dvt", "--csv", path.to_str().unwrap()]);
    assert_eq!(d["min_diff_at"], 122);
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1 + 101 * 4);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.json");
    fs::write(&config, r#"{"k":0.51,"h":0.15,"alpha":0.5,"seed":42,"runs":500}"#).unwrap();
    let a = stdout(&votexfer(&["simulate", "--config", config.to_str().unwrap()]));
    let b = stdout(&votexfer(&["simulate", "--config", config.to_str().unwrap()]));
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["runs"], 500);

    let out = dir.path().join("k.csv");
    stdout(&votexfer(&[
        "simulate-sweep",
        "--config",
        config.to_str().unwrap(),
        "--k-min",
        "0.5",
        "--k-max",
        "0.55",
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1 + 6);

    fs::write(&config, r#"{"k":0.51,"h":0.15,"alpha":0.5}"#).unwrap();
    let missing_seed = votexfer(&["simulate", "--config", config.to_str().unwrap()]);
    assert_eq!(missing_seed.status.code(), Some(3));
}

#[test]
fn manipulate_plan() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("votes.csv");
    let plan = dir.path().join("plan.json");
    fs::write(
        &votes,
        "district_id,party,votes\nD1,A,8000\nD1,B,2000\nD2,A,3000\nD2,B,7000\n",
    )
    .unwrap();
    fs::write(
        &plan,
        r#"{"strategy":"stronghold_split","district_id":"D1","party":"A","clone_margin_delta":1}"#,
    )
    .unwrap();
    let v = json(&[
        "manipulate",
        "--election",
        votes.to_str().unwrap(),
        "--plan",
        plan.to_str().unwrap(),
    ]);
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 3);
    assert_eq!(reports[0]["formula"], "DVT");
    assert_eq!(reports[0]["delta"], 0.0);
    assert_eq!(reports[1]["profitable"], true);
}

#[test]
fn votesplit_defaults_to_shipped_rows() {
    let v = json(&["votesplit"]);
    let pct: Vec<&str> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["split_percent"].as_str().unwrap())
        .collect();
    assert_eq!(pct, ["-1.07", "-2.17", "1.69", "10.09"]);
}

#[test]
fn exit_codes() {
    assert_eq!(votexfer(&[]).status.code(), Some(2));
    assert_eq!(
        votexfer(&[
            "allocate",
            "--formula",
            "xyz",
            "--list-seats",
            "1",
            "--fixture",
            "hungary2014"
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        votexfer(&["curves", "--alpha", "0.3", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(votexfer(&["sweep", "--help"]).status.code(), Some(0));

    let out = votexfer(&[
        "allocate",
        "--election",
        "/nonexistent.csv",
        "--formula",
        "dvt",
        "--list-seats",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "IoError");

    let out = votexfer(&["curves", "--alpha", "1.5"]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "InvalidMixRatio");
}

#[test]
fn help_lists_flags() {
    let help = stdout(&votexfer(&["allocate", "--help"]));
    for flag in ["--fixture", "--election", "--formula", "--list-seats", "--threshold"] {
        assert!(help.contains(flag), "{flag} missing");
    }
}
