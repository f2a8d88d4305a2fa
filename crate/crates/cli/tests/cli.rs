use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/qubit.json")
}

fn histq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_histq"))
        .args(args)
        .env_remove("HISTQ_TOL")
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("scenario.json");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"{
    "dim": 2,
    "rho": {"matrix": {"re": [[0.75, 0.0], [0.0, 0.25]]}},
    "times": [1.0],
    "histories": [{"label": "up", "projectors": [{"span": {"basis": "computational", "indices": [0]}}]}]
}"#;

#[test]
fn every_subcommand_succeeds_on_the_bundled_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = bundled();
    for cmd in ["decohere", "windows", "entropy", "verify"] {
        let out = dir.path().join(cmd);
        let o = histq(&[
            cmd,
            "--scenario",
            scenario.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let text = std::fs::read_to_string(out.join(format!("{cmd}.json"))).unwrap();
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json["command"], cmd);
    }
}

#[test]
fn report_rows_carry_representation_tags() {
    let o = histq(&["decohere", "--scenario", bundled().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let tags: std::collections::BTreeSet<String> = json["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["tag"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(tags.into_iter().collect::<Vec<_>>(), ["ILS2", "decf", "decf1", "propa"]);
    for key in ["decf", "ILS2", "propa"] {
        assert!(json["residuals"][key].as_f64().unwrap() <= 1e-9);
    }

    let o = histq(&["entropy", "--scenario", bundled().to_str().unwrap()]);
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(json["rows"].as_array().unwrap().iter().all(|r| r["tag"] == "ent"));
}

#[test]
fn malformed_rho_exits_two_and_names_rho() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), &SMALL.replace("0.75", "0.8"));
    let o = histq(&["decohere", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rho"));
}

#[test]
fn parse_errors_report_the_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        &SMALL.replace("\"indices\": [0]", "\"indices\": [\"zero\"]"),
    );
    let o = histq(&["windows", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("histories[0].projectors[0].span.indices[0]"), "{err}");

    let o = histq(&[
        "windows",
        "--scenario",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_sectors_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), &SMALL.replace("[1.0]", "[1.0, 2.0, 3.0, 4.0]").replace(
        "\"histories\": [{\"label\": \"up\", \"projectors\": [{\"span\": {\"basis\": \"computational\", \"indices\": [0]}}]}]",
        "\"histories\": []",
    ));
    let o = histq(&["windows", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn b2_doubling_differences_approach_ln2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("div");
    let o = histq(&[
        "diverge",
        "--series",
        "b2",
        "--max-n",
        "16384",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!out.join("b1.csv").exists());
    let csv = std::fs::read_to_string(out.join("b2.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,value"));
    let points: Vec<(usize, f64)> = lines
        .map(|l| {
            let (n, v) = l.split_once(',').unwrap();
            (n.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(points.last().unwrap().0, 16384);
    let mut checked = 0;
    for &(n, v) in &points {
        if let Some(&(_, v2)) = points.iter().find(|p| p.0 == 2 * n) {
            if n >= 1024 {
                assert!((v2 - v - std::f64::consts::LN_2).abs() <= 0.05);
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 4);
}

#[test]
fn uncertifiable_series_exit_three() {
    let o = histq(&["diverge", "--series", "b2", "--max-n", "512"]);
    assert_eq!(o.status.code(), Some(3));
    let json: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(json["passed"], false);
}

#[test]
fn tolerance_overrides_come_from_the_environment() {
    let scenario = bundled();
    let o = Command::new(env!("CARGO_BIN_EXE_histq"))
        .args(["decohere", "--scenario", scenario.to_str().unwrap()])
        .env("HISTQ_TOL", "consistency=oops")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("HISTQ_TOL"));
    let o = Command::new(env!("CARGO_BIN_EXE_histq"))
        .args(["decohere", "--scenario", scenario.to_str().unwrap()])
        .env("HISTQ_TOL", "consistency=1e-8")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn seeded_runs_are_reproducible() {
    let scenario = bundled();
    let run = |seed: &str| {
        histq(&[
            "verify",
            "--scenario",
            scenario.to_str().unwrap(),
            "--seed",
            seed,
            "--max-n",
            "4096",
        ])
    };
    let (a, b, c) = (run("5"), run("5"), run("6"));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}
