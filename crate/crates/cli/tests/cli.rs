use std::process::{Command, Output};

fn starnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starnet"))
        .args(args)
        .env_remove("STARNET_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bounds_rows() {
    let o = starnet(&["bounds", "--m-min", "2", "--m-max", "50"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,alpha_m,qopt,ratio");
    assert_eq!(lines[1], "2,2,2.82842712,1.41421356");
    assert_eq!(lines[2], "3,6,6.92820323,1.15470054");
    let last: Vec<&str> = lines[49].split(',').collect();
    assert_eq!(last[0], "50");
    let ratio: f64 = last[3].parse().unwrap();
    assert!((ratio - 1.2533).abs() < 0.02);
    for row in &lines[1..] {
        let f: Vec<&str> = row.split(',').collect();
        let (alpha, qopt, ratio): (f64, f64, f64) = (
            f[1].parse().unwrap(),
            f[2].parse().unwrap(),
            f[3].parse().unwrap(),
        );
        assert!((ratio - qopt / alpha).abs() < 1e-7 * ratio);
    }
}

#[test]
fn bounds_range_guard() {
    let o = starnet(&["bounds", "--m-min", "2", "--m-max", "51"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn verify_examples() {
    for (n, m, delta) in [
        ("2", "2", "2.82842712"),
        ("2", "3", "6.92820323"),
        ("3", "5", "35.7770876"),
    ] {
        let o = starnet(&["verify", "--n", n, "--m", m]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
        assert!(stdout(&o).contains(delta));
    }
}

#[test]
fn verify_is_stable() {
    let a = starnet(&["verify", "--n", "2", "--m", "4", "--format", "json"]);
    let b = starnet(&["verify", "--n", "2", "--m", "4", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["gamma"].as_f64().unwrap().abs() < 1e-7);
}

#[test]
fn capacity_guard_exit_code() {
    let o = starnet(&["lhv-brute", "--n", "5", "--m", "6"]);
    assert_eq!(o.status.code(), Some(3));
    let o = starnet(&["lhv-brute", "--n", "2", "--m", "3", "--max-states", "8"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors() {
    assert_eq!(starnet(&["nonsense"]).status.code(), Some(4));
    assert_eq!(starnet(&["verify", "--n", "1"]).status.code(), Some(4));
    assert_eq!(
        starnet(&["bounds", "--format", "xml"]).status.code(),
        Some(4)
    );
    assert_eq!(starnet(&["--help"]).status.code(), Some(0));
}

#[test]
fn lhv_brute_agrees() {
    let o = starnet(&["lhv-brute", "--n", "2", "--m", "4"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["alpha_strategy_max"], 12);
    assert_eq!(v["agree"], true);
}

#[test]
fn sos_check_random_has_slack() {
    let o = starnet(&[
        "sos-check",
        "--n",
        "2",
        "--m",
        "3",
        "--random",
        "--seed",
        "9",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["slack_ok"], true);
    assert!(v["gamma"].as_f64().unwrap() >= -1e-8);
}

#[test]
fn output_file_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.csv");
    let p = path.to_str().unwrap();
    let o = starnet(&["quantum", "--n", "2", "--m", "3", "--out", p]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("n,m,copies,i,absJ,delta,alpha,qopt,ratio,violated\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{p}.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "quantum");
    let argv: Vec<&str> = manifest["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap())
        .collect();
    assert_eq!(&argv[1..], &["quantum", "--n", "2", "--m", "3", "--out", p]);
    assert_eq!(manifest["params"]["quantum"]["sc"]["m"], 3);
}

#[test]
fn sweep_and_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("s.json");
    let csv_path = dir.path().join("s.csv");
    let o = starnet(&[
        "sweep",
        "--n",
        "2",
        "--m",
        "2",
        "--steps",
        "11",
        "--format",
        "json",
        "--out",
        json_path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let o = starnet(&[
        "export",
        "--input",
        json_path.to_str().unwrap(),
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("v,delta,alpha,violated"));
    assert_eq!(lines.next(), Some("0,0,2,false"));
    assert_eq!(csv.lines().last(), Some("1,2.82842712,2,true"));
}

#[test]
fn evaluation_export_matches_direct_csv() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("e.json");
    let args = ["quantum", "--n", "3", "--m", "4", "--v", "0.9"];
    let direct = starnet(&args);
    let mut with_json = args.to_vec();
    with_json.extend(["--format", "json", "--out", json_path.to_str().unwrap()]);
    assert!(starnet(&with_json).status.success());
    let exported = starnet(&["export", "--input", json_path.to_str().unwrap()]);
    assert_eq!(stdout(&direct), stdout(&exported));
}

#[test]
fn seesaw_runs_with_env_threads() {
    let o = Command::new(env!("CARGO_BIN_EXE_starnet"))
        .args([
            "seesaw",
            "--n",
            "2",
            "--m",
            "3",
            "--seeds",
            "2",
            "--threads",
            "1",
        ])
        .env("STARNET_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["best_delta"].as_f64().unwrap() - 4.0 * 3f64.sqrt()).abs() < 1e-6);
    let bad = Command::new(env!("CARGO_BIN_EXE_starnet"))
        .args(["bounds"])
        .env("STARNET_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn activate_requires_m_four() {
    assert_eq!(
        starnet(&["activate", "--m", "3", "--v", "0.9"])
            .status
            .code(),
        Some(4)
    );
}
