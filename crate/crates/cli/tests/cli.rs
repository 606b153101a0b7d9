use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cpl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpl")).args(args).output().expect("binary runs")
}

fn sample(dir: &Path, family: &str, n: usize) -> PathBuf {
    let p = dir.join(format!("{family}{n}.json"));
    let o = cpl(&["sample", family, &n.to_string(), "--out", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    p
}

fn csv_field(out: &Output, col: usize) -> f64 {
    let s = String::from_utf8_lossy(&out.stdout);
    let line = s.lines().nth(1).expect("data line");
    line.split(',').nth(col).unwrap().parse().unwrap()
}

#[test]
fn estimate_examples() {
    let dir = tempfile::tempdir().unwrap();
    let ball = sample(dir.path(), "ball", 5);
    let o = cpl(&["estimate", ball.to_str().unwrap(), "M", "--samples", "5000"]);
    assert!(o.status.success());
    assert!((csv_field(&o, 2) - 1.0).abs() < 1e-12);
    assert!(csv_field(&o, 3) < 1e-12);

    let s3 = sample(dir.path(), "simplex", 3);
    let o = cpl(&["estimate", s3.to_str().unwrap(), "dK"]);
    assert!((csv_field(&o, 2) - 3.0).abs() < 3e-3);

    let c3 = sample(dir.path(), "cube", 3);
    let o = cpl(&["estimate", c3.to_str().unwrap(), "volume"]);
    assert!((csv_field(&o, 2) - 8.0).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": 2, \"type\": \"vpolytope\"").unwrap();
    assert_eq!(cpl(&["estimate", bad.to_str().unwrap(), "M"]).status.code(), Some(2));
    // conv{0, e_i} has the origin on its boundary
    let s3 = sample(dir.path(), "simplex", 3);
    let o = cpl(&["estimate", s3.to_str().unwrap(), "M"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("interior"));
    assert_eq!(cpl(&["pipeline", s3.to_str().unwrap(), "nope"]).status.code(), Some(2));
}

#[test]
fn pipeline_reports() {
    let dir = tempfile::tempdir().unwrap();
    let ball = sample(dir.path(), "ball", 4);
    let out = dir.path().join("t2.json");
    let o = cpl(&["pipeline", ball.to_str().unwrap(), "theorem2", "--samples", "20000", "--light", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let product = v["ledger"]["measured"]
        .as_array()
        .unwrap()
        .iter()
        .find(|m| m[0] == "final.product")
        .unwrap()[1]
        .as_f64()
        .unwrap();
    assert!((product - 1.0).abs() < 1e-9);

    let s6 = sample(dir.path(), "simplex", 6);
    let o = cpl(&["pipeline", s6.to_str().unwrap(), "theorem1", "--eps", "0.5", "--samples", "20000", "--light"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let cert = v["ledger"]["certified"].as_array().unwrap().iter().find(|c| c["name"] == "stage1.mstar_le_1").unwrap().clone();
    assert_eq!(cert["passed"], true);
}

#[test]
fn theorem5_pipeline_has_eight_ingredients() {
    let dir = tempfile::tempdir().unwrap();
    let s = sample(dir.path(), "simplex", 5);
    let c = sample(dir.path(), "cube", 5);
    let o = cpl(&["pipeline", s.to_str().unwrap(), c.to_str().unwrap(), "theorem5", "--samples", "10000", "--light"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let names: Vec<&str> = v["ingredients"].as_array().unwrap().iter().map(|i| i[0].as_str().unwrap()).collect();
    for n in ["norm_K_polar", "ell_D", "norm_D", "ell_K_polar", "norm_D_polar", "ell_K", "norm_K", "ell_D_polar"] {
        assert!(names.contains(&n), "{n}");
    }
    assert!(v["value"].as_f64().unwrap().is_finite());
}

#[test]
fn verify_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("suite.json");
    std::fs::write(
        &suite,
        r#"{"families":["simplex","cube","cylinder-counterexample"],"dims":[2,3],"seeds":[4],
            "checks":["rogers_shephard","urysohn","dk_bound","sandwich"],"samples":4000}"#,
    )
    .unwrap();
    let a = cpl(&["verify", suite.to_str().unwrap()]);
    let b = cpl(&["verify", suite.to_str().unwrap()]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8_lossy(&a.stdout);
    assert!(text.starts_with("family,dim,seed,check"));
    assert!(text.lines().any(|l| l.starts_with("simplex,3,4,rogers_shephard.ratio")));
}

#[test]
fn oracle_distance() {
    let dir = tempfile::tempdir().unwrap();
    let s = sample(dir.path(), "regular-simplex", 2);
    let b = sample(dir.path(), "ball", 2);
    let o = cpl(&["distance", s.to_str().unwrap(), b.to_str().unwrap(), "--method", "oracle"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let d = v["value"].as_f64().unwrap();
    assert!((1.9..=2.04).contains(&d), "{d}");
    assert_eq!(v["method"], "oracle");
}
