use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn seme(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seme"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn hallway() -> String {
    data("hallway_a.scn").display().to_string()
}

/// Value following `key=` in a line of `key=value` pairs.
fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn angles_on_bundled_hallway() {
    let o = seme(&["angles", "--scenario", &hallway()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.starts_with("theta_i="), "{line}");
    for (k, want) in [
        ("theta_i", 14.5),
        ("phi_i", 116.0),
        ("theta_r", 4.3),
        ("phi_r", -106.1),
    ] {
        assert!((field(&line, k) - want).abs() <= 0.1, "{k} in {line}");
    }
}

#[test]
fn tco_on_bundled_costs() {
    let costs = data("tco_costs.json").display().to_string();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = seme(&["tco", "--costs", &costs, "--dt-years", "5", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.contains("delta=1245 $"), "{line}");
    assert!(line.contains("saving=18.44 $/m2"), "{line}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tco.json")).unwrap())
            .unwrap();
    assert_eq!(report["delta"], 1245.0);
}

#[test]
fn malformed_scenario_exits_one_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scn");
    std::fs::write(&path, r#"{"access_points": [{"id": "a"}]}"#).unwrap();
    let o = seme(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("position"), "{}", stderr(&o));
}

#[test]
fn invalid_scenario_and_overrides_exit_one() {
    let o = seme(&["validate", "--scenario", &hallway()]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("no LOS to focus"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = seme(&[
        "simulate",
        "--scenario",
        &hallway(),
        "--out",
        &out,
        "--max-reflections",
        "99",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("max_reflections"));

    let o = seme(&[
        "sensitivity",
        "--scenario",
        &hallway(),
        "--out",
        &out,
        "--dy-range",
        "0.05:0.1:0.05",
    ]);
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(
        seme(&["angles", "--scenario", &hallway(), "--mode", "loud"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn missing_files_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.scn");
    let o = seme(&["validate", "--scenario", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = seme(&["tco", "--costs", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn simulate_into(dir: &Path, threads: &str) {
    let o = Command::new(env!("CARGO_BIN_EXE_seme"))
        .args([
            "simulate",
            "--scenario",
            &hallway(),
            "--out",
            dir.to_str().unwrap(),
        ])
        .args(["--extra-ap", "29.2,2.0,2.88"])
        .env("SEME_THREADS", threads)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn simulate_writes_all_products_deterministically() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate_into(a.path(), "1");
    simulate_into(b.path(), "4");
    let headers = [
        ("grid_ref.csv", "x_m,y_m,z_m,region,p_rx_dbm"),
        ("grid_seme.csv", "x_m,y_m,z_m,region,p_rx_dbm"),
        ("map_ref.csv", "x_m,y_m,z_m,region,below"),
        ("map_seme.csv", "x_m,y_m,z_m,region,below"),
        ("cdf_ref_A.csv", "p_hat_dbm,theta"),
        ("cdf_seme_A.csv", "p_hat_dbm,theta"),
        ("delta.csv", "x_m,y_m,z_m,region,delta_db"),
        ("stats.json", "{"),
    ];
    for (name, header) in headers {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between thread counts");
        assert!(String::from_utf8_lossy(&x).starts_with(header), "{name}");
    }
    let stats: serde_json::Value =
        serde_json::from_slice(&std::fs::read(a.path().join("stats.json")).unwrap()).unwrap();
    for key in ["min_db", "max_db", "avg_db", "dev_db"] {
        assert!(stats["delta"][key].is_f64(), "{key}");
    }
    let region = &stats["regions"][0];
    assert_eq!(region["samples"], 1080);
    assert!(region["rho"].as_f64().unwrap() > 0.0);
    assert!(stats["std_comparison"]["std"]["lambda"].is_f64());
}

#[test]
fn simulate_without_panels_skips_panel_products() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = seme(&[
        "simulate",
        "--scenario",
        &hallway(),
        "--out",
        &out,
        "--no-panels",
        "--threshold-dbm",
        "-70",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("grid_ref.csv").exists());
    assert!(!dir.path().join("grid_seme.csv").exists());
    assert!(!dir.path().join("delta.csv").exists());
    let stats: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["threshold_dbm"], -70.0);
}

#[test]
fn sweeps_and_pattern_emit_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = seme(&[
        "sweep-size",
        "--scenario",
        &hallway(),
        "--out",
        &out,
        "--sizes",
        "0.28:10,0.55:20",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("size_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let o = seme(&[
        "sensitivity",
        "--scenario",
        &hallway(),
        "--out",
        &out,
        "--dy-range=-0.1:0.1:0.1",
        "--dz-range=-0.1:0.1:0.1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("sensitivity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
    assert!(csv.contains("\n0,0,true,"));
    assert!(dir.path().join("sensitivity_slices.csv").exists());

    let o = seme(&[
        "pattern",
        "--scenario",
        &hallway(),
        "--out",
        &out,
        "--resolution",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    let d_max: f64 = line
        .split("d_max=")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((29.0..33.0).contains(&d_max), "{line}");
    let csv = std::fs::read_to_string(dir.path().join("pattern_S_A.csv")).unwrap();
    assert!(csv.starts_with("theta_deg,phi_deg,directivity_db\n"));
}
