use std::path::Path;
use std::process::{Command, Output};

fn fracgp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracgp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn non_power_of_two_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracgp(&["groundstate", "--s", "1.0", "--n", "100"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_arguments_and_bad_values_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(fracgp(&["minimize", "--s", "0.9"], dir.path()).status.code(), Some(2));
    assert_eq!(fracgp(&["groundstate", "--s", "0.4"], dir.path()).status.code(), Some(2));
    assert_eq!(fracgp(&["minimize", "--s", "0.9", "--N", "-1"], dir.path()).status.code(), Some(2));
    assert_eq!(fracgp(&["saddle", "--s", "1.0", "--N", "2", "--L", "20", "--n", "64"], dir.path()).status.code(), Some(2));
}

#[test]
fn ground_state_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracgp(&["groundstate", "--s", "1.0", "--L", "20", "--n", "128"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&dir.path().join("groundstate.json"));
    assert_eq!(report["identities_hold"], true);
    let sidecar = json(&dir.path().join("Q.json"));
    assert_eq!(sidecar["n"], 128);
    assert_eq!(sidecar["L"], 20.0);
    assert_eq!(sidecar["kind"], "ground_state");
    assert_eq!(std::fs::metadata(dir.path().join("Q.bin")).unwrap().len(), 128 * 128 * 8);
    let config = json(&dir.path().join("config.json"));
    assert_eq!(config["command"], "groundstate");
    assert_eq!(config["n"], 128);
}

#[test]
fn small_box_trips_the_resolution_guard() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracgp(&["groundstate", "--s", "1.0", "--L", "16", "--n", "256"], dir.path());
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn n_star_curve_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracgp(&["groundstate", "--s-list", "0.95,1.0", "--L", "40", "--n", "256"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(dir.path().join("n_star.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "s,Ns_star,kinetic,quartic,residual,iterations");
    assert_eq!(lines.len(), 3);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "groundstate", "s": 1.0, "L": 20, "n": 64}"#).unwrap();
    let out = dir.path().join("out");
    let o = fracgp(&["groundstate", "--config", cfg.to_str().unwrap(), "--n", "128"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let config = json(&out.join("config.json"));
    assert_eq!(config["n"], 128);
    assert_eq!(config["L"], 20.0);

    std::fs::write(&cfg, r#"{"s": 1.0, "bogus": 3}"#).unwrap();
    assert_eq!(fracgp(&["groundstate", "--config", cfg.to_str().unwrap()], &out).status.code(), Some(2));
    std::fs::write(&cfg, r#"{"command": "sweep", "s": 1.0}"#).unwrap();
    assert_eq!(fracgp(&["groundstate", "--config", cfg.to_str().unwrap()], &out).status.code(), Some(2));
}

#[test]
fn supercritical_mass_escapes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["minimize", "--s", "0.99", "--N", "1.5x", "--L", "32", "--n", "128", "--gs-L", "40", "--gs-n", "256"];
    let o = fracgp(&args, dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["classification"], "escaped");
    assert_eq!(report["nonexistence"]["certified"], true);
    assert_eq!(json(&dir.path().join("u.json"))["kind"], "escaped");
}

#[test]
fn tabulated_trap_matches_harmonic() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("trap.csv");
    let mut text = String::from("r,V,rVprime\n");
    for k in 0..=40_000 {
        let r = k as f64 * 1e-3;
        text.push_str(&format!("{r},{},{}\n", r * r, 2.0 * r * r));
    }
    std::fs::write(&table, text).unwrap();
    let common = ["minimize", "--s", "1.0", "--N", "2", "--L", "16", "--n", "64", "--gs-L", "20", "--gs-n", "128"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = fracgp(&common, &a);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let mut with_file = common.to_vec();
    with_file.extend(["--potential", "file", "--potential-file", table.to_str().unwrap()]);
    let o = fracgp(&with_file, &b);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let (ea, eb) = (json(&a.join("report.json")), json(&b.join("report.json")));
    let (ea, eb) = (ea["breakdown"]["total"].as_f64().unwrap(), eb["breakdown"]["total"].as_f64().unwrap());
    assert!((ea - eb).abs() < 1e-6 * ea, "{ea} {eb}");
    assert_eq!(fracgp(&["minimize", "--s", "1.0", "--N", "2", "--potential", "file"], &b).status.code(), Some(2));
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["minimize", "--s", "1.0", "--N", "2", "--L", "16", "--n", "64", "--gs-L", "20", "--gs-n", "128", "--random-init", "--seed", "7"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(fracgp(&args, &a).status.code(), Some(0));
    assert_eq!(fracgp(&args, &b).status.code(), Some(0));
    for f in ["report.json", "u.bin", "u.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_writes_the_documented_schema() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--s-list", "0.9", "--N", "0.5x", "--L", "32", "--n", "128", "--gs-L", "40", "--gs-n", "256"];
    let o = fracgp(&args, dir.path());
    assert!(matches!(o.status.code(), Some(0 | 3 | 5)), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "s,Ns_star,t_s,eN,kin_min,kin_saddle,c_lo,c_hi,eps,rescale_err,min_err,mu_min,mu_saddle,status"
    );
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[1].split(',').count(), 14);
    let summary = json(&dir.path().join("sweep_summary.json"));
    assert!(summary["verdicts"].as_array().is_some_and(|v| !v.is_empty()));
}

#[test]
fn verify_prints_one_line_per_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracgp(&["verify", "--s", "1.0", "--L", "20", "--n", "128", "--seed", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let checks = json(&dir.path().join("verify.json"));
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), checks.as_array().unwrap().len());
}
