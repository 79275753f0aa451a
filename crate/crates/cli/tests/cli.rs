use std::process::{Command, Output};

use rhombill::io::BeamTable;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rhombill"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn beams_json_is_deterministic_with_and_without_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let args = ["beams", "--alpha", "pi/5", "--band", "-3..3"];
    let plain = run(&args);
    assert_eq!(code(&plain), 0);
    let cached: Vec<&str> = args.iter().copied().chain(["--cache-dir", cache]).collect();
    let first = run(&cached);
    let second = run(&cached);
    assert_eq!(plain.stdout, first.stdout);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);

    // equal angles written differently share the entry
    let other = run(&["beams", "--alpha", "0.2*pi", "--band", "-3..3", "--cache-dir", cache]);
    assert_eq!(other.stdout, first.stdout);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn band_zero_one_gives_two_records() {
    let o = run(&["beams", "--alpha", "0.7", "--band", "0..1"]);
    assert_eq!(code(&o), 0);
    let t: BeamTable = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(t.beams.len(), 2);
    assert_eq!(t.alpha_spec, "0.7");
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("beams.svg");
    let args = ["beams", "--alpha", "0.7", "--band", "0..3", "--format", "svg"];
    let a = run(&args);
    let mut with_file = args.to_vec();
    with_file.extend(["--output", path.to_str().unwrap()]);
    let b = run(&with_file);
    assert_eq!(code(&b), 0);
    assert!(b.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), a.stdout);
    assert!(String::from_utf8(a.stdout).unwrap().contains("<svg"));
}

#[test]
fn render_is_deterministic() {
    let args = ["render", "--alpha", "0.7", "--format", "svg"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.matches("<polygon").count(), 3);
}

#[test]
fn verify_passes() {
    let o = run(&["verify", "--alpha", "0.7", "--n", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["N"], 3);
    assert!(v["checks"].as_array().unwrap().len() > 5);
}

#[test]
fn escape_and_coverage() {
    let o = run(&["escape", "--alpha", "0.7", "--nmax", "4"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["nested"], true);
    assert_eq!(v["sides"][0]["entries"].as_array().unwrap().len(), 4);

    let o = run(&["coverage", "--alpha", "0.7", "--n", "5"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lo: f64 = v["fraction"][0].as_str().unwrap().parse().unwrap();
    assert!((0.75..0.76).contains(&lo));
}

#[test]
fn return_map_perpendicular() {
    let o = run(&["return-map", "--alpha", "0.7", "--theta", "pi/2", "--band", "-3..3"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let classes: Vec<&str> = v["intervals"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["class"]["class"].as_str().unwrap())
        .collect();
    assert!(classes.contains(&"escaping"));
    assert!(classes.contains(&"periodic"));
}

#[test]
fn gas_equal_masses() {
    let o = run(&["gas", "--m1", "1", "--m2", "1", "--events", "3"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["range"], "upper-boundary");
    assert!((v["alpha"].as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
}

#[test]
fn usage_errors_exit_3() {
    for args in [
        &["beams", "--alpha", "2*pi/7 + x", "--band", "0..1"][..],
        &["beams", "--alpha", "0.7", "--band", "3"],
        &["beams", "--alpha", "pi/3", "--band", "0..1"],
        &["verify", "--alpha", "0.5", "--n", "2"],
        &["verify", "--alpha", "0.7", "--n", "2", "--format", "svg"],
        &["frobnicate"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 3, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn parse_error_reports_position() {
    let o = run(&["beams", "--alpha", "2*pi/7 + x", "--band", "0..1"]);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("position 9"), "{err}");
}
