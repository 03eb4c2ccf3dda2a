use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn wpca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpca"))
        .args(args)
        .env_remove("WPCA_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `quantity,value` rows as pairs.
fn quantities(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#') && *l != "quantity,value")
        .map(|l| {
            let (k, v) = l.split_once(',').unwrap();
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn quantity(text: &str, key: &str) -> f64 {
    let v = quantities(text).into_iter().find(|(k, _)| k == key).unwrap().1;
    wpca::format::parse_f64(&v).unwrap()
}

#[test]
fn bounds_examples() {
    let out = stdout(&wpca(&["bounds", "breakdown", "--eigs", "3,2,1,0.5", "--r2", "4", "--d", "2"]));
    assert_eq!(quantity(&out, "weak"), 0.125);
    assert_eq!(quantity(&out, "strong"), 0.25);

    let out = stdout(&wpca(&["bounds", "perturbation", "--gap", "1", "--r", "1", "--eps", "0.1"]));
    assert!((quantity(&out, "bound1") - 0.2).abs() < 1e-15);
    assert!((quantity(&out, "bound2") - 0.125).abs() < 1e-15);

    let out = stdout(&wpca(&["bounds", "perturbation", "--gap", "0", "--r", "1", "--eps", "0.1"]));
    assert!(quantities(&out).contains(&("bound1".into(), "+inf".into())));
    assert!(quantities(&out).iter().all(|(k, _)| k != "bound2"));

    let out = stdout(&wpca(&["bounds", "pca-breakdown", "--n", "1000", "--d", "2"]));
    assert_eq!((quantity(&out, "weak"), quantity(&out, "strong")), (0.001, 0.002));

    let out = stdout(&wpca(&["bounds", "rate", "--beta", "-0.25", "--p", "100", "--n", "400", "--eps", "0"]));
    assert_eq!(quantity(&out, "sampling_term"), 0.5);

    let out = stdout(&wpca(&["bounds", "covariance", "--eps", "0.5", "--r", "0", "--sigma-r", "1", "--n", "8", "--p", "1"]));
    assert_eq!(quantity(&out, "value"), 16.0);
}

#[test]
fn concentration_variants() {
    let mut eigs = vec!["0".to_string(); 100];
    eigs[0] = "0.5".into();
    let eigs = eigs.join(",");
    let base = ["bounds", "concentration", "--lam1", "1", "--lamp", "1", "--eigs", &eigs, "--r", "1", "--d", "1", "--eps", "0.1", "--n", "100"];
    let out = stdout(&wpca(&base));
    assert!((quantity(&out, "value") - 5.52).abs() < 1e-12);
    let mut sub = base.to_vec();
    sub.extend(["--sigma-sub", "0.05"]);
    let out = stdout(&wpca(&sub));
    assert!(out.contains("# variant: subgaussian"));
    assert!((quantity(&out, "sampling") - 1.28).abs() < 1e-12);
}

#[test]
fn fit_tiny_hand_csv_warns_on_tie() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "tiny.csv", "a,b\n1,0\n0,1\n");
    let out = wpca(&["fit", s(&csv), "--d", "1", "--radius", "none"]);
    let text = stdout(&out);
    assert!(text.contains("# eigenvalues: 0.5,0.5"));
    assert!(text.contains("# warning:"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tie"));
}

#[test]
fn fit_recovers_leading_axis_and_round_trips_through_angles() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("data.csv");
    let basis = dir.path().join("basis.csv");
    stdout(&wpca(&["sample", "--n", "1000", "--sigma", "25,1", "--seed", "3", "--out", s(&data)]));
    stdout(&wpca(&["fit", s(&data), "--d", "1", "--radius", "median", "--out", s(&basis)]));
    let e1 = write(&dir, "e1.csv", "1\n0\n");
    let out = stdout(&wpca(&["angles", s(&basis), s(&e1)]));
    assert!(quantity(&out, "largest") < 0.15);
    let same = stdout(&wpca(&["angles", s(&basis), s(&basis)]));
    assert_eq!(quantity(&same, "angle_1"), 0.0);
    assert_eq!(quantity(&same, "sin_largest"), 0.0);
}

#[test]
fn centering_flag_removes_offset() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "shifted.csv", "101,1\n99,-1\n102,2\n98,-2\n");
    let plain = stdout(&wpca(&["fit", s(&csv), "--radius", "none"]));
    let centered = stdout(&wpca(&["fit", s(&csv), "--radius", "none", "--center"]));
    let first = |t: &str| -> f64 { t.lines().filter(|l| !l.starts_with('#')).nth(2).unwrap().parse().unwrap() };
    assert!(first(&plain).abs() < 0.05);
    assert!(first(&centered).abs() > 0.3);
    assert!(centered.contains("center=true"));
}

#[test]
fn angles_examples() {
    let dir = TempDir::new().unwrap();
    let e1 = write(&dir, "e1.csv", "1\n0\n");
    let diag = write(&dir, "diag.csv", &format!("{0}\n{0}\n", std::f64::consts::FRAC_1_SQRT_2));
    let out = stdout(&wpca(&["angles", s(&e1), s(&diag)]));
    assert!((quantity(&out, "angle_1") - 0.785398).abs() < 1e-6);

    let a = write(&dir, "a.csv", "1,0\n0,1\n0,0\n0,0\n");
    let b = write(&dir, "b.csv", "1,0\n0,0\n0,1\n0,0\n");
    let out = stdout(&wpca(&["angles", s(&a), s(&b)]));
    assert!(quantity(&out, "angle_1").abs() < 1e-12);
    assert!((quantity(&out, "angle_2") - 1.570796).abs() < 1e-6);

    // Non-orthonormal input is repaired with a warning.
    let loose = write(&dir, "loose.csv", "2\n0\n");
    let out = wpca(&["angles", s(&loose), s(&e1)]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("re-orthonormalized"));
    assert_eq!(quantity(&stdout(&out), "largest"), 0.0);

    let three = write(&dir, "three.csv", "1\n0\n0\n");
    assert_eq!(wpca(&["angles", s(&e1), s(&three)]).status.code(), Some(2));
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let empty = write(&dir, "empty.csv", "");
    let ragged = write(&dir, "ragged.csv", "1,2\n3\n");
    let words = write(&dir, "words.csv", "1,2\nx,y\n");
    let ok = write(&dir, "ok.csv", "1,2\n3,4\n5,7\n");
    for args in [
        vec!["fit", s(&empty)],
        vec!["fit", s(&ragged)],
        vec!["fit", s(&words)],
        vec!["fit", "/nonexistent/file.csv"],
        vec!["fit", s(&ok), "--d", "2"],
        vec!["fit", s(&ok), "--radius", "bogus"],
        vec!["experiment", "fig9"],
        vec!["bounds", "perturbation", "--gap", "-1", "--r", "1", "--eps", "0.1"],
        vec!["no-such-command"],
    ] {
        let out = wpca(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let data = write(&dir, "d.csv", "3,0,0\n0,2,0\n0,0,1\n-3,0,0\n0,-2,0\n0,0,-1\n");
    let cfg = write(&dir, "run.conf", "seed = 9\n[fit]\nd = 2\nradius = none\n");
    let out = stdout(&wpca(&["--config", s(&cfg), "fit", s(&data)]));
    assert!(out.contains("seed=9") && out.contains("d=2") && out.contains("radius=none"));
    assert!(out.contains("\nv1,v2\n"));
    let out = stdout(&wpca(&["--config", s(&cfg), "fit", s(&data), "--d", "1", "--seed", "4"]));
    assert!(out.contains("seed=4") && out.contains("d=1"));
    let bad = write(&dir, "bad.conf", "[fit]\nwhat = 1\n");
    assert_eq!(wpca(&["--config", s(&bad), "fit", s(&data)]).status.code(), Some(2));
}

#[test]
fn output_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wpca"))
        .args(["bounds", "pca-breakdown", "--n", "10", "--d", "1"])
        .env("WPCA_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("bounds-pca-breakdown.csv")).unwrap();
    assert_eq!(quantity(&text, "weak"), 0.1);
}

fn without_timestamp(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("# timestamp"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn fig4_experiment_file_is_deterministic_and_dominated() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    stdout(&wpca(&["experiment", "fig4", "--seed", "11", "--out", s(&a)]));
    stdout(&wpca(&["experiment", "fig4", "--seed", "11", "--jobs", "2", "--out", s(&b)]));
    let strip = |t: String| t.replace(s(&b), s(&a)).replace("jobs=2", "jobs=auto");
    assert_eq!(without_timestamp(&a), strip(without_timestamp(&b)));

    let table = wpca::experiments::ResultTable::read_csv(std::fs::read(&a).unwrap().as_slice()).unwrap();
    assert_eq!(table.metadata("seed"), Some("11"));
    assert!(table.metadata("grid").is_some() && table.metadata("timestamp").is_some());
    let sins = table.select("sin_angle", &[]);
    let b1 = table.select("bound1", &[]);
    assert_eq!(sins.len(), 500);
    for (s, b) in sins.iter().zip(&b1) {
        assert_eq!(s.params, b.params);
        assert!(s.value.unwrap() <= b.value.unwrap() + 1e-9);
    }
}

#[test]
fn sample_is_seeded() {
    let a = stdout(&wpca(&["sample", "--n", "5", "--sigma", "1,2", "--distribution", "t3", "--seed", "1"]));
    let b = stdout(&wpca(&["sample", "--n", "5", "--sigma", "1,2", "--distribution", "t3", "--seed", "1"]));
    let c = stdout(&wpca(&["sample", "--n", "5", "--sigma", "1,2", "--distribution", "t3", "--seed", "2"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(wpca(&["sample", "--n", "5", "--sigma", "1", "--distribution", "t2"]).status.code(), Some(2));
}
