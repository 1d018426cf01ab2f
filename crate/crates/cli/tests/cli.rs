use std::process::{Command, Output};

fn prerand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prerand")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_body(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn drift_distance_pair() {
    let o = prerand(&["distance", "--builtin", "plane_drift_05", "--from", "0,0", "--to", "1,0"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_body(&stdout(&o));
    assert_eq!(rows[0][4], "d_f");
    let d: f64 = rows[1][4].parse().unwrap();
    let back: f64 = rows[1][5].parse().unwrap();
    assert!((d - 1.5).abs() <= 0.015 && (back - 0.5).abs() <= 0.005);
}

#[test]
fn g2_torus_report() {
    let o = prerand(&["classify", "--builtin", "paper_g2_torus"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let verdict = |rung: &str| text.lines().find(|l| l.starts_with(rung)).map(|l| l.split_whitespace().nth(1).unwrap().to_string());
    assert_eq!(verdict("chronological ").as_deref(), Some("HOLDS"));
    assert_eq!(verdict("causal ").as_deref(), Some("FAILS"));
}

#[test]
fn outputs_carry_the_resolved_config() {
    let o = prerand(&["weight", "--builtin", "randers_torus", "--n", "16"]);
    let text = stdout(&o);
    assert!(text.starts_with("# name = \"randers_torus\""));
    assert!(text.contains("# n = 16") && text.contains("# seed = ") && text.contains("# stencil = 16"));
}

#[test]
fn output_is_deterministic() {
    let args = ["cutlocus", "--builtin", "cut_torus_point", "--n", "32", "--levels", "16,32"];
    let a = prerand(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_prerand")).args(args).env("PRERAND_THREADS", "1").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("# n,cut_nodes,fraction,agreement"));
    assert_eq!(csv_body(&text).len(), 32 * 32 + 1);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"x\"\n[manifold]\nbounds = [[0, 1], [0, 1]]\nperiodic = [true, true]\nspin = 3\n").unwrap();
    let o = prerand(&["weight", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"), "{}", String::from_utf8_lossy(&o.stderr));

    let o = prerand(&["distance", "--builtin", "plane_drift_05", "--from", "3,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = prerand(&["cutlocus", "--builtin", "cut_torus_point", "--target", "ellipse", "0,0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = prerand(&["magnetic", "--builtin", "euclidean_plane", "--heading", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_3() {
    // F_c has loops of negative length at this energy: no connector is guaranteed.
    let o = prerand(&["magnetic", "--builtin", "magnetic_constant_B", "--to", "0.5,0.5"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn magnetic_orbit_csv() {
    let o = prerand(&["magnetic", "--builtin", "magnetic_constant_B", "--B", "2", "--energy", "0.5", "--from", "0,0", "--dir", "0,1", "--span", "3.14159"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_body(&stdout(&o));
    assert_eq!(rows[0], ["t", "x", "y", "vx", "vy", "energy", "el_residual"]);
    for r in &rows[1..] {
        let (x, y): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        // radius 1/2 about (-1/2, 0)
        assert!((((x + 0.5).powi(2) + y * y).sqrt() - 0.5).abs() < 1e-6);
        assert!((r[5].parse::<f64>().unwrap() - 0.5).abs() < 1e-10);
    }
}

#[test]
fn convert_roundtrips_through_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g2.toml");
    let o = prerand(&["convert", "--builtin", "paper_g2_torus", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\n[pre_randers]\n") && !text.contains("\n[som]\n"));
    let o = prerand(&["weight", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# wt = 0.99999"));
}

#[test]
fn geodesic_modes() {
    let o = prerand(&["geodesic", "--builtin", "euclidean_plane", "--from", "0.1,0.1", "--to", "0.9,0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let len: f64 = text.lines().find_map(|l| l.strip_prefix("# length_f = ")).unwrap().parse().unwrap();
    assert!((len - (0.64f64 + 0.16).sqrt()).abs() < 1e-6);
    let o = prerand(&["geodesic", "--builtin", "randers_torus", "--from", "0.2,0.2", "--heading", "-1.0", "--span", "0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let o = prerand(&["geodesic", "--builtin", "euclidean_plane", "--periodic", "1,0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_single_criterion() {
    let o = prerand(&["selftest", "--criterion", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("criterion 2 vicious_detection: PASS"));
}
