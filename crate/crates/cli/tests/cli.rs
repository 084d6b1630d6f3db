use serde_json::Value;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn w4(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_w4"))
        .args(args)
        .output()
        .expect("spawn w4")
}

fn json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stdout);
    serde_json::from_str(text.lines().next().expect("a JSON line")).expect("valid JSON")
}

fn write(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, v.to_string()).unwrap();
    p
}

fn p_form() -> Value {
    serde_json::json!([[
        [1.0, 0.3, 0.0, 0.0],
        [0.3, 0.5, 0.0, 0.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, -0.5]
    ]])
}

fn zero_cubic() -> Value {
    serde_json::to_value(vec![[[[0.0f64; 4]; 4]; 4]]).unwrap()
}

#[test]
fn gram_matches_hand_value_and_uses_seventeen_digits() {
    let out = w4(&["gram", "--family", "G", "--sigma", "1", "--tau", "0.5"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("3.1835395956153836e5"), "{text}");
    let g22 = json(&out)["matrix"][1][1].as_f64().unwrap();
    assert!((g22 - 32256.0 * PI * PI).abs() < 1e-9 * g22);
}

#[test]
fn gram_quad_check_sets_exit_code() {
    let tab = w4(&[
        "gram",
        "--family",
        "H",
        "--sigma",
        "1",
        "--tau",
        "0.5",
        "--quad-check",
    ]);
    assert_eq!(tab.status.code(), Some(1));
    assert_eq!(
        json(&tab)["quad_check"]["worst_entry"],
        serde_json::json!([6, 6])
    );
    let int = w4(&[
        "gram",
        "--family",
        "H",
        "--sigma",
        "1",
        "--tau",
        "0.5",
        "--quad-check",
        "--integrated",
    ]);
    assert!(int.status.success());
}

#[test]
fn gram_at_infinity_reports_divergence() {
    let out = w4(&["gram", "--family", "G", "--sigma", "inf", "--tau", "0.5"]);
    let v = json(&out);
    assert_eq!(v["sigma"], "inf");
    assert!(v["divergent"]
        .as_array()
        .unwrap()
        .iter()
        .any(|e| e == &serde_json::json!([6, 6])));
}

#[test]
fn residue_converges_to_minus_sixteen_pi_squared() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "germ.json",
        &serde_json::json!({"kind": "germ", "p": p_form()}),
    );
    let out = w4(&[
        "residue",
        "--immersion",
        f.to_str().unwrap(),
        "--verify",
        "1e-4",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((last[1] + 16.0 * PI * PI).abs() < 1e-4);
}

#[test]
fn flat_energy_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "flat.json",
        &serde_json::json!({"kind": "flat", "m": 2}),
    );
    let out = w4(&[
        "energy",
        "--immersion",
        f.to_str().unwrap(),
        "--domain",
        "annulus:0.5,1",
        "--quad",
        "8",
    ]);
    assert!(out.status.success());
    assert_eq!(json(&out)["e_gr"].as_f64(), Some(0.0));
}

#[test]
fn rotate_returns_positive_pairing() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.json", &p_form());
    let r = write(
        dir.path(),
        "r.json",
        &serde_json::json!([[
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.3, 0.0],
            [0.0, 0.0, 0.0, -0.3]
        ]]),
    );
    let out = w4(&[
        "rotate",
        "--p",
        p.to_str().unwrap(),
        "--r",
        r.to_str().unwrap(),
        "--restarts",
        "4",
        "--seed",
        "7",
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(v["pairing"].as_f64().unwrap() > 0.0);
    let s: Vec<Vec<f64>> = serde_json::from_value(v["s"].clone()).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let d: f64 = (0..4).map(|k| s[k][i] * s[k][j]).sum();
            assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
        }
    }
}

#[test]
fn connect_verdict_drives_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let germ = serde_json::json!({"p": p_form(), "q": zero_cubic()});
    let auto = write(
        dir.path(),
        "auto.json",
        &serde_json::json!({"germ1": germ, "germ2": germ, "t": "auto"}),
    );
    let out = w4(&["connect", "--spec", auto.to_str().unwrap(), "--verify"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["verdict"], true);
    assert_eq!(v["t"].as_f64(), Some(3.0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("gamma,alpha,beta,exact,leading,ratio"));

    let zero = write(
        dir.path(),
        "zero.json",
        &serde_json::json!({"germ1": germ, "germ2": germ, "t": 0.0}),
    );
    let csv = dir.path().join("table.csv");
    let out = w4(&[
        "connect",
        "--spec",
        zero.to_str().unwrap(),
        "--verify",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 4);
}

#[test]
fn triharmonic_solution_is_triharmonic() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "forms.json",
        &serde_json::json!({"p": p_form(), "q": zero_cubic(), "r": p_form(), "s": zero_cubic()}),
    );
    let out = w4(&[
        "triharmonic",
        "--forms",
        f.to_str().unwrap(),
        "--gamma",
        "0.1",
        "--verify",
        "1e-9",
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["interpolant"]["gamma"].as_f64(), Some(0.1));
    assert!((v["interpolant"]["alpha"].as_f64().unwrap() - 1e-8).abs() < 1e-20);
}

#[test]
fn invert_verifies_identity() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "germ.json",
        &serde_json::json!({"kind": "germ", "p": p_form()}),
    );
    let out = w4(&[
        "invert",
        "--immersion",
        f.to_str().unwrap(),
        "--verify",
        "--radii",
        "0.1",
        "--quad",
        "12",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&out)["pass"], true);
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.json", &serde_json::json!({"kind": "nope"}));
    let out = w4(&["energy", "--immersion", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = w4(&["gram", "--family", "X", "--sigma", "1", "--tau", "0.5"]);
    assert!(!out.status.success());
}
