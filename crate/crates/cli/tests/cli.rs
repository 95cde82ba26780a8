use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn saasel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saasel"))
        .args(args)
        .env_remove("SAASEL_BACKEND")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// At least `a` actuators and `b` sensors on `n` nodes.
fn write_at_least(p: &Path, n: usize, a: f64, b: f64) {
    let mut rows = Vec::new();
    let mut act = vec![0.0; 2 * n];
    let mut sen = vec![0.0; 2 * n];
    act[..n].iter_mut().for_each(|v| *v = -1.0);
    sen[n..].iter_mut().for_each(|v| *v = -1.0);
    rows.push(act);
    rows.push(sen);
    let v = serde_json::json!({ "Phi": rows, "phi": [-a, -b] });
    fs::write(p, v.to_string()).unwrap();
}

#[test]
fn gen_mass_spring_has_twenty_states() {
    let dir = TempDir::new().unwrap();
    let m = path(&dir, "m.json");
    let o = saasel(&["gen", "mass-spring", "--n", "10", "-o", s(&m)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&m);
    assert_eq!(v["N"], 10);
    assert_eq!(v["A"].as_array().unwrap().len(), 20);
}

#[test]
fn gen_rejects_single_mass() {
    let o = saasel(&["gen", "mass-spring", "--n", "1"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&saasel(&["solve", "--bogus"])), 1);
    assert_eq!(
        code(&saasel(&["solve", "--method", "nope", "--model", "x"])),
        1
    );
    assert_eq!(code(&saasel(&["--help"])), 0);
}

#[test]
fn missing_model_is_an_io_error() {
    let o = saasel(&[
        "solve",
        "--method",
        "bsa-pbh",
        "--model",
        "/nonexistent/m.json",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn damped_chain_is_open_loop_stable() {
    let dir = TempDir::new().unwrap();
    let m = path(&dir, "m.json");
    let g = path(&dir, "g.json");
    assert_eq!(
        code(&saasel(&[
            "gen",
            "mass-spring",
            "--n",
            "3",
            "--damping",
            "0.1",
            "-o",
            s(&m)
        ])),
        0
    );
    let zero = serde_json::json!({ "selection": "000000", "gain": vec![vec![0.0; 6]; 3] });
    fs::write(&g, zero.to_string()).unwrap();
    let o = saasel(&["verify", "--model", s(&m), "--gain", s(&g)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn zero_gain_on_undamped_chain_fails_verification() {
    let dir = TempDir::new().unwrap();
    let m = path(&dir, "m.json");
    let g = path(&dir, "g.json");
    assert_eq!(
        code(&saasel(&["gen", "mass-spring", "--n", "3", "-o", s(&m)])),
        0
    );
    let zero = serde_json::json!({ "selection": "000000", "gain": vec![vec![0.0; 6]; 3] });
    fs::write(&g, zero.to_string()).unwrap();
    let o = saasel(&["verify", "--model", s(&m), "--gain", s(&g)]);
    assert_ne!(code(&o), 0);
}

#[test]
fn verify_rejects_wrong_gain_shape() {
    let dir = TempDir::new().unwrap();
    let m = path(&dir, "m.json");
    let g = path(&dir, "g.json");
    saasel(&["gen", "mass-spring", "--n", "2", "-o", s(&m)]);
    let bad = serde_json::json!({ "selection": "1111", "gain": [[0.0]] });
    fs::write(&g, bad.to_string()).unwrap();
    assert_eq!(
        code(&saasel(&["verify", "--model", s(&m), "--gain", s(&g)])),
        1
    );
}

#[test]
fn empty_actuator_budget_is_infeasible() {
    let dir = TempDir::new().unwrap();
    let m = path(&dir, "m.json");
    let l = path(&dir, "l.json");
    saasel(&["gen", "random", "--nodes", "2", "--seed", "3", "-o", s(&m)]);
    let v = serde_json::json!({ "Phi": [[1.0, 1.0, 0.0, 0.0]], "phi": [0.0] });
    fs::write(&l, v.to_string()).unwrap();
    for method in ["bsa-sdp", "bsa-pbh", "misdp"] {
        let o = saasel(&[
            "solve",
            "--method",
            method,
            "--model",
            s(&m),
            "--logistic",
            s(&l),
        ]);
        assert_eq!(
            code(&o),
            2,
            "{method}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn mass_spring_pipeline() {
    let dir = TempDir::new().unwrap();
    let m = path(&dir, "m.json");
    let l = path(&dir, "l.json");
    let r = path(&dir, "r.json");
    let r2 = path(&dir, "r2.json");
    saasel(&["gen", "mass-spring", "--n", "10", "-o", s(&m)]);
    write_at_least(&l, 10, 2.0, 2.0);
    let args = |out: &Path| {
        saasel(&[
            "solve",
            "--method",
            "bsa-pbh",
            "--model",
            s(&m),
            "--logistic",
            s(&l),
            "-o",
            s(out),
        ])
    };
    let o = args(&r);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&r);
    assert_eq!(v["cardinality"], 4);
    assert_eq!(v["status"], "feasible");
    assert!(v["spectral_abscissa"].as_f64().unwrap() < 0.0);

    assert_eq!(code(&args(&r2)), 0);
    assert_eq!(fs::read(&r).unwrap(), fs::read(&r2).unwrap());

    let o = saasel(&["verify", "--model", s(&m), "--gain", s(&r)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sigma_trace_decreases_to_zero() {
    let dir = TempDir::new().unwrap();
    let m = path(&dir, "m.json");
    let t = path(&dir, "t.csv");
    saasel(&["gen", "random", "--nodes", "3", "--seed", "11", "-o", s(&m)]);
    let o = saasel(&[
        "solve",
        "--method",
        "bsa-sdp",
        "--model",
        s(&m),
        "--trace",
        s(&t),
    ]);
    assert!(
        matches!(code(&o), 0 | 2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(&t).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("iteration,q,selection_bits,verdict,sigma")
    );
    let sigma: Vec<usize> = lines
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(sigma.windows(2).all(|w| w[1] < w[0]));
    assert_eq!(sigma.last(), Some(&0));
}

#[test]
fn gain_on_inactive_channels_is_projected() {
    let dir = TempDir::new().unwrap();
    let m = path(&dir, "m.json");
    let g = path(&dir, "g.json");
    saasel(&[
        "gen",
        "mass-spring",
        "--n",
        "2",
        "--damping",
        "0.5",
        "-o",
        s(&m),
    ]);
    // Only node 1 is active; the entry on node 2's channels must be dropped.
    let mut gain = vec![vec![0.0; 4]; 2];
    gain[1][3] = 5.0;
    let v = serde_json::json!({ "selection": "1010", "gain": gain });
    fs::write(&g, v.to_string()).unwrap();
    let o = saasel(&["verify", "--model", s(&m), "--gain", s(&g)]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("projecting"));
}

#[test]
fn unknown_backend_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let m = path(&dir, "m.json");
    saasel(&["gen", "random", "--nodes", "2", "-o", s(&m)]);
    let o = Command::new(env!("CARGO_BIN_EXE_saasel"))
        .args(["solve", "--method", "bsa-sdp", "--model", s(&m)])
        .env("SAASEL_BACKEND", "nonexistent")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}
