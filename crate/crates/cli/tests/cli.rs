use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hnspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hnspec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\n{}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn write(dir: &TempDir, name: &str, content: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, content).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn problem(
    dir: &TempDir,
    name: &str,
    potential: &str,
    f: &str,
    big_f: &str,
    n_max: usize,
) -> PathBuf {
    write(
        dir,
        name,
        &format!(r#"{{"potential":{potential},"f":{f},"F":{big_f},"solver":{{"n_max":{n_max}}}}}"#),
    )
}

const ZERO_Q: &str = r#"{"type":"zero"}"#;
const ZERO_HN: &str = r#"{"h0":0,"h":0,"poles":[]}"#;

fn floats(v: &Value, key: &str) -> Vec<f64> {
    v["data"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d[key].as_f64().unwrap())
        .collect()
}

#[test]
fn neumann_spectrum() {
    let dir = TempDir::new().unwrap();
    let cfg = problem(&dir, "p.json", ZERO_Q, ZERO_HN, ZERO_HN, 4);
    let o = hnspec(&["spectrum", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0);
    let lambda = floats(&json(&o), "lambda");
    assert_eq!(lambda.len(), 4);
    for (n, l) in lambda.iter().enumerate() {
        assert!((l - (n * n) as f64).abs() < 1e-10);
    }
}

#[test]
fn zero_n_max_is_a_config_error_and_writes_nothing() {
    let dir = TempDir::new().unwrap();
    let cfg = problem(&dir, "p.json", ZERO_Q, ZERO_HN, ZERO_HN, 0);
    let out = dir.path().join("out.json");
    let o = hnspec(&["spectrum", "--config", s(&cfg), "--output", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_max must be ≥ 1"));
    assert!(
        fs::read_dir(dir.path()).unwrap().count() == 1,
        "no output files"
    );
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        &dir,
        "bad.json",
        r#"{"potential":{"type":"zero"},"f":{"h0":-1,"h":0},"F":{"h0":0,"h":0}}"#,
    );
    assert_eq!(code(&hnspec(&["spectrum", "--config", s(&bad)])), 2);
    let junk = write(&dir, "junk.json", "not json");
    assert_eq!(code(&hnspec(&["spectrum", "--config", s(&junk)])), 2);
    assert_eq!(code(&hnspec(&["spectrum"])), 2);
}

/// Smallest roots of the entire function `2cos(√λπ) + (√λ − 1/√λ)sin(√λπ)`
/// by scan and bisection; for `λ < 0` it reads `2cosh(tπ) − (t + 1/t)sinh(tπ)`.
fn robin_roots(count: usize) -> Vec<f64> {
    let g = |l: f64| {
        if l >= 0.0 {
            let k = l.sqrt();
            2.0 * (k * PI).cos() + (k - 1.0 / k) * (k * PI).sin()
        } else {
            let t = (-l).sqrt();
            2.0 * (t * PI).cosh() - (t + 1.0 / t) * (t * PI).sinh()
        }
    };
    let mut roots = Vec::new();
    // offset so the grid never lands on the removable point λ = 0
    let mut a = -20.0 + 5e-4;
    while roots.len() < count {
        let b = a + 1e-3;
        if (g(a) > 0.0) != (g(b) > 0.0) {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if (g(m) > 0.0) == (g(lo) > 0.0) {
                    lo = m
                } else {
                    hi = m
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
    }
    roots
}

#[test]
fn robin_spectrum_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let one = r#"{"h0":0,"h":1,"poles":[]}"#;
    let cfg = problem(&dir, "p.json", ZERO_Q, one, one, 3);
    let o = hnspec(&["spectrum", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0);
    for (a, b) in floats(&json(&o), "lambda").iter().zip(robin_roots(3)) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn output_is_deterministic_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = problem(
        &dir,
        "p.json",
        r#"{"type":"sampled","values":[0.0,1.0,-0.5,2.0]}"#,
        r#"{"h0":1,"h":0.5}"#,
        ZERO_HN,
        10,
    );
    let a = hnspec(&["spectrum", "--config", s(&cfg)]);
    let b = hnspec(&["spectrum", "--config", s(&cfg), "--sequential"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert!(text.starts_with(r#"{"L":5.0000000000000000e-1,"ind_f":1,"ind_F":0,"tail_constant":"#));
    // re-reading and re-emitting is the identity
    let file = write(&dir, "s.json", &text);
    let c = hnspec(&["spectrum", "--spectrum-in", s(&file)]);
    assert_eq!(c.stdout, a.stdout);

    let csv = hnspec(&["spectrum", "--config", s(&cfg), "--format", "csv"]);
    let csv = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("n,lambda,gamma,beta,chi_prime"));
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn verify_accepts_computed_spectra_and_rejects_corrupted_ones() {
    let dir = TempDir::new().unwrap();
    let cfg = problem(&dir, "n.json", ZERO_Q, ZERO_HN, ZERO_HN, 50);
    let o = hnspec(&["verify", "--config", s(&cfg)]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["residuals"].as_array().unwrap().len(), 1);

    let cfg = problem(&dir, "l.json", ZERO_Q, r#"{"h0":1,"h":0}"#, ZERO_HN, 200);
    let spec_out = dir.path().join("s.json");
    let o = hnspec(&[
        "verify",
        "--config",
        s(&cfg),
        "--spectrum-out",
        s(&spec_out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(json(&o)["pass"].as_bool().unwrap());

    let mut spectrum: Value =
        serde_json::from_str(&fs::read_to_string(&spec_out).unwrap()).unwrap();
    let g = spectrum["data"][0]["gamma"].as_f64().unwrap();
    spectrum["data"][0]["gamma"] = Value::from(2.0 * g);
    let bad = write(&dir, "bad.json", &spectrum.to_string());
    let o = hnspec(&["verify", "--config", s(&cfg), "--spectrum-in", s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(!json(&o)["pass"].as_bool().unwrap());
}

#[test]
fn recover_bc_examples() {
    let dir = TempDir::new().unwrap();
    let cfg = problem(&dir, "c.json", ZERO_Q, r#"{"h0":0,"h":2}"#, ZERO_HN, 200);
    let spec_out = dir.path().join("s.json");
    assert_eq!(
        code(&hnspec(&[
            "spectrum",
            "--config",
            s(&cfg),
            "--spectrum-out",
            s(&spec_out)
        ])),
        0
    );
    let o = hnspec(&["recover-bc", "--spectrum-in", s(&spec_out), "--ind-f", "0"]);
    assert_eq!(code(&o), 0);
    let f = &json(&o)["f"];
    assert_eq!(f["h0"].as_f64(), Some(0.0));
    assert!((f["h"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert!(f["poles"].as_array().unwrap().is_empty());

    let o = hnspec(&["recover-bc", "--spectrum-in", s(&spec_out), "--ind-f", "2"]);
    assert_eq!(code(&o), 4);
    assert!(o.stdout.is_empty());

    let cfg = problem(
        &dir,
        "p.json",
        r#"{"type":"constant","c":1}"#,
        r#"{"h0":0,"h":0,"poles":[{"hk":2,"delta":1}]}"#,
        r#"{"h0":0,"h":1}"#,
        200,
    );
    let o = hnspec(&["recover-bc", "--config", s(&cfg), "--ind-f", "2"]);
    assert_eq!(code(&o), 0);
    let pole = &json(&o)["f"]["poles"][0];
    assert!((pole["hk"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert!((pole["delta"].as_f64().unwrap() - 1.0).abs() < 1e-4);
}

#[test]
fn recover_missing_examples() {
    let dir = TempDir::new().unwrap();
    let cfg = problem(
        &dir,
        "c.json",
        ZERO_Q,
        r#"{"h0":0,"h":2}"#,
        r#"{"h0":0,"h":1}"#,
        200,
    );
    let full = hnspec(&["spectrum", "--config", s(&cfg)]);
    let full = json(&full);
    let truth = full["data"][0]["gamma"].as_f64().unwrap();

    let mut known = full["data"].as_array().unwrap().clone();
    let first = known.remove(0);
    let partial = serde_json::json!({
        "known": known,
        "missing": [{"n": 0, "which": "gamma", "lambda": first["lambda"]}],
    });
    let p = write(&dir, "partial.json", &partial.to_string());
    let o = hnspec(&[
        "recover-missing",
        "--config",
        s(&cfg),
        "--partial-in",
        s(&p),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let got = json(&o)["recovered"][0]["gamma"].as_f64().unwrap();
    assert!((got - truth).abs() < 1e-4 * truth, "{got} vs {truth}");

    let spectrum = write(&dir, "s.json", &full.to_string());
    let mut args = vec![
        "recover-missing",
        "--config",
        s(&cfg),
        "--spectrum-in",
        s(&spectrum),
    ];
    args.extend([
        "--missing",
        "0:both",
        "--missing",
        "1:both",
        "--missing",
        "2:both",
    ]);
    let o = hnspec(&args);
    assert_eq!(code(&o), 5);
    assert!(String::from_utf8_lossy(&o.stderr).contains("underdetermined"));

    let o = hnspec(&[
        "recover-missing",
        "--config",
        s(&cfg),
        "--spectrum-in",
        s(&spectrum),
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let echoed = hnspec(&["spectrum", "--spectrum-in", s(&spectrum), "--format", "csv"]);
    assert_eq!(o.stdout, echoed.stdout);
}

#[test]
fn selfcheck_passes() {
    let o = hnspec(&["selfcheck"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 5);
}
