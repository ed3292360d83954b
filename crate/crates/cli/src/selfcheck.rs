//! Built-in checks against closed-form answers. Each prints one line.

use std::f64::consts::PI;

use hn_spectral::{
    find_eigenvalues, parseval_delta, recover_boundary_coefficient, solve_for_omega,
    solve_for_sigma, Potential, ProblemSpec, RationalHNFunction,
};

use crate::error::{CliError, CliResult};

type Check = fn() -> Result<String, String>;

fn hn(h0: f64, h: f64, poles: &[(f64, f64)]) -> Result<RationalHNFunction, String> {
    RationalHNFunction::from_parts(h0, h, poles).map_err(|e| e.to_string())
}

fn solve(spec: &ProblemSpec) -> Result<Vec<(f64, f64)>, String> {
    let s = find_eigenvalues(spec).map_err(|e| e.to_string())?;
    Ok(s.data.iter().map(|d| (d.lambda, d.gamma)).collect())
}

/// `χ(λ)` for `q = c` with `f = h`, `F = H`, built from
/// `φ = cos(√μ x) − h sin(√μ x)/√μ`, `μ = λ − c`.
fn robin_chi(c: f64, h: f64, big_h: f64, lambda: f64) -> f64 {
    let mu = lambda - c;
    let (cs, sn, dsn) = if mu > 0.0 {
        let k = mu.sqrt();
        ((k * PI).cos(), (k * PI).sin() / k, -k * (k * PI).sin())
    } else if mu < 0.0 {
        let k = (-mu).sqrt();
        ((k * PI).cosh(), (k * PI).sinh() / k, k * (k * PI).sinh())
    } else {
        (1.0, PI, 0.0)
    };
    let phi = cs - h * sn;
    let dphi = dsn - h * cs;
    big_h * phi - dphi
}

fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = g(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (g(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn robin_roots(c: f64, h: f64, big_h: f64, count: usize) -> Vec<f64> {
    let g = |l| robin_chi(c, h, big_h, l);
    let mut roots = Vec::new();
    let (mut a, step) = (-50.0, 1e-3);
    while roots.len() < count {
        let b = a + step;
        if g(a) == 0.0 {
            roots.push(a);
        } else if (g(a) > 0.0) != (g(b) > 0.0) {
            roots.push(bisect(g, a, b));
        }
        a = b;
    }
    roots
}

fn neumann() -> Result<String, String> {
    let zero = hn(0.0, 0.0, &[])?;
    let got = solve(&ProblemSpec::new(Potential::Zero, zero.clone(), zero).with_n_max(20))?;
    let err = got.iter().enumerate().fold(0.0f64, |m, (n, &(l, g))| {
        let gamma = if n == 0 { PI } else { PI / 2.0 };
        m.max((l - (n * n) as f64).abs()).max((g - gamma).abs())
    });
    if err < 1e-8 {
        Ok(format!("max error {err:.1e}"))
    } else {
        Err(format!("max error {err:e}"))
    }
}

fn robin() -> Result<String, String> {
    let mut worst = 0.0f64;
    for (c, h, big_h) in [(0.0, 1.0, 1.0), (1.5, -2.0, 0.5)] {
        let spec = ProblemSpec::new(
            Potential::Constant { c },
            hn(0.0, h, &[])?,
            hn(0.0, big_h, &[])?,
        )
        .with_n_max(8);
        let got = solve(&spec)?;
        for ((l, _), r) in got.iter().zip(robin_roots(c, h, big_h, 8)) {
            worst = worst.max((l - r).abs() / r.abs().max(1.0));
        }
    }
    if worst < 1e-8 {
        Ok(format!("max relative error {worst:.1e}"))
    } else {
        Err(format!("max relative error {worst:e}"))
    }
}

fn round_trip() -> Result<String, String> {
    let f = hn(1.0, 0.5, &[(-1.0, 0.5), (2.0, 1.0)])?;
    let sigmas = solve_for_sigma(&f.omega_poly()).map_err(|e| e.to_string())?;
    let omegas = solve_for_omega(&sigmas).map_err(|e| e.to_string())?;
    let err = omegas
        .as_slice()
        .iter()
        .zip(f.omega_poly().as_slice())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / b.abs().max(1.0)));
    if err < 1e-10 {
        Ok(format!("ind f = 5, max error {err:.1e}"))
    } else {
        Err(format!("max error {err:e}"))
    }
}

fn recovery() -> Result<String, String> {
    let f = hn(0.0, 2.0, &[])?;
    let spec = ProblemSpec::new(Potential::Zero, f, hn(0.0, 0.0, &[])?).with_n_max(150);
    let s = find_eigenvalues(&spec).map_err(|e| e.to_string())?;
    let got = recover_boundary_coefficient(&s, 0).map_err(|e| e.to_string())?;
    let err = (got.h() - 2.0).abs();
    if err < 1e-4 && got.h0() == 0.0 {
        Ok(format!("h = {:.8}", got.h()))
    } else {
        Err(format!("recovered {got:?}"))
    }
}

fn parseval() -> Result<String, String> {
    let f = hn(0.0, 0.0, &[(2.0, 1.0)])?;
    let spec = ProblemSpec::new(Potential::Zero, f.clone(), hn(0.0, 0.0, &[])?).with_n_max(150);
    let s = find_eigenvalues(&spec).map_err(|e| e.to_string())?;
    let e = parseval_delta(&s, &f, 1, true).map_err(|e| e.to_string())?;
    if (e.estimate - 1.0).abs() < 1e-3 {
        Ok(format!("estimate {:.8}", e.estimate))
    } else {
        Err(format!("estimate {}", e.estimate))
    }
}

pub fn run() -> CliResult<()> {
    let checks: [(&str, Check); 5] = [
        ("neumann spectrum", neumann),
        ("robin spectrum vs closed-form roots", robin),
        ("sigma/omega round trip", round_trip),
        ("constant coefficient recovery", recovery),
        ("single-pole parseval sum", parseval),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "self-check failed: {}",
            failed.join(", ")
        )))
    }
}
