//! Closed-form oracle for constant potentials and random problem generators.
#![allow(dead_code)]

use std::f64::consts::PI;

use hn_spectral::{Potential, ProblemSpec, RationalHNFunction};
use rand::Rng;

/// `f(λ)` and `f'(λ)` straight from the partial-fraction form.
pub fn hn_value(f: &RationalHNFunction, lambda: f64) -> (f64, f64) {
    let mut v = f.h0() * lambda + f.h();
    let mut dv = f.h0();
    for p in f.poles() {
        v += p.delta / (p.hk - lambda);
        dv += p.delta / (p.hk - lambda).powi(2);
    }
    (v, dv)
}

/// Boundary values `(a, b)` with the condition `a y' + b y = 0` up to scale,
/// written so that poles of `f` stay finite: `a = Π(h_k − λ)` and
/// `b = f(λ) a` (with `h0` folded into the product scale).
pub fn boundary_pair(f: &RationalHNFunction, lambda: f64) -> (f64, f64) {
    let scale = if f.h0() > 0.0 { 1.0 / f.h0() } else { 1.0 };
    let mut down = scale;
    for p in f.poles() {
        down *= p.hk - lambda;
    }
    let mut up = (f.h0() * lambda + f.h()) * down;
    for (k, p) in f.poles().iter().enumerate() {
        let mut term = scale * p.delta;
        for (j, q) in f.poles().iter().enumerate() {
            if j != k {
                term *= q.hk - lambda;
            }
        }
        up += term;
    }
    (down, up)
}

/// `(C, S, C', S')` for `y'' = −μ y`, `C(0) = 1`, `S(0) = 0`, `S'(0) = 1`.
pub fn cs(mu: f64, x: f64) -> (f64, f64, f64, f64) {
    if mu > 0.0 {
        let s = mu.sqrt();
        let (c, sn) = ((s * x).cos(), (s * x).sin());
        (c, sn / s, -s * sn, c)
    } else if mu < 0.0 {
        let t = (-mu).sqrt();
        let (c, sn) = ((t * x).cosh(), (t * x).sinh());
        (c, sn / t, t * sn, c)
    } else {
        (1.0, x, 0.0, 1.0)
    }
}

/// Constant-potential problem solved in closed form.
pub struct Oracle {
    pub c: f64,
    pub f: RationalHNFunction,
    pub big_f: RationalHNFunction,
}

impl Oracle {
    pub fn new(spec: &ProblemSpec) -> Self {
        let c = match spec.potential {
            Potential::Zero => 0.0,
            Potential::Constant { c } => c,
            _ => panic!("oracle needs a constant potential"),
        };
        Self {
            c,
            f: spec.left.clone(),
            big_f: spec.right.clone(),
        }
    }

    /// `φ(x)` and `φ'(x)`.
    pub fn phi(&self, lambda: f64, x: f64) -> (f64, f64) {
        let (down, up) = boundary_pair(&self.f, lambda);
        let (c, s, dc, ds) = cs(lambda - self.c, x);
        (down * c - up * s, down * dc - up * ds)
    }

    /// `ψ(x)` and `ψ'(x)`.
    pub fn psi(&self, lambda: f64, x: f64) -> (f64, f64) {
        let (down, up) = boundary_pair(&self.big_f, lambda);
        let (c, s, dc, ds) = cs(lambda - self.c, PI - x);
        (down * c - up * s, -(down * dc - up * ds))
    }

    pub fn chi(&self, lambda: f64) -> f64 {
        let (down, up) = boundary_pair(&self.big_f, lambda);
        let (p, dp) = self.phi(lambda, PI);
        up * p - down * dp
    }

    /// Eigenvalues by a fine scan in `√|λ|` and bisection.
    pub fn eigenvalues(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let ds = 1e-3;
        let mut s = -12.0;
        let lam = |s: f64| s * s.abs();
        let mut prev = self.chi(lam(s));
        while out.len() < count {
            let next_s = s + ds;
            let val = self.chi(lam(next_s));
            if prev == 0.0 {
                out.push(lam(s));
            } else if prev * val < 0.0 {
                let (mut a, mut b) = (lam(s), lam(next_s));
                let fa = prev;
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if self.chi(m) * fa > 0.0 {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                out.push(0.5 * (a + b));
            }
            s = next_s;
            prev = val;
        }
        out
    }

    /// `∫φ² + f'(λ)φ(0)² + F'(λ)φ(π)²`, with the boundary terms taken in
    /// their pole-safe form.
    pub fn gamma(&self, lambda: f64) -> f64 {
        let n = 20_000;
        let h = PI / n as f64;
        let mut integral = 0.0;
        for i in 0..=n {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            integral += w * self.phi(lambda, i as f64 * h).0.powi(2);
        }
        integral *= h / 3.0;
        let left = boundary_term(&self.f, lambda, 1.0);
        let (p, dp) = self.phi(lambda, PI);
        let (down, up) = boundary_pair(&self.big_f, lambda);
        let ratio = if down.abs() >= up.abs() / lambda.abs().max(1.0).sqrt() {
            p / down
        } else {
            dp / up
        };
        integral + left + boundary_term(&self.big_f, lambda, ratio)
    }

    pub fn beta(&self, lambda: f64) -> f64 {
        let (p, dp) = self.phi(lambda, 0.0);
        let (q, dq) = self.psi(lambda, 0.0);
        if p.abs() >= dp.abs() {
            q / p
        } else {
            dq / dp
        }
    }
}

/// `f'(λ) (r·down)²`, finite at poles: away from poles it is evaluated from
/// the partial fractions, at a pole from the residue.
fn boundary_term(f: &RationalHNFunction, lambda: f64, r: f64) -> f64 {
    let (down, _) = boundary_pair(f, lambda);
    if let Some(p) = f.poles().iter().find(|p| (p.hk - lambda).abs() < 1e-9) {
        // down = scale · (h_k − λ) · rest, f' ≈ δ/(h_k − λ)²
        let scale = if f.h0() > 0.0 { 1.0 / f.h0() } else { 1.0 };
        let rest: f64 = f
            .poles()
            .iter()
            .filter(|q| q.hk != p.hk)
            .map(|q| q.hk - lambda)
            .product();
        return p.delta * (r * scale * rest).powi(2);
    }
    let (_, df) = hn_value(f, lambda);
    df * (r * down).powi(2)
}

pub fn random_hn(rng: &mut impl Rng, ind: usize) -> RationalHNFunction {
    let d = ind / 2;
    let h0 = if ind % 2 == 1 {
        rng.gen_range(0.3..2.0)
    } else {
        0.0
    };
    let h = rng.gen_range(-2.0..2.0);
    let mut poles: Vec<(f64, f64)> = Vec::new();
    while poles.len() < d {
        let hk = rng.gen_range(-3.0..6.0);
        if poles.iter().all(|p: &(f64, f64)| (p.0 - hk).abs() > 0.3) {
            poles.push((hk, rng.gen_range(0.2..3.0)));
        }
    }
    poles.sort_by(|a, b| a.0.total_cmp(&b.0));
    RationalHNFunction::from_parts(h0, h, &poles).unwrap()
}

pub fn random_potential(rng: &mut impl Rng) -> Potential {
    match rng.gen_range(0..3) {
        0 => Potential::Zero,
        1 => Potential::Constant {
            c: rng.gen_range(-3.0..3.0),
        },
        _ => {
            let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            Potential::sampled_from_fn(65, |x| {
                a[0] * x.sin() + a[1] * (2.0 * x).cos() + a[2] * (x - 1.0)
            })
        }
    }
}

pub fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Error of a recovered parameter, relative to `max(1, |truth|)`.
pub fn param_error(got: f64, truth: f64) -> f64 {
    (got - truth).abs() / truth.abs().max(1.0)
}

/// Random valid coefficient with index in `0..=max_ind`; poles are kept at
/// least 0.3 apart.
pub fn hn_strategy(
    max_ind: usize,
) -> impl proptest::strategy::Strategy<Value = RationalHNFunction> {
    use proptest::prelude::*;
    (0..=max_ind).prop_flat_map(|ind| {
        let d = ind / 2;
        (
            if ind % 2 == 1 {
                (0.2..3.0f64).boxed()
            } else {
                Just(0.0).boxed()
            },
            -3.0..3.0f64,
            -4.0..2.0f64,
            proptest::collection::vec((0.3..3.0f64, 0.1..4.0f64), d),
        )
            .prop_map(|(h0, h, start, gaps)| {
                let mut hk = start;
                let poles: Vec<(f64, f64)> = gaps
                    .into_iter()
                    .map(|(gap, delta)| {
                        hk += gap;
                        (hk, delta)
                    })
                    .collect();
                RationalHNFunction::from_parts(h0, h, &poles).unwrap()
            })
    })
}
