//! Fourth-order Magnus integrator for `y'' = (q(x) − λ) y` together with the
//! λ-derivative of the solution.
//!
//! Each step exponentiates the two-point Gauss-Legendre Magnus generator,
//! a traceless 2×2 matrix, in closed form. The λ-derivative is the exact
//! derivative of the discrete propagator, so χ and χ' are consistent to
//! rounding. Step sizes do not shrink as λ grows: the oscillation at the
//! mean frequency of each step is propagated exactly. The step size is
//! controlled by step doubling and steps never cross a breakpoint of `q`.

use crate::error::{Error, Result};
use crate::potential::Potential;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

/// `(y, y', ∂y/∂λ, ∂y'/∂λ)` at some point `x`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OdeState {
    pub y: f64,
    pub dy: f64,
    pub y_l: f64,
    pub dy_l: f64,
}

type M2 = [[f64; 2]; 2];

const SQRT3: f64 = 1.732_050_807_568_877_2;
const MAX_STEPS: usize = 4_000_000;
// Keeps cosh/sinh of one step far from overflow in the exponential regime.
const MAX_GROWTH_ARG: f64 = 30.0;

/// `C(z) = cosh √z`, `S(z) = sinh √z / √z` and `S'(z)`, all entire in `z`.
fn cs_functions(z: f64) -> (f64, f64, f64) {
    if z.abs() < 0.5 {
        let (mut c, mut s, mut ds) = (0.0, 0.0, 0.0);
        // z^k/(2k)!, z^k/(2k+1)! and z^k/(2k+3)!
        let (mut tc, mut ts, mut tds) = (1.0, 1.0, 1.0 / 6.0);
        for k in 0..18 {
            let k = k as f64;
            c += tc;
            s += ts;
            ds += (k + 1.0) * tds;
            tc *= z / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
            ts *= z / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
            tds *= z / ((2.0 * k + 4.0) * (2.0 * k + 5.0));
        }
        (c, s, ds)
    } else if z < 0.0 {
        let w = (-z).sqrt();
        let c = w.cos();
        let s = w.sin() / w;
        (c, s, (c - s) / (2.0 * z))
    } else {
        let w = z.sqrt();
        let c = w.cosh();
        let s = w.sinh() / w;
        (c, s, (c - s) / (2.0 * z))
    }
}

/// Propagator over one step and its λ-derivative, given `q` at the two
/// Gauss nodes.
fn magnus_step(q1: f64, q2: f64, h: f64, lambda: f64) -> (M2, M2) {
    let abar = 0.5 * (q1 + q2) - lambda;
    // Generator [[c, h], [h·abar, −c]]; the commutator term only touches c.
    let c = SQRT3 / 12.0 * h * h * (q1 - q2);
    let z = c * c + h * h * abar;
    let (cz, sz, dsz) = cs_functions(z);
    let e = [[cz + sz * c, sz * h], [sz * h * abar, cz - sz * c]];
    // dz/dλ = −h², dΩ/dλ = [[0, 0], [−h, 0]].
    let dz = -h * h;
    let dc = 0.5 * sz * dz;
    let ds = dsz * dz;
    let el = [[dc + ds * c, ds * h], [ds * h * abar - sz * h, dc - ds * c]];
    (e, el)
}

fn apply(e: &M2, el: &M2, s: &OdeState) -> OdeState {
    OdeState {
        y: e[0][0] * s.y + e[0][1] * s.dy,
        dy: e[1][0] * s.y + e[1][1] * s.dy,
        y_l: e[0][0] * s.y_l + e[0][1] * s.dy_l + el[0][0] * s.y + el[0][1] * s.dy,
        dy_l: e[1][0] * s.y_l + e[1][1] * s.dy_l + el[1][0] * s.y + el[1][1] * s.dy,
    }
}

fn step(q: &Potential, x: f64, h: f64, lambda: f64, s: &OdeState) -> OdeState {
    let off = SQRT3 / 6.0 * h;
    let mid = x + 0.5 * h;
    let (e, el) = magnus_step(q.eval(mid - off), q.eval(mid + off), h, lambda);
    apply(&e, &el, s)
}

/// Integrates from `x = 0` to `x = π` starting from `init`.
pub fn propagate(q: &Potential, lambda: f64, init: OdeState, tol: Tolerances) -> Result<OdeState> {
    let freq = lambda.abs().max(1.0).sqrt();
    let err_ratio = |a: &OdeState, b: &OdeState| {
        let amp = a.y.hypot(a.dy / freq);
        let amp_l = a.y_l.hypot(a.dy_l / freq);
        let e = (a.y - b.y).hypot((a.dy - b.dy) / freq);
        let e_l = (a.y_l - b.y_l).hypot((a.dy_l - b.dy_l) / freq);
        (e / (tol.abs + tol.rel * amp)).max(e_l / (tol.abs + tol.rel * amp_l))
    };

    let breaks = q.breakpoints();
    let mut state = init;
    let mut h = 0.1f64;
    let mut steps = 0usize;
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let mut x = a;
        while x < b {
            let remaining = b - x;
            let qmax = q.eval(x).max(q.eval((x + h.min(remaining)).min(b)));
            let growth = (qmax - lambda).max(0.0).sqrt();
            let h_cap = if growth > 0.0 {
                MAX_GROWTH_ARG / growth
            } else {
                f64::INFINITY
            };
            let mut hs = h.min(remaining).min(h_cap);
            let last = hs >= remaining;
            if last {
                hs = remaining;
            }
            let full = step(q, x, hs, lambda, &state);
            let half = step(q, x, 0.5 * hs, lambda, &state);
            let fine = step(q, x + 0.5 * hs, 0.5 * hs, lambda, &half);
            let ratio = err_ratio(&fine, &full);
            steps += 1;
            if steps > MAX_STEPS {
                return Err(Error::IntegrationFailure {
                    x,
                    lambda,
                    reason: "step budget exhausted".into(),
                });
            }
            if ratio <= 1.0 {
                state = fine;
                x = if last { b } else { x + hs };
                let grow = if ratio > 0.0 {
                    (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
                } else {
                    5.0
                };
                if !last || grow < 1.0 {
                    h = hs * grow;
                }
            } else if ratio.is_finite() {
                h = hs * (0.9 * ratio.powf(-0.2)).clamp(0.1, 0.9);
            } else {
                h = 0.25 * hs;
            }
            if h < 1e-13 {
                return Err(Error::IntegrationFailure {
                    x,
                    lambda,
                    reason: "step size underflow".into(),
                });
            }
            if !state.y.is_finite() || !state.dy.is_finite() {
                return Err(Error::IntegrationFailure {
                    x,
                    lambda,
                    reason: "solution overflowed".into(),
                });
            }
        }
    }
    Ok(state)
}
