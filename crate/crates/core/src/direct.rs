//! Direct spectral problem.
//!
//! `φ` solves the equation from the left endpoint with
//! `φ(0) = f_down(λ)`, `φ'(0) = −f_up(λ)`, and `ψ` from the right endpoint
//! with `ψ(π) = F_down(λ)`, `ψ'(π) = F_up(λ)`. The eigenvalues are the zeros
//! of the characteristic function
//! `χ(λ) = F_up φ(π) − F_down φ'(π) = f_down ψ'(0) + f_up ψ(0)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hn::RationalHNFunction;
use crate::ode::{self, OdeState, Tolerances};
use crate::parallel;
use crate::poly::RealPolynomial;
use crate::potential::Potential;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub ode_rel_tol: f64,
    pub ode_abs_tol: f64,
    /// Relative tolerance on computed eigenvalues.
    pub eigen_tol: f64,
    pub n_max: usize,
    /// Spread independent χ evaluations over the thread pool. Has no effect
    /// when the crate is built without the `parallel` feature.
    pub parallel: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            ode_rel_tol: 1e-11,
            ode_abs_tol: 1e-13,
            eigen_tol: 1e-13,
            n_max: 50,
            parallel: true,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::InvalidInput("n_max must be ≥ 1".into()));
        }
        for (name, v) in [
            ("ode_rel_tol", self.ode_rel_tol),
            ("ode_abs_tol", self.ode_abs_tol),
            ("eigen_tol", self.eigen_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    fn ode_tolerances(&self) -> Tolerances {
        Tolerances {
            rel: self.ode_rel_tol,
            abs: self.ode_abs_tol,
        }
    }
}

/// Potential, left coefficient `f`, right coefficient `F` and solver knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub potential: Potential,
    #[serde(rename = "f")]
    pub left: RationalHNFunction,
    #[serde(rename = "F")]
    pub right: RationalHNFunction,
    #[serde(default)]
    pub solver: SolverParams,
}

impl ProblemSpec {
    pub fn new(potential: Potential, left: RationalHNFunction, right: RationalHNFunction) -> Self {
        Self {
            potential,
            left,
            right,
            solver: SolverParams::default(),
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.solver.n_max = n_max;
        self
    }

    pub fn with_solver(mut self, solver: SolverParams) -> Self {
        self.solver = solver;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        self.solver.validate()
    }

    /// The problem with `q(π − x)` and the two boundary coefficients swapped.
    /// It has the same eigenvalues, with norming constants `β_n² γ_n`.
    pub fn reflected(&self) -> Self {
        Self {
            potential: self.potential.reflected(),
            left: self.right.clone(),
            right: self.left.clone(),
            solver: self.solver,
        }
    }

    /// `L = (ind f + ind F) / 2`.
    pub fn shift(&self) -> f64 {
        (self.left.index() + self.right.index()) as f64 / 2.0
    }

    /// `½∫q + ω_1(f) + ω_1(F)`, the constant in the second term of the
    /// large-λ expansion of χ.
    pub fn analytic_tail_constant(&self) -> f64 {
        0.5 * self.potential.integral()
            + self.left.omega_poly().as_slice()[0]
            + self.right.omega_poly().as_slice()[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDatum {
    pub n: usize,
    pub lambda: f64,
    pub gamma: f64,
    /// NaN (`null` in JSON) when unknown.
    #[serde(default = "unknown", deserialize_with = "nullable")]
    pub beta: f64,
    #[serde(default = "unknown", deserialize_with = "nullable")]
    pub chi_prime: f64,
}

fn unknown() -> f64 {
    f64::NAN
}

fn nullable<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectrum", into = "RawSpectrum")]
pub struct Spectrum {
    pub data: Vec<SpectralDatum>,
    pub ind_f: usize,
    pub ind_right: usize,
    /// Fitted value of `½∫q + ω_1 + Ω_1` from `√λ_n ≈ (n − L) + T / (π (n − L))`.
    pub tail_constant: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSpectrum {
    #[serde(rename = "L", default)]
    shift: Option<f64>,
    ind_f: usize,
    #[serde(rename = "ind_F")]
    ind_right: usize,
    #[serde(default)]
    tail_constant: f64,
    data: Vec<SpectralDatum>,
}

impl TryFrom<RawSpectrum> for Spectrum {
    type Error = Error;

    fn try_from(raw: RawSpectrum) -> Result<Self> {
        let s = Spectrum {
            data: raw.data,
            ind_f: raw.ind_f,
            ind_right: raw.ind_right,
            tail_constant: raw.tail_constant,
        };
        if let Some(l) = raw.shift {
            if l != s.shift() {
                return Err(Error::InvalidInput(format!(
                    "L = {l} does not equal (ind_f + ind_F)/2 = {}",
                    s.shift()
                )));
            }
        }
        s.validate()?;
        Ok(s)
    }
}

impl From<Spectrum> for RawSpectrum {
    fn from(s: Spectrum) -> Self {
        RawSpectrum {
            shift: Some(s.shift()),
            ind_f: s.ind_f,
            ind_right: s.ind_right,
            tail_constant: s.tail_constant,
            data: s.data,
        }
    }
}

impl Spectrum {
    pub fn shift(&self) -> f64 {
        (self.ind_f + self.ind_right) as f64 / 2.0
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.data.iter().map(|d| d.lambda).collect()
    }

    /// Indices are `0..len` in order, eigenvalues strictly increase and all
    /// norming constants are positive.
    pub fn validate(&self) -> Result<()> {
        for (i, d) in self.data.iter().enumerate() {
            if d.n != i {
                return Err(Error::InvalidInput(format!(
                    "datum {i} has index n = {}",
                    d.n
                )));
            }
            if !(d.lambda.is_finite() && d.gamma.is_finite()) {
                return Err(Error::InvalidInput(format!("datum {i} is not finite")));
            }
            if d.gamma <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "gamma_{i} = {} is not positive",
                    d.gamma
                )));
            }
        }
        if self.data.windows(2).any(|w| w[0].lambda >= w[1].lambda) {
            return Err(Error::InvalidInput(
                "eigenvalues must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Terminal values of `φ` at `x = π`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiEndpoint {
    pub phi: f64,
    pub phi_prime: f64,
    pub dphi: f64,
    pub dphi_prime: f64,
    /// `∫₀^π φ²`.
    pub phi_sq_integral: f64,
}

/// Terminal values of `ψ` at `x = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiEndpoint {
    pub psi: f64,
    pub psi_prime: f64,
    pub dpsi: f64,
    pub dpsi_prime: f64,
}

#[derive(Debug, Clone)]
struct Boundary {
    up: RealPolynomial,
    down: RealPolynomial,
}

/// Values of `up`, `down` and their derivatives at one λ.
#[derive(Debug, Clone, Copy)]
struct BoundaryValues {
    up: f64,
    down: f64,
    dup: f64,
    ddown: f64,
}

impl Boundary {
    fn new(f: &RationalHNFunction) -> Self {
        let (up, down) = f.up_down();
        Self { up, down }
    }

    fn at(&self, lambda: f64) -> BoundaryValues {
        let (up, dup) = self.up.eval_with_derivative(lambda);
        let (down, ddown) = self.down.eval_with_derivative(lambda);
        BoundaryValues {
            up,
            down,
            dup,
            ddown,
        }
    }
}

/// Precomputed per-problem data shared by all χ evaluations.
struct Solver<'a> {
    spec: &'a ProblemSpec,
    reflected_q: Potential,
    left: Boundary,
    right: Boundary,
    tol: Tolerances,
}

impl<'a> Solver<'a> {
    fn new(spec: &'a ProblemSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            reflected_q: spec.potential.reflected(),
            left: Boundary::new(&spec.left),
            right: Boundary::new(&spec.right),
            tol: spec.solver.ode_tolerances(),
        })
    }

    fn phi(&self, lambda: f64) -> Result<PhiEndpoint> {
        let b = self.left.at(lambda);
        let init = OdeState {
            y: b.down,
            dy: -b.up,
            y_l: b.ddown,
            dy_l: -b.dup,
        };
        let end = ode::propagate(&self.spec.potential, lambda, init, self.tol)?;
        // d/dx (φ'∂φ − φ∂φ') = −φ²
        let wronskian = |s: &OdeState| s.dy * s.y_l - s.y * s.dy_l;
        Ok(PhiEndpoint {
            phi: end.y,
            phi_prime: end.dy,
            dphi: end.y_l,
            dphi_prime: end.dy_l,
            phi_sq_integral: wronskian(&end) - wronskian(&init),
        })
    }

    fn psi(&self, lambda: f64) -> Result<PsiEndpoint> {
        let b = self.right.at(lambda);
        // ψ(π − t) solves the reflected equation with these initial data.
        let init = OdeState {
            y: b.down,
            dy: -b.up,
            y_l: b.ddown,
            dy_l: -b.dup,
        };
        let end = ode::propagate(&self.reflected_q, lambda, init, self.tol)?;
        Ok(PsiEndpoint {
            psi: end.y,
            psi_prime: -end.dy,
            dpsi: end.y_l,
            dpsi_prime: -end.dy_l,
        })
    }

    fn chi_from_phi(&self, lambda: f64, p: &PhiEndpoint) -> (f64, f64) {
        let b = self.right.at(lambda);
        let chi = b.up * p.phi - b.down * p.phi_prime;
        let chi_prime =
            b.dup * p.phi + b.up * p.dphi - b.ddown * p.phi_prime - b.down * p.dphi_prime;
        (chi, chi_prime)
    }

    fn chi(&self, lambda: f64) -> Result<(f64, f64)> {
        let p = self.phi(lambda)?;
        Ok(self.chi_from_phi(lambda, &p))
    }

    fn chi_right(&self, lambda: f64) -> Result<(f64, f64)> {
        let b = self.left.at(lambda);
        let p = self.psi(lambda)?;
        let chi = b.down * p.psi_prime + b.up * p.psi;
        let chi_prime =
            b.ddown * p.psi_prime + b.down * p.dpsi_prime + b.dup * p.psi + b.up * p.dpsi;
        Ok((chi, chi_prime))
    }

    fn gamma_from_phi(&self, lambda: f64, p: &PhiEndpoint) -> f64 {
        // f'(λ) φ(0)² = f'(λ) f_down(λ)² = f_up' f_down − f_up f_down'. The
        // polynomial form stays finite when λ is a pole of f.
        let l = self.left.at(lambda);
        let left_term = l.dup * l.down - l.up * l.ddown;
        let r = self.right.at(lambda);
        let right_weight = r.dup * r.down - r.up * r.ddown;
        // F'(λ) φ(π)² = right_weight · (φ(π)/F_down)², and at an eigenvalue
        // φ(π)/F_down = φ'(π)/F_up; use whichever denominator is larger.
        let freq = lambda.abs().max(1.0).sqrt();
        let ratio = if r.down.abs() * freq >= r.up.abs() {
            p.phi / r.down
        } else {
            p.phi_prime / r.up
        };
        p.phi_sq_integral + left_term + right_weight * ratio * ratio
    }

    /// `β = ψ/φ`, read off at the endpoint where the eigenfunction is larger:
    /// integrating towards the small end loses relative accuracy.
    fn beta_from(&self, lambda: f64, p: &PhiEndpoint) -> Result<f64> {
        let freq = lambda.abs().max(1.0).sqrt();
        let l = self.left.at(lambda);
        let (phi0, dphi0) = (l.down, -l.up);
        if phi0 == 0.0 && dphi0 == 0.0 {
            return Err(Error::DegenerateEigenfunction(lambda));
        }
        let ratio = |y: f64, dy: f64, psi: f64, dpsi: f64| {
            if y.abs() * freq >= dy.abs() {
                psi / y
            } else {
                dpsi / dy
            }
        };
        if p.phi.hypot(p.phi_prime / freq) >= phi0.hypot(dphi0 / freq) {
            let r = self.right.at(lambda);
            Ok(ratio(p.phi, p.phi_prime, r.down, r.up))
        } else {
            let psi = self.psi(lambda)?;
            Ok(ratio(phi0, dphi0, psi.psi, psi.psi_prime))
        }
    }

    fn check_eigenvalue(&self, lambda: f64) -> Result<PhiEndpoint> {
        let p = self.phi(lambda)?;
        let (chi, chi_prime) = self.chi_from_phi(lambda, &p);
        let correction = (chi / chi_prime).abs();
        let allowed = EIGEN_CHECK_TOL.max(1e3 * self.spec.solver.eigen_tol) * lambda.abs().max(1.0);
        if !(correction <= allowed) {
            return Err(Error::NotAnEigenvalue { lambda, correction });
        }
        Ok(p)
    }

    fn datum(&self, n: usize, lambda: f64) -> Result<SpectralDatum> {
        let p = self.phi(lambda)?;
        let (_, chi_prime) = self.chi_from_phi(lambda, &p);
        let gamma = self.gamma_from_phi(lambda, &p);
        if !(gamma > 0.0) {
            return Err(Error::NonPositiveNorming { lambda, gamma });
        }
        let beta = self.beta_from(lambda, &p)?;
        Ok(SpectralDatum {
            n,
            lambda,
            gamma,
            beta,
            chi_prime,
        })
    }
}

// Largest accepted Newton correction |χ/χ'| relative to max(1, |λ|) for a
// user-supplied eigenvalue.
const EIGEN_CHECK_TOL: f64 = 1e-8;

pub fn integrate_phi(spec: &ProblemSpec, lambda: f64) -> Result<PhiEndpoint> {
    Solver::new(spec)?.phi(lambda)
}

pub fn integrate_psi(spec: &ProblemSpec, lambda: f64) -> Result<PsiEndpoint> {
    Solver::new(spec)?.psi(lambda)
}

/// `(χ(λ), χ'(λ))` assembled from `φ` at `x = π`.
pub fn char_function(spec: &ProblemSpec, lambda: f64) -> Result<(f64, f64)> {
    Solver::new(spec)?.chi(lambda)
}

/// `(χ(λ), χ'(λ))` assembled from `ψ` at `x = 0`.
pub fn char_function_right(spec: &ProblemSpec, lambda: f64) -> Result<(f64, f64)> {
    Solver::new(spec)?.chi_right(lambda)
}

pub fn norming_constant(spec: &ProblemSpec, lambda: f64) -> Result<f64> {
    let solver = Solver::new(spec)?;
    let p = solver.check_eigenvalue(lambda)?;
    let gamma = solver.gamma_from_phi(lambda, &p);
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveNorming { lambda, gamma });
    }
    Ok(gamma)
}

/// `β` with `ψ(·, λ_n) = β φ(·, λ_n)`.
pub fn beta(spec: &ProblemSpec, lambda: f64) -> Result<f64> {
    let solver = Solver::new(spec)?;
    let p = solver.check_eigenvalue(lambda)?;
    solver.beta_from(lambda, &p)
}

fn signed_square(s: f64) -> f64 {
    s * s.abs()
}

/// Crude magnitude bound used to place the lower end of the scan.
fn scan_bound(spec: &ProblemSpec) -> f64 {
    let mut b = 1.0 + spec.potential.l1_norm();
    for f in [&spec.left, &spec.right] {
        b += f.h().abs();
        if f.h0() > 0.0 {
            b += 1.0 / f.h0();
        }
        b += f.poles().iter().map(|p| p.delta).sum::<f64>();
    }
    b
}

#[derive(Debug, Clone, Copy)]
enum Bracket {
    Exact(f64),
    Interval { a: f64, b: f64, fa: f64 },
}

fn sign_change_brackets(lambdas: &[f64], values: &[(f64, f64)]) -> Vec<Bracket> {
    let mut out = Vec::new();
    // A zero at the last point belongs to the next interval.
    for i in 0..lambdas.len().saturating_sub(1) {
        let fa = values[i].0;
        if fa == 0.0 {
            out.push(Bracket::Exact(lambdas[i]));
            continue;
        }
        if fa * values[i + 1].0 < 0.0 {
            out.push(Bracket::Interval {
                a: lambdas[i],
                b: lambdas[i + 1],
                fa,
            });
        }
    }
    out
}

/// Safeguarded Newton iteration inside a sign-change bracket.
fn refine_root(solver: &Solver<'_>, bracket: Bracket) -> Result<f64> {
    let (mut a, mut b, fa) = match bracket {
        Bracket::Exact(x) => return Ok(x),
        Bracket::Interval { a, b, fa, .. } => (a, b, fa),
    };
    let tol = solver.spec.solver.eigen_tol;
    let sign_a = fa.signum();
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let (fx, dfx) = solver.chi(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == sign_a {
            a = x;
        } else {
            b = x;
        }
        let newton = x - fx / dfx;
        let next = if newton.is_finite() && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let scale = next.abs().max(1.0);
        if (next - x).abs() <= tol * scale || (b - a) <= tol * scale {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::BracketingFailure(format!(
        "root refinement in [{a}, {b}] did not converge"
    )))
}

/// Finds the lowest `n_max` eigenvalues together with their norming
/// constants, `β_n` and `χ'(λ_n)`.
pub fn find_eigenvalues(spec: &ProblemSpec) -> Result<Spectrum> {
    let solver = Solver::new(spec)?;
    let params = spec.solver;
    let n_max = params.n_max;
    let par = params.parallel;
    let shift = spec.shift();
    let t0 = spec.analytic_tail_constant();

    // Zeros of χ sit near √λ = m − L + T/(π√λ); the grid points below lie
    // halfway between consecutive predicted zeros.
    let grid = |m: usize| {
        let base = m as f64 - shift + 0.5;
        base + t0 / (PI * base)
    };
    let max_pole = [&spec.left, &spec.right]
        .iter()
        .flat_map(|f| f.poles().iter().map(|p| p.hk))
        .fold(0.0f64, f64::max);
    let s_threshold = 3.0_f64
        .max(2.0 + 4.0 * t0.abs() / PI)
        .max(max_pole.sqrt() + 2.0);
    let m_switch = (s_threshold + shift - 0.5).ceil().max(0.0) as usize;
    let s_switch = grid(m_switch);
    let expected_low = m_switch + 1;

    let bound = scan_bound(spec);
    let min_pole = [&spec.left, &spec.right]
        .iter()
        .flat_map(|f| f.poles().iter().map(|p| p.hk))
        .fold(0.0f64, f64::min);

    let mut low_brackets = None;
    let mut last_count = 0;
    for level in 0..4 {
        let reach = bound * 2f64.powi(level);
        let lambda_low = (-(reach * reach)).min(min_pole - reach);
        let s_low = -(-lambda_low).sqrt();
        let ds = 1.0 / 16.0 / 4f64.powi(level);
        let points = ((s_switch - s_low) / ds).ceil() as usize + 1;
        let lambdas: Vec<f64> = (0..points)
            .map(|i| {
                let s = s_low + (s_switch - s_low) * i as f64 / (points - 1) as f64;
                signed_square(s)
            })
            .collect();
        let values = parallel::try_map(&lambdas, par, |&l| solver.chi(l))?;
        let brackets = sign_change_brackets(&lambdas, &values);
        last_count = brackets.len();
        if brackets.len() == expected_low {
            low_brackets = Some(brackets);
            break;
        }
    }
    let mut brackets = low_brackets.ok_or_else(|| {
        Error::BracketingFailure(format!(
            "found {last_count} sign changes below λ = {}, expected {expected_low}",
            signed_square(s_switch)
        ))
    })?;

    if n_max > expected_low {
        let ms: Vec<usize> = (m_switch..n_max).collect();
        let lambdas: Vec<f64> = ms.iter().map(|&m| signed_square(grid(m))).collect();
        let values = parallel::try_map(&lambdas, par, |&l| solver.chi(l))?;
        let pairs: Vec<usize> = (0..lambdas.len() - 1).collect();
        let found = parallel::try_map(&pairs, par, |&i| {
            let (a, b) = (lambdas[i], lambdas[i + 1]);
            let (fa, fb) = (values[i].0, values[i + 1].0);
            if fa * fb < 0.0 {
                return Ok(vec![Bracket::Interval { a, b, fa }]);
            }
            // Missing sign change: subdivide in √λ.
            for pieces in [4usize, 16, 64] {
                let (sa, sb) = (a.sqrt(), b.sqrt());
                let sub: Vec<f64> = (0..=pieces)
                    .map(|j| signed_square(sa + (sb - sa) * j as f64 / pieces as f64))
                    .collect();
                let sub_values = sub
                    .iter()
                    .map(|&l| solver.chi(l))
                    .collect::<Result<Vec<_>>>()?;
                let inner = sign_change_brackets(&sub, &sub_values);
                if !inner.is_empty() {
                    return Ok(inner);
                }
            }
            Err(Error::BracketingFailure(format!(
                "no sign change of χ in [{a}, {b}]"
            )))
        })?;
        brackets.extend(found.into_iter().flatten());
    }
    brackets.truncate(n_max);
    if brackets.len() < n_max {
        return Err(Error::BracketingFailure(format!(
            "located {} of {n_max} eigenvalues",
            brackets.len()
        )));
    }

    let roots = parallel::try_map(&brackets, par, |&b| refine_root(&solver, b))?;
    if roots.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BracketingFailure(
            "refined eigenvalues are not strictly increasing".into(),
        ));
    }
    let indexed: Vec<(usize, f64)> = roots.into_iter().enumerate().collect();
    let data = parallel::try_map(&indexed, par, |&(n, l)| solver.datum(n, l))?;
    let tail_constant = fit_tail_constant(&data, shift).unwrap_or(t0);
    Ok(Spectrum {
        data,
        ind_f: spec.left.index(),
        ind_right: spec.right.index(),
        tail_constant,
    })
}

/// Least-squares fit of `T` in `√λ_n − (n − L) ≈ T / (π (n − L))` over the
/// last `max(5, N/4)` eigenvalues with `n − L ≥ 1`.
pub fn fit_tail_constant(data: &[SpectralDatum], shift: f64) -> Option<f64> {
    let usable: Vec<&SpectralDatum> = data
        .iter()
        .filter(|d| d.n as f64 - shift >= 1.0 && d.lambda > 0.0)
        .collect();
    let take = (data.len() / 4).max(5).min(usable.len());
    if take < 2 {
        return None;
    }
    let (num, den) = usable[usable.len() - take..]
        .iter()
        .fold((0.0, 0.0), |(num, den), d| {
            let base = d.n as f64 - shift;
            let x = 1.0 / (PI * base);
            (num + x * (d.lambda.sqrt() - base), den + x * x)
        });
    Some(num / den)
}
