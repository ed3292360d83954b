//! Inverse problems: boundary coefficient from spectral data, and missing
//! spectral data from known boundary coefficients.

use std::f64::consts::FRAC_2_PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::direct::{fit_tail_constant, SpectralDatum, Spectrum};
use crate::error::{Error, Result};
use crate::hn::{OmegaVector, RationalHNFunction};
use crate::identity::{residuals, right_endpoint_spectrum, solve_for_omega, IdentitySystem};
use crate::sums::{sigma_vector, SigmaVector, SumOptions};

/// Result of [`recover_boundary_coefficient_with`], with intermediate data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryRecovery {
    pub f: RationalHNFunction,
    pub sigmas: SigmaVector,
    pub omegas: OmegaVector,
    /// Identity residuals of the recovered `ω` against the computed `σ`.
    pub residuals: Vec<f64>,
}

pub fn recover_boundary_coefficient(
    spectrum: &Spectrum,
    ind_f: usize,
) -> Result<RationalHNFunction> {
    recover_boundary_coefficient_with(spectrum, ind_f, SumOptions::default()).map(|r| r.f)
}

/// `σ → ω → f`, treating the data as belonging to a coefficient of index
/// `ind_f` (the index of the other endpoint is kept from `spectrum`).
pub fn recover_boundary_coefficient_with(
    spectrum: &Spectrum,
    ind_f: usize,
    opts: SumOptions,
) -> Result<BoundaryRecovery> {
    let spectrum = Spectrum {
        ind_f,
        ..spectrum.clone()
    };
    spectrum.validate()?;
    check_growth(&spectrum)?;
    let sigmas = sigma_vector(&spectrum, opts)?;
    let omegas = solve_for_omega(&sigmas)?;
    let residuals = residuals(&omegas, &sigmas)?;
    let f = RationalHNFunction::from_omegas(&omegas)?;
    Ok(BoundaryRecovery {
        f,
        sigmas,
        omegas,
        residuals,
    })
}

// Allowed relative deviation of the large-n mean of λ^{ind f}/γ from 2/π.
const GROWTH_TOLERANCE: f64 = 0.25;

/// `λ_n^{ind f}/γ_n → 2/π` fails badly when the data belong to a different
/// index; reject those before the algebra produces something arbitrary.
fn check_growth(spectrum: &Spectrum) -> Result<()> {
    let shift = spectrum.shift();
    let usable: Vec<&SpectralDatum> = spectrum
        .data
        .iter()
        .filter(|d| d.n as f64 - shift >= 2.0 && d.lambda > 0.0)
        .collect();
    let take = (spectrum.len() / 4).min(usable.len());
    if take < 4 {
        return Ok(());
    }
    let mean = usable[usable.len() - take..]
        .iter()
        .map(|d| d.lambda.powi(spectrum.ind_f as i32) / d.gamma)
        .sum::<f64>()
        / take as f64;
    if (mean / FRAC_2_PI - 1.0).abs() > GROWTH_TOLERANCE {
        return Err(Error::NotHerglotz(format!(
            "spectral data do not match ind f = {}: λ^ind/γ averages {mean:.6e} at large n, expected 2/π",
            spectrum.ind_f
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Missing {
    Lambda,
    Gamma,
    Both,
}

/// One incomplete datum. Values of the missing quantities, when present,
/// are used as initial guesses; the others are required.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissingSlot {
    pub n: usize,
    pub which: Missing,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
}

impl MissingSlot {
    pub fn new(n: usize, which: Missing) -> Self {
        Self {
            n,
            which,
            lambda: None,
            gamma: None,
            beta: None,
        }
    }

    fn lambda_missing(&self) -> bool {
        matches!(self.which, Missing::Lambda | Missing::Both)
    }

    fn gamma_missing(&self) -> bool {
        matches!(self.which, Missing::Gamma | Missing::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialSpectrum {
    pub known: Vec<SpectralDatum>,
    #[serde(default)]
    pub missing: Vec<MissingSlot>,
    /// Used for asymptotic initial guesses; fitted from `known` if absent.
    #[serde(default)]
    pub tail_constant: Option<f64>,
}

impl PartialSpectrum {
    /// `spectrum` with the listed slots removed.
    pub fn from_spectrum(spectrum: &Spectrum, missing: Vec<MissingSlot>) -> Self {
        let mut missing = missing;
        for slot in &mut missing {
            if let Some(d) = spectrum.data.get(slot.n) {
                if !slot.lambda_missing() {
                    slot.lambda = Some(d.lambda);
                }
                if !slot.gamma_missing() {
                    slot.gamma = Some(d.gamma);
                }
            }
        }
        let known = spectrum
            .data
            .iter()
            .filter(|d| missing.iter().all(|s| s.n != d.n))
            .copied()
            .collect();
        Self {
            known,
            missing,
            tail_constant: Some(spectrum.tail_constant),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingRecovery {
    pub spectrum: Spectrum,
    /// Max-norm of the identity residuals at the solution.
    pub residual: f64,
    pub iterations: usize,
    pub unknowns: usize,
    pub equations: usize,
    pub used_right_endpoint: bool,
}

const MAX_NEWTON: usize = 60;
const MAX_HALVINGS: usize = 8;
// Final residual accepted for square systems.
const RESIDUAL_TOL: f64 = 1e-8;

/// Index of each unknown of one slot in the Newton vector.
#[derive(Debug, Clone, Copy, Default)]
struct SlotUnknowns {
    lambda: Option<usize>,
    w: Option<usize>,
    rho: Option<usize>,
}

struct MissingProblem {
    slots: Vec<MissingSlot>,
    layout: Vec<SlotUnknowns>,
    /// Known `(λ, 1/γ, 1/(β²γ))` of each slot; unknown entries are ignored.
    fixed: Vec<(f64, f64, f64)>,
    left: Side,
    right: Option<Side>,
    unknowns: usize,
}

/// One endpoint's identity system `M σ = rhs` with
/// `σ = base + Σ_slots weight · λ^k`.
struct Side {
    matrix: DMatrix<f64>,
    rhs: DVector<f64>,
    base: Vec<f64>,
}

impl MissingProblem {
    fn values(&self, u: &[f64], i: usize) -> (f64, f64, f64) {
        let l = &self.layout[i];
        let f = self.fixed[i];
        (
            l.lambda.map_or(f.0, |j| u[j]),
            l.w.map_or(f.1, |j| u[j]),
            l.rho.map_or(f.2, |j| u[j]),
        )
    }

    fn equations(&self) -> usize {
        self.left.rhs.len() + self.right.as_ref().map_or(0, |s| s.rhs.len())
    }

    /// Residual vector and Jacobian at `u`.
    fn evaluate(&self, u: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let rows = self.equations();
        let mut r = DVector::zeros(rows);
        let mut jac = DMatrix::zeros(rows, self.unknowns);
        let mut offset = 0;
        for (side, right) in
            std::iter::once((&self.left, false)).chain(self.right.iter().map(|s| (s, true)))
        {
            let dim = side.base.len();
            let mut sigma = DVector::from_column_slice(&side.base);
            let mut dsigma = DMatrix::zeros(dim, self.unknowns);
            for i in 0..self.slots.len() {
                let (lambda, w, rho) = self.values(u, i);
                let weight = if right { rho } else { w };
                let weight_idx = if right {
                    self.layout[i].rho
                } else {
                    self.layout[i].w
                };
                for k in 0..dim {
                    let pk = lambda.powi(k as i32);
                    sigma[k] += weight * pk;
                    if let Some(j) = self.layout[i].lambda {
                        if k > 0 {
                            dsigma[(k, j)] += weight * k as f64 * lambda.powi(k as i32 - 1);
                        }
                    }
                    if let Some(j) = weight_idx {
                        dsigma[(k, j)] += pk;
                    }
                }
            }
            let res = &side.matrix * &sigma - &side.rhs;
            r.rows_mut(offset, dim).copy_from(&res);
            jac.rows_mut(offset, dim)
                .copy_from(&(&side.matrix * dsigma));
            offset += dim;
        }
        (r, jac)
    }

    fn admissible(&self, u: &[f64]) -> bool {
        u.iter().all(|v| v.is_finite())
            && self
                .layout
                .iter()
                .all(|l| l.w.is_none_or(|j| u[j] > 0.0) && l.rho.is_none_or(|j| u[j] > 0.0))
    }
}

fn lstsq(jac: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    jac.clone().svd(true, true).solve(rhs, 1e-14).ok()
}

/// Solves the identities for the missing data of `partial`, given both
/// boundary coefficients. The right-endpoint identities (weights `β²γ`)
/// are added only when the left ones are too few and every known datum
/// carries `β`; each slot then gets an extra unknown `1/(β²γ)` unless its
/// `β` and `γ` are both given.
pub fn recover_missing(
    partial: &PartialSpectrum,
    f: &RationalHNFunction,
    big_f: &RationalHNFunction,
    opts: SumOptions,
) -> Result<MissingRecovery> {
    let total = partial.known.len() + partial.missing.len();
    let mut data: Vec<Option<SpectralDatum>> = vec![None; total];
    for d in &partial.known {
        match data.get_mut(d.n) {
            Some(slot @ None) => *slot = Some(*d),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "datum n = {} is duplicated or out of range",
                    d.n
                )))
            }
        }
    }
    for s in &partial.missing {
        if s.n >= total
            || data[s.n].is_some()
            || partial.missing.iter().filter(|t| t.n == s.n).count() > 1
        {
            return Err(Error::InvalidInput(format!(
                "missing slot n = {} is duplicated or out of range",
                s.n
            )));
        }
        if (!s.lambda_missing() && s.lambda.is_none()) || (!s.gamma_missing() && s.gamma.is_none())
        {
            return Err(Error::InvalidInput(format!(
                "slot n = {} lacks its known value",
                s.n
            )));
        }
    }
    let ind_f = f.index();
    let ind_right = big_f.index();
    let shift = (ind_f + ind_right) as f64 / 2.0;
    let tail_constant = partial
        .tail_constant
        .or_else(|| fit_tail_constant(&partial.known, shift))
        .unwrap_or(0.0);

    let left_unknowns: usize = partial
        .missing
        .iter()
        .map(|s| s.lambda_missing() as usize + s.gamma_missing() as usize)
        .sum();
    let left_equations = ind_f + 1;
    let use_right = left_unknowns > left_equations
        && partial
            .known
            .iter()
            .all(|d| d.beta.is_finite() && d.beta != 0.0);

    let mut slots = partial.missing.clone();
    slots.sort_by_key(|s| s.n);
    let mut layout = Vec::with_capacity(slots.len());
    let mut unknowns = 0;
    let mut take = |flag: bool| {
        flag.then(|| {
            unknowns += 1;
            unknowns - 1
        })
    };
    for s in &slots {
        let rho_known = !s.gamma_missing() && s.beta.is_some_and(|b| b.is_finite() && b != 0.0);
        layout.push(SlotUnknowns {
            lambda: take(s.lambda_missing()),
            w: take(s.gamma_missing()),
            rho: take(use_right && !rho_known),
        });
    }
    let equations = left_equations + if use_right { ind_right + 1 } else { 0 };
    if unknowns > equations {
        return Err(Error::UnderdeterminedProblem {
            unknowns,
            equations,
        });
    }

    // Initial λ: given guess, else the asymptotic model, kept inside the
    // gap left by the known neighbours.
    let known_lambda = |n: usize| data.get(n).and_then(|d| d.map(|d| d.lambda));
    let mut guesses = Vec::with_capacity(slots.len());
    for s in &slots {
        let lambda = match s.lambda {
            Some(l) => l,
            None => {
                let x = s.n as f64 - shift;
                let model = x * x.abs() + FRAC_2_PI * tail_constant;
                let prev = s.n.checked_sub(1).and_then(known_lambda);
                let next = known_lambda(s.n + 1);
                match (prev, next) {
                    (Some(a), Some(b)) if !(model > a && model < b) => 0.5 * (a + b),
                    (None, Some(b)) if model >= b => {
                        let gap = known_lambda(s.n + 2).map_or(1.0, |c| (c - b).max(1.0));
                        b - gap
                    }
                    (Some(a), None) if model <= a => a + 1.0,
                    _ => model,
                }
            }
        };
        let gamma = s.gamma.unwrap_or_else(|| {
            0.5 * std::f64::consts::PI * lambda.abs().max(1.0).powi(ind_f as i32)
        });
        guesses.push((lambda, gamma));
    }

    // Complete spectrum at the guesses, for the fixed part of every σ.
    let guess_data = |beta_of: &dyn Fn(&MissingSlot) -> f64| -> Vec<SpectralDatum> {
        let mut out: Vec<Option<SpectralDatum>> = data.clone();
        for (s, &(lambda, gamma)) in slots.iter().zip(&guesses) {
            let beta = beta_of(s);
            out[s.n] = Some(SpectralDatum {
                n: s.n,
                lambda,
                gamma,
                beta,
                chi_prime: beta * gamma,
            });
        }
        out.into_iter()
            .map(|d| d.expect("every slot filled"))
            .collect()
    };
    let filled = Spectrum {
        data: guess_data(&|s| s.beta.unwrap_or(1.0)),
        ind_f,
        ind_right,
        tail_constant,
    };
    if slots.is_empty() {
        filled.validate()?;
        return Ok(MissingRecovery {
            spectrum: filled,
            residual: 0.0,
            iterations: 0,
            unknowns: 0,
            equations,
            used_right_endpoint: false,
        });
    }

    let omega_f = f.omega_poly();
    let side = |omegas: &OmegaVector,
                spectrum: &Spectrum,
                weight: &dyn Fn(usize) -> f64|
     -> Result<Side> {
        let sigma = sigma_vector(spectrum, opts)?;
        let system = IdentitySystem::for_sigma(omegas);
        let mut base = sigma.sigmas.clone();
        for (i, s) in slots.iter().enumerate() {
            let lambda = guesses[i].0;
            for (k, b) in base.iter_mut().enumerate() {
                *b -= weight(i) * lambda.powi(k as i32);
            }
            debug_assert_eq!(spectrum.data[s.n].lambda, lambda);
        }
        Ok(Side {
            matrix: system.matrix,
            rhs: system.rhs,
            base,
        })
    };
    let left = side(&omega_f, &filled, &|i| 1.0 / guesses[i].1)?;
    let right = if use_right {
        let right_spec = right_endpoint_spectrum(&filled)?;
        let guess_beta = |i: usize| slots[i].beta.unwrap_or(1.0);
        Some(side(&big_f.omega_poly(), &right_spec, &|i| {
            1.0 / (guess_beta(i).powi(2) * guesses[i].1)
        })?)
    } else {
        None
    };

    let fixed: Vec<(f64, f64, f64)> = slots
        .iter()
        .zip(&guesses)
        .map(|(s, &(lambda, gamma))| {
            let beta = s.beta.unwrap_or(1.0);
            (lambda, 1.0 / gamma, 1.0 / (beta * beta * gamma))
        })
        .collect();
    let problem = MissingProblem {
        slots: slots.clone(),
        layout,
        fixed,
        left,
        right,
        unknowns,
    };

    let mut u = vec![0.0; unknowns];
    for (i, l) in problem.layout.iter().enumerate() {
        if let Some(j) = l.lambda {
            u[j] = guesses[i].0;
        }
        if let Some(j) = l.w {
            u[j] = problem.fixed[i].1;
        }
        if let Some(j) = l.rho {
            u[j] = problem.fixed[i].2;
        }
    }
    // The identities are linear in the weights: solve for them exactly at
    // the initial λ's.
    {
        let weight_cols: Vec<usize> = (0..unknowns)
            .filter(|&j| problem.layout.iter().all(|l| l.lambda != Some(j)))
            .collect();
        if !weight_cols.is_empty() {
            let (r, jac) = problem.evaluate(&u);
            let sub = jac.select_columns(&weight_cols);
            if let Some(step) = lstsq(&sub, &(-r)) {
                let mut trial = u.clone();
                for (c, &j) in weight_cols.iter().enumerate() {
                    trial[j] += step[c];
                }
                if problem.admissible(&trial) {
                    u = trial;
                }
            }
        }
    }

    let mut iterations = 0;
    let (mut r, mut jac) = problem.evaluate(&u);
    while iterations < MAX_NEWTON {
        if r.amax() < 1e-14 {
            break;
        }
        iterations += 1;
        let Some(step) = lstsq(&jac, &(-&r)) else {
            break;
        };
        let norm = r.norm();
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
            if problem.admissible(&trial) {
                let (rt, jt) = problem.evaluate(&trial);
                if rt.norm() < norm {
                    accepted = Some((trial, rt, jt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, rt, jt)) = accepted else {
            break;
        };
        let moved = t * step.norm();
        let scale = 1.0 + u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        u = trial;
        r = rt;
        jac = jt;
        if moved <= 1e-15 * scale {
            break;
        }
    }

    let residual = r.amax();
    if (unknowns == equations && !(residual <= RESIDUAL_TOL)) || !problem.admissible(&u) {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }

    let mut completed: Vec<Option<SpectralDatum>> = data;
    for (i, s) in slots.iter().enumerate() {
        let (lambda, w, rho) = problem.values(&u, i);
        let gamma = 1.0 / w;
        let beta = match (s.beta, problem.right.is_some()) {
            (Some(b), _) => b,
            (None, true) => {
                let sign = neighbour_sign(&completed, s.n);
                sign * (w / rho).sqrt()
            }
            (None, false) => f64::NAN,
        };
        completed[s.n] = Some(SpectralDatum {
            n: s.n,
            lambda,
            gamma,
            beta,
            chi_prime: beta * gamma,
        });
    }
    let spectrum = Spectrum {
        data: completed
            .into_iter()
            .map(|d| d.expect("every slot filled"))
            .collect(),
        ind_f,
        ind_right,
        tail_constant,
    };
    if spectrum.data.windows(2).any(|w| w[0].lambda >= w[1].lambda) {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    Ok(MissingRecovery {
        spectrum,
        residual,
        iterations,
        unknowns,
        equations,
        used_right_endpoint: problem.right.is_some(),
    })
}

/// Sign of `β_n` guessed from alternation against a known neighbour.
fn neighbour_sign(data: &[Option<SpectralDatum>], n: usize) -> f64 {
    let finite = |d: &Option<SpectralDatum>| d.filter(|d| d.beta.is_finite() && d.beta != 0.0);
    n.checked_sub(1)
        .and_then(|p| data.get(p).and_then(finite))
        .or_else(|| data.get(n + 1).and_then(finite))
        .map_or(1.0, |d| -d.beta.signum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn neumann_like(n: usize) -> Spectrum {
        Spectrum {
            data: (0..n)
                .map(|i| SpectralDatum {
                    n: i,
                    lambda: (i * i) as f64,
                    gamma: if i == 0 { PI } else { PI / 2.0 },
                    beta: if i % 2 == 0 { 1.0 } else { -1.0 },
                    chi_prime: 0.0,
                })
                .collect(),
            ind_f: 0,
            ind_right: 0,
            tail_constant: 0.0,
        }
    }

    #[test]
    fn nothing_missing_returns_input() {
        let s = neumann_like(10);
        let p = PartialSpectrum::from_spectrum(&s, vec![]);
        let zero = RationalHNFunction::constant(0.0);
        let r = recover_missing(&p, &zero, &zero, SumOptions::default()).unwrap();
        assert_eq!(r.spectrum, s);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn missing_gamma_of_exact_neumann_data() {
        let s = neumann_like(40);
        let p = PartialSpectrum::from_spectrum(&s, vec![MissingSlot::new(0, Missing::Gamma)]);
        let zero = RationalHNFunction::constant(0.0);
        let r = recover_missing(&p, &zero, &zero, SumOptions::default()).unwrap();
        assert!((r.spectrum.data[0].gamma - PI).abs() < 1e-10);
        assert_eq!(r.spectrum.data[0].lambda, 0.0);
        assert!(r.spectrum.data[0].beta.is_nan());
    }

    #[test]
    fn too_many_unknowns() {
        let s = neumann_like(10);
        let p = PartialSpectrum::from_spectrum(
            &s,
            vec![
                MissingSlot::new(0, Missing::Both),
                MissingSlot::new(1, Missing::Both),
            ],
        );
        let zero = RationalHNFunction::constant(0.0);
        assert!(matches!(
            recover_missing(&p, &zero, &zero, SumOptions::default()),
            Err(Error::UnderdeterminedProblem { .. })
        ));
    }

    #[test]
    fn malformed_partial_spectra() {
        let s = neumann_like(5);
        let zero = RationalHNFunction::constant(0.0);
        let mut p = PartialSpectrum::from_spectrum(&s, vec![MissingSlot::new(2, Missing::Lambda)]);
        p.missing[0].gamma = None;
        assert!(matches!(
            recover_missing(&p, &zero, &zero, SumOptions::default()),
            Err(Error::InvalidInput(_))
        ));
        let mut p = PartialSpectrum::from_spectrum(&s, vec![MissingSlot::new(2, Missing::Gamma)]);
        p.known.push(p.known[0]);
        assert!(matches!(
            recover_missing(&p, &zero, &zero, SumOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn neumann_data_give_zero_coefficient() {
        let f = recover_boundary_coefficient(&neumann_like(60), 0).unwrap();
        assert!(f.h().abs() < 1e-12 && f.h0() == 0.0 && f.poles().is_empty());
        assert!(matches!(
            recover_boundary_coefficient(&neumann_like(60), 1),
            Err(Error::NotHerglotz(_))
        ));
    }
}
