//! The linear identity system tying the omega coefficients of `f` to the
//! spectral sums, plus the Parseval-type series and the right-endpoint
//! transform.
//!
//! Row `k = 0..=ind f` reads
//! `(−1)^k ω_{1−k} + Σ_{m ≡ k (2)} σ_{ind f − (m+k)/2} ω_m = 0`
//! with `ω_0 = 1` and `ω_m = 0` for `m < 0`.

use std::f64::consts::FRAC_2_PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::direct::Spectrum;
use crate::error::{Error, Result};
use crate::hn::{OmegaVector, RationalHNFunction};
use crate::poly::RealPolynomial;
use crate::sums::{model_tail, SigmaVector};

/// Coefficient multiplying `ω_m` in one identity row.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Coef {
    Sigma(usize),
    Unit(f64),
}

/// `(coefficient, m)` pairs of row `k`. Every consumer of the identity
/// system goes through this function.
fn row_terms(ind: usize, k: usize) -> Vec<(Coef, i64)> {
    let mut terms = Vec::new();
    match k {
        0 => terms.push((Coef::Unit(1.0), 1)),
        1 => terms.push((Coef::Unit(-1.0), 0)),
        _ => {}
    }
    for m in (k % 2..=ind + 1).step_by(2) {
        if (m + k) / 2 <= ind {
            terms.push((Coef::Sigma(ind - (m + k) / 2), m as i64));
        }
    }
    terms
}

fn check_dims(omegas: &OmegaVector, sigmas: &SigmaVector) -> Result<()> {
    if omegas.ind_f() != sigmas.ind_f || sigmas.sigmas.len() != sigmas.ind_f + 1 {
        return Err(Error::DimensionMismatch {
            expected: omegas.ind_f() + 1,
            got: sigmas.sigmas.len(),
        });
    }
    Ok(())
}

/// Left-hand sides of all identities.
pub fn residuals(omegas: &OmegaVector, sigmas: &SigmaVector) -> Result<Vec<f64>> {
    check_dims(omegas, sigmas)?;
    let ind = omegas.ind_f();
    Ok((0..=ind)
        .map(|k| {
            row_terms(ind, k)
                .into_iter()
                .map(|(c, m)| {
                    let coef = match c {
                        Coef::Sigma(j) => sigmas.sigmas[j],
                        Coef::Unit(u) => u,
                    };
                    coef * omegas.get(m)
                })
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ForOmega,
    ForSigma,
}

/// `matrix · x = rhs`, where `x` is `(ω_1 … ω_{ind+1})` or `(σ_0 … σ_ind)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySystem {
    pub ind_f: usize,
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub direction: Direction,
}

impl IdentitySystem {
    pub fn for_sigma(omegas: &OmegaVector) -> Self {
        let ind = omegas.ind_f();
        let mut matrix = DMatrix::zeros(ind + 1, ind + 1);
        let mut rhs = DVector::zeros(ind + 1);
        for k in 0..=ind {
            for (c, m) in row_terms(ind, k) {
                match c {
                    Coef::Sigma(j) => matrix[(k, j)] += omegas.get(m),
                    Coef::Unit(u) => rhs[k] -= u * omegas.get(m),
                }
            }
        }
        Self {
            ind_f: ind,
            matrix,
            rhs,
            direction: Direction::ForSigma,
        }
    }

    pub fn for_omega(sigmas: &SigmaVector) -> Self {
        let ind = sigmas.ind_f;
        let unknowns: Vec<i64> = (1..=ind as i64 + 1).collect();
        let rows: Vec<usize> = (0..=ind).collect();
        let (matrix, rhs) = omega_subsystem(sigmas, &rows, &unknowns, &[]);
        Self {
            ind_f: ind,
            matrix,
            rhs,
            direction: Direction::ForOmega,
        }
    }
}

/// Restriction of the ω-direction system to `rows` and the unknowns
/// `ω_m, m ∈ unknowns`; every other `ω_m` is taken from `known`.
fn omega_subsystem(
    sigmas: &SigmaVector,
    rows: &[usize],
    unknowns: &[i64],
    known: &[f64],
) -> (DMatrix<f64>, DVector<f64>) {
    let known = |m: i64| match m {
        0 => 1.0,
        m if m < 0 => 0.0,
        m => known.get(m as usize - 1).copied().unwrap_or(0.0),
    };
    let ind = sigmas.ind_f;
    let mut matrix = DMatrix::zeros(rows.len(), unknowns.len());
    let mut rhs = DVector::zeros(rows.len());
    for (r, &k) in rows.iter().enumerate() {
        for (c, m) in row_terms(ind, k) {
            let coef = match c {
                Coef::Sigma(j) => sigmas.sigmas[j],
                Coef::Unit(u) => u,
            };
            match unknowns.iter().position(|&u| u == m) {
                Some(col) => matrix[(r, col)] += coef,
                None => rhs[r] -= coef * known(m),
            }
        }
    }
    (matrix, rhs)
}

/// Solves the identities for `ω` in two stages. The unknowns of the parity
/// of `ind f` come from the rows of that parity (`k ≥ 1`), a positive
/// definite Hankel system in the σ's. The remaining unknowns then follow
/// from the other rows, which share the same Hankel matrix (for even
/// `ind f`, after row 0 gives `ω_1` directly).
pub fn solve_for_omega(sigmas: &SigmaVector) -> Result<OmegaVector> {
    let ind = sigmas.ind_f;
    if sigmas.sigmas.len() != ind + 1 {
        return Err(Error::DimensionMismatch {
            expected: ind + 1,
            got: sigmas.sigmas.len(),
        });
    }
    let parity = ind % 2;
    let mut omegas = vec![0.0; ind + 1];

    let rows1: Vec<usize> = (1..=ind).filter(|k| k % 2 == parity).collect();
    let unknowns1: Vec<i64> = (1..=ind as i64 + 1)
        .filter(|m| *m as usize % 2 == parity)
        .collect();
    let (hankel, rhs1) = omega_subsystem(sigmas, &rows1, &unknowns1, &omegas);
    let cholesky = if rows1.is_empty() {
        None
    } else {
        let c = nalgebra::Cholesky::new(hankel.clone())
            .ok_or(Error::NotPositiveDefinite { order: rows1.len() })?;
        let x = c.solve(&rhs1);
        for (&m, &v) in unknowns1.iter().zip(x.iter()) {
            omegas[m as usize - 1] = v;
        }
        Some(c)
    };

    let (rows2, unknowns2): (Vec<usize>, Vec<i64>) = if parity == 1 {
        (
            (0..ind).step_by(2).collect(),
            (2..=ind as i64 + 1).step_by(2).collect(),
        )
    } else {
        let (m, r) = omega_subsystem(sigmas, &[0], &[1], &omegas);
        omegas[0] = r[0] / m[(0, 0)];
        (
            (1..ind).step_by(2).collect(),
            (3..=ind as i64 + 1).step_by(2).collect(),
        )
    };
    if let Some(c) = cholesky {
        let (matrix2, rhs2) = omega_subsystem(sigmas, &rows2, &unknowns2, &omegas);
        debug_assert_eq!(matrix2, hankel);
        let x = c.solve(&rhs2);
        for (&m, &v) in unknowns2.iter().zip(x.iter()) {
            omegas[m as usize - 1] = v;
        }
    }
    OmegaVector::new(omegas)
}

/// Reciprocal condition number below which the σ-direction system counts
/// as singular.
const SINGULAR_RCOND: f64 = 1e-14;

pub fn solve_for_sigma(omegas: &OmegaVector) -> Result<SigmaVector> {
    let system = IdentitySystem::for_sigma(omegas);
    let singular = system.matrix.singular_values();
    let rcond = singular.min() / singular.max();
    let lu = system.matrix.clone().lu();
    let det = lu.determinant();
    if !(rcond > SINGULAR_RCOND) {
        return Err(Error::SingularSystem { det });
    }
    let x = lu.solve(&system.rhs).ok_or(Error::SingularSystem { det })?;
    SigmaVector::exact(x.iter().copied().collect())
}

/// Determinant of the σ-direction matrix; equal up to sign to the resultant
/// of `f_down` and `f_up`.
pub fn system_determinant(omegas: &OmegaVector) -> f64 {
    IdentitySystem::for_sigma(omegas).matrix.determinant()
}

/// Partial sums of a positive series together with its modelled tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEstimate {
    /// Last partial sum plus `tail`.
    pub estimate: f64,
    pub tail: f64,
    pub partial_sums: Vec<f64>,
    /// Set when the terms do not decay fast enough for the series to
    /// converge; `estimate` is then meaningless.
    pub divergent: bool,
}

fn check_index(spectrum: &Spectrum, f: &RationalHNFunction) -> Result<()> {
    if spectrum.ind_f != f.index() {
        return Err(Error::DimensionMismatch {
            expected: f.index(),
            got: spectrum.ind_f,
        });
    }
    if spectrum.is_empty() {
        return Err(Error::InvalidInput("spectrum is empty".into()));
    }
    Ok(())
}

/// Decay exponent of the terms over the last quarter, from a log-log fit.
fn decay_exponent(spectrum: &Spectrum, terms: &[f64]) -> Option<f64> {
    let shift = spectrum.shift();
    let pts: Vec<(f64, f64)> = spectrum
        .data
        .iter()
        .zip(terms)
        .filter(|(d, t)| d.n as f64 - shift >= 1.0 && **t > 0.0)
        .map(|(d, t)| ((d.n as f64 - shift).ln(), t.ln()))
        .collect();
    let take = (spectrum.len() / 4).max(4).min(pts.len());
    if take < 3 {
        return None;
    }
    let pts = &pts[pts.len() - take..];
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), p| {
        (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx) * (p.0 - mx))
    });
    Some(sxy / sxx)
}

/// `Σ g(λ_n)²/γ_n`; the tail uses `λ_n^{ind f}/γ_n → 2/π` and
/// `λ_n ≈ (n − L)² + 2T/π`.
fn weighted_series(spectrum: &Spectrum, g: &RealPolynomial, tail: bool) -> SeriesEstimate {
    let terms: Vec<f64> = spectrum
        .data
        .iter()
        .map(|d| g.eval(d.lambda).powi(2) / d.gamma)
        .collect();
    let partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let last = *partial_sums.last().expect("non-empty");
    let divergent = decay_exponent(spectrum, &terms).is_some_and(|p| p > -1.2);
    let tail = if tail && !divergent {
        let ind = spectrum.ind_f as i32;
        let c = spectrum.tail_constant * FRAC_2_PI;
        model_tail(spectrum.len(), spectrum.shift(), |x| {
            let mu = x * x + c;
            FRAC_2_PI * g.eval(mu).powi(2) / mu.powi(ind)
        })
    } else {
        0.0
    };
    SeriesEstimate {
        estimate: last + tail,
        tail,
        partial_sums,
        divergent,
    }
}

/// Estimate of `1/δ_k` from `Σ (f_down(λ_n)/(λ_n − h_k))² / γ_n`, with the
/// pole factor divided out of `f_down` exactly. `k` counts poles from 1.
pub fn parseval_delta(
    spectrum: &Spectrum,
    f: &RationalHNFunction,
    k: usize,
    tail: bool,
) -> Result<SeriesEstimate> {
    let d = f.poles().len();
    if k < 1 || k > d {
        return Err(Error::IndexOutOfRange {
            index: k as i64,
            valid: format!("1..={d}"),
        });
    }
    check_index(spectrum, f)?;
    let (_, down) = f.up_down();
    let g = down.deflate(f.poles()[k - 1].hk);
    Ok(weighted_series(spectrum, &g, tail))
}

/// Estimate of `1/h0` from `Σ f_down(λ_n)² / γ_n`; flagged divergent when
/// `h0 = 0`.
pub fn parseval_h0(
    spectrum: &Spectrum,
    f: &RationalHNFunction,
    tail: bool,
) -> Result<SeriesEstimate> {
    check_index(spectrum, f)?;
    let (_, down) = f.up_down();
    Ok(weighted_series(spectrum, &down, tail))
}

/// Spectral data seen from the right endpoint: `γ_n ↦ β_n² γ_n`,
/// `β_n ↦ 1/β_n`, and the two indices swapped.
pub fn right_endpoint_spectrum(spectrum: &Spectrum) -> Result<Spectrum> {
    let data = spectrum
        .data
        .iter()
        .map(|d| {
            if !(d.beta.is_finite() && d.beta != 0.0) {
                return Err(Error::InvalidInput(format!(
                    "beta_{} = {} cannot be inverted",
                    d.n, d.beta
                )));
            }
            let mut r = *d;
            r.gamma = d.beta * d.beta * d.gamma;
            r.beta = 1.0 / d.beta;
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        data,
        ind_f: spectrum.ind_right,
        ind_right: spectrum.ind_f,
        tail_constant: spectrum.tail_constant,
    })
}
