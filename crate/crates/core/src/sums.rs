//! Spectral sums `σ_k = Σ λ_n^k / γ_n`, `k < ind f`, and the regularized
//! top sum `σ_{ind f}`.
//!
//! A finite spectrum only gives partial sums. The missing tail is modelled
//! from the asymptotics `λ_n^{ind f} / γ_n → 2/π`, `λ_n ≈ (n − L)²`: the
//! leading term is known and one further power of `(n − L)^{-2}` is fitted
//! by least squares over the last quarter of the data.

use std::f64::consts::FRAC_2_PI;

use serde::{Deserialize, Serialize};

use crate::direct::Spectrum;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SumOptions {
    /// Add the modelled tail beyond the last computed eigenvalue.
    pub tail: bool,
}

impl Default for SumOptions {
    fn default() -> Self {
        Self { tail: true }
    }
}

impl SumOptions {
    pub const NO_TAIL: Self = Self { tail: false };
}

/// `σ_0 … σ_{ind f}` with the tail added to each entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaVector {
    pub ind_f: usize,
    pub sigmas: Vec<f64>,
    /// Number of spectral data summed explicitly; 0 for exact vectors.
    pub n_used: usize,
    pub tail_estimates: Vec<f64>,
}

impl SigmaVector {
    /// A vector not derived from a truncated spectrum.
    pub fn exact(sigmas: Vec<f64>) -> Result<Self> {
        if sigmas.is_empty() {
            return Err(Error::InvalidInput(
                "sigma vector needs at least one entry".into(),
            ));
        }
        Ok(Self {
            ind_f: sigmas.len() - 1,
            tail_estimates: vec![0.0; sigmas.len()],
            sigmas,
            n_used: 0,
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.sigmas
    }

    /// `σ_j`, or 0 outside `0..=ind f`.
    pub fn get(&self, j: i64) -> f64 {
        usize::try_from(j)
            .ok()
            .and_then(|j| self.sigmas.get(j).copied())
            .unwrap_or(0.0)
    }

    pub fn max_tail_estimate(&self) -> f64 {
        self.tail_estimates.iter().fold(0.0, |m, t| m.max(t.abs()))
    }
}

/// Number of model terms summed one by one before switching to the
/// power-law remainder.
const DIRECT_TAIL_TERMS: usize = 4096;

/// `Σ_{n ≥ start} term(n − shift)` for a term decaying like a power of its
/// argument. The remainder after the direct block uses the exponent
/// measured from its last two terms and the midpoint integral rule.
pub(crate) fn model_tail(start: usize, shift: f64, term: impl Fn(f64) -> f64) -> f64 {
    let x0 = start as f64 - shift;
    if x0 < 1.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut prev = 0.0;
    let mut last = 0.0;
    for i in 0..DIRECT_TAIL_TERMS {
        prev = last;
        last = term(x0 + i as f64);
        sum += last;
    }
    let x_last = x0 + (DIRECT_TAIL_TERMS - 1) as f64;
    if last == 0.0 || prev == 0.0 || last.signum() != prev.signum() {
        return sum;
    }
    let p = (last / prev).ln() / (x_last / (x_last - 1.0)).ln();
    if !(p < -1.5) {
        return sum;
    }
    // Σ_{x > x_last} t(x) ≈ ∫_{x_last + ½}^∞ t(x_last)(x/x_last)^p dx
    let a = x_last + 0.5;
    sum + last * (a / x_last).powf(p) * a / (-p - 1.0)
}

/// Least-squares coefficient `c` in `residual(n) ≈ c · basis(n)` over the
/// last quarter (at least 4 points) of the data with `n − L ≥ 1`.
fn fit_last_quarter(
    spectrum: &Spectrum,
    residual: impl Fn(usize) -> f64,
    basis: impl Fn(f64) -> f64,
) -> f64 {
    let shift = spectrum.shift();
    let usable: Vec<usize> = (0..spectrum.len())
        .filter(|&i| spectrum.data[i].n as f64 - shift >= 1.0)
        .collect();
    let take = (spectrum.len() / 4).max(4).min(usable.len());
    if take < 2 {
        return 0.0;
    }
    let (num, den) = usable[usable.len() - take..]
        .iter()
        .fold((0.0, 0.0), |(num, den), &i| {
            let b = basis(spectrum.data[i].n as f64 - shift);
            (num + b * residual(i), den + b * b)
        });
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn require_nonempty(spectrum: &Spectrum) -> Result<()> {
    if spectrum.is_empty() {
        Err(Error::InvalidInput("spectrum is empty".into()))
    } else {
        Ok(())
    }
}

fn term(spectrum: &Spectrum, i: usize, k: usize) -> f64 {
    let d = &spectrum.data[i];
    d.lambda.powi(k as i32) / d.gamma
}

/// `(σ_k, tail)` for `0 ≤ k < ind f`; the returned value includes `tail`.
pub fn sigma_plain(spectrum: &Spectrum, k: i64, opts: SumOptions) -> Result<(f64, f64)> {
    let ind = spectrum.ind_f;
    if k < 0 || k >= ind as i64 {
        return Err(Error::IndexOutOfRange {
            index: k,
            valid: format!("0..{ind}"),
        });
    }
    require_nonempty(spectrum)?;
    let k = k as usize;
    let partial: f64 = (0..spectrum.len()).map(|i| term(spectrum, i, k)).sum();
    if !opts.tail {
        return Ok((partial, 0.0));
    }
    let p = 2 * (k as i32 - ind as i32);
    let shift = spectrum.shift();
    let c = fit_last_quarter(
        spectrum,
        |i| term(spectrum, i, k) - FRAC_2_PI * (spectrum.data[i].n as f64 - shift).powi(p),
        |x| x.powi(p - 2),
    );
    let tail = model_tail(spectrum.len(), shift, |x| {
        FRAC_2_PI * x.powi(p) + c * x.powi(p - 2)
    });
    Ok((partial + tail, tail))
}

/// `λ_n^{ind f}/γ_n` minus its regularizing constant: nothing for `n < L`,
/// `1/π` for `n = L`, `2/π` for `n > L`.
fn regularized_term(spectrum: &Spectrum, i: usize) -> f64 {
    let n = spectrum.data[i].n as f64;
    let shift = spectrum.shift();
    let subtract = if n < shift {
        0.0
    } else if n == shift {
        0.5 * FRAC_2_PI
    } else {
        FRAC_2_PI
    };
    term(spectrum, i, spectrum.ind_f) - subtract
}

/// `(σ_{ind f}, tail)`; the returned value includes `tail`.
pub fn sigma_top(spectrum: &Spectrum, opts: SumOptions) -> Result<(f64, f64)> {
    require_nonempty(spectrum)?;
    let partial: f64 = (0..spectrum.len())
        .map(|i| regularized_term(spectrum, i))
        .sum();
    if !opts.tail {
        return Ok((partial, 0.0));
    }
    let c = fit_last_quarter(spectrum, |i| regularized_term(spectrum, i), |x| x.powi(-2));
    let tail = model_tail(spectrum.len(), spectrum.shift(), |x| c * x.powi(-2));
    Ok((partial + tail, tail))
}

pub fn sigma_vector(spectrum: &Spectrum, opts: SumOptions) -> Result<SigmaVector> {
    let ind = spectrum.ind_f;
    let mut sigmas = Vec::with_capacity(ind + 1);
    let mut tails = Vec::with_capacity(ind + 1);
    for k in 0..ind {
        let (s, t) = sigma_plain(spectrum, k as i64, opts)?;
        sigmas.push(s);
        tails.push(t);
    }
    let (s, t) = sigma_top(spectrum, opts)?;
    sigmas.push(s);
    tails.push(t);
    Ok(SigmaVector {
        ind_f: ind,
        sigmas,
        n_used: spectrum.len(),
        tail_estimates: tails,
    })
}
