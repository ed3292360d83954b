//! Rational Herglotz-Nevanlinna boundary coefficients.
//!
//! A coefficient has the form
//! `f(λ) = h0·λ + h + Σ_k δ_k / (h_k − λ)` with `h0 ≥ 0`, `δ_k > 0` and
//! strictly increasing poles `h_k`. Every such function is the quotient
//! `f_up / f_down` of two coprime real polynomials, and carries the monic
//! "omega" polynomial of degree `index(f) + 1` that enters the identity
//! system linking boundary coefficients to spectral data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::RealPolynomial;

/// Relative pole tolerance used by [`RationalHNFunction::eval`].
pub const POLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pole {
    pub hk: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawHn {
    h0: f64,
    h: f64,
    #[serde(default)]
    poles: Vec<Pole>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHn", into = "RawHn")]
pub struct RationalHNFunction {
    h0: f64,
    h: f64,
    poles: Vec<Pole>,
}

impl TryFrom<RawHn> for RationalHNFunction {
    type Error = Error;

    fn try_from(raw: RawHn) -> Result<Self> {
        Self::new(raw.h0, raw.h, raw.poles)
    }
}

impl From<RationalHNFunction> for RawHn {
    fn from(f: RationalHNFunction) -> Self {
        RawHn {
            h0: f.h0,
            h: f.h,
            poles: f.poles,
        }
    }
}

impl RationalHNFunction {
    pub fn new(h0: f64, h: f64, poles: Vec<Pole>) -> Result<Self> {
        if !(h0.is_finite() && h.is_finite()) {
            return Err(Error::NotHerglotz("h0 and h must be finite".into()));
        }
        if h0 < 0.0 {
            return Err(Error::NotHerglotz(format!("h0 = {h0} is negative")));
        }
        for (k, p) in poles.iter().enumerate() {
            if !(p.hk.is_finite() && p.delta.is_finite()) {
                return Err(Error::NotHerglotz(format!("pole {k} is not finite")));
            }
            if p.delta <= 0.0 {
                return Err(Error::NotHerglotz(format!(
                    "weight delta_{} = {} is not positive",
                    k + 1,
                    p.delta
                )));
            }
        }
        if poles.windows(2).any(|w| w[0].hk >= w[1].hk) {
            return Err(Error::NotHerglotz(
                "poles must be strictly increasing".into(),
            ));
        }
        Ok(Self { h0, h, poles })
    }

    /// The constant function `f ≡ h`.
    pub fn constant(h: f64) -> Self {
        Self::new(0.0, h, Vec::new()).expect("finite constant")
    }

    /// Shorthand for tests and examples: `(h0, h, [(hk, delta)])`.
    pub fn from_parts(h0: f64, h: f64, poles: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            h0,
            h,
            poles
                .iter()
                .map(|&(hk, delta)| Pole { hk, delta })
                .collect(),
        )
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn poles(&self) -> &[Pole] {
        &self.poles
    }

    /// `2d + 1` if `h0 > 0`, otherwise `2d`.
    pub fn index(&self) -> usize {
        2 * self.poles.len() + usize::from(self.h0 > 0.0)
    }

    /// `1/h0` if `h0 > 0`, otherwise 1.
    pub fn h0_prime(&self) -> f64 {
        if self.h0 > 0.0 {
            1.0 / self.h0
        } else {
            1.0
        }
    }

    fn check_pole_distance(&self, lambda: f64) -> Result<()> {
        let tol = POLE_TOLERANCE * (1.0 + lambda.abs());
        match self.poles.iter().find(|p| (lambda - p.hk).abs() < tol) {
            Some(p) => Err(Error::PoleProximity { lambda, pole: p.hk }),
            None => Ok(()),
        }
    }

    pub fn eval(&self, lambda: f64) -> Result<f64> {
        self.check_pole_distance(lambda)?;
        Ok(self.h0 * lambda
            + self.h
            + self
                .poles
                .iter()
                .map(|p| p.delta / (p.hk - lambda))
                .sum::<f64>())
    }

    /// `f'(λ) = h0 + Σ δ_k / (h_k − λ)²`, nonnegative away from the poles.
    pub fn eval_derivative(&self, lambda: f64) -> Result<f64> {
        self.check_pole_distance(lambda)?;
        Ok(self.h0
            + self
                .poles
                .iter()
                .map(|p| p.delta / (p.hk - lambda).powi(2))
                .sum::<f64>())
    }

    /// Numerator and denominator `(f_up, f_down)` with
    /// `f_down = h0' · Π (h_k − λ)`.
    pub fn up_down(&self) -> (RealPolynomial, RealPolynomial) {
        let h0p = self.h0_prime();
        let factors: Vec<RealPolynomial> = self
            .poles
            .iter()
            .map(|p| RealPolynomial::shifted_negative_identity(p.hk))
            .collect();
        let product = factors
            .iter()
            .fold(RealPolynomial::constant(1.0), |acc, f| &acc * f);
        let mut up = &RealPolynomial::new(vec![self.h, self.h0]) * &product;
        for (k, pole) in self.poles.iter().enumerate() {
            let others = factors
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != k)
                .fold(RealPolynomial::constant(pole.delta), |acc, (_, f)| &acc * f);
            up = &up + &others;
        }
        (up.scale(h0p), product.scale(h0p))
    }

    /// Coefficients of the monic polynomial
    /// `(−1)^⌊i/2⌋ λ f_down(λ²) − (−1)^⌈i/2⌉ f_up(λ²)`, `i = index(f)`.
    pub fn omega_poly(&self) -> OmegaVector {
        let ind = self.index();
        let (up, down) = self.up_down();
        let odd_sign = if (ind / 2).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let even_sign = if ind.div_ceil(2).is_multiple_of(2) {
            -1.0
        } else {
            1.0
        };
        let mut coeffs = vec![0.0; ind + 2];
        for (j, &c) in down.coeffs().iter().enumerate() {
            coeffs[2 * j + 1] += odd_sign * c;
        }
        for (j, &c) in up.coeffs().iter().enumerate() {
            coeffs[2 * j] += even_sign * c;
        }
        // coeffs[ind + 1] is the leading coefficient, 1 by construction.
        let omegas = (1..=ind + 1).map(|m| coeffs[ind + 1 - m]).collect();
        OmegaVector { omegas }
    }

    /// Inverse of [`omega_poly`](Self::omega_poly).
    pub fn from_omegas(omegas: &OmegaVector) -> Result<Self> {
        let ind = omegas.ind_f();
        let poly = omegas.to_polynomial();
        let odd_sign = if (ind / 2).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let even_sign = if ind.div_ceil(2).is_multiple_of(2) {
            -1.0
        } else {
            1.0
        };
        let d = ind / 2;
        let down = RealPolynomial::new((0..=d).map(|j| odd_sign * poly.coeff(2 * j + 1)).collect());
        let up = RealPolynomial::new((0..=d + 1).map(|j| even_sign * poly.coeff(2 * j)).collect());
        if down.degree() != Some(d) {
            return Err(Error::NotHerglotz(format!(
                "denominator has degree {:?}, expected {d}",
                down.degree()
            )));
        }

        let (quot, _) = up.div_rem(&down)?;
        let (h0, h) = match quot.degree() {
            None => (0.0, 0.0),
            Some(0) => (0.0, quot.coeff(0)),
            Some(1) => (quot.coeff(1), quot.coeff(0)),
            Some(k) => {
                return Err(Error::NotHerglotz(format!(
                    "polynomial part has degree {k}"
                )))
            }
        };
        if ind % 2 == 1 && h0 <= 0.0 {
            return Err(Error::NotHerglotz(format!(
                "odd index requires h0 > 0, got {h0}"
            )));
        }

        let scale = down.max_abs_coeff().max(1.0);
        let mut roots = Vec::with_capacity(d);
        for z in down.complex_roots() {
            if z.im.abs() > 1e-6 * (1.0 + z.re.abs()) {
                return Err(Error::NotHerglotz(format!(
                    "denominator root {z} is not real"
                )));
            }
            roots.push(down.polish_root(z.re, 4));
        }
        roots.sort_by(f64::total_cmp);
        if roots
            .windows(2)
            .any(|w| w[1] - w[0] <= 1e-10 * scale * (1.0 + w[1].abs()))
        {
            return Err(Error::NotHerglotz("denominator has a repeated root".into()));
        }
        let ddown = down.derivative();
        let poles = roots
            .iter()
            .map(|&hk| {
                let delta = -up.eval(hk) / ddown.eval(hk);
                if delta > 0.0 && delta.is_finite() {
                    Ok(Pole { hk, delta })
                } else {
                    Err(Error::NotHerglotz(format!(
                        "residue at h_k = {hk} is {delta}, not positive"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(h0, h, poles)
    }
}

/// The coefficients `ω_1 … ω_{ind f + 1}` of the monic omega polynomial
/// (`ω_0 = 1` is implicit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OmegaVector {
    omegas: Vec<f64>,
}

impl OmegaVector {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidInput(
                "omega vector needs at least one entry".into(),
            ));
        }
        Ok(Self { omegas })
    }

    pub fn ind_f(&self) -> usize {
        self.omegas.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.omegas
    }

    /// `ω_m` with `ω_0 = 1` and `ω_m = 0` outside `0..=ind f + 1`.
    pub fn get(&self, m: i64) -> f64 {
        match m {
            0 => 1.0,
            m if m < 0 => 0.0,
            m => self.omegas.get(m as usize - 1).copied().unwrap_or(0.0),
        }
    }

    pub fn to_polynomial(&self) -> RealPolynomial {
        let n = self.omegas.len();
        let mut coeffs = vec![0.0; n + 1];
        coeffs[n] = 1.0;
        for (i, &w) in self.omegas.iter().enumerate() {
            coeffs[n - 1 - i] = w;
        }
        RealPolynomial::new(coeffs)
    }
}
