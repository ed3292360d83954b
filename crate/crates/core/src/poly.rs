//! Dense real polynomials in the monomial basis.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial with real coefficients stored in ascending degree order.
///
/// The coefficient vector is kept canonical: it never ends in an exact zero,
/// so the zero polynomial is the empty vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "Vec<f64>", into = "Vec<f64>")]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

impl From<Vec<f64>> for RealPolynomial {
    fn from(coeffs: Vec<f64>) -> Self {
        Self::new(coeffs)
    }
}

impl From<RealPolynomial> for Vec<f64> {
    fn from(p: RealPolynomial) -> Self {
        p.coeffs
    }
}

impl RealPolynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `c - lambda`, the building block of `f_down`.
    pub fn shifted_negative_identity(c: f64) -> Self {
        Self::new(vec![c, -1.0])
    }

    /// Monic polynomial with the given real roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots.iter().fold(Self::constant(1.0), |acc, &r| {
            &acc * &Self::new(vec![-r, 1.0])
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Coefficient of `lambda^i` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and first derivative by a single Horner pass.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Largest coefficient magnitude; used as a scale for tolerances.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// `p(lambda^2)`.
    pub fn compose_square(&self) -> Self {
        let mut out = vec![0.0; 2 * self.coeffs.len()];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[2 * i] = c;
        }
        Self::new(out)
    }

    /// Euclidean division `self = q * divisor + r` with `deg r < deg divisor`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        let dd = divisor
            .degree()
            .ok_or_else(|| Error::DegenerateInput("division by the zero polynomial".into()))?;
        let lead = divisor.leading();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return Ok((Self::zero(), self.clone()));
        }
        let mut quot = vec![0.0; rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let c = rem[i + dd] / lead;
            quot[i] = c;
            for (j, &dc) in divisor.coeffs.iter().enumerate() {
                rem[i + j] -= c * dc;
            }
            rem[i + dd] = 0.0;
        }
        rem.truncate(dd);
        Ok((Self::new(quot), Self::new(rem)))
    }

    /// Exact synthetic division by `(lambda - root)`, discarding the remainder.
    pub fn deflate(&self, root: f64) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return Self::zero();
        }
        let mut out = vec![0.0; n - 1];
        let mut carry = 0.0;
        for i in (1..n).rev() {
            carry = carry * root + self.coeffs[i];
            out[i - 1] = carry;
        }
        Self::new(out)
    }

    /// All complex roots, from the eigenvalues of the companion matrix.
    pub fn complex_roots(&self) -> Vec<Complex<f64>> {
        let Some(deg) = self.degree() else {
            return Vec::new();
        };
        if deg == 0 {
            return Vec::new();
        }
        let lead = self.leading();
        let mut companion = DMatrix::<f64>::zeros(deg, deg);
        for i in 1..deg {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            companion[(i, deg - 1)] = -self.coeffs[i] / lead;
        }
        companion.complex_eigenvalues().iter().copied().collect()
    }

    /// Newton polish of an approximate real root.
    pub fn polish_root(&self, mut x: f64, iterations: usize) -> f64 {
        for _ in 0..iterations {
            let (p, dp) = self.eval_with_derivative(x);
            if dp == 0.0 || !p.is_finite() {
                break;
            }
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            x -= step;
            if step.abs() <= f64::EPSILON * x.abs().max(1.0) {
                break;
            }
        }
        x
    }
}

impl Add for &RealPolynomial {
    type Output = RealPolynomial;

    fn add(self, rhs: Self) -> RealPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        RealPolynomial::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &RealPolynomial {
    type Output = RealPolynomial;

    fn sub(self, rhs: Self) -> RealPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        RealPolynomial::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Mul for &RealPolynomial {
    type Output = RealPolynomial;

    fn mul(self, rhs: Self) -> RealPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return RealPolynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RealPolynomial::new(out)
    }
}

impl Neg for &RealPolynomial {
    type Output = RealPolynomial;

    fn neg(self) -> RealPolynomial {
        self.scale(-1.0)
    }
}

impl fmt::Display for RealPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}·λ")?,
                _ => write!(f, "{a}·λ^{i}")?,
            }
        }
        Ok(())
    }
}

/// Resultant of two polynomials as the determinant of their Sylvester matrix.
pub fn resultant(p: &RealPolynomial, q: &RealPolynomial) -> Result<f64> {
    match (p.degree(), q.degree()) {
        (None, None) => Err(Error::DegenerateInput(
            "resultant of two zero polynomials".into(),
        )),
        (None, Some(0)) | (Some(0), None) => Ok(1.0),
        (None, _) | (_, None) => Ok(0.0),
        (Some(m), Some(n)) => {
            let size = m + n;
            if size == 0 {
                return Ok(1.0);
            }
            let mut s = DMatrix::<f64>::zeros(size, size);
            // n shifted rows of p, then m shifted rows of q, highest degree first.
            for row in 0..n {
                for (j, &c) in p.coeffs().iter().rev().enumerate() {
                    s[(row, row + j)] = c;
                }
            }
            for row in 0..m {
                for (j, &c) in q.coeffs().iter().rev().enumerate() {
                    s[(n + row, row + j)] = c;
                }
            }
            Ok(s.full_piv_lu().determinant())
        }
    }
}
