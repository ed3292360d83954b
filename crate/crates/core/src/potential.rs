use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real potential on `[0, π]`.
///
/// `Sampled` holds values on a uniform grid spanning `[0, π]` (first sample
/// at 0, last at π) and is interpolated piecewise linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
#[derive(Default)]
pub enum Potential {
    #[default]
    Zero,
    Constant {
        c: f64,
    },
    Sampled {
        values: Vec<f64>,
    },
}

impl Potential {
    pub fn sampled_from_fn(points: usize, q: impl Fn(f64) -> f64) -> Self {
        let h = PI / (points - 1) as f64;
        Potential::Sampled {
            values: (0..points).map(|i| q(i as f64 * h)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::Zero => Ok(()),
            Potential::Constant { c } if c.is_finite() => Ok(()),
            Potential::Constant { .. } => Err(Error::InvalidInput(
                "constant potential is not finite".into(),
            )),
            Potential::Sampled { values } => {
                if values.len() < 2 {
                    return Err(Error::InvalidInput(
                        "sampled potential needs at least 2 points".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput(
                        "sampled potential has non-finite values".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    fn spacing(values: &[f64]) -> f64 {
        PI / (values.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant { c } => *c,
            Potential::Sampled { values } => {
                let dx = Self::spacing(values);
                let t = (x / dx).clamp(0.0, (values.len() - 1) as f64);
                let i = (t.floor() as usize).min(values.len() - 2);
                let w = t - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    /// Points where `q` may fail to be smooth, including both endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Potential::Sampled { values } => {
                let dx = Self::spacing(values);
                let n = values.len() - 1;
                (0..=n)
                    .map(|i| if i == n { PI } else { i as f64 * dx })
                    .collect()
            }
            _ => vec![0.0, PI],
        }
    }

    /// `∫₀^π q`, exact for every variant.
    pub fn integral(&self) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant { c } => c * PI,
            Potential::Sampled { values } => {
                let dx = Self::spacing(values);
                values.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dx).sum()
            }
        }
    }

    /// `∫₀^π |q|`, exact for the piecewise-linear interpolant.
    pub fn l1_norm(&self) -> f64 {
        match self {
            Potential::Zero => 0.0,
            Potential::Constant { c } => c.abs() * PI,
            Potential::Sampled { values } => {
                let dx = Self::spacing(values);
                values
                    .windows(2)
                    .map(|w| {
                        let (a, b) = (w[0], w[1]);
                        if a * b >= 0.0 {
                            0.5 * (a.abs() + b.abs()) * dx
                        } else {
                            0.5 * (a * a + b * b) / (a.abs() + b.abs()) * dx
                        }
                    })
                    .sum()
            }
        }
    }

    /// `x ↦ q(π − x)`.
    pub fn reflected(&self) -> Self {
        match self {
            Potential::Sampled { values } => Potential::Sampled {
                values: values.iter().rev().copied().collect(),
            },
            other => other.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_interpolation_and_integrals() {
        let q = Potential::Sampled {
            values: vec![0.0, 2.0, -2.0],
        };
        assert_eq!(q.eval(0.0), 0.0);
        assert!((q.eval(PI / 4.0) - 1.0).abs() < 1e-15);
        assert!((q.eval(PI) + 2.0).abs() < 1e-15);
        assert!((q.integral() - (0.5 * 2.0 * PI / 2.0)).abs() < 1e-14);
        // |q| on the second segment: two triangles of height 2 and half-width π/4.
        let expected = PI / 2.0 + 2.0 * 0.5 * 2.0 * PI / 4.0;
        assert!((q.l1_norm() - expected).abs() < 1e-14);
        assert_eq!(q.breakpoints().len(), 3);
        assert!((q.reflected().eval(0.0) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(Potential::Sampled { values: vec![1.0] }.validate().is_err());
        assert!(Potential::Constant { c: f64::NAN }.validate().is_err());
        assert!(Potential::Zero.validate().is_ok());
    }
}
