//! Direct and inverse spectral problems for `−y'' + q y = λ y` on `[0, π]`
//! with boundary conditions whose coefficients are rational
//! Herglotz-Nevanlinna functions of the spectral parameter:
//!
//! `y'(0) + f(λ) y(0) = 0`, `y'(π) = F(λ) y(π)`.

// `!(x > 0.0)` style checks are used on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod direct;
pub mod error;
pub mod hn;
pub mod identity;
pub mod inverse;
pub mod ode;
mod parallel;
pub mod poly;
pub mod potential;
pub mod sums;

pub use direct::{
    beta, char_function, char_function_right, find_eigenvalues, integrate_phi, integrate_psi,
    norming_constant, PhiEndpoint, ProblemSpec, PsiEndpoint, SolverParams, SpectralDatum, Spectrum,
};
pub use error::{Error, Result};
pub use hn::{OmegaVector, Pole, RationalHNFunction, POLE_TOLERANCE};
pub use identity::{
    parseval_delta, parseval_h0, residuals, right_endpoint_spectrum, solve_for_omega,
    solve_for_sigma, system_determinant, Direction, IdentitySystem, SeriesEstimate,
};
pub use inverse::{
    recover_boundary_coefficient, recover_boundary_coefficient_with, recover_missing,
    BoundaryRecovery, Missing, MissingRecovery, MissingSlot, PartialSpectrum,
};
pub use parallel::parallel_available;
pub use poly::{resultant, RealPolynomial};
pub use potential::Potential;
pub use sums::{sigma_plain, sigma_top, sigma_vector, SigmaVector, SumOptions};
