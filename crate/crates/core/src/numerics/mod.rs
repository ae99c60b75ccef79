//! Numerical kernels with no physics in them: 2×2 complex algebra, the
//! matrix exponential, a driven-ODE integrator, adaptive quadrature and
//! finite differences.
//!
//! Everything here is a pure function over value types.

mod linalg;
mod ode;
mod quad;

use num_complex::Complex64;
use thiserror::Error;

pub use linalg::{expm2, CVec2, Complex2x2, DEGENERATE_GAP};
pub use ode::{rk4_step, solve_driven_ode, solve_driven_ode_from, TimeGrid};
pub use quad::{gauss_legendre, quad1d, quad1d_breaks, quad1d_real, quad1d_with, Integral, QuadOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("non-finite input")]
    NonFinite,
    #[error("result overflowed")]
    Overflow,
    #[error("singular matrix")]
    Singular,
    #[error("time grid must be strictly increasing with at least one step")]
    InvalidGrid,
    #[error("integration interval must satisfy a < b")]
    InvalidInterval,
    #[error("quadrature did not converge (estimate {estimate}, error {error:e})")]
    NotConverged { estimate: Complex64, error: f64 },
}

/// `(f(x+h) − f(x−h)) / 2h`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    debug_assert!(h > 0.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}
