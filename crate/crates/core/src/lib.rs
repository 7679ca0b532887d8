//! Complex-scaled resonance solvers for 1D model systems.
//!
//! Everything here works on a uniform real-space grid (or a small spectral
//! basis) under the coordinate rotation `x -> x e^{iθ}`. Eigenvectors are
//! normalized with the unconjugated c-product, so densities are complex and
//! integrate to the particle number.
//!
//! The crate is `no_std` with `alloc`; the default `std` feature only switches
//! the dense linear algebra to its SIMD dispatch.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod accurate;
pub mod density;
pub mod discretization;
pub mod eigen;
mod error;
pub mod grid;
pub mod ks;
pub mod many_body;
pub mod matrix;
pub mod potential;
pub mod quadrature;
pub mod scaling;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Largest admissible scaling angle (exclusive).
pub const THETA_MAX: f64 = core::f64::consts::FRAC_PI_4;

/// Slack for numerically positive imaginary parts of resonances.
pub const EPS_IM: f64 = 1e-10;

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if theta.is_finite() && (0.0..THETA_MAX).contains(&theta) {
        Ok(())
    } else {
        Err(Error::ThetaOutOfRange(theta))
    }
}

/// `e^{iφ}`.
#[inline]
pub fn cis(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}
