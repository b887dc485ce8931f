//! Numerical toolkit for characterizing slit-diffraction setups as effective
//! finite-dimensional transfer matrices.
//!
//! A scalar Helmholtz field restricted to a fixed-z plane (a "slice") is
//! expanded in Haar scaling/wavelet functions supported on square patches
//! congruent to the detector windows. Post-selecting one scaling mode per
//! detector turns free propagation through an N-slit screen into an N x N
//! complex matrix `T` that maps input-plane projections to output-plane
//! projections. Polar-decomposing `T = U * P` separates the lossless
//! transformation `U` (for the canonical double slit, close to a 54:46 beam
//! splitter) from the Hermitian loss factor `P`.
//!
//! The crate covers the full pipeline: geometry definitions ([`scenario`]),
//! Haar bases and projections ([`haar`]), propagation kernels and the
//! Kirchhoff oracle ([`propagator`]), slice vectors and mode-power accounting
//! ([`slicespace`]), transfer-matrix solves and polar decomposition
//! ([`transfer`]), intensity cross-correlation versus polarization angle
//! ([`correlation`]), and cascaded two-stage interferometers ([`compose`]).
//!
//! Lengths are measured in wavelengths (lambda = 1), so the wavenumber is
//! fixed at k = 2*pi.

pub mod compose;
pub mod correlation;
pub mod error;
pub mod haar;
pub mod par;
pub mod propagator;
pub mod quad;
pub mod scenario;
pub mod slicespace;
pub mod transfer;

pub use error::{Result, SimError};

/// Complex scalar used for all field amplitudes and matrix entries.
pub type C64 = num_complex::Complex<f64>;

/// Free-space wavenumber k = 2*pi/lambda with lambda = 1.
pub const WAVENUMBER: f64 = std::f64::consts::TAU;
