//! Quasi-static scattering by a thin, rounded two-dimensional nanorod.
//!
//! The rod is a stadium: a segment of length `L` thickened by `delta`, with
//! semicircular caps. Fields obey the transmission problem
//! `div(eps^-1 grad u) + omega^2 u = 0` with a plane-wave incidence. The crate
//! provides a Nyström boundary-integral solver for that problem, the
//! Neumann–Poincaré spectrum of the boundary, the thin-rod asymptotic formula
//! for the scattered field, and the diagnostics used to study plasmonic
//! resonance as the loss parameter of the rod tends to zero.
//!
//! ```no_run
//! use nanorod::{geometry, np_spectral::NpSpectrum};
//! let rod = geometry::build_nanorod(1.0, 0.05, 512).unwrap();
//! let spectrum = NpSpectrum::compute(&rod).unwrap();
//! println!("largest mean-zero eigenvalue {}", spectrum.values[1]);
//! ```

pub mod asymptotics;
pub mod cli_io;
pub mod error;
pub mod geometry;
pub mod layer_potentials;
pub mod linalg;
pub mod np_spectral;
pub mod quadrature;
pub mod resonance;
pub mod special_functions;
pub mod transmission_solver;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Plane point and vector type used throughout.
pub type Point = nalgebra::Vector2<f64>;
