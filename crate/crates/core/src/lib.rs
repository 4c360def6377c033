//! Decoherence of a probe qubit held above a two-dimensional magnet near a
//! phase transition.
//!
//! The pipeline runs from dynamic susceptibilities ([`structure_factors`])
//! through the magnetic noise spectrum and the accumulated phase variance
//! ([`noise`]) to closed-form regimes ([`asymptotics`]) and exponent fits
//! ([`collapse`]). [`oracle`] simulates the mean-field Langevin dynamics
//! directly and serves as an independent check on the quadrature path.
//!
//! Internal units are natural: ħ = k_B = 1, with energies in units of the
//! exchange J and lengths in units of the lattice constant unless a caller
//! chooses otherwise. Only [`noise::materials`] works in SI.

pub mod asymptotics;
pub mod collapse;
pub mod error;
pub mod filters;
pub mod noise;
pub mod oracle;
pub mod quadrature;
pub mod structure_factors;

pub use error::{Error, Result};
