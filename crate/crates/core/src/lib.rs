//! Emission-rate engine for third-order spontaneous parametric down-conversion
//! (photon triplets) in a uniaxial birefringent crystal, with and without a
//! coherent seed in one of the daughter modes.
//!
//! The crate is organised bottom-up:
//!
//! * [`constants`] – physical constants passed explicitly to every rate call.
//! * [`dispersion`] – Sellmeier models, angle-tuned extraordinary index, group velocity.
//! * [`quadrature`] – adaptive Gauss–Legendre integration and sign-change root scanning.
//! * [`geometry`] – wavevectors, mismatch, the Gaussian-pump phase-matching function.
//! * [`contour`] – energy/momentum closure and the frequency–angle contour of mode 2.
//! * [`rates`] – couplings, prefactors, differential densities and detected fluxes.
//! * [`scenarios`] – named parameter sets and the figure/table runs built on them.

pub mod constants;
pub mod contour;
pub mod dispersion;
pub mod error;
pub mod geometry;
pub mod output;
pub mod par;
pub mod quadrature;
pub mod rates;
pub mod scenarios;

pub use constants::PhysicalConstants;
pub use error::{Error, Result};
