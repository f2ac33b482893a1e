//! Physical constants as plain data.
//!
//! Rate functions take a `&PhysicalConstants` argument instead of reading
//! globals, so rescaling ħ is an ordinary function call.

use serde::{Deserialize, Serialize};

/// SI values of ħ, ε₀ and c.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Reduced Planck constant (J·s).
    pub hbar: f64,
    /// Vacuum permittivity (F/m).
    pub eps0: f64,
    /// Speed of light in vacuum (m/s).
    pub c: f64,
}

/// CODATA 2018 reduced Planck constant.
pub const HBAR: f64 = 1.054_571_817e-34;
/// CODATA 2018 vacuum permittivity.
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Exact speed of light.
pub const C: f64 = 2.997_924_58e8;

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: HBAR,
            eps0: EPS0,
            c: C,
        }
    }
}

/// CODATA defaults.
pub fn default_constants() -> PhysicalConstants {
    PhysicalConstants::default()
}

impl PhysicalConstants {
    /// Returns a copy with ħ multiplied by `factor`.
    pub fn with_hbar_scaled(self, factor: f64) -> Self {
        Self {
            hbar: self.hbar * factor,
            ..self
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.hbar, self.eps0, self.c]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }

    /// Angular frequency of vacuum wavelength `lambda` (m).
    pub fn omega_from_wavelength(&self, lambda: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.c / lambda
    }

    /// Vacuum wavelength (m) of angular frequency `omega`.
    pub fn wavelength_from_omega(&self, omega: f64) -> f64 {
        2.0 * std::f64::consts::PI * self.c / omega
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codata_defaults() {
        let k = default_constants();
        assert_eq!(k.c, 2.997_924_58e8);
        assert!((k.hbar / 1.054_571_817e-34 - 1.0).abs() < 1e-9);
        assert!((k.eps0 / 8.854_187_812_8e-12 - 1.0).abs() < 1e-9);
        assert!(k.is_valid());
    }

    #[test]
    fn hbar_rescale_leaves_others() {
        let k = default_constants().with_hbar_scaled(2.0);
        assert_eq!(k.hbar, 2.0 * HBAR);
        assert_eq!(k.c, C);
        assert_eq!(k.eps0, EPS0);
    }

    #[test]
    fn wavelength_round_trip() {
        let k = default_constants();
        let w = k.omega_from_wavelength(532e-9);
        assert!((k.wavelength_from_omega(w) / 532e-9 - 1.0).abs() < 1e-15);
    }
}
