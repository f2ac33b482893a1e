//! Refractive index models for a uniaxial crystal.
//!
//! The shipped default is rutile (TiO₂) using DeVore's one-pole Sellmeier
//! fit (J. R. DeVore, J. Opt. Soc. Am. 41, 416 (1951)):
//!
//! ```text
//! n_o² = 5.913 + 0.2441 / (λ² − 0.0803)
//! n_e² = 7.197 + 0.3322 / (λ² − 0.0843)      (λ in µm)
//! ```
//!
//! Any other coefficient set can be supplied through [`DispersionModel::new`].

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Functional form of a dispersion model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionForm {
    /// `n² = A + B / (λ² − C)` with λ in µm; coefficients `[A, B, C]`.
    SellmeierOnePole,
    /// `n = n₀`; coefficients `[n₀]`.
    Constant,
}

/// A dispersion law with its wavelength validity window (metres).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    pub form: DispersionForm,
    pub coefficients: Vec<f64>,
    pub valid_range: (f64, f64),
}

/// Lower edge of the shipped rutile window (m).
pub const RUTILE_MIN_WAVELENGTH: f64 = 0.43e-6;
/// Upper edge of the shipped rutile window (m).
pub const RUTILE_MAX_WAVELENGTH: f64 = 5.0e-6;

impl DispersionModel {
    pub fn new(form: DispersionForm, coefficients: Vec<f64>, valid_range: (f64, f64)) -> Result<Self> {
        let expected = match form {
            DispersionForm::SellmeierOnePole => 3,
            DispersionForm::Constant => 1,
        };
        if coefficients.len() != expected {
            return Err(Error::InvalidInput(format!(
                "{form:?} needs {expected} coefficients, got {}",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite dispersion coefficient".into()));
        }
        let (lo, hi) = valid_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "bad validity range [{lo:e}, {hi:e}] m"
            )));
        }
        let model = Self {
            form,
            coefficients,
            valid_range,
        };
        // n must be real and above one across the window; sampling catches a pole inside it.
        for i in 0..=64 {
            let lambda = lo + (hi - lo) * i as f64 / 64.0;
            let n = model.raw_index(lambda);
            if !(n.is_finite() && n > 1.0) {
                return Err(Error::InvalidInput(format!(
                    "index {n} at {:.1} nm is not a real value above one",
                    lambda * 1e9
                )));
            }
        }
        Ok(model)
    }

    pub fn constant(n: f64) -> Result<Self> {
        Self::new(DispersionForm::Constant, vec![n], (1e-9, 1.0))
    }

    pub fn rutile_ordinary() -> Self {
        Self {
            form: DispersionForm::SellmeierOnePole,
            coefficients: vec![5.913, 0.2441, 0.0803],
            valid_range: (RUTILE_MIN_WAVELENGTH, RUTILE_MAX_WAVELENGTH),
        }
    }

    pub fn rutile_extraordinary() -> Self {
        Self {
            form: DispersionForm::SellmeierOnePole,
            coefficients: vec![7.197, 0.3322, 0.0843],
            valid_range: (RUTILE_MIN_WAVELENGTH, RUTILE_MAX_WAVELENGTH),
        }
    }

    fn raw_index(&self, lambda: f64) -> f64 {
        match self.form {
            DispersionForm::Constant => self.coefficients[0],
            DispersionForm::SellmeierOnePole => {
                let l_um = lambda * 1e6;
                let (a, b, c) = (self.coefficients[0], self.coefficients[1], self.coefficients[2]);
                (a + b / (l_um * l_um - c)).sqrt()
            }
        }
    }

    pub fn contains_wavelength(&self, lambda: f64) -> bool {
        lambda >= self.valid_range.0 && lambda <= self.valid_range.1
    }

    /// Index at vacuum wavelength `lambda` (m).
    pub fn index_at_wavelength(&self, lambda: f64) -> Result<f64> {
        if !self.contains_wavelength(lambda) {
            return Err(Error::OutOfValidityRange {
                wavelength_nm: lambda * 1e9,
                min_nm: self.valid_range.0 * 1e9,
                max_nm: self.valid_range.1 * 1e9,
            });
        }
        Ok(self.raw_index(lambda))
    }

    /// Index at angular frequency `omega`.
    pub fn index(&self, omega: f64, k: &PhysicalConstants) -> Result<f64> {
        self.index_at_wavelength(k.wavelength_from_omega(omega))
    }

    /// Angular-frequency window `(min, max)` equivalent to the wavelength window.
    pub fn omega_window(&self, k: &PhysicalConstants) -> (f64, f64) {
        (
            k.omega_from_wavelength(self.valid_range.1),
            k.omega_from_wavelength(self.valid_range.0),
        )
    }
}

/// Index of the ordinary or extraordinary wave.
pub fn index(model: &DispersionModel, omega: f64, k: &PhysicalConstants) -> Result<f64> {
    model.index(omega, k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    Ordinary,
    Extraordinary,
}

/// Crystal slab: length, optic-axis orientation and the effective χ⁽³⁾.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrystalConfig {
    /// Length along the pump (m).
    pub length: f64,
    /// Angle between optic axis and pump propagation (rad). The axis lies in the x–z plane.
    pub orientation: f64,
    /// Effective third-order susceptibility (m²/V²).
    pub chi3_eff: f64,
    pub disp_o: DispersionModel,
    pub disp_e: DispersionModel,
}

impl CrystalConfig {
    /// 5 mm rutile, χ⁽³⁾ = 2.1e−20 m²/V², at the given orientation (rad).
    pub fn rutile(orientation: f64) -> Self {
        Self {
            length: 5e-3,
            orientation,
            chi3_eff: 2.1e-20,
            disp_o: DispersionModel::rutile_ordinary(),
            disp_e: DispersionModel::rutile_extraordinary(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidInput(format!("crystal length {} must be positive", self.length)));
        }
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.orientation) {
            return Err(Error::InvalidInput(format!(
                "orientation {} rad outside [0, π/2]",
                self.orientation
            )));
        }
        if !(self.chi3_eff > 0.0 && self.chi3_eff.is_finite()) {
            return Err(Error::InvalidInput("chi3_eff must be positive".into()));
        }
        Ok(())
    }

    pub fn with_orientation(&self, orientation: f64) -> Self {
        Self {
            orientation,
            ..self.clone()
        }
    }

    /// Unit vector of the optic axis.
    pub fn optic_axis(&self) -> [f64; 3] {
        [self.orientation.sin(), 0.0, self.orientation.cos()]
    }

    /// Frequency window on which `pol` can be evaluated.
    pub fn omega_window(&self, pol: Polarization, k: &PhysicalConstants) -> (f64, f64) {
        let (o_lo, o_hi) = self.disp_o.omega_window(k);
        match pol {
            Polarization::Ordinary => (o_lo, o_hi),
            Polarization::Extraordinary => {
                let (e_lo, e_hi) = self.disp_e.omega_window(k);
                (o_lo.max(e_lo), o_hi.min(e_hi))
            }
        }
    }
}

/// Index seen by a wave of polarization `pol` travelling at `angle_to_axis` from the optic axis.
pub fn effective_index(
    crystal: &CrystalConfig,
    pol: Polarization,
    angle_to_axis: f64,
    omega: f64,
    k: &PhysicalConstants,
) -> Result<f64> {
    let n_o = crystal.disp_o.index(omega, k)?;
    match pol {
        Polarization::Ordinary => Ok(n_o),
        Polarization::Extraordinary => {
            let n_e = crystal.disp_e.index(omega, k)?;
            let (s, c) = angle_to_axis.sin_cos();
            Ok((c * c / (n_o * n_o) + s * s / (n_e * n_e)).sqrt().recip())
        }
    }
}

/// Relative step of the central difference used for dn/dω.
pub const GROUP_VELOCITY_REL_STEP: f64 = 1e-6;

/// Group velocity `c / (n + ω dn/dω)`.
pub fn group_velocity(
    crystal: &CrystalConfig,
    pol: Polarization,
    angle_to_axis: f64,
    omega: f64,
    k: &PhysicalConstants,
) -> Result<f64> {
    group_velocity_with_step(crystal, pol, angle_to_axis, omega, GROUP_VELOCITY_REL_STEP, k)
}

pub fn group_velocity_with_step(
    crystal: &CrystalConfig,
    pol: Polarization,
    angle_to_axis: f64,
    omega: f64,
    rel_step: f64,
    k: &PhysicalConstants,
) -> Result<f64> {
    let h = omega * rel_step;
    let n = effective_index(crystal, pol, angle_to_axis, omega, k)?;
    let n_plus = effective_index(crystal, pol, angle_to_axis, omega + h, k)?;
    let n_minus = effective_index(crystal, pol, angle_to_axis, omega - h, k)?;
    let dn = (n_plus - n_minus) / (2.0 * h);
    Ok(k.c / (n + omega * dn))
}

/// Unchecked evaluator of the angle-tuned index for one polarization.
///
/// Intended for inner loops: the caller guarantees ω lies inside
/// [`UniaxialIndex::omega_window`]. The angle enters as cos² of the angle to the optic axis.
#[derive(Clone, Debug)]
pub struct UniaxialIndex {
    o: PreparedModel,
    e: PreparedModel,
    pol: Polarization,
    window: (f64, f64),
}

#[derive(Clone, Copy, Debug)]
enum PreparedModel {
    Constant(f64),
    // n² = a + b / (s/ω² − c), s = (2πc·1e6)²
    OnePole { a: f64, b: f64, c: f64, s: f64 },
}

impl PreparedModel {
    fn new(model: &DispersionModel, k: &PhysicalConstants) -> Self {
        match model.form {
            DispersionForm::Constant => Self::Constant(model.coefficients[0]),
            DispersionForm::SellmeierOnePole => {
                let s = (2.0 * std::f64::consts::PI * k.c * 1e6).powi(2);
                Self::OnePole {
                    a: model.coefficients[0],
                    b: model.coefficients[1],
                    c: model.coefficients[2],
                    s,
                }
            }
        }
    }

    #[inline]
    fn inv_n2(&self, omega: f64) -> f64 {
        match *self {
            Self::Constant(n) => 1.0 / (n * n),
            Self::OnePole { a, b, c, s } => 1.0 / (a + b / (s / (omega * omega) - c)),
        }
    }
}

impl UniaxialIndex {
    pub fn new(crystal: &CrystalConfig, pol: Polarization, k: &PhysicalConstants) -> Self {
        Self {
            o: PreparedModel::new(&crystal.disp_o, k),
            e: PreparedModel::new(&crystal.disp_e, k),
            pol,
            window: crystal.omega_window(pol, k),
        }
    }

    pub fn omega_window(&self) -> (f64, f64) {
        self.window
    }

    #[inline]
    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.window.0 && omega <= self.window.1
    }

    /// Index at ω for a wave whose direction makes an angle ψ with the axis, `cos2 = cos²ψ`.
    #[inline]
    pub fn index(&self, omega: f64, cos2: f64) -> f64 {
        let inv_o = self.o.inv_n2(omega);
        match self.pol {
            Polarization::Ordinary => inv_o.sqrt().recip(),
            Polarization::Extraordinary => {
                let inv_e = self.e.inv_n2(omega);
                (cos2 * inv_o + (1.0 - cos2) * inv_e).sqrt().recip()
            }
        }
    }

    /// Group velocity `c / (n + ω dn/dω)` by the same central difference as [`group_velocity`].
    pub fn group_velocity(&self, omega: f64, cos2: f64, c: f64) -> f64 {
        let h = omega * GROUP_VELOCITY_REL_STEP;
        let dn = (self.index(omega + h, cos2) - self.index(omega - h, cos2)) / (2.0 * h);
        c / (self.index(omega, cos2) + omega * dn)
    }

    /// Frequency at which `n(ω) ω / c = kmag`, or `None` outside the window.
    pub fn omega_for(&self, kmag: f64, cos2: f64, c: f64, guess: Option<f64>) -> Option<f64> {
        let (lo, hi) = self.window;
        crate::contour::secant_closure(|w| self.index(w, cos2) * w / c - kmag, lo, hi, kmag, c, guess)
    }
}
