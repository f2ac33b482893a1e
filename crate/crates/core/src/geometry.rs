//! Wavevectors, phase mismatch and the phase-matching function of a Gaussian
//! pump in a crystal slab that is infinite transversally.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::dispersion::{effective_index, CrystalConfig, Polarization};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d_panels, integrate_nd, sinc, sinc_sq_tail_at_lobe, QuadratureSpec};

/// One optical mode. `theta` is measured from the pump direction (z) and
/// `phi` from the x axis, which lies in the plane containing the optic axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub omega: f64,
    pub theta: f64,
    pub phi: f64,
    pub pol: Polarization,
}

impl ModeSpec {
    pub fn new(omega: f64, theta: f64, phi: f64, pol: Polarization) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidInput(format!("mode frequency {omega} must be positive")));
        }
        if !(0.0..=PI).contains(&theta) || !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::InvalidInput(format!(
                "mode angles theta={theta}, phi={phi} out of range"
            )));
        }
        Ok(Self { omega, theta, phi, pol })
    }

    /// Mode in the x–z principal plane. Negative `signed_theta` maps to φ = π.
    pub fn in_plane(omega: f64, signed_theta: f64, pol: Polarization) -> Self {
        let phi = if signed_theta < 0.0 { PI } else { 0.0 };
        Self {
            omega,
            theta: signed_theta.abs(),
            phi,
            pol,
        }
    }

    /// Pump-like mode travelling along z.
    pub fn axial(omega: f64, pol: Polarization) -> Self {
        Self::in_plane(omega, 0.0, pol)
    }

    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Polar angle with sign: positive for φ = 0 half-plane, negative for φ = π.
    pub fn signed_theta(&self) -> f64 {
        if (self.phi - PI).abs() < 1e-12 {
            -self.theta
        } else {
            self.theta
        }
    }

    pub fn angle_to_axis(&self, crystal: &CrystalConfig) -> f64 {
        angle_between(self.direction(), crystal.optic_axis())
    }

    pub fn index(&self, crystal: &CrystalConfig, k: &PhysicalConstants) -> Result<f64> {
        effective_index(crystal, self.pol, self.angle_to_axis(crystal), self.omega, k)
    }

    pub fn group_velocity(&self, crystal: &CrystalConfig, k: &PhysicalConstants) -> Result<f64> {
        crate::dispersion::group_velocity(crystal, self.pol, self.angle_to_axis(crystal), self.omega, k)
    }
}

pub(crate) fn angle_between(a: [f64; 3], b: [f64; 3]) -> f64 {
    let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (na * nb);
    dot.clamp(-1.0, 1.0).acos()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WaveVector {
    pub kx: f64,
    pub ky: f64,
    pub kz: f64,
}

impl WaveVector {
    pub const ZERO: Self = Self { kx: 0.0, ky: 0.0, kz: 0.0 };

    pub fn new(kx: f64, ky: f64, kz: f64) -> Self {
        Self { kx, ky, kz }
    }

    pub fn norm(&self) -> f64 {
        (self.kx * self.kx + self.ky * self.ky + self.kz * self.kz).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.kx, self.ky, self.kz]
    }

    pub fn is_finite(&self) -> bool {
        self.kx.is_finite() && self.ky.is_finite() && self.kz.is_finite()
    }
}

impl Add for WaveVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.kx + o.kx, self.ky + o.ky, self.kz + o.kz)
    }
}

impl Sub for WaveVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.kx - o.kx, self.ky - o.ky, self.kz - o.kz)
    }
}

impl Neg for WaveVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.kx, -self.ky, -self.kz)
    }
}

impl Mul<f64> for WaveVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.kx * s, self.ky * s, self.kz * s)
    }
}

/// `k = n_eff ω / c` along the mode direction.
pub fn mode_to_wavevector(mode: &ModeSpec, crystal: &CrystalConfig, k: &PhysicalConstants) -> Result<WaveVector> {
    let n = mode.index(crystal, k)?;
    let d = mode.direction();
    let mag = n * mode.omega / k.c;
    Ok(WaveVector::new(mag * d[0], mag * d[1], mag * d[2]))
}

/// Wavevector and energy mismatch `k_p − Σ k_i`, `ω_p − Σ ω_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub dk: WaveVector,
    pub domega: f64,
}

pub fn mismatch(pump: &ModeSpec, daughters: &[ModeSpec], crystal: &CrystalConfig, k: &PhysicalConstants) -> Result<Mismatch> {
    let mut dk = mode_to_wavevector(pump, crystal, k)?;
    let mut domega = pump.omega;
    for d in daughters {
        dk = dk - mode_to_wavevector(d, crystal, k)?;
        domega -= d.omega;
    }
    Ok(Mismatch { dk, domega })
}

/// Gaussian beam: vacuum wavelength, average power, waist radius, duty cycle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub wavelength: f64,
    pub avg_power: f64,
    pub waist: f64,
    /// 1 for continuous wave.
    pub duty_cycle: f64,
    pub pol: Polarization,
}

impl BeamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.wavelength > 0.0
            && self.avg_power >= 0.0
            && self.waist > 0.0
            && self.duty_cycle > 0.0
            && self.duty_cycle <= 1.0;
        if !ok {
            return Err(Error::InvalidInput(format!("invalid beam {self:?}")));
        }
        Ok(())
    }

    /// Peak intensity `P / (D π w₀²)` (W/m²).
    pub fn peak_intensity(&self) -> f64 {
        self.avg_power / (self.duty_cycle * PI * self.waist * self.waist)
    }

    pub fn omega(&self, k: &PhysicalConstants) -> f64 {
        k.omega_from_wavelength(self.wavelength)
    }

    /// Mode along the pump axis at the beam frequency.
    pub fn axial_mode(&self, k: &PhysicalConstants) -> ModeSpec {
        ModeSpec::axial(self.omega(k), self.pol)
    }

    /// Warning text when the Rayleigh range is not well above ten crystal lengths.
    pub fn rayleigh_warning(&self, length: f64) -> Option<String> {
        let z_r = PI * self.waist * self.waist / self.wavelength;
        (z_r < 10.0 * length).then(|| {
            format!(
                "Rayleigh length {:.3} mm is below 10× crystal length {:.3} mm; the plane-wave phase-matching model degrades",
                z_r * 1e3,
                length * 1e3
            )
        })
    }
}

/// Interaction volume `π w₀² L`.
pub fn interaction_volume(waist: f64, length: f64) -> f64 {
    PI * waist * waist * length
}

/// `|f̃(Δk)|² = V exp(−(Δk_x² + Δk_y²) w₀²/4) sinc²(Δk_z L/2)` in m³.
pub fn pm_intensity(dk: &WaveVector, waist: f64, length: f64) -> f64 {
    let v = interaction_volume(waist, length);
    v * transverse_factor(dk, waist) * sinc(0.5 * dk.kz * length).powi(2)
}

fn transverse_factor(dk: &WaveVector, waist: f64) -> f64 {
    (-(dk.kx * dk.kx + dk.ky * dk.ky) * waist * waist / 4.0).exp()
}

/// Combined waist of the pump–seed overlap, `1/w² = 1/w_p² + 1/w_s²`.
pub fn combined_waist(pump_waist: f64, seed_waist: f64) -> f64 {
    if seed_waist.is_infinite() {
        return pump_waist;
    }
    (1.0 / (pump_waist * pump_waist) + 1.0 / (seed_waist * seed_waist))
        .sqrt()
        .recip()
}

/// Seeded phase-matching intensity: [`pm_intensity`] at the combined waist.
pub fn seeded_pm_intensity(dk: &WaveVector, pump_waist: f64, seed_waist: f64, length: f64) -> f64 {
    pm_intensity(dk, combined_waist(pump_waist, seed_waist), length)
}

/// Lobes of the longitudinal sinc² integrated numerically on each side.
const NORM_LOBES: usize = 40;

/// `∫ |f̃(Δk)|² d³Δk`, which equals (2π)³ for every waist and length.
///
/// The integrand is separable, so the transverse plane (±14/w₀) and the
/// longitudinal axis are integrated independently and multiplied. The
/// longitudinal axis is taken lobe by lobe out to ±40 zeros, with the
/// remaining sinc² tail added from its asymptotic series.
pub fn pm_norm_integral(waist: f64, length: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(waist > 0.0 && length > 0.0) {
        return Err(Error::InvalidInput("waist and length must be positive".into()));
    }
    let kt = 14.0 / waist;
    let lobe = 2.0 * PI / length;
    let breaks: Vec<f64> = (0..=2 * NORM_LOBES)
        .map(|i| (i as f64 - NORM_LOBES as f64) * lobe)
        .collect();
    let tail = 2.0 * sinc_sq_tail_at_lobe(NORM_LOBES) * 2.0 / length;
    let along = integrate_1d_panels(|kz| sinc(0.5 * kz * length).powi(2), &breaks, spec)?.value + tail;
    let across = integrate_nd(
        |p| transverse_factor(&WaveVector::new(p[0], p[1], 0.0), waist),
        &[(-kt, kt), (-kt, kt)],
        spec,
    )?
    .value;
    Ok(interaction_volume(waist, length) * across * along)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::default_constants;
    use crate::dispersion::DispersionModel;

    fn toy(n: f64) -> CrystalConfig {
        CrystalConfig {
            length: 5e-3,
            orientation: 1.0,
            chi3_eff: 1e-20,
            disp_o: DispersionModel::constant(n).unwrap(),
            disp_e: DispersionModel::constant(n).unwrap(),
        }
    }

    #[test]
    fn collinear_wavevector() {
        let k = default_constants();
        let m = ModeSpec::axial(k.c * 1e7, Polarization::Extraordinary);
        let w = mode_to_wavevector(&m, &toy(2.0), &k).unwrap();
        assert_eq!((w.kx, w.ky), (0.0, 0.0));
        assert!((w.kz / 2e7 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transverse_wavevector() {
        let k = default_constants();
        let m = ModeSpec::new(k.c * 1e7, PI / 2.0, 0.0, Polarization::Ordinary).unwrap();
        let w = mode_to_wavevector(&m, &toy(1.5), &k).unwrap();
        assert!((w.kx / 1.5e7 - 1.0).abs() < 1e-15 && w.ky.abs() < 1e-8 && w.kz.abs() < 1e-8);
    }

    // Oracle: n from the Sellmeier ellipse at ψ = θc − θ, times ω/c, resolved by trigonometry.
    #[test]
    fn rutile_tilted_wavevector() {
        let k = default_constants();
        let crystal = CrystalConfig::rutile(68.24f64.to_radians());
        let lam: f64 = 1596e-9;
        let th = 5f64.to_radians();
        let m = ModeSpec::in_plane(k.omega_from_wavelength(lam), th, Polarization::Extraordinary);
        let w = mode_to_wavevector(&m, &crystal, &k).unwrap();
        let l = lam * 1e6;
        let no2 = 5.913 + 0.2441 / (l * l - 0.0803);
        let ne2 = 7.197 + 0.3322 / (l * l - 0.0843);
        let psi = 68.24f64.to_radians() - th;
        let n = (psi.cos().powi(2) / no2 + psi.sin().powi(2) / ne2).powf(-0.5);
        let mag = n * 2.0 * PI / lam;
        assert!((w.kx / (mag * th.sin()) - 1.0).abs() < 1e-12);
        assert!((w.kz / (mag * th.cos()) - 1.0).abs() < 1e-12);
        assert_eq!(w.ky, 0.0);
    }

    #[test]
    fn negative_in_plane_angle_is_phi_pi() {
        let m = ModeSpec::in_plane(1.0, -0.2, Polarization::Ordinary);
        assert_eq!(m.phi, PI);
        assert_eq!(m.signed_theta(), -0.2);
        let d = m.direction();
        assert!((d[0] + 0.2f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn mode_validation() {
        assert!(ModeSpec::new(-1.0, 0.0, 0.0, Polarization::Ordinary).is_err());
        assert!(ModeSpec::new(1.0, 4.0, 0.0, Polarization::Ordinary).is_err());
        assert!(ModeSpec::new(1.0, 1.0, 7.0, Polarization::Ordinary).is_err());
    }

    #[test]
    fn symmetric_degenerate_mismatch_vanishes() {
        let k = default_constants();
        let c = toy(2.2);
        let wp = 3e15;
        let pump = ModeSpec::axial(wp, Polarization::Ordinary);
        let d = ModeSpec::axial(wp / 3.0, Polarization::Extraordinary);
        let m = mismatch(&pump, &[d, d, d], &c, &k).unwrap();
        assert!(m.dk.norm() < 1e-9 * mode_to_wavevector(&pump, &c, &k).unwrap().norm());
        assert!(m.domega.abs() < 1e-3);
    }

    #[test]
    fn two_daughter_energy_deficit() {
        let k = default_constants();
        let c = toy(2.2);
        let pump = ModeSpec::axial(3e15, Polarization::Ordinary);
        let a = ModeSpec::axial(1.0e15, Polarization::Extraordinary);
        let b = ModeSpec::axial(1.2e15, Polarization::Extraordinary);
        let m = mismatch(&pump, &[a, b], &c, &k).unwrap();
        assert_eq!(m.domega, 3e15 - 1.0e15 - 1.2e15);
        assert!(m.domega > 0.0);
    }

    #[test]
    fn rutile_orientation_improves_collinear_mismatch() {
        let k = default_constants();
        let pump = ModeSpec::axial(k.omega_from_wavelength(532e-9), Polarization::Ordinary);
        let d = ModeSpec::axial(k.omega_from_wavelength(1596e-9), Polarization::Extraordinary);
        let at = |deg: f64| {
            mismatch(&pump, &[d, d, d], &CrystalConfig::rutile(deg.to_radians()), &k)
                .unwrap()
                .dk
                .norm()
        };
        assert!(at(68.24) < at(60.0));
    }

    #[test]
    fn mismatch_antisymmetric_under_swap() {
        let k = default_constants();
        let c = CrystalConfig::rutile(1.1);
        let a = ModeSpec::axial(k.omega_from_wavelength(800e-9), Polarization::Ordinary);
        let b = ModeSpec::in_plane(k.omega_from_wavelength(1600e-9), 0.1, Polarization::Extraordinary);
        let m1 = mismatch(&a, &[b], &c, &k).unwrap();
        let m2 = mismatch(&b, &[a], &c, &k).unwrap();
        assert_eq!(m1.dk, -m2.dk);
        assert_eq!(m1.domega, -m2.domega);
    }

    #[test]
    fn pm_intensity_peak_and_zero() {
        let (w0, l) = (100e-6, 5e-3);
        let v = pm_intensity(&WaveVector::ZERO, w0, l);
        assert!((v - 1.570_796_326_794_896_6e-10).abs() < 1e-22);
        let z = pm_intensity(&WaveVector::new(0.0, 0.0, 2.0 * PI / l), w0, l);
        assert!(z / v < 1e-30);
    }

    // 1.39156 solves sin(x)/x = 1/√2.
    #[test]
    fn pm_intensity_half_maximum() {
        let (w0, l) = (100e-6, 5e-3);
        let x = crate::quadrature::find_roots(|x| sinc(x).powi(2) - 0.5, 0.5, 2.5, &Default::default())[0];
        assert!((x - 1.39156).abs() < 1e-5);
        let v = interaction_volume(w0, l);
        let r = pm_intensity(&WaveVector::new(0.0, 0.0, 2.0 * 1.39156 / l), w0, l) / v;
        assert!((r - 0.5).abs() < 1e-4);
    }

    #[test]
    fn norm_integral_is_eight_pi_cubed() {
        let spec = QuadratureSpec::default().with_rel_tol(1e-8);
        let target = 8.0 * PI.powi(3);
        for (w0, l) in [(100e-6, 5e-3), (200e-6, 5e-3), (100e-6, 2.5e-3)] {
            let r = pm_norm_integral(w0, l, &spec).unwrap();
            assert!((r / target - 1.0).abs() < 1e-4, "{w0} {l}: {r}");
        }
    }

    #[test]
    fn seeded_waist_limits() {
        let (w, l) = (100e-6, 5e-3);
        let dk = WaveVector::new(3e3, -1e3, 200.0);
        assert_eq!(seeded_pm_intensity(&dk, w, f64::INFINITY, l), pm_intensity(&dk, w, l));
        let weff = combined_waist(w, w);
        assert!((weff - w / 2f64.sqrt()).abs() < 1e-18);
        let vs = seeded_pm_intensity(&WaveVector::ZERO, w, w, l);
        assert!((vs / (PI * w * w * l / 2.0) - 1.0).abs() < 1e-14);
        // very wide seed approaches the pump-only function
        let wide = seeded_pm_intensity(&dk, w, 1e3, l);
        assert!((wide / pm_intensity(&dk, w, l) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peak_intensity_matches_quoted_values() {
        let seed = BeamConfig {
            wavelength: 1620e-9,
            avg_power: 10e-3,
            waist: 100e-6,
            duty_cycle: 2e-8,
            pol: Polarization::Extraordinary,
        };
        assert!((seed.peak_intensity() / 1.6e13 - 1.0).abs() < 0.01);
        let cw = BeamConfig { avg_power: 0.1, duty_cycle: 1.0, ..seed.clone() };
        assert!((cw.peak_intensity() - 0.1 / (PI * 1e-8)).abs() < 1e-6);
        assert!((cw.peak_intensity() / 3.18e6 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rayleigh_warning_thresholds() {
        let b = BeamConfig {
            wavelength: 532e-9,
            avg_power: 0.1,
            waist: 100e-6,
            duty_cycle: 1.0,
            pol: Polarization::Ordinary,
        };
        // z_R ≈ 59 mm
        assert!(b.rayleigh_warning(5e-3).is_none());
        assert!(b.rayleigh_warning(10e-3).is_some());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pm_intensity_even_and_bounded(kx in -1e5..1e5f64, ky in -1e5..1e5f64, kz in -1e4..1e4f64) {
                let (w0, l) = (100e-6, 5e-3);
                let v = interaction_volume(w0, l);
                let base = pm_intensity(&WaveVector::new(kx, ky, kz), w0, l);
                prop_assert!(base >= 0.0 && base <= v);
                prop_assert_eq!(base, pm_intensity(&WaveVector::new(-kx, ky, kz), w0, l));
                prop_assert_eq!(base, pm_intensity(&WaveVector::new(kx, -ky, kz), w0, l));
                prop_assert_eq!(base, pm_intensity(&WaveVector::new(kx, ky, -kz), w0, l));
            }
        }
    }
}
