//! Coupling constants, rate prefactors, differential densities and integrated
//! emission rates of third-order down-conversion, spontaneous and seeded,
//! under broadband and narrowband detection.
//!
//! All rates are time averages: pulsed beams contribute their peak-intensity
//! rate times the duty cycle of the pump–seed overlap.
//!
//! The fully differential unseeded rate is
//! `dN = R F₁F₂F₃ |f̃(Δk)|² δ(Δω) d³k₁ d³k₂ d³k₃` with `F = ωv/n`, and the seeded
//! one `dN_s = R_s F₁F₂ |f̃_s(Δk)|² δ(Δω) d³k₁ d³k₂`. Broadband formulas replace
//! `|f̃|²` by `(2π)³ δ³(Δk)`; narrowband ones keep the Gaussian-beam form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::contour::{trace_contour, ContourTrace, Quantity, TraceGrid, Window};
use crate::dispersion::{CrystalConfig, Polarization, UniaxialIndex};
use crate::error::{Error, Result};
use crate::geometry::{combined_waist, interaction_volume, mode_to_wavevector, pm_intensity, BeamConfig, ModeSpec, WaveVector};
use crate::par;
use crate::quadrature::{composite_gauss_legendre, sinc_sq_tail_at_lobe, uniform_breakpoints};

/// |γ⁽ⁿ⁾| or |γ_s⁽ⁿ⁾|, in the SI composite units the prefactors expect.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingGamma {
    pub order_n: u32,
    pub value: f64,
    pub seeded: bool,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn check_order(n: u32) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("process order {n} must be at least 2")));
    }
    Ok(())
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} = {v} must be finite and non-negative")));
    }
    Ok(())
}

/// `(n! χ⁽ⁿ⁾ / 2ⁿ) √(2 I_p ε₀ / (c n_p))`.
pub fn coupling_gamma(n: u32, chi_n: f64, pump_intensity: f64, n_p: f64, k: &PhysicalConstants) -> Result<CouplingGamma> {
    check_order(n)?;
    check_nonnegative("chi", chi_n)?;
    check_nonnegative("pump intensity", pump_intensity)?;
    if !(n_p > 0.0) {
        return Err(Error::InvalidInput(format!("pump index {n_p} must be positive")));
    }
    let value = factorial(n) * chi_n / 2f64.powi(n as i32) * (2.0 * pump_intensity * k.eps0 / (k.c * n_p)).sqrt();
    Ok(CouplingGamma { order_n: n, value, seeded: false })
}

/// `(n! χ⁽ⁿ⁾ / 2ⁿ) √(4 I_s I_p / (c² n_p n_s))`.
pub fn coupling_gamma_seeded(
    n: u32,
    chi_n: f64,
    pump_intensity: f64,
    seed_intensity: f64,
    n_p: f64,
    n_s: f64,
    k: &PhysicalConstants,
) -> Result<CouplingGamma> {
    check_order(n)?;
    check_nonnegative("chi", chi_n)?;
    check_nonnegative("pump intensity", pump_intensity)?;
    check_nonnegative("seed intensity", seed_intensity)?;
    if !(n_p > 0.0 && n_s > 0.0) {
        return Err(Error::InvalidInput("indices must be positive".into()));
    }
    let value = factorial(n) * chi_n / 2f64.powi(n as i32)
        * (4.0 * seed_intensity * pump_intensity / (k.c * k.c * n_p * n_s)).sqrt();
    Ok(CouplingGamma { order_n: n, value, seeded: true })
}

/// `R⁽³⁾ = ħ V γ² / (8 (2π)⁸ ε₀³ c³)`.
pub fn r3_prefactor(gamma3: &CouplingGamma, volume: f64, k: &PhysicalConstants) -> Result<f64> {
    if gamma3.seeded || gamma3.order_n != 3 {
        return Err(Error::MismatchedCoupling(format!(
            "R(3) needs an unseeded third-order coupling, got order {} seeded={}",
            gamma3.order_n, gamma3.seeded
        )));
    }
    check_nonnegative("volume", volume)?;
    Ok(k.hbar * volume * gamma3.value.powi(2) / (8.0 * (2.0 * PI).powi(8) * k.eps0.powi(3) * k.c.powi(3)))
}

/// `R_s⁽³⁾ = V_s γ_s² / (4 (2π)⁵ ε₀² c²)`.
pub fn rs3_prefactor(gamma_s: &CouplingGamma, volume_s: f64, k: &PhysicalConstants) -> Result<f64> {
    if !gamma_s.seeded || gamma_s.order_n != 3 {
        return Err(Error::MismatchedCoupling(format!(
            "R_s(3) needs a seeded third-order coupling, got order {} seeded={}",
            gamma_s.order_n, gamma_s.seeded
        )));
    }
    check_nonnegative("volume", volume_s)?;
    Ok(volume_s * gamma_s.value.powi(2) / (4.0 * (2.0 * PI).powi(5) * k.eps0.powi(2) * k.c.powi(2)))
}

/// A detector acceptance: frequency interval and signed in-plane angle range.
///
/// With the azimuthally symmetric model a band covers the solid angle
/// `π ∫ |sin θ| dθ` over `[theta_min, theta_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionBand {
    pub omega_center: f64,
    pub omega_halfwidth: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub efficiency_eta: f64,
}

impl DetectionBand {
    /// Band from a wavelength interval (m) and angle interval (rad).
    pub fn from_wavelengths(
        lambda_min: f64,
        lambda_max: f64,
        theta_min: f64,
        theta_max: f64,
        efficiency_eta: f64,
        k: &PhysicalConstants,
    ) -> Result<Self> {
        if !(lambda_min > 0.0 && lambda_min <= lambda_max) {
            return Err(Error::InvalidInput(format!(
                "wavelength interval [{lambda_min}, {lambda_max}] is empty"
            )));
        }
        let hi = k.omega_from_wavelength(lambda_min);
        let lo = k.omega_from_wavelength(lambda_max);
        let band = Self {
            omega_center: 0.5 * (lo + hi),
            omega_halfwidth: 0.5 * (hi - lo),
            theta_min,
            theta_max,
            efficiency_eta,
        };
        band.validate()?;
        Ok(band)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.omega_center > 0.0
            && self.omega_halfwidth >= 0.0
            && self.omega_halfwidth < self.omega_center
            && self.theta_min < self.theta_max
            && self.theta_min >= -PI
            && self.theta_max <= PI
            && (0.0..=1.0).contains(&self.efficiency_eta);
        if !ok {
            return Err(Error::InvalidInput(format!("invalid detection band {self:?}")));
        }
        Ok(())
    }

    pub fn omega_range(&self) -> (f64, f64) {
        (self.omega_center - self.omega_halfwidth, self.omega_center + self.omega_halfwidth)
    }

    pub fn contains_omega(&self, omega: f64) -> bool {
        (omega - self.omega_center).abs() <= self.omega_halfwidth
    }

    pub fn theta_center(&self) -> f64 {
        0.5 * (self.theta_min + self.theta_max)
    }

    /// `π ∫ |sin θ| dθ` over the angle range.
    pub fn solid_angle(&self) -> f64 {
        let prim = |t: f64| t.signum() * (1.0 - t.cos());
        PI * (prim(self.theta_max) - prim(self.theta_min))
    }

    /// Whether a unit direction lies in the band. Positive signed angles
    /// cover the half-space x ≥ 0 and negative ones the other half, which
    /// gives the band its solid angle `π ∫ |sin θ| dθ`.
    pub fn accepts(&self, d: &[f64; 3]) -> bool {
        let polar = d[2].clamp(-1.0, 1.0).acos();
        let signed = if d[0] >= 0.0 { polar } else { -polar };
        (self.theta_min..=self.theta_max).contains(&signed)
    }

    /// Mode at the band centre.
    pub fn center_mode(&self, pol: Polarization) -> ModeSpec {
        ModeSpec::in_plane(self.omega_center, self.theta_center(), pol)
    }

    /// k-space volume `π ∫∫ n²ω²/(c²v) |sin θ| dω dθ`; the index follows the
    /// direction across the band.
    pub fn k_volume(&self, crystal: &CrystalConfig, pol: Polarization, k: &PhysicalConstants) -> Result<f64> {
        if self.omega_halfwidth == 0.0 {
            return Ok(0.0);
        }
        let (lo, hi) = self.omega_range();
        let omegas = composite_gauss_legendre(&[lo, hi], 8);
        let mut total = 0.0;
        for (t, tw) in theta_nodes(self, 2, 8) {
            let mut radial = 0.0;
            for &(w, wt) in &omegas {
                radial += wt * k_jacobian(&ModeSpec::in_plane(w, t, pol), crystal, k)?;
            }
            total += tw * PI * t.sin().abs() * radial;
        }
        Ok(total)
    }

    fn mode1_windows(&self) -> [Window; 2] {
        let (lo, hi) = self.omega_range();
        [
            Window { quantity: Quantity::Theta1, lo: self.theta_min, hi: self.theta_max },
            Window { quantity: Quantity::Omega1, lo, hi },
        ]
    }
}

/// `n²ω²/(c² v)`: k-space volume per unit frequency and solid angle.
pub fn k_jacobian(mode: &ModeSpec, crystal: &CrystalConfig, k: &PhysicalConstants) -> Result<f64> {
    let n = mode.index(crystal, k)?;
    let v = mode.group_velocity(crystal, k)?;
    Ok(n * n * mode.omega * mode.omega / (k.c * k.c * v))
}

/// `ω v / n` of a mode.
pub fn mode_factor(mode: &ModeSpec, crystal: &CrystalConfig, k: &PhysicalConstants) -> Result<f64> {
    let n = mode.index(crystal, k)?;
    let v = mode.group_velocity(crystal, k)?;
    Ok(mode.omega * v / n)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Broadband,
    Narrowband,
}

/// Rates after detector efficiencies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectedRates {
    pub singles_hz: f64,
    pub doubles_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triples_hz: Option<f64>,
}

/// Emission rates into the detection bands. For seeded reports `doubles_hz`
/// is the pair rate and `triples_hz` is absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub regime: Regime,
    pub seeded: bool,
    pub singles_hz: f64,
    pub doubles_hz: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triples_hz: Option<f64>,
    /// Filled by [`RateReport::with_efficiencies`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detected: Option<DetectedRates>,
    /// True when integration over an unregistered mode was cut at the edge of
    /// the dispersion window.
    pub underestimate: bool,
    pub warnings: Vec<String>,
    pub parameters_echo: serde_json::Value,
    /// Detector efficiencies for singles, doubles and triples, in band order.
    #[serde(skip)]
    efficiencies: Vec<f64>,
}

impl RateReport {
    /// Adds detected rates: η of the singles detector for singles, the product
    /// over the registered detectors for coincidences. Stored rates are untouched.
    pub fn with_efficiencies(mut self) -> Self {
        let eta = &self.efficiencies;
        let singles = eta.first().copied().unwrap_or(1.0);
        let doubles = singles * eta.get(1).copied().unwrap_or(1.0);
        let triples = doubles * eta.get(2).copied().unwrap_or(1.0);
        self.detected = Some(DetectedRates {
            singles_hz: singles * self.singles_hz,
            doubles_hz: doubles * self.doubles_hz,
            triples_hz: self.triples_hz.map(|t| triples * t),
        });
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    BroadbandVacuum,
    NarrowbandVacuum,
    Seed,
    Atomic,
}

/// A squared effective field amplitude (V²/m²).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveField {
    pub kind: FieldKind,
    pub value_sq: f64,
}

/// Numerical resolution of the rate integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    /// Lattice for contours over the whole dispersion window.
    pub trace: TraceGrid,
    /// Lattice nodes (θ₂, ω₂) for contours restricted to one detection band.
    pub band_trace_nodes: (usize, usize),
    /// Gauss–Legendre panels and order across a band frequency range.
    pub band_omega_panels: usize,
    pub band_omega_order: usize,
    /// Panels on each side of θ = 0 and order across a band angle range.
    pub band_theta_panels: usize,
    pub band_theta_order: usize,
    /// Nodes per transverse axis of the phase-matching quadrature.
    pub pm_transverse_nodes: usize,
    /// Sinc² lobes integrated on each side; the rest is added analytically.
    pub pm_lobes: usize,
    pub pm_nodes_per_lobe: usize,
    /// Cap on nodes per axis when averaging a seeded density over a band.
    pub seeded_band_max_nodes: usize,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            trace: TraceGrid::default(),
            band_trace_nodes: (161, 161),
            band_omega_panels: 4,
            band_omega_order: 4,
            band_theta_panels: 2,
            band_theta_order: 3,
            pm_transverse_nodes: 24,
            pm_lobes: 30,
            pm_nodes_per_lobe: 4,
            seeded_band_max_nodes: 48,
        }
    }
}

/// Daughters of the type-I process carry the polarization orthogonal to the pump.
pub fn daughter_polarization(pump_pol: Polarization) -> Polarization {
    match pump_pol {
        Polarization::Ordinary => Polarization::Extraordinary,
        Polarization::Extraordinary => Polarization::Ordinary,
    }
}

/// Pump-derived quantities shared by every unseeded rate.
struct Unseeded<'a> {
    crystal: &'a CrystalConfig,
    k: &'a PhysicalConstants,
    pump_mode: ModeSpec,
    pol: Polarization,
    /// `R⁽³⁾` times the duty cycle.
    r_avg: f64,
    waist: f64,
}

impl<'a> Unseeded<'a> {
    fn new(pump: &BeamConfig, crystal: &'a CrystalConfig, k: &'a PhysicalConstants) -> Result<Self> {
        pump.validate()?;
        crystal.validate()?;
        let pump_mode = pump.axial_mode(k);
        let n_p = pump_mode.index(crystal, k)?;
        let gamma = coupling_gamma(3, crystal.chi3_eff, pump.peak_intensity(), n_p, k)?;
        let r = r3_prefactor(&gamma, interaction_volume(pump.waist, crystal.length), k)?;
        Ok(Self {
            crystal,
            k,
            pump_mode,
            pol: daughter_polarization(pump.pol),
            r_avg: r * pump.duty_cycle,
            waist: pump.waist,
        })
    }

    /// Factor turning a contour integral at fixed mode 3 into a density per k₃-volume.
    fn density_scale(&self, mode3: &ModeSpec) -> Result<f64> {
        let f3 = mode_factor(mode3, self.crystal, self.k)?;
        Ok((2.0 * PI).powi(3) * self.r_avg * f3 * PI / (self.k.c * self.k.c))
    }

    fn trace(&self, mode3: &ModeSpec, grid: &TraceGrid) -> Result<ContourTrace> {
        trace_contour(mode3, &self.pump_mode, self.crystal, grid, self.k)
    }
}

/// Singles emission density per unit k₃-volume at fixed mode 3 (s⁻¹ m³):
/// `(2π)³ R (ω₃v₃/n₃)(π/c²) ∫∫ ω₁ω₂³v₁n₂|sin θ₂|/n₁ δ(g) dθ₂ dω₂`, zero without a contour.
pub fn singles_density(mode3: &ModeSpec, pump: &BeamConfig, crystal: &CrystalConfig, k: &PhysicalConstants) -> Result<f64> {
    singles_density_with(mode3, pump, crystal, k, &TraceGrid::default())
}

pub fn singles_density_with(
    mode3: &ModeSpec,
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
    grid: &TraceGrid,
) -> Result<f64> {
    let u = Unseeded::new(pump, crystal, k)?;
    let trace = u.trace(mode3, grid)?;
    if trace.is_empty() {
        return Ok(0.0);
    }
    Ok(u.density_scale(mode3)? * trace.integral())
}

/// Gauss–Legendre nodes over a band's angle range, split at θ = 0 where |sin θ| has its kink.
fn theta_nodes(band: &DetectionBand, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (a, b) = (band.theta_min, band.theta_max);
    if a < 0.0 && b > 0.0 {
        let mut left = uniform_breakpoints(a, 0.0, panels);
        let right = uniform_breakpoints(0.0, b, panels);
        left.extend_from_slice(&right[1..]);
        composite_gauss_legendre(&left, order)
    } else {
        composite_gauss_legendre(&uniform_breakpoints(a, b, panels), order)
    }
}

/// Like [`theta_nodes`] with panels halving in width towards θ = 0, where
/// near-collinear contours collapse to small loops.
fn graded_theta_nodes(band: &DetectionBand, order: usize) -> Vec<(f64, f64)> {
    const LEVELS: i32 = 10;
    let side = |edge: f64| -> Vec<f64> { (0..=LEVELS).map(|j| edge * 0.5f64.powi(LEVELS - j)).collect() };
    let (a, b) = (band.theta_min, band.theta_max);
    let mut bp = Vec::new();
    if a < 0.0 && b > 0.0 {
        bp.push(a);
        bp.extend(side(a).into_iter().rev().skip(1));
        bp.push(0.0);
        bp.extend(side(b));
    } else if a >= 0.0 {
        bp.push(a);
        bp.extend(side(b).into_iter().filter(|&t| t > a));
    } else {
        bp.extend(side(a).into_iter().rev().filter(|&t| t < b));
        bp.push(b);
    }
    bp.dedup();
    composite_gauss_legendre(&bp, order)
}

/// θ₂ range spanned by a trace.
fn theta2_extent(trace: &ContourTrace) -> Option<(f64, f64)> {
    trace
        .segments
        .iter()
        .flat_map(|s| [s.a.theta2, s.b.theta2])
        .fold(None, |acc, t| match acc {
            None => Some((t, t)),
            Some((lo, hi)) => Some((f64::min(lo, t), f64::max(hi, t))),
        })
}

fn omega_nodes(lo: f64, hi: f64, opts: &RateOptions) -> Vec<(f64, f64)> {
    if !(lo < hi) {
        return Vec::new();
    }
    composite_gauss_legendre(&uniform_breakpoints(lo, hi, opts.band_omega_panels), opts.band_omega_order)
}

/// Contour lattice covering one band's θ₂ range and an ω₂ interval.
fn band_grid(band: &DetectionBand, omega: (f64, f64), opts: &RateOptions) -> TraceGrid {
    TraceGrid::window(
        (band.theta_min, band.theta_max),
        omega,
        opts.band_trace_nodes.0,
        opts.band_trace_nodes.1,
    )
}

fn intersect(a: (f64, f64), b: (f64, f64)) -> Option<(f64, f64)> {
    let lo = a.0.max(b.0);
    let hi = a.1.min(b.1);
    (lo < hi).then_some((lo, hi))
}

fn validate_bands(bands: &[DetectionBand]) -> Result<()> {
    bands.iter().try_for_each(DetectionBand::validate)
}

#[derive(Serialize)]
struct Echo<'a> {
    bands: &'a [DetectionBand],
    pump: &'a BeamConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<&'a BeamConfig>,
    crystal: &'a CrystalConfig,
    constants: &'a PhysicalConstants,
    options: &'a RateOptions,
}

fn echo(
    bands: &[DetectionBand],
    pump: &BeamConfig,
    seed: Option<&BeamConfig>,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
    opts: &RateOptions,
) -> serde_json::Value {
    serde_json::to_value(Echo { bands, pump, seed, crystal, constants: k, options: opts })
        .unwrap_or(serde_json::Value::Null)
}

/// Warns when a band's k-space extent is not well above the phase-matching width.
fn regime_warnings(
    bands: &[DetectionBand],
    waist: f64,
    crystal: &CrystalConfig,
    pol: Polarization,
    k: &PhysicalConstants,
    broadband: bool,
) -> Vec<String> {
    let mut out = Vec::new();
    for (i, b) in bands.iter().enumerate() {
        let m = b.center_mode(pol);
        let (Ok(n), Ok(v)) = (m.index(crystal, k), m.group_velocity(crystal, k)) else {
            continue;
        };
        let kmag = n * b.omega_center / k.c;
        let radial = 2.0 * b.omega_halfwidth / v;
        let transverse = kmag * (b.theta_max - b.theta_min);
        let pm_radial = 2.0 * PI / crystal.length;
        let pm_transverse = 4.0 / waist;
        let wide = radial > pm_radial && transverse > pm_transverse;
        let narrow = radial <= pm_radial && transverse <= pm_transverse;
        if broadband && !wide {
            out.push(format!("band {} is not wider than the phase-matching function", i + 1));
        }
        if !broadband && !narrow {
            out.push(format!(
                "band {} is wider than the phase-matching function; narrowband formulas evaluate it at its centre",
                i + 1
            ));
        }
    }
    out
}

/// Broadband fluxes into bands `[D₁, D₂, D₃]`: singles with mode 3 in D₃,
/// doubles with modes 2 and 3 in D₂ and D₃, triples with all three registered.
pub fn broadband_rates(
    bands: &[DetectionBand; 3],
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
) -> Result<RateReport> {
    broadband_rates_with(bands, pump, crystal, k, &RateOptions::default())
}

pub fn broadband_rates_with(
    bands: &[DetectionBand; 3],
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
    opts: &RateOptions,
) -> Result<RateReport> {
    validate_bands(bands)?;
    let u = Unseeded::new(pump, crystal, k)?;
    let [d1, d2, d3] = bands;
    let wp = u.pump_mode.omega;
    let (w3lo, w3hi) = d3.omega_range();
    let th3 = theta_nodes(d3, opts.band_theta_panels, opts.band_theta_order);

    let nodes = |wlo: f64, whi: f64| -> Vec<(ModeSpec, f64)> {
        omega_nodes(wlo, whi, opts)
            .into_iter()
            .flat_map(|(w, ww)| {
                th3.iter()
                    .map(move |&(t, wt)| (ModeSpec::in_plane(w, t, u.pol), ww * wt * PI * t.sin().abs()))
            })
            .collect()
    };

    // singles and doubles share the nodes across D₃
    let main = nodes(w3lo, w3hi);
    let parts = par::map(&main, |(m3, wt)| -> Result<(f64, f64, bool)> {
        let jac = wt * k_jacobian(m3, crystal, k)?;
        let scale = u.density_scale(m3)?;
        let full = u.trace(m3, &opts.trace)?;
        let doubles = match intersect(d2.omega_range(), (0.0, wp - m3.omega)) {
            Some(range) => u.trace(m3, &band_grid(d2, range, opts))?.integral(),
            None => 0.0,
        };
        Ok((jac * scale * full.integral(), jac * scale * doubles, full.truncated))
    });
    let mut singles = Vec::with_capacity(parts.len());
    let mut doubles = Vec::with_capacity(parts.len());
    let mut underestimate = false;
    for p in parts {
        let (s, d, t) = p?;
        singles.push(s);
        doubles.push(d);
        underestimate |= t;
    }

    // triples need ω₃ ≥ ω_p − max ω₁ − max ω₂ and ω₃ ≤ ω_p − min ω₁ − min ω₂
    let (w1lo, w1hi) = d1.omega_range();
    let (w2lo, w2hi) = d2.omega_range();
    let triples = match intersect((w3lo, w3hi), (wp - w1hi - w2hi, wp - w1lo - w2lo)) {
        Some((lo, hi)) => {
            let th3g = graded_theta_nodes(d3, opts.band_theta_order);
            let tri_nodes: Vec<(ModeSpec, f64)> = omega_nodes(lo, hi, opts)
                .into_iter()
                .flat_map(|(w, ww)| {
                    th3g.iter()
                        .map(move |&(t, wt)| (ModeSpec::in_plane(w, t, u.pol), ww * wt * PI * t.sin().abs()))
                })
                .collect();
            let windows = d1.mode1_windows();
            let parts = par::map(&tri_nodes, |(m3, wt)| -> Result<f64> {
                let Some(range) = intersect((w2lo, w2hi), (wp - m3.omega - w1hi, wp - m3.omega - w1lo)) else {
                    return Ok(0.0);
                };
                // the triple-coincidence contour is a small loop; locate it, then resolve it
                let scout_grid = TraceGrid::window((d2.theta_min, d2.theta_max), range, 2 * opts.band_trace_nodes.0, 41);
                let scout = u.trace(m3, &scout_grid)?;
                let Some((tlo, thi)) = theta2_extent(&scout) else {
                    return Ok(0.0);
                };
                let pad = 2.0 * (d2.theta_max - d2.theta_min) / (scout_grid.theta2_nodes - 1) as f64;
                let fine = TraceGrid::window(
                    ((tlo - pad).max(d2.theta_min), (thi + pad).min(d2.theta_max)),
                    range,
                    opts.band_trace_nodes.0,
                    opts.band_trace_nodes.1,
                );
                let trace = u.trace(m3, &fine)?;
                let jac = wt * k_jacobian(m3, crystal, k)?;
                Ok(jac * u.density_scale(m3)? * trace.integral_within(&windows))
            });
            par::ordered_sum(&parts.into_iter().collect::<Result<Vec<_>>>()?)
        }
        None => 0.0,
    };

    Ok(RateReport {
        regime: Regime::Broadband,
        seeded: false,
        singles_hz: par::ordered_sum(&singles),
        doubles_hz: par::ordered_sum(&doubles),
        triples_hz: Some(triples),
        detected: None,
        underestimate,
        warnings: regime_warnings(bands, u.waist, crystal, u.pol, k, true),
        parameters_echo: echo(bands, pump, None, crystal, k, opts),
        efficiencies: vec![d3.efficiency_eta, d2.efficiency_eta, d1.efficiency_eta],
    })
}

/// Frame around the pump axis for the unregistered-mode quadrature.
struct PmQuadrature {
    transverse: Vec<(f64, f64)>,
    longitudinal: Vec<(f64, f64)>,
    /// `∫ sinc²(q_z L/2) dq_z` beyond the last lobe, one side.
    tail: f64,
    qz_edge: f64,
}

impl PmQuadrature {
    fn new(waist: f64, length: f64, opts: &RateOptions) -> Self {
        let qt = 7.0 * 2f64.sqrt() / waist;
        let lobe = 2.0 * PI / length;
        let m = opts.pm_lobes.max(1);
        let qz_edge = m as f64 * lobe;
        let order = opts.pm_nodes_per_lobe.max(2);
        Self {
            transverse: composite_gauss_legendre(&uniform_breakpoints(-qt, qt, 4), opts.pm_transverse_nodes.div_ceil(4).max(2)),
            longitudinal: composite_gauss_legendre(&uniform_breakpoints(-qz_edge, qz_edge, 2 * m), order),
            tail: 2.0 / length * sinc_sq_tail_at_lobe(m),
            qz_edge,
        }
    }

    /// `∫ |f̃(q)|² h(K − q) d³q`, where `h` receives the mode-1 wavevector and returns
    /// the smooth part of the integrand (or `None` where it vanishes).
    fn integrate<H>(&self, kvec: &WaveVector, waist: f64, length: f64, h: H) -> f64
    where
        H: Fn(&WaveVector) -> Option<f64> + Sync,
    {
        let v = interaction_volume(waist, length);
        let rows = par::map(&self.transverse, |&(qx, wx)| {
            let mut row = 0.0;
            for &(qy, wy) in &self.transverse {
                let trans = (-(qx * qx + qy * qy) * waist * waist / 4.0).exp();
                let mut line = 0.0;
                for &(qz, wz) in &self.longitudinal {
                    let q = WaveVector::new(qx, qy, qz);
                    if let Some(val) = h(&(*kvec - q)) {
                        line += wz * pm_intensity(&q, waist, length) * val;
                    }
                }
                for qz in [-self.qz_edge, self.qz_edge] {
                    if let Some(val) = h(&(*kvec - WaveVector::new(qx, qy, qz))) {
                        line += v * trans * self.tail * val;
                    }
                }
                row += wx * wy * line;
            }
            row
        });
        par::ordered_sum(&rows)
    }
}

/// `∫ (ωv/n) |f̃(K − k)|² d³k` over the unregistered mode, with the frequency
/// of each node recovered from |k| on the dispersion surface.
fn unregistered_integral(
    kvec: &WaveVector,
    crystal: &CrystalConfig,
    pol: Polarization,
    waist: f64,
    k: &PhysicalConstants,
    opts: &RateOptions,
) -> f64 {
    let quad = PmQuadrature::new(waist, crystal.length, opts);
    let eval = UniaxialIndex::new(crystal, pol, k);
    let axis = crystal.optic_axis();
    quad.integrate(kvec, waist, crystal.length, |kv| {
        let mag = kv.norm();
        if !(mag > 0.0) {
            return None;
        }
        let c = (kv.kx * axis[0] + kv.ky * axis[1] + kv.kz * axis[2]) / mag;
        let w = eval.omega_for(mag, c * c, k.c, None)?;
        Some(w * eval.group_velocity(w, c * c, k.c) / eval.index(w, c * c))
    })
}

/// Narrowband vacuum field `⟨E²_nb⟩ = ħ/(2ε₀c(2π)³V) ∫ (ω₃v₃/n₃)|f̃(Δk)|² d³k₃`
/// with the two registered modes at `mode_centers`.
pub fn narrowband_vacuum_field(
    mode_centers: [&ModeSpec; 2],
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
) -> Result<EffectiveField> {
    narrowband_vacuum_field_with(mode_centers, pump, crystal, k, &RateOptions::default())
}

pub fn narrowband_vacuum_field_with(
    mode_centers: [&ModeSpec; 2],
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
    opts: &RateOptions,
) -> Result<EffectiveField> {
    pump.validate()?;
    let kp = mode_to_wavevector(&pump.axial_mode(k), crystal, k)?;
    let kvec = kp - mode_to_wavevector(mode_centers[0], crystal, k)? - mode_to_wavevector(mode_centers[1], crystal, k)?;
    let pol = daughter_polarization(pump.pol);
    let integral = unregistered_integral(&kvec, crystal, pol, pump.waist, k, opts);
    let v = interaction_volume(pump.waist, crystal.length);
    Ok(EffectiveField {
        kind: FieldKind::NarrowbandVacuum,
        value_sq: k.hbar / (2.0 * k.eps0 * k.c * (2.0 * PI).powi(3) * v) * integral,
    })
}

fn check_on_shell(bands: &[DetectionBand], pump_omega: f64) -> Result<()> {
    let residual = pump_omega - bands.iter().map(|b| b.omega_center).sum::<f64>();
    let tolerance = bands
        .iter()
        .map(|b| b.omega_halfwidth)
        .fold(f64::INFINITY, f64::min)
        .max(1e-9 * pump_omega);
    if residual.abs() > tolerance {
        return Err(Error::BandsOffShell { residual, tolerance });
    }
    Ok(())
}

/// Narrowband fluxes into bands `[D₁, D₂, D₃]` centred on `k₀₁, k₀₂, k₀₃`.
///
/// Registered modes sit at their band centres, except that mode 3 is swept
/// across D₃'s frequency range along its centre direction. The unregistered
/// mode 1 takes the remaining energy and is integrated over its shell.
///
/// - singles: `vol(D₃)` times the singles density at `k₀₃`
/// - doubles: `vol(D₂) ΔΩ₃ R F₂ ∫_{D₃} dω₃ J₃F₃ ∫ dΩ₁ (n₁ω₁³/c²) |f̃|²`
/// - triples: the same with mode 1 restricted to D₁
///
/// For bands narrower than the phase-matching function this is the centre
/// evaluation, with the energy delta taken up by D₃'s frequency width in the
/// triples. For wide bands it tends to the broadband result.
pub fn narrowband_rates(
    bands: &[DetectionBand; 3],
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
) -> Result<RateReport> {
    narrowband_rates_with(bands, pump, crystal, k, &RateOptions::default())
}

pub fn narrowband_rates_with(
    bands: &[DetectionBand; 3],
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
    opts: &RateOptions,
) -> Result<RateReport> {
    validate_bands(bands)?;
    let u = Unseeded::new(pump, crystal, k)?;
    let [d1, d2, d3] = bands;
    check_on_shell(bands.as_slice(), u.pump_mode.omega)?;
    let m2 = d2.center_mode(u.pol);
    let m3 = d3.center_mode(u.pol);

    let vol3 = d3.k_volume(crystal, u.pol, k)?;
    let trace = u.trace(&m3, &opts.trace)?;
    let singles = vol3 * u.density_scale(&m3)? * trace.integral();

    let wp = u.pump_mode.omega;
    let kp = mode_to_wavevector(&u.pump_mode, crystal, k)?;
    let k2v = mode_to_wavevector(&m2, crystal, k)?;
    let eval = UniaxialIndex::new(crystal, u.pol, k);
    let pre = d2.k_volume(crystal, u.pol, k)? * d3.solid_angle() * u.r_avg * mode_factor(&m2, crystal, k)?;
    let centre_k3 = mode_to_wavevector(&m3, crystal, k)?;
    let width = line_pm_width(&(kp - k2v - centre_k3), &m3, wp - m2.omega - m3.omega, &eval, crystal, k)?;

    // mode 3 swept across D₃'s frequency range along its centre direction;
    // mode 1 takes the remaining energy and is integrated over its shell
    let line = |range: Option<(f64, f64)>, band1: Option<&DetectionBand>| -> Result<f64> {
        let Some((lo, hi)) = range else {
            return Ok(0.0);
        };
        let count = ((8.0 * (hi - lo) / width).ceil() as usize).clamp(8, 512);
        let nodes = composite_gauss_legendre(&uniform_breakpoints(lo, hi, count.div_ceil(4)), 4);
        let parts = par::map(&nodes, |&(w3, wt)| -> Result<f64> {
            let w1 = wp - m2.omega - w3;
            if !(w1 > 0.0 && eval.contains(w1)) {
                return Ok(0.0);
            }
            let m3w = ModeSpec::in_plane(w3, d3.theta_center(), u.pol);
            let kvec = kp - k2v - mode_to_wavevector(&m3w, crystal, k)?;
            let f = k_jacobian(&m3w, crystal, k)? * mode_factor(&m3w, crystal, k)?;
            Ok(wt * f * shell_integral(&kvec, w1, &eval, crystal, u.waist, k, band1))
        });
        Ok(par::ordered_sum(&parts.into_iter().collect::<Result<Vec<_>>>()?))
    };
    let (w1lo, w1hi) = d1.omega_range();
    let doubles = pre * line((d3.omega_halfwidth > 0.0).then(|| d3.omega_range()), None)?;
    let triples = pre * line(intersect(d3.omega_range(), (wp - m2.omega - w1hi, wp - m2.omega - w1lo)), Some(d1))?;

    Ok(RateReport {
        regime: Regime::Narrowband,
        seeded: false,
        singles_hz: singles,
        doubles_hz: doubles,
        triples_hz: Some(triples),
        detected: None,
        underestimate: trace.truncated,
        warnings: regime_warnings(bands, u.waist, crystal, u.pol, k, false),
        parameters_echo: echo(bands, pump, None, crystal, k, opts),
        efficiencies: vec![d3.efficiency_eta, d2.efficiency_eta, d1.efficiency_eta],
    })
}

/// Frequency scale over which a shell integral changes as mode 3 is swept:
/// one sinc² lobe of the longitudinal mismatch, `2π / (L |1/v₃ − cos α / v₁|)`.
fn line_pm_width(
    kvec: &WaveVector,
    m3: &ModeSpec,
    omega1: f64,
    eval: &UniaxialIndex,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
) -> Result<f64> {
    let v3 = m3.group_velocity(crystal, k)?;
    let mag = kvec.norm();
    let d3 = m3.direction();
    let cos_a = if mag > 0.0 { (kvec.kx * d3[0] + kvec.ky * d3[1] + kvec.kz * d3[2]) / mag } else { 1.0 };
    let v1 = if eval.contains(omega1) && mag > 0.0 {
        let axis = crystal.optic_axis();
        let c = (kvec.kx * axis[0] + kvec.ky * axis[1] + kvec.kz * axis[2]) / mag;
        eval.group_velocity(omega1, c * c, k.c)
    } else {
        v3
    };
    let g = (1.0 / v3 - cos_a / v1).abs().max(1e-6 / v3);
    Ok(2.0 * PI / (crystal.length * g))
}

/// Seed-derived quantities shared by every seeded rate.
struct Seeded<'a> {
    crystal: &'a CrystalConfig,
    k: &'a PhysicalConstants,
    pump_mode: ModeSpec,
    seed_mode: ModeSpec,
    pol: Polarization,
    /// `R_s⁽³⁾` times the overlap duty cycle.
    rs_avg: f64,
    /// Waist of the pump–seed overlap.
    waist: f64,
}

impl<'a> Seeded<'a> {
    fn new(seed: &BeamConfig, pump: &BeamConfig, crystal: &'a CrystalConfig, k: &'a PhysicalConstants) -> Result<Self> {
        pump.validate()?;
        seed.validate()?;
        crystal.validate()?;
        let pump_mode = pump.axial_mode(k);
        let seed_mode = seed.axial_mode(k);
        let n_p = pump_mode.index(crystal, k)?;
        let n_s = seed_mode.index(crystal, k)?;
        let gamma = coupling_gamma_seeded(3, crystal.chi3_eff, pump.peak_intensity(), seed.peak_intensity(), n_p, n_s, k)?;
        let waist = combined_waist(pump.waist, seed.waist);
        let rs = rs3_prefactor(&gamma, interaction_volume(waist, crystal.length), k)?;
        Ok(Self {
            crystal,
            k,
            pump_mode,
            seed_mode,
            pol: daughter_polarization(pump.pol),
            rs_avg: rs * pump.duty_cycle.min(seed.duty_cycle),
            waist,
        })
    }

    /// `(2π)³ R_s (π/c²)`: turns a contour integral with the seed as the fixed mode into a rate.
    fn contour_scale(&self) -> f64 {
        (2.0 * PI).powi(3) * self.rs_avg * PI / (self.k.c * self.k.c)
    }

    /// Density per k₂-volume, mode 1 optionally restricted to a band.
    fn pair_density(&self, mode2: &ModeSpec, band1: Option<&DetectionBand>) -> Result<f64> {
        let w1 = self.pump_mode.omega - self.seed_mode.omega - mode2.omega;
        let eval = UniaxialIndex::new(self.crystal, self.pol, self.k);
        if !(w1 > 0.0 && eval.contains(w1)) {
            return Ok(0.0);
        }
        if band1.is_some_and(|b| !b.contains_omega(w1)) {
            return Ok(0.0);
        }
        let kp = mode_to_wavevector(&self.pump_mode, self.crystal, self.k)?;
        let kvec = kp - mode_to_wavevector(&self.seed_mode, self.crystal, self.k)? - mode_to_wavevector(mode2, self.crystal, self.k)?;
        let f2 = mode_factor(mode2, self.crystal, self.k)?;
        let shell = shell_integral(&kvec, w1, &eval, self.crystal, self.waist, self.k, band1);
        Ok(self.rs_avg * f2 * shell)
    }
}

/// `∫ (n₁ω₁³/c²) |f̃(K − k₁(Ω) Ω̂)|² w(θ) dΩ` on the shell of frequency ω₁, where
/// `w` is the angular acceptance of `band` (1 without one).
///
/// Unrestricted, the integral runs in gnomonic coordinates around the direction
/// of K. With a band it runs in polar and azimuthal angle, over the band's
/// polar range cut to the phase-matched spot, so narrow bands are resolved.
fn shell_integral(
    kvec: &WaveVector,
    omega1: f64,
    eval: &UniaxialIndex,
    crystal: &CrystalConfig,
    waist: f64,
    k: &PhysicalConstants,
    band: Option<&DetectionBand>,
) -> f64 {
    let mag = kvec.norm();
    if !(mag > 0.0) {
        return 0.0;
    }
    let axis = crystal.optic_axis();
    let u = [kvec.kx / mag, kvec.ky / mag, kvec.kz / mag];
    let cross = [u[1], -u[0], 0.0];
    let cn = cross[0].hypot(cross[1]);
    let e2 = if cn > 1e-12 { [cross[0] / cn, cross[1] / cn, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = [
        e2[1] * u[2] - e2[2] * u[1],
        e2[2] * u[0] - e2[0] * u[2],
        e2[0] * u[1] - e2[1] * u[0],
    ];
    let k1_at = |d: &[f64; 3]| {
        let c = d[0] * axis[0] + d[1] * axis[1] + d[2] * axis[2];
        eval.index(omega1, c * c) * omega1 / k.c
    };
    // integrand per unit solid angle along unit direction d
    let value = |d: &[f64; 3]| {
        let k1 = k1_at(d);
        let q = WaveVector::new(kvec.kx - k1 * d[0], kvec.ky - k1 * d[1], kvec.kz - k1 * d[2]);
        let n1 = k1 * k.c / omega1;
        n1 * omega1.powi(3) / (k.c * k.c) * pm_intensity(&q, waist, crystal.length)
    };
    let k1u = k1_at(&u);

    // centre of the transverse Gaussian in (a, b)
    let dk = mag - k1u;
    let (m11, m12, m21, m22) = (k1u * e1[0], k1u * e2[0], k1u * e1[1], k1u * e2[1]);
    let det = m11 * m22 - m12 * m21;
    let (mut a0, mut b0) = (0.0, 0.0);
    if det.abs() > 1e-12 * k1u * k1u {
        let (rx, ry) = (dk * u[0], dk * u[1]);
        a0 = ((rx * m22 - ry * m12) / det).clamp(-0.2, 0.2);
        b0 = ((m11 * ry - m21 * rx) / det).clamp(-0.2, 0.2);
    }
    let sigma = 2f64.sqrt() / (waist * k1u);
    let tilt = e1[0].hypot(e1[1]).max(0.2);
    let half_a = 7.0 * sigma / tilt;
    let half_b = 7.0 * sigma;
    // sinc² lobes per radian of tilt towards e1
    let lobe_density = k1u * e1[2].abs() * crystal.length / (2.0 * PI);
    let nodes_for = |extent: f64| ((8.0 * extent * lobe_density).ceil() as usize + 24).min(800);

    let Some(band) = band else {
        let na = nodes_for(2.0 * half_a);
        let a_nodes = composite_gauss_legendre(&uniform_breakpoints(a0 - half_a, a0 + half_a, na.div_ceil(8)), 8);
        let b_nodes = composite_gauss_legendre(&uniform_breakpoints(b0 - half_b, b0 + half_b, 3), 8);
        let mut total = 0.0;
        for &(a, wa) in &a_nodes {
            for &(b, wb) in &b_nodes {
                let norm2 = 1.0 + a * a + b * b;
                let inv = norm2.sqrt().recip();
                let d = [
                    (u[0] + a * e1[0] + b * e2[0]) * inv,
                    (u[1] + a * e1[1] + b * e2[1]) * inv,
                    (u[2] + a * e1[2] + b * e2[2]) * inv,
                ];
                total += wa * wb * inv * inv * inv * value(&d);
            }
        }
        return total;
    };

    // polar support of the band, cut to the spot around the centre direction
    let (plo, phi) = if band.theta_min < 0.0 && band.theta_max > 0.0 {
        (0.0, band.theta_max.max(-band.theta_min))
    } else if band.theta_min >= 0.0 {
        (band.theta_min, band.theta_max)
    } else {
        (-band.theta_max, -band.theta_min)
    };
    let centre = {
        let n = (1.0 + a0 * a0 + b0 * b0).sqrt();
        [(u[0] + a0 * e1[0] + b0 * e2[0]) / n, (u[1] + a0 * e1[1] + b0 * e2[1]) / n, (u[2] + a0 * e1[2] + b0 * e2[2]) / n]
    };
    let pol_c = centre[2].clamp(-1.0, 1.0).acos();
    let reach = half_a.max(half_b);
    let lo = plo.max(pol_c - reach);
    let hi = phi.min(pol_c + reach);
    if !(lo < hi) {
        return 0.0;
    }
    let az_c = centre[1].atan2(centre[0]);
    let az_half = if pol_c - reach <= 0.0 { PI } else { (1.5 * reach / (pol_c - reach).sin()).min(PI) };
    let np = nodes_for(hi - lo);
    let p_nodes = composite_gauss_legendre(&uniform_breakpoints(lo, hi, np.div_ceil(8)), 8);
    let az_nodes = composite_gauss_legendre(&uniform_breakpoints(az_c - az_half, az_c + az_half, 4), 8);
    let mut total = 0.0;
    for &(p, wp) in &p_nodes {
        let (sp, cp) = p.sin_cos();
        for &(az, wz) in &az_nodes {
            let d = [sp * az.cos(), sp * az.sin(), cp];
            if band.accepts(&d) {
                total += wp * wz * sp * value(&d);
            }
        }
    }
    total
}

/// Seeded pair density per unit k₂-volume (s⁻¹ m³) with mode 1 on the energy shell:
/// `R_s (ω₂v₂/n₂) ∫ (n₁ω₁³/c²) |f̃_s(k_p − k_s − k₂ − k₁)|² dΩ₁`.
pub fn seeded_pair_density(
    mode2: &ModeSpec,
    seed: &BeamConfig,
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
) -> Result<f64> {
    Seeded::new(seed, pump, crystal, k)?.pair_density(mode2, None)
}

pub fn seeded_pair_density_with(
    mode2: &ModeSpec,
    seed: &BeamConfig,
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
    band1: Option<&DetectionBand>,
) -> Result<f64> {
    Seeded::new(seed, pump, crystal, k)?.pair_density(mode2, band1)
}

/// Broadband seeded fluxes into `[D₁, D₂]`: singles with mode 2 in D₂, pairs
/// with mode 1 also in D₁. Obtained from the contour with the seed as the fixed mode.
pub fn seeded_broadband_rates(
    bands: &[DetectionBand; 2],
    seed: &BeamConfig,
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
) -> Result<RateReport> {
    seeded_broadband_rates_with(bands, seed, pump, crystal, k, &RateOptions::default())
}

pub fn seeded_broadband_rates_with(
    bands: &[DetectionBand; 2],
    seed: &BeamConfig,
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
    opts: &RateOptions,
) -> Result<RateReport> {
    validate_bands(bands)?;
    let s = Seeded::new(seed, pump, crystal, k)?;
    let [d1, d2] = bands;
    let wp = s.pump_mode.omega;
    let mut seed_mode = s.seed_mode;
    seed_mode.pol = s.pol;
    let (singles, pairs, truncated) = match intersect(d2.omega_range(), (0.0, wp - seed_mode.omega)) {
        Some(range) => {
            let trace = trace_contour(&seed_mode, &s.pump_mode, crystal, &band_grid(d2, range, opts), k)?;
            let scale = s.contour_scale();
            (scale * trace.integral(), scale * trace.integral_within(&d1.mode1_windows()), trace.truncated)
        }
        None => (0.0, 0.0, false),
    };
    Ok(RateReport {
        regime: Regime::Broadband,
        seeded: true,
        singles_hz: singles,
        doubles_hz: pairs,
        triples_hz: None,
        detected: None,
        underestimate: truncated,
        warnings: regime_warnings(bands, s.waist, crystal, s.pol, k, true),
        parameters_echo: echo(bands, pump, Some(seed), crystal, k, opts),
        efficiencies: vec![d2.efficiency_eta, d1.efficiency_eta],
    })
}

/// Seeded singles rate with mode 2 inside each cell (s⁻¹), from the contour
/// traced on `grid` with the seed as the fixed mode. Cells use only their
/// frequency and angle ranges; efficiencies are ignored.
pub fn seeded_cell_rates(
    cells: &[DetectionBand],
    seed: &BeamConfig,
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    grid: &TraceGrid,
    k: &PhysicalConstants,
) -> Result<Vec<f64>> {
    let s = Seeded::new(seed, pump, crystal, k)?;
    let mut seed_mode = s.seed_mode;
    seed_mode.pol = s.pol;
    let trace = trace_contour(&seed_mode, &s.pump_mode, crystal, grid, k)?;
    let scale = s.contour_scale();
    Ok(par::map(cells, |c| {
        let (lo, hi) = c.omega_range();
        let windows = [
            Window { quantity: Quantity::Theta2, lo: c.theta_min, hi: c.theta_max },
            Window { quantity: Quantity::Omega2, lo, hi },
        ];
        scale * trace.integral_within(&windows)
    }))
}

/// Narrowband seeded fluxes into `[D₁, D₂]`: the pair density averaged over
/// D₂, with mode 1 unrestricted for singles and restricted to D₁ for pairs.
pub fn seeded_narrowband_rates(
    bands: &[DetectionBand; 2],
    seed: &BeamConfig,
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
) -> Result<RateReport> {
    seeded_narrowband_rates_with(bands, seed, pump, crystal, k, &RateOptions::default())
}

pub fn seeded_narrowband_rates_with(
    bands: &[DetectionBand; 2],
    seed: &BeamConfig,
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
    opts: &RateOptions,
) -> Result<RateReport> {
    validate_bands(bands)?;
    let s = Seeded::new(seed, pump, crystal, k)?;
    let [d1, d2] = bands;
    let mut with_seed = bands.to_vec();
    with_seed.push(DetectionBand {
        omega_center: s.seed_mode.omega,
        omega_halfwidth: f64::INFINITY,
        theta_min: -PI,
        theta_max: PI,
        efficiency_eta: 1.0,
    });
    check_on_shell(&[*d1, *d2, with_seed[2]], s.pump_mode.omega).map_err(|e| match e {
        Error::BandsOffShell { residual, .. } => Error::BandsOffShell {
            residual,
            tolerance: d1.omega_halfwidth.min(d2.omega_halfwidth).max(1e-9 * s.pump_mode.omega),
        },
        other => other,
    })?;

    let nodes = seeded_band_nodes(d2, &s, opts)?;
    let parts = par::map(&nodes, |(m2, wt)| -> Result<(f64, f64)> {
        let jac = wt * k_jacobian(m2, crystal, k)?;
        let single = s.pair_density(m2, None)?;
        let pair = s.pair_density(m2, Some(d1))?;
        Ok((jac * single, jac * pair))
    });
    let mut singles = Vec::with_capacity(parts.len());
    let mut pairs = Vec::with_capacity(parts.len());
    for p in parts {
        let (a, b) = p?;
        singles.push(a);
        pairs.push(b);
    }
    Ok(RateReport {
        regime: Regime::Narrowband,
        seeded: true,
        singles_hz: par::ordered_sum(&singles),
        doubles_hz: par::ordered_sum(&pairs),
        triples_hz: None,
        detected: None,
        underestimate: false,
        warnings: regime_warnings(bands, s.waist, crystal, s.pol, k, false),
        parameters_echo: echo(bands, pump, Some(seed), crystal, k, opts),
        efficiencies: vec![d2.efficiency_eta, d1.efficiency_eta],
    })
}

/// Quadrature nodes over D₂ (mode-2 frequency and angle), dense enough to
/// resolve the phase-matching width, with `π|sin θ|` folded into the weights.
fn seeded_band_nodes(band: &DetectionBand, s: &Seeded<'_>, opts: &RateOptions) -> Result<Vec<(ModeSpec, f64)>> {
    if band.omega_halfwidth == 0.0 {
        return Ok(Vec::new());
    }
    let centre = band.center_mode(s.pol);
    let v = centre.group_velocity(s.crystal, s.k)?;
    let kmag = centre.index(s.crystal, s.k)? * centre.omega / s.k.c;
    let pm_omega = v * 2.0 * PI / s.crystal.length;
    let pm_theta = 2.0 * 2f64.sqrt() / (s.waist * kmag);
    let cap = opts.seeded_band_max_nodes.max(4);
    let count = |extent: f64, width: f64| ((6.0 * extent / width).ceil() as usize).clamp(4, cap);
    let nw = count(2.0 * band.omega_halfwidth, pm_omega);
    let nt = count(band.theta_max - band.theta_min, pm_theta);
    let (lo, hi) = band.omega_range();
    let ws = composite_gauss_legendre(&uniform_breakpoints(lo, hi, nw.div_ceil(4)), 4);
    let ts = theta_nodes(band, nt.div_ceil(8).max(1), 4);
    Ok(ws
        .iter()
        .flat_map(|&(w, ww)| {
            ts.iter()
                .map(move |&(t, wt)| (ModeSpec::in_plane(w, t, s.pol), ww * wt * PI * t.sin().abs()))
        })
        .collect())
}

/// `|E_s|² = 2 I_s / (ε₀ n_s c)` at the seed's peak intensity.
pub fn seed_field_sq(seed: &BeamConfig, crystal: &CrystalConfig, k: &PhysicalConstants) -> Result<EffectiveField> {
    seed.validate()?;
    let n_s = seed.axial_mode(k).index(crystal, k)?;
    Ok(EffectiveField {
        kind: FieldKind::Seed,
        value_sq: 2.0 * seed.peak_intensity() / (k.eps0 * n_s * k.c),
    })
}

/// Broadband vacuum field from the ratio of spontaneous doubles to seeded pairs
/// in the same two bands: `⟨E²_bb⟩ = |E_s|² N₂ / N_s,2`.
pub fn broadband_vacuum_field(
    bands: &[DetectionBand; 3],
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    seed_reference: &BeamConfig,
    k: &PhysicalConstants,
) -> Result<EffectiveField> {
    broadband_vacuum_field_with(bands, pump, crystal, seed_reference, k, &RateOptions::default())
}

pub fn broadband_vacuum_field_with(
    bands: &[DetectionBand; 3],
    pump: &BeamConfig,
    crystal: &CrystalConfig,
    seed_reference: &BeamConfig,
    k: &PhysicalConstants,
    opts: &RateOptions,
) -> Result<EffectiveField> {
    let spontaneous = broadband_rates_with(bands, pump, crystal, k, opts)?;
    let seeded = seeded_broadband_rates_with(&[bands[2], bands[1]], seed_reference, pump, crystal, k, opts)?;
    let es = seed_field_sq(seed_reference, crystal, k)?;
    if !(seeded.doubles_hz > 0.0) {
        return Err(Error::InvalidInput("seeded pair rate vanishes in these bands".into()));
    }
    Ok(EffectiveField {
        kind: FieldKind::BroadbandVacuum,
        value_sq: es.value_sq * spontaneous.doubles_hz / seeded.doubles_hz,
    })
}

/// `n²/(32π³) · ⟨E²⟩ / E_a²`.
pub fn order_reduction_ratio(field: &EffectiveField, atomic_field: f64, n: u32) -> Result<f64> {
    check_order(n)?;
    if !(atomic_field > 0.0 && atomic_field.is_finite()) {
        return Err(Error::InvalidInput(format!("atomic field {atomic_field} must be positive")));
    }
    let nf = f64::from(n);
    Ok(nf * nf / (32.0 * PI.powi(3)) * field.value_sq / (atomic_field * atomic_field))
}
