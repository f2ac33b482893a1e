//! Named parameter sets and the figure/table runs built on them.
//!
//! A [`ScenarioConfig`] carries everything in SI units. The defaults
//! reproduce the rutile set-up: 532 nm pump at 100 mW, 5 mm crystal at
//! 68.24°, a 1620 nm seed at 10 mW for the seeded runs, and the broadband
//! and narrowband detector sets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::contour::{orientation_scan, solve_contour, ContourResult, OrientationScan, TraceGrid};
use crate::dispersion::{CrystalConfig, Polarization};
use crate::error::{Error, Result};
use crate::geometry::{BeamConfig, ModeSpec};
use crate::par;
use crate::quadrature::RootSpec;
use crate::rates::{
    broadband_rates_with, daughter_polarization, k_jacobian, narrowband_rates_with, seeded_broadband_rates_with,
    seeded_cell_rates, seeded_narrowband_rates_with, singles_density_with, DetectionBand, RateOptions, RateReport,
};

/// Evenly spaced axis, inclusive of both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let ok = self.min.is_finite()
            && self.max.is_finite()
            && self.count >= 1
            && (self.count == 1 || self.min < self.max);
        if !ok {
            return Err(Error::ConfigInvalid(format!("grid `{name}` must be strictly increasing: {self:?}")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 })
            .collect()
    }
}

/// Seed beam plus the pump duty cycle and orientation used while seeding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedConfig {
    pub beam: BeamConfig,
    pub pump_duty_cycle: f64,
    /// Crystal orientation for seeded runs (rad).
    pub orientation: f64,
}

/// Detector sets, each ordered `[D₁, D₂, D₃]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSet {
    pub broadband: [DetectionBand; 3],
    pub narrowband: [DetectionBand; 3],
}

/// Sampling grids in SI units (m, rad).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    /// Fixed mode 3 of the contour run.
    pub contour_lambda3: f64,
    pub contour_theta3: f64,
    pub contour_theta2: Axis,
    pub orientation: Axis,
    pub spectrum_lambda: Axis,
    pub spectrum_theta: Axis,
    /// Contour lattice (θ₂ × ω₂ nodes) used per spectrum cell.
    pub spectrum_trace_nodes: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub pump: BeamConfig,
    pub seed: Option<SeedConfig>,
    pub crystal: CrystalConfig,
    pub bands: BandSet,
    pub grids: Grids,
    #[serde(default)]
    pub constants: PhysicalConstants,
    #[serde(default)]
    pub options: RateOptions,
}

/// Unseeded orientation.
pub const DEFAULT_ORIENTATION_DEG: f64 = 68.24;
/// Seeded orientation.
pub const DEFAULT_SEEDED_ORIENTATION_DEG: f64 = 68.5;

fn nm(x: f64) -> f64 {
    x * 1e-9
}

/// Narrowband D₁ recentred so that the three band centres conserve energy.
pub fn closure_band(d2: &DetectionBand, d3: &DetectionBand, template: &DetectionBand, pump_omega: f64) -> DetectionBand {
    DetectionBand {
        omega_center: pump_omega - d2.omega_center - d3.omega_center,
        ..*template
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let k = PhysicalConstants::default();
        let pump = BeamConfig {
            wavelength: nm(532.0),
            avg_power: 0.1,
            waist: 100e-6,
            duty_cycle: 1.0,
            pol: Polarization::Ordinary,
        };
        let wide = 10f64.to_radians();
        let narrow = 0.25f64.to_radians();
        let bb = DetectionBand::from_wavelengths(nm(1200.0), nm(1600.0), -wide, wide, 0.15, &k)
            .expect("static band");
        let nb = DetectionBand::from_wavelengths(nm(1579.0), nm(1589.0), -narrow, narrow, 0.8, &k)
            .expect("static band");
        let lambda1 = 1.0 / (1.0 / nm(532.0) - 2.0 / nm(1584.0));
        let nb1 = DetectionBand::from_wavelengths(lambda1 - nm(5.0), lambda1 + nm(5.0), -narrow, narrow, 0.8, &k)
            .expect("static band");
        let nb1 = closure_band(&nb, &nb, &nb1, pump.omega(&k));
        Self {
            name: "rutile".into(),
            seed: Some(SeedConfig {
                beam: BeamConfig {
                    wavelength: nm(1620.0),
                    avg_power: 0.01,
                    waist: 100e-6,
                    duty_cycle: 2e-8,
                    pol: Polarization::Extraordinary,
                },
                pump_duty_cycle: 2e-8,
                orientation: DEFAULT_SEEDED_ORIENTATION_DEG.to_radians(),
            }),
            pump,
            crystal: CrystalConfig::rutile(DEFAULT_ORIENTATION_DEG.to_radians()),
            bands: BandSet {
                broadband: [bb, bb, bb],
                narrowband: [nb1, nb, nb],
            },
            grids: Grids {
                contour_lambda3: nm(1596.0),
                contour_theta3: 0.0,
                contour_theta2: Axis::new(-30f64.to_radians(), 30f64.to_radians(), 3001),
                orientation: Axis::new(60f64.to_radians(), 75f64.to_radians(), 121),
                spectrum_lambda: Axis::new(nm(1000.0), nm(2000.0), 81),
                spectrum_theta: Axis::new(-20f64.to_radians(), 20f64.to_radians(), 41),
                spectrum_trace_nodes: (161, 201),
            },
            constants: k,
            options: RateOptions::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| match e {
            Error::InvalidInput(m) => Error::ConfigInvalid(m),
            other => other,
        };
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::ConfigInvalid(format!("scenario name `{}` is not a valid file stem", self.name)));
        }
        if !self.constants.is_valid() {
            return Err(Error::ConfigInvalid("physical constants must be positive".into()));
        }
        self.pump.validate().map_err(wrap)?;
        self.crystal.validate().map_err(wrap)?;
        if let Some(s) = &self.seed {
            s.beam.validate().map_err(wrap)?;
            if !(s.pump_duty_cycle > 0.0 && s.pump_duty_cycle <= 1.0) {
                return Err(Error::ConfigInvalid(format!("seeded pump duty cycle {} outside (0, 1]", s.pump_duty_cycle)));
            }
            if !(0.0..=PI / 2.0).contains(&s.orientation) {
                return Err(Error::ConfigInvalid("seeded orientation outside [0°, 90°]".into()));
            }
        }
        for b in self.bands.broadband.iter().chain(&self.bands.narrowband) {
            b.validate().map_err(wrap)?;
        }
        let g = &self.grids;
        g.contour_theta2.validate("contour_theta2")?;
        g.orientation.validate("orientation")?;
        g.spectrum_lambda.validate("spectrum_lambda")?;
        g.spectrum_theta.validate("spectrum_theta")?;
        if g.orientation.min < 0.0 || g.orientation.max > PI / 2.0 {
            return Err(Error::ConfigInvalid("orientation grid must lie within [0°, 90°]".into()));
        }
        if g.spectrum_lambda.min <= 0.0 {
            return Err(Error::ConfigInvalid("spectrum wavelengths must be positive".into()));
        }
        if g.spectrum_trace_nodes.0 < 2 || g.spectrum_trace_nodes.1 < 2 {
            return Err(Error::ConfigInvalid("spectrum trace needs at least 2×2 nodes".into()));
        }
        Ok(())
    }

    pub fn daughter_pol(&self) -> Polarization {
        daughter_polarization(self.pump.pol)
    }

    /// Pump and crystal as used by seeded runs.
    pub fn seeded_setup(&self) -> Result<(&BeamConfig, BeamConfig, CrystalConfig)> {
        let s = self.seed.as_ref().ok_or(Error::SeedMissing)?;
        let pump = BeamConfig {
            duty_cycle: s.pump_duty_cycle,
            ..self.pump.clone()
        };
        Ok((&s.beam, pump, self.crystal.with_orientation(s.orientation)))
    }

    fn spectrum_trace(&self) -> TraceGrid {
        TraceGrid {
            theta2_nodes: self.grids.spectrum_trace_nodes.0,
            omega2_nodes: self.grids.spectrum_trace_nodes.1,
            ..TraceGrid::default()
        }
    }
}

/// Contour of mode 2 at the configured fixed mode 3.
pub fn run_contour(config: &ScenarioConfig) -> Result<ContourResult> {
    config.validate()?;
    let k = &config.constants;
    let g = &config.grids;
    let mode3 = ModeSpec::in_plane(k.omega_from_wavelength(g.contour_lambda3), g.contour_theta3, config.daughter_pol());
    solve_contour(
        &mode3,
        &config.pump.axial_mode(k),
        &config.crystal,
        &g.contour_theta2.values(),
        &RootSpec::default(),
        k,
    )
}

/// Singles density at the contour's fixed mode 3 over the orientation grid.
pub fn run_orientation_scan(config: &ScenarioConfig) -> Result<OrientationScan> {
    config.validate()?;
    let k = &config.constants;
    let g = &config.grids;
    let mode3 = ModeSpec::in_plane(k.omega_from_wavelength(g.contour_lambda3), g.contour_theta3, config.daughter_pol());
    orientation_scan(&config.pump, &mode3, &config.crystal, &g.orientation.values(), k)
}

/// Differential rate density per unit k-volume (s⁻¹ m³) over wavelength × angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMap {
    /// Vacuum wavelengths (m).
    pub wavelengths: Vec<f64>,
    /// Signed polar angles (rad).
    pub thetas: Vec<f64>,
    /// `values[i][j]` at `wavelengths[i]`, `thetas[j]`.
    pub values: Vec<Vec<f64>>,
    /// True when values are cell averages rather than point samples.
    pub cell_averaged: bool,
    pub metadata: serde_json::Value,
}

impl SpectrumMap {
    /// Fraction of nodes whose value exceeds `rel_threshold` times the maximum.
    pub fn support_fraction(&self, rel_threshold: f64) -> f64 {
        let max = self.values.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        let total = self.wavelengths.len() * self.thetas.len();
        if !(max > 0.0) || total == 0 {
            return 0.0;
        }
        let count = self.values.iter().flatten().filter(|&&v| v > rel_threshold * max).count();
        count as f64 / total as f64
    }

    /// `∫ value d³k` over nodes inside the wavelength and angle window, by the
    /// trapezoidal rule in ω and θ with the k-space measure `n²ω²/(c²v) π|sin θ|`.
    /// Only nodes inside the window contribute, so window edges should be grid nodes.
    pub fn integrate(
        &self,
        lambda: (f64, f64),
        theta: (f64, f64),
        crystal: &CrystalConfig,
        pol: Polarization,
        k: &PhysicalConstants,
    ) -> Result<f64> {
        let tol = 1e-9;
        let li: Vec<usize> = (0..self.wavelengths.len())
            .filter(|&i| self.wavelengths[i] >= lambda.0 * (1.0 - tol) && self.wavelengths[i] <= lambda.1 * (1.0 + tol))
            .collect();
        let tj: Vec<usize> = (0..self.thetas.len())
            .filter(|&j| self.thetas[j] >= theta.0 - tol && self.thetas[j] <= theta.1 + tol)
            .collect();
        if li.len() < 2 || tj.len() < 2 {
            return Ok(0.0);
        }
        let omegas: Vec<f64> = li.iter().map(|&i| k.omega_from_wavelength(self.wavelengths[i])).collect();
        let ts: Vec<f64> = tj.iter().map(|&j| self.thetas[j]).collect();
        let w_omega = trapezoid_weights(&omegas);
        let w_theta = trapezoid_weights(&ts);
        let mut total = 0.0;
        for (a, &i) in li.iter().enumerate() {
            for (b, &j) in tj.iter().enumerate() {
                let v = self.values[i][j];
                if v == 0.0 {
                    continue;
                }
                let jac = k_jacobian(&ModeSpec::in_plane(omegas[a], ts[b], pol), crystal, k)?;
                total += w_omega[a] * w_theta[b] * jac * PI * ts[b].sin().abs() * v;
            }
        }
        Ok(total)
    }
}

/// Trapezoid weights for possibly unordered, monotone nodes; always positive.
fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { (x[i] - x[i - 1]).abs() } else { 0.0 };
            let right = if i + 1 < n { (x[i + 1] - x[i]).abs() } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

fn map_metadata(config: &ScenarioConfig, what: &str) -> serde_json::Value {
    serde_json::json!({
        "scenario": config.name,
        "quantity": what,
        "units": "s^-1 m^3",
    })
}

/// Singles density of mode 3 at every (λ, θ) node; zero where no contour exists.
pub fn run_unseeded_spectrum(config: &ScenarioConfig) -> Result<SpectrumMap> {
    config.validate()?;
    let k = &config.constants;
    let pol = config.daughter_pol();
    let wavelengths = config.grids.spectrum_lambda.values();
    let thetas = config.grids.spectrum_theta.values();
    let grid = config.spectrum_trace();
    let nodes: Vec<(usize, usize)> = (0..wavelengths.len())
        .flat_map(|i| (0..thetas.len()).map(move |j| (i, j)))
        .collect();
    let flat = par::map(&nodes, |&(i, j)| {
        let m3 = ModeSpec::in_plane(k.omega_from_wavelength(wavelengths[i]), thetas[j], pol);
        match singles_density_with(&m3, &config.pump, &config.crystal, k, &grid) {
            // nodes outside the dispersion window carry no emission
            Err(Error::OutOfValidityRange { .. }) => Ok(0.0),
            other => other,
        }
    });
    let values = reshape(flat, thetas.len())?;
    Ok(SpectrumMap {
        wavelengths,
        thetas,
        values,
        cell_averaged: false,
        metadata: map_metadata(config, "unseeded singles density of mode 3"),
    })
}

fn reshape(flat: Vec<Result<f64>>, cols: usize) -> Result<Vec<Vec<f64>>> {
    let flat: Vec<f64> = flat.into_iter().collect::<Result<_>>()?;
    Ok(flat.chunks(cols.max(1)).map(<[f64]>::to_vec).collect())
}

/// Cell edges around each node: midpoints between neighbours, clipped at the ends.
fn cell_edges(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|i| {
            let lo = if i > 0 { 0.5 * (x[i - 1] + x[i]) } else { x[i] };
            let hi = if i + 1 < n { 0.5 * (x[i] + x[i + 1]) } else { x[i] };
            (lo, hi)
        })
        .collect()
}

/// Seeded singles density of mode 2, averaged over the cell around every node.
///
/// The seeded density is a thin shell in k₂-space, far narrower than any
/// practical map cell, so point samples would miss it. Each cell instead
/// receives the exact seeded rate through it divided by its k-volume.
pub fn run_seeded_spectrum(config: &ScenarioConfig) -> Result<SpectrumMap> {
    config.validate()?;
    let (seed, pump, crystal) = config.seeded_setup()?;
    let k = &config.constants;
    let pol = config.daughter_pol();
    let wavelengths = config.grids.spectrum_lambda.values();
    let thetas = config.grids.spectrum_theta.values();
    let lam_cells = cell_edges(&wavelengths);
    let th_cells = cell_edges(&thetas);
    let mut cells = Vec::with_capacity(wavelengths.len() * thetas.len());
    for &(l0, l1) in &lam_cells {
        for &(t0, t1) in &th_cells {
            let (hi, lo) = (k.omega_from_wavelength(l0), k.omega_from_wavelength(l1));
            cells.push(DetectionBand {
                omega_center: 0.5 * (lo + hi),
                omega_halfwidth: 0.5 * (hi - lo),
                theta_min: t0,
                theta_max: t1,
                efficiency_eta: 1.0,
            });
        }
    }
    let (n_t, n_w) = config.grids.spectrum_trace_nodes;
    let (w_lo, w_hi) = (
        k.omega_from_wavelength(lam_cells.last().map_or(wavelengths[0], |c| c.1)),
        k.omega_from_wavelength(lam_cells[0].0),
    );
    let t_range = (th_cells[0].0, th_cells.last().map_or(thetas[0], |c| c.1));
    let degenerate = !(w_lo < w_hi) || !(t_range.0 < t_range.1);
    let rates = if degenerate {
        vec![0.0; cells.len()]
    } else {
        // resolve each map cell by several lattice cells
        let nt = n_t.max(4 * thetas.len() + 1);
        let nw = n_w.max(4 * wavelengths.len() + 1);
        let grid = TraceGrid::window(t_range, (w_lo, w_hi), nt, nw);
        seeded_cell_rates(&cells, seed, &pump, &crystal, &grid, k)?
    };
    let flat = par::map_range(cells.len(), |i| -> Result<f64> {
        if rates[i] == 0.0 {
            return Ok(0.0);
        }
        let vol = cells[i].k_volume(&crystal, pol, k)?;
        Ok(if vol > 0.0 { rates[i] / vol } else { 0.0 })
    });
    let values = reshape(flat, thetas.len())?;
    Ok(SpectrumMap {
        wavelengths,
        thetas,
        values,
        cell_averaged: true,
        metadata: map_metadata(config, "seeded singles density of mode 2, cell averaged"),
    })
}

/// Broadband and narrowband rate reports, unseeded and seeded, with efficiencies applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub broadband: RateReport,
    pub narrowband: RateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeded_broadband: Option<RateReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeded_narrowband: Option<RateReport>,
    /// Seeded over unseeded singles, broadband bands.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub broadband_enhancement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub narrowband_enhancement: Option<f64>,
}

/// Seeded bands `[D₁, D₂]` from an unseeded set: the seed takes the place of
/// mode 3, so D₃'s detector registers mode 1.
pub fn seeded_bands(bands: &[DetectionBand; 3]) -> [DetectionBand; 2] {
    [bands[2], bands[1]]
}

pub fn run_count_rate_table(config: &ScenarioConfig) -> Result<RateTable> {
    config.validate()?;
    let k = &config.constants;
    let opts = &config.options;
    let b = &config.bands;
    let broadband = broadband_rates_with(&b.broadband, &config.pump, &config.crystal, k, opts)?.with_efficiencies();
    let narrowband = narrowband_rates_with(&b.narrowband, &config.pump, &config.crystal, k, opts)?.with_efficiencies();
    let (mut seeded_broadband, mut seeded_narrowband) = (None, None);
    if config.seed.is_some() {
        let (seed, pump, crystal) = config.seeded_setup()?;
        seeded_broadband = Some(
            seeded_broadband_rates_with(&seeded_bands(&b.broadband), seed, &pump, &crystal, k, opts)?.with_efficiencies(),
        );
        seeded_narrowband = Some(
            seeded_narrowband_rates_with(&seeded_bands(&b.narrowband), seed, &pump, &crystal, k, opts)?
                .with_efficiencies(),
        );
    }
    let ratio = |s: &Option<RateReport>, u: &RateReport| {
        s.as_ref().and_then(|s| (u.singles_hz > 0.0).then(|| s.singles_hz / u.singles_hz))
    };
    Ok(RateTable {
        broadband_enhancement: ratio(&seeded_broadband, &broadband),
        narrowband_enhancement: ratio(&seeded_narrowband, &narrowband),
        broadband,
        narrowband,
        seeded_broadband,
        seeded_narrowband,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values_hit_both_ends() {
        let a = Axis::new(1.0, 2.0, 11);
        let v = a.values();
        assert_eq!(v.len(), 11);
        assert_eq!(v[0], 1.0);
        assert_eq!(v[10], 2.0);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(Axis::new(3.0, 3.0, 1).values(), vec![3.0]);
        assert!(Axis::new(2.0, 1.0, 3).validate("x").is_err());
    }

    #[test]
    fn defaults_validate_and_conserve_energy() {
        let c = ScenarioConfig::default();
        c.validate().unwrap();
        let k = &c.constants;
        let [d1, d2, d3] = c.bands.narrowband;
        let res = c.pump.omega(k) - d1.omega_center - d2.omega_center - d3.omega_center;
        assert!(res.abs() < 1e-6 * c.pump.omega(k));
        let lambda1 = k.wavelength_from_omega(d1.omega_center) * 1e9;
        assert!((lambda1 - 1620.59).abs() < 0.01, "{lambda1}");
    }

    #[test]
    fn pulsed_peak_intensities() {
        let c = ScenarioConfig::default();
        let (seed, pump, crystal) = c.seeded_setup().unwrap();
        assert!((pump.peak_intensity() / 1.59e14 - 1.0).abs() < 0.01);
        assert!((seed.peak_intensity() / 1.59e13 - 1.0).abs() < 0.01);
        assert!((crystal.orientation.to_degrees() - 68.5).abs() < 1e-12);
        assert_eq!(c.pump.duty_cycle, 1.0);
    }

    #[test]
    fn seeded_runs_need_a_seed() {
        let c = ScenarioConfig { seed: None, ..ScenarioConfig::default() };
        assert_eq!(run_seeded_spectrum(&c).unwrap_err(), Error::SeedMissing);
    }

    #[test]
    fn invalid_name_is_config_error() {
        let c = ScenarioConfig { name: "a/b".into(), ..ScenarioConfig::default() };
        assert_eq!(c.validate().unwrap_err().name(), "ConfigInvalid");
    }

    #[test]
    fn trapezoid_weights_sum_to_span() {
        let x = [5.0, 4.0, 2.5, 1.0];
        let w = trapezoid_weights(&x);
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn cell_edges_tile_the_axis() {
        let e = cell_edges(&[0.0, 1.0, 3.0]);
        assert_eq!(e, vec![(0.0, 0.5), (0.5, 2.0), (2.0, 3.0)]);
    }
}
