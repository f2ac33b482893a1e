//! TOML config in interface units (nm, degrees, mW) and its conversion to
//! [`ScenarioConfig`].
//!
//! Every key is optional. A file is merged over the shipped defaults, then
//! `key=value` overrides are applied to the merged tree, and only then is the
//! result converted to SI.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use topdc::contour::TraceGrid;
use topdc::dispersion::{CrystalConfig, DispersionForm, DispersionModel, Polarization};
use topdc::geometry::BeamConfig;
use topdc::rates::{DetectionBand, RateOptions};
use topdc::scenarios::{closure_band, Axis, BandSet, Grids, ScenarioConfig, SeedConfig};
use topdc::{Error, PhysicalConstants};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "TOPDC_CONFIG";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub name: String,
    pub pump: BeamFile,
    pub seed: SeedFile,
    pub crystal: CrystalFile,
    pub bands: BandsFile,
    pub grids: GridsFile,
    pub numerics: NumericsFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamFile {
    pub wavelength_nm: f64,
    pub power_mw: f64,
    pub waist_nm: f64,
    pub duty_cycle: f64,
    pub polarization: Polarization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedFile {
    pub enabled: bool,
    pub wavelength_nm: f64,
    pub power_mw: f64,
    pub waist_nm: f64,
    pub duty_cycle: f64,
    pub polarization: Polarization,
    /// Pump duty cycle during seeded runs.
    pub pump_duty_cycle: f64,
    pub orientation_deg: f64,
}

/// One-pole Sellmeier `n² = A + B/(λ² − C)` with λ in µm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalFile {
    pub orientation_deg: f64,
    pub length_nm: f64,
    /// m²/V²
    pub chi3: f64,
    pub sellmeier_o: [f64; 3],
    pub sellmeier_e: [f64; 3],
    pub valid_range_nm: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandFile {
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub efficiency: f64,
    /// Recentre on the energy closure of the other two bands' centres.
    #[serde(default)]
    pub closure: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandTriple {
    pub d1: BandFile,
    pub d2: BandFile,
    pub d3: BandFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandsFile {
    pub broadband: BandTriple,
    pub narrowband: BandTriple,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisFile {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridsFile {
    pub contour_lambda3_nm: f64,
    pub contour_theta3_deg: f64,
    pub contour_theta2_deg: AxisFile,
    pub orientation_deg: AxisFile,
    pub spectrum_lambda_nm: AxisFile,
    pub spectrum_theta_deg: AxisFile,
    pub spectrum_trace_nodes: [usize; 2],
}

/// Quadrature and lattice resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsFile {
    /// θ₂ span of the full-window contour lattice.
    pub trace_theta2_deg: [f64; 2],
    /// (θ₂, ω₂) nodes of the full-window lattice.
    pub trace_nodes: [usize; 2],
    pub band_trace_nodes: [usize; 2],
    /// Gauss–Legendre panels and order.
    pub band_omega: [usize; 2],
    pub band_theta: [usize; 2],
    pub pm_transverse_nodes: usize,
    pub pm_lobes: usize,
    pub pm_nodes_per_lobe: usize,
    pub seeded_band_max_nodes: usize,
}

impl From<&RateOptions> for NumericsFile {
    fn from(o: &RateOptions) -> Self {
        Self {
            trace_theta2_deg: [round_deg(o.trace.theta2_min.to_degrees()), round_deg(o.trace.theta2_max.to_degrees())],
            trace_nodes: [o.trace.theta2_nodes, o.trace.omega2_nodes],
            band_trace_nodes: [o.band_trace_nodes.0, o.band_trace_nodes.1],
            band_omega: [o.band_omega_panels, o.band_omega_order],
            band_theta: [o.band_theta_panels, o.band_theta_order],
            pm_transverse_nodes: o.pm_transverse_nodes,
            pm_lobes: o.pm_lobes,
            pm_nodes_per_lobe: o.pm_nodes_per_lobe,
            seeded_band_max_nodes: o.seeded_band_max_nodes,
        }
    }
}

impl NumericsFile {
    fn to_options(&self) -> RateOptions {
        RateOptions {
            trace: TraceGrid {
                theta2_min: self.trace_theta2_deg[0].to_radians(),
                theta2_max: self.trace_theta2_deg[1].to_radians(),
                theta2_nodes: self.trace_nodes[0],
                omega2_nodes: self.trace_nodes[1],
                omega2_min: None,
                omega2_max: None,
            },
            band_trace_nodes: (self.band_trace_nodes[0], self.band_trace_nodes[1]),
            band_omega_panels: self.band_omega[0],
            band_omega_order: self.band_omega[1],
            band_theta_panels: self.band_theta[0],
            band_theta_order: self.band_theta[1],
            pm_transverse_nodes: self.pm_transverse_nodes,
            pm_lobes: self.pm_lobes,
            pm_nodes_per_lobe: self.pm_nodes_per_lobe,
            seeded_band_max_nodes: self.seeded_band_max_nodes,
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

fn band_file(b: &DetectionBand, k: &PhysicalConstants, closure: bool) -> BandFile {
    let (lo, hi) = b.omega_range();
    BandFile {
        lambda_min_nm: round_nm(k.wavelength_from_omega(hi) * 1e9),
        lambda_max_nm: round_nm(k.wavelength_from_omega(lo) * 1e9),
        theta_min_deg: round_deg(b.theta_min.to_degrees()),
        theta_max_deg: round_deg(b.theta_max.to_degrees()),
        efficiency: b.efficiency_eta,
        closure,
    }
}

// keep defaults readable after the SI round trip
fn round_nm(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn round_deg(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

fn axis_file(a: &Axis, scale: f64) -> AxisFile {
    AxisFile { min: round_deg(a.min * scale), max: round_deg(a.max * scale), count: a.count }
}

impl Default for FileConfig {
    fn default() -> Self {
        let d = ScenarioConfig::default();
        let k = d.constants;
        let seed = d.seed.expect("defaults carry a seed");
        let beam = |b: &BeamConfig| BeamFile {
            wavelength_nm: round_nm(b.wavelength * 1e9),
            power_mw: b.avg_power * 1e3,
            waist_nm: round_nm(b.waist * 1e9),
            duty_cycle: b.duty_cycle,
            polarization: b.pol,
        };
        let triple = |t: &[DetectionBand; 3], closure: bool| BandTriple {
            d1: band_file(&t[0], &k, closure),
            d2: band_file(&t[1], &k, false),
            d3: band_file(&t[2], &k, false),
        };
        let s = beam(&seed.beam);
        let deg = 180.0 / std::f64::consts::PI;
        Self {
            name: d.name.clone(),
            pump: beam(&d.pump),
            seed: SeedFile {
                enabled: true,
                wavelength_nm: s.wavelength_nm,
                power_mw: s.power_mw,
                waist_nm: s.waist_nm,
                duty_cycle: s.duty_cycle,
                polarization: s.polarization,
                pump_duty_cycle: seed.pump_duty_cycle,
                orientation_deg: round_deg(seed.orientation.to_degrees()),
            },
            crystal: CrystalFile {
                orientation_deg: round_deg(d.crystal.orientation.to_degrees()),
                length_nm: round_nm(d.crystal.length * 1e9),
                chi3: d.crystal.chi3_eff,
                sellmeier_o: coeffs(&d.crystal.disp_o),
                sellmeier_e: coeffs(&d.crystal.disp_e),
                valid_range_nm: [
                    round_nm(d.crystal.disp_o.valid_range.0 * 1e9),
                    round_nm(d.crystal.disp_o.valid_range.1 * 1e9),
                ],
            },
            bands: BandsFile {
                broadband: triple(&d.bands.broadband, false),
                narrowband: triple(&d.bands.narrowband, true),
            },
            grids: GridsFile {
                contour_lambda3_nm: round_nm(d.grids.contour_lambda3 * 1e9),
                contour_theta3_deg: d.grids.contour_theta3.to_degrees(),
                contour_theta2_deg: axis_file(&d.grids.contour_theta2, deg),
                orientation_deg: axis_file(&d.grids.orientation, deg),
                spectrum_lambda_nm: axis_file(&d.grids.spectrum_lambda, 1e9),
                spectrum_theta_deg: axis_file(&d.grids.spectrum_theta, deg),
                spectrum_trace_nodes: [d.grids.spectrum_trace_nodes.0, d.grids.spectrum_trace_nodes.1],
            },
            numerics: NumericsFile::from(&d.options),
        }
    }
}

fn coeffs(m: &DispersionModel) -> [f64; 3] {
    [m.coefficients[0], m.coefficients[1], m.coefficients[2]]
}

impl FileConfig {
    /// Converts to SI and validates.
    pub fn to_scenario(&self) -> Result<ScenarioConfig, Error> {
        let k = PhysicalConstants::default();
        let nm = 1e-9;
        let rad = |d: f64| d.to_radians();
        let beam = |b: &BeamFile| BeamConfig {
            wavelength: b.wavelength_nm * nm,
            avg_power: b.power_mw * 1e-3,
            waist: b.waist_nm * nm,
            duty_cycle: b.duty_cycle,
            pol: b.polarization,
        };
        let range = (self.crystal.valid_range_nm[0] * nm, self.crystal.valid_range_nm[1] * nm);
        let model = |c: [f64; 3]| {
            DispersionModel::new(DispersionForm::SellmeierOnePole, c.to_vec(), range).map_err(|e| invalid(e.to_string()))
        };
        let crystal = CrystalConfig {
            length: self.crystal.length_nm * nm,
            orientation: rad(self.crystal.orientation_deg),
            chi3_eff: self.crystal.chi3,
            disp_o: model(self.crystal.sellmeier_o)?,
            disp_e: model(self.crystal.sellmeier_e)?,
        };
        let band = |b: &BandFile| {
            DetectionBand::from_wavelengths(
                b.lambda_min_nm * nm,
                b.lambda_max_nm * nm,
                rad(b.theta_min_deg),
                rad(b.theta_max_deg),
                b.efficiency,
                &k,
            )
            .map_err(|e| invalid(e.to_string()))
        };
        let pump = beam(&self.pump);
        let triple = |t: &BandTriple| -> Result<[DetectionBand; 3], Error> {
            let (d2, d3) = (band(&t.d2)?, band(&t.d3)?);
            let mut d1 = band(&t.d1)?;
            if t.d1.closure {
                d1 = closure_band(&d2, &d3, &d1, pump.omega(&k));
            }
            if t.d2.closure || t.d3.closure {
                return Err(invalid("only d1 can be placed at the energy closure"));
            }
            Ok([d1, d2, d3])
        };
        let axis = |a: &AxisFile, scale: f64| Axis::new(a.min * scale, a.max * scale, a.count);
        let deg = std::f64::consts::PI / 180.0;
        let scenario = ScenarioConfig {
            name: self.name.clone(),
            seed: self.seed.enabled.then(|| SeedConfig {
                beam: BeamConfig {
                    wavelength: self.seed.wavelength_nm * nm,
                    avg_power: self.seed.power_mw * 1e-3,
                    waist: self.seed.waist_nm * nm,
                    duty_cycle: self.seed.duty_cycle,
                    pol: self.seed.polarization,
                },
                pump_duty_cycle: self.seed.pump_duty_cycle,
                orientation: rad(self.seed.orientation_deg),
            }),
            bands: BandSet {
                broadband: triple(&self.bands.broadband)?,
                narrowband: triple(&self.bands.narrowband)?,
            },
            grids: Grids {
                contour_lambda3: self.grids.contour_lambda3_nm * nm,
                contour_theta3: rad(self.grids.contour_theta3_deg),
                contour_theta2: axis(&self.grids.contour_theta2_deg, deg),
                orientation: axis(&self.grids.orientation_deg, deg),
                spectrum_lambda: axis(&self.grids.spectrum_lambda_nm, nm),
                spectrum_theta: axis(&self.grids.spectrum_theta_deg, deg),
                spectrum_trace_nodes: (self.grids.spectrum_trace_nodes[0], self.grids.spectrum_trace_nodes[1]),
            },
            pump,
            crystal,
            constants: k,
            options: self.numerics.to_options(),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Recursively overlays `top` onto `base`.
fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (key, v) in t {
                match b.get_mut(&key) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(key, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Parses the value of a `key=value` override as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Splits `key=value` pairs, keeping them in a sorted map.
pub fn parse_overrides(items: &[String]) -> Result<BTreeMap<String, String>, Error> {
    let mut out = BTreeMap::new();
    for item in items {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| invalid(format!("override `{item}` is not key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(invalid(format!("override `{item}` has an empty key")));
        }
        out.insert(key.to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn apply_override(tree: &mut toml::Value, key: &str, raw: &str) -> Result<(), Error> {
    let mut slot = tree;
    for part in key.split('.') {
        slot = slot
            .as_table_mut()
            .and_then(|t| t.get_mut(part))
            .ok_or_else(|| invalid(format!("unknown config key `{key}`")))?;
    }
    let mut value = parse_value(raw);
    // integers are accepted where floats are expected
    if let (toml::Value::Float(_), toml::Value::Integer(i)) = (&*slot, &value) {
        value = toml::Value::Float(*i as f64);
    }
    *slot = value;
    Ok(())
}

/// Loads defaults, merges the optional file, applies overrides.
pub fn load(path: Option<&Path>, overrides: &BTreeMap<String, String>) -> Result<FileConfig, Error> {
    let mut tree = toml::Value::try_from(FileConfig::default()).map_err(|e| invalid(e.to_string()))?;
    if let Some(path) = path {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let file: toml::Table = toml::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        merge(&mut tree, toml::Value::Table(file));
    }
    for (key, value) in overrides {
        apply_override(&mut tree, key, value)?;
    }
    tree.try_into().map_err(|e: toml::de::Error| invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_to_scenario_defaults() {
        let s = FileConfig::default().to_scenario().unwrap();
        let d = ScenarioConfig::default();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-300);
        assert!(close(s.pump.wavelength, d.pump.wavelength));
        assert!(close(s.crystal.orientation, d.crystal.orientation));
        assert!(close(s.crystal.length, d.crystal.length));
        for (a, b) in s.bands.narrowband.iter().zip(&d.bands.narrowband) {
            assert!(close(a.omega_center, b.omega_center));
            // the file keeps band edges to 1e-6 nm
            assert!((a.omega_halfwidth / b.omega_halfwidth - 1.0).abs() < 1e-6);
        }
        assert_eq!(s.grids.spectrum_lambda.count, d.grids.spectrum_lambda.count);
    }

    #[test]
    fn shipped_file_matches_defaults() {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/rutile.toml");
        assert_eq!(load(Some(&path), &BTreeMap::new()).unwrap(), FileConfig::default());
    }

    #[test]
    fn overrides_apply_after_file() {
        let o = parse_overrides(&["pump.power_mw=50".into(), "name=short".into(), "seed.enabled=false".into()]).unwrap();
        let c = load(None, &o).unwrap();
        assert_eq!(c.pump.power_mw, 50.0);
        assert_eq!(c.name, "short");
        assert!(c.to_scenario().unwrap().seed.is_none());
    }

    #[test]
    fn unknown_key_is_config_invalid() {
        let o = parse_overrides(&["pump.colour=3".into()]).unwrap();
        assert_eq!(load(None, &o).unwrap_err().name(), "ConfigInvalid");
        assert!(parse_overrides(&["novalue".into()]).is_err());
    }

    #[test]
    fn bad_values_are_config_invalid() {
        let o = parse_overrides(&["grids.orientation_deg.max=120".into()]).unwrap();
        let e = load(None, &o).unwrap().to_scenario().unwrap_err();
        assert_eq!(e.name(), "ConfigInvalid");
        let o = parse_overrides(&["pump.polarization=diagonal".into()]).unwrap();
        assert_eq!(load(None, &o).unwrap_err().name(), "ConfigInvalid");
    }
}
