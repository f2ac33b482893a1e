//! `topdc`: command-line front end for the emission-rate engine.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;
use topdc::dispersion::{effective_index, group_velocity, Polarization};
use topdc::output::{self, ErrorRecord, Metadata, Table};
use topdc::scenarios::{self, ScenarioConfig};

use crate::config::{FileConfig, CONFIG_ENV};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] topdc::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot encode JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn record(&self) -> ErrorRecord {
        match self {
            CliError::Core(e) => ErrorRecord::from(e),
            CliError::Io { .. } => ErrorRecord { error: "Io".into(), message: self.to_string() },
            CliError::Json(_) => ErrorRecord { error: "Json".into(), message: self.to_string() },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "topdc", version, about = "Photon-triplet emission rates in rutile")]
struct Cli {
    /// TOML config merged over the built-in defaults.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Override a config key, e.g. `-s pump.power_mw=50`. Repeatable.
    #[arg(short = 's', long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Refractive index and group velocity of one wave, printed as JSON.
    Dispersion {
        #[arg(long)]
        lambda_nm: f64,
        #[arg(long, value_parser = parse_pol)]
        pol: Polarization,
        /// Angle between the wavevector and the optic axis.
        #[arg(long, default_value_t = 90.0)]
        theta_deg: f64,
    },
    /// Phase-matching contour of mode 2 at the fixed mode 3.
    Contour,
    /// Singles density against crystal orientation.
    OrientationScan,
    /// Unseeded wavelength-angle density map.
    Spectrum,
    /// Seeded wavelength-angle density map.
    SeededSpectrum,
    /// Broadband and narrowband count rates, seeded and unseeded.
    Rates,
    /// Every figure artifact under fixed file names.
    Figures,
}

fn parse_pol(s: &str) -> Result<Polarization, String> {
    match s.to_ascii_lowercase().as_str() {
        "o" | "ordinary" => Ok(Polarization::Ordinary),
        "e" | "extraordinary" => Ok(Polarization::Extraordinary),
        _ => Err(format!("expected `ordinary` or `extraordinary`, got `{s}`")),
    }
}

struct Ctx {
    scenario: ScenarioConfig,
    file: FileConfig,
    overrides: BTreeMap<String, String>,
    out: PathBuf,
}

impl Ctx {
    fn meta(&self, artifact: &str, extra: serde_json::Value) -> Metadata {
        let mut extra = match extra {
            serde_json::Value::Object(m) => m,
            _ => serde_json::Map::new(),
        };
        extra.insert("config".into(), serde_json::to_value(&self.file).unwrap_or_default());
        Metadata {
            scenario: self.scenario.name.clone(),
            artifact: artifact.into(),
            overrides: self.overrides.clone(),
            extra: serde_json::Value::Object(extra),
        }
    }

    fn write(&self, file: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.out.join(file);
        std::fs::create_dir_all(&self.out)
            .and_then(|_| std::fs::write(&path, text))
            .map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok(path)
    }

    fn write_csv(&self, file: &str, meta: &Metadata, table: &Table) -> Result<PathBuf, CliError> {
        self.write(file, &output::csv_string(meta, table))
    }

    fn named(&self, artifact: &str, ext: &str) -> String {
        format!("{}.{artifact}.{ext}", self.scenario.name)
    }
}

fn contour_csv(ctx: &Ctx) -> Result<(Metadata, Table), CliError> {
    let c = scenarios::run_contour(&ctx.scenario)?;
    let k = ctx.scenario.constants;
    let g = &ctx.scenario.grids;
    let meta = ctx.meta(
        "contour",
        json!({
            "lambda3_nm": g.contour_lambda3 * 1e9,
            "theta3_deg": g.contour_theta3.to_degrees(),
            "orientation_deg": ctx.scenario.crystal.orientation.to_degrees(),
            "branch_count": c.branch_count,
        }),
    );
    Ok((meta, output::contour_table(&c, |w| k.wavelength_from_omega(w))))
}

fn orientation_csv(ctx: &Ctx) -> Result<(Metadata, Table), CliError> {
    let s = scenarios::run_orientation_scan(&ctx.scenario)?;
    let meta = ctx.meta(
        "orientation",
        json!({
            "argmax_deg": s.argmax.map(f64::to_degrees),
            "argmax_density": s.argmax_density,
        }),
    );
    Ok((meta, output::orientation_table(&s)))
}

fn spectrum_csv(ctx: &Ctx, seeded: bool) -> Result<(Metadata, Table), CliError> {
    let map = if seeded {
        scenarios::run_seeded_spectrum(&ctx.scenario)?
    } else {
        scenarios::run_unseeded_spectrum(&ctx.scenario)?
    };
    let artifact = if seeded { "seeded_spectrum" } else { "spectrum" };
    let meta = ctx.meta(
        artifact,
        json!({
            "cell_averaged": map.cell_averaged,
            "support_fraction": map.support_fraction(1e-3),
            "density_units": "s^-1 m^3",
        }),
    );
    Ok((meta, output::spectrum_table(&map)))
}

fn rates_json(ctx: &Ctx) -> Result<String, CliError> {
    let table = scenarios::run_count_rate_table(&ctx.scenario)?;
    Ok(output::json_string(&ctx.meta("rates", serde_json::Value::Null), &table)?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = config::parse_overrides(&cli.set)?;
    let file = config::load(cli.config.as_deref(), &overrides)?;
    let scenario = file.to_scenario()?;
    let ctx = Ctx { scenario, file, overrides, out: cli.out };
    match cli.command {
        Command::Dispersion { lambda_nm, pol, theta_deg } => {
            let k = &ctx.scenario.constants;
            let omega = k.omega_from_wavelength(lambda_nm * 1e-9);
            let angle = theta_deg.to_radians();
            let n = effective_index(&ctx.scenario.crystal, pol, angle, omega, k)?;
            let v_g = group_velocity(&ctx.scenario.crystal, pol, angle, omega, k)?;
            let doc = json!({
                "lambda_nm": lambda_nm,
                "pol": pol,
                "theta_deg": theta_deg,
                "n": n,
                "v_g": v_g,
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
        }
        Command::Contour => {
            let (m, t) = contour_csv(&ctx)?;
            report(ctx.write_csv(&ctx.named("contour", "csv"), &m, &t)?);
        }
        Command::OrientationScan => {
            let (m, t) = orientation_csv(&ctx)?;
            report(ctx.write_csv(&ctx.named("orientation", "csv"), &m, &t)?);
        }
        Command::Spectrum => {
            let (m, t) = spectrum_csv(&ctx, false)?;
            report(ctx.write_csv(&ctx.named("spectrum", "csv"), &m, &t)?);
        }
        Command::SeededSpectrum => {
            let (m, t) = spectrum_csv(&ctx, true)?;
            report(ctx.write_csv(&ctx.named("seeded_spectrum", "csv"), &m, &t)?);
        }
        Command::Rates => {
            let text = rates_json(&ctx)?;
            report(ctx.write(&ctx.named("rates", "json"), &text)?);
        }
        Command::Figures => {
            let (m, t) = contour_csv(&ctx)?;
            report(ctx.write_csv("fig2_contour.csv", &m, &t)?);
            let (m, t) = orientation_csv(&ctx)?;
            report(ctx.write_csv("fig3_orientation.csv", &m, &t)?);
            let (m, t) = spectrum_csv(&ctx, false)?;
            report(ctx.write_csv("fig4_spectrum.csv", &m, &t)?);
            let (m, t) = spectrum_csv(&ctx, true)?;
            report(ctx.write_csv("fig5_seeded_spectrum.csv", &m, &t)?);
            report(ctx.write("fig6_rates.json", &rates_json(&ctx)?)?);
        }
    }
    Ok(())
}

fn report(path: PathBuf) {
    println!("{}", Path::new(&path).display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = e.record();
            eprintln!("{}", serde_json::to_string(&record).expect("record serializes"));
            ExitCode::FAILURE
        }
    }
}
