//! Data-parallel grids against a plain sequential loop.
//!
//! `cargo bench -p topdc` measures the rayon backend; add
//! `--no-default-features` to measure the sequential fallback. Each group
//! also runs the same work through an ordinary iterator, so one invocation
//! already shows the speedup on the current machine.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use topdc::contour::{trace_contour, TraceGrid};
use topdc::dispersion::{CrystalConfig, Polarization};
use topdc::geometry::{BeamConfig, ModeSpec};
use topdc::par;
use topdc::rates::singles_density_with;
use topdc::PhysicalConstants;

fn backend() -> &'static str {
    if par::is_parallel() {
        "rayon"
    } else {
        "sequential"
    }
}

fn setup() -> (PhysicalConstants, BeamConfig, ModeSpec) {
    let k = PhysicalConstants::default();
    let pump = BeamConfig {
        wavelength: 532e-9,
        avg_power: 0.1,
        waist: 100e-6,
        duty_cycle: 1.0,
        pol: Polarization::Ordinary,
    };
    let m3 = ModeSpec::in_plane(k.omega_from_wavelength(1400e-9), 1f64.to_radians(), Polarization::Extraordinary);
    (k, pump, m3)
}

fn orientation_grid(c: &mut Criterion) {
    let (k, pump, m3) = setup();
    let grid = TraceGrid { theta2_nodes: 121, omega2_nodes: 161, ..TraceGrid::default() };
    let thetas: Vec<f64> = (0..16).map(|i| (64.0 + 0.5 * i as f64).to_radians()).collect();
    let density = |t: &f64| singles_density_with(&m3, &pump, &CrystalConfig::rutile(*t), &k, &grid).unwrap_or(0.0);
    let mut g = c.benchmark_group("orientation_grid");
    g.sample_size(10);
    g.bench_function(format!("par_map_{}", backend()), |b| b.iter(|| black_box(par::map(&thetas, density))));
    g.bench_function("plain_iter", |b| b.iter(|| black_box(thetas.iter().map(density).collect::<Vec<_>>())));
    g.finish();
}

fn contour_trace(c: &mut Criterion) {
    let (k, pump, m3) = setup();
    let crystal = CrystalConfig::rutile(68.24f64.to_radians());
    let grid = TraceGrid::default();
    let mut g = c.benchmark_group("contour_trace");
    g.sample_size(10);
    g.bench_function(backend(), |b| {
        b.iter(|| black_box(trace_contour(&m3, &pump.axial_mode(&k), &crystal, &grid, &k).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, orientation_grid, contour_trace);
criterion_main!(benches);
