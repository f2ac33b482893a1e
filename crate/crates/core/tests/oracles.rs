//! Engine quantities against independent evaluations of their definitions.

mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use topdc::contour::{solve_contour, ContourProblem};
use topdc::dispersion::{effective_index, CrystalConfig, Polarization};
use topdc::geometry::{interaction_volume, BeamConfig, ModeSpec};
use topdc::quadrature::RootSpec;
use topdc::rates::*;
use topdc::PhysicalConstants;

const E: Polarization = Polarization::Extraordinary;

fn pump() -> BeamConfig {
    BeamConfig { wavelength: 532e-9, avg_power: 0.1, waist: 100e-6, duty_cycle: 1.0, pol: Polarization::Ordinary }
}

fn sellmeier(a: f64, b: f64, c: f64, lambda_um: f64) -> f64 {
    (a + b / (lambda_um * lambda_um - c)).sqrt()
}

#[test]
fn indices_match_hand_sellmeier() {
    let k = PhysicalConstants::default();
    let crystal = CrystalConfig::rutile(0.3);
    for lam in [0.45, 0.532, 1.0, 1.596, 3.0, 4.9] {
        let w = k.omega_from_wavelength(lam * 1e-6);
        let no = effective_index(&crystal, Polarization::Ordinary, 0.7, w, &k).unwrap();
        let ne = effective_index(&crystal, E, PI / 2.0, w, &k).unwrap();
        assert!((no - sellmeier(5.913, 0.2441, 0.0803, lam)).abs() < 1e-12);
        assert!((ne - sellmeier(7.197, 0.3322, 0.0843, lam)).abs() < 1e-12);
    }
}

/// Orientation at which the collinear degenerate triplet is phase matched:
/// n_e(θ, 3λ_p) = n_o(λ_p), solved on the index ellipse in closed form.
#[test]
fn collinear_degenerate_orientation() {
    let no_p = sellmeier(5.913, 0.2441, 0.0803, 0.532);
    let no_d = sellmeier(5.913, 0.2441, 0.0803, 1.596);
    let ne_d = sellmeier(7.197, 0.3322, 0.0843, 1.596);
    // 1/n² = cos²θ/n_o² + sin²θ/n_e²
    let s2 = (1.0 / (no_p * no_p) - 1.0 / (no_d * no_d)) / (1.0 / (ne_d * ne_d) - 1.0 / (no_d * no_d));
    let theta = s2.sqrt().asin().to_degrees();
    assert!((theta - 68.24).abs() < 0.05, "{theta}");

    // the engine's energy residual vanishes there for a collinear degenerate mode 2
    let k = PhysicalConstants::default();
    let crystal = CrystalConfig::rutile(theta.to_radians());
    let w = k.omega_from_wavelength(1596e-9);
    let problem = ContourProblem::new(&ModeSpec::axial(w, E), &pump().axial_mode(&k), &crystal, &k).unwrap();
    assert!(problem.energy_residual(w, 0.0).abs() < 1e-9 * 3.0 * w);
}

#[test]
fn prefactors_match_hand_evaluation() {
    let k = PhysicalConstants::default();
    let crystal = CrystalConfig::rutile(68.24f64.to_radians());
    let p = pump();
    let np = effective_index(&crystal, p.pol, crystal.orientation, p.omega(&k), &k).unwrap();
    let g = coupling_gamma(3, crystal.chi3_eff, p.peak_intensity(), np, &k).unwrap();
    let r = r3_prefactor(&g, interaction_volume(p.waist, crystal.length), &k).unwrap();
    let hand = common::rate_prefactor(&p, &crystal, &k);
    assert!((r * p.duty_cycle / hand - 1.0).abs() < 1e-12);

    let seed = BeamConfig { wavelength: 1620e-9, avg_power: 0.01, waist: 100e-6, duty_cycle: 2e-8, pol: E };
    let es = seed_field_sq(&seed, &crystal, &k).unwrap().value_sq;
    assert!((es / common::seed_field_sq(&seed, &crystal, &k) - 1.0).abs() < 1e-12);
}

#[test]
fn narrowband_vacuum_field_matches_direct_quadrature() {
    let k = PhysicalConstants::default();
    let crystal = CrystalConfig::rutile(68.24f64.to_radians());
    let p = pump();
    let (w2, w3) = (k.omega_from_wavelength(1584e-9), k.omega_from_wavelength(1584e-9));
    let engine = narrowband_vacuum_field([&ModeSpec::axial(w2, E), &ModeSpec::axial(w3, E)], &p, &crystal, &k)
        .unwrap()
        .value_sq;
    let oracle = common::narrowband_field_sq([(w2, 0.0), (w3, 0.0)], &p, &crystal, &k, 25, 40, 6);
    assert!((engine / oracle - 1.0).abs() < 0.01, "{engine:e} vs {oracle:e}");
}

#[test]
fn band_k_volume_matches_shell_sum() {
    let k = PhysicalConstants::default();
    let crystal = CrystalConfig::rutile(68.24f64.to_radians());
    let b = DetectionBand::from_wavelengths(1500e-9, 1600e-9, -0.05, 0.1, 1.0, &k).unwrap();
    let (lo, hi) = b.omega_range();
    // ∫∫ k² dk dΩ with k = |k(ω, θ)|, the azimuth taken as the π|sin θ| weight
    let nt = 400;
    let mut sum = 0.0;
    for j in 0..nt {
        let t = b.theta_min + (b.theta_max - b.theta_min) * (j as f64 + 0.5) / nt as f64;
        let kk = |w: f64| common::norm(common::wavevector(&crystal, E, w, t, &k).unwrap());
        let shell = (kk(hi).powi(3) - kk(lo).powi(3)) / 3.0;
        sum += shell * PI * t.sin().abs() * (b.theta_max - b.theta_min) / nt as f64;
    }
    let v = b.k_volume(&crystal, E, &k).unwrap();
    assert!((v / sum - 1.0).abs() < 1e-3, "{v:e} vs {sum:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Every contour point conserves energy and closes momentum with an
    /// on-shell mode 1, checked with independently built wavevectors.
    #[test]
    fn contour_points_close(l3 in 1200.0f64..1800.0, t3 in -3.0f64..3.0, orient in 66.0f64..72.0) {
        let k = PhysicalConstants::default();
        let crystal = CrystalConfig::rutile(orient.to_radians());
        let p = pump();
        let w3 = k.omega_from_wavelength(l3 * 1e-9);
        let mode3 = ModeSpec::in_plane(w3, t3.to_radians(), E);
        let thetas: Vec<f64> = (-40..=40).map(|i| (0.5 * i as f64).to_radians()).collect();
        let c = solve_contour(&mode3, &p.axial_mode(&k), &crystal, &thetas, &RootSpec::default(), &k).unwrap();
        let wp = p.omega(&k);
        let np = effective_index(&crystal, p.pol, crystal.orientation, wp, &k).unwrap();
        let kp = [0.0, 0.0, np * wp / k.c];
        let k3 = common::wavevector(&crystal, E, w3, t3.to_radians(), &k).unwrap();
        for pt in &c.points {
            prop_assert!((wp - pt.omega1 - pt.omega2 - w3).abs() < 1e-9 * wp);
            let k2 = common::wavevector(&crystal, E, pt.omega2, pt.theta2, &k).unwrap();
            let k1 = common::sub(common::sub(kp, k2), k3);
            let w1 = common::omega_on_shell(&crystal, E, k1, common::norm(k1), &k).unwrap();
            prop_assert!((w1 - pt.omega1).abs() < 1e-7 * wp, "{} vs {}", w1, pt.omega1);
            let t1 = k1[0].atan2(k1[2]);
            prop_assert!((t1 - pt.theta1).abs() < 1e-9);
        }
    }
}
