//! Independent reference computations. Only the Sellmeier/index primitives
//! and beam bookkeeping are shared with the library; everything else is
//! evaluated here from the defining integrals.

#![allow(dead_code)]

use std::f64::consts::PI;

use topdc::dispersion::{effective_index, group_velocity, CrystalConfig, Polarization};
use topdc::geometry::BeamConfig;
use topdc::PhysicalConstants;

pub type V3 = [f64; 3];

pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn norm(a: V3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

pub fn axis(c: &CrystalConfig) -> V3 {
    [c.orientation.sin(), 0.0, c.orientation.cos()]
}

/// Angle between a direction and the optic axis.
pub fn axis_angle(c: &CrystalConfig, dir: V3) -> f64 {
    let a = axis(c);
    let cos = (dir[0] * a[0] + dir[1] * a[1] + dir[2] * a[2]) / norm(dir);
    cos.clamp(-1.0, 1.0).acos()
}

/// Angular frequency window of the Sellmeier fit.
pub fn omega_window(c: &CrystalConfig, k: &PhysicalConstants) -> (f64, f64) {
    let (lo, hi) = c.disp_e.valid_range;
    (2.0 * PI * k.c / hi, 2.0 * PI * k.c / lo)
}

/// In-plane wavevector at signed polar angle `theta`.
pub fn wavevector(c: &CrystalConfig, pol: Polarization, omega: f64, theta: f64, k: &PhysicalConstants) -> Option<V3> {
    let dir = [theta.sin(), 0.0, theta.cos()];
    let n = effective_index(c, pol, axis_angle(c, dir), omega, k).ok()?;
    let m = n * omega / k.c;
    Some([m * dir[0], m * dir[1], m * dir[2]])
}

/// Frequency whose wavevector along `dir` has magnitude `kmag`, by
/// Illinois regula falsi on the whole dispersion window.
pub fn omega_on_shell(c: &CrystalConfig, pol: Polarization, dir: V3, kmag: f64, k: &PhysicalConstants) -> Option<f64> {
    let angle = axis_angle(c, dir);
    let (mut a, mut b) = omega_window(c, k);
    let f = |w: f64| effective_index(c, pol, angle, w, k).map(|n| n * w / k.c - kmag);
    let (mut fa, mut fb) = (f(a).ok()?, f(b).ok()?);
    if fa > 0.0 || fb < 0.0 {
        return None;
    }
    let mut side = 0;
    for _ in 0..200 {
        let x = (a * fb - b * fa) / (fb - fa);
        let fx = f(x).ok()?;
        if fx == 0.0 || (b - a) < 1e-14 * b {
            return Some(x);
        }
        if fx < 0.0 {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if fx.abs() < 1e-15 * kmag {
            return Some(x);
        }
    }
    Some(0.5 * (a + b))
}

/// `R = ħ V γ² / (8 (2π)⁸ ε₀³ c³)` with `γ = (3!χ/2³) √(2 I ε₀ / (c n_p))`, times the duty cycle.
pub fn rate_prefactor(pump: &BeamConfig, c: &CrystalConfig, k: &PhysicalConstants) -> f64 {
    let wp = 2.0 * PI * k.c / pump.wavelength;
    let np = effective_index(c, pump.pol, c.orientation, wp, k).unwrap();
    let intensity = pump.avg_power / (pump.duty_cycle * PI * pump.waist * pump.waist);
    let gamma = 6.0 * c.chi3_eff / 8.0 * (2.0 * intensity * k.eps0 / (k.c * np)).sqrt();
    let volume = PI * pump.waist * pump.waist * c.length;
    k.hbar * volume * gamma * gamma / (8.0 * (2.0 * PI).powi(8) * k.eps0.powi(3) * k.c.powi(3)) * pump.duty_cycle
}

/// Pump wavevector; the pump is axial so its index is taken at the crystal orientation.
fn pump_k(pump: &BeamConfig, c: &CrystalConfig, k: &PhysicalConstants) -> (f64, V3) {
    let wp = 2.0 * PI * k.c / pump.wavelength;
    let n = effective_index(c, pump.pol, c.orientation, wp, k).unwrap();
    (wp, [0.0, 0.0, n * wp / k.c])
}

fn daughter(pol: Polarization) -> Polarization {
    match pol {
        Polarization::Ordinary => Polarization::Extraordinary,
        Polarization::Extraordinary => Polarization::Ordinary,
    }
}

/// Singles density at an in-plane mode 3 `(ω₃, θ₃)` with the energy delta
/// replaced by a normalised Gaussian of width `σ ω_p`, summed on a (θ₂, ω₂)
/// lattice.
///
/// Along ω₂ a coarse lattice locates the strip where |g| is within 10 σ_max of
/// zero and only that strip is resampled finely enough to resolve σ_min.
pub struct GaussianDelta<'a> {
    pub pump: &'a BeamConfig,
    pub crystal: &'a CrystalConfig,
    pub k: &'a PhysicalConstants,
    pub omega3: f64,
    pub theta3: f64,
    /// Widths as fractions of ω_p.
    pub sigmas: Vec<f64>,
}

impl GaussianDelta<'_> {
    /// Factor turning the (θ₂, ω₂) integral into a density per k₃-volume.
    pub fn scale(&self) -> f64 {
        let (c, k) = (self.crystal, self.k);
        let pol = daughter(self.pump.pol);
        let k3 = wavevector(c, pol, self.omega3, self.theta3, k).unwrap();
        let n3 = norm(k3) * k.c / self.omega3;
        let dir = [self.theta3.sin(), 0.0, self.theta3.cos()];
        let v3 = group_velocity(c, pol, axis_angle(c, dir), self.omega3, k).unwrap();
        (2.0 * PI).powi(3) * rate_prefactor(self.pump, c, k) * (self.omega3 * v3 / n3) * PI / (k.c * k.c)
    }

    /// `(g, ω₁ω₂³v₁n₂|sin θ₂|/n₁)` at one lattice point.
    pub fn eval(&self, w2: f64, t2: f64) -> Option<(f64, f64)> {
        let (c, k) = (self.crystal, self.k);
        let pol = daughter(self.pump.pol);
        let (wp, kp) = pump_k(self.pump, c, k);
        let k3 = wavevector(c, pol, self.omega3, self.theta3, k)?;
        let k2 = wavevector(c, pol, w2, t2, k)?;
        let k1 = sub(sub(kp, k2), k3);
        let w1 = omega_on_shell(c, pol, k1, norm(k1), k)?;
        let a1 = axis_angle(c, k1);
        let n1 = effective_index(c, pol, a1, w1, k).ok()?;
        let v1 = group_velocity(c, pol, a1, w1, k).ok()?;
        let n2 = norm(k2) * k.c / w2;
        let g = wp - w1 - w2 - self.omega3;
        Some((g, w1 * w2.powi(3) * v1 * n2 * t2.sin().abs() / n1))
    }

    /// `∫ W δ_σ(g) dω₂` at fixed θ₂, one value per width.
    pub fn row(&self, t2: f64) -> Vec<f64> {
        let wp = 2.0 * PI * self.k.c / self.pump.wavelength;
        let (wlo, whi) = omega_window(self.crystal, self.k);
        let w2max = whi.min(wp - self.omega3 - wlo);
        let sig_max = self.sigmas.iter().cloned().fold(0.0, f64::max) * wp;
        let sig_min = self.sigmas.iter().cloned().fold(f64::INFINITY, f64::min) * wp;
        let n_coarse = ((w2max - wlo) / (4e-3 * wp)).ceil() as usize;
        let hc = (w2max - wlo) / n_coarse as f64;
        let gs: Vec<Option<f64>> = (0..=n_coarse).map(|i| self.eval(wlo + hc * i as f64, t2).map(|p| p.0)).collect();
        let mut row = vec![0.0; self.sigmas.len()];
        for i in 0..n_coarse {
            // fine samples per coarse cell: g may change by at most σ_min/8 between them
            let fine = match (gs[i], gs[i + 1]) {
                (Some(a), Some(b)) if a.signum() == b.signum() && a.abs().min(b.abs()) > 10.0 * sig_max => continue,
                (None, None) => continue,
                (Some(a), Some(b)) => ((a - b).abs() / (sig_min / 8.0)).ceil() as usize,
                _ => (hc / (sig_min / 8.0)).ceil() as usize,
            }
            .max(16);
            let hf = hc / fine as f64;
            for m in 0..fine {
                let w2 = wlo + hc * i as f64 + hf * (m as f64 + 0.5);
                if let Some((g, wt)) = self.eval(w2, t2) {
                    for (r, &s) in row.iter_mut().zip(&self.sigmas) {
                        let s = s * wp;
                        *r += wt * (-0.5 * (g / s).powi(2)).exp() / (s * (2.0 * PI).sqrt()) * hf;
                    }
                }
            }
        }
        row
    }

    /// Trapezoidal sum over rows at the given θ₂ nodes (ascending).
    pub fn density(&self, thetas: &[f64]) -> Vec<f64> {
        let mut totals = vec![0.0; self.sigmas.len()];
        for (j, &t) in thetas.iter().enumerate() {
            let left = if j > 0 { t - thetas[j - 1] } else { 0.0 };
            let right = if j + 1 < thetas.len() { thetas[j + 1] - t } else { 0.0 };
            for (acc, r) in totals.iter_mut().zip(self.row(t)) {
                *acc += 0.5 * (left + right) * r;
            }
        }
        let s = self.scale();
        totals.into_iter().map(|t| s * t).collect()
    }
}

/// Concatenated uniform lattices over `[(from, to, step)]`, each in radians.
pub fn piecewise_lattice(pieces: &[(f64, f64, f64)]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &(a, b, h) in pieces {
        let n = ((b - a) / h).round() as usize;
        for i in 0..=n {
            let x = a + (b - a) * i as f64 / n as f64;
            if out.last().map_or(true, |&l| x > l + 1e-15) {
                out.push(x);
            }
        }
    }
    out
}

/// `|f̃(q)|² = V exp(−(q_x² + q_y²) w²/4) sinc²(q_z L/2)`.
pub fn pm(q: V3, waist: f64, length: f64) -> f64 {
    let x = 0.5 * q[2] * length;
    let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
    PI * waist * waist * length * (-(q[0] * q[0] + q[1] * q[1]) * waist * waist / 4.0).exp() * sinc * sinc
}

/// `⟨E²⟩ = ħ/(2ε₀c(2π)³V) ∫ (ωv/n)|f̃(K − k)|² d³k`, where `K = k_p − k_a − k_b`
/// and the integration variable is the unregistered mode.
///
/// Midpoint sums: ±6√2/w transversally, `lobes` sinc² lobes on each side
/// longitudinally with the far tail added at the boundary value.
pub fn narrowband_field_sq(
    registered: [(f64, f64); 2],
    pump: &BeamConfig,
    c: &CrystalConfig,
    k: &PhysicalConstants,
    transverse: usize,
    lobes: usize,
    per_lobe: usize,
) -> f64 {
    let pol = daughter(pump.pol);
    let (_, kp) = pump_k(pump, c, k);
    let mut big_k = kp;
    for (w, t) in registered {
        big_k = sub(big_k, wavevector(c, pol, w, t, k).unwrap());
    }
    let (w, l) = (pump.waist, c.length);
    let f = |kv: V3| -> f64 {
        let Some(om) = omega_on_shell(c, pol, kv, norm(kv), k) else { return 0.0 };
        let a = axis_angle(c, kv);
        let n = effective_index(c, pol, a, om, k).unwrap();
        om * group_velocity(c, pol, a, om, k).unwrap() / n
    };
    let qt = 6.0 * 2f64.sqrt() / w;
    let ht = 2.0 * qt / transverse as f64;
    let lobe = 2.0 * PI / l;
    let qz = lobes as f64 * lobe;
    let nz = 2 * lobes * per_lobe;
    let hz = 2.0 * qz / nz as f64;
    let mut sum = 0.0;
    for ix in 0..transverse {
        let qx = -qt + ht * (ix as f64 + 0.5);
        for iy in 0..transverse {
            let qy = -qt + ht * (iy as f64 + 0.5);
            let mut line = 0.0;
            for iz in 0..nz {
                let q = [qx, qy, -qz + hz * (iz as f64 + 0.5)];
                line += pm(q, w, l) * f(sub(big_k, q)) * hz;
            }
            // sinc² beyond ±qz: ∫ sin²x/x² over |x| > X is close to 1/X
            let x = 0.5 * qz * l;
            let tail = pm([qx, qy, 0.0], w, l) * (2.0 / l) * (1.0 / x);
            line += tail * 0.5 * (f(sub(big_k, [qx, qy, qz])) + f(sub(big_k, [qx, qy, -qz])));
            sum += line * ht * ht;
        }
    }
    let v = PI * w * w * l;
    k.hbar / (2.0 * k.eps0 * k.c * (2.0 * PI).powi(3) * v) * sum
}

/// `|E_s|² = 2 I_s / (ε₀ n_s c)` at the seed's peak intensity.
pub fn seed_field_sq(seed: &BeamConfig, c: &CrystalConfig, k: &PhysicalConstants) -> f64 {
    let ws = 2.0 * PI * k.c / seed.wavelength;
    let n = effective_index(c, seed.pol, c.orientation, ws, k).unwrap();
    let intensity = seed.avg_power / (seed.duty_cycle * PI * seed.waist * seed.waist);
    2.0 * intensity / (k.eps0 * n * k.c)
}

/// Full widths at half maximum of `|f̃|²` along a transverse and the longitudinal axis of Δk.
pub fn pm_fwhm(waist: f64, length: f64) -> (f64, f64) {
    // exp(−q²w²/4) = 1/2, and sinc²(x) = 1/2 at x ≈ 1.39156
    (4.0 * 2f64.ln().sqrt() / waist, 4.0 * 1.391_557_4 / length)
}
