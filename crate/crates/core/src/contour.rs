//! Energy–momentum closure for three daughters and the frequency–angle
//! contour of mode 2 at fixed mode 3.
//!
//! Mode 1 is eliminated through momentum conservation: its wavevector is
//! `k_p − k₂ − k₃` and its frequency ω̃₁ is the root of `n(ω) ω / c = |k_p − k₂ − k₃|`.
//! Energy conservation `g(ω₂) = ω_p − ω̃₁ − ω₂ − ω₃ = 0` then fixes ω₂ for every
//! in-plane emission angle θ₂. Mode 2 is kept in the x–z plane (φ₂ ∈ {0, π}),
//! and the azimuth is restored by the rate integrals.

use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::dispersion::{effective_index, CrystalConfig, Polarization, UniaxialIndex};
use crate::error::{Error, Result};
use crate::geometry::{angle_between, mode_to_wavevector, ModeSpec, WaveVector};
use crate::quadrature::{find_roots, refine_root, RootSpec};

/// Relative energy-closure tolerance for stored contour points.
pub const ENERGY_TOLERANCE: f64 = 1e-9;
/// Relative momentum-closure tolerance for stored contour points.
pub const MOMENTUM_TOLERANCE: f64 = 1e-9;

/// Mode 1 obtained from momentum closure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosureMode {
    pub mode: ModeSpec,
    pub wavevector: WaveVector,
    pub index: f64,
}

/// Solves `n(ω, ψ) ω / c = |k_p − k₂ − k₃|` for ω inside the dispersion window,
/// where ψ is the angle between `k_p − k₂ − k₃` and the optic axis.
pub fn solve_omega1(
    k2: &WaveVector,
    k3: &WaveVector,
    pump: &ModeSpec,
    pol: Polarization,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
) -> Result<ClosureMode> {
    let kp = mode_to_wavevector(pump, crystal, k)?;
    closure_from_pump_wavevector(&kp, k2, k3, pol, crystal, k)
}

pub(crate) fn closure_from_pump_wavevector(
    kp: &WaveVector,
    k2: &WaveVector,
    k3: &WaveVector,
    pol: Polarization,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
) -> Result<ClosureMode> {
    let target = *kp - *k2 - *k3;
    let omega = closure_frequency(&target, pol, crystal, k, None).ok_or_else(|| {
        Error::NoRootInWindow(format!(
            "|k| = {:.6e} rad/m not reachable inside the dispersion window",
            target.norm()
        ))
    })?;
    let dir = direction_or_axis(&target);
    let psi = angle_between(dir, crystal.optic_axis());
    let index = effective_index(crystal, pol, psi, omega, k)?;
    Ok(ClosureMode {
        mode: mode_along(dir, omega, pol),
        wavevector: target,
        index,
    })
}

fn direction_or_axis(v: &WaveVector) -> [f64; 3] {
    if v.norm() > 0.0 {
        v.as_array()
    } else {
        [0.0, 0.0, 1.0]
    }
}

fn mode_along(dir: [f64; 3], omega: f64, pol: Polarization) -> ModeSpec {
    let r = dir[0].hypot(dir[1]).hypot(dir[2]);
    let theta = (dir[2] / r).clamp(-1.0, 1.0).acos();
    let mut phi = dir[1].atan2(dir[0]);
    if phi < 0.0 {
        phi += 2.0 * std::f64::consts::PI;
    }
    // in-plane directions land exactly on 0 or π
    if theta == 0.0 || dir[1] == 0.0 && dir[0] >= 0.0 {
        phi = 0.0;
    }
    ModeSpec { omega, theta, phi, pol }
}

/// Frequency whose wavevector magnitude along `target` equals `|target|`,
/// or `None` when it falls outside the dispersion window. `guess` warm-starts
/// the fixed-point iteration `ω ← c|K| / n(ω)`.
pub(crate) fn closure_frequency(
    target: &WaveVector,
    pol: Polarization,
    crystal: &CrystalConfig,
    k: &PhysicalConstants,
    guess: Option<f64>,
) -> Option<f64> {
    let mag = target.norm();
    let psi = angle_between(direction_or_axis(target), crystal.optic_axis());
    let (lo, hi) = crystal.omega_window(pol, k);
    let residual = |w: f64| -> f64 {
        match effective_index(crystal, pol, psi, w, k) {
            Ok(n) => n * w / k.c - mag,
            Err(_) => f64::NAN,
        }
    };
    secant_closure(residual, lo, hi, mag, k.c, guess)
}

pub(crate) fn secant_closure<F: Fn(f64) -> f64>(residual: F, lo: f64, hi: f64, mag: f64, c: f64, guess: Option<f64>) -> Option<f64> {
    // secant iteration on F(ω) = n(ω) ω / c − |K|, started from the fixed-point step
    let mut w0 = guess
        .filter(|g| (lo..=hi).contains(g))
        .unwrap_or_else(|| 0.5 * (lo + hi));
    let mut f0 = residual(w0);
    if !f0.is_finite() {
        return None;
    }
    let mut w1 = (mag * c / (f0 + mag) * w0).clamp(lo, hi);
    for _ in 0..40 {
        let f1 = residual(w1);
        if !f1.is_finite() {
            break;
        }
        if f1 == 0.0 || (w1 - w0).abs() <= 1e-15 * w1 {
            return in_window(w1, lo, hi, f1, mag);
        }
        let slope = (f1 - f0) / (w1 - w0);
        if !(slope > 0.0) {
            break;
        }
        let next = (w1 - f1 / slope).clamp(lo, hi);
        w0 = w1;
        f0 = f1;
        w1 = next;
    }
    let f_lo = residual(lo);
    let f_hi = residual(hi);
    if !(f_lo <= 0.0 && f_hi >= 0.0) {
        return None;
    }
    Some(refine_root(residual, lo, hi, f_lo, f_hi, 1e-15))
}

fn in_window(w: f64, lo: f64, hi: f64, residual: f64, mag: f64) -> Option<f64> {
    // a clamped iterate that still misses the target means no root in the window
    let edge = w <= lo || w >= hi;
    (!edge || residual.abs() <= 1e-13 * mag).then_some(w)
}

/// One point of the frequency–angle contour.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    /// Signed in-plane emission angle of mode 2 (rad).
    pub theta2: f64,
    pub omega2: f64,
    pub omega1: f64,
    /// Signed in-plane angle of mode 1 (rad).
    pub theta1: f64,
    /// `ω₁ω₂³v₁n₂|sin θ₂| / (n₁|∂g/∂ω₂|)`: the δ-reduced singles integrand, per dθ₂.
    pub jacobian_weight: f64,
    /// ∂g/∂ω₂ at fixed θ₂, where g = ω_p − ω̃₁ − ω₂ − ω₃.
    pub dg_domega2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourResult {
    pub fixed_mode3: ModeSpec,
    pub points: Vec<ContourPoint>,
    /// Largest number of roots found at a single θ₂.
    pub branch_count: usize,
}

/// Precomputed state for repeated closure evaluations with a fixed pump, crystal and mode 3.
pub struct ContourProblem<'a> {
    pub crystal: &'a CrystalConfig,
    pub pump: ModeSpec,
    pub mode3: ModeSpec,
    pub consts: &'a PhysicalConstants,
    kp: WaveVector,
    k3: WaveVector,
    pol: Polarization,
    axis: [f64; 3],
    eval: UniaxialIndex,
}

/// Relative step of the central difference for ∂g/∂ω₂.
const DG_REL_STEP: f64 = 1e-6;

impl<'a> ContourProblem<'a> {
    pub fn new(mode3: &ModeSpec, pump: &ModeSpec, crystal: &'a CrystalConfig, k: &'a PhysicalConstants) -> Result<Self> {
        let kp = mode_to_wavevector(pump, crystal, k)?;
        let k3 = mode_to_wavevector(mode3, crystal, k)?;
        Ok(Self {
            crystal,
            pump: *pump,
            mode3: *mode3,
            consts: k,
            kp,
            k3,
            pol: mode3.pol,
            axis: crystal.optic_axis(),
            eval: UniaxialIndex::new(crystal, mode3.pol, k),
        })
    }

    /// Range of ω₂ for which modes 1 and 2 can both lie inside the window.
    pub fn omega2_range(&self) -> Option<(f64, f64)> {
        let (lo, hi) = self.eval.omega_window();
        let upper = hi.min(self.pump.omega - self.mode3.omega - lo);
        (upper > lo).then_some((lo, upper))
    }

    pub fn mode2(&self, omega2: f64, theta2: f64) -> ModeSpec {
        ModeSpec::in_plane(omega2, theta2, self.pol)
    }

    pub fn closure(&self, omega2: f64, theta2: f64) -> Result<ClosureMode> {
        let k2 = mode_to_wavevector(&self.mode2(omega2, theta2), self.crystal, self.consts)?;
        closure_from_pump_wavevector(&self.kp, &k2, &self.k3, self.pol, self.crystal, self.consts)
    }

    /// Energy residual `ω_p − ω̃₁ − ω₂ − ω₃`; NaN where closure has no solution.
    pub fn energy_residual(&self, omega2: f64, theta2: f64) -> f64 {
        self.residual_along(omega2, &InPlane::new(theta2, self.axis), None).0
    }

    fn residual_along(&self, omega2: f64, dir: &InPlane, guess: Option<f64>) -> (f64, Option<f64>) {
        if !self.eval.contains(omega2) {
            return (f64::NAN, None);
        }
        let k2 = self.eval.index(omega2, dir.cos2) * omega2 / self.consts.c;
        let target = WaveVector::new(
            self.kp.kx - k2 * dir.sin - self.k3.kx,
            self.kp.ky - self.k3.ky,
            self.kp.kz - k2 * dir.cos - self.k3.kz,
        );
        match self.fast_closure(&target, guess) {
            Some(w1) => (self.pump.omega - w1 - omega2 - self.mode3.omega, Some(w1)),
            None => (f64::NAN, None),
        }
    }

    fn fast_closure(&self, target: &WaveVector, guess: Option<f64>) -> Option<f64> {
        let mag = target.norm();
        if !(mag > 0.0) {
            return None;
        }
        let a = self.axis;
        let cos = (target.kx * a[0] + target.ky * a[1] + target.kz * a[2]) / mag;
        let cos2 = cos * cos;
        let c = self.consts.c;
        let (lo, hi) = self.eval.omega_window();
        let residual = |w: f64| self.eval.index(w, cos2) * w / c - mag;
        secant_closure(residual, lo, hi, mag, c, guess)
    }

    /// Roots ω₂ of the energy residual at fixed θ₂.
    pub fn roots_at(&self, theta2: f64, root: &RootSpec) -> Vec<f64> {
        let Some((lo, hi)) = self.omega2_range() else {
            return Vec::new();
        };
        let dir = InPlane::new(theta2, self.axis);
        let mut last = None;
        find_roots(
            |w| {
                let (g, w1) = self.residual_along(w, &dir, last);
                last = w1.or(last);
                g
            },
            lo,
            hi,
            root,
        )
    }

    /// ∂g/∂ω₂ at fixed θ₂ by central difference.
    pub fn dg_domega2(&self, omega2: f64, theta2: f64) -> f64 {
        let dir = InPlane::new(theta2, self.axis);
        let h = omega2 * DG_REL_STEP;
        let up = self.residual_along(omega2 + h, &dir, None).0;
        let down = self.residual_along(omega2 - h, &dir, None).0;
        if up.is_finite() && down.is_finite() {
            return (up - down) / (2.0 * h);
        }
        // one-sided at a window edge
        let mid = self.residual_along(omega2, &dir, None).0;
        if up.is_finite() {
            (up - mid) / h
        } else {
            (mid - down) / h
        }
    }

    /// Builds a fully evaluated contour point at a root.
    pub fn point(&self, theta2: f64, omega2: f64) -> Result<ContourPoint> {
        let k = self.consts;
        let closure = self.closure(omega2, theta2)?;
        let m1 = closure.mode;
        let m2 = self.mode2(omega2, theta2);
        let n1 = closure.index;
        let v1 = m1.group_velocity(self.crystal, k)?;
        let n2 = m2.index(self.crystal, k)?;
        let dg = self.dg_domega2(omega2, theta2);
        let w1 = m1.omega;
        let weight = w1 * omega2.powi(3) * v1 * n2 / (n1 * dg.abs()) * theta2.sin().abs();
        Ok(ContourPoint {
            theta2,
            omega2,
            omega1: w1,
            theta1: m1.signed_theta(),
            jacobian_weight: weight,
            dg_domega2: dg,
        })
    }

    pub fn pump_wavevector(&self) -> WaveVector {
        self.kp
    }

    pub fn mode3_wavevector(&self) -> WaveVector {
        self.k3
    }
}

struct InPlane {
    sin: f64,
    cos: f64,
    cos2: f64,
}

impl InPlane {
    fn new(theta: f64, axis: [f64; 3]) -> Self {
        let (sin, cos) = theta.sin_cos();
        let c = sin * axis[0] + cos * axis[2];
        Self { sin, cos, cos2: c * c }
    }
}

/// Sampling lattice for [`trace_contour`]: signed θ₂ range and node counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceGrid {
    pub theta2_min: f64,
    pub theta2_max: f64,
    pub theta2_nodes: usize,
    pub omega2_nodes: usize,
    /// Optional ω₂ limits (rad/s); the dispersion window applies otherwise.
    #[serde(default)]
    pub omega2_min: Option<f64>,
    #[serde(default)]
    pub omega2_max: Option<f64>,
}

impl Default for TraceGrid {
    fn default() -> Self {
        Self {
            theta2_min: -40f64.to_radians(),
            theta2_max: 40f64.to_radians(),
            theta2_nodes: 321,
            omega2_nodes: 401,
            omega2_min: None,
            omega2_max: None,
        }
    }
}

impl TraceGrid {
    pub fn validate(&self) -> Result<()> {
        let bounds_ok = match (self.omega2_min, self.omega2_max) {
            (Some(lo), Some(hi)) => lo < hi,
            _ => true,
        };
        if !(self.theta2_min < self.theta2_max) || self.theta2_nodes < 2 || self.omega2_nodes < 2 || !bounds_ok {
            return Err(Error::InvalidInput(format!("degenerate trace grid {self:?}")));
        }
        Ok(())
    }

    /// Same ranges with node spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            theta2_nodes: 2 * self.theta2_nodes - 1,
            omega2_nodes: 2 * self.omega2_nodes - 1,
            ..*self
        }
    }

    /// Lattice covering only the given θ₂ and ω₂ ranges.
    pub fn window(theta2: (f64, f64), omega2: (f64, f64), theta2_nodes: usize, omega2_nodes: usize) -> Self {
        Self {
            theta2_min: theta2.0,
            theta2_max: theta2.1,
            theta2_nodes,
            omega2_nodes,
            omega2_min: Some(omega2.0),
            omega2_max: Some(omega2.1),
        }
    }
}

/// A zero crossing of g on a lattice edge, with everything the rate integrals need.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub theta2: f64,
    pub omega2: f64,
    pub omega1: f64,
    pub theta1: f64,
    /// `ω_p · ω₁ω₂³v₁n₂|sin θ₂| / (n₁ |∇g|)`, with ∇ taken in (θ₂, ω₂/ω_p).
    /// Integrating it over arc length in the same coordinates gives
    /// `∫∫ ω₁ω₂³v₁n₂|sin θ₂|/n₁ · δ(g) dθ₂ dω₂`.
    pub density: f64,
}

/// Straight piece of the contour between two edge crossings of one lattice cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourSegment {
    pub a: TracePoint,
    pub b: TracePoint,
    /// Length in (θ₂ [rad], ω₂/ω_p) coordinates.
    pub length: f64,
}

/// Which contour-point quantity a [`Window`] constrains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    Theta2,
    Omega2,
    Theta1,
    Omega1,
}

/// Closed interval constraint on one quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub quantity: Quantity,
    pub lo: f64,
    pub hi: f64,
}

impl TracePoint {
    fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Theta2 => self.theta2,
            Quantity::Omega2 => self.omega2,
            Quantity::Theta1 => self.theta1,
            Quantity::Omega1 => self.omega1,
        }
    }
}

impl ContourSegment {
    /// Parameter interval of the segment (linear interpolation) inside every window.
    fn clip(&self, windows: &[Window]) -> Option<(f64, f64)> {
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for w in windows {
            let va = self.a.get(w.quantity);
            let vb = self.b.get(w.quantity);
            let dv = vb - va;
            if dv == 0.0 {
                if va < w.lo || va > w.hi {
                    return None;
                }
                continue;
            }
            let (mut s0, mut s1) = ((w.lo - va) / dv, (w.hi - va) / dv);
            if s0 > s1 {
                std::mem::swap(&mut s0, &mut s1);
            }
            t0 = t0.max(s0);
            t1 = t1.min(s1);
            if t0 >= t1 {
                return None;
            }
        }
        Some((t0, t1))
    }

    /// Trapezoidal arc-length integral of the density over the clipped part.
    fn integral(&self, windows: &[Window]) -> f64 {
        let Some((t0, t1)) = self.clip(windows) else {
            return 0.0;
        };
        let da = self.a.density;
        let db = self.b.density;
        let d0 = da + (db - da) * t0;
        let d1 = da + (db - da) * t1;
        0.5 * (d0 + d1) * (t1 - t0) * self.length
    }
}

/// Contour of mode 2 at fixed mode 3, as line segments from marching squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourTrace {
    pub fixed_mode3: ModeSpec,
    pub segments: Vec<ContourSegment>,
    /// True when a crossing lies on the outer θ₂ boundary of the lattice, i.e.
    /// the contour continues beyond the traced range.
    pub clipped_by_grid: bool,
    /// True when the contour ends inside the lattice because mode 1 or mode 2
    /// leaves the dispersion window.
    pub truncated: bool,
}

impl ContourTrace {
    /// `∫∫ ω₁ω₂³v₁n₂|sin θ₂|/n₁ · δ(g) dθ₂ dω₂` over the whole traced contour.
    pub fn integral(&self) -> f64 {
        self.integral_within(&[])
    }

    /// Same integral restricted to points inside every window.
    pub fn integral_within(&self, windows: &[Window]) -> f64 {
        self.segments.iter().map(|s| s.integral(windows)).fold(0.0, |a, b| a + b)
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Relative step of the central difference for ∂g/∂θ₂ (rad).
const DG_THETA_STEP: f64 = 1e-7;

impl ContourProblem<'_> {
    /// ∂g/∂θ₂ at fixed ω₂.
    pub fn dg_dtheta2(&self, omega2: f64, theta2: f64) -> f64 {
        let h = DG_THETA_STEP;
        let up = self.energy_residual(omega2, theta2 + h);
        let down = self.energy_residual(omega2, theta2 - h);
        (up - down) / (2.0 * h)
    }

    /// Full evaluation of a crossing; `None` if closure or dispersion fails there.
    pub fn trace_point(&self, theta2: f64, omega2: f64) -> Option<TracePoint> {
        let k = self.consts;
        let closure = self.closure(omega2, theta2).ok()?;
        let m1 = closure.mode;
        let v1 = m1.group_velocity(self.crystal, k).ok()?;
        let n2 = self.mode2(omega2, theta2).index(self.crystal, k).ok()?;
        let scale = self.pump.omega;
        let g_w = self.dg_domega2(omega2, theta2) * scale;
        let g_t = self.dg_dtheta2(omega2, theta2);
        let grad = g_w.hypot(g_t);
        if !grad.is_finite() {
            return None;
        }
        let h = m1.omega * omega2.powi(3) * v1 * n2 / closure.index * theta2.sin().abs();
        let density = if h == 0.0 { 0.0 } else { scale * h / grad };
        density.is_finite().then_some(TracePoint {
            theta2,
            omega2,
            omega1: m1.omega,
            theta1: m1.signed_theta(),
            density,
        })
    }
}

/// Refines a root of `g` on `[a, b]` to an absolute tolerance relative to the edge length.
fn refine_on_edge<G: FnMut(f64) -> f64>(mut g: G, a: f64, b: f64, ga: f64, gb: f64) -> f64 {
    // map onto s ∈ [1, 2] so the relative tolerance acts on the edge fraction
    let len = b - a;
    let s = refine_root(|s| g(a + (s - 1.0) * len), 1.0, 2.0, ga, gb, 1e-13);
    a + (s - 1.0) * len
}

/// Traces the zero set of g over the lattice by marching squares.
pub fn trace_contour(
    mode3: &ModeSpec,
    pump: &ModeSpec,
    crystal: &CrystalConfig,
    grid: &TraceGrid,
    k: &PhysicalConstants,
) -> Result<ContourTrace> {
    grid.validate()?;
    let problem = ContourProblem::new(mode3, pump, crystal, k)?;
    let empty = ContourTrace {
        fixed_mode3: *mode3,
        segments: Vec::new(),
        clipped_by_grid: false,
        truncated: false,
    };
    let Some((w_lo, w_hi)) = problem.omega2_range() else {
        return Ok(empty);
    };
    let w_lo = grid.omega2_min.map_or(w_lo, |b| b.max(w_lo));
    let w_hi = grid.omega2_max.map_or(w_hi, |b| b.min(w_hi));
    if !(w_lo < w_hi) {
        return Ok(empty);
    }
    let nt = grid.theta2_nodes;
    let nw = grid.omega2_nodes;
    let theta_at = |i: usize| {
        if i + 1 == nt {
            grid.theta2_max
        } else {
            grid.theta2_min + (grid.theta2_max - grid.theta2_min) * i as f64 / (nt - 1) as f64
        }
    };
    let omega_at = |j: usize| {
        if j + 1 == nw {
            w_hi
        } else {
            w_lo + (w_hi - w_lo) * j as f64 / (nw - 1) as f64
        }
    };

    // residual lattice, one θ₂ row per task
    let rows: Vec<Vec<f64>> = crate::par::map_range(nt, |i| {
        let dir = InPlane::new(theta_at(i), problem.axis);
        let mut last = None;
        (0..nw)
            .map(|j| {
                let (g, w1) = problem.residual_along(omega_at(j), &dir, last);
                last = w1.or(last);
                g
            })
            .collect()
    });
    let crosses = |ga: f64, gb: f64| ga.is_finite() && gb.is_finite() && (ga > 0.0) != (gb > 0.0);

    // crossings on edges of constant θ₂ (ω varies) and constant ω₂ (θ varies)
    type EdgeRow = (Vec<Option<TracePoint>>, Vec<Option<TracePoint>>);
    let edges: Vec<EdgeRow> = crate::par::map_range(nt, |i| {
        let t = theta_at(i);
        let dir = InPlane::new(t, problem.axis);
        let along_w: Vec<Option<TracePoint>> = (0..nw - 1)
            .map(|j| {
                let (ga, gb) = (rows[i][j], rows[i][j + 1]);
                crosses(ga, gb).then(|| {
                    let w = refine_on_edge(|w| problem.residual_along(w, &dir, None).0, omega_at(j), omega_at(j + 1), ga, gb);
                    problem.trace_point(t, w)
                })?
            })
            .collect();
        let along_t: Vec<Option<TracePoint>> = if i + 1 < nt {
            (0..nw)
                .map(|j| {
                    let (ga, gb) = (rows[i][j], rows[i + 1][j]);
                    crosses(ga, gb).then(|| {
                        let w = omega_at(j);
                        let th = refine_on_edge(|th| problem.energy_residual(w, th), t, theta_at(i + 1), ga, gb);
                        problem.trace_point(th, w)
                    })?
                })
                .collect()
        } else {
            Vec::new()
        };
        (along_w, along_t)
    });

    let scale = pump.omega;
    let segment = |a: TracePoint, b: TracePoint| ContourSegment {
        a,
        b,
        length: (b.theta2 - a.theta2).hypot((b.omega2 - a.omega2) / scale),
    };
    let mut segments = Vec::new();
    let mut truncated = false;
    for i in 0..nt - 1 {
        for j in 0..nw - 1 {
            let bottom = edges[i].1[j];
            let top = edges[i].1[j + 1];
            let left = edges[i].0[j];
            let right = edges[i + 1].0[j];
            let found: Vec<TracePoint> = [bottom, right, top, left].into_iter().flatten().collect();
            match found.len() {
                2 => segments.push(segment(found[0], found[1])),
                4 => {
                    let (bottom, right, top, left) = (found[0], found[1], found[2], found[3]);
                    let center = problem.energy_residual(
                        0.5 * (omega_at(j) + omega_at(j + 1)),
                        0.5 * (theta_at(i) + theta_at(i + 1)),
                    );
                    if (center > 0.0) == (rows[i][j] > 0.0) {
                        segments.push(segment(bottom, right));
                        segments.push(segment(left, top));
                    } else {
                        segments.push(segment(left, bottom));
                        segments.push(segment(right, top));
                    }
                }
                0 => {}
                // odd counts only occur next to cells where closure fails
                _ => truncated = true,
            }
        }
    }
    let clipped_by_grid = edges[0].0.iter().chain(edges[nt - 1].0.iter()).any(Option::is_some);
    Ok(ContourTrace {
        fixed_mode3: *mode3,
        segments,
        clipped_by_grid,
        truncated,
    })
}

/// Every (θ₂, ω₂) root on the grid, sorted by θ₂ then ω₂.
pub fn solve_contour(
    mode3: &ModeSpec,
    pump: &ModeSpec,
    crystal: &CrystalConfig,
    theta2_grid: &[f64],
    root: &RootSpec,
    k: &PhysicalConstants,
) -> Result<ContourResult> {
    if theta2_grid.is_empty() {
        return Err(Error::InvalidInput("empty θ₂ grid".into()));
    }
    let problem = ContourProblem::new(mode3, pump, crystal, k)?;
    let mut points = Vec::new();
    let mut branch_count = 0;
    for &t2 in theta2_grid {
        let roots = problem.roots_at(t2, root);
        branch_count = branch_count.max(roots.len());
        for w2 in roots {
            // a root can sit where the closure is marginal; skip those points
            if let Ok(p) = problem.point(t2, w2) {
                points.push(p);
            }
        }
    }
    points.sort_by(|a, b| a.theta2.total_cmp(&b.theta2).then(a.omega2.total_cmp(&b.omega2)));
    Ok(ContourResult {
        fixed_mode3: *mode3,
        points,
        branch_count,
    })
}

/// Singles density at fixed mode 3 sampled over crystal orientations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationScan {
    /// `(θ_c, density)` pairs in grid order.
    pub points: Vec<(f64, f64)>,
    /// Orientation of the maximum, refined onto the edge of the density jump
    /// when the maximum sits next to one. `None` if the density vanishes everywhere.
    pub argmax: Option<f64>,
    pub argmax_density: f64,
}

/// Bisection stops once the bracket is this narrow (rad).
const ARGMAX_TOL: f64 = 1e-9;

/// Evaluates [`crate::rates::singles_density`] at every orientation in `theta_c_grid`
/// and locates the maximum. The density rises slowly up to the orientation
/// where the degenerate point becomes phase matched and then drops, so the
/// grid maximum is bracketed against its left neighbour and bisected towards
/// the jump.
pub fn orientation_scan(
    pump: &crate::geometry::BeamConfig,
    mode3: &ModeSpec,
    crystal_template: &CrystalConfig,
    theta_c_grid: &[f64],
    k: &PhysicalConstants,
) -> Result<OrientationScan> {
    if theta_c_grid.is_empty() {
        return Err(Error::InvalidInput("empty orientation grid".into()));
    }
    if let Some(t) = theta_c_grid
        .iter()
        .find(|t| !(0.0..=std::f64::consts::FRAC_PI_2).contains(*t))
    {
        return Err(Error::InvalidInput(format!("orientation {t} rad outside [0, π/2]")));
    }
    let density = |theta_c: f64| {
        crate::rates::singles_density(mode3, pump, &crystal_template.with_orientation(theta_c), k)
    };
    let values = crate::par::map(theta_c_grid, |&t| density(t));
    let mut points = Vec::with_capacity(values.len());
    for (&t, v) in theta_c_grid.iter().zip(values) {
        points.push((t, v?));
    }
    let best = points
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, f64)>, (i, &(_, v))| match acc {
            Some((_, b)) if b >= v => acc,
            _ if v > 0.0 => Some((i, v)),
            _ => acc,
        });
    let Some((i, s_best)) = best else {
        return Ok(OrientationScan { points, argmax: None, argmax_density: 0.0 });
    };
    if i == 0 {
        return Ok(OrientationScan { argmax: Some(points[0].0), argmax_density: s_best, points });
    }
    let (mut left, mut right) = (points[i - 1].0, points[i].0);
    let mut s_right = s_best;
    while right - left > ARGMAX_TOL {
        let mid = 0.5 * (left + right);
        let s_mid = density(mid)?;
        // anything within the plateau counts as the peak side
        if s_mid >= s_right * (1.0 - 5e-4) {
            right = mid;
            s_right = s_mid;
        } else {
            left = mid;
        }
    }
    Ok(OrientationScan {
        points,
        argmax: Some(right),
        argmax_density: s_right,
    })
}
