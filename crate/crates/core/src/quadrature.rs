//! Numerical kernels shared by the rate calculations: adaptive 1-D
//! quadrature, nested quadrature up to three dimensions, and bracketed
//! root finding driven by a uniform sign-change scan.
//!
//! Everything here is deterministic: the same inputs always produce the same
//! sequence of function evaluations and the same floating-point result.

use std::cell::{Cell, RefCell};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadRule {
    GaussLegendre15,
    Trapezoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: usize,
    pub rule: QuadRule,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-300,
            max_depth: 40,
            rule: QuadRule::GaussLegendre15,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_depth >= 1) {
            return Err(Error::InvalidInput(format!("bad quadrature spec {self:?}")));
        }
        Ok(())
    }
}

/// An integral estimate with its accumulated error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Nodes and weights of the 15-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre_15() -> &'static [(f64, f64); 15] {
    static TABLE: OnceLock<[(f64, f64); 15]> = OnceLock::new();
    TABLE.get_or_init(|| gauss_legendre_table::<15>())
}

fn gauss_legendre_table<const N: usize>() -> [(f64, f64); N] {
    let mut out = [(0.0, 0.0); N];
    out.copy_from_slice(&gauss_legendre(N));
    out
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [−1, 1],
/// ordered by decreasing node.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    (0..n)
        .map(|i| {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Composite Gauss–Legendre nodes and weights: an `order`-point rule on each
/// interval between consecutive breakpoints. Nodes come out in ascending order.
pub fn composite_gauss_legendre(breakpoints: &[f64], order: usize) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(order);
    breakpoints
        .windows(2)
        .flat_map(|w| {
            let (a, b) = (w[0], w[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            rule.iter().rev().map(move |&(x, wt)| (mid + half * x, half * wt))
        })
        .collect()
}

/// `panels + 1` equally spaced breakpoints on `[a, b]`.
pub fn uniform_breakpoints(a: f64, b: f64, panels: usize) -> Vec<f64> {
    let panels = panels.max(1);
    (0..=panels)
        .map(|i| if i == panels { b } else { a + (b - a) * i as f64 / panels as f64 })
        .collect()
}

fn apply_rule<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, rule: QuadRule) -> f64 {
    match rule {
        QuadRule::GaussLegendre15 => {
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            gauss_legendre_15()
                .iter()
                .map(|&(x, w)| w * f(mid + half * x))
                .sum::<f64>()
                * half
        }
        QuadRule::Trapezoid => 0.5 * (b - a) * (f(a) + f(b)),
    }
}

struct Adaptive<'a, F> {
    f: &'a mut F,
    spec: QuadratureSpec,
    error: f64,
    failed: bool,
}

impl<F: FnMut(f64) -> f64> Adaptive<'_, F> {
    fn recurse(&mut self, a: f64, b: f64, whole: f64, tol: f64, depth: usize) -> f64 {
        let mid = 0.5 * (a + b);
        let left = apply_rule(self.f, a, mid, self.spec.rule);
        let right = apply_rule(self.f, mid, b, self.spec.rule);
        let refined = left + right;
        let err = (refined - whole).abs();
        if err <= tol || !err.is_finite() {
            self.error += err;
            return refined;
        }
        if depth >= self.spec.max_depth {
            self.failed = true;
            self.error += err;
            return refined;
        }
        self.recurse(a, mid, left, 0.5 * tol, depth + 1)
            + self.recurse(mid, b, right, 0.5 * tol, depth + 1)
    }
}

/// Adaptive bisection of `[a, b]` until the local two-level difference is below tolerance.
pub fn integrate_1d<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral> {
    if !(a < b) {
        if a == b {
            return Ok(Integral { value: 0.0, error: 0.0 });
        }
        return Err(Error::InvalidInput(format!("integration bounds a={a} not below b={b}")));
    }
    let whole = apply_rule(&mut f, a, b, spec.rule);
    let tol = spec.abs_tol.max(spec.rel_tol * whole.abs());
    let mut ad = Adaptive {
        f: &mut f,
        spec: *spec,
        error: 0.0,
        failed: false,
    };
    let value = ad.recurse(a, b, whole, tol, 1);
    let (error, failed) = (ad.error, ad.failed);
    if failed || !value.is_finite() {
        return Err(Error::QuadratureNotConverged {
            estimate: value,
            error,
            depth: spec.max_depth,
        });
    }
    Ok(Integral { value, error })
}

/// Sum of adaptive integrals over consecutive panels `[p_i, p_{i+1}]`.
pub fn integrate_1d_panels<F: FnMut(f64) -> f64>(mut f: F, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<Integral> {
    let mut total = Integral { value: 0.0, error: 0.0 };
    for w in breakpoints.windows(2) {
        let part = integrate_1d(&mut f, w[0], w[1], spec)?;
        total.value += part.value;
        total.error += part.error;
    }
    Ok(total)
}

/// Nested integration over a box of up to three dimensions. The integrand
/// receives a point with one coordinate per box axis; the last axis is innermost.
pub fn integrate_nd<F: Fn(&[f64]) -> f64>(f: F, bounds: &[(f64, f64)], spec: &QuadratureSpec) -> Result<Integral> {
    if bounds.is_empty() || bounds.len() > 3 {
        return Err(Error::InvalidInput(format!(
            "integrate_nd supports 1 to 3 dimensions, got {}",
            bounds.len()
        )));
    }
    let mut point = vec![0.0; bounds.len()];
    nested(&f, bounds, 0, &mut point, spec)
}

fn nested<F: Fn(&[f64]) -> f64>(
    f: &F,
    bounds: &[(f64, f64)],
    axis: usize,
    point: &mut Vec<f64>,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    let (a, b) = bounds[axis];
    if axis + 1 == bounds.len() {
        let p = RefCell::new(std::mem::take(point));
        let out = integrate_1d(
            |x| {
                let mut p = p.borrow_mut();
                p[axis] = x;
                f(&p)
            },
            a,
            b,
            spec,
        );
        *point = p.into_inner();
        return out;
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_err = Cell::new(0.0f64);
    let p = RefCell::new(std::mem::take(point));
    let outer = integrate_1d(
        |x| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            let mut local = p.borrow().clone();
            local[axis] = x;
            match nested(f, bounds, axis + 1, &mut local, spec) {
                Ok(r) => {
                    inner_err.set(inner_err.get().max(r.error));
                    r.value
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        a,
        b,
        spec,
    );
    *point = p.into_inner();
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    Ok(Integral {
        value: outer.value,
        error: outer.error + inner_err.get() * (b - a),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSpec {
    /// Relative bracket width at which refinement stops.
    pub bracket_tol: f64,
    /// Number of uniform scan points over the search interval.
    pub scan_points: usize,
}

impl Default for RootSpec {
    fn default() -> Self {
        Self {
            bracket_tol: 1e-12,
            scan_points: 2000,
        }
    }
}

/// Brent refinement of a bracketed root; `ga` and `gb` must have opposite signs.
pub fn refine_root<G: FnMut(f64) -> f64>(
    mut g: G,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    rel_tol: f64,
) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * rel_tol * b.abs().max(f64::MIN_POSITIVE);
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = g(b);
        if !fb.is_finite() {
            // stepped onto an undefined point; fall back to the bracket midpoint
            b = 0.5 * (a + c);
            fb = g(b);
        }
    }
    b
}

/// All roots of `g` on `[a, b]` found by a uniform sign-change scan plus
/// bracketed refinement. Non-finite samples break brackets. Roots closer
/// than the bracket tolerance are merged; the result is sorted ascending.
pub fn find_roots<G: FnMut(f64) -> f64>(mut g: G, a: f64, b: f64, spec: &RootSpec) -> Vec<f64> {
    let n = spec.scan_points.max(2);
    let step = (b - a) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| if i + 1 == n { b } else { a + step * i as f64 }).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut roots: Vec<f64> = Vec::new();
    for i in 0..n - 1 {
        let (g0, g1) = (gs[i], gs[i + 1]);
        if !(g0.is_finite() && g1.is_finite()) {
            continue;
        }
        if g0 == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if i + 2 == n && g1 == 0.0 {
            roots.push(xs[i + 1]);
            continue;
        }
        if (g0 < 0.0) != (g1 < 0.0) && g1 != 0.0 {
            roots.push(refine_root(&mut g, xs[i], xs[i + 1], g0, g1, spec.bracket_tol));
        }
    }
    roots.sort_by(f64::total_cmp);
    let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    roots.dedup_by(|x, y| (*x - *y).abs() <= spec.bracket_tol * scale * 10.0);
    roots
}

/// Tail of ∫ sinc²(u) du beyond `u0 = m·π` (one side), from the asymptotic
/// expansion of π/2 − Si(2u0); accurate to better than 1e−12 for m ≥ 20.
pub fn sinc_sq_tail_at_lobe(m: usize) -> f64 {
    let z = 2.0 * m as f64 * std::f64::consts::PI;
    // ∫_{u0}^∞ sin²u/u² du = sin²u0/u0 + π/2 − Si(2u0), and sin(m π) = 0
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    // auxiliary f(z) series; cos z = 1, sin z = 0 at these points
    inv * (1.0 - 2.0 * inv2 + 24.0 * inv2 * inv2 - 720.0 * inv2 * inv2 * inv2)
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
