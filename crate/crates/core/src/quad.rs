//! Tensor-product Gauss-Legendre quadrature over axis-aligned rectangles,
//! with dyadic refinement until successive passes agree to a relative
//! tolerance.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::{C64, Result, SimError};

/// Parameters of the quadrature engine.
///
/// `points` is the Gauss-Legendre order per axis within one cell. Refinement
/// pass `r` splits the rectangle into `2^r x 2^r` cells and re-applies the
/// rule per cell; the result is accepted once two successive passes agree to
/// `rel_tolerance` in relative terms.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSpec {
    pub points: usize,
    pub max_refinements: u32,
    pub rel_tolerance: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            points: 32,
            max_refinements: 4,
            rel_tolerance: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(SimError::Validation(
                "quadrature points per axis must be at least 2".into(),
            ));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(SimError::Validation(
                "quadrature tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
///
/// Computed once per order by Newton iteration on the Legendre polynomial
/// and cached for reuse.
pub fn gauss_legendre(n: usize) -> std::sync::Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, std::sync::Arc<Vec<(f64, f64)>>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| std::sync::Arc::new(compute_gauss_legendre(n)))
        .clone()
}

fn compute_gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "rule order must be positive");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Standard Chebyshev-based starting guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    // Roots come out in descending order; flip so grids ascend.
    out.reverse();
    out
}

/// Value and derivative of the Legendre polynomial P_n at x.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let j = j as f64;
        let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss-Legendre points and weights covering the rectangle
/// `[x0, x1] x [y0, y1]`, `n` points per axis, x-major ordering.
pub fn tensor_grid(x0: f64, x1: f64, y0: f64, y1: f64, n: usize) -> (Vec<(f64, f64)>, Vec<f64>) {
    let rule = gauss_legendre(n);
    let (hx, cx) = (0.5 * (x1 - x0), 0.5 * (x0 + x1));
    let (hy, cy) = (0.5 * (y1 - y0), 0.5 * (y0 + y1));
    let mut pts = Vec::with_capacity(n * n);
    let mut wts = Vec::with_capacity(n * n);
    for &(xi, wi) in rule.iter() {
        for &(yj, wj) in rule.iter() {
            pts.push((cx + hx * xi, cy + hy * yj));
            wts.push(hx * wi * hy * wj);
        }
    }
    (pts, wts)
}

fn single_pass<F: Fn(f64, f64) -> C64>(
    f: &F,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    n: usize,
    divisions: usize,
) -> C64 {
    let rule = gauss_legendre(n);
    let dx = (x1 - x0) / divisions as f64;
    let dy = (y1 - y0) / divisions as f64;
    let mut total = C64::new(0.0, 0.0);
    for cx in 0..divisions {
        for cy in 0..divisions {
            let (ax, bx) = (x0 + cx as f64 * dx, x0 + (cx + 1) as f64 * dx);
            let (ay, by) = (y0 + cy as f64 * dy, y0 + (cy + 1) as f64 * dy);
            let (hx, mx) = (0.5 * (bx - ax), 0.5 * (ax + bx));
            let (hy, my) = (0.5 * (by - ay), 0.5 * (ay + by));
            for &(xi, wi) in rule.iter() {
                for &(yj, wj) in rule.iter() {
                    total += f(mx + hx * xi, my + hy * yj) * (hx * wi * hy * wj);
                }
            }
        }
    }
    total
}

/// Integrate `f` over `[x0, x1] x [y0, y1]`, refining dyadically until two
/// successive passes agree to `spec.rel_tolerance`.
pub fn integrate_rect<F: Fn(f64, f64) -> C64>(
    f: &F,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    spec: &QuadratureSpec,
) -> Result<C64> {
    spec.validate()?;
    let mut prev = single_pass(f, x0, x1, y0, y1, spec.points, 1);
    let mut last_change = f64::INFINITY;
    for r in 1..=spec.max_refinements {
        let cur = single_pass(f, x0, x1, y0, y1, spec.points, 1 << r);
        let scale = cur.norm().max(f64::MIN_POSITIVE);
        last_change = (cur - prev).norm() / scale;
        if last_change <= spec.rel_tolerance {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(SimError::QuadratureNonConvergence {
        last_change,
        refinements: spec.max_refinements,
    })
}

/// Real-valued counterpart of [`integrate_rect`] for intensity integrands.
pub fn integrate_rect_real<F: Fn(f64, f64) -> f64>(
    f: &F,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    integrate_rect(&|x, y| C64::new(f(x, y), 0.0), x0, x1, y0, y1, spec).map(|v| v.re)
}
