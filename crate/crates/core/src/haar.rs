//! Haar scaling and wavelet functions, patch-restricted 2D bases, and
//! projection/reconstruction of fields on slice planes.
//!
//! A patch is the square support of one 2D scaling function, congruent to a
//! detector window. All supports are half-open so patches tile the plane
//! without double counting and point evaluation stays deterministic on cell
//! edges.

use crate::quad::{integrate_rect, QuadratureSpec};
use crate::{C64, Result, SimError};

/// Square patch of side `2^(-j0)` on a slice plane.
///
/// The patch covers `x in [2^(-j0) k, 2^(-j0) (k+1))`. The y extent follows
/// the mode convention used throughout: the y factor of every basis function
/// is evaluated at `y - j0`, so the patch covers
/// `y in [2^(-j0) kp + j0, 2^(-j0) (kp+1) + j0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct PatchIndex {
    pub j0: i32,
    pub k: i64,
    pub kp: i64,
}

impl PatchIndex {
    /// Side length `2^(-j0)`.
    pub fn side(&self) -> f64 {
        2f64.powi(-self.j0)
    }

    /// Additive shift applied to the argument of every y factor.
    pub fn y_shift(&self) -> f64 {
        self.j0 as f64
    }

    /// Half-open x support `[x0, x1)`.
    pub fn x_range(&self) -> (f64, f64) {
        let s = self.side();
        (s * self.k as f64, s * (self.k + 1) as f64)
    }

    /// Half-open y support `[y0, y1)` in plane coordinates.
    pub fn y_range(&self) -> (f64, f64) {
        let s = self.side();
        (
            s * self.kp as f64 + self.y_shift(),
            s * (self.kp + 1) as f64 + self.y_shift(),
        )
    }

    /// Center of the patch in plane coordinates.
    pub fn center(&self) -> (f64, f64) {
        let (x0, x1) = self.x_range();
        let (y0, y1) = self.y_range();
        (0.5 * (x0 + x1), 0.5 * (y0 + y1))
    }
}

/// Value of the 1D Haar scaling function `phi_{j,k}(x) = 2^(j/2) phi(2^j x - k)`
/// with `phi` the indicator of `[0, 1)`.
pub fn scaling_1d(j: i32, k: i64, x: f64) -> f64 {
    let t = 2f64.powi(j) * x - k as f64;
    if (0.0..1.0).contains(&t) {
        2f64.powi(j).sqrt()
    } else {
        0.0
    }
}

/// Value of the 1D Haar wavelet `psi_{m,n}(x)`: `+2^(m/2)` on the first half
/// of its support, `-2^(m/2)` on the second half.
pub fn wavelet_1d(m: i32, n: i64, x: f64) -> f64 {
    let t = 2f64.powi(m) * x - n as f64;
    let amp = 2f64.powi(m).sqrt();
    if (0.0..0.5).contains(&t) {
        amp
    } else if (0.5..1.0).contains(&t) {
        -amp
    } else {
        0.0
    }
}

/// One separable factor of a 2D basis function: either the patch scaling
/// function or a supported wavelet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AxisFactor {
    Scaling { j: i32, k: i64 },
    Wavelet { m: i32, n: i64 },
}

impl AxisFactor {
    fn eval(&self, t: f64) -> f64 {
        match *self {
            AxisFactor::Scaling { j, k } => scaling_1d(j, k, t),
            AxisFactor::Wavelet { m, n } => wavelet_1d(m, n, t),
        }
    }

    /// Half-open support `[a, b)` in the factor's own coordinate.
    fn support(&self) -> (f64, f64) {
        match *self {
            AxisFactor::Scaling { j, k } => {
                let s = 2f64.powi(-j);
                (s * k as f64, s * (k + 1) as f64)
            }
            AxisFactor::Wavelet { m, n } => {
                let s = 2f64.powi(-m);
                (s * n as f64, s * (n + 1) as f64)
            }
        }
    }

    /// Sign-constant cells `(a, b, value)` covering the support.
    fn sign_cells(&self) -> Vec<(f64, f64, f64)> {
        let (a, b) = self.support();
        match *self {
            AxisFactor::Scaling { j, .. } => vec![(a, b, 2f64.powi(j).sqrt())],
            AxisFactor::Wavelet { m, .. } => {
                let amp = 2f64.powi(m).sqrt();
                let mid = 0.5 * (a + b);
                vec![(a, mid, amp), (mid, b, -amp)]
            }
        }
    }

    /// Key used for the deterministic basis ordering. Scaling factors sort
    /// before any wavelet at the same patch (sentinel level `j0 - 1`).
    fn sort_key(&self, j0: i32) -> (i32, i64) {
        match *self {
            AxisFactor::Scaling { k, .. } => (j0 - 1, k),
            AxisFactor::Wavelet { m, n } => (m, n),
        }
    }
}

/// Kind of a 2D basis function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Scaling,
    Wavelet,
}

/// One 2D basis function `g(x, y) = f_x(x) * f_y(y - j0)` on a patch.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HaarBasisFn {
    pub patch: PatchIndex,
    pub x_factor: AxisFactor,
    pub y_factor: AxisFactor,
    /// 1-based position in the deterministic patch ordering; 1 is the
    /// scaling function.
    pub ordinal: usize,
}

impl HaarBasisFn {
    pub fn kind(&self) -> BasisKind {
        match (self.x_factor, self.y_factor) {
            (AxisFactor::Scaling { .. }, AxisFactor::Scaling { .. }) => BasisKind::Scaling,
            _ => BasisKind::Wavelet,
        }
    }

    /// Point evaluation in plane coordinates.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.x_factor.eval(x) * self.y_factor.eval(y - self.patch.y_shift())
    }

    /// Sign-constant rectangles `(x0, x1, y0, y1, value)` in plane
    /// coordinates; the function is `value` inside each and zero elsewhere.
    pub fn sign_rects(&self) -> Vec<(f64, f64, f64, f64, f64)> {
        let shift = self.patch.y_shift();
        let mut rects = Vec::new();
        for &(x0, x1, vx) in &self.x_factor.sign_cells() {
            for &(y0, y1, vy) in &self.y_factor.sign_cells() {
                rects.push((x0, x1, y0 + shift, y1 + shift, vx * vy));
            }
        }
        rects
    }
}

fn axis_factors(j0: i32, k: i64, max_level: i32) -> Vec<AxisFactor> {
    let mut out = vec![AxisFactor::Scaling { j: j0, k }];
    for m in j0..=max_level {
        let stride = 1i64 << (m - j0) as u32;
        for n in stride * k..stride * (k + 1) {
            out.push(AxisFactor::Wavelet { m, n });
        }
    }
    out
}

/// All 2D basis functions supported on `patch` with wavelet levels up to
/// `max_level`, in the deterministic ordering: the scaling function first,
/// then wavelet-bearing functions sorted by (m, n, m', n') with scaling
/// factors sorting before wavelets on their axis.
pub fn patch_basis(patch: PatchIndex, max_level: i32) -> Vec<HaarBasisFn> {
    assert!(
        max_level >= patch.j0,
        "max_level must be at least the patch scale j0"
    );
    let fx = axis_factors(patch.j0, patch.k, max_level);
    let fy = axis_factors(patch.j0, patch.kp, max_level);
    let mut fns = Vec::with_capacity(fx.len() * fy.len());
    for &x_factor in &fx {
        for &y_factor in &fy {
            fns.push(HaarBasisFn {
                patch,
                x_factor,
                y_factor,
                ordinal: 0,
            });
        }
    }
    fns.sort_by_key(|f| {
        let kx = f.x_factor.sort_key(patch.j0);
        let ky = f.y_factor.sort_key(patch.j0);
        (kx.0, kx.1, ky.0, ky.1)
    });
    for (i, f) in fns.iter_mut().enumerate() {
        f.ordinal = i + 1;
    }
    fns
}

/// Projection `<g, E> = integral of g(x, y) E(x, y)` over the patch.
///
/// The integral is split over the basis function's sign-constant cells so
/// the quadrature only ever sees a smooth integrand.
pub fn project<F: Fn(f64, f64) -> C64>(
    field: &F,
    basis_fn: &HaarBasisFn,
    quad: &QuadratureSpec,
) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    for (x0, x1, y0, y1, value) in basis_fn.sign_rects() {
        total += integrate_rect(field, x0, x1, y0, y1, quad)? * value;
    }
    Ok(total)
}

/// Pointwise reconstruction `sum_i A_i g_i(x, y)`.
pub fn reconstruct(
    coeffs: &[C64],
    basis: &[HaarBasisFn],
    x: f64,
    y: f64,
) -> Result<C64> {
    if coeffs.len() != basis.len() {
        return Err(SimError::LengthMismatch(format!(
            "{} coefficients against {} basis functions",
            coeffs.len(),
            basis.len()
        )));
    }
    Ok(basis
        .iter()
        .zip(coeffs)
        .map(|(g, a)| a * g.eval(x, y))
        .fold(C64::new(0.0, 0.0), |acc, v| acc + v))
}

/// Breakpoints of a piecewise-constant axis profile in plane coordinates.
fn axis_breaks(f: &AxisFactor, shift: f64) -> Vec<f64> {
    f.sign_cells()
        .iter()
        .flat_map(|&(a, b, _)| [a + shift, b + shift])
        .collect()
}

fn overlap_1d(a: &AxisFactor, a_shift: f64, b: &AxisFactor, b_shift: f64) -> f64 {
    let mut breaks: Vec<f64> = axis_breaks(a, a_shift);
    breaks.extend(axis_breaks(b, b_shift));
    breaks.sort_by(|p, q| p.partial_cmp(q).unwrap());
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let mid = 0.5 * (lo + hi);
        total += a.eval(mid - a_shift) * b.eval(mid - b_shift) * (hi - lo);
    }
    total
}

/// Exact L2 inner product of two basis functions, evaluated analytically by
/// piecewise-constant integration (no quadrature error).
pub fn overlap(a: &HaarBasisFn, b: &HaarBasisFn) -> f64 {
    let ox = overlap_1d(&a.x_factor, 0.0, &b.x_factor, 0.0);
    if ox == 0.0 {
        return 0.0;
    }
    ox * overlap_1d(
        &a.y_factor,
        a.patch.y_shift(),
        &b.y_factor,
        b.patch.y_shift(),
    )
}
