//! Scalar Helmholtz propagation: the free-space Green's function, the
//! Kirchhoff surface integral (the brute-force oracle), the far-field
//! small-slit closed form, cascaded-aperture diffraction, the phase-shifter
//! element, and the slice-to-slice free propagator in a truncated Haar basis.

use nalgebra::DMatrix;

use crate::haar::HaarBasisFn;
use crate::quad::{integrate_rect, tensor_grid, QuadratureSpec};
use crate::scenario::{Aperture, Point3, SourceSpec};
use crate::{C64, Result, SimError, WAVENUMBER};

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn unit3(v: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// sin(u)/u with the removable singularity handled explicitly.
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-6 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// Free-space Green's function of the Helmholtz equation,
/// `G(r, r_src) = -(1/4 pi) exp(i k rho) / rho` with `rho = |r - r_src|`.
pub fn green(r: &Point3, r_src: &Point3) -> Result<C64> {
    let rho = r.dist(r_src);
    if rho < 1e-12 {
        return Err(SimError::Geometry(
            "Green's function evaluated at coincident points".into(),
        ));
    }
    Ok(C64::from_polar(1.0, WAVENUMBER * rho) * (-1.0 / (4.0 * std::f64::consts::PI * rho)))
}

/// Field radiated by a point source: `amplitude * exp(i phase) * G(r, r_src)`.
pub fn source_field(src: &SourceSpec, r: &Point3) -> Result<C64> {
    Ok(C64::from_polar(src.amplitude, src.phase) * green(r, &src.position)?)
}

/// Incident field over an aperture plane, as seen by the diffraction
/// integrals.
///
/// `gradient` defaults to the far-field approximation
/// `grad E ~ i k * direction * E`; implementors with an exact gradient (the
/// point source below) override it so the Kirchhoff oracle stays exact.
pub trait IncidentField: Sync {
    fn value(&self, r: &Point3) -> Result<C64>;

    /// Dominant propagation direction at `r` (unit vector, positive z).
    fn direction(&self, r: &Point3) -> [f64; 3];

    fn gradient(&self, r: &Point3) -> Result<[C64; 3]> {
        let v = self.value(r)?;
        let d = self.direction(r);
        let ik = C64::new(0.0, WAVENUMBER);
        Ok([ik * d[0] * v, ik * d[1] * v, ik * d[2] * v])
    }
}

/// Spherical wave from a [`SourceSpec`], with the exact gradient
/// `grad E = E * (ik - 1/rho) * unit(r - r_src)`.
pub struct PointSourceField<'a> {
    pub src: &'a SourceSpec,
}

impl IncidentField for PointSourceField<'_> {
    fn value(&self, r: &Point3) -> Result<C64> {
        source_field(self.src, r)
    }

    fn direction(&self, r: &Point3) -> [f64; 3] {
        unit3(r.sub(&self.src.position))
    }

    fn gradient(&self, r: &Point3) -> Result<[C64; 3]> {
        let v = self.value(r)?;
        let rho = r.dist(&self.src.position);
        let d = self.direction(r);
        let f = C64::new(-1.0 / rho, WAVENUMBER);
        Ok([v * f * d[0], v * f * d[1], v * f * d[2]])
    }
}

/// Arbitrary field sampled over an aperture plane with one fixed dominant
/// direction, e.g. a previous diffraction stage feeding a cascade.
pub struct DirectedField<F: Fn(&Point3) -> Result<C64> + Sync> {
    pub field: F,
    pub direction: [f64; 3],
}

impl<F: Fn(&Point3) -> Result<C64> + Sync> DirectedField<F> {
    pub fn new(field: F, direction: [f64; 3]) -> Result<Self> {
        if !(direction[2] > 0.0) {
            return Err(SimError::Geometry(
                "incident direction must have a positive z component".into(),
            ));
        }
        Ok(Self {
            field,
            direction: unit3(direction),
        })
    }
}

impl<F: Fn(&Point3) -> Result<C64> + Sync> IncidentField for DirectedField<F> {
    fn value(&self, r: &Point3) -> Result<C64> {
        (self.field)(r)
    }

    fn direction(&self, _r: &Point3) -> [f64; 3] {
        self.direction
    }
}

/// Direct numeric evaluation of the Kirchhoff surface integral
/// `int over aperture of z_hat . (E grad'G - G grad'E)`.
///
/// This is the brute-force oracle the closed forms are checked against.
pub fn kirchhoff_integral(
    aperture: &Aperture,
    incident: &dyn IncidentField,
    r: &Point3,
    quad: &QuadratureSpec,
) -> Result<C64> {
    let z_ap = aperture.center.z;
    if !(r.z > z_ap) {
        return Err(SimError::Geometry(format!(
            "observation point z = {} must lie beyond the aperture plane z = {z_ap}",
            r.z
        )));
    }
    let (x0, x1, y0, y1) = aperture.bounds();
    // integrate_rect needs an infallible integrand; capture the first error
    // and surface it afterwards.
    let err = std::sync::Mutex::new(None::<SimError>);
    let integrand = |x: f64, y: f64| -> C64 {
        let rp = Point3::new(x, y, z_ap);
        let inner = || -> Result<C64> {
            let e = incident.value(&rp)?;
            let grad_e = incident.gradient(&rp)?;
            let g = green(r, &rp)?;
            // d/dz' of G(r, r'): G * (ik - 1/rho) * (z' - z)/rho.
            let rho = r.dist(&rp);
            let dg_dz = g * C64::new(-1.0 / rho, WAVENUMBER) * ((rp.z - r.z) / rho);
            Ok(e * dg_dz - g * grad_e[2])
        };
        match inner() {
            Ok(v) => v,
            Err(e) => {
                err.lock().unwrap().get_or_insert(e);
                C64::new(0.0, 0.0)
            }
        }
    };
    let total = integrate_rect(&integrand, x0, x1, y0, y1, quad)?;
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(total)
}

/// Far-field, small-slit closed form for a point source diffracted by one
/// rectangular aperture:
///
/// `E(r) = -i k w_x w_y (cos_out + cos_in) G(r, R_s) G(R_s, r_src)
///         sinc(k w_x u_x / 2) sinc(k w_y u_y / 2)`
///
/// where `R_s` is the slit center and `u = unit(r - R_s) - unit(R_s - r_src)`.
pub fn diffract_point_source(aperture: &Aperture, src: &SourceSpec, r: &Point3) -> Result<C64> {
    let rs = aperture.center;
    let v_out = r.sub(&rs);
    let v_in = rs.sub(&src.position);
    let rho_out = norm3(v_out);
    let rho_in = norm3(v_in);
    if rho_out < 1e-12 || rho_in < 1e-12 {
        return Err(SimError::Geometry(
            "source or observation point coincides with the slit center".into(),
        ));
    }
    let obliquity = v_out[2] / rho_out + v_in[2] / rho_in;
    let u = [
        v_out[0] / rho_out - v_in[0] / rho_in,
        v_out[1] / rho_out - v_in[1] / rho_in,
    ];
    let g_out = green(r, &rs)?;
    let g_in = green(&rs, &src.position)?;
    let amp = C64::from_polar(src.amplitude, src.phase);
    Ok(C64::new(0.0, -WAVENUMBER)
        * (aperture.width_x * aperture.width_y * obliquity)
        * amp
        * g_out
        * g_in
        * sinc(0.5 * WAVENUMBER * aperture.width_x * u[0])
        * sinc(0.5 * WAVENUMBER * aperture.width_y * u[1]))
}

/// Diagnostic for the closed form's validity: far-field on both legs and a
/// slit small against both distances. Returns a description of the first
/// violated assumption, if any.
pub fn far_field_warning(aperture: &Aperture, src: &SourceSpec, r: &Point3) -> Option<String> {
    let rs = aperture.center;
    let rho_out = r.dist(&rs);
    let rho_in = rs.dist(&src.position);
    let w = aperture.width_x.max(aperture.width_y);
    let near = rho_out.min(rho_in);
    if WAVENUMBER * near < 100.0 {
        return Some(format!(
            "far-field assumption is weak: k * distance = {:.1}",
            WAVENUMBER * near
        ));
    }
    if w * 10.0 > near {
        return Some(format!(
            "small-slit assumption is weak: width {w} against distance {near:.1}"
        ));
    }
    None
}

/// General single-aperture diffraction of an arbitrary incident field:
/// `-i k * int over aperture of E_in(r') G(r, r') (cos_out + cos_in)`,
/// with the incident-leg obliquity taken from `incident.direction`.
pub fn diffract_general(
    aperture: &Aperture,
    incident: &dyn IncidentField,
    r: &Point3,
    quad: &QuadratureSpec,
) -> Result<C64> {
    let z_ap = aperture.center.z;
    if !(r.z > z_ap) {
        return Err(SimError::Geometry(format!(
            "observation point z = {} must lie beyond the aperture plane z = {z_ap}",
            r.z
        )));
    }
    let (x0, x1, y0, y1) = aperture.bounds();
    let err = std::sync::Mutex::new(None::<SimError>);
    let integrand = |x: f64, y: f64| -> C64 {
        let rp = Point3::new(x, y, z_ap);
        let inner = || -> Result<C64> {
            let e = incident.value(&rp)?;
            let g = green(r, &rp)?;
            let cos_out = (r.z - rp.z) / r.dist(&rp);
            let cos_in = incident.direction(&rp)[2];
            Ok(e * g * (cos_out + cos_in))
        };
        match inner() {
            Ok(v) => v,
            Err(e) => {
                err.lock().unwrap().get_or_insert(e);
                C64::new(0.0, 0.0)
            }
        }
    };
    let total = integrate_rect(&integrand, x0, x1, y0, y1, quad)?;
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(C64::new(0.0, -WAVENUMBER) * total)
}

/// Thin phase-shifter element: multiply by `exp(i alpha)`.
pub fn apply_phase_shift(value: C64, alpha: f64) -> C64 {
    value * C64::from_polar(1.0, alpha)
}

/// Kernel of the free slice-to-slice propagator between fixed-z planes:
/// `P(r, r') = -i k G(r, r') ((z - z')/|r - r'| + 1)`, the outgoing obliquity
/// plus the near-axial incident term, using the far-field gradient
/// approximation for the z derivative.
pub fn free_propagator_kernel(r: &Point3, rp: &Point3) -> Result<C64> {
    let g = green(r, rp)?;
    let cos_out = (r.z - rp.z) / r.dist(rp);
    Ok(C64::new(0.0, -WAVENUMBER) * g * (cos_out + 1.0))
}

/// Matrix representation of the free slice-to-slice propagator in truncated
/// Haar bases: `P_ij = <g_i(z_to), P g_j(z_from)>`.
///
/// Both four-dimensional integrals run over shared tensor grids whose cells
/// align with the finest dyadic subdivision of each basis, so every
/// integrand restriction is smooth.
pub fn free_propagator_matrix(
    z_from: f64,
    z_to: f64,
    basis_from: &[HaarBasisFn],
    basis_to: &[HaarBasisFn],
    quad: &QuadratureSpec,
) -> Result<DMatrix<C64>> {
    if !(z_to > z_from) {
        return Err(SimError::Geometry(
            "free propagator needs z_to > z_from".into(),
        ));
    }
    if basis_from.is_empty() || basis_to.is_empty() {
        return Err(SimError::Validation("empty basis".into()));
    }
    quad.validate()?;
    let (pts_from, wts_from) = basis_grid(basis_from, z_from, quad);
    let (pts_to, wts_to) = basis_grid(basis_to, z_to, quad);

    // b_from[j][p] = w_p * g_j(p); same for the target side.
    let eval_all = |basis: &[HaarBasisFn], pts: &[Point3], wts: &[f64]| -> Vec<Vec<f64>> {
        basis
            .iter()
            .map(|g| {
                pts.iter()
                    .zip(wts)
                    .map(|(p, w)| w * g.eval(p.x, p.y))
                    .collect()
            })
            .collect()
    };
    let b_from = eval_all(basis_from, &pts_from, &wts_from);
    let b_to = eval_all(basis_to, &pts_to, &wts_to);

    // mid[t][j] = sum_p P(t, p) w_p g_j(p), parallel over target points.
    let mid: Vec<Result<Vec<C64>>> = crate::par::map_indexed(pts_to.len(), |t| {
        let mut row = vec![C64::new(0.0, 0.0); basis_from.len()];
        for (p, pt) in pts_from.iter().enumerate() {
            let kernel = free_propagator_kernel(&pts_to[t], pt)?;
            for (j, bj) in b_from.iter().enumerate() {
                row[j] += kernel * bj[p];
            }
        }
        Ok(row)
    });
    let mut out = DMatrix::from_element(basis_to.len(), basis_from.len(), C64::new(0.0, 0.0));
    for (t, row) in mid.into_iter().enumerate() {
        let row = row?;
        for (i, bi) in b_to.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                out[(i, j)] += bi[t] * v;
            }
        }
    }
    Ok(out)
}

/// Shared tensor grid over the bounding box of a basis, with cells aligned
/// to the finest wavelet half-support so integrands stay smooth per cell.
fn basis_grid(basis: &[HaarBasisFn], z: f64, quad: &QuadratureSpec) -> (Vec<Point3>, Vec<f64>) {
    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    let mut finest = i32::MIN;
    for g in basis {
        let (a, b) = g.patch.x_range();
        let (c, d) = g.patch.y_range();
        x_lo = x_lo.min(a);
        x_hi = x_hi.max(b);
        y_lo = y_lo.min(c);
        y_hi = y_hi.max(d);
        let lvl = |f: &crate::haar::AxisFactor| match *f {
            crate::haar::AxisFactor::Scaling { j, .. } => j,
            crate::haar::AxisFactor::Wavelet { m, .. } => m + 1,
        };
        finest = finest.max(lvl(&g.x_factor)).max(lvl(&g.y_factor));
    }
    let cell = 2f64.powi(-finest);
    let nx = (((x_hi - x_lo) / cell).round() as usize).max(1);
    let ny = (((y_hi - y_lo) / cell).round() as usize).max(1);
    let per_cell = (quad.points / nx.max(ny)).clamp(2, quad.points);
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    for cx in 0..nx {
        for cy in 0..ny {
            let (g, w) = tensor_grid(
                x_lo + cx as f64 * cell,
                x_lo + (cx + 1) as f64 * cell,
                y_lo + cy as f64 * cell,
                y_lo + (cy + 1) as f64 * cell,
                per_cell,
            );
            pts.extend(g.iter().map(|&(x, y)| Point3::new(x, y, z)));
            wts.extend(w);
        }
    }
    (pts, wts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn green_magnitudes_and_phases() {
        let o = Point3::new(0.0, 0.0, 0.0);
        let g1 = green(&Point3::new(1.0, 0.0, 0.0), &o).unwrap();
        assert!((g1.norm() - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
        let g_half = green(&Point3::new(0.0, 0.5, 0.0), &o).unwrap();
        assert!((g_half.norm() - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        // k * 0.5 = pi, so the phase factor is exp(i pi) = -1 on top of the
        // real negative prefactor.
        assert!((g_half - C64::new(1.0 / (2.0 * std::f64::consts::PI), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn green_is_symmetric() {
        let a = Point3::new(1.0, 2.0, 3.0);
        let b = Point3::new(-0.5, 0.25, 7.0);
        assert_eq!(green(&a, &b).unwrap(), green(&b, &a).unwrap());
    }

    #[test]
    fn green_rejects_coincident_points() {
        let a = Point3::new(1.0, 1.0, 1.0);
        assert!(matches!(green(&a, &a), Err(SimError::Geometry(_))));
    }

    #[test]
    fn source_field_magnitude_and_phase_flip() {
        let src = SourceSpec {
            position: Point3::new(0.0, 0.0, 0.0),
            amplitude: 1e5,
            phase: 0.0,
            polarization: 0.0,
        };
        let r = Point3::new(0.0, 0.0, 80.0);
        let v = source_field(&src, &r).unwrap();
        assert!((v.norm() - 1e5 / (4.0 * std::f64::consts::PI * 80.0)).abs() < 1e-9);
        let flipped = SourceSpec {
            phase: std::f64::consts::PI,
            ..src
        };
        let w = source_field(&flipped, &r).unwrap();
        assert!((w + v).norm() < 1e-9);
    }

    #[test]
    fn sinc_handles_the_origin() {
        assert_eq!(sinc(0.0), 1.0);
        assert!((sinc(1e-9) - 1.0).abs() < 1e-15);
        assert!((sinc(std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn phase_shift_rotates_without_changing_magnitude() {
        let v = C64::new(1.0, 0.0);
        let r = apply_phase_shift(v, std::f64::consts::FRAC_PI_2);
        assert!((r - C64::new(0.0, 1.0)).norm() < 1e-15);
        assert_eq!(apply_phase_shift(v, 0.0), v);
        let w = C64::new(-2.5, 1.25);
        assert!((apply_phase_shift(w, 1.234).norm() - w.norm()).abs() < 1e-15);
    }

    #[test]
    fn kirchhoff_rejects_points_behind_the_plane() {
        let ap = Aperture {
            center: Point3::new(0.0, 0.0, 0.0),
            width_x: 4.0,
            width_y: 4.0,
        };
        let src = SourceSpec {
            position: Point3::new(0.0, 0.0, -800.0),
            amplitude: 1e5,
            phase: 0.0,
            polarization: 0.0,
        };
        let incident = PointSourceField { src: &src };
        let r = Point3::new(0.0, 0.0, -1.0);
        assert!(matches!(
            kirchhoff_integral(&ap, &incident, &r, &QuadratureSpec::default()),
            Err(SimError::Geometry(_))
        ));
    }

    #[test]
    fn reciprocity_of_the_closed_form() {
        let ap = Aperture {
            center: Point3::new(3.0, -1.0, 0.0),
            width_x: 4.0,
            width_y: 4.0,
        };
        let src = SourceSpec {
            position: Point3::new(10.0, 0.0, -800.0),
            amplitude: 1.0,
            phase: 0.0,
            polarization: 0.0,
        };
        let r = Point3::new(-4.0, 2.0, 700.0);
        let fwd = diffract_point_source(&ap, &src, &r).unwrap();
        // Swap the roles: source sits at the old observation point and we
        // observe at the old source position, with the aperture mirrored in
        // z so the field still propagates toward positive z.
        let ap_m = Aperture {
            center: Point3::new(3.0, -1.0, 0.0),
            width_x: 4.0,
            width_y: 4.0,
        };
        let src_b = SourceSpec {
            position: Point3::new(-4.0, 2.0, -700.0),
            amplitude: 1.0,
            phase: 0.0,
            polarization: 0.0,
        };
        let r_b = Point3::new(10.0, 0.0, 800.0);
        let bwd = diffract_point_source(&ap_m, &src_b, &r_b).unwrap();
        assert!((fwd - bwd).norm() / fwd.norm() < 1e-12);
    }

    #[test]
    fn diffraction_scales_linearly_with_amplitude_and_phase() {
        let ap = Aperture {
            center: Point3::new(10.0, 0.0, 0.0),
            width_x: 4.0,
            width_y: 4.0,
        };
        let base = SourceSpec {
            position: Point3::new(10.0, 0.0, -800.0),
            amplitude: 1e5,
            phase: 0.0,
            polarization: 0.0,
        };
        let r = Point3::new(10.5, 0.25, 800.0);
        let v = diffract_point_source(&ap, &base, &r).unwrap();
        let scaled = SourceSpec {
            amplitude: 3.0 * base.amplitude,
            phase: 0.7,
            ..base
        };
        let w = diffract_point_source(&ap, &scaled, &r).unwrap();
        let expect = v * C64::from_polar(3.0, 0.7);
        assert!((w - expect).norm() / expect.norm() < 1e-14);
    }

    #[test]
    fn far_field_warning_triggers_close_in() {
        let ap = Aperture {
            center: Point3::new(0.0, 0.0, 0.0),
            width_x: 4.0,
            width_y: 4.0,
        };
        let src = SourceSpec {
            position: Point3::new(0.0, 0.0, -800.0),
            amplitude: 1e5,
            phase: 0.0,
            polarization: 0.0,
        };
        assert!(far_field_warning(&ap, &src, &Point3::new(0.0, 0.0, 800.0)).is_none());
        assert!(far_field_warning(&ap, &src, &Point3::new(0.0, 0.0, 5.0)).is_some());
    }
}
