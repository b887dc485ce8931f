//! Two-stage cascades of double-slit modules forming an effective
//! Mach-Zehnder interferometer: the stage-1 output ports carry slits that
//! re-diffract the fields toward a second pair of slits and a final pair of
//! post-selected detector ports, with a thin phase shifter on one port.

use nalgebra::DMatrix;

use crate::propagator::green;
use crate::quad::{tensor_grid, QuadratureSpec};
use crate::scenario::{Aperture, DetectorPort, Point3, ScenarioConfig};
use crate::slicespace::input_slice_vector;
use crate::transfer::{polar_decompose, solve_transfer, unitarity_defect, TransferResult};
use crate::{C64, Result, SimError, WAVENUMBER};

/// Two chained double-slit modules plus a phase shifter.
///
/// Stage 2 reuses the [`ScenarioConfig`] shape: its "input plane" is the
/// stage-1 output plane carrying the D slits, its slits are the second-stage
/// slits A', and its detectors are the final ports D'.
#[derive(Clone, Debug)]
pub struct CascadeConfig {
    pub stage1: ScenarioConfig,
    pub stage2: ScenarioConfig,
    /// Index of the stage-1 output port whose transmission picks up
    /// `exp(i alpha)`.
    pub phase_port: usize,
    pub alpha: f64,
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        self.stage1.validate()?;
        self.stage2.validate()?;
        let n = self.stage1.n();
        if n != 2 || self.stage2.n() != 2 {
            return Err(SimError::Validation(
                "cascades are defined for two-port stages".into(),
            ));
        }
        if self.phase_port >= n {
            return Err(SimError::Validation(format!(
                "phase port {} out of range",
                self.phase_port
            )));
        }
        let z2 = self.stage1.output_plane_z;
        let z3 = self.stage2.slit_plane_z;
        let z4 = self.stage2.output_plane_z;
        if !(z2 < z3 && z3 < z4) {
            return Err(SimError::Validation(format!(
                "plane ordering violated: need z2 < z3 < z4 (got {z2} / {z3} / {z4})"
            )));
        }
        for j in 0..n {
            let d = &self.stage1.detectors[j].aperture.center;
            let a = &self.stage2.slits[j].center;
            if (d.x - a.x).abs() > 1e-9 || (d.y - a.y).abs() > 1e-9 {
                return Err(SimError::Validation(format!(
                    "stage-2 slit {j} at ({}, {}) is not aligned center-to-center \
                     with stage-1 port ({}, {})",
                    a.x, a.y, d.x, d.y
                )));
            }
        }
        Ok(())
    }
}

/// Chain a second double-slit module after `base`, repeating its
/// longitudinal spacings: the A' slits sit one slit-to-detector distance
/// past the D ports and the D' ports the same distance again, with the
/// phase shifter on port D2.
pub fn build_mzi(base: &ScenarioConfig, alpha: f64) -> Result<CascadeConfig> {
    base.validate()?;
    if base.n() != 2 {
        return Err(SimError::Validation(
            "the cascade builder expects a double-slit base".into(),
        ));
    }
    let stage_len = base.output_plane_z - base.slit_plane_z;
    let z3 = base.output_plane_z + stage_len;
    let z4 = z3 + stage_len;
    let mut stage2 = base.clone();
    stage2.input_plane_z = base.output_plane_z - 0.1 * stage_len;
    stage2.slit_plane_z = z3;
    stage2.output_plane_z = z4;
    for j in 0..2 {
        let d1 = base.detectors[j].aperture.center;
        stage2.slits[j] = Aperture {
            center: Point3::new(d1.x, d1.y, z3),
            ..base.slits[j]
        };
        stage2.detectors[j] = DetectorPort {
            aperture: Aperture {
                center: Point3::new(d1.x, d1.y, z4),
                ..base.detectors[j].aperture
            },
            patch: base.detectors[j].patch,
        };
    }
    let cascade = CascadeConfig {
        stage1: base.clone(),
        stage2,
        phase_port: 1,
        alpha,
    };
    cascade.validate()?;
    Ok(cascade)
}

/// Fringe scan of the cascade with its per-port sinusoid fits.
#[derive(Clone, Debug, serde::Serialize)]
pub struct FringeCurve {
    pub alphas: Vec<f64>,
    pub i1: Vec<f64>,
    pub i2: Vec<f64>,
    pub fits: [PortFit; 2],
}

/// Fit of one port's fringe to `I(alpha) = offset (1 + sign sin(alpha - delta))`.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct PortFit {
    pub offset: f64,
    pub amplitude: f64,
    pub delta: f64,
    pub sign: f64,
    pub visibility: f64,
}

/// Path amplitudes of the cascade: `coeffs[i][n][j]` is the projection on
/// final port `n` of source `i`'s field routed through stage-1 port `j`,
/// before the phase shifter is applied.
#[derive(Clone, Debug)]
pub struct PathCoefficients {
    pub coeffs: Vec<[[C64; 2]; 2]>,
}

impl PathCoefficients {
    /// Final-port amplitude with the phase shifter at `alpha` and all
    /// sources driven coherently.
    pub fn port_amplitude(&self, cascade: &CascadeConfig, port: usize, alpha: f64) -> C64 {
        let shift = C64::from_polar(1.0, alpha);
        self.coeffs
            .iter()
            .map(|c| {
                let mut v = C64::new(0.0, 0.0);
                for (j, &amp) in c[port].iter().enumerate() {
                    v += if j == cascade.phase_port {
                        amp * shift
                    } else {
                        amp
                    };
                }
                v
            })
            .sum()
    }
}

/// Discretized propagation kernel between two aperture grids:
/// `-i k G(r, r') (cos_out + cos_in) w'`, the general diffraction integral
/// with a fixed incident direction.
fn propagate_grid(
    pts_from: &[Point3],
    wts_from: &[f64],
    field_from: &[C64],
    cos_in: f64,
    pts_to: &[Point3],
) -> Result<Vec<C64>> {
    let rows = crate::par::map_indexed(pts_to.len(), |t| -> Result<C64> {
        let to = &pts_to[t];
        let mut acc = C64::new(0.0, 0.0);
        for ((p, w), f) in pts_from.iter().zip(wts_from).zip(field_from) {
            let g = green(to, p)?;
            let cos_out = (to.z - p.z) / to.dist(p);
            acc += g * (cos_out + cos_in) * w * f;
        }
        Ok(acc * C64::new(0.0, -WAVENUMBER))
    });
    rows.into_iter().collect()
}

fn aperture_grid(ap: &Aperture, n: usize) -> (Vec<Point3>, Vec<f64>) {
    let (x0, x1, y0, y1) = ap.bounds();
    let (pts, wts) = tensor_grid(x0, x1, y0, y1, n);
    (
        pts.iter()
            .map(|&(x, y)| Point3::new(x, y, ap.center.z))
            .collect(),
        wts,
    )
}

fn unit_dir(from: &Point3, to: &Point3) -> [f64; 3] {
    let d = to.sub(from);
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    [d[0] / n, d[1] / n, d[2] / n]
}

/// Compute every path amplitude of the cascade (source -> stage-1 slit ->
/// D-port aperture -> A' slit -> D' port mode).
pub fn mzi_path_coefficients(
    cascade: &CascadeConfig,
    quad: &QuadratureSpec,
) -> Result<PathCoefficients> {
    cascade.validate()?;
    quad.validate()?;
    let s1 = &cascade.stage1;
    let s2 = &cascade.stage2;
    let n_pts = quad.points;
    let mut coeffs = Vec::with_capacity(s1.n());
    for i in 0..s1.n() {
        let src = &s1.sources[i];
        let mut per_source = [[C64::new(0.0, 0.0); 2]; 2];
        for j in 0..2 {
            // Stage-1 field across the D_j aperture window, barrier-allowed.
            let d_ap = &s1.detectors[j].aperture;
            let (pts_d, wts_d) = aperture_grid(d_ap, n_pts);
            let mut field_d = Vec::with_capacity(pts_d.len());
            for p in &pts_d {
                let mut v = C64::new(0.0, 0.0);
                for (s, slit) in s1.slits.iter().enumerate() {
                    if s1.barrier.reaches(s, j) {
                        v += crate::propagator::diffract_point_source(slit, src, p)?;
                    }
                }
                field_d.push(v);
            }
            let dir_d = unit_dir(&s1.slits[j].center, &d_ap.center);
            for n in 0..2 {
                // D_j aperture to the A'_n slit.
                let a_ap = &s2.slits[n];
                let (pts_a, wts_a) = aperture_grid(a_ap, n_pts);
                let field_a = propagate_grid(&pts_d, &wts_d, &field_d, dir_d[2], &pts_a)?;
                // A'_n slit to the D'_n port patch, then project on the
                // post-selected mode.
                let dir_a = unit_dir(&d_ap.center, &a_ap.center);
                let mode = crate::slicespace::port_mode(s2, n);
                let (mx0, mx1) = mode.patch.x_range();
                let (my0, my1) = mode.patch.y_range();
                let (pts_m, wts_m) = tensor_grid(mx0, mx1, my0, my1, n_pts);
                let pts_m: Vec<Point3> = pts_m
                    .iter()
                    .map(|&(x, y)| Point3::new(x, y, s2.output_plane_z))
                    .collect();
                let field_m = propagate_grid(&pts_a, &wts_a, &field_a, dir_a[2], &pts_m)?;
                let amp = mode.eval(mode.patch.center().0, mode.patch.center().1);
                per_source[n][j] = field_m
                    .iter()
                    .zip(&wts_m)
                    .map(|(f, w)| f * amp * w)
                    .sum();
            }
        }
        coeffs.push(per_source);
    }
    Ok(PathCoefficients { coeffs })
}

/// Integrated post-selected intensities at the two final ports with both
/// stage-1 sources coherently on.
pub fn mzi_output_intensities(cascade: &CascadeConfig, quad: &QuadratureSpec) -> Result<(f64, f64)> {
    let paths = mzi_path_coefficients(cascade, quad)?;
    Ok((
        paths.port_amplitude(cascade, 0, cascade.alpha).norm_sqr(),
        paths.port_amplitude(cascade, 1, cascade.alpha).norm_sqr(),
    ))
}

fn fit_sinusoid(alphas: &[f64], values: &[f64]) -> Result<PortFit> {
    if alphas.len() < 4 {
        return Err(SimError::FitFailure(
            "need at least 4 samples for the fringe fit".into(),
        ));
    }
    // Linear least squares on I = c0 + c1 sin(alpha) + c2 cos(alpha).
    let n = alphas.len() as f64;
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (&a, &y) in alphas.iter().zip(values) {
        let row = [1.0, a.sin(), a.cos()];
        for p in 0..3 {
            for q in 0..3 {
                ata[p][q] += row[p] * row[q];
            }
            atb[p] += row[p] * y;
        }
    }
    let det = |m: &[[f64; 3]; 3]| -> f64 {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d0 = det(&ata);
    if d0.abs() < 1e-12 * n.powi(3).max(1.0) {
        return Err(SimError::FitFailure("degenerate fringe design".into()));
    }
    let solve_col = |k: usize| -> f64 {
        let mut m = ata;
        for p in 0..3 {
            m[p][k] = atb[p];
        }
        det(&m) / d0
    };
    let (c0, c1, c2) = (solve_col(0), solve_col(1), solve_col(2));
    let amplitude = c1.hypot(c2);
    if !(c0 > 0.0) || amplitude / c0 < 1e-12 {
        return Err(SimError::FitFailure(
            "fringe curve is flat; no sinusoid to fit".into(),
        ));
    }
    // I = c0 + R sin(alpha + psi); for sign = +1 the model form
    // I = c0 (1 + sin(alpha - delta)) gives psi = -delta, for sign = -1 it
    // gives psi = pi - delta.
    let psi = c2.atan2(c1);
    let sign = if c1 >= 0.0 { 1.0 } else { -1.0 };
    let delta = if sign > 0.0 {
        -psi
    } else {
        let d = std::f64::consts::PI - psi;
        if d > std::f64::consts::PI {
            d - std::f64::consts::TAU
        } else {
            d
        }
    };
    Ok(PortFit {
        offset: c0,
        amplitude,
        delta,
        sign,
        visibility: amplitude / c0,
    })
}

/// Scan the phase shifter over `alphas` and fit both port fringes.
pub fn mzi_scan(cascade: &CascadeConfig, alphas: &[f64], quad: &QuadratureSpec) -> Result<FringeCurve> {
    if alphas.is_empty() {
        return Err(SimError::Validation("empty alpha grid".into()));
    }
    let paths = mzi_path_coefficients(cascade, quad)?;
    let i1: Vec<f64> = alphas
        .iter()
        .map(|&a| paths.port_amplitude(cascade, 0, a).norm_sqr())
        .collect();
    let i2: Vec<f64> = alphas
        .iter()
        .map(|&a| paths.port_amplitude(cascade, 1, a).norm_sqr())
        .collect();
    let fits = [fit_sinusoid(alphas, &i1)?, fit_sinusoid(alphas, &i2)?];
    Ok(FringeCurve {
        alphas: alphas.to_vec(),
        i1,
        i2,
        fits,
    })
}

/// Source-by-source characterization of the full cascade at `alpha = 0`:
/// X from the stage-1 input plane, Y from the final port modes.
pub fn characterize_mzi(cascade: &CascadeConfig, quad: &QuadratureSpec) -> Result<TransferResult> {
    if cascade.alpha != 0.0 {
        return Err(SimError::Validation(
            "cascade characterization requires alpha = 0".into(),
        ));
    }
    let paths = mzi_path_coefficients(cascade, quad)?;
    let n = cascade.stage1.n();
    let mut x = DMatrix::<C64>::zeros(n, n);
    let mut y = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        let xi = input_slice_vector(&cascade.stage1, i, quad)?;
        for p in 0..n {
            x[(p, i)] = xi.entries[p];
            // alpha = 0: both paths contribute with unit shifter.
            y[(p, i)] = paths.coeffs[i][p][0] + paths.coeffs[i][p][1];
        }
    }
    let (t, condition) = solve_transfer(&x, &y)?;
    let (u, p) = polar_decompose(&t);
    let (_, defect) = unitarity_defect(&t);
    Ok(TransferResult {
        x,
        y,
        t,
        u,
        p,
        unitarity_defect: defect,
        condition_number: condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::canonical_double_slit;

    #[test]
    fn mzi_repeats_stage_spacings() {
        let cascade = build_mzi(&canonical_double_slit(), 0.0).unwrap();
        assert_eq!(cascade.stage2.slit_plane_z, 1600.0);
        assert_eq!(cascade.stage2.output_plane_z, 2400.0);
        assert_eq!(cascade.phase_port, 1);
        cascade.validate().unwrap();
    }

    #[test]
    fn misaligned_stage_two_is_rejected() {
        let mut cascade = build_mzi(&canonical_double_slit(), 0.0).unwrap();
        cascade.stage2.slits[0].center.x += 1.0;
        let err = cascade.validate().unwrap_err();
        assert!(err.to_string().contains("aligned center-to-center"));
    }

    #[test]
    fn fringe_fit_recovers_known_sinusoids() {
        let alphas: Vec<f64> = (0..64)
            .map(|i| std::f64::consts::TAU * i as f64 / 64.0)
            .collect();
        let delta = 0.01;
        let up: Vec<f64> = alphas.iter().map(|&a| 2.0 * (1.0 + (a - delta).sin())).collect();
        let f = fit_sinusoid(&alphas, &up).unwrap();
        assert!((f.offset - 2.0).abs() < 1e-12);
        assert!((f.delta - delta).abs() < 1e-12);
        assert!(f.sign > 0.0);
        assert!((f.visibility - 1.0).abs() < 1e-12);
        let down: Vec<f64> = alphas
            .iter()
            .map(|&a| 3.0 * (1.0 - 0.5 * (a - delta).sin()))
            .collect();
        let g = fit_sinusoid(&alphas, &down).unwrap();
        assert!(g.sign < 0.0);
        assert!((g.delta - delta).abs() < 1e-12);
        assert!((g.visibility - 0.5).abs() < 1e-12);
    }

    #[test]
    fn flat_curves_fail_the_fit() {
        let alphas: Vec<f64> = (0..16).map(|i| i as f64 * 0.4).collect();
        let flat = vec![1.0; 16];
        assert!(matches!(
            fit_sinusoid(&alphas, &flat),
            Err(SimError::FitFailure(_))
        ));
    }

    #[test]
    fn characterize_rejects_nonzero_alpha() {
        let cascade = build_mzi(&canonical_double_slit(), 0.3).unwrap();
        assert!(matches!(
            characterize_mzi(&cascade, &QuadratureSpec::default()),
            Err(SimError::Validation(_))
        ));
    }
}
