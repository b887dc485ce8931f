//! Intensity-intensity cross-correlation of the two post-selected output
//! ports as the polarization angle between the sources is varied, averaged
//! over a configurable relative-phase distribution, plus the ideal
//! beam-splitter reference and the cosine fit.

use crate::quad::QuadratureSpec;
use crate::scenario::ScenarioConfig;
use crate::slicespace::output_slice_vector;
use crate::{C64, Result, SimError};

/// Distribution of the relative phase `phi` between the two sources.
#[derive(Clone, Debug, PartialEq)]
pub enum PhaseDistribution {
    /// `p(phi) = 1/(2 pi)` over `[0, 2 pi)`.
    Uniform,
    /// Equal point masses at `phi = +pi/2` and `phi = -pi/2`.
    TwoPoint,
    /// Explicit weighted sample list `(phi, weight)`; weights must sum to 1.
    Sampled(Vec<(f64, f64)>),
}

/// Trigonometric moments of a phase distribution. These are all the
/// correlation needs, because each port intensity is affine in
/// `(cos phi, sin phi)`.
#[derive(Clone, Copy, Debug)]
pub struct PhaseMoments {
    pub c: f64,  // <cos phi>
    pub s: f64,  // <sin phi>
    pub cc: f64, // <cos^2 phi>
    pub ss: f64, // <sin^2 phi>
    pub cs: f64, // <cos phi sin phi>
}

impl PhaseDistribution {
    /// Analytic moments for the closed-form variants, exact weighted sums
    /// for sampled ones.
    pub fn moments(&self) -> Result<PhaseMoments> {
        match self {
            PhaseDistribution::Uniform => Ok(PhaseMoments {
                c: 0.0,
                s: 0.0,
                cc: 0.5,
                ss: 0.5,
                cs: 0.0,
            }),
            PhaseDistribution::TwoPoint => Ok(PhaseMoments {
                c: 0.0,
                s: 0.0,
                cc: 0.0,
                ss: 1.0,
                cs: 0.0,
            }),
            PhaseDistribution::Sampled(samples) => {
                if samples.is_empty() {
                    return Err(SimError::Validation(
                        "sampled phase distribution is empty".into(),
                    ));
                }
                let total: f64 = samples.iter().map(|&(_, w)| w).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(SimError::Validation(format!(
                        "phase distribution weights must sum to 1 (got {total})"
                    )));
                }
                let mut m = PhaseMoments {
                    c: 0.0,
                    s: 0.0,
                    cc: 0.0,
                    ss: 0.0,
                    cs: 0.0,
                };
                for &(phi, w) in samples {
                    let (sn, cs) = phi.sin_cos();
                    m.c += w * cs;
                    m.s += w * sn;
                    m.cc += w * cs * cs;
                    m.ss += w * sn * sn;
                    m.cs += w * cs * sn;
                }
                Ok(m)
            }
        }
    }

    /// Midpoint quadrature discretization of the uniform distribution,
    /// used to cross-check the analytic Uniform moments.
    pub fn uniform_quadrature(n: usize) -> Self {
        let w = 1.0 / n as f64;
        PhaseDistribution::Sampled(
            (0..n)
                .map(|i| (std::f64::consts::TAU * (i as f64 + 0.5) / n as f64, w))
                .collect(),
        )
    }
}

/// Sampled correlation curve with its cosine fit.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CorrelationCurve {
    pub thetas: Vec<f64>,
    pub values: Vec<f64>,
    /// Least-squares parameters of `C_fit(theta) = a - b cos(2 theta)`.
    pub fit_a: f64,
    pub fit_b: f64,
    pub fit_residual: f64,
    /// `(C_max - C_min) / C_max` over the sampled values.
    pub dip: f64,
}

/// Per-port projections of the two sources' output fields: `(alpha_j,
/// beta_j)` for port `j`.
fn port_projections(sc: &ScenarioConfig, quad: &QuadratureSpec) -> Result<[(C64, C64); 2]> {
    if sc.n() != 2 {
        return Err(SimError::Validation(
            "correlation requires a two-port scenario".into(),
        ));
    }
    let y1 = output_slice_vector(sc, 0, quad)?;
    let y2 = output_slice_vector(sc, 1, quad)?;
    Ok([
        (y1.entries[0], y2.entries[0]),
        (y1.entries[1], y2.entries[1]),
    ])
}

fn intensity_terms(alpha: C64, beta: C64) -> (f64, f64, f64) {
    // I(theta, phi) = base + (p cos phi + r sin phi) cos theta, from
    // |alpha + beta e^{i phi}|^2 with the polarization overlap cos(theta)
    // applied to the interference term.
    let cross = alpha.conj() * beta;
    (
        alpha.norm_sqr() + beta.norm_sqr(),
        2.0 * cross.re,
        -2.0 * cross.im,
    )
}

/// Post-selected intensity at one port with both sources on, polarization
/// angle `theta` between them and relative phase `phi` applied to the second
/// source.
pub fn superposed_port_intensity(
    sc: &ScenarioConfig,
    theta: f64,
    phi: f64,
    port: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if port >= 2 {
        return Err(SimError::Validation(format!("port {port} out of range")));
    }
    let (alpha, beta) = port_projections(sc, quad)?[port];
    let (base, p, r) = intensity_terms(alpha, beta);
    Ok(base + (p * phi.cos() + r * phi.sin()) * theta.cos())
}

fn curve_from_terms(
    terms: [(f64, f64, f64); 2],
    thetas: &[f64],
    moments: &PhaseMoments,
) -> Result<CorrelationCurve> {
    if thetas.is_empty() {
        return Err(SimError::Validation("empty theta grid".into()));
    }
    if thetas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::Validation(
            "theta grid must be strictly increasing".into(),
        ));
    }
    let [(a1, p1, r1), (a2, p2, r2)] = terms;
    let mean1_phase = p1 * moments.c + r1 * moments.s;
    let mean2_phase = p2 * moments.c + r2 * moments.s;
    let quad_term =
        p1 * p2 * moments.cc + (p1 * r2 + r1 * p2) * moments.cs + r1 * r2 * moments.ss;
    let values: Vec<f64> = thetas
        .iter()
        .map(|&th| {
            let ct = th.cos();
            let mean1 = a1 + mean1_phase * ct;
            let mean2 = a2 + mean2_phase * ct;
            let joint = a1 * a2 + (a1 * mean2_phase + a2 * mean1_phase) * ct + quad_term * ct * ct;
            (mean1, mean2, joint)
        })
        .map(|(m1, m2, joint)| joint / (m1 * m2))
        .collect();
    for (&th, &v) in thetas.iter().zip(&values) {
        if !v.is_finite() {
            return Err(SimError::Degenerate(format!(
                "correlation undefined at theta = {th}: a port has zero mean intensity"
            )));
        }
    }
    let (fit_a, fit_b, fit_residual) = fit_cos2(thetas, &values)?;
    let cmax = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let cmin = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if cmax <= 0.0 {
        return Err(SimError::Degenerate(
            "correlation curve is non-positive".into(),
        ));
    }
    Ok(CorrelationCurve {
        thetas: thetas.to_vec(),
        values,
        fit_a,
        fit_b,
        fit_residual,
        dip: (cmax - cmin) / cmax,
    })
}

/// Correlation `C(theta) = <I+ I->_phi / (<I+>_phi <I->_phi)` for the
/// scenario's two output ports.
pub fn correlation_curve(
    sc: &ScenarioConfig,
    thetas: &[f64],
    dist: &PhaseDistribution,
    quad: &QuadratureSpec,
) -> Result<CorrelationCurve> {
    let projections = port_projections(sc, quad)?;
    let terms = [
        intensity_terms(projections[0].0, projections[0].1),
        intensity_terms(projections[1].0, projections[1].1),
    ];
    curve_from_terms(terms, thetas, &dist.moments()?)
}

/// Reference curve for the ideal 50:50 splitter with identical unit inputs:
/// under the uniform distribution this is exactly `0.75 - 0.25 cos(2 theta)`.
pub fn ideal_bs_correlation(thetas: &[f64], dist: &PhaseDistribution) -> Result<CorrelationCurve> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // Ports of U_BS = (1/sqrt 2) [[1, i], [i, 1]] driven by (1, e^{i phi}).
    let terms = [
        intensity_terms(C64::new(s, 0.0), C64::new(0.0, s)),
        intensity_terms(C64::new(0.0, s), C64::new(s, 0.0)),
    ];
    curve_from_terms(terms, thetas, &dist.moments()?)
}

/// Least-squares fit of `a - b cos(2 theta)`; returns `(a, b, rms residual)`.
pub fn fit_cos2(thetas: &[f64], values: &[f64]) -> Result<(f64, f64, f64)> {
    if thetas.len() != values.len() {
        return Err(SimError::LengthMismatch(
            "theta and value lengths differ".into(),
        ));
    }
    if thetas.len() < 3 {
        return Err(SimError::FitFailure(
            "need at least 3 samples for the cosine fit".into(),
        ));
    }
    let n = thetas.len() as f64;
    let xs: Vec<f64> = thetas.iter().map(|&t| (2.0 * t).cos()).collect();
    let (min_x, max_x) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    if max_x - min_x < 1e-12 {
        return Err(SimError::FitFailure(
            "design is rank deficient: fewer than 2 distinct cos(2 theta) values".into(),
        ));
    }
    let sx: f64 = xs.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sy: f64 = values.iter().sum();
    let sxy: f64 = xs.iter().zip(values).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    // Model y = a + q x with q = -b.
    let a = (sy * sxx - sx * sxy) / det;
    let q = (n * sxy - sx * sy) / det;
    let residual = (xs
        .iter()
        .zip(values)
        .map(|(x, y)| (y - a - q * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((a, -q, residual))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| std::f64::consts::FRAC_PI_2 * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn fit_recovers_exact_cosine_curves() {
        let thetas = grid(65);
        for (a0, b0) in [(0.75, 0.25), (0.5, 0.5), (1.0, 0.0)] {
            let values: Vec<f64> = thetas.iter().map(|&t| a0 - b0 * (2.0 * t).cos()).collect();
            let (a, b, res) = fit_cos2(&thetas, &values).unwrap();
            assert!((a - a0).abs() < 1e-12);
            assert!((b - b0).abs() < 1e-12);
            assert!(res < 1e-12);
        }
    }

    #[test]
    fn fit_rejects_degenerate_designs() {
        assert!(matches!(
            fit_cos2(&[0.1, 0.2], &[1.0, 1.0]),
            Err(SimError::FitFailure(_))
        ));
        assert!(matches!(
            fit_cos2(&[0.5, 0.5, 0.5], &[1.0, 1.0, 1.0]),
            Err(SimError::FitFailure(_))
        ));
    }

    #[test]
    fn ideal_splitter_matches_closed_forms() {
        let thetas = grid(65);
        let c = ideal_bs_correlation(&thetas, &PhaseDistribution::Uniform).unwrap();
        for (&th, &v) in c.thetas.iter().zip(&c.values) {
            assert!((v - (0.75 - 0.25 * (2.0 * th).cos())).abs() < 1e-14);
        }
        assert!((c.values[0] - 0.5).abs() < 1e-14, "C(0) must be 1/2");
        let c2 = ideal_bs_correlation(&thetas, &PhaseDistribution::TwoPoint).unwrap();
        assert!((c2.fit_a - 0.5).abs() < 1e-12);
        assert!((c2.fit_b - 0.5).abs() < 1e-12);
        assert!((c2.dip - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_moments_match_quadrature_to_tight_tolerance() {
        let exact = PhaseDistribution::Uniform.moments().unwrap();
        let approx = PhaseDistribution::uniform_quadrature(64).moments().unwrap();
        for (a, b) in [
            (exact.c, approx.c),
            (exact.s, approx.s),
            (exact.cc, approx.cc),
            (exact.ss, approx.ss),
            (exact.cs, approx.cs),
        ] {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn sampled_weights_must_normalize() {
        let d = PhaseDistribution::Sampled(vec![(0.0, 0.4), (1.0, 0.4)]);
        assert!(matches!(d.moments(), Err(SimError::Validation(_))));
    }

    #[test]
    fn curve_is_symmetric_in_theta() {
        // cos(2 theta) symmetry: C(theta) = C(pi - theta).
        let thetas: Vec<f64> = (0..=64)
            .map(|i| std::f64::consts::PI * i as f64 / 64.0)
            .collect();
        let c = ideal_bs_correlation(&thetas, &PhaseDistribution::Uniform).unwrap();
        let n = c.values.len();
        for i in 0..n {
            assert!((c.values[i] - c.values[n - 1 - i]).abs() < 1e-13);
        }
    }
}
