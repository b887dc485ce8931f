//! Geometry and source definitions for N-slit setups, including the two
//! canonical instances, JSON (de)serialization, and validation.

use sha2::{Digest, Sha256};

use crate::haar::PatchIndex;
use crate::{Result, SimError};

/// Position in 3D space, lengths in wavelengths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn sub(&self, other: &Point3) -> [f64; 3] {
        [self.x - other.x, self.y - other.y, self.z - other.z]
    }

    pub fn dist(&self, other: &Point3) -> f64 {
        let d = self.sub(other);
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Monochromatic point source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceSpec {
    pub position: Point3,
    pub amplitude: f64,
    /// Source phase in radians, applied as a factor exp(i phase).
    pub phase: f64,
    /// Linear polarization angle in radians; enters only through the
    /// cos(theta) overlap in the correlation module.
    pub polarization: f64,
}

/// Rectangular aperture in a fixed-z plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aperture {
    pub center: Point3,
    pub width_x: f64,
    pub width_y: f64,
}

impl Aperture {
    /// Half-open extent `[x0, x1) x [y0, y1)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (
            self.center.x - 0.5 * self.width_x,
            self.center.x + 0.5 * self.width_x,
            self.center.y - 0.5 * self.width_y,
            self.center.y + 0.5 * self.width_y,
        )
    }
}

/// Square-faced integrating detector together with the Haar patch that
/// defines its post-selected mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorPort {
    pub aperture: Aperture,
    pub patch: PatchIndex,
}

/// Reachability rule imposed by the absorbing barriers between slit columns:
/// `allowed[j]` lists the detector indices the field from slit `j` can reach.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierRule {
    pub allowed: Vec<Vec<usize>>,
}

impl BarrierRule {
    /// One-to-one rule (slit j reaches only detector j), as in the canonical
    /// setups.
    pub fn identity(n: usize) -> Self {
        Self {
            allowed: (0..n).map(|j| vec![j]).collect(),
        }
    }

    pub fn reaches(&self, slit: usize, detector: usize) -> bool {
        self.allowed
            .get(slit)
            .is_some_and(|d| d.contains(&detector))
    }
}

/// Complete description of an N-slit characterization setup.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub sources: Vec<SourceSpec>,
    pub slits: Vec<Aperture>,
    pub detectors: Vec<DetectorPort>,
    pub input_plane_z: f64,
    pub slit_plane_z: f64,
    pub output_plane_z: f64,
    pub barrier: BarrierRule,
}

impl ScenarioConfig {
    pub fn n(&self) -> usize {
        self.sources.len()
    }

    /// Check every structural invariant; error messages name the violated
    /// one.
    pub fn validate(&self) -> Result<()> {
        let n = self.sources.len();
        if n < 2 {
            return Err(SimError::Validation(
                "a scenario needs at least 2 sources".into(),
            ));
        }
        if self.slits.len() != n || self.detectors.len() != n {
            return Err(SimError::Validation(format!(
                "source/slit/detector counts must match (got {}/{}/{})",
                n,
                self.slits.len(),
                self.detectors.len()
            )));
        }
        for (i, s) in self.sources.iter().enumerate() {
            if !(s.amplitude > 0.0) {
                return Err(SimError::Validation(format!(
                    "source {i}: amplitude must be positive"
                )));
            }
            if !s.position.is_finite() || !s.phase.is_finite() || !s.polarization.is_finite() {
                return Err(SimError::Validation(format!(
                    "source {i}: values must be finite"
                )));
            }
            if !(s.position.z < self.input_plane_z) {
                return Err(SimError::Validation(format!(
                    "plane ordering violated: source {i} at z = {} must lie before \
                     the input plane z1 = {}",
                    s.position.z, self.input_plane_z
                )));
            }
        }
        if !(self.input_plane_z < self.slit_plane_z && self.slit_plane_z < self.output_plane_z) {
            return Err(SimError::Validation(format!(
                "plane ordering violated: need z1 < slit plane < z2 \
                 (got {} / {} / {})",
                self.input_plane_z, self.slit_plane_z, self.output_plane_z
            )));
        }
        for (i, a) in self.slits.iter().enumerate() {
            if !(a.width_x > 0.0 && a.width_y > 0.0) {
                return Err(SimError::Validation(format!(
                    "slit {i}: aperture width must be positive"
                )));
            }
            if a.center.z != self.slit_plane_z {
                return Err(SimError::Validation(format!(
                    "slit {i} sits at z = {} but the slit plane is z = {}",
                    a.center.z, self.slit_plane_z
                )));
            }
        }
        for (i, d) in self.detectors.iter().enumerate() {
            let a = &d.aperture;
            if !(a.width_x > 0.0 && a.width_y > 0.0) {
                return Err(SimError::Validation(format!(
                    "detector {i}: aperture width must be positive"
                )));
            }
            if a.center.z != self.output_plane_z {
                return Err(SimError::Validation(format!(
                    "detector {i} sits at z = {} but the output plane is z = {}",
                    a.center.z, self.output_plane_z
                )));
            }
            let side = d.patch.side();
            if (a.width_x - side).abs() > 1e-9 || (a.width_y - side).abs() > 1e-9 {
                return Err(SimError::Validation(format!(
                    "detector {i}: window must be congruent to its patch \
                     (side {side}, got {} x {})",
                    a.width_x, a.width_y
                )));
            }
            let (cx, cy) = d.patch.center();
            if (a.center.x - cx).abs() > 1e-9 || (a.center.y - cy).abs() > 1e-9 {
                return Err(SimError::Validation(format!(
                    "detector {i}: window center ({}, {}) does not match its \
                     patch center ({cx}, {cy})",
                    a.center.x, a.center.y
                )));
            }
        }
        if self.barrier.allowed.len() != n {
            return Err(SimError::Validation(
                "barrier rule must list one entry per slit".into(),
            ));
        }
        for (j, dets) in self.barrier.allowed.iter().enumerate() {
            if let Some(&bad) = dets.iter().find(|&&d| d >= n) {
                return Err(SimError::Validation(format!(
                    "barrier entry for slit {j} names detector {bad}, but N = {n}"
                )));
            }
        }
        Ok(())
    }
}

const CANONICAL_D: f64 = 20.0;
const CANONICAL_L: f64 = 800.0;
const CANONICAL_W: f64 = 4.0;
const CANONICAL_AMPLITUDE: f64 = 1e5;

fn canonical_column(x: f64, k: i64) -> (SourceSpec, Aperture, DetectorPort) {
    let source = SourceSpec {
        position: Point3::new(x, 0.0, -CANONICAL_L),
        amplitude: CANONICAL_AMPLITUDE,
        phase: 0.0,
        polarization: 0.0,
    };
    let slit = Aperture {
        center: Point3::new(x, 0.0, 0.0),
        width_x: CANONICAL_W,
        width_y: CANONICAL_W,
    };
    let detector = DetectorPort {
        aperture: Aperture {
            center: Point3::new(x, 0.0, CANONICAL_L),
            width_x: CANONICAL_W,
            width_y: CANONICAL_W,
        },
        patch: PatchIndex { j0: -2, k, kp: 0 },
    };
    (source, slit, detector)
}

fn canonical_from_columns(cols: &[(f64, i64)]) -> ScenarioConfig {
    let mut sources = Vec::new();
    let mut slits = Vec::new();
    let mut detectors = Vec::new();
    for &(x, k) in cols {
        let (s, a, d) = canonical_column(x, k);
        sources.push(s);
        slits.push(a);
        detectors.push(d);
    }
    let sc = ScenarioConfig {
        barrier: BarrierRule::identity(cols.len()),
        sources,
        slits,
        detectors,
        input_plane_z: -0.9 * CANONICAL_L,
        slit_plane_z: 0.0,
        output_plane_z: CANONICAL_L,
    };
    sc.validate().expect("canonical scenario must validate");
    sc
}

/// The double-slit setup: sources at (+/-d/2, 0, -L) with d = 20, L = 800,
/// 4x4 slits on z = 0, detector patches (j0 = -2; k = 2 and k = -3, kp = 0)
/// at z2 = L, imaginary input plane at z1 = -0.9 L.
pub fn canonical_double_slit() -> ScenarioConfig {
    canonical_from_columns(&[(0.5 * CANONICAL_D, 2), (-0.5 * CANONICAL_D, -3)])
}

/// The double slit extended with a third column at x = -3d/2 (patch k = -8).
pub fn canonical_triple_slit() -> ScenarioConfig {
    canonical_from_columns(&[
        (0.5 * CANONICAL_D, 2),
        (-0.5 * CANONICAL_D, -3),
        (-1.5 * CANONICAL_D, -8),
    ])
}

// --------------------------------------------------------------------------
// JSON wire format. Complex numbers never appear in configs.

#[derive(serde::Serialize, serde::Deserialize)]
struct SourceFile {
    position: [f64; 3],
    amplitude: f64,
    #[serde(default)]
    phase: f64,
    #[serde(default)]
    polarization: f64,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ApertureFile {
    center: [f64; 3],
    width_x: f64,
    width_y: f64,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct PatchFile {
    j0: i32,
    k: i64,
    kp: i64,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct DetectorFile {
    center: [f64; 3],
    width_x: f64,
    width_y: f64,
    patch: PatchFile,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct PlanesFile {
    input_z: f64,
    slit_z: f64,
    output_z: f64,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ScenarioFile {
    sources: Vec<SourceFile>,
    slits: Vec<ApertureFile>,
    detectors: Vec<DetectorFile>,
    planes: PlanesFile,
    barrier: Vec<Vec<usize>>,
}

fn point(p: [f64; 3]) -> Point3 {
    Point3::new(p[0], p[1], p[2])
}

/// Parse and validate a scenario from its JSON text form.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig> {
    let file: ScenarioFile =
        serde_json::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
    let sc = ScenarioConfig {
        sources: file
            .sources
            .into_iter()
            .map(|s| SourceSpec {
                position: point(s.position),
                amplitude: s.amplitude,
                phase: s.phase,
                polarization: s.polarization,
            })
            .collect(),
        slits: file
            .slits
            .into_iter()
            .map(|a| Aperture {
                center: point(a.center),
                width_x: a.width_x,
                width_y: a.width_y,
            })
            .collect(),
        detectors: file
            .detectors
            .into_iter()
            .map(|d| DetectorPort {
                aperture: Aperture {
                    center: point(d.center),
                    width_x: d.width_x,
                    width_y: d.width_y,
                },
                patch: PatchIndex {
                    j0: d.patch.j0,
                    k: d.patch.k,
                    kp: d.patch.kp,
                },
            })
            .collect(),
        input_plane_z: file.planes.input_z,
        slit_plane_z: file.planes.slit_z,
        output_plane_z: file.planes.output_z,
        barrier: BarrierRule {
            allowed: file.barrier,
        },
    };
    sc.validate()?;
    Ok(sc)
}

/// Serialize a scenario to its canonical JSON text form.
pub fn save_scenario(sc: &ScenarioConfig) -> String {
    let file = ScenarioFile {
        sources: sc
            .sources
            .iter()
            .map(|s| SourceFile {
                position: [s.position.x, s.position.y, s.position.z],
                amplitude: s.amplitude,
                phase: s.phase,
                polarization: s.polarization,
            })
            .collect(),
        slits: sc
            .slits
            .iter()
            .map(|a| ApertureFile {
                center: [a.center.x, a.center.y, a.center.z],
                width_x: a.width_x,
                width_y: a.width_y,
            })
            .collect(),
        detectors: sc
            .detectors
            .iter()
            .map(|d| DetectorFile {
                center: [
                    d.aperture.center.x,
                    d.aperture.center.y,
                    d.aperture.center.z,
                ],
                width_x: d.aperture.width_x,
                width_y: d.aperture.width_y,
                patch: PatchFile {
                    j0: d.patch.j0,
                    k: d.patch.k,
                    kp: d.patch.kp,
                },
            })
            .collect(),
        planes: PlanesFile {
            input_z: sc.input_plane_z,
            slit_z: sc.slit_plane_z,
            output_z: sc.output_plane_z,
        },
        barrier: sc.barrier.allowed.clone(),
    };
    serde_json::to_string_pretty(&file).expect("scenario serialization cannot fail")
}

/// Content hash of a scenario (SHA-256 of its canonical JSON form), used to
/// stamp artifacts with provenance.
pub fn scenario_hash(sc: &ScenarioConfig) -> String {
    let digest = Sha256::digest(save_scenario(sc).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
