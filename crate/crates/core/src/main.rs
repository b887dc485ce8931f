//! Command-line driver for the slice-space diffraction pipelines.
//!
//! One subcommand per pipeline: `characterize` (transfer matrix and polar
//! factors), `correlate` (intensity correlation sweep), `mzi` (cascaded
//! double-slit fringe scan), and `decompose` (Haar coefficient tables,
//! reconstruction samples, and power accounting). Every artifact embeds the
//! scenario hash and quadrature settings so runs can be traced back to
//! their exact inputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use slicebench::compose::{build_mzi, characterize_mzi, mzi_scan};
use slicebench::correlation::{correlation_curve, PhaseDistribution};
use slicebench::haar::{patch_basis, project, reconstruct, AxisFactor};
use slicebench::quad::QuadratureSpec;
use slicebench::scenario::{
    canonical_double_slit, canonical_triple_slit, load_scenario, scenario_hash, ScenarioConfig,
};
use slicebench::slicespace::{diffracted_field_at_port, power_report};
use slicebench::transfer::{characterize, matrix_to_json, splitter_ratio, TransferResult};
use slicebench::{Result, SimError};

#[derive(Parser)]
#[command(name = "slicebench", version, about = "Post-selected slice-space diffraction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute X, Y, T = Y X^-1 and the polar factors of a scenario.
    Characterize {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep the polarization angle and fit the correlation curve.
    Correlate {
        #[command(flatten)]
        common: Common,
        /// Relative-phase distribution of the two sources.
        #[arg(long, value_enum, default_value = "uniform")]
        dist: Dist,
        /// Theta grid as start:stop:count (inclusive endpoints).
        #[arg(long, default_value = "0:1.5707963267948966:65")]
        thetas: String,
    },
    /// Chain two double-slit stages into an interferometer and scan the
    /// phase shifter.
    Mzi {
        #[command(flatten)]
        common: Common,
        /// Alpha grid as start:stop:count (inclusive endpoints).
        #[arg(long, default_value = "0:6.283185307179586:128")]
        alphas: String,
    },
    /// Expand one port's field in the patch Haar basis and report powers.
    Decompose {
        #[command(flatten)]
        common: Common,
        /// Source to drive (1-based).
        #[arg(long, default_value_t = 1)]
        source: usize,
        /// Output port to expand (1-based).
        #[arg(long, default_value_t = 1)]
        port: usize,
        /// Finest wavelet level included in the basis.
        #[arg(long, default_value_t = 2)]
        max_level: i32,
    },
}

#[derive(Args)]
struct Common {
    /// Built-in scenario to run.
    #[arg(long, value_enum, conflicts_with = "scenario")]
    builtin: Option<Builtin>,
    /// Path to a scenario JSON file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Directory receiving the artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Gauss-Legendre points per axis and refinement pass.
    #[arg(long)]
    quad_points: Option<usize>,
    /// Relative tolerance for quadrature refinement.
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Worker threads (falls back to SLICEBENCH_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Double,
    Triple,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Twopoint,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                SimError::Parse(_) | SimError::Validation(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Characterize { common }
        | Command::Correlate { common, .. }
        | Command::Mzi { common, .. }
        | Command::Decompose { common, .. } => common,
    };
    configure_threads(common.threads)?;
    let sc = resolve_scenario(common)?;
    sc.validate()?;
    let quad = resolve_quadrature(common)?;
    std::fs::create_dir_all(&common.out)?;
    let hash = scenario_hash(&sc);

    match cli.command {
        Command::Characterize { ref common } => cmd_characterize(&sc, &quad, &hash, &common.out),
        Command::Correlate {
            ref common,
            dist,
            ref thetas,
        } => cmd_correlate(&sc, &quad, &hash, &common.out, dist, thetas),
        Command::Mzi {
            ref common,
            ref alphas,
        } => cmd_mzi(&sc, &quad, &hash, &common.out, alphas),
        Command::Decompose {
            ref common,
            source,
            port,
            max_level,
        } => cmd_decompose(&sc, &quad, &hash, &common.out, source, port, max_level),
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let from_env = || -> Result<Option<usize>> {
        match std::env::var("SLICEBENCH_THREADS") {
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .map(Some)
                .map_err(|_| SimError::Validation(format!("bad SLICEBENCH_THREADS value: {s}"))),
            Err(_) => Ok(None),
        }
    };
    let threads = match flag {
        Some(t) => Some(t),
        None => from_env()?,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(SimError::Validation("thread count must be positive".into()));
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| SimError::Validation(format!("thread pool setup failed: {e}")))?;
    }
    Ok(())
}

fn resolve_scenario(common: &Common) -> Result<ScenarioConfig> {
    match (&common.builtin, &common.scenario) {
        (Some(Builtin::Double), None) => Ok(canonical_double_slit()),
        (Some(Builtin::Triple), None) => Ok(canonical_triple_slit()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                SimError::Parse(format!("cannot read scenario {}: {e}", path.display()))
            })?;
            load_scenario(&text)
        }
        _ => Err(SimError::Validation(
            "exactly one of --builtin or --scenario is required".into(),
        )),
    }
}

fn resolve_quadrature(common: &Common) -> Result<QuadratureSpec> {
    let mut quad = QuadratureSpec::default();
    if let Some(p) = common.quad_points {
        quad.points = p;
    }
    if let Some(t) = common.quad_tol {
        quad.rel_tolerance = t;
    }
    quad.validate()?;
    Ok(quad)
}

/// Inclusive linear grid from a "start:stop:count" flag.
fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || SimError::Validation(format!("bad grid spec '{text}'; expected start:stop:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect())
}

fn quadrature_json(quad: &QuadratureSpec) -> serde_json::Value {
    json!({
        "points": quad.points,
        "max_refinements": quad.max_refinements,
        "rel_tolerance": quad.rel_tolerance,
    })
}

fn csv_header(hash: &str, quad: &QuadratureSpec, columns: &str) -> String {
    format!(
        "# scenario: {hash}\n# quadrature: points={} max_refinements={} rel_tolerance={}\n{columns}\n",
        quad.points, quad.max_refinements, quad.rel_tolerance
    )
}

fn transfer_json(result: &TransferResult, hash: &str, quad: &QuadratureSpec) -> serde_json::Value {
    let (port1, port2) = splitter_ratio(&result.u);
    json!({
        "scenario_hash": hash,
        "quadrature": quadrature_json(quad),
        "x": matrix_to_json(&result.x),
        "y": matrix_to_json(&result.y),
        "t": matrix_to_json(&result.t),
        "u": matrix_to_json(&result.u),
        "p": matrix_to_json(&result.p),
        "unitarity_defect": result.unitarity_defect,
        "condition_number": result.condition_number,
        "splitter_ratio": [port1, port2],
    })
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON serialization cannot fail");
    text.push('\n');
    write_text(dir, name, &text)
}

fn cmd_characterize(
    sc: &ScenarioConfig,
    quad: &QuadratureSpec,
    hash: &str,
    out: &Path,
) -> Result<()> {
    let result = characterize(sc, quad)?;
    write_json(out, "transfer.json", &transfer_json(&result, hash, quad))?;
    println!(
        "characterize: wrote transfer.json (defect {:.3e}, condition {:.3e})",
        result.unitarity_defect, result.condition_number
    );
    Ok(())
}

fn cmd_correlate(
    sc: &ScenarioConfig,
    quad: &QuadratureSpec,
    hash: &str,
    out: &Path,
    dist: Dist,
    thetas: &str,
) -> Result<()> {
    let grid = parse_grid(thetas)?;
    let (dist, dist_name) = match dist {
        Dist::Uniform => (PhaseDistribution::Uniform, "uniform"),
        Dist::Twopoint => (PhaseDistribution::TwoPoint, "twopoint"),
    };
    let curve = correlation_curve(sc, &grid, &dist, quad)?;
    let mut csv = csv_header(hash, quad, "theta,C");
    for (t, c) in curve.thetas.iter().zip(&curve.values) {
        writeln!(csv, "{t},{c}").expect("string write cannot fail");
    }
    write_text(out, "correlation.csv", &csv)?;
    write_json(
        out,
        "fit.json",
        &json!({
            "scenario_hash": hash,
            "quadrature": quadrature_json(quad),
            "dist": dist_name,
            "a": curve.fit_a,
            "b": curve.fit_b,
            "residual": curve.fit_residual,
            "dip": curve.dip,
        }),
    )?;
    println!(
        "correlate: wrote correlation.csv + fit.json (fit {:.5} - {:.5} cos2theta, dip {:.5})",
        curve.fit_a, curve.fit_b, curve.dip
    );
    Ok(())
}

fn cmd_mzi(
    sc: &ScenarioConfig,
    quad: &QuadratureSpec,
    hash: &str,
    out: &Path,
    alphas: &str,
) -> Result<()> {
    let grid = parse_grid(alphas)?;
    let cascade = build_mzi(sc, 0.0)?;
    let curve = mzi_scan(&cascade, &grid, quad)?;
    let mut csv = csv_header(hash, quad, "alpha,I1,I2");
    for ((a, i1), i2) in curve.alphas.iter().zip(&curve.i1).zip(&curve.i2) {
        writeln!(csv, "{a},{i1},{i2}").expect("string write cannot fail");
    }
    write_text(out, "fringes.csv", &csv)?;
    let result = characterize_mzi(&cascade, quad)?;
    let mut value = transfer_json(&result, hash, quad);
    value["fits"] = serde_json::to_value(&curve.fits).expect("JSON serialization cannot fail");
    write_json(out, "mzi_transfer.json", &value)?;
    println!(
        "mzi: wrote fringes.csv + mzi_transfer.json (V1 {:.5}, V2 {:.5})",
        curve.fits[0].visibility, curve.fits[1].visibility
    );
    Ok(())
}

fn axis_indices(f: &AxisFactor) -> (i64, i64) {
    match *f {
        AxisFactor::Scaling { j, k } => (j as i64, k),
        AxisFactor::Wavelet { m, n } => (m as i64, n),
    }
}

fn cmd_decompose(
    sc: &ScenarioConfig,
    quad: &QuadratureSpec,
    hash: &str,
    out: &Path,
    source: usize,
    port: usize,
    max_level: i32,
) -> Result<()> {
    let n = sc.n();
    if source == 0 || source > n {
        return Err(SimError::Validation(format!(
            "--source must be in 1..={n} (got {source})"
        )));
    }
    if port == 0 || port > n {
        return Err(SimError::Validation(format!(
            "--port must be in 1..={n} (got {port})"
        )));
    }
    let (src_idx, port_idx) = (source - 1, port - 1);
    let patch = sc.detectors[port_idx].patch;
    if max_level < patch.j0 {
        return Err(SimError::Validation(format!(
            "--max-level must be at least the patch level {}",
            patch.j0
        )));
    }
    let basis = patch_basis(patch, max_level);
    let field = |x: f64, y: f64| {
        diffracted_field_at_port(sc, src_idx, port_idx, x, y)
            .expect("canonical geometry keeps the port away from singular points")
    };
    let coeffs: Vec<_> = slicebench::par::map_indexed(basis.len(), |i| project(&field, &basis[i], quad))
        .into_iter()
        .collect::<Result<_>>()?;

    let mut csv = csv_header(hash, quad, "i,m,n,mp,np,re_a,im_a");
    for (b, a) in basis.iter().zip(&coeffs) {
        let (m, nn) = axis_indices(&b.x_factor);
        let (mp, np) = axis_indices(&b.y_factor);
        writeln!(csv, "{},{m},{nn},{mp},{np},{},{}", b.ordinal, a.re, a.im)
            .expect("string write cannot fail");
    }
    write_text(out, "coefficients.csv", &csv)?;

    let (x0, x1) = patch.x_range();
    let mut rec_csv = csv_header(hash, quad, "x,re_e,im_e,re_e_rec,im_e_rec");
    let samples = 256;
    for i in 0..samples {
        let x = x0 + (x1 - x0) * (i as f64 + 0.5) / samples as f64;
        let e = field(x, 0.0);
        let r = reconstruct(&coeffs, &basis, x, 0.0)?;
        writeln!(rec_csv, "{x},{},{},{},{}", e.re, e.im, r.re, r.im)
            .expect("string write cannot fail");
    }
    write_text(out, "reconstruction.csv", &rec_csv)?;

    let mut pow_csv = csv_header(hash, quad, "source,port,intercepted,mode_power,ratio");
    for i in 0..n {
        let report = power_report(sc, i, quad)?;
        for row in &report.rows {
            writeln!(
                pow_csv,
                "{},{},{},{},{}",
                i + 1,
                row.port + 1,
                row.intercepted,
                row.mode_power,
                row.ratio
            )
            .expect("string write cannot fail");
        }
    }
    write_text(out, "power_table.csv", &pow_csv)?;

    let dominant = coeffs[0].norm_sqr();
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    println!(
        "decompose: wrote coefficients.csv + reconstruction.csv + power_table.csv \
         ({} modes, dominant share {:.6})",
        basis.len(),
        dominant / total
    );
    Ok(())
}
