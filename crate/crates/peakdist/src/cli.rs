//! Command-line front end: evaluate peak height distributions over grids,
//! run simulation validation campaigns, and emit CSV/JSON tables.

use crate::cosine::{peak_tail_cosine_mc, peak_tail_cosine_quad, CosineSpec};
use crate::error::{Error, Result};
use crate::numerics::{integrate_1d, QuadConfig, RandomStream};
use crate::planar::{peak_tail_planar, rescale_to_unit_gradient, PlanarDist, PlanarSpec, RawPlanarSpec};
use crate::process1d::{
    conditional_rho, peak_density_1d, peak_density_stationary_1d, peak_tail_1d,
    peak_tail_stationary_1d, Rho1D, StationaryKappa,
};
use crate::rmt::{expect_goi, peak_tail_aniso, AnisoSpec};
use crate::validate::{
    find_peaks_1d, find_peaks_2d, ks_distance, simulate_cosine_1d, simulate_cosine_2d,
    spectral_moments_1d, CovarianceHandle1D, EmpiricalCdf, GaussianSampler1D, Grid1D, Grid2D,
    StationaryCov2D, StationarySampler2D,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INSUFFICIENT_PEAKS: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "peakdist", version, about = "Peak height distributions of smooth Gaussian random fields")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate F(u) (and the density where available) over a u grid.
    Eval(EvalArgs),
    /// Simulate the field, extract peaks, and compare to the formula by KS distance.
    Validate(ValidateArgs),
    /// Run the built-in closed-form and cross-family oracle checks.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Process1d,
    Planar,
    Cosine,
    Aniso,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Process1d => "process1d",
            Family::Planar => "planar",
            Family::Cosine => "cosine",
            Family::Aniso => "aniso",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

/// Family parameters; every flag optionally backed by a JSON config file,
/// flags winning on conflict.
#[derive(Args, Debug, Clone)]
struct FamilyArgs {
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// JSON file with the same keys as the flags (snake_case).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Conditional correlation for the nonstationary 1D family, in (-1, 0).
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    /// Shape parameter for stationary/isotropic families.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long = "sigma1-sq")]
    sigma1_sq: Option<f64>,
    #[arg(long = "sigma2-sq")]
    sigma2_sq: Option<f64>,
    #[arg(long = "sigma3-sq")]
    sigma3_sq: Option<f64>,
    /// Gradient standard deviations for raw planar specs (rescaled away).
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    /// Dimension for cosine/aniso families.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated positive frequencies, e.g. "1,2.5".
    #[arg(long)]
    omegas: Option<String>,
    /// phi'(0) < 0 for the aniso family.
    #[arg(long, allow_hyphen_values = true)]
    phi1: Option<f64>,
    /// phi''(0) > 0 for the aniso family.
    #[arg(long)]
    phi2: Option<f64>,
    /// Row-major comma-separated N x N matrix for the aniso family.
    #[arg(long = "a-matrix")]
    a_matrix: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo sample count (eval) or replication count (validate).
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    family: FamilyArgs,
    /// Evaluation grid MIN:MAX:STEP.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Single evaluation point (alternative to --grid).
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// JSON config file mirror of the family flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    family: Option<String>,
    rho: Option<f64>,
    kappa: Option<f64>,
    sigma1_sq: Option<f64>,
    sigma2_sq: Option<f64>,
    sigma3_sq: Option<f64>,
    gamma1: Option<f64>,
    gamma2: Option<f64>,
    n: Option<usize>,
    omegas: Option<Vec<f64>>,
    phi1: Option<f64>,
    phi2: Option<f64>,
    a_matrix: Option<Vec<f64>>,
    seed: Option<u64>,
    samples: Option<usize>,
}

/// Fully merged run configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma1_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma2_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sigma3_sq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omegas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phi2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a_matrix: Option<Vec<f64>>,
    seed: u64,
    samples: usize,
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::invariant(format!("bad number {s:?}: {e}")))
        })
        .collect()
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::invariant(format!("grid must be MIN:MAX:STEP, got {text:?}")));
    }
    let vals: Vec<f64> = parts
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Error::invariant(format!("bad grid component {s:?}: {e}")))
        })
        .collect::<Result<_>>()?;
    let (min, max, step) = (vals[0], vals[1], vals[2]);
    if !(min < max) {
        return Err(Error::invariant(format!("grid min < max required, got {min}:{max}")));
    }
    if !(step > 0.0) {
        return Err(Error::invariant(format!("grid step > 0 required, got {step}")));
    }
    let mut points = Vec::new();
    let mut k = 0u64;
    loop {
        let u = min + step * k as f64;
        if u > max + step * 1e-9 {
            break;
        }
        points.push(u);
        k += 1;
    }
    Ok(points)
}

impl FamilyArgs {
    fn merge(&self) -> Result<RunConfig> {
        let file: FileConfig = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::invariant(format!("cannot read config {path:?}: {e}")))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::invariant(format!("bad config {path:?}: {e}")))?
            }
            None => FileConfig::default(),
        };
        let family = match (self.family, file.family.as_deref()) {
            (Some(f), _) => f.name().to_string(),
            (None, Some(f)) => {
                let valid = ["process1d", "planar", "cosine", "aniso"];
                if !valid.contains(&f) {
                    return Err(Error::invariant(format!("unknown family {f:?} in config")));
                }
                f.to_string()
            }
            (None, None) => return Err(Error::invariant("--family is required")),
        };
        let omegas = match &self.omegas {
            Some(text) => Some(parse_list(text)?),
            None => file.omegas,
        };
        let a_matrix = match &self.a_matrix {
            Some(text) => Some(parse_list(text)?),
            None => file.a_matrix,
        };
        Ok(RunConfig {
            family,
            rho: self.rho.or(file.rho),
            kappa: self.kappa.or(file.kappa),
            sigma1_sq: self.sigma1_sq.or(file.sigma1_sq),
            sigma2_sq: self.sigma2_sq.or(file.sigma2_sq),
            sigma3_sq: self.sigma3_sq.or(file.sigma3_sq),
            gamma1: self.gamma1.or(file.gamma1),
            gamma2: self.gamma2.or(file.gamma2),
            n: self.n.or(file.n),
            omegas,
            phi1: self.phi1.or(file.phi1),
            phi2: self.phi2.or(file.phi2),
            a_matrix,
            seed: if self.seed != 0 { self.seed } else { file.seed.unwrap_or(0) },
            samples: self.samples.or(file.samples).unwrap_or(200_000),
        })
    }
}

/// One output row: u, F(u), optional density, optional Monte-Carlo stderr.
#[derive(Debug, Clone, Serialize)]
pub struct EvalRow {
    pub u: f64,
    #[serde(rename = "F")]
    pub tail: f64,
    #[serde(rename = "h", skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

fn planar_spec_from(cfg: &RunConfig) -> Result<PlanarSpec> {
    let s1 = cfg.sigma1_sq.ok_or_else(|| Error::invariant("--sigma1-sq required for planar"))?;
    let s2 = cfg.sigma2_sq.ok_or_else(|| Error::invariant("--sigma2-sq required for planar"))?;
    let s3 = cfg.sigma3_sq.ok_or_else(|| Error::invariant("--sigma3-sq required for planar"))?;
    match (cfg.gamma1, cfg.gamma2) {
        (None, None) => PlanarSpec::new(s1, s2, s3),
        (g1, g2) => {
            let (g1, g2) = (g1.unwrap_or(1.0), g2.unwrap_or(1.0));
            rescale_to_unit_gradient(RawPlanarSpec {
                sigma1_sq: s1,
                sigma2_sq: s2,
                sigma3_sq: s3,
                gamma1_sq: g1 * g1,
                gamma2_sq: g2 * g2,
            })
        }
    }
}

fn aniso_spec_from(cfg: &RunConfig) -> Result<AnisoSpec> {
    let n = cfg.n.ok_or_else(|| Error::invariant("--n required for aniso"))?;
    let (phi1, phi2) = match (cfg.phi1, cfg.phi2, cfg.kappa) {
        (Some(p1), Some(p2), _) => (p1, p2),
        (None, None, Some(k)) => (-k, 1.0),
        _ => {
            return Err(Error::invariant(
                "aniso requires either --phi1 and --phi2, or --kappa",
            ))
        }
    };
    let a = match &cfg.a_matrix {
        Some(entries) => {
            if entries.len() != n * n {
                return Err(Error::invariant(format!(
                    "--a-matrix needs {} entries for N = {n}, got {}",
                    n * n,
                    entries.len()
                )));
            }
            DMatrix::from_row_slice(n, n, entries)
        }
        None => DMatrix::identity(n, n),
    };
    AnisoSpec::new(a, phi1, phi2)
}

fn eval_rows(cfg: &RunConfig, points: &[f64], quad: &QuadConfig) -> Result<Vec<EvalRow>> {
    match cfg.family.as_str() {
        "process1d" => {
            enum Mode {
                Nonstationary(Rho1D),
                Stationary(StationaryKappa),
            }
            let mode = match (cfg.rho, cfg.kappa) {
                (Some(_), Some(_)) => {
                    return Err(Error::invariant("give either --rho or --kappa, not both"))
                }
                (Some(r), None) => Mode::Nonstationary(Rho1D::new(r)?),
                (None, Some(k)) => Mode::Stationary(StationaryKappa::new(k)?),
                (None, None) => {
                    return Err(Error::invariant("process1d requires --rho or --kappa"))
                }
            };
            points
                .iter()
                .map(|&u| {
                    let (f, h) = match &mode {
                        Mode::Nonstationary(rho) => (peak_tail_1d(*rho, u), peak_density_1d(*rho, u)),
                        Mode::Stationary(k) => {
                            (peak_tail_stationary_1d(*k, u)?, peak_density_stationary_1d(*k, u)?)
                        }
                    };
                    Ok(EvalRow {
                        u,
                        tail: f,
                        density: Some(h),
                        stderr: None,
                    })
                })
                .collect()
        }
        "planar" => {
            let dist = PlanarDist::new(planar_spec_from(cfg)?, *quad)?;
            points
                .iter()
                .map(|&u| {
                    Ok(EvalRow {
                        u,
                        tail: dist.tail(u)?,
                        density: Some(dist.density(u)?),
                        stderr: None,
                    })
                })
                .collect()
        }
        "cosine" => {
            let spec = match (&cfg.omegas, cfg.n) {
                (Some(w), n) => {
                    let spec = CosineSpec::new(w.clone())?;
                    if let Some(n) = n {
                        if n != spec.n_dim {
                            return Err(Error::invariant(format!(
                                "--n {n} conflicts with {} frequencies",
                                spec.n_dim
                            )));
                        }
                    }
                    spec
                }
                (None, Some(n)) => CosineSpec::unit_frequencies(n)?,
                (None, None) => return Err(Error::invariant("cosine requires --n or --omegas")),
            };
            if spec.n_dim <= 4 {
                points
                    .iter()
                    .map(|&u| {
                        Ok(EvalRow {
                            u,
                            tail: peak_tail_cosine_quad(spec.n_dim, u, quad)?,
                            density: None,
                            stderr: None,
                        })
                    })
                    .collect()
            } else {
                let stream = RandomStream::new(cfg.seed, 0);
                points
                    .iter()
                    .enumerate()
                    .map(|(i, &u)| {
                        let e = peak_tail_cosine_mc(
                            spec.n_dim,
                            u,
                            cfg.samples,
                            &stream.substream(i as u64),
                        )?;
                        Ok(EvalRow {
                            u,
                            tail: e.value,
                            density: None,
                            stderr: Some(e.stderr),
                        })
                    })
                    .collect()
            }
        }
        "aniso" => {
            let spec = aniso_spec_from(cfg)?;
            let stream = RandomStream::new(cfg.seed, 0);
            points
                .iter()
                .map(|&u| {
                    let e = peak_tail_aniso(&spec, u, cfg.samples, &stream, quad)?;
                    Ok(EvalRow {
                        u,
                        tail: e.value,
                        density: None,
                        stderr: Some(e.stderr),
                    })
                })
                .collect()
        }
        other => Err(Error::invariant(format!("unknown family {other:?}"))),
    }
}

/// Monotone nonincreasing F check; 3 sigma slack per gap for MC columns.
fn check_monotone(rows: &[EvalRow]) -> Result<()> {
    for w in rows.windows(2) {
        let slack = match (w[0].stderr, w[1].stderr) {
            (Some(a), Some(b)) => 3.0 * (a + b),
            _ => 1e-12,
        };
        if w[1].tail > w[0].tail + slack {
            return Err(Error::invariant(format!(
                "non-monotone F: F({}) = {} < F({}) = {}",
                w[0].u, w[0].tail, w[1].u, w[1].tail
            )));
        }
    }
    Ok(())
}

fn render_csv(rows: &[EvalRow]) -> String {
    let has_density = rows.iter().any(|r| r.density.is_some());
    let has_stderr = rows.iter().any(|r| r.stderr.is_some());
    let mut out = String::from("u,F");
    if has_density {
        out.push_str(",h");
    }
    if has_stderr {
        out.push_str(",stderr");
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{:.16e},{:.16e}", r.u, r.tail));
        if has_density {
            out.push_str(&format!(",{:.16e}", r.density.unwrap_or(f64::NAN)));
        }
        if has_stderr {
            out.push_str(&format!(",{:.16e}", r.stderr.unwrap_or(f64::NAN)));
        }
        out.push('\n');
    }
    out
}

fn render_json(cfg: &RunConfig, rows: &[EvalRow]) -> String {
    let doc = json!({
        "meta": {
            "config": cfg,
            "seed": cfg.seed,
            "version": env!("CARGO_PKG_VERSION"),
        },
        "rows": rows,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::invariant(format!("cannot write {path:?}: {e}"))),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::invariant(format!("stdout: {e}")))
        }
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let cfg = args.family.merge()?;
    let points = match (&args.grid, args.u) {
        (Some(_), Some(_)) => return Err(Error::invariant("give either --grid or --u, not both")),
        (Some(g), None) => parse_grid(g)?,
        (None, Some(u)) => vec![u],
        (None, None) => return Err(Error::invariant("--grid or --u required")),
    };
    let quad = QuadConfig::default();
    let rows = eval_rows(&cfg, &points, &quad)?;
    check_monotone(&rows)?;
    let text = match args.format {
        OutputFormat::Csv => render_csv(&rows),
        OutputFormat::Json => render_json(&cfg, &rows),
    };
    write_output(&args.out, &text)
}

/// Simulation campaign report.
#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub family: String,
    pub n_peaks: usize,
    pub ks: f64,
    pub threshold: f64,
    pub pass: bool,
    pub grid_step: f64,
    pub grid_points_per_axis: usize,
    pub replications: usize,
    pub seed: u64,
}

fn validate_process1d(cfg: &RunConfig) -> Result<ValidationReport> {
    let cov = CovarianceHandle1D::squared_exponential();
    let grid = Grid1D::new(0.0, 0.01, 512)?;
    let replications = cfg.samples.clamp(200, 20_000);
    let sampler = GaussianSampler1D::new(&cov, grid)?;
    let mut stream = RandomStream::new(cfg.seed, 0);

    let mut heights = Vec::new();
    let batch = 100;
    let mut done = 0;
    while done < replications {
        let k = batch.min(replications - done);
        let paths = sampler.sample_batch(k, &mut stream);
        for col in 0..k {
            let values: Vec<f64> = paths.column(col).iter().cloned().collect();
            for p in find_peaks_1d(&values, grid) {
                heights.push(p.height);
            }
        }
        done += k;
    }

    // kappa = 1 for the squared-exponential; --kappa overrides for
    // negative-control runs.
    let kappa = StationaryKappa::new(cfg.kappa.unwrap_or(1.0))?;
    let emp = EmpiricalCdf::new(heights)?;
    let n_peaks = emp.len();
    let ks = ks_distance(&emp, |u| peak_tail_stationary_1d(kappa, u).unwrap_or(f64::NAN))?;
    let threshold = 0.03;
    Ok(ValidationReport {
        family: "process1d".into(),
        n_peaks,
        ks,
        threshold,
        pass: ks < threshold,
        grid_step: grid.step,
        grid_points_per_axis: grid.n_points,
        replications,
        seed: cfg.seed,
    })
}

fn validate_cosine(cfg: &RunConfig) -> Result<ValidationReport> {
    let n_dim = cfg.n.unwrap_or(1);
    let spec = match &cfg.omegas {
        Some(w) => CosineSpec::new(w.clone())?,
        None => CosineSpec::unit_frequencies(n_dim)?,
    };
    if spec.n_dim != n_dim {
        return Err(Error::invariant("--n conflicts with --omegas length"));
    }
    let quad = QuadConfig::default();
    let mut stream = RandomStream::new(cfg.seed, 0);
    let mut heights = Vec::new();
    let (replications, grid_step, grid_points);
    match n_dim {
        1 => {
            replications = cfg.samples.clamp(1000, 20_000);
            // One period of the slowest harmonic plus a boundary layer.
            let span = 2.0 * std::f64::consts::PI / spec.omegas[0] + 0.04;
            grid_step = 0.01;
            grid_points = (span / grid_step).ceil() as usize;
            let grid = Grid1D::new(0.0, grid_step, grid_points)?;
            for _ in 0..replications {
                let path = simulate_cosine_1d(&spec, grid, &mut stream)?;
                for p in find_peaks_1d(&path, grid) {
                    heights.push(p.height);
                }
            }
        }
        2 => {
            replications = cfg.samples.clamp(500, 6_000);
            grid_step = 0.05;
            let span = 2.0 * std::f64::consts::PI / spec.omegas.iter().cloned().fold(f64::INFINITY, f64::min) + 0.2;
            grid_points = (span / grid_step).ceil() as usize;
            let grid = Grid2D::new([0.0, 0.0], [grid_step, grid_step], [grid_points, grid_points])?;
            for _ in 0..replications {
                let field = simulate_cosine_2d(&spec, grid, &mut stream)?;
                for p in find_peaks_2d(&field, grid) {
                    heights.push(p.height);
                }
            }
        }
        _ => {
            return Err(Error::invariant(
                "cosine validation supports N in {1, 2} (gridded peak extraction)",
            ))
        }
    }
    let emp = EmpiricalCdf::new(heights)?;
    let n_peaks = emp.len();
    let ks = ks_distance(&emp, |u| {
        peak_tail_cosine_quad(n_dim, u, &quad).unwrap_or(f64::NAN)
    })?;
    let threshold = 0.03;
    Ok(ValidationReport {
        family: "cosine".into(),
        n_peaks,
        ks,
        threshold,
        pass: ks < threshold,
        grid_step,
        grid_points_per_axis: grid_points,
        replications,
        seed: cfg.seed,
    })
}

fn validate_planar(cfg: &RunConfig) -> Result<ValidationReport> {
    // Separable covariance exp(-t1^2/2 - t2^2/8), rescaled to unit gradient.
    let raw = RawPlanarSpec {
        sigma1_sq: 3.0,
        sigma2_sq: 3.0 / 16.0,
        sigma3_sq: 0.25,
        gamma1_sq: 1.0,
        gamma2_sq: 0.25,
    };
    let spec = rescale_to_unit_gradient(raw)?;
    let dist = PlanarDist::new(spec, QuadConfig::default())?;
    let table = dist.tail_table(-6.0, 6.0, 600)?;

    let cov = StationaryCov2D::separable_gaussian(0.5, 0.125)?;
    let grid = Grid2D::new([0.0, 0.0], [0.1, 0.2], [256, 256])?;
    let sampler = StationarySampler2D::new(&cov, grid)?;
    let mut stream = RandomStream::new(cfg.seed, 0);
    let replications = cfg.samples.clamp(12, 60);
    let mut heights = Vec::new();
    for _ in 0..replications {
        for field in sampler.sample_pair(&mut stream) {
            for p in find_peaks_2d(&field, grid) {
                heights.push(p.height);
            }
        }
    }
    let emp = EmpiricalCdf::new(heights)?;
    let n_peaks = emp.len();
    let ks = ks_distance(&emp, |u| table.eval(u))?;
    let threshold = 0.05;
    Ok(ValidationReport {
        family: "planar".into(),
        n_peaks,
        ks,
        threshold,
        pass: ks < threshold,
        grid_step: grid.step[0],
        grid_points_per_axis: grid.n_points[0],
        replications,
        seed: cfg.seed,
    })
}

fn cmd_validate(args: &ValidateArgs) -> Result<ValidationReport> {
    let cfg = args.family.merge()?;
    let report = match cfg.family.as_str() {
        "process1d" => validate_process1d(&cfg)?,
        "cosine" => validate_cosine(&cfg)?,
        "planar" => validate_planar(&cfg)?,
        "aniso" => {
            return Err(Error::invariant(
                "no simulator for family aniso; use eval with cross-family checks in selftest",
            ))
        }
        other => return Err(Error::invariant(format!("unknown family {other:?}"))),
    };
    let mut text = serde_json::to_string_pretty(&report).expect("serializable");
    text.push('\n');
    write_output(&args.out, &text)?;
    Ok(report)
}

struct Check {
    name: &'static str,
    run: fn() -> Result<bool>,
}

fn selftest_checks() -> Vec<Check> {
    vec![
        Check {
            name: "stationary 1d equals nonstationary at rho = -kappa/sqrt(3)",
            run: || {
                let kappa = StationaryKappa::new(1.0)?;
                let rho = Rho1D::new(-1.0 / 3.0f64.sqrt())?;
                let mut worst: f64 = 0.0;
                let mut u = -4.0;
                while u <= 4.0 {
                    worst = worst.max((peak_tail_stationary_1d(kappa, u)? - peak_tail_1d(rho, u)).abs());
                    u += 0.25;
                }
                Ok(worst < 1e-12)
            },
        },
        Check {
            name: "1d peak density integrates to one",
            run: || {
                let rho = Rho1D::new(-0.5)?;
                let cfg = QuadConfig::default();
                let q = integrate_1d(|x| peak_density_1d(rho, x), f64::NEG_INFINITY, f64::INFINITY, &cfg)?;
                Ok((q.value - 1.0).abs() < 1e-8)
            },
        },
        Check {
            name: "planar tail reaches one at the left end",
            run: || {
                let spec = PlanarSpec::new(3.0, 3.0, 1.0)?;
                let f = peak_tail_planar(spec, -8.0, &QuadConfig::default())?;
                Ok((f - 1.0).abs() < 1e-6)
            },
        },
        Check {
            name: "cosine N=1 tail is exp(-u^2/2)",
            run: || {
                let cfg = QuadConfig::default();
                for u in [0.0, 0.7, 1.5, 2.5] {
                    if (peak_tail_cosine_quad(1, u, &cfg)? - (-0.5 * u * u).exp()).abs() > 1e-8 {
                        return Ok(false);
                    }
                }
                Ok(true)
            },
        },
        Check {
            name: "cosine tail normalizes at zero for N in {2, 3}",
            run: || {
                let cfg = QuadConfig::default();
                Ok((peak_tail_cosine_quad(2, 0.0, &cfg)? - 1.0).abs() < 1e-8
                    && (peak_tail_cosine_quad(3, 0.0, &cfg)? - 1.0).abs() < 1e-8)
            },
        },
        Check {
            name: "negative-half expectation of |lambda| under variance-3/2 Gaussian",
            run: || {
                let stream = RandomStream::new(1234, 0);
                let c = crate::rmt::GOICovParam::new(0.5, 1)?;
                let e = expect_goi(
                    |l: &[f64]| if l[0] < 0.0 { l[0].abs() } else { 0.0 },
                    1,
                    c,
                    100_000,
                    &stream,
                )?;
                Ok((e.value - 0.4886025119029199).abs() < 3.0 * e.stderr)
            },
        },
        Check {
            name: "aniso critical branch N=1 matches exp(-u^2/2)",
            run: || {
                let spec = AnisoSpec::new(DMatrix::identity(1, 1), -(3.0f64.sqrt()), 1.0)?;
                let stream = RandomStream::new(77, 0);
                let cfg = QuadConfig::default();
                for u in [0.5, 1.5] {
                    let e = peak_tail_aniso(&spec, u, 80_000, &stream, &cfg)?;
                    let exact = (-0.5 * u * u).exp();
                    if (e.value - exact).abs() > 3.0 * e.stderr + 1e-10 {
                        return Ok(false);
                    }
                }
                Ok(true)
            },
        },
        Check {
            name: "spectral moments recover the squared-exponential triple",
            run: || {
                let cov = CovarianceHandle1D::squared_exponential();
                let s = spectral_moments_1d(&cov, 0.3)?;
                let rho = conditional_rho(s).get();
                Ok((s.lambda1 - 1.0).abs() < 1e-5
                    && (s.lambda2 - 3.0).abs() < 1e-5
                    && (rho + 1.0 / 3.0f64.sqrt()).abs() < 1e-5)
            },
        },
    ]
}

pub fn cmd_selftest() -> i32 {
    let mut failures = 0;
    for check in selftest_checks() {
        let outcome = (check.run)();
        let (ok, detail) = match outcome {
            Ok(true) => (true, String::new()),
            Ok(false) => (false, "check returned false".into()),
            Err(e) => (false, format!("{e}")),
        };
        if ok {
            println!("PASS {}", check.name);
        } else {
            println!("FAIL {} ({detail})", check.name);
            failures += 1;
        }
    }
    if failures == 0 {
        println!("selftest: all checks passed");
        EXIT_OK
    } else {
        println!("selftest: {failures} check(s) failed");
        EXIT_FAIL
    }
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Eval(args) => match cmd_eval(&args) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_FAIL
            }
        },
        Command::Validate(args) => match cmd_validate(&args) {
            Ok(report) => {
                if report.pass {
                    EXIT_OK
                } else {
                    eprintln!(
                        "validation failed: KS = {} >= threshold {} ({} peaks)",
                        report.ks, report.threshold, report.n_peaks
                    );
                    EXIT_FAIL
                }
            }
            Err(Error::InsufficientSamples { got, need }) => {
                eprintln!("insufficient peaks for a verdict: {got} < {need}");
                EXIT_INSUFFICIENT_PEAKS
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_FAIL
            }
        },
        Command::Selftest => cmd_selftest(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("-3:3:0.5").unwrap();
        assert_eq!(g.len(), 13);
        assert_eq!(g[0], -3.0);
        assert_eq!(*g.last().unwrap(), 3.0);
        assert!(parse_grid("3:-3:0.5").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn process1d_rows_closed_form_at_zero() {
        let cfg = RunConfig {
            family: "process1d".into(),
            rho: Some(-0.5),
            kappa: None,
            sigma1_sq: None,
            sigma2_sq: None,
            sigma3_sq: None,
            gamma1: None,
            gamma2: None,
            n: None,
            omegas: None,
            phi1: None,
            phi2: None,
            a_matrix: None,
            seed: 0,
            samples: 10_000,
        };
        let rows = eval_rows(&cfg, &parse_grid("-3:3:0.5").unwrap(), &QuadConfig::default()).unwrap();
        assert_eq!(rows.len(), 13);
        let at_zero = rows.iter().find(|r| r.u == 0.0).unwrap();
        // F(0) = 1/2 - rho/2 = 0.75 for rho = -0.5.
        assert!((at_zero.tail - 0.75).abs() < 1e-12, "{}", at_zero.tail);
        check_monotone(&rows).unwrap();
    }

    #[test]
    fn cosine_rows_match_closed_form() {
        let cfg = RunConfig {
            family: "cosine".into(),
            rho: None,
            kappa: None,
            sigma1_sq: None,
            sigma2_sq: None,
            sigma3_sq: None,
            gamma1: None,
            gamma2: None,
            n: Some(1),
            omegas: None,
            phi1: None,
            phi2: None,
            a_matrix: None,
            seed: 0,
            samples: 10_000,
        };
        let rows = eval_rows(&cfg, &[0.0, 1.0, 2.0, 3.0], &QuadConfig::default()).unwrap();
        for r in &rows {
            assert!((r.tail - (-0.5 * r.u * r.u).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn csv_rendering_is_stable() {
        let rows = vec![
            EvalRow { u: 0.0, tail: 0.75, density: Some(0.5), stderr: None },
            EvalRow { u: 0.5, tail: 0.5, density: Some(0.4), stderr: None },
        ];
        let a = render_csv(&rows);
        let b = render_csv(&rows);
        assert_eq!(a, b);
        assert!(a.starts_with("u,F,h\n"));
        assert!(a.contains("7.5000000000000000e-1"));
    }

    #[test]
    fn monotone_check_catches_increase() {
        let rows = vec![
            EvalRow { u: 0.0, tail: 0.5, density: None, stderr: None },
            EvalRow { u: 1.0, tail: 0.6, density: None, stderr: None },
        ];
        assert!(check_monotone(&rows).is_err());
    }

    #[test]
    fn config_file_merge_flags_win() {
        let dir = std::env::temp_dir().join("peakdist-cli-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cfg.json");
        std::fs::write(&path, r#"{"family": "process1d", "rho": -0.3, "seed": 9}"#).unwrap();
        let args = FamilyArgs {
            family: None,
            config: Some(path),
            rho: Some(-0.7),
            kappa: None,
            sigma1_sq: None,
            sigma2_sq: None,
            sigma3_sq: None,
            gamma1: None,
            gamma2: None,
            n: None,
            omegas: None,
            phi1: None,
            phi2: None,
            a_matrix: None,
            seed: 0,
            samples: None,
        };
        let cfg = args.merge().unwrap();
        assert_eq!(cfg.family, "process1d");
        assert_eq!(cfg.rho, Some(-0.7));
        assert_eq!(cfg.seed, 9);
    }
}
