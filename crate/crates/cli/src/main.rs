use std::f64::consts::PI;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use seaice_tri::benchmark::{
    bisect, reference_noise, run_benchmark, sweep, Frontier, ScanAxis,
};
use seaice_tri::config::{parse_axis, parse_scheme, RunConfig};
use seaice_tri::eigen::{sweep_branches, BranchClass, SweepParams};
use seaice_tri::io::write_vtk_mesh;
use seaice_tri::mesh::{build_mesh, Layout};
use seaice_tri::mevp::Scheme;
use seaice_tri::symbols::{analytic_symbol, continuous_eigenvalues, numeric_symbol};
use seaice_tri::{Error, GridKind, SymbolParams, Wavevector};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VERIFY: u8 = 3;
/// Largest entrywise deviation `verify` accepts, relative to the symbol norm.
const VERIFY_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "seaice-tri", version, about = "Fourier analysis and mEVP experiments for sea ice on triangular meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalue branches of a discrete symbol along a ray in k-space.
    Symbols(SymbolsArgs),
    /// Compare operators applied on a periodic mesh with their closed-form symbols.
    Verify(VerifyArgs),
    /// Run the moving-cyclone benchmark once.
    Bench(BenchArgs),
    /// Bisect or sweep one parameter for the stability frontier.
    Scan(ScanArgs),
    /// Write a mesh as legacy VTK.
    MeshDump(MeshArgs),
}

#[derive(Args, Debug)]
struct SymbolsArgs {
    /// vertex-lumped, vertex-consistent, cell-v, cell-corrected or edge-cr
    #[arg(long)]
    grid: String,
    /// Ray direction: radians, `30deg` or `pi/6`.
    #[arg(long, default_value = "30deg")]
    dir: String,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// zeta / eta
    #[arg(long, default_value_t = 1.0)]
    z: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Largest |k|a (defaults to the zone boundary).
    #[arg(long)]
    ka_max: Option<f64>,
    /// Branch CSV destination; stdout when absent (the summary then goes to stderr).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    z: f64,
    /// Mesh periods along both lattice directions.
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Number of random commensurate wavevectors.
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Explicit wavevector `k,l` in units of 1/a (repeatable).
    #[arg(long = "kv", value_name = "K,L")]
    kvs: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` override applied after the file (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Solver grid: a, b, cd (b-case-v needs --no-correction).
    #[arg(long)]
    grid: Option<String>,
    /// Sets alpha and beta together.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Output directory for the diagnostics CSV and VTK snapshots.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the unstabilized cell grid (strain rates at vertices).
    #[arg(long)]
    no_correction: bool,
    /// Required together with --no-correction.
    #[arg(long)]
    allow_unstable: bool,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    run: RunArgs,
    /// alpha-beta, dt or eps
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    lo: Option<f64>,
    #[arg(long)]
    hi: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Comma-separated values to sweep instead of bisecting.
    #[arg(long)]
    values: Option<String>,
    /// Frontier CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MeshArgs {
    #[arg(long, default_value_t = 8)]
    nx: usize,
    #[arg(long, default_value_t = 8)]
    ny: usize,
    /// Triangle side (m).
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// periodic or rectangular
    #[arg(long, default_value = "periodic")]
    layout: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFinite { .. }
            | Error::Cfl { .. }
            | Error::NonConvergence { .. }
            | Error::SingularMass { .. }
            | Error::Classification(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

type CmdResult = Result<(), Failure>;

fn parse_angle(s: &str) -> Result<f64, Failure> {
    let bad = || Failure::usage(format!("cannot read direction {s:?}"));
    if let Some(d) = s.strip_suffix("deg") {
        return d.trim().parse::<f64>().map(f64::to_radians).map_err(|_| bad());
    }
    if let Some(rest) = s.strip_prefix("pi") {
        let rest = rest.trim();
        if rest.is_empty() {
            return Ok(PI);
        }
        let d = rest.strip_prefix('/').ok_or_else(bad)?;
        return d.trim().parse::<f64>().map(|d| PI / d).map_err(|_| bad());
    }
    s.parse().map_err(|_| bad())
}

fn parse_grid(name: &str, eps: f64) -> Result<GridKind, Failure> {
    let kind = GridKind::parse_with_eps(name, eps).map_err(|e| Failure::usage(e.to_string()))?;
    if kind == GridKind::Continuous {
        return Err(Failure::usage("the continuous operator has no discrete symbol"));
    }
    Ok(kind)
}

/// CSV goes to the file when given; otherwise to stdout and the summary to stderr.
fn sinks(out: &Option<PathBuf>) -> Result<(Box<dyn Write>, Box<dyn Write>), Failure> {
    Ok(match out {
        Some(p) => (Box::new(File::create(p)?), Box::new(io::stdout())),
        None => (Box::new(io::stdout()), Box::new(io::stderr())),
    })
}

fn cmd_symbols(a: SymbolsArgs) -> CmdResult {
    let kind = parse_grid(&a.grid, a.eps)?;
    let direction = parse_angle(&a.dir)?;
    let sp = SweepParams {
        symbol: SymbolParams { a: 1.0, eta: 1.0, z: a.z },
        direction,
        n_samples: a.samples,
        ka_max: a.ka_max,
    };
    let table = sweep_branches(kind, &sp).map_err(|e| match e {
        Error::InvalidParameter(m) => Failure::usage(m),
        other => other.into(),
    })?;
    let (mut csv, mut summary) = sinks(&a.out)?;
    table.write_csv(&mut csv)?;
    writeln!(summary, "grid {kind}, direction {:.6} rad, z {}", direction, a.z)?;
    writeln!(summary, "samples {}, |k|a up to {:.6}", table.samples.len(), table.samples.last().copied().unwrap_or(0.0))?;
    writeln!(summary, "max |a^2 lambda / eta| {:.6e}", table.max_abs())?;
    writeln!(
        summary,
        "branches: {} physical, {} spurious, {} kernel",
        table.count(BranchClass::Physical),
        table.count(BranchClass::Spurious),
        table.count(BranchClass::Kernel)
    )?;
    writeln!(summary, "zero branches: {}", table.zero_branches())?;
    writeln!(summary, "unresolved crossings: {}", table.crossings)?;
    Ok(())
}

fn parse_kv(s: &str) -> Result<Wavevector, Failure> {
    let (k, l) = s.split_once(',').ok_or_else(|| Failure::usage(format!("--kv expects K,L, got {s:?}")))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| Failure::usage(format!("--kv: bad number {x:?}")));
    Ok(Wavevector::new(num(k)?, num(l)?))
}

fn cmd_verify(a: VerifyArgs) -> CmdResult {
    let kind = parse_grid(&a.grid, a.eps)?;
    let mesh = build_mesh(a.n, a.n, 1.0, Layout::Rhombic)?;
    let p = SymbolParams { a: 1.0, eta: 1.0, z: a.z };
    let mut kvs = Vec::new();
    for s in &a.kvs {
        let kv = parse_kv(s)?;
        if mesh.is_commensurate(kv.k, kv.l) {
            kvs.push(kv);
        } else {
            eprintln!("warning: ({}, {}) is not commensurate with the {}x{} mesh, skipped", kv.k, kv.l, a.n, a.n);
        }
    }
    if a.kvs.is_empty() {
        let [b1, b2] = mesh.reciprocal_periods();
        let mut rng = StdRng::seed_from_u64(a.seed);
        let half = (a.n / 2) as i64;
        while kvs.len() < a.count {
            let (i, j) = (rng.gen_range(-half..half), rng.gen_range(-half..half));
            if (i, j) == (0, 0) {
                continue;
            }
            let (x, y) = (i as f64, j as f64);
            kvs.push(Wavevector::new(x * b1[0] + y * b2[0], x * b1[1] + y * b2[1]));
        }
    }
    let mut out = io::stdout().lock();
    if kind == GridKind::CellCorrected {
        // no closed form: classify the eigenvalues of the mesh symbol instead
        writeln!(out, "k,l,near_continuous,spurious,min_spurious_abs")?;
        for kv in &kvs {
            let s = numeric_symbol(kind, *kv, &mesh, &p)?;
            let cont = continuous_eigenvalues(*kv, p.eta, p.z * p.eta);
            let ev = s.eigenvalues()?;
            let near = ev.iter().filter(|l| cont.iter().any(|c| (l.re - c).abs() <= 0.1 * c.abs())).count();
            let spurious: Vec<f64> =
                ev.iter().filter(|l| cont.iter().all(|c| (l.re - c).abs() > 0.1 * c.abs())).map(|l| l.norm()).collect();
            let floor = spurious.iter().copied().fold(f64::INFINITY, f64::min);
            writeln!(out, "{:.10},{:.10},{},{},{:.6e}", kv.k, kv.l, near, spurious.len(), floor)?;
        }
        return Ok(());
    }
    writeln!(out, "k,l,deviation,relative")?;
    let mut worst = 0.0f64;
    for kv in &kvs {
        let num = numeric_symbol(kind, *kv, &mesh, &p)?;
        let ana = analytic_symbol(kind, *kv, &p)?;
        let dev = num.max_deviation(&ana);
        let rel = dev / ana.norm().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        writeln!(out, "{:.10},{:.10},{:.3e},{:.3e}", kv.k, kv.l, dev, rel)?;
    }
    eprintln!("{kind}: {} wavevectors, max relative deviation {worst:.3e}", kvs.len());
    if worst > VERIFY_TOL {
        return Err(Failure { code: EXIT_VERIFY, message: format!("deviation {worst:.3e} exceeds {VERIFY_TOL:e}") });
    }
    Ok(())
}

fn load_config(r: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = match &r.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    for kv in &r.overrides {
        cfg.apply_override(kv)?;
    }
    if let Some(g) = &r.grid {
        cfg.bench.scheme = parse_scheme(g)?;
    }
    if let Some(v) = r.alpha {
        cfg.bench.mevp.alpha = v;
        cfg.bench.mevp.beta = v;
    }
    if let Some(s) = r.seed {
        cfg.seed = s;
    }
    cfg.bench.validate()?;
    Ok(cfg)
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let mut cfg = load_config(&a.run)?;
    if a.no_correction {
        if cfg.bench.scheme != Scheme::B {
            return Err(Failure::usage("--no-correction only applies to the b grid"));
        }
        cfg.bench.scheme = Scheme::BCaseV;
    }
    if cfg.bench.scheme == Scheme::BCaseV && !a.allow_unstable {
        return Err(Failure::usage(
            "the uncorrected cell grid has a strain-rate kernel; pass --allow-unstable to run it anyway",
        ));
    }
    if a.out.is_some() {
        cfg.bench.output_dir = a.out.clone();
    }
    let b = &cfg.bench;
    eprintln!(
        "{} grid, L {} m, a {} m, dt {} s, alpha {} beta {}, {} steps",
        b.scheme.name(),
        b.length,
        b.a,
        b.mevp.dt,
        b.mevp.alpha,
        b.mevp.beta,
        b.n_steps()
    );
    let d = run_benchmark(b)?;
    if b.output_dir.is_none() {
        d.write_csv(io::stdout().lock())?;
    }
    let last = d.rows.last().copied();
    if let Some(r) = last {
        eprintln!(
            "t {} s: kinetic energy {:.4e} J, noise {:.4}, margin {:.4e}, max speed {:.4} m/s",
            r.time, r.kinetic_energy, r.noise_metric, r.stability_margin, r.max_speed
        );
    }
    if let Some(ab) = d.abort {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!("run aborted at step {} (t = {} s): {}", ab.step, ab.time, ab.reason),
        });
    }
    Ok(())
}

fn cmd_scan(a: ScanArgs) -> CmdResult {
    let mut cfg = load_config(&a.run)?;
    if cfg.bench.scheme == Scheme::BCaseV {
        return Err(Failure::usage("scans run on stabilized grids only"));
    }
    if let Some(ax) = &a.axis {
        cfg.scan.axis = parse_axis(ax)?;
    }
    if let Some(v) = a.lo {
        cfg.scan.lo = v;
    }
    if let Some(v) = a.hi {
        cfg.scan.hi = v;
    }
    if let Some(v) = a.rel_tol {
        cfg.scan.rel_tol = v;
    }
    if let Some(v) = &a.values {
        cfg.apply_override(&format!("scan_values={v}"))?;
    }
    cfg.bench.output_dir = None;
    let axis = cfg.scan.axis;
    eprintln!("reference run (a grid, alpha = beta = 1000, dt = 120 s)");
    let mut reference = reference_noise(&cfg.bench)?;
    reference.factor = cfg.scan.noise_factor;
    let frontier = if cfg.scan.values.is_empty() {
        eprintln!("bisecting {} on [{}, {}] for the {} grid", axis.name(), cfg.scan.lo, cfg.scan.hi, cfg.bench.scheme.name());
        bisect(&cfg.bench, axis, cfg.scan.lo, cfg.scan.hi, cfg.scan.rel_tol, &reference)?
    } else {
        let points = sweep(&cfg.bench, axis, &cfg.scan.values, &reference)?;
        let stable_high = axis != ScanAxis::Dt;
        let pick = |stable: bool| {
            let vals = points.iter().filter(|p| p.stable == stable).map(|p| p.value);
            if stable == stable_high {
                vals.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
            } else {
                vals.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
            }
        };
        Frontier { axis, stable: pick(true), unstable: pick(false), points }
    };
    let (mut csv, mut summary) = sinks(&a.out)?;
    frontier.write_csv(&mut csv)?;
    let fmt = |x: Option<f64>| x.map_or("none".to_string(), |v| format!("{v:.4}"));
    writeln!(summary, "{} grid, axis {}: closest stable {}, closest unstable {}", cfg.bench.scheme.name(), axis.name(), fmt(frontier.stable), fmt(frontier.unstable))?;
    if let Some(c) = frontier.critical() {
        writeln!(summary, "critical value {c:.4}")?;
    }
    Ok(())
}

fn cmd_mesh_dump(a: MeshArgs) -> CmdResult {
    let layout = match a.layout.as_str() {
        "periodic" | "rhombic" => Layout::Rhombic,
        "rectangular" => Layout::Rectangular,
        other => return Err(Failure::usage(format!("unknown layout {other:?} (periodic, rectangular)"))),
    };
    let mesh = build_mesh(a.nx, a.ny, a.a, layout)?;
    match &a.out {
        Some(p) => write_vtk_mesh(File::create(p)?, &mesh)?,
        None => write_vtk_mesh(io::stdout().lock(), &mesh)?,
    }
    eprintln!("{} vertices, {} cells, {} edges", mesh.n_vertices(), mesh.n_cells(), mesh.n_edges());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Symbols(a) => cmd_symbols(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Scan(a) => cmd_scan(a),
        Command::MeshDump(a) => cmd_mesh_dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
