//! Moving-cyclone test in a closed box.
//!
//! A cyclone crosses the box along its diagonal over the run while a steady
//! ocean gyre spins underneath. Runs record kinetic energy, the stability
//! margin and a grid-noise metric of the shear field; scans bisect on
//! `alpha = beta` or on the external time step, calling a run unstable when its
//! noise exceeds a multiple of a clean A-grid reference.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;

use crate::eigen::max_lambda2;
use crate::error::{Error, Result};
use crate::io::write_vtk_snapshot;
use crate::mesh::{build_rectangular_mesh, norm, scale, sub, TriMesh, Vec2};
use crate::mevp::{
    advect_tracers, mevp_subcycle, shear_field, stability_margin, Domain, Forcing, IceState, MevpParams, Scheme,
    StressLaw,
};
use crate::rheology::RheologyParams;
use crate::symbols::SymbolParams;

/// Peak wind speed (m/s).
pub const V_MAX: f64 = 15.0;
/// Inflow angle of the wind (deg).
pub const INFLOW_DEG: f64 = 18.0;
/// Speed scale of the ocean gyre (m/s).
pub const OCEAN_SPEED: f64 = 0.01;
/// Initial thickness (m) and concentration.
pub const H0: f64 = 0.3;
pub const A0: f64 = 1.0;
/// A run is noisy when its metric exceeds this multiple of the reference.
pub const NOISE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    /// Box side (m).
    pub length: f64,
    /// Triangle side (m).
    pub a: f64,
    /// Simulated time (s).
    pub duration: f64,
    pub scheme: Scheme,
    /// Solver settings; `mevp.dt` is the external step.
    pub mevp: MevpParams,
    pub rheology: RheologyParams,
    /// Interval between diagnostic rows and snapshots (s).
    pub output_every: f64,
    /// Where CSV and VTK output go; nothing is written when `None`.
    pub output_dir: Option<PathBuf>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            length: 128e3,
            a: 4e3,
            duration: 86400.0,
            scheme: Scheme::A,
            mevp: MevpParams::default(),
            rheology: RheologyParams::default(),
            output_every: 3600.0,
            output_dir: None,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.a > 0.0) {
            return Err(Error::InvalidParameter("length and a must be positive".into()));
        }
        let nx = self.length / self.a;
        if (nx - nx.round()).abs() > 1e-9 * nx || nx.round() < 4.0 {
            return Err(Error::InvalidParameter(format!(
                "length {} is not a multiple (>= 4) of a = {}",
                self.length, self.a
            )));
        }
        if !(self.duration > 0.0) {
            return Err(Error::InvalidParameter("duration must be positive".into()));
        }
        if !(self.output_every > 0.0) {
            return Err(Error::InvalidParameter("output cadence must be positive".into()));
        }
        self.mevp.validate()?;
        self.rheology.validate()
    }

    /// Lattice periods along x and the even row count closest to a square box.
    pub fn lattice_size(&self) -> (usize, usize) {
        let nx = (self.length / self.a).round() as usize;
        let h = self.a * 3f64.sqrt() / 2.0;
        let rows = self.length / h;
        let ny = 2 * ((rows / 2.0).round() as usize).max(2);
        (nx, ny)
    }

    pub fn build_mesh(&self) -> Result<TriMesh> {
        self.validate()?;
        let (nx, ny) = self.lattice_size();
        build_rectangular_mesh(nx, ny, self.a)
    }

    pub fn domain(&self) -> Result<Domain> {
        Ok(Domain::boxed(Arc::new(self.build_mesh()?), self.scheme))
    }

    pub fn n_steps(&self) -> usize {
        (self.duration / self.mevp.dt).round().max(1.0) as usize
    }

    /// Viscosity ratio `zeta / eta` of the VP law.
    pub fn viscosity_ratio(&self) -> f64 {
        self.rheology.e_vp * self.rheology.e_vp
    }

    /// `Lambda^2` of the configured grid in physical units (1/m^2).
    pub fn lambda2(&self) -> Result<f64> {
        let p = SymbolParams { a: self.a, eta: 1.0, z: self.viscosity_ratio() };
        Ok(max_lambda2(self.scheme.grid_kind(self.mevp.eps), &p, 64)?.lambda2)
    }

    /// Cyclone center at time `t`.
    pub fn cyclone_center(&self, t: f64) -> Vec2 {
        let speed = FRAC_1_SQRT_2 * self.length / self.duration;
        let s = speed * t * FRAC_1_SQRT_2;
        [0.25 * self.length + s, 0.25 * self.length + s]
    }
}

/// Wind and ocean velocity at `x` and time `t`.
pub fn cyclone_forcing(x: Vec2, t: f64, cfg: &BenchmarkConfig) -> (Vec2, Vec2) {
    let l = cfg.length;
    let d = sub(x, cfg.cyclone_center(t));
    let r = norm(d);
    let air = if r == 0.0 {
        [0.0, 0.0]
    } else {
        let radial = scale(1.0 / r, d);
        let tangential = [-radial[1], radial[0]];
        let (s, c) = (INFLOW_DEG * PI / 180.0).sin_cos();
        let speed = V_MAX * (r / (l / 8.0)).tanh();
        [speed * (c * tangential[0] - s * radial[0]), speed * (c * tangential[1] - s * radial[1])]
    };
    let ocean = [OCEAN_SPEED * (2.0 * x[1] - l) / l, OCEAN_SPEED * (l - 2.0 * x[0]) / l];
    (air, ocean)
}

/// Forcing at every velocity point of `domain`.
pub fn forcing_at(domain: &Domain, t: f64, cfg: &BenchmarkConfig) -> Forcing {
    let (air, ocean) = domain.velocity_positions().into_iter().map(|x| cyclone_forcing(x, t, cfg)).unzip();
    Forcing { air, ocean }
}

/// Thin ice at rest.
pub fn init_state(domain: &Domain) -> IceState {
    let mut s = IceState::uniform(domain, H0, A0);
    for c in 0..domain.mesh.n_cells() {
        if !domain.cell_active[c] {
            s.thickness[c] = 0.0;
            s.concentration[c] = 0.0;
        }
    }
    s
}

/// Margin of the initial state, with `zeta` at its `Delta_min` cap.
pub fn initial_margin(cfg: &BenchmarkConfig) -> Result<f64> {
    let strength = cfg.rheology.ice_strength(H0, A0);
    let zeta = strength / (2.0 * cfg.rheology.delta_min);
    let m = cfg.mevp.rho_ice * H0.max(cfg.mevp.min_thickness);
    Ok(stability_margin(&cfg.mevp, cfg.lambda2()?, zeta, m))
}

/// Mean jump of `q` across open edges over the mean magnitude of `q`.
///
/// Only edges whose two cells are active count, and the mean of `|q|` runs over
/// active cells. A U/D checkerboard of unit amplitude gives 2.
pub fn noise_metric(q: &[f64], domain: &Domain) -> f64 {
    let mesh = &domain.mesh;
    let (mut jump, mut n_edges) = (0.0, 0usize);
    for (e, &[d, u]) in mesh.edge_cells.iter().enumerate() {
        if domain.edge_open[e] {
            jump += (q[u] - q[d]).abs();
            n_edges += 1;
        }
    }
    let (mut mag, mut n_cells) = (0.0, 0usize);
    for (c, &active) in domain.cell_active.iter().enumerate() {
        if active {
            mag += q[c].abs();
            n_cells += 1;
        }
    }
    if n_edges == 0 || n_cells == 0 {
        return 0.0;
    }
    (jump / n_edges as f64) / (mag / n_cells as f64 + 1e-20)
}

/// One diagnostics line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub time: f64,
    pub kinetic_energy: f64,
    pub noise_metric: f64,
    pub stability_margin: f64,
    pub max_speed: f64,
}

/// Why a run stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Abort {
    pub step: usize,
    pub time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Rows at the output cadence, starting at `t = 0`.
    pub rows: Vec<DiagnosticRow>,
    /// Stability margin after every external step.
    pub margins: Vec<f64>,
    /// Shear (1/s) and concentration per cell at the end of the run.
    pub shear: Vec<f64>,
    pub concentration: Vec<f64>,
    pub abort: Option<Abort>,
}

impl Diagnostics {
    pub fn completed(&self) -> bool {
        self.abort.is_none()
    }

    pub fn noise_history(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.noise_metric).collect()
    }

    pub fn final_noise(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.noise_metric)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["time_s", "kinetic_energy", "noise_metric", "stability_margin", "max_speed"])
            .map_err(std::io::Error::from)?;
        for r in &self.rows {
            out.write_record([
                format!("{:.1}", r.time),
                format!("{:.10e}", r.kinetic_energy),
                format!("{:.10e}", r.noise_metric),
                format!("{:.10e}", r.stability_margin),
                format!("{:.10e}", r.max_speed),
            ])
            .map_err(std::io::Error::from)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Noise-metric history of a clean run, indexed like [`Diagnostics::rows`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReference {
    pub metric: Vec<f64>,
    pub factor: f64,
}

impl NoiseReference {
    pub fn from_diagnostics(d: &Diagnostics) -> Result<Self> {
        if let Some(a) = &d.abort {
            return Err(Error::InvalidParameter(format!("reference run aborted: {}", a.reason)));
        }
        Ok(Self { metric: d.noise_history(), factor: NOISE_FACTOR })
    }

    /// Threshold at output row `i`; `None` where the reference is silent.
    fn threshold(&self, i: usize) -> Option<f64> {
        let r = *self.metric.get(i.min(self.metric.len().saturating_sub(1)))?;
        (r > 0.0).then_some(self.factor * r)
    }
}

/// The clean reference: A-grid, `alpha = beta = 1000`, 2 min steps.
pub fn reference_config(cfg: &BenchmarkConfig) -> BenchmarkConfig {
    let mut r = cfg.clone();
    r.scheme = Scheme::A;
    r.mevp.alpha = 1000.0;
    r.mevp.beta = 1000.0;
    r.mevp.dt = 120.0;
    r.output_dir = None;
    r
}

pub fn reference_noise(cfg: &BenchmarkConfig) -> Result<NoiseReference> {
    NoiseReference::from_diagnostics(&run_benchmark(&reference_config(cfg))?)
}

/// Run to completion or to the first numerical failure.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<Diagnostics> {
    run(cfg, None)
}

/// Like [`run_benchmark`], but stop as soon as the run turns noisy.
pub fn run_checked(cfg: &BenchmarkConfig, reference: &NoiseReference) -> Result<Diagnostics> {
    run(cfg, Some(reference))
}

fn run(cfg: &BenchmarkConfig, reference: Option<&NoiseReference>) -> Result<Diagnostics> {
    cfg.validate()?;
    let domain = cfg.domain()?;
    let lambda2 = cfg.lambda2()?;
    let law = StressLaw::ViscousPlastic(cfg.rheology);
    let mut state = init_state(&domain);
    let dt = cfg.mevp.dt;
    let n_steps = cfg.n_steps();
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut diag = Diagnostics {
        rows: Vec::new(),
        margins: Vec::with_capacity(n_steps),
        shear: Vec::new(),
        concentration: Vec::new(),
        abort: None,
    };
    let margin0 = initial_margin(cfg)?;
    record(cfg, &domain, &state, 0.0, margin0, &mut diag)?;
    let mut next_output = cfg.output_every;
    for step in 0..n_steps {
        let t = (step + 1) as f64 * dt;
        let forcing = forcing_at(&domain, t, cfg);
        let outcome = mevp_subcycle(&domain, &mut state, &forcing, &cfg.mevp, &law)
            .and_then(|rep| advect_tracers(&domain, &mut state, dt).map(|_| rep));
        let rep = match outcome {
            Ok(rep) => rep,
            Err(e @ (Error::NonFinite { .. } | Error::Cfl { .. })) => {
                diag.abort = Some(Abort { step, time: t, reason: e.to_string() });
                break;
            }
            Err(e) => return Err(e),
        };
        let margin = stability_margin(&cfg.mevp, lambda2, rep.zeta_max, rep.m_min);
        diag.margins.push(margin);
        if t + 1e-6 * dt >= next_output || step + 1 == n_steps {
            next_output += cfg.output_every;
            let noise = record(cfg, &domain, &state, t, margin, &mut diag)?;
            if let Some(th) = reference.and_then(|r| r.threshold(diag.rows.len() - 1)) {
                if noise > th {
                    diag.abort = Some(Abort {
                        step,
                        time: t,
                        reason: format!("noise metric {noise:.4} exceeds threshold {th:.4}"),
                    });
                    break;
                }
            }
        }
    }
    diag.shear = shear_field(&domain, &state.velocity);
    diag.concentration = state.concentration.clone();
    if let Some(dir) = &cfg.output_dir {
        diag.write_csv(std::fs::File::create(dir.join("diagnostics.csv"))?)?;
    }
    Ok(diag)
}

fn record(
    cfg: &BenchmarkConfig,
    domain: &Domain,
    state: &IceState,
    t: f64,
    margin: f64,
    diag: &mut Diagnostics,
) -> Result<f64> {
    let shear = shear_field(domain, &state.velocity);
    let noise = noise_metric(&shear, domain);
    diag.rows.push(DiagnosticRow {
        time: t,
        kinetic_energy: state.kinetic_energy(domain, &cfg.mevp),
        noise_metric: noise,
        stability_margin: margin,
        max_speed: state.max_speed(),
    });
    if let Some(dir) = &cfg.output_dir {
        let path = dir.join(format!("snapshot_{:04}.vtk", diag.rows.len() - 1));
        write_vtk_snapshot(&path, domain, state, &shear)?;
    }
    Ok(noise)
}

/// Parameter varied by a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanAxis {
    /// `alpha = beta`.
    AlphaBeta,
    /// External step (s).
    Dt,
    /// Edge-grid penalty.
    Eps,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::AlphaBeta => "alpha-beta",
            ScanAxis::Dt => "dt",
            ScanAxis::Eps => "eps",
        }
    }

    pub fn apply(self, cfg: &BenchmarkConfig, value: f64) -> BenchmarkConfig {
        let mut c = cfg.clone();
        match self {
            ScanAxis::AlphaBeta => {
                c.mevp.alpha = value;
                c.mevp.beta = value;
            }
            ScanAxis::Dt => c.mevp.dt = value,
            ScanAxis::Eps => c.mevp.eps = value,
        }
        c
    }
}

/// One run of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub value: f64,
    /// Last recorded noise metric.
    pub noise_metric: f64,
    pub stable: bool,
    /// Abort reason for unstable runs.
    pub reason: Option<String>,
}

pub fn evaluate(cfg: &BenchmarkConfig, axis: ScanAxis, value: f64, reference: &NoiseReference) -> Result<ScanPoint> {
    let d = run_checked(&axis.apply(cfg, value), reference)?;
    Ok(ScanPoint {
        value,
        noise_metric: d.final_noise(),
        stable: d.completed(),
        reason: d.abort.map(|a| format!("step {}: {}", a.step, a.reason)),
    })
}

/// Independent runs along `axis`, in parallel.
pub fn sweep(cfg: &BenchmarkConfig, axis: ScanAxis, values: &[f64], reference: &NoiseReference) -> Result<Vec<ScanPoint>> {
    values.par_iter().map(|&v| evaluate(cfg, axis, v, reference)).collect()
}

/// Result of a bisection: the bracketing values and every run made.
#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    pub axis: ScanAxis,
    /// Closest stable value found.
    pub stable: Option<f64>,
    /// Closest unstable value found.
    pub unstable: Option<f64>,
    pub points: Vec<ScanPoint>,
}

impl Frontier {
    /// Geometric midpoint of the bracket.
    pub fn critical(&self) -> Option<f64> {
        Some((self.stable? * self.unstable?).sqrt())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record([self.axis.name(), "noise_metric", "stable", "reason"]).map_err(std::io::Error::from)?;
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.value.total_cmp(&b.value));
        for p in &pts {
            out.write_record([
                format!("{:.6}", p.value),
                format!("{:.10e}", p.noise_metric),
                p.stable.to_string(),
                p.reason.clone().unwrap_or_default(),
            ])
            .map_err(std::io::Error::from)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Bisect in log space between `lo` and `hi` until the bracket is within
/// `rel_tol`. Stability is assumed to grow with `alpha = beta` and to shrink
/// with `dt`; the endpoints are run first and may already settle the answer.
pub fn bisect(
    cfg: &BenchmarkConfig,
    axis: ScanAxis,
    lo: f64,
    hi: f64,
    rel_tol: f64,
    reference: &NoiseReference,
) -> Result<Frontier> {
    if !(lo > 0.0 && hi > lo && rel_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("bad bisection bracket [{lo}, {hi}]")));
    }
    let stable_high = axis != ScanAxis::Dt;
    let mut points = sweep(cfg, axis, &[lo, hi], reference)?;
    let (p_lo, p_hi) = (points[0].stable, points[1].stable);
    let mut f = Frontier { axis, stable: None, unstable: None, points: Vec::new() };
    let (mut good, mut bad) = if stable_high { (hi, lo) } else { (lo, hi) };
    let (good_ok, bad_ok) = if stable_high { (p_hi, p_lo) } else { (p_lo, p_hi) };
    if !good_ok {
        f.unstable = Some(good);
        f.points = points;
        return Ok(f);
    }
    if bad_ok {
        f.stable = Some(bad);
        f.points = points;
        return Ok(f);
    }
    while (good / bad).ln().abs() > rel_tol.ln_1p() {
        let mid = (good * bad).sqrt();
        let p = evaluate(cfg, axis, mid, reference)?;
        if p.stable {
            good = mid;
        } else {
            bad = mid;
        }
        points.push(p);
    }
    f.stable = Some(good);
    f.unstable = Some(bad);
    f.points = points;
    Ok(f)
}
