//! Plain-text `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Keys carry their units
//! (`dt_s`, `a_m`, ...). Unknown keys and malformed values are errors, and
//! later assignments override earlier ones, which is how command-line
//! overrides are layered on top of a file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::benchmark::{BenchmarkConfig, ScanAxis, NOISE_FACTOR};
use crate::error::{Error, Result};
use crate::mevp::Scheme;

/// Settings of a branch sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    /// Direction of the wavevector (deg).
    pub direction_deg: f64,
    pub samples: usize,
    /// `zeta / eta`.
    pub z: f64,
    /// Largest `|k| a`; the zone boundary when `None`.
    pub ka_max: Option<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { direction_deg: 30.0, samples: 200, z: 1.0, ka_max: None }
    }
}

/// Settings of a stability scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSettings {
    pub axis: ScanAxis,
    pub lo: f64,
    pub hi: f64,
    /// Relative width at which bisection stops.
    pub rel_tol: f64,
    /// Explicit values; when non-empty they are swept instead of bisected.
    pub values: Vec<f64>,
    pub noise_factor: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self { axis: ScanAxis::AlphaBeta, lo: 100.0, hi: 4000.0, rel_tol: 0.1, values: Vec::new(), noise_factor: NOISE_FACTOR }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub bench: BenchmarkConfig,
    pub sweep: SweepSettings,
    pub scan: ScanSettings,
    pub seed: u64,
}

/// Every accepted key, in the order [`RunConfig::to_text`] writes them.
pub const KEYS: &[&str] = &[
    "grid",
    "length_m",
    "a_m",
    "duration_s",
    "dt_s",
    "output_every_s",
    "output_dir",
    "alpha",
    "beta",
    "n_evp",
    "eps",
    "safety",
    "rho_ice_kg_m3",
    "min_thickness_m",
    "coriolis_per_s",
    "rho_air_kg_m3",
    "c_air",
    "rho_ocean_kg_m3",
    "c_ocean",
    "e_vp",
    "delta_min_per_s",
    "p_star_n_m2",
    "c_p",
    "replacement_pressure",
    "direction_deg",
    "samples",
    "z",
    "ka_max",
    "scan_axis",
    "scan_lo",
    "scan_hi",
    "scan_rel_tol",
    "scan_values",
    "noise_factor",
    "seed",
];

fn num(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Config(format!("{key}: expected a number, got {v:?}")))
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got {v:?}")))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

fn optional(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "none" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

pub fn parse_scheme(v: &str) -> Result<Scheme> {
    match v {
        "a" | "vertex" | "vertex-lumped" => Ok(Scheme::A),
        "b" | "cell" | "cell-corrected" => Ok(Scheme::B),
        "b-case-v" | "cell-v" => Ok(Scheme::BCaseV),
        "cd" | "edge" | "edge-cr" => Ok(Scheme::CD),
        _ => Err(Error::Config(format!("grid: unknown solver grid {v:?} (a, b, b-case-v, cd)"))),
    }
}

pub fn parse_axis(v: &str) -> Result<ScanAxis> {
    match v {
        "alpha-beta" => Ok(ScanAxis::AlphaBeta),
        "dt" => Ok(ScanAxis::Dt),
        "eps" => Ok(ScanAxis::Eps),
        _ => Err(Error::Config(format!("scan_axis: expected alpha-beta, dt or eps, got {v:?}"))),
    }
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Apply every assignment in `text` on top of the current values.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("override {kv:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let b = &mut self.bench;
        match key {
            "grid" => b.scheme = parse_scheme(v)?,
            "length_m" => b.length = num(key, v)?,
            "a_m" => b.a = num(key, v)?,
            "duration_s" => b.duration = num(key, v)?,
            "dt_s" => b.mevp.dt = num(key, v)?,
            "output_every_s" => b.output_every = num(key, v)?,
            "output_dir" => b.output_dir = if v == "none" { None } else { Some(PathBuf::from(v)) },
            "alpha" => b.mevp.alpha = num(key, v)?,
            "beta" => b.mevp.beta = num(key, v)?,
            "n_evp" => b.mevp.n_evp = count(key, v)?,
            "eps" => b.mevp.eps = num(key, v)?,
            "safety" => b.mevp.safety = num(key, v)?,
            "rho_ice_kg_m3" => b.mevp.rho_ice = num(key, v)?,
            "min_thickness_m" => b.mevp.min_thickness = num(key, v)?,
            "coriolis_per_s" => b.mevp.coriolis = optional(key, v)?,
            "rho_air_kg_m3" => b.mevp.drag.rho_air = num(key, v)?,
            "c_air" => b.mevp.drag.c_air = num(key, v)?,
            "rho_ocean_kg_m3" => b.mevp.drag.rho_ocean = num(key, v)?,
            "c_ocean" => b.mevp.drag.c_ocean = num(key, v)?,
            "e_vp" => b.rheology.e_vp = num(key, v)?,
            "delta_min_per_s" => b.rheology.delta_min = num(key, v)?,
            "p_star_n_m2" => b.rheology.p_star = num(key, v)?,
            "c_p" => b.rheology.c_p = num(key, v)?,
            "replacement_pressure" => b.rheology.replacement_pressure = flag(key, v)?,
            "direction_deg" => self.sweep.direction_deg = num(key, v)?,
            "samples" => self.sweep.samples = count(key, v)?,
            "z" => self.sweep.z = num(key, v)?,
            "ka_max" => self.sweep.ka_max = optional(key, v)?,
            "scan_axis" => self.scan.axis = parse_axis(v)?,
            "scan_lo" => self.scan.lo = num(key, v)?,
            "scan_hi" => self.scan.hi = num(key, v)?,
            "scan_rel_tol" => self.scan.rel_tol = num(key, v)?,
            "scan_values" => {
                self.scan.values = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| num(key, s))
                    .collect::<Result<_>>()?
            }
            "noise_factor" => self.scan.noise_factor = num(key, v)?,
            "seed" => self.seed = v.parse().map_err(|_| Error::Config(format!("seed: expected a u64, got {v:?}")))?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Full configuration in the file format; parsing it gives back `self`.
    pub fn to_text(&self) -> String {
        let b = &self.bench;
        let opt = |x: Option<f64>| x.map_or("none".to_string(), |v| v.to_string());
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("grid", b.scheme.name().to_string());
        put("length_m", b.length.to_string());
        put("a_m", b.a.to_string());
        put("duration_s", b.duration.to_string());
        put("dt_s", b.mevp.dt.to_string());
        put("output_every_s", b.output_every.to_string());
        put("output_dir", b.output_dir.as_ref().map_or("none".into(), |p| p.display().to_string()));
        put("alpha", b.mevp.alpha.to_string());
        put("beta", b.mevp.beta.to_string());
        put("n_evp", b.mevp.n_evp.to_string());
        put("eps", b.mevp.eps.to_string());
        put("safety", b.mevp.safety.to_string());
        put("rho_ice_kg_m3", b.mevp.rho_ice.to_string());
        put("min_thickness_m", b.mevp.min_thickness.to_string());
        put("coriolis_per_s", opt(b.mevp.coriolis));
        put("rho_air_kg_m3", b.mevp.drag.rho_air.to_string());
        put("c_air", b.mevp.drag.c_air.to_string());
        put("rho_ocean_kg_m3", b.mevp.drag.rho_ocean.to_string());
        put("c_ocean", b.mevp.drag.c_ocean.to_string());
        put("e_vp", b.rheology.e_vp.to_string());
        put("delta_min_per_s", b.rheology.delta_min.to_string());
        put("p_star_n_m2", b.rheology.p_star.to_string());
        put("c_p", b.rheology.c_p.to_string());
        put("replacement_pressure", b.rheology.replacement_pressure.to_string());
        put("direction_deg", self.sweep.direction_deg.to_string());
        put("samples", self.sweep.samples.to_string());
        put("z", self.sweep.z.to_string());
        put("ka_max", opt(self.sweep.ka_max));
        put("scan_axis", self.scan.axis.name().to_string());
        put("scan_lo", self.scan.lo.to_string());
        put("scan_hi", self.scan.hi.to_string());
        put("scan_rel_tol", self.scan.rel_tol.to_string());
        put("scan_values", self.scan.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        put("noise_factor", self.scan.noise_factor.to_string());
        put("seed", self.seed.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_units() {
        let c = RunConfig::parse_str("# desk run\ngrid = cd\ndt_s = 90   # 1.5 min\n\nalpha=1200\n").unwrap();
        assert_eq!(c.bench.scheme, Scheme::CD);
        assert_eq!(c.bench.mevp.dt, 90.0);
        assert_eq!(c.bench.mevp.alpha, 1200.0);
        assert_eq!(c.bench.mevp.beta, 500.0);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(matches!(RunConfig::parse_str("dt = 120"), Err(Error::Config(_))));
        assert!(RunConfig::parse_str("dt_s = fast").is_err());
        assert!(RunConfig::parse_str("dt_s").is_err());
        assert!(RunConfig::parse_str("n_evp = -3").is_err());
        assert!(RunConfig::parse_str("grid = z").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut c = RunConfig::parse_str("alpha = 300").unwrap();
        c.apply_override("alpha=900").unwrap();
        assert_eq!(c.bench.mevp.alpha, 900.0);
    }

    #[test]
    fn text_round_trips() {
        let mut c = RunConfig::default();
        c.apply_str("grid = b\ncoriolis_per_s = 1.46e-4\nscan_values = 60, 90,120\noutput_dir = out/x\nseed = 7").unwrap();
        let back = RunConfig::parse_str(&c.to_text()).unwrap();
        assert_eq!(back, c);
        let text = c.to_text();
        let keys: Vec<&str> = text.lines().map(|l| l.split(" = ").next().unwrap()).collect();
        assert_eq!(keys, KEYS);
    }
}
