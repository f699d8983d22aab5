//! Eigenvalue branches along a ray in wavevector space.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::eig_small;
use crate::error::{Error, Result};
use crate::grid::GridKind;
use crate::symbols::{analytic_symbol, StencilSymbol, SymbolParams, Wavevector};

/// Continuation accepts a match only above this eigenvector overlap.
const OVERLAP_MIN: f64 = 0.6;
const MAX_REFINE: usize = 3;
/// Relative deviation allowed when matching a continuous eigenvalue.
const PHYSICAL_TOL: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchClass {
    Physical,
    Spurious,
    /// Identically zero.
    Kernel,
}

impl BranchClass {
    pub fn as_str(self) -> &'static str {
        match self {
            BranchClass::Physical => "physical",
            BranchClass::Spurious => "spurious",
            BranchClass::Kernel => "kernel",
        }
    }
}

impl fmt::Display for BranchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub id: usize,
    pub class: BranchClass,
    /// `a^2 lambda / eta` at each sample.
    pub values: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct BranchTable {
    pub kind: GridKind,
    /// Direction of the ray (radians).
    pub direction: f64,
    /// `|k| a` at each sample.
    pub samples: Vec<f64>,
    pub branches: Vec<Branch>,
    /// Sample intervals where continuation stayed ambiguous after refinement.
    pub crossings: usize,
    /// Dimensionless symbol norm at each sample.
    norms: Vec<f64>,
}

impl BranchTable {
    pub fn count(&self, class: BranchClass) -> usize {
        self.branches.iter().filter(|b| b.class == class).count()
    }

    pub fn of_class(&self, class: BranchClass) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(move |b| b.class == class)
    }

    /// Branches that come within `1e-12 ||symbol||` of zero at some sample.
    pub fn zero_branches(&self) -> usize {
        self.branches
            .iter()
            .filter(|b| b.values.iter().zip(&self.norms).any(|(v, n)| v.norm() <= 1e-12 * n))
            .count()
    }

    pub fn max_abs(&self) -> f64 {
        self.branches.iter().flat_map(|b| b.values.iter()).map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// CSV with header `ka,direction,branch,class,re,im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["ka", "direction", "branch", "class", "re", "im"]).map_err(std::io::Error::from)?;
        for (j, ka) in self.samples.iter().enumerate() {
            for b in &self.branches {
                let v = b.values[j];
                out.write_record([
                    format!("{ka:.8}"),
                    format!("{:.8}", self.direction),
                    b.id.to_string(),
                    b.class.to_string(),
                    format!("{:.10e}", v.re),
                    format!("{:.10e}", v.im),
                ])
                .map_err(std::io::Error::from)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SweepParams {
    pub symbol: SymbolParams,
    pub direction: f64,
    pub n_samples: usize,
    /// Largest `|k| a`; defaults to the Brillouin zone boundary along `direction`.
    pub ka_max: Option<f64>,
}

impl SweepParams {
    pub fn new(direction: f64, n_samples: usize) -> Self {
        Self { symbol: SymbolParams::default(), direction, n_samples, ka_max: None }
    }
}

/// `|k| a` where the ray along `theta` leaves the first Brillouin zone.
pub fn brillouin_extent(theta: f64) -> f64 {
    let apothem = 2.0 * PI / 3f64.sqrt();
    let sector = PI / 3.0;
    let rel = (theta - PI / 6.0).rem_euclid(sector);
    let off = rel.min(sector - rel);
    apothem / off.cos()
}

struct Sample {
    ka: f64,
    values: Vec<C64>,
    vectors: Vec<Vec<C64>>,
    norm: f64,
}

enum Evaluator {
    Closed(GridKind),
    Stencil(StencilSymbol),
}

impl Evaluator {
    fn new(kind: GridKind, p: &SymbolParams) -> Result<Self> {
        Ok(match kind {
            GridKind::CellCorrected => Evaluator::Stencil(StencilSymbol::extract(kind, p)?),
            other => Evaluator::Closed(other),
        })
    }

    fn eval(&self, kv: Wavevector, p: &SymbolParams) -> Result<crate::eigen::CMatrix> {
        Ok(match self {
            Evaluator::Closed(kind) => analytic_symbol(*kind, kv, p)?.matrix,
            Evaluator::Stencil(s) => s.eval(kv).matrix,
        })
    }

    fn sample(&self, ka: f64, sp: &SweepParams) -> Result<Sample> {
        let p = &sp.symbol;
        let kv = Wavevector::polar(ka, sp.direction, p.a);
        let m = self.eval(kv, p)?.scaled(p.a * p.a / p.eta);
        let res = eig_small(&m)?;
        let n = m.dim();
        Ok(Sample {
            ka,
            values: res.eigenvalues.clone(),
            vectors: (0..n).map(|i| res.eigenvector(i)).collect(),
            norm: m.norm(),
        })
    }
}

fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(x, y)| x.conj() * y).sum()
}

/// Orthonormal basis of the span of `vs` by modified Gram-Schmidt.
fn orthonormal(vs: &[&Vec<C64>]) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in vs {
        let mut w = (*v).clone();
        for b in &basis {
            let p = inner(b, &w);
            for (wi, bi) in w.iter_mut().zip(b) {
                *wi -= p * bi;
            }
        }
        let n = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(w.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

fn proj_norm(v: &[C64], basis: &[Vec<C64>]) -> f64 {
    basis.iter().map(|b| inner(b, v).norm_sqr()).sum::<f64>().sqrt().min(1.0)
}

/// Groups of numerically coincident eigenvalues, as an orthonormal basis per index.
fn cluster_bases(s: &Sample) -> Vec<Vec<Vec<C64>>> {
    let n = s.values.len();
    let tol = 1e-8 * s.norm.max(1e-300);
    (0..n)
        .map(|i| {
            let members: Vec<&Vec<C64>> =
                (0..n).filter(|&j| (s.values[j] - s.values[i]).norm() <= tol).map(|j| &s.vectors[j]).collect();
            orthonormal(&members)
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Best assignment `perm[i]` of the eigenpairs of `b` to those of `a`, and its
/// weakest overlap.
fn best_match(a: &Sample, b: &Sample, perms: &[Vec<usize>]) -> (Vec<usize>, f64) {
    let n = a.values.len();
    let ca = cluster_bases(a);
    let cb = cluster_bases(b);
    let mut ov = vec![vec![0.0; n]; n];
    for i in 0..n {
        for m in 0..n {
            ov[i][m] = proj_norm(&a.vectors[i], &cb[m]).max(proj_norm(&b.vectors[m], &ca[i]));
        }
    }
    let scale = a.norm.max(b.norm).max(1e-300);
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (pi, perm) in perms.iter().enumerate() {
        let score: f64 = (0..n)
            .map(|i| ov[i][perm[i]] - 1e-6 * (a.values[i] - b.values[perm[i]]).norm() / scale)
            .sum();
        if score > best.0 + 1e-12 {
            best = (score, pi);
        }
    }
    let perm = perms[best.1].clone();
    let worst = (0..n).map(|i| ov[i][perm[i]]).fold(1.0, f64::min);
    (perm, worst)
}

struct Tracker<'a> {
    eval: &'a Evaluator,
    sp: &'a SweepParams,
    perms: Vec<Vec<usize>>,
    crossings: usize,
}

impl Tracker<'_> {
    fn track(&mut self, a: &Sample, b: &Sample, depth: usize) -> Result<Vec<usize>> {
        let (perm, worst) = best_match(a, b, &self.perms);
        if worst >= OVERLAP_MIN {
            return Ok(perm);
        }
        if depth >= MAX_REFINE {
            self.crossings += 1;
            return Ok(perm);
        }
        let mid = self.eval.sample(0.5 * (a.ka + b.ka), self.sp)?;
        let p1 = self.track(a, &mid, depth + 1)?;
        let p2 = self.track(&mid, b, depth + 1)?;
        Ok(p1.iter().map(|&m| p2[m]).collect())
    }
}

fn classify(values: &[C64], samples: &[f64], norms: &[f64], z: f64) -> BranchClass {
    if values.iter().zip(norms).all(|(v, n)| v.norm() <= 1e-12 * n) {
        return BranchClass::Kernel;
    }
    let head = samples.len().min(3);
    for factor in [1.0, 1.0 + z] {
        let ok = (0..head).all(|j| {
            let target = -factor * samples[j] * samples[j];
            (values[j] - target).norm() <= PHYSICAL_TOL * target.abs()
        });
        if ok {
            return BranchClass::Physical;
        }
    }
    BranchClass::Spurious
}

/// Eigenvalue branches of a grid's symbol along one direction.
pub fn sweep_branches(kind: GridKind, sp: &SweepParams) -> Result<BranchTable> {
    if sp.n_samples < 16 {
        return Err(Error::InvalidParameter(format!("sweep needs at least 16 samples, got {}", sp.n_samples)));
    }
    let ka_max = sp.ka_max.unwrap_or_else(|| brillouin_extent(sp.direction));
    if !(ka_max > 0.0 && ka_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("bad sweep extent {ka_max}")));
    }
    let eval = Evaluator::new(kind, &sp.symbol)?;
    let kas: Vec<f64> = (1..=sp.n_samples).map(|j| ka_max * j as f64 / sp.n_samples as f64).collect();
    let samples: Vec<Sample> = kas.par_iter().map(|&ka| eval.sample(ka, sp)).collect::<Result<_>>()?;
    let n = kind.dim();
    let mut tracker = Tracker { eval: &eval, sp, perms: permutations(n), crossings: 0 };
    // assign[j][b]: eigen index at sample j carried by branch b
    let mut assign = vec![(0..n).collect::<Vec<usize>>()];
    for j in 1..samples.len() {
        let perm = tracker.track(&samples[j - 1], &samples[j], 0)?;
        let prev = assign.last().unwrap();
        assign.push(prev.iter().map(|&i| perm[i]).collect());
    }
    let norms: Vec<f64> = samples.iter().map(|s| s.norm).collect();
    let branches: Vec<Branch> = (0..n)
        .map(|b| {
            let values: Vec<C64> = samples.iter().zip(&assign).map(|(s, asg)| s.values[asg[b]]).collect();
            let class = classify(&values, &kas, &norms, sp.symbol.z);
            Branch { id: b, class, values }
        })
        .collect();
    let table = BranchTable {
        kind,
        direction: sp.direction,
        samples: kas,
        branches,
        crossings: tracker.crossings,
        norms,
    };
    if table.count(BranchClass::Physical) == 0 {
        return Err(Error::Classification(format!(
            "{kind}: no branch converges to a continuous eigenvalue along direction {}",
            sp.direction
        )));
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy)]
pub struct Lambda2 {
    /// Largest `|lambda| / eta` (1/m^2).
    pub lambda2: f64,
    /// Where it is attained.
    pub kv: Wavevector,
}

/// `Lambda^2` over an `n x n` sample of a reciprocal-lattice cell (`n >= 64`
/// recommended).
pub fn max_lambda2(kind: GridKind, p: &SymbolParams, n: usize) -> Result<Lambda2> {
    if kind == GridKind::Continuous {
        return Err(Error::InvalidParameter("the continuous operator is unbounded".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty Brillouin sample".into()));
    }
    let eval = Evaluator::new(kind, p)?;
    let f = 2.0 * PI / p.a;
    let b1 = [f, -f / 3f64.sqrt()];
    let b2 = [0.0, 2.0 * f / 3f64.sqrt()];
    let rows: Vec<(f64, Wavevector)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(f64, Wavevector)> {
            let mut best = (0.0, Wavevector::new(0.0, 0.0));
            for j in 0..n {
                let (s, t) = (i as f64 / n as f64, j as f64 / n as f64);
                let kv = Wavevector::new(s * b1[0] + t * b2[0], s * b1[1] + t * b2[1]);
                let m = eval.eval(kv, p)?;
                let top = eig_small(&m)?.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max) / p.eta;
                if top > best.0 {
                    best = (top, kv);
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let (lambda2, kv) = rows.into_iter().fold((0.0, Wavevector::new(0.0, 0.0)), |acc, r| if r.0 > acc.0 { r } else { acc });
    Ok(Lambda2 { lambda2, kv })
}
