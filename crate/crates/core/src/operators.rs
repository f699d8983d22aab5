//! Discrete strain-rate and stress-divergence operators on periodic meshes.
//!
//! All assembly is written as gathers: every output entity reads its
//! neighbours in a fixed order, so results do not depend on scheduling.

use crate::error::{Error, Result};
use crate::grid::GridKind;
use crate::mesh::{add, dot, norm, scale, sub, CellClass, TriMesh, Vec2};
use crate::rheology::{viscous_stress, StrainRate, Stress, VelocityGradient};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassKind {
    Lumped,
    Consistent,
}

#[inline]
fn local_index(list: &[usize; 3], id: usize) -> usize {
    list.iter().position(|&x| x == id).expect("incidence tables are consistent")
}

#[inline]
fn stress_dot(s: &Stress, n: Vec2) -> Vec2 {
    [s.xx * n[0] + s.xy * n[1], s.xy * n[0] + s.yy * n[1]]
}

#[inline]
fn outer_accumulate(g: &mut VelocityGradient, n: Vec2, u: Vec2) {
    g.dudx += n[0] * u[0];
    g.dudy += n[1] * u[0];
    g.dvdx += n[0] * u[1];
    g.dvdy += n[1] * u[1];
}

// ---------------------------------------------------------------------------
// vertex velocities (A-grid)

/// P1 strain rates on cells from vertex velocities.
pub fn strain_vertex_grid(mesh: &TriMesh, u: &[Vec2]) -> Vec<StrainRate> {
    (0..mesh.n_cells())
        .map(|c| {
            let mut g = VelocityGradient::default();
            for (i, &v) in mesh.cell_vertices[c].iter().enumerate() {
                outer_accumulate(&mut g, mesh.cell_grad_p1[c][i], u[v]);
            }
            g.strain()
        })
        .collect()
}

/// Weak stress divergence at vertices from cell stresses.
pub fn divergence_vertex_grid(mesh: &TriMesh, stress: &[Stress], mass: MassKind) -> Result<Vec<Vec2>> {
    let g = mesh.measures();
    let rhs: Vec<Vec2> = (0..mesh.n_vertices())
        .map(|v| {
            let mut acc = [0.0, 0.0];
            for &c in &mesh.vertex_cells[v] {
                let i = local_index(&mesh.cell_vertices[c], v);
                let f = stress_dot(&stress[c], mesh.cell_grad_p1[c][i]);
                acc = sub(acc, scale(g.cell_area[c], f));
            }
            acc
        })
        .collect();
    match mass {
        MassKind::Lumped => Ok(rhs
            .iter()
            .zip(&g.vertex_area)
            .map(|(r, &av)| scale(1.0 / av, *r))
            .collect()),
        MassKind::Consistent => solve_consistent_mass(mesh, &rhs),
    }
}

/// Consistent P1 mass matrix applied to a vertex field.
pub fn apply_consistent_mass(mesh: &TriMesh, u: &[Vec2]) -> Vec<Vec2> {
    let g = mesh.measures();
    (0..mesh.n_vertices())
        .map(|v| {
            let mut acc = [0.0, 0.0];
            for &c in &mesh.vertex_cells[v] {
                let w = g.cell_area[c] / 12.0;
                let mut s = u[v];
                for &x in &mesh.cell_vertices[c] {
                    s = add(s, u[x]);
                }
                acc = add(acc, scale(w, s));
            }
            acc
        })
        .collect()
}

/// Conjugate gradients on the consistent mass matrix, to relative residual 1e-12.
pub fn solve_consistent_mass(mesh: &TriMesh, rhs: &[Vec2]) -> Result<Vec<Vec2>> {
    let inner = |p: &[Vec2], q: &[Vec2]| p.iter().zip(q).map(|(a, b)| dot(*a, *b)).sum::<f64>();
    let g = mesh.measures();
    // lumped inverse as the initial guess
    let mut x: Vec<Vec2> = rhs.iter().zip(&g.vertex_area).map(|(r, &a)| scale(1.0 / a, *r)).collect();
    let mx = apply_consistent_mass(mesh, &x);
    let mut r: Vec<Vec2> = rhs.iter().zip(&mx).map(|(b, m)| sub(*b, *m)).collect();
    let bnorm = inner(rhs, rhs).sqrt();
    if bnorm == 0.0 {
        return Ok(vec![[0.0, 0.0]; rhs.len()]);
    }
    let mut p = r.clone();
    let mut rr = inner(&r, &r);
    for _ in 0..10 * rhs.len().max(50) {
        if rr.sqrt() <= 1e-12 * bnorm {
            return Ok(x);
        }
        let mp = apply_consistent_mass(mesh, &p);
        let alpha = rr / inner(&p, &mp);
        for i in 0..x.len() {
            x[i] = add(x[i], scale(alpha, p[i]));
            r[i] = sub(r[i], scale(alpha, mp[i]));
        }
        let rr_new = inner(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..p.len() {
            p[i] = add(r[i], scale(beta, p[i]));
        }
    }
    if rr.sqrt() <= 1e-12 * bnorm {
        Ok(x)
    } else {
        Err(Error::NonConvergence { what: "consistent mass solve", residual: rr.sqrt() / bnorm })
    }
}

// ---------------------------------------------------------------------------
// cell velocities (B-grid)

/// Velocity gradients at vertices from cell velocities, by Gauss' theorem on
/// the median-dual control volume.
pub fn gradient_cell_case_v(mesh: &TriMesh, u: &[Vec2]) -> Vec<VelocityGradient> {
    let g = mesh.measures();
    (0..mesh.n_vertices())
        .map(|v| {
            let mut grad = VelocityGradient::default();
            for seg in &g.dual_segments[v] {
                outer_accumulate(&mut grad, scale(seg.length, seg.normal), u[seg.cell]);
            }
            let inv = 1.0 / g.vertex_area[v];
            VelocityGradient {
                dudx: grad.dudx * inv,
                dudy: grad.dudy * inv,
                dvdx: grad.dvdx * inv,
                dvdy: grad.dvdy * inv,
            }
        })
        .collect()
}

/// Strain rates at vertices from cell velocities (case V).
pub fn strain_cell_case_v(mesh: &TriMesh, u: &[Vec2]) -> Vec<StrainRate> {
    gradient_cell_case_v(mesh, u).iter().map(VelocityGradient::strain).collect()
}

/// Divergence on cells of vertex stresses interpolated linearly over each triangle.
pub fn divergence_cell_from_vertices(mesh: &TriMesh, stress: &[Stress]) -> Vec<Vec2> {
    (0..mesh.n_cells())
        .map(|c| {
            let mut acc = [0.0, 0.0];
            for (i, &v) in mesh.cell_vertices[c].iter().enumerate() {
                acc = add(acc, stress_dot(&stress[v], mesh.cell_grad_p1[c][i]));
            }
            acc
        })
        .collect()
}

/// Velocity jump `u_U - u_D` across every edge.
pub fn edge_jumps(mesh: &TriMesh, u: &[Vec2]) -> Vec<Vec2> {
    mesh.edge_cells.iter().map(|&[d, up]| sub(u[up], u[d])).collect()
}

/// Edge velocity gradients: vertex gradients averaged to edges, then corrected
/// so that their projection on the across-edge vector `r` reproduces the
/// velocity jump exactly.
pub fn gradient_cell_corrected(mesh: &TriMesh, u: &[Vec2]) -> Vec<VelocityGradient> {
    let at_vertices = gradient_cell_case_v(mesh, u);
    (0..mesh.n_edges())
        .map(|e| {
            let [v0, v1] = mesh.edge_vertices[e];
            let (g0, g1) = (at_vertices[v0], at_vertices[v1]);
            let star_u = [0.5 * (g0.dudx + g1.dudx), 0.5 * (g0.dudy + g1.dudy)];
            let star_v = [0.5 * (g0.dvdx + g1.dvdx), 0.5 * (g0.dvdy + g1.dvdy)];
            let r = mesh.edge_r[e];
            let r2 = dot(r, r);
            assert!(r2 > 0.0, "edge {e} has a degenerate across-edge vector");
            let [d, up] = mesh.edge_cells[e];
            let jump = sub(u[up], u[d]);
            let fix_u = (dot(r, star_u) - jump[0]) / r2;
            let fix_v = (dot(r, star_v) - jump[1]) / r2;
            VelocityGradient {
                dudx: star_u[0] - r[0] * fix_u,
                dudy: star_u[1] - r[1] * fix_u,
                dvdx: star_v[0] - r[0] * fix_v,
                dvdy: star_v[1] - r[1] * fix_v,
            }
        })
        .collect()
}

/// Corrected strain rates at edges from cell velocities.
pub fn strain_cell_corrected(mesh: &TriMesh, u: &[Vec2]) -> Vec<StrainRate> {
    gradient_cell_corrected(mesh, u).iter().map(VelocityGradient::strain).collect()
}

/// Finite-volume divergence on cells of edge stresses.
pub fn divergence_cell_grid(mesh: &TriMesh, stress: &[Stress]) -> Vec<Vec2> {
    let g = mesh.measures();
    (0..mesh.n_cells())
        .map(|c| {
            let mut acc = [0.0, 0.0];
            for (i, &e) in mesh.cell_edges[c].iter().enumerate() {
                let flux = stress_dot(&stress[e], mesh.cell_edge_normal[c][i]);
                acc = add(acc, scale(g.edge_length[e], flux));
            }
            scale(1.0 / g.cell_area[c], acc)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// edge velocities (CD-grid)

/// Gradient of the Crouzeix-Raviart function of the edge opposite local vertex `i`.
#[inline]
fn grad_cr(mesh: &TriMesh, c: usize, i: usize) -> Vec2 {
    scale(-2.0, mesh.cell_grad_p1[c][i])
}

/// Strain rates on cells from edge velocities.
pub fn strain_edge_cr(mesh: &TriMesh, u: &[Vec2]) -> Vec<StrainRate> {
    (0..mesh.n_cells())
        .map(|c| {
            let mut g = VelocityGradient::default();
            for (i, &e) in mesh.cell_edges[c].iter().enumerate() {
                outer_accumulate(&mut g, grad_cr(mesh, c, i), u[e]);
            }
            g.strain()
        })
        .collect()
}

/// Coefficient of the velocity at the other edges of a cell in the jump of the
/// CR field along `edge`: `+1` for the edge opposite `v0`, `-1` for the edge
/// opposite `v1`, sign flipped on `D` cells.
fn jump_weights(mesh: &TriMesh, edge: usize, cell: usize) -> [(usize, f64); 2] {
    let [v0, v1] = mesh.edge_vertices[edge];
    let sign = match mesh.cell_class[cell] {
        CellClass::U => 1.0,
        CellClass::D => -1.0,
    };
    let k0 = local_index(&mesh.cell_vertices[cell], v0);
    let k1 = local_index(&mesh.cell_vertices[cell], v1);
    [(mesh.cell_edges[cell][k0], sign), (mesh.cell_edges[cell][k1], -sign)]
}

/// Slope of the velocity jump along every edge: `[u](t) = J (2t - 1)` for
/// `t` running from `v0` to `v1`.
pub fn cr_jump_slopes(mesh: &TriMesh, u: &[Vec2]) -> Vec<Vec2> {
    (0..mesh.n_edges())
        .map(|e| {
            let mut j = [0.0, 0.0];
            for &c in &mesh.edge_cells[e] {
                for (f, w) in jump_weights(mesh, e, c) {
                    j = add(j, scale(w, u[f]));
                }
            }
            j
        })
        .collect()
}

/// Per-edge viscosity for the jump penalty: mean of the adjacent cells.
pub fn edge_viscosity(mesh: &TriMesh, eta_cell: &[f64]) -> Vec<f64> {
    mesh.edge_cells.iter().map(|&[d, u]| 0.5 * (eta_cell[d] + eta_cell[u])).collect()
}

/// Weak stress divergence at edges with the jump penalty `eps (2 eta / l_e)`.
pub fn divergence_edge_cr(
    mesh: &TriMesh,
    stress: &[Stress],
    u: &[Vec2],
    eps: f64,
    eta_edge: &[f64],
) -> Vec<Vec2> {
    let g = mesh.measures();
    let mut out: Vec<Vec2> = (0..mesh.n_edges())
        .map(|e| {
            let mut acc = [0.0, 0.0];
            for &c in &mesh.edge_cells[e] {
                let i = local_index(&mesh.cell_edges[c], e);
                let f = stress_dot(&stress[c], grad_cr(mesh, c, i));
                acc = sub(acc, scale(g.cell_area[c], f));
            }
            scale(1.0 / g.edge_area[e], acc)
        })
        .collect();
    if eps != 0.0 {
        for (o, p) in out.iter_mut().zip(jump_penalty_edge_cr(mesh, u, eps, eta_edge)) {
            *o = add(*o, p);
        }
    }
    out
}

/// The jump penalty `-eps (2 eta / l) int [N_e] . [u] dl` per unit edge area.
pub fn jump_penalty_edge_cr(mesh: &TriMesh, u: &[Vec2], eps: f64, eta_edge: &[f64]) -> Vec<Vec2> {
    let g = mesh.measures();
    let slopes = cr_jump_slopes(mesh, u);
    (0..mesh.n_edges())
        .map(|e| {
            let mut acc = [0.0, 0.0];
            // int_{e'} [N_e][u] dl = l J_{e'} dJ_{e'}/du_e / 3
            for &c in &mesh.edge_cells[e] {
                for &other in &mesh.cell_edges[c] {
                    if other == e {
                        continue;
                    }
                    let w = jump_weights(mesh, other, c)
                        .iter()
                        .filter(|(f, _)| *f == e)
                        .map(|(_, w)| w)
                        .sum::<f64>();
                    let coef = eps * 2.0 * eta_edge[other] / 3.0;
                    acc = sub(acc, scale(coef * w, slopes[other]));
                }
            }
            scale(1.0 / g.edge_area[e], acc)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// composed linear viscous operator

/// The linear stress divergence `V u` with constant viscosities `eta`, `zeta = z eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscousOperator {
    pub kind: GridKind,
    pub eta: f64,
    pub z: f64,
}

impl ViscousOperator {
    pub fn new(kind: GridKind, eta: f64, z: f64) -> Self {
        Self { kind, eta, z }
    }

    pub fn apply(&self, mesh: &TriMesh, u: &[Vec2]) -> Result<Vec<Vec2>> {
        let stress = |s: &[StrainRate]| -> Vec<Stress> {
            s.iter().map(|&e| viscous_stress(e, self.eta, self.z)).collect()
        };
        Ok(match self.kind {
            GridKind::Continuous => {
                return Err(Error::InvalidParameter("continuous operator has no mesh form".into()))
            }
            GridKind::VertexLumped => {
                divergence_vertex_grid(mesh, &stress(&strain_vertex_grid(mesh, u)), MassKind::Lumped)?
            }
            GridKind::VertexConsistent => divergence_vertex_grid(
                mesh,
                &stress(&strain_vertex_grid(mesh, u)),
                MassKind::Consistent,
            )?,
            GridKind::CellV => {
                divergence_cell_from_vertices(mesh, &stress(&strain_cell_case_v(mesh, u)))
            }
            GridKind::CellCorrected => {
                divergence_cell_grid(mesh, &stress(&strain_cell_corrected(mesh, u)))
            }
            GridKind::EdgeCr { eps } => {
                let eta_edge = vec![self.eta; mesh.n_edges()];
                divergence_edge_cr(mesh, &stress(&strain_edge_cr(mesh, u)), u, eps, &eta_edge)
            }
        })
    }
}

/// Mass-weighted inner product for a staggering.
pub fn mass_inner(areas: &[f64], p: &[Vec2], q: &[Vec2]) -> f64 {
    areas.iter().zip(p.iter().zip(q)).map(|(a, (x, y))| a * dot(*x, *y)).sum()
}

/// `max |v|` over a field.
pub fn max_norm(v: &[Vec2]) -> f64 {
    v.iter().map(|x| norm(*x)).fold(0.0, f64::max)
}
