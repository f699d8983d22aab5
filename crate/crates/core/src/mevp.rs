//! Modified EVP pseudo-time subcycling on any of the staggered grids.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridKind, Staggering};
use crate::mesh::{dot, norm, scale, TriMesh, Vec2};
use crate::operators::{
    divergence_cell_from_vertices, divergence_cell_grid, divergence_edge_cr, divergence_vertex_grid,
    edge_viscosity, jump_penalty_edge_cr, strain_cell_case_v, strain_cell_corrected, strain_edge_cr, strain_vertex_grid, MassKind,
};
use crate::rheology::{
    delta_invariant, shear_invariant, stress_from_strain, viscosities, RheologyParams, StrainRate, Stress,
};

/// Quadratic drag coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragParams {
    pub rho_air: f64,
    pub c_air: f64,
    pub rho_ocean: f64,
    pub c_ocean: f64,
}

impl Default for DragParams {
    fn default() -> Self {
        Self { rho_air: 1.3, c_air: 1.2e-3, rho_ocean: 1026.0, c_ocean: 5.5e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MevpParams {
    /// Stress relaxation parameter.
    pub alpha: f64,
    /// Momentum relaxation parameter.
    pub beta: f64,
    pub n_evp: usize,
    /// External time step (s).
    pub dt: f64,
    /// Jump penalty coefficient of the edge grid.
    pub eps: f64,
    /// Margin above which a run is expected to be stable.
    pub safety: f64,
    /// Ice density (kg/m^3).
    pub rho_ice: f64,
    /// Thickness floor used for the momentum mass (m).
    pub min_thickness: f64,
    /// Coriolis parameter (1/s); `None` disables rotation.
    pub coriolis: Option<f64>,
    pub drag: DragParams,
}

impl Default for MevpParams {
    fn default() -> Self {
        Self {
            alpha: 500.0,
            beta: 500.0,
            n_evp: 100,
            dt: 120.0,
            eps: 1.0,
            safety: 1.0,
            rho_ice: 900.0,
            min_thickness: 0.01,
            coriolis: None,
            drag: DragParams::default(),
        }
    }
}

impl MevpParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.beta > 0.0
            && self.n_evp >= 1
            && self.dt > 0.0
            && self.eps >= 0.0
            && self.rho_ice > 0.0
            && self.min_thickness > 0.0
            && [self.alpha, self.beta, self.dt, self.eps].iter().all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid mEVP parameters {self:?}")))
        }
    }
}

/// Constitutive law used inside the subcycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StressLaw {
    ViscousPlastic(RheologyParams),
    /// Constant viscosities `eta`, `zeta = z eta`, no pressure.
    LinearViscous { eta: f64, z: f64 },
}

/// Velocity placement plus strain/stress locations of one solver grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Vertex velocities, cell stresses.
    A,
    /// Cell velocities, corrected edge stresses.
    B,
    /// Cell velocities, vertex stresses (kernel not removed).
    BCaseV,
    /// Edge velocities, cell stresses, jump penalty.
    CD,
}

impl Scheme {
    pub fn from_kind(kind: GridKind) -> Result<Self> {
        match kind {
            GridKind::VertexLumped => Ok(Scheme::A),
            GridKind::CellCorrected => Ok(Scheme::B),
            GridKind::CellV => Ok(Scheme::BCaseV),
            GridKind::EdgeCr { .. } => Ok(Scheme::CD),
            other => Err(Error::InvalidParameter(format!("{other} is not a solver grid"))),
        }
    }

    pub fn grid_kind(self, eps: f64) -> GridKind {
        match self {
            Scheme::A => GridKind::VertexLumped,
            Scheme::B => GridKind::CellCorrected,
            Scheme::BCaseV => GridKind::CellV,
            Scheme::CD => GridKind::EdgeCr { eps },
        }
    }

    pub fn velocity_staggering(self) -> Staggering {
        match self {
            Scheme::A => Staggering::Vertex,
            Scheme::B | Scheme::BCaseV => Staggering::Cell,
            Scheme::CD => Staggering::Edge,
        }
    }

    pub fn stress_staggering(self) -> Staggering {
        match self {
            Scheme::A | Scheme::CD => Staggering::Cell,
            Scheme::B => Staggering::Edge,
            Scheme::BCaseV => Staggering::Vertex,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::A => "a",
            Scheme::B => "b",
            Scheme::BCaseV => "b-case-v",
            Scheme::CD => "cd",
        }
    }
}

/// Mesh plus grid choice and the land mask.
#[derive(Debug, Clone)]
pub struct Domain {
    pub mesh: Arc<TriMesh>,
    pub scheme: Scheme,
    /// Velocity points held at zero.
    pub fixed: Vec<bool>,
    /// Cells that carry evolving ice.
    pub cell_active: Vec<bool>,
    /// Edges that pass tracer fluxes.
    pub edge_open: Vec<bool>,
}

impl Domain {
    /// Fully periodic domain.
    pub fn periodic(mesh: Arc<TriMesh>, scheme: Scheme) -> Self {
        let n = scheme.velocity_staggering().count(&mesh);
        Self {
            fixed: vec![false; n],
            cell_active: vec![true; mesh.n_cells()],
            edge_open: vec![true; mesh.n_edges()],
            mesh,
            scheme,
        }
    }

    /// Closed box: cells straddling the periodic seam act as land and every
    /// velocity point touching them is held at zero.
    pub fn boxed(mesh: Arc<TriMesh>, scheme: Scheme) -> Self {
        let land = &mesh.cell_wraps;
        let fixed: Vec<bool> = match scheme.velocity_staggering() {
            Staggering::Vertex => mesh.vertex_cells.iter().map(|cs| cs.iter().any(|&c| land[c])).collect(),
            Staggering::Cell => land.clone(),
            Staggering::Edge => mesh.edge_cells.iter().map(|cs| cs.iter().any(|&c| land[c])).collect(),
        };
        let cell_active: Vec<bool> = land.iter().map(|&w| !w).collect();
        let edge_open = mesh.edge_cells.iter().map(|&[d, u]| cell_active[d] && cell_active[u]).collect();
        Self { mesh, scheme, fixed, cell_active, edge_open }
    }

    pub fn n_velocity(&self) -> usize {
        self.fixed.len()
    }

    pub fn velocity_positions(&self) -> Vec<Vec2> {
        let st = self.scheme.velocity_staggering();
        (0..self.n_velocity()).map(|i| st.position(&self.mesh, i)).collect()
    }

    /// Cell field averaged to velocity points (equal weights: all areas agree).
    pub fn cell_to_velocity(&self, q: &[f64]) -> Vec<f64> {
        cell_to(&self.mesh, self.scheme.velocity_staggering(), q)
    }

    /// Cell field averaged to stress points.
    pub fn cell_to_stress(&self, q: &[f64]) -> Vec<f64> {
        cell_to(&self.mesh, self.scheme.stress_staggering(), q)
    }
}

fn cell_to(mesh: &TriMesh, st: Staggering, q: &[f64]) -> Vec<f64> {
    match st {
        Staggering::Cell => q.to_vec(),
        Staggering::Vertex => mesh.vertex_cells.iter().map(|cs| cs.iter().map(|&c| q[c]).sum::<f64>() / 6.0).collect(),
        Staggering::Edge => mesh.edge_cells.iter().map(|&[d, u]| 0.5 * (q[d] + q[u])).collect(),
    }
}

/// Wind and ocean velocities at the velocity points.
#[derive(Debug, Clone, Default)]
pub struct Forcing {
    pub air: Vec<Vec2>,
    pub ocean: Vec<Vec2>,
}

impl Forcing {
    pub fn none(n: usize) -> Self {
        Self { air: vec![[0.0; 2]; n], ocean: vec![[0.0; 2]; n] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IceState {
    pub velocity: Vec<Vec2>,
    /// Stresses at the scheme's stress points.
    pub stress: Vec<Stress>,
    /// Concentration per cell.
    pub concentration: Vec<f64>,
    /// Mean thickness per cell (m).
    pub thickness: Vec<f64>,
    /// Relaxed jump-penalty force of the edge grid at velocity points.
    pub penalty: Vec<Vec2>,
    /// External steps taken.
    pub step: usize,
}

impl IceState {
    /// Ice at rest with uniform thickness and concentration.
    pub fn uniform(domain: &Domain, thickness: f64, concentration: f64) -> Self {
        let mesh = &domain.mesh;
        Self {
            velocity: vec![[0.0; 2]; domain.n_velocity()],
            stress: vec![Stress::default(); domain.scheme.stress_staggering().count(mesh)],
            concentration: vec![concentration; mesh.n_cells()],
            thickness: vec![thickness; mesh.n_cells()],
            penalty: if domain.scheme == Scheme::CD { vec![[0.0; 2]; domain.n_velocity()] } else { Vec::new() },
            step: 0,
        }
    }

    /// Ice mass per area at velocity points, with the thickness floor.
    pub fn mass_at_velocity(&self, domain: &Domain, p: &MevpParams) -> Vec<f64> {
        domain
            .cell_to_velocity(&self.thickness)
            .into_iter()
            .map(|h| p.rho_ice * h.max(p.min_thickness))
            .collect()
    }

    /// `sum 1/2 m |u|^2 A` over velocity points (J).
    pub fn kinetic_energy(&self, domain: &Domain, p: &MevpParams) -> f64 {
        let areas = domain.scheme.velocity_staggering().areas(&domain.mesh);
        let m = self.mass_at_velocity(domain, p);
        self.velocity.iter().zip(&m).zip(areas).map(|((u, m), a)| 0.5 * m * dot(*u, *u) * a).sum()
    }

    pub fn max_speed(&self) -> f64 {
        self.velocity.iter().map(|u| norm(*u)).fold(0.0, f64::max)
    }

    pub fn total_volume(&self, domain: &Domain) -> f64 {
        let g = domain.mesh.measures();
        self.thickness.iter().zip(&g.cell_area).map(|(h, a)| h * a).sum()
    }
}

/// Strain rates at the stress points.
pub fn scheme_strain(domain: &Domain, u: &[Vec2]) -> Vec<StrainRate> {
    let mesh = &domain.mesh;
    match domain.scheme {
        Scheme::A => strain_vertex_grid(mesh, u),
        Scheme::B => strain_cell_corrected(mesh, u),
        Scheme::BCaseV => strain_cell_case_v(mesh, u),
        Scheme::CD => strain_edge_cr(mesh, u),
    }
}

/// Stress divergence at the velocity points. `eta` lives at the stress points
/// and is used only by the edge-grid penalty.
pub fn scheme_divergence(domain: &Domain, stress: &[Stress], u: &[Vec2], eps: f64, eta: &[f64]) -> Result<Vec<Vec2>> {
    let mesh = &domain.mesh;
    Ok(match domain.scheme {
        Scheme::A => divergence_vertex_grid(mesh, stress, MassKind::Lumped)?,
        Scheme::B => divergence_cell_grid(mesh, stress),
        Scheme::BCaseV => divergence_cell_from_vertices(mesh, stress),
        Scheme::CD => divergence_edge_cr(mesh, stress, u, eps, &edge_viscosity(mesh, eta)),
    })
}

/// Shear invariant per cell; strain rates stored elsewhere are averaged to cells.
pub fn shear_field(domain: &Domain, u: &[Vec2]) -> Vec<f64> {
    let mesh = &domain.mesh;
    let s = scheme_strain(domain, u);
    match domain.scheme.stress_staggering() {
        Staggering::Cell => s.iter().map(|&e| shear_invariant(e)).collect(),
        Staggering::Edge => (0..mesh.n_cells()).map(|c| mean_shear(mesh.cell_edges[c].iter().map(|&e| s[e]))).collect(),
        Staggering::Vertex => {
            (0..mesh.n_cells()).map(|c| mean_shear(mesh.cell_vertices[c].iter().map(|&v| s[v]))).collect()
        }
    }
}

fn mean_shear(it: impl Iterator<Item = StrainRate>) -> f64 {
    let (mut acc, mut n) = (StrainRate::default(), 0.0);
    for e in it {
        acc.xx += e.xx;
        acc.xy += e.xy;
        acc.yy += e.yy;
        n += 1.0;
    }
    shear_invariant(StrainRate::new(acc.xx / n, acc.xy / n, acc.yy / n))
}

/// Outcome of one external step of subcycling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubcycleReport {
    /// Largest bulk viscosity seen in the last iteration.
    pub zeta_max: f64,
    /// Smallest momentum mass per area.
    pub m_min: f64,
}

/// One external step: `n_evp` mEVP iterations starting from the state's
/// velocity `u^n`.
pub fn mevp_subcycle(
    domain: &Domain,
    state: &mut IceState,
    forcing: &Forcing,
    params: &MevpParams,
    law: &StressLaw,
) -> Result<SubcycleReport> {
    params.validate()?;
    let n = domain.n_velocity();
    if state.velocity.len() != n || forcing.air.len() != n || forcing.ocean.len() != n {
        return Err(Error::InvalidParameter("state, forcing and domain sizes disagree".into()));
    }
    let mass = state.mass_at_velocity(domain, params);
    let m_min = domain
        .fixed
        .iter()
        .zip(&mass)
        .filter(|(f, _)| !**f)
        .map(|(_, m)| *m)
        .fold(f64::INFINITY, f64::min);
    let strength: Vec<f64> = match law {
        StressLaw::ViscousPlastic(rp) => {
            let p_cell: Vec<f64> = state
                .thickness
                .iter()
                .zip(&state.concentration)
                .map(|(&h, &a)| rp.ice_strength(h, a))
                .collect();
            domain.cell_to_stress(&p_cell)
        }
        StressLaw::LinearViscous { .. } => Vec::new(),
    };
    let u_n = state.velocity.clone();
    let air_stress: Vec<Vec2> = forcing
        .air
        .iter()
        .map(|&va| scale(params.drag.rho_air * params.drag.c_air * norm(va), va))
        .collect();
    let eps = if domain.scheme == Scheme::CD { params.eps } else { 0.0 };
    let n_stress = state.stress.len();
    let mut eta = vec![0.0; n_stress];
    let mut zeta_max = 0.0f64;
    let dt = params.dt;
    for it in 0..params.n_evp {
        let strain = scheme_strain(domain, &state.velocity);
        zeta_max = 0.0;
        for i in 0..n_stress {
            let (target, zeta, eta_i) = match law {
                StressLaw::ViscousPlastic(rp) => {
                    let delta = delta_invariant(strain[i], rp.e_vp);
                    let (zeta, eta_i) = viscosities(delta, strength[i], rp);
                    let pressure = if rp.replacement_pressure {
                        strength[i] * delta / delta.max(rp.delta_min)
                    } else {
                        strength[i]
                    };
                    (stress_from_strain(strain[i], eta_i, zeta, pressure), zeta, eta_i)
                }
                StressLaw::LinearViscous { eta, z } => {
                    (stress_from_strain(strain[i], *eta, z * eta, 0.0), z * eta, *eta)
                }
            };
            let s = &mut state.stress[i];
            s.xx += (target.xx - s.xx) / params.alpha;
            s.xy += (target.xy - s.xy) / params.alpha;
            s.yy += (target.yy - s.yy) / params.alpha;
            eta[i] = eta_i;
            zeta_max = zeta_max.max(zeta);
        }
        let mut div = scheme_divergence(domain, &state.stress, &state.velocity, 0.0, &eta)?;
        if eps != 0.0 {
            // the penalty is relaxed like a stress so the whole symbol obeys the same bound
            let target = jump_penalty_edge_cr(&domain.mesh, &state.velocity, eps, &edge_viscosity(&domain.mesh, &eta));
            for ((p, t), dv) in state.penalty.iter_mut().zip(target).zip(div.iter_mut()) {
                p[0] += (t[0] - p[0]) / params.alpha;
                p[1] += (t[1] - p[1]) / params.alpha;
                dv[0] += p[0];
                dv[1] += p[1];
            }
        }
        let d = params.drag;
        let mut finite = true;
        let u_old = std::mem::take(&mut state.velocity);
        state.velocity = (0..n)
            .map(|i| {
                if domain.fixed[i] {
                    return [0.0, 0.0];
                }
                let u = u_old[i];
                let rel = [forcing.ocean[i][0] - u[0], forcing.ocean[i][1] - u[1]];
                let c_o = d.rho_ocean * d.c_ocean * norm(rel);
                let mut force = [div[i][0] + air_stress[i][0] + c_o * rel[0], div[i][1] + air_stress[i][1] + c_o * rel[1]];
                if let Some(f) = params.coriolis {
                    force[0] += mass[i] * f * u[1];
                    force[1] -= mass[i] * f * u[0];
                }
                let k = dt / mass[i];
                let new = [
                    u[0] + (u_n[i][0] - u[0] + k * force[0]) / (1.0 + params.beta),
                    u[1] + (u_n[i][1] - u[1] + k * force[1]) / (1.0 + params.beta),
                ];
                finite &= new[0].is_finite() && new[1].is_finite();
                new
            })
            .collect();
        if !finite || !state.stress.iter().all(Stress::is_finite) {
            return Err(Error::NonFinite { step: state.step, subcycle: it });
        }
    }
    state.step += 1;
    Ok(SubcycleReport { zeta_max, m_min })
}

/// `alpha beta / (Lambda^2 zeta_max dt / m_min)`; above `safety` the run is
/// expected to be stable.
pub fn stability_margin(params: &MevpParams, lambda2: f64, zeta_max: f64, m_min: f64) -> f64 {
    params.alpha * params.beta / (lambda2 * zeta_max * params.dt / m_min)
}

/// Velocity normal to every edge, positive from the D cell to the U cell.
fn edge_normal_velocity(domain: &Domain, u: &[Vec2]) -> Vec<f64> {
    let mesh = &domain.mesh;
    (0..mesh.n_edges())
        .map(|e| {
            let ue = match domain.scheme.velocity_staggering() {
                Staggering::Vertex => {
                    let [v0, v1] = mesh.edge_vertices[e];
                    scale(0.5, [u[v0][0] + u[v1][0], u[v0][1] + u[v1][1]])
                }
                Staggering::Cell => {
                    let [d, up] = mesh.edge_cells[e];
                    scale(0.5, [u[d][0] + u[up][0], u[d][1] + u[up][1]])
                }
                Staggering::Edge => u[e],
            };
            let r = mesh.edge_r[e];
            dot(ue, r) / norm(r)
        })
        .collect()
}

/// First-order upwind transport of thickness and concentration.
pub fn advect_tracers(domain: &Domain, state: &mut IceState, dt: f64) -> Result<()> {
    let mesh = &domain.mesh;
    let g = mesh.measures();
    let un = edge_normal_velocity(domain, &state.velocity);
    // volume swept through each edge, D -> U positive
    let swept: Vec<f64> = (0..mesh.n_edges())
        .map(|e| if domain.edge_open[e] { un[e] * g.edge_length[e] * dt } else { 0.0 })
        .collect();
    let mut courant = 0.0f64;
    for c in 0..mesh.n_cells() {
        let out: f64 = mesh.cell_edges[c]
            .iter()
            .map(|&e| {
                let sign = if mesh.edge_cells[e][0] == c { 1.0 } else { -1.0 };
                (sign * swept[e]).max(0.0)
            })
            .sum();
        courant = courant.max(out / g.cell_area[c]);
    }
    if courant > 1.0 {
        return Err(Error::Cfl { courant });
    }
    for field in [&mut state.thickness, &mut state.concentration] {
        let q = field.clone();
        for c in 0..mesh.n_cells() {
            if !domain.cell_active[c] {
                continue;
            }
            let mut net = 0.0;
            for &e in &mesh.cell_edges[c] {
                let [d, up] = mesh.edge_cells[e];
                let flux = if swept[e] > 0.0 { swept[e] * q[d] } else { swept[e] * q[up] };
                net += if d == c { -flux } else { flux };
            }
            field[c] = q[c] + net / g.cell_area[c];
        }
    }
    for a in &mut state.concentration {
        *a = a.clamp(0.0, 1.0);
    }
    for h in &mut state.thickness {
        *h = h.max(0.0);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_periodic_mesh;

    fn domain(scheme: Scheme) -> Domain {
        Domain::periodic(Arc::new(build_periodic_mesh(8, 8, 1000.0).unwrap()), scheme)
    }

    #[test]
    fn rest_is_a_fixed_point() {
        for scheme in [Scheme::A, Scheme::B, Scheme::CD] {
            let law = StressLaw::ViscousPlastic(RheologyParams::default());
            // 10 km cells and alpha = beta = 5000 keep the margin well above one
            let d = Domain::periodic(Arc::new(build_periodic_mesh(8, 8, 10_000.0).unwrap()), scheme);
            let mut s = IceState::uniform(&d, 0.3, 1.0);
            let p = MevpParams { alpha: 5000.0, beta: 5000.0, n_evp: 50, ..Default::default() };
            mevp_subcycle(&d, &mut s, &Forcing::none(d.n_velocity()), &p, &law).unwrap();
            assert!(s.max_speed() < 1e-14, "{} {:e}", scheme.name(), s.max_speed());
        }
    }

    #[test]
    fn huge_beta_freezes_velocity() {
        let d = domain(Scheme::A);
        let mut s = IceState::uniform(&d, 0.3, 1.0);
        for (i, u) in s.velocity.iter_mut().enumerate() {
            *u = [((i * 7) % 5) as f64 * 0.01, 0.0];
        }
        let before = s.velocity.clone();
        let p = MevpParams { alpha: 1e12, beta: 1e12, n_evp: 10, ..Default::default() };
        let forcing = Forcing { air: vec![[10.0, 0.0]; d.n_velocity()], ocean: vec![[0.0; 2]; d.n_velocity()] };
        mevp_subcycle(&d, &mut s, &forcing, &p, &StressLaw::ViscousPlastic(RheologyParams::default())).unwrap();
        let change = s.velocity.iter().zip(&before).map(|(a, b)| norm([a[0] - b[0], a[1] - b[1]])).fold(0.0, f64::max);
        assert!(change < 1e-9);
    }

    #[test]
    fn margin_is_inverse_in_dt() {
        let p = MevpParams::default();
        let m1 = stability_margin(&p, 1e-6, 1e12, 270.0);
        let m2 = stability_margin(&MevpParams { dt: 2.0 * p.dt, ..p }, 1e-6, 1e12, 270.0);
        assert!((m1 / m2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_velocity_leaves_tracers() {
        let d = domain(Scheme::B);
        let mut s = IceState::uniform(&d, 0.3, 0.9);
        let before = s.clone();
        advect_tracers(&d, &mut s, 600.0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn cfl_violation_reported() {
        let d = domain(Scheme::CD);
        let mut s = IceState::uniform(&d, 0.3, 0.9);
        s.velocity = vec![[10.0, 0.0]; d.n_velocity()];
        assert!(matches!(advect_tracers(&d, &mut s, 1000.0), Err(Error::Cfl { .. })));
    }

    #[test]
    fn boxed_domain_fixes_seam_points() {
        let mesh = Arc::new(crate::mesh::build_rectangular_mesh(8, 8, 1000.0).unwrap());
        for scheme in [Scheme::A, Scheme::B, Scheme::CD] {
            let d = Domain::boxed(mesh.clone(), scheme);
            let n_fixed = d.fixed.iter().filter(|&&f| f).count();
            assert!(n_fixed > 0 && n_fixed < d.n_velocity());
        }
    }
}
