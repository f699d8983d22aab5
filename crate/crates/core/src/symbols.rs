//! Fourier symbols of the discrete viscous operators.
//!
//! A symbol acts on the amplitudes of a plane wave `u e^{i k.x}` sampled at
//! the velocity points of each translation class. Amplitudes are ordered by
//! class block and then by component, e.g. `(u^u, v^u, u^d, v^d)` on cells.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::eigen::{eig_small, CMatrix, EigenResult};
use crate::error::{Error, Result};
use crate::grid::GridKind;
use crate::mesh::{build_periodic_mesh, CellClass, TriMesh, Vec2};
use crate::operators::{MassKind, ViscousOperator};
use crate::rheology::stress_matrix_s;

/// `|k|a` at the Brillouin zone boundary along the direction `pi/6`.
pub const BRILLOUIN_KA_PI6: f64 = 2.0 * PI / 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavevector {
    pub k: f64,
    pub l: f64,
}

impl Wavevector {
    pub fn new(k: f64, l: f64) -> Self {
        Self { k, l }
    }

    /// Wavevector with `|k| a = ka` pointing along `theta`.
    pub fn polar(ka: f64, theta: f64, a: f64) -> Self {
        Self { k: ka / a * theta.cos(), l: ka / a * theta.sin() }
    }

    pub fn norm(&self) -> f64 {
        self.k.hypot(self.l)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.k * self.k + self.l * self.l
    }

    /// The pair `(k a, l a)`.
    pub fn dimensionless(&self, a: f64) -> (f64, f64) {
        (self.k * a, self.l * a)
    }

    pub fn shifted(&self, g: Vec2) -> Self {
        Self { k: self.k + g[0], l: self.l + g[1] }
    }

    fn phase(&self, d: Vec2) -> C64 {
        C64::from_polar(1.0, self.k * d[0] + self.l * d[1])
    }
}

/// Parameters of the linear viscous operator being analysed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolParams {
    /// Edge length (m).
    pub a: f64,
    /// Shear viscosity.
    pub eta: f64,
    /// `zeta / eta`.
    pub z: f64,
}

impl Default for SymbolParams {
    fn default() -> Self {
        Self { a: 1.0, eta: 1.0, z: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    pub kind: GridKind,
    pub matrix: CMatrix,
}

impl SymbolMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn norm(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.matrix.is_hermitian(rel_tol)
    }

    pub fn eigen(&self) -> Result<EigenResult> {
        eig_small(&self.matrix)
    }

    /// Eigenvalues sorted by real part (ascending).
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        Ok(self.eigen()?.eigenvalues)
    }

    /// Largest entrywise deviation from another symbol.
    pub fn max_deviation(&self, other: &SymbolMatrix) -> f64 {
        self.matrix.sub(&other.matrix).max_abs()
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn rect_mul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let inner = b.len();
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            assert_eq!(row.len(), inner);
            (0..cols).map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum()).collect()
        })
        .collect()
}

fn real_block(s: [[f64; 3]; 3], copies: usize) -> Vec<Vec<C64>> {
    let n = 3 * copies;
    let mut z = vec![vec![c(0.0); n]; n];
    for b in 0..copies {
        for i in 0..3 {
            for j in 0..3 {
                z[3 * b + i][3 * b + j] = c(s[i][j]);
            }
        }
    }
    z
}

/// `D Z E` for rectangular blocks.
fn chain(d: &[Vec<C64>], z: &[Vec<C64>], e: &[Vec<C64>]) -> CMatrix {
    CMatrix::from_rows(&rect_mul(&rect_mul(d, z), e))
}

/// Phases `(alpha1, beta1, gamma1)` of the three vertices of a U cell
/// relative to its centroid.
pub fn phase_factors_vertex(kv: Wavevector, a: f64) -> (C64, C64, C64) {
    let h = 3f64.sqrt() / 2.0 * a;
    (
        kv.phase([-a / 2.0, -h / 3.0]),
        kv.phase([a / 2.0, -h / 3.0]),
        kv.phase([0.0, 2.0 * h / 3.0]),
    )
}

/// Symbol of the P1 gradient on a cell of the given class.
pub fn grad_symbol(kv: Wavevector, a: f64, class: CellClass) -> [C64; 2] {
    let h = 3f64.sqrt() / 2.0 * a;
    let s3 = 3f64.sqrt();
    let (a1, b1, g1) = phase_factors_vertex(kv, a);
    let f = -1.0 / (2.0 * h);
    let gu = [f * (s3 * a1 - s3 * b1), f * (a1 + b1 - 2.0 * g1)];
    match class {
        CellClass::U => gu,
        CellClass::D => [-gu[0].conj(), -gu[1].conj()],
    }
}

/// Fourier symbol of the consistent P1 mass matrix divided by the lumped one.
pub fn consistent_mass_symbol(kv: Wavevector, a: f64) -> f64 {
    let h = 3f64.sqrt() / 2.0 * a;
    let (k, l) = (kv.k, kv.l);
    0.5 + ((k * a).cos() + (k * a / 2.0 + l * h).cos() + (-k * a / 2.0 + l * h).cos()) / 6.0
}

/// Vertex (A-grid) symbol, 2x2.
pub fn vertex_symbol(kv: Wavevector, p: &SymbolParams, mass: MassKind) -> Result<SymbolMatrix> {
    let [gx, gy] = grad_symbol(kv, p.a, CellClass::U);
    let (cx, cy) = (gx.conj(), gy.conj());
    let zero = c(0.0);
    let e = vec![
        vec![gx, zero],
        vec![gy / 2.0, gx / 2.0],
        vec![zero, gy],
        vec![-cx, zero],
        vec![-cy / 2.0, -cx / 2.0],
        vec![zero, -cy],
    ];
    let d = vec![
        vec![-cx / 2.0, -cy / 2.0, zero, gx / 2.0, gy / 2.0, zero],
        vec![zero, -cx / 2.0, -cy / 2.0, zero, gx / 2.0, gy / 2.0],
    ];
    let zmat = real_block(stress_matrix_s(p.eta, p.z), 2);
    let m = chain(&d, &zmat, &e);
    Ok(match mass {
        MassKind::Lumped => SymbolMatrix { kind: GridKind::VertexLumped, matrix: m },
        MassKind::Consistent => {
            let ms = consistent_mass_symbol(kv, p.a);
            if ms.abs() < 1e-12 {
                return Err(Error::SingularMass { k: kv.k, l: kv.l });
            }
            SymbolMatrix { kind: GridKind::VertexConsistent, matrix: m.scaled(1.0 / ms) }
        }
    })
}

/// Cell-velocity symbol with strain rates at vertices, 4x4.
pub fn cell_v_symbol(kv: Wavevector, p: &SymbolParams) -> SymbolMatrix {
    let [gx, gy] = grad_symbol(kv, p.a, CellClass::U);
    let (cx, cy) = (gx.conj(), gy.conj());
    let zero = c(0.0);
    let e = vec![
        vec![-cx / 2.0, zero, gx / 2.0, zero],
        vec![-cy / 4.0, -cx / 4.0, gy / 4.0, gx / 4.0],
        vec![zero, -cy / 2.0, zero, gy / 2.0],
    ];
    let d = vec![
        vec![gx, gy, zero],
        vec![zero, gx, gy],
        vec![-cx, -cy, zero],
        vec![zero, -cx, -cy],
    ];
    let s = real_block(stress_matrix_s(p.eta, p.z), 1);
    SymbolMatrix { kind: GridKind::CellV, matrix: chain(&d, &s, &e) }
}

/// Jump-penalty symbol `T` of the Crouzeix-Raviart grid (without `eps`).
pub fn stabilization_symbol(kv: Wavevector, p: &SymbolParams) -> CMatrix {
    let a = p.a;
    let h = 3f64.sqrt() / 2.0 * a;
    let (k, l) = (kv.k, kv.l);
    let c1 = 2.0 * (-k * a / 4.0 + l * h / 2.0).cos();
    let c2 = 2.0 * (k * a / 4.0 + l * h / 2.0).cos();
    let c3 = 2.0 * (k * a / 2.0).cos();
    let lmat = CMatrix::from_real(&[
        vec![0.0, 0.0, c1, 0.0, -c2, 0.0],
        vec![0.0, 0.0, 0.0, c1, 0.0, -c2],
        vec![-c1, 0.0, 0.0, 0.0, c3, 0.0],
        vec![0.0, -c1, 0.0, 0.0, 0.0, c3],
        vec![c2, 0.0, -c3, 0.0, 0.0, 0.0],
        vec![0.0, c2, 0.0, -c3, 0.0, 0.0],
    ]);
    (&lmat * &lmat).scaled(2.0 * p.eta / (a * h))
}

/// Edge (CD-grid) symbol `D Z E + eps T`, 6x6.
pub fn edge_symbol(kv: Wavevector, p: &SymbolParams, eps: f64) -> SymbolMatrix {
    let a = p.a;
    let h = 3f64.sqrt() / 2.0 * a;
    let s3 = 3f64.sqrt();
    let al = kv.phase([0.0, -h / 3.0]);
    let be = kv.phase([-a / 4.0, h / 6.0]);
    let ga = kv.phase([a / 4.0, h / 6.0]);
    let zero = c(0.0);
    let eu: Vec<Vec<C64>> = vec![
        vec![zero, zero, -s3 * be, zero, s3 * ga, zero],
        vec![-al, zero, be / 2.0, -s3 * be / 2.0, ga / 2.0, s3 * ga / 2.0],
        vec![zero, -2.0 * al, zero, be, zero, ga],
    ]
    .into_iter()
    .map(|r| r.into_iter().map(|x| x / h).collect())
    .collect();
    let mut e = eu.clone();
    e.extend(eu.iter().map(|r| r.iter().map(|x| -x.conj()).collect::<Vec<_>>()));
    let (ca, cb, cg) = (al.conj(), be.conj(), ga.conj());
    let f = -3.0 / (2.0 * h);
    let d: Vec<Vec<C64>> = vec![
        vec![zero, -2.0 * ca, zero, zero, 2.0 * al, zero],
        vec![zero, zero, -2.0 * ca, zero, zero, 2.0 * al],
        vec![-s3 * cb, cb, zero, s3 * be, -be, zero],
        vec![zero, -s3 * cb, cb, zero, s3 * be, -be],
        vec![s3 * cg, cg, zero, -s3 * ga, -ga, zero],
        vec![zero, s3 * cg, cg, zero, -s3 * ga, -ga],
    ]
    .into_iter()
    .map(|r| r.into_iter().map(|x| x * f).collect())
    .collect();
    let zmat = real_block(stress_matrix_s(p.eta, p.z), 2);
    let mut m = chain(&d, &zmat, &e);
    if eps != 0.0 {
        m = m.add(&stabilization_symbol(kv, p).scaled(eps));
    }
    SymbolMatrix { kind: GridKind::EdgeCr { eps }, matrix: m }
}

/// Symbol of `div sigma` for the continuous linear viscous law.
pub fn continuous_symbol(kv: Wavevector, eta: f64, zeta: f64) -> SymbolMatrix {
    let (k, l) = (kv.k, kv.l);
    let k2 = kv.norm_sqr();
    let m = CMatrix::from_real(&[
        vec![-eta * k2 - zeta * k * k, -zeta * k * l],
        vec![-zeta * k * l, -eta * k2 - zeta * l * l],
    ]);
    SymbolMatrix { kind: GridKind::Continuous, matrix: m }
}

/// The two continuous eigenvalues `(-eta |k|^2, -(eta + zeta) |k|^2)`.
pub fn continuous_eigenvalues(kv: Wavevector, eta: f64, zeta: f64) -> [f64; 2] {
    let k2 = kv.norm_sqr();
    [-eta * k2, -(eta + zeta) * k2]
}

/// Closed-form symbol of a grid kind. The corrected cell grid has none and is
/// evaluated from the operator stencil.
pub fn analytic_symbol(kind: GridKind, kv: Wavevector, p: &SymbolParams) -> Result<SymbolMatrix> {
    Ok(match kind {
        GridKind::Continuous => continuous_symbol(kv, p.eta, p.z * p.eta),
        GridKind::VertexLumped => vertex_symbol(kv, p, MassKind::Lumped)?,
        GridKind::VertexConsistent => vertex_symbol(kv, p, MassKind::Consistent)?,
        GridKind::CellV => cell_v_symbol(kv, p),
        GridKind::EdgeCr { eps } => edge_symbol(kv, p, eps),
        GridKind::CellCorrected => StencilSymbol::extract(kind, p)?.eval(kv),
    })
}

fn check_discrete(kind: GridKind) -> Result<crate::grid::Staggering> {
    kind.staggering()
        .ok_or_else(|| Error::InvalidParameter("the continuous operator has no mesh form".into()))
}

/// Symbol obtained by applying the mesh operator to plane waves.
///
/// `kv` must be a reciprocal-lattice vector of the periodic mesh; the mesh
/// edge length overrides `p.a`.
pub fn numeric_symbol(kind: GridKind, kv: Wavevector, mesh: &TriMesh, p: &SymbolParams) -> Result<SymbolMatrix> {
    let stag = check_discrete(kind)?;
    if !mesh.is_commensurate(kv.k, kv.l) {
        return Err(Error::Incommensurate { k: kv.k, l: kv.l });
    }
    let op = ViscousOperator::new(kind, p.eta, p.z);
    let nv = mesh.n_vertices();
    let nc = stag.n_classes();
    let count = stag.count(mesh);
    let mut m = CMatrix::zeros(2 * nc);
    // representative entity of each class: the one based at vertex 0
    let reps: Vec<usize> = (0..nc).map(|cl| cl * nv).collect();
    for slot in 0..2 * nc {
        let (cls, comp) = (slot / 2, slot % 2);
        // real and imaginary parts of the complex plane wave separately
        let mut parts = [vec![[0.0; 2]; count], vec![[0.0; 2]; count]];
        for id in cls * nv..(cls + 1) * nv {
            let ph = kv.phase(stag.position(mesh, id));
            parts[0][id][comp] = ph.re;
            parts[1][id][comp] = ph.im;
        }
        let re = op.apply(mesh, &parts[0])?;
        let im = op.apply(mesh, &parts[1])?;
        for (out_cls, &rep) in reps.iter().enumerate() {
            let ph = kv.phase(stag.position(mesh, rep)).conj();
            for oc in 0..2 {
                let val = C64::new(re[rep][oc], 0.0) + C64::new(0.0, 1.0) * im[rep][oc];
                m[(2 * out_cls + oc, slot)] = val * ph;
            }
        }
    }
    Ok(SymbolMatrix { kind, matrix: m })
}

/// Impulse response of a mesh operator, evaluable at any wavevector.
#[derive(Debug, Clone)]
pub struct StencilSymbol {
    kind: GridKind,
    /// `(row, col, offset, weight)` with offset from source to target.
    taps: Vec<(usize, usize, Vec2, f64)>,
}

impl StencilSymbol {
    /// Extract the stencil on a periodic mesh large enough that it never wraps.
    pub fn extract(kind: GridKind, p: &SymbolParams) -> Result<Self> {
        let mesh = build_periodic_mesh(12, 12, p.a)?;
        Self::extract_on(kind, &mesh, p)
    }

    pub fn extract_on(kind: GridKind, mesh: &TriMesh, p: &SymbolParams) -> Result<Self> {
        let stag = check_discrete(kind)?;
        let op = ViscousOperator::new(kind, p.eta, p.z);
        let nv = mesh.n_vertices();
        let count = stag.count(mesh);
        let mut taps = Vec::new();
        for slot in 0..2 * stag.n_classes() {
            let (cls, comp) = (slot / 2, slot % 2);
            let src = cls * nv;
            let mut u = vec![[0.0; 2]; count];
            u[src][comp] = 1.0;
            let out = op.apply(mesh, &u)?;
            let xs = stag.position(mesh, src);
            for (id, w) in out.iter().enumerate() {
                for (oc, &val) in w.iter().enumerate() {
                    if val != 0.0 {
                        let xe = stag.position(mesh, id);
                        let d = mesh.min_image([xe[0] - xs[0], xe[1] - xs[1]]);
                        let row = 2 * stag.class_of(mesh, id) + oc;
                        taps.push((row, slot, d, val));
                    }
                }
            }
        }
        Ok(Self { kind, taps })
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn eval(&self, kv: Wavevector) -> SymbolMatrix {
        let mut m = CMatrix::zeros(self.dim());
        for &(row, col, d, w) in &self.taps {
            m[(row, col)] += kv.phase(d).conj() * w;
        }
        SymbolMatrix { kind: self.kind, matrix: m }
    }
}
