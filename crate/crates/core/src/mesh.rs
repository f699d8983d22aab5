//! Doubly periodic meshes of equilateral triangles.
//!
//! Vertices sit on the lattice `n1 (a, 0) + n2 (a/2, h)`. Every lattice point is
//! the base of one upward (`U`) and one downward (`D`) triangle and of one edge
//! of each class `A`, `B`, `C`. Entity ids are dense and blocked by class:
//! all `U` cells come before all `D` cells, `A` edges before `B` before `C`,
//! and inside each block the id is the id of the base vertex.

use std::fmt;

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

#[inline]
pub(crate) fn dot(p: Vec2, q: Vec2) -> f64 {
    p[0] * q[0] + p[1] * q[1]
}

#[inline]
pub(crate) fn sub(p: Vec2, q: Vec2) -> Vec2 {
    [p[0] - q[0], p[1] - q[1]]
}

#[inline]
pub(crate) fn add(p: Vec2, q: Vec2) -> Vec2 {
    [p[0] + q[0], p[1] + q[1]]
}

#[inline]
pub(crate) fn scale(s: f64, p: Vec2) -> Vec2 {
    [s * p[0], s * p[1]]
}

#[inline]
pub(crate) fn norm(p: Vec2) -> f64 {
    p[0].hypot(p[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellClass {
    U,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    A,
    B,
    C,
}

impl EdgeClass {
    pub const ALL: [EdgeClass; 3] = [EdgeClass::A, EdgeClass::B, EdgeClass::C];

    /// Orientation vector `v1 - v0` of edges in this class.
    pub fn orientation(self, a: f64) -> Vec2 {
        let h = 3f64.sqrt() * a / 2.0;
        match self {
            EdgeClass::A => [a, 0.0],
            EdgeClass::B => [a / 2.0, h],
            EdgeClass::C => [-a / 2.0, h],
        }
    }
}

impl fmt::Display for EdgeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EdgeClass::A => "a",
            EdgeClass::B => "b",
            EdgeClass::C => "c",
        };
        f.write_str(s)
    }
}

/// How the lattice is folded onto a torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Periods `nx (a, 0)` and `ny (a/2, h)`: a rhombus.
    Rhombic,
    /// Periods `(nx a, 0)` and `(0, ny h)`; requires even `ny`.
    Rectangular,
}

/// One segment of the median-dual boundary around a vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSegment {
    /// Cell that contains the segment; its velocity is attributed to the segment.
    pub cell: usize,
    pub length: f64,
    /// Unit normal pointing out of the control volume.
    pub normal: Vec2,
}

/// Areas and lengths derived from a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoMeasures {
    pub cell_area: Vec<f64>,
    /// Median-dual area per vertex.
    pub vertex_area: Vec<f64>,
    /// Area associated with each edge (diagonal Crouzeix-Raviart mass).
    pub edge_area: Vec<f64>,
    pub edge_length: Vec<f64>,
    /// Median-dual boundary segments, 12 per vertex.
    pub dual_segments: Vec<Vec<DualSegment>>,
}

impl GeoMeasures {
    pub fn total_area(&self) -> f64 {
        self.cell_area.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub nx: usize,
    pub ny: usize,
    /// Edge length (m).
    pub a: f64,
    /// Triangle height (m).
    pub h: f64,
    pub layout: Layout,
    /// Period vectors of the torus.
    pub periods: [Vec2; 2],

    pub vertex_pos: Vec<Vec2>,
    /// Incident cells in counterclockwise order.
    pub vertex_cells: Vec<[usize; 6]>,

    pub cell_class: Vec<CellClass>,
    /// Counterclockwise vertices.
    pub cell_vertices: Vec<[usize; 3]>,
    /// `cell_edges[c][i]` is the edge opposite `cell_vertices[c][i]`.
    pub cell_edges: Vec<[usize; 3]>,
    pub cell_centroid: Vec<Vec2>,
    /// Vertex positions relative to the centroid, unwrapped.
    pub cell_vertex_offset: Vec<[Vec2; 3]>,
    /// Gradients of the P1 basis functions of the three vertices.
    pub cell_grad_p1: Vec<[Vec2; 3]>,
    /// Outward unit normals of the three edges (edge `i` opposite vertex `i`).
    pub cell_edge_normal: Vec<[Vec2; 3]>,
    /// True when the cell straddles the seam of the torus.
    pub cell_wraps: Vec<bool>,

    pub edge_class: Vec<EdgeClass>,
    /// `v1 - v0` equals the class orientation vector.
    pub edge_vertices: Vec<[usize; 2]>,
    /// `[d_cell, u_cell]`
    pub edge_cells: Vec<[usize; 2]>,
    pub edge_midpoint: Vec<Vec2>,
    /// Vector from the centroid of the `D` cell to the centroid of the `U` cell.
    pub edge_r: Vec<Vec2>,

    measures: GeoMeasures,
}

impl TriMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertex_pos.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_class.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_class.len()
    }

    pub fn measures(&self) -> &GeoMeasures {
        &self.measures
    }

    /// Translate `d` by period vectors to the shortest equivalent vector.
    pub fn min_image(&self, d: Vec2) -> Vec2 {
        let [t1, t2] = self.periods;
        let mut best = d;
        let mut best_norm = norm(d);
        for m1 in -2i32..=2 {
            for m2 in -2i32..=2 {
                let cand = add(d, add(scale(m1 as f64, t1), scale(m2 as f64, t2)));
                let n = norm(cand);
                if n < best_norm - 1e-12 * self.a {
                    best = cand;
                    best_norm = n;
                }
            }
        }
        best
    }

    /// Whether the plane wave `exp(i k.x)` is periodic on this mesh.
    pub fn is_commensurate(&self, k: f64, l: f64) -> bool {
        self.periods.iter().all(|t| {
            let turns = (k * t[0] + l * t[1]) / std::f64::consts::TAU;
            (turns - turns.round()).abs() < 1e-9
        })
    }

    /// Reciprocal basis `b_i` with `b_i . t_j = 2 pi delta_ij` for the lattice
    /// spanned by the period vectors. Integer combinations are exactly the
    /// commensurate wavevectors.
    pub fn reciprocal_periods(&self) -> [Vec2; 2] {
        let [t1, t2] = self.periods;
        let det = t1[0] * t2[1] - t1[1] * t2[0];
        let f = std::f64::consts::TAU / det;
        [[f * t2[1], -f * t2[0]], [-f * t1[1], f * t1[0]]]
    }

    pub fn cells_of_class(&self, class: CellClass) -> std::ops::Range<usize> {
        let n = self.n_vertices();
        match class {
            CellClass::U => 0..n,
            CellClass::D => n..2 * n,
        }
    }

    pub fn edges_of_class(&self, class: EdgeClass) -> std::ops::Range<usize> {
        let n = self.n_vertices();
        match class {
            EdgeClass::A => 0..n,
            EdgeClass::B => n..2 * n,
            EdgeClass::C => 2 * n..3 * n,
        }
    }
}

/// Index bookkeeping for the folded lattice.
struct Lattice {
    nx: i64,
    ny: i64,
    a: f64,
    h: f64,
    layout: Layout,
}

impl Lattice {
    /// Unfolded grid indices `(i, j)` of lattice point `(n1, n2)`.
    fn grid_index(&self, n1: i64, n2: i64) -> (i64, i64) {
        match self.layout {
            Layout::Rhombic => (n1, n2),
            Layout::Rectangular => (n1 + n2.div_euclid(2), n2),
        }
    }

    fn lattice_of(&self, i: i64, j: i64) -> (i64, i64) {
        match self.layout {
            Layout::Rhombic => (i, j),
            Layout::Rectangular => (i - j.div_euclid(2), j),
        }
    }

    fn inside(&self, n1: i64, n2: i64) -> bool {
        let (i, j) = self.grid_index(n1, n2);
        (0..self.nx).contains(&i) && (0..self.ny).contains(&j)
    }

    fn vertex_id(&self, n1: i64, n2: i64) -> usize {
        let (i, j) = self.grid_index(n1, n2);
        (i.rem_euclid(self.nx) + self.nx * j.rem_euclid(self.ny)) as usize
    }

    /// Unwrapped position of lattice point `(n1, n2)`.
    fn pos(&self, n1: i64, n2: i64) -> Vec2 {
        [n1 as f64 * self.a + n2 as f64 * self.a / 2.0, n2 as f64 * self.h]
    }

    fn wrapped_pos(&self, n1: i64, n2: i64) -> Vec2 {
        let (i, j) = self.grid_index(n1, n2);
        let (w1, w2) = self.lattice_of(i.rem_euclid(self.nx), j.rem_euclid(self.ny));
        self.pos(w1, w2)
    }
}

/// Build a rhombic doubly periodic mesh with `nx * ny` vertices.
pub fn build_periodic_mesh(nx: usize, ny: usize, a: f64) -> Result<TriMesh> {
    build_mesh(nx, ny, a, Layout::Rhombic)
}

/// Build a periodic mesh folded onto the rectangle `[0, nx a) x [0, ny h)`.
pub fn build_rectangular_mesh(nx: usize, ny: usize, a: f64) -> Result<TriMesh> {
    build_mesh(nx, ny, a, Layout::Rectangular)
}

/// Build an `nx * ny` periodic mesh with the given period layout.
pub fn build_mesh(nx: usize, ny: usize, a: f64, layout: Layout) -> Result<TriMesh> {
    if layout == Layout::Rectangular && ny % 2 != 0 {
        return Err(Error::InvalidMesh(format!(
            "rectangular layout needs an even number of rows, got {ny}"
        )));
    }
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidMesh(format!(
            "need at least 2 periods per direction, got {nx} x {ny}"
        )));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidMesh(format!("edge length must be positive, got {a}")));
    }
    let h = 3f64.sqrt() * a / 2.0;
    let lat = Lattice { nx: nx as i64, ny: ny as i64, a, h, layout };
    let n = nx * ny;

    // base lattice point of every vertex id
    let mut base = vec![(0i64, 0i64); n];
    for j in 0..ny as i64 {
        for i in 0..nx as i64 {
            let (n1, n2) = lat.lattice_of(i, j);
            base[lat.vertex_id(n1, n2)] = (n1, n2);
        }
    }
    let vertex_pos: Vec<Vec2> = base.iter().map(|&(n1, n2)| lat.pos(n1, n2)).collect();

    let u_id = |n1: i64, n2: i64| lat.vertex_id(n1, n2);
    let d_id = |n1: i64, n2: i64| n + lat.vertex_id(n1, n2);
    let ea = |n1: i64, n2: i64| lat.vertex_id(n1, n2);
    let eb = |n1: i64, n2: i64| n + lat.vertex_id(n1, n2);
    let ec = |n1: i64, n2: i64| 2 * n + lat.vertex_id(n1, n2);

    let mut cell_class = Vec::with_capacity(2 * n);
    let mut cell_vertices = Vec::with_capacity(2 * n);
    let mut cell_edges = Vec::with_capacity(2 * n);
    let mut cell_centroid = Vec::with_capacity(2 * n);
    let mut cell_vertex_offset = Vec::with_capacity(2 * n);
    let mut cell_wraps = Vec::with_capacity(2 * n);

    for class in [CellClass::U, CellClass::D] {
        for &(n1, n2) in &base {
            let (corners, edges) = match class {
                CellClass::U => (
                    [(n1, n2), (n1 + 1, n2), (n1, n2 + 1)],
                    [ec(n1, n2), eb(n1, n2), ea(n1, n2)],
                ),
                CellClass::D => (
                    [(n1 + 1, n2), (n1 + 1, n2 + 1), (n1, n2 + 1)],
                    [ea(n1, n2 + 1), ec(n1, n2), eb(n1 + 1, n2)],
                ),
            };
            let p = corners.map(|(m1, m2)| lat.pos(m1, m2));
            let centroid = scale(1.0 / 3.0, add(p[0], add(p[1], p[2])));
            let shift = sub(lat.wrapped_pos(corners[0].0, corners[0].1), p[0]);
            cell_class.push(class);
            cell_vertices.push(corners.map(|(m1, m2)| lat.vertex_id(m1, m2)));
            cell_edges.push(edges);
            cell_centroid.push(add(centroid, shift));
            cell_vertex_offset.push(p.map(|q| sub(q, centroid)));
            cell_wraps.push(!corners.iter().all(|&(m1, m2)| lat.inside(m1, m2)));
        }
    }

    let mut cell_grad_p1 = Vec::with_capacity(2 * n);
    let mut cell_edge_normal = Vec::with_capacity(2 * n);
    for off in &cell_vertex_offset {
        let area = triangle_area(off);
        let mut grads = [[0.0; 2]; 3];
        let mut normals = [[0.0; 2]; 3];
        for i in 0..3 {
            let p = off[(i + 1) % 3];
            let q = off[(i + 2) % 3];
            let e = sub(q, p);
            // outward normal of a counterclockwise triangle
            let len = norm(e);
            let nrm = [e[1] / len, -e[0] / len];
            normals[i] = nrm;
            grads[i] = scale(-len / (2.0 * area), nrm);
        }
        cell_grad_p1.push(grads);
        cell_edge_normal.push(normals);
    }

    let mut edge_class = Vec::with_capacity(3 * n);
    let mut edge_vertices = Vec::with_capacity(3 * n);
    let mut edge_cells = Vec::with_capacity(3 * n);
    let mut edge_midpoint = Vec::with_capacity(3 * n);
    let mut edge_r = Vec::with_capacity(3 * n);
    for class in EdgeClass::ALL {
        for &(n1, n2) in &base {
            let (ends, d_base) = match class {
                EdgeClass::A => ([(n1, n2), (n1 + 1, n2)], (n1, n2 - 1)),
                EdgeClass::B => ([(n1, n2), (n1, n2 + 1)], (n1 - 1, n2)),
                EdgeClass::C => ([(n1 + 1, n2), (n1, n2 + 1)], (n1, n2)),
            };
            let p0 = lat.pos(ends[0].0, ends[0].1);
            let p1 = lat.pos(ends[1].0, ends[1].1);
            let mid = scale(0.5, add(p0, p1));
            let u_centroid = add(lat.pos(n1, n2), [a / 2.0, h / 3.0]);
            let d_centroid = add(lat.pos(d_base.0, d_base.1), [a, 2.0 * h / 3.0]);
            let shift = sub(lat.wrapped_pos(ends[0].0, ends[0].1), p0);
            edge_class.push(class);
            edge_vertices.push(ends.map(|(m1, m2)| lat.vertex_id(m1, m2)));
            edge_cells.push([d_id(d_base.0, d_base.1), u_id(n1, n2)]);
            edge_midpoint.push(add(mid, shift));
            edge_r.push(sub(u_centroid, d_centroid));
        }
    }

    // vertex -> cells, counterclockwise starting with the U cell based at the vertex
    let mut vertex_cells = vec![[0usize; 6]; n];
    for (v, &(n1, n2)) in base.iter().enumerate() {
        vertex_cells[v] = [
            u_id(n1, n2),
            d_id(n1 - 1, n2),
            u_id(n1 - 1, n2),
            d_id(n1 - 1, n2 - 1),
            u_id(n1, n2 - 1),
            d_id(n1, n2 - 1),
        ];
    }

    let periods = match layout {
        Layout::Rhombic => [[nx as f64 * a, 0.0], [ny as f64 * a / 2.0, ny as f64 * h]],
        Layout::Rectangular => [[nx as f64 * a, 0.0], [0.0, ny as f64 * h]],
    };

    let mut mesh = TriMesh {
        nx,
        ny,
        a,
        h,
        layout,
        periods,
        vertex_pos,
        vertex_cells,
        cell_class,
        cell_vertices,
        cell_edges,
        cell_centroid,
        cell_vertex_offset,
        cell_grad_p1,
        cell_edge_normal,
        cell_wraps,
        edge_class,
        edge_vertices,
        edge_cells,
        edge_midpoint,
        edge_r,
        measures: GeoMeasures {
            cell_area: vec![],
            vertex_area: vec![],
            edge_area: vec![],
            edge_length: vec![],
            dual_segments: vec![],
        },
    };
    mesh.measures = geometric_measures(&mesh);
    Ok(mesh)
}

fn triangle_area(p: &[Vec2; 3]) -> f64 {
    let e1 = sub(p[1], p[0]);
    let e2 = sub(p[2], p[0]);
    0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
}

/// Areas, lengths and median-dual segments of a mesh.
pub fn geometric_measures(mesh: &TriMesh) -> GeoMeasures {
    let cell_area: Vec<f64> = mesh.cell_vertex_offset.iter().map(triangle_area).collect();

    let mut vertex_area = vec![0.0; mesh.n_vertices()];
    let mut edge_area = vec![0.0; mesh.n_edges()];
    let mut dual_segments = vec![Vec::with_capacity(12); mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        let third = cell_area[c] / 3.0;
        let off = &mesh.cell_vertex_offset[c];
        for i in 0..3 {
            let v = mesh.cell_vertices[c][i];
            vertex_area[v] += third;
            edge_area[mesh.cell_edges[c][i]] += third;

            // two dual segments inside c: edge midpoint -> centroid, one per edge touching v
            for other in [(i + 1) % 3, (i + 2) % 3] {
                let mid = scale(0.5, add(off[i], off[other]));
                let seg = sub([0.0, 0.0], mid);
                let length = norm(seg);
                let mut normal = [seg[1] / length, -seg[0] / length];
                if dot(normal, sub(mid, off[i])) < 0.0 {
                    normal = scale(-1.0, normal);
                }
                dual_segments[v].push(DualSegment { cell: c, length, normal });
            }
        }
    }

    let edge_length = mesh
        .edge_class
        .iter()
        .map(|cls| norm(cls.orientation(mesh.a)))
        .collect();

    GeoMeasures { cell_area, vertex_area, edge_area, edge_length, dual_segments }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_follow_one_two_three() {
        let m = build_periodic_mesh(2, 2, 1.0).unwrap();
        assert_eq!((m.n_vertices(), m.n_cells(), m.n_edges()), (4, 8, 12));
    }

    #[test]
    fn rejects_degenerate_sizes() {
        assert!(build_periodic_mesh(1, 4, 1.0).is_err());
        assert!(build_periodic_mesh(4, 1, 1.0).is_err());
        assert!(build_periodic_mesh(4, 4, 0.0).is_err());
        assert!(build_rectangular_mesh(4, 5, 1.0).is_err());
    }

    #[test]
    fn six_cells_per_vertex_alternating() {
        let m = build_periodic_mesh(16, 16, 2000.0).unwrap();
        let mut count = vec![0usize; m.n_vertices()];
        for cv in &m.cell_vertices {
            for &v in cv {
                count[v] += 1;
            }
        }
        assert!(count.iter().all(|&c| c == 6));
        for (v, cells) in m.vertex_cells.iter().enumerate() {
            for (k, &c) in cells.iter().enumerate() {
                let expect = if k % 2 == 0 { CellClass::U } else { CellClass::D };
                assert_eq!(m.cell_class[c], expect);
                assert!(m.cell_vertices[c].contains(&v));
            }
        }
    }

    #[test]
    fn edge_classes_split_in_thirds() {
        let m = build_periodic_mesh(3, 3, 1.0).unwrap();
        for cls in EdgeClass::ALL {
            assert_eq!(m.edge_class.iter().filter(|&&c| c == cls).count(), 9);
        }
    }

    #[test]
    fn edges_match_orientation_up_to_wrap() {
        for m in [
            build_periodic_mesh(5, 4, 1.5).unwrap(),
            build_rectangular_mesh(5, 4, 1.5).unwrap(),
        ] {
            for e in 0..m.n_edges() {
                let [v0, v1] = m.edge_vertices[e];
                let d = m.min_image(sub(m.vertex_pos[v1], m.vertex_pos[v0]));
                let o = m.edge_class[e].orientation(m.a);
                assert!(norm(sub(d, o)) < 1e-12, "edge {e}: {d:?} vs {o:?}");
            }
        }
    }

    #[test]
    fn edge_cells_are_one_u_one_d_and_consistent() {
        let m = build_rectangular_mesh(6, 4, 1.0).unwrap();
        for e in 0..m.n_edges() {
            let [d, u] = m.edge_cells[e];
            assert_eq!(m.cell_class[d], CellClass::D);
            assert_eq!(m.cell_class[u], CellClass::U);
            assert!(m.cell_edges[d].contains(&e));
            assert!(m.cell_edges[u].contains(&e));
            let r = m.min_image(sub(m.cell_centroid[u], m.cell_centroid[d]));
            assert!(norm(sub(r, m.edge_r[e])) < 1e-12);
            assert!((norm(m.edge_r[e]) - m.a / 3f64.sqrt()).abs() < 1e-12);
        }
        for c in 0..m.n_cells() {
            for (i, &e) in m.cell_edges[c].iter().enumerate() {
                let opposite = m.cell_vertices[c][i];
                assert!(!m.edge_vertices[e].contains(&opposite));
            }
        }
    }

    #[test]
    fn measures_partition_the_area() {
        let m = build_periodic_mesh(4, 3, 1.0).unwrap();
        let g = m.measures();
        let ac = 3f64.sqrt() / 4.0;
        assert!(g.cell_area.iter().all(|&x| (x - ac).abs() < 1e-14));
        assert!(g.vertex_area.iter().all(|&x| (x - 3f64.sqrt() / 2.0).abs() < 1e-14));
        assert!(g.edge_area.iter().all(|&x| (x - 3f64.sqrt() / 6.0).abs() < 1e-14));
        let total = g.total_area();
        let sv: f64 = g.vertex_area.iter().sum();
        let se: f64 = g.edge_area.iter().sum();
        assert!((sv - total).abs() < 1e-12 * total);
        assert!((se - total).abs() < 1e-12 * total);
    }

    #[test]
    fn dual_segments_close_the_control_volume() {
        let m = build_periodic_mesh(4, 4, 2.0).unwrap();
        let g = m.measures();
        for segs in &g.dual_segments {
            assert_eq!(segs.len(), 12);
            let mut s = [0.0, 0.0];
            for seg in segs {
                s = add(s, scale(seg.length, seg.normal));
            }
            assert!(norm(s) < 1e-12);
        }
    }

    #[test]
    fn reciprocal_basis_is_dual() {
        let m = build_periodic_mesh(5, 7, 1.3).unwrap();
        let b = m.reciprocal_periods();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { std::f64::consts::TAU } else { 0.0 };
                assert!((dot(b[i], m.periods[j]) - expect).abs() < 1e-12);
            }
            assert!(m.is_commensurate(b[i][0], b[i][1]));
        }
        assert!(!m.is_commensurate(0.5 * b[0][0], 0.5 * b[0][1]));
    }

    #[test]
    fn rectangular_seam_cells() {
        let m = build_rectangular_mesh(4, 4, 1.0).unwrap();
        let wraps = m.cell_wraps.iter().filter(|&&w| w).count();
        // last column and last row of rhombi straddle the seam
        assert!(wraps > 0 && wraps < m.n_cells());
        for c in 0..m.n_cells() {
            let p = m.cell_centroid[c];
            let inside = p[0] > 0.0 && p[0] < 4.0 && p[1] > 0.0 && p[1] < 4.0 * m.h;
            if !m.cell_wraps[c] {
                assert!(inside, "cell {c} at {p:?}");
            }
        }
    }
}
