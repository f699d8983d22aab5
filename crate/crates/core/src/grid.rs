//! Grid kinds and velocity staggering.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::mesh::{TriMesh, Vec2};

/// Where the velocity degrees of freedom live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Staggering {
    Vertex,
    Cell,
    Edge,
}

impl Staggering {
    /// Number of translation classes (`1`, `2` or `3`).
    pub fn n_classes(self) -> usize {
        match self {
            Staggering::Vertex => 1,
            Staggering::Cell => 2,
            Staggering::Edge => 3,
        }
    }

    pub fn count(self, mesh: &TriMesh) -> usize {
        self.n_classes() * mesh.n_vertices()
    }

    /// Class (block index) of entity `id`.
    pub fn class_of(self, mesh: &TriMesh, id: usize) -> usize {
        id / mesh.n_vertices()
    }

    pub fn position(self, mesh: &TriMesh, id: usize) -> Vec2 {
        match self {
            Staggering::Vertex => mesh.vertex_pos[id],
            Staggering::Cell => mesh.cell_centroid[id],
            Staggering::Edge => mesh.edge_midpoint[id],
        }
    }

    /// Lumped mass area of each degree of freedom.
    pub fn areas(self, mesh: &TriMesh) -> &[f64] {
        let g = mesh.measures();
        match self {
            Staggering::Vertex => &g.vertex_area,
            Staggering::Cell => &g.cell_area,
            Staggering::Edge => &g.edge_area,
        }
    }
}

/// Discretization of the viscous stress divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    Continuous,
    /// Vertex velocities (A-grid), lumped mass.
    VertexLumped,
    /// Vertex velocities, consistent P1 mass.
    VertexConsistent,
    /// Cell velocities with strain rates at vertices (unstabilized B-grid).
    CellV,
    /// Cell velocities with corrected edge strain rates (stabilized B-grid).
    CellCorrected,
    /// Crouzeix-Raviart edge velocities (CD-grid) with jump penalty `eps`.
    EdgeCr { eps: f64 },
}

impl GridKind {
    pub fn staggering(self) -> Option<Staggering> {
        match self {
            GridKind::Continuous => None,
            GridKind::VertexLumped | GridKind::VertexConsistent => Some(Staggering::Vertex),
            GridKind::CellV | GridKind::CellCorrected => Some(Staggering::Cell),
            GridKind::EdgeCr { .. } => Some(Staggering::Edge),
        }
    }

    /// Dimension of the Fourier symbol.
    pub fn dim(self) -> usize {
        2 * self.staggering().map_or(1, Staggering::n_classes)
    }

    pub fn name(self) -> &'static str {
        match self {
            GridKind::Continuous => "continuous",
            GridKind::VertexLumped => "vertex-lumped",
            GridKind::VertexConsistent => "vertex-consistent",
            GridKind::CellV => "cell-v",
            GridKind::CellCorrected => "cell-corrected",
            GridKind::EdgeCr { .. } => "edge-cr",
        }
    }

    /// Parse a grid name; `eps` is used for `edge-cr`.
    pub fn parse_with_eps(s: &str, eps: f64) -> Result<Self, Error> {
        Ok(match s {
            "continuous" => GridKind::Continuous,
            "vertex-lumped" => GridKind::VertexLumped,
            "vertex-consistent" => GridKind::VertexConsistent,
            "cell-v" => GridKind::CellV,
            "cell-corrected" => GridKind::CellCorrected,
            "edge-cr" => GridKind::EdgeCr { eps },
            other => return Err(Error::InvalidParameter(format!("unknown grid kind '{other}'"))),
        })
    }
}

impl FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_with_eps(s, 1.0)
    }
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridKind::EdgeCr { eps } => write!(f, "edge-cr(eps={eps})"),
            other => f.write_str(other.name()),
        }
    }
}
