//! Triangular-mesh discretizations of viscous sea-ice stress divergence.
//!
//! Velocities can be placed on vertices (A-grid), cells (B-grid) or edges
//! (CD-grid). The crate provides the periodic equilateral mesh, the discrete
//! strain-rate and divergence operators for every placement, their analytic
//! Fourier symbols, eigenvalue branch analysis, and an mEVP solver with a
//! moving-cyclone benchmark.

pub mod benchmark;
pub mod config;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod io;
pub mod mesh;
pub mod mevp;
pub mod operators;
pub mod rheology;
pub mod symbols;

pub use error::{Error, Result};
pub use grid::{GridKind, Staggering};
pub use mesh::{build_periodic_mesh, build_rectangular_mesh, TriMesh, Vec2};
pub use symbols::{SymbolMatrix, SymbolParams, Wavevector};
