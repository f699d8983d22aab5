//! Legacy ASCII VTK output.
//!
//! Cells are written with their own three corner points, unwrapped around the
//! centroid, so triangles that straddle a periodic seam keep their shape.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::grid::Staggering;
use crate::mesh::{add, TriMesh, Vec2};
use crate::mevp::{Domain, IceState};

fn write_geometry<W: Write>(w: &mut W, mesh: &TriMesh, title: &str) -> Result<()> {
    let n = mesh.n_cells();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * n)?;
    for c in 0..n {
        for off in mesh.cell_vertex_offset[c] {
            let p = add(mesh.cell_centroid[c], off);
            writeln!(w, "{:.6} {:.6} 0", p[0], p[1])?;
        }
    }
    writeln!(w, "CELLS {} {}", n, 4 * n)?;
    for c in 0..n {
        writeln!(w, "3 {} {} {}", 3 * c, 3 * c + 1, 3 * c + 2)?;
    }
    writeln!(w, "CELL_TYPES {n}")?;
    for _ in 0..n {
        writeln!(w, "5")?;
    }
    Ok(())
}

fn write_scalars<W: Write>(w: &mut W, name: &str, values: impl Iterator<Item = f64>) -> Result<()> {
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(w, "{v:.10e}")?;
    }
    Ok(())
}

fn write_vectors<W: Write>(w: &mut W, name: &str, values: impl Iterator<Item = Vec2>) -> Result<()> {
    writeln!(w, "VECTORS {name} double")?;
    for v in values {
        writeln!(w, "{:.10e} {:.10e} 0", v[0], v[1])?;
    }
    Ok(())
}

/// Concentration, thickness and shear as cell data, velocity where it lives:
/// point data for vertex velocities, cell data otherwise (edge velocities are
/// averaged over the three edges of each cell).
pub fn write_vtk_snapshot(path: &Path, domain: &Domain, state: &IceState, shear: &[f64]) -> Result<()> {
    let mesh = &domain.mesh;
    let mut w = BufWriter::new(File::create(path)?);
    write_geometry(&mut w, mesh, &format!("sea ice, {} grid, step {}", domain.scheme.name(), state.step))?;
    let u = &state.velocity;
    if domain.scheme.velocity_staggering() == Staggering::Vertex {
        writeln!(w, "POINT_DATA {}", 3 * mesh.n_cells())?;
        write_vectors(&mut w, "velocity", mesh.cell_vertices.iter().flat_map(|vs| vs.iter().map(|&v| u[v])))?;
    }
    writeln!(w, "CELL_DATA {}", mesh.n_cells())?;
    write_scalars(&mut w, "concentration", state.concentration.iter().copied())?;
    write_scalars(&mut w, "thickness", state.thickness.iter().copied())?;
    write_scalars(&mut w, "shear", shear.iter().copied())?;
    match domain.scheme.velocity_staggering() {
        Staggering::Cell => write_vectors(&mut w, "velocity", u.iter().copied())?,
        Staggering::Edge => write_vectors(
            &mut w,
            "velocity",
            mesh.cell_edges.iter().map(|es| {
                let s = es.iter().fold([0.0, 0.0], |acc, &e| add(acc, u[e]));
                [s[0] / 3.0, s[1] / 3.0]
            }),
        )?,
        Staggering::Vertex => {}
    }
    w.flush()?;
    Ok(())
}

/// Mesh geometry with cell ids, cell classes and the seam flag.
pub fn write_vtk_mesh<W: Write>(mut w: W, mesh: &TriMesh) -> Result<()> {
    write_geometry(&mut w, mesh, &format!("triangular mesh {}x{}, a = {}", mesh.nx, mesh.ny, mesh.a))?;
    writeln!(w, "CELL_DATA {}", mesh.n_cells())?;
    writeln!(w, "SCALARS cell_id int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for c in 0..mesh.n_cells() {
        writeln!(w, "{c}")?;
    }
    writeln!(w, "SCALARS upward int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for c in 0..mesh.n_cells() {
        writeln!(w, "{}", u8::from(c < mesh.n_vertices()))?;
    }
    writeln!(w, "SCALARS wraps int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for &wr in &mesh.cell_wraps {
        writeln!(w, "{}", u8::from(wr))?;
    }
    w.flush()?;
    Ok(())
}
