//! Discrete operators against their Fourier symbols.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand::rngs::StdRng;
use seaice_tri::eigen::CMatrix;
use seaice_tri::operators::MassKind;
use seaice_tri::symbols::*;
use seaice_tri::{build_periodic_mesh, GridKind, TriMesh};

fn lattice_kvs(mesh: &TriMesh, count: usize) -> Vec<Wavevector> {
    let [b1, b2] = mesh.reciprocal_periods();
    let mut out = Vec::new();
    // a deterministic spread over the reciprocal cell, skipping k = 0
    let mut p = 1i64;
    let mut q = 0i64;
    while out.len() < count {
        let (pp, qq) = (p as f64, q as f64);
        out.push(Wavevector::new(pp * b1[0] + qq * b2[0], pp * b1[1] + qq * b2[1]));
        p = (p * 5 + 3) % 16 - 7;
        q = (q * 7 + 5) % 16 - 7;
        if p == 0 && q == 0 {
            p = 3;
        }
    }
    out
}

fn params() -> SymbolParams {
    SymbolParams { a: 1.0, eta: 1.3, z: 1.0 }
}

#[test]
fn numeric_symbols_match_closed_forms() {
    let mesh = build_periodic_mesh(16, 16, 1.0).unwrap();
    let p = params();
    let kinds = [
        GridKind::VertexLumped,
        GridKind::CellV,
        GridKind::EdgeCr { eps: 0.0 },
        GridKind::EdgeCr { eps: 0.2 },
        GridKind::EdgeCr { eps: 1.0 },
    ];
    for kind in kinds {
        for kv in lattice_kvs(&mesh, 24) {
            let num = numeric_symbol(kind, kv, &mesh, &p).unwrap();
            let ana = analytic_symbol(kind, kv, &p).unwrap();
            let dev = num.max_deviation(&ana);
            assert!(dev <= 1e-10 * ana.norm().max(1e-300), "{kind} at {kv:?}: {dev:e}");
        }
    }
}

#[test]
fn consistent_mass_symbol_matches_mesh_solve() {
    let mesh = build_periodic_mesh(16, 16, 1.0).unwrap();
    let p = params();
    for kv in lattice_kvs(&mesh, 8) {
        let num = numeric_symbol(GridKind::VertexConsistent, kv, &mesh, &p).unwrap();
        let ana = vertex_symbol(kv, &p, MassKind::Consistent).unwrap();
        assert!(num.max_deviation(&ana) <= 1e-9 * ana.norm(), "{kv:?}");
    }
}

#[test]
fn corrected_cell_stencil_equals_plane_wave_projection() {
    let mesh = build_periodic_mesh(16, 16, 1.0).unwrap();
    let p = params();
    let st = StencilSymbol::extract(GridKind::CellCorrected, &p).unwrap();
    for kv in lattice_kvs(&mesh, 20) {
        let num = numeric_symbol(GridKind::CellCorrected, kv, &mesh, &p).unwrap();
        let sten = st.eval(kv);
        assert!(num.max_deviation(&sten) <= 1e-10 * num.norm(), "{kv:?}");
    }
}

#[test]
fn incommensurate_wavevector_rejected() {
    let mesh = build_periodic_mesh(16, 16, 1.0).unwrap();
    let kv = Wavevector::new(0.123, 0.0);
    assert!(numeric_symbol(GridKind::VertexLumped, kv, &mesh, &params()).is_err());
    assert!(numeric_symbol(GridKind::Continuous, Wavevector::new(0.0, 0.0), &mesh, &params()).is_err());
}

fn random_kvs(n: usize, seed: u64) -> Vec<Wavevector> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n).map(|_| Wavevector::new(rng.gen_range(-7.0..7.0), rng.gen_range(-7.0..7.0))).collect()
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    m.add(&m.adjoint()).scaled(0.5)
}

#[test]
fn stabilized_symbols_are_hermitian_and_dissipative() {
    for z in [1.0, 4.0] {
        let p = SymbolParams { z, ..params() };
        for kv in random_kvs(40, 7) {
            for kind in [GridKind::VertexLumped, GridKind::CellV, GridKind::EdgeCr { eps: 0.0 }, GridKind::EdgeCr { eps: 1.0 }] {
                let s = analytic_symbol(kind, kv, &p).unwrap();
                assert!(s.matrix.hermitian_defect() <= 1e-12 * s.norm(), "{kind}");
                let top = s.eigenvalues().unwrap().iter().map(|l| l.re).fold(f64::MIN, f64::max);
                assert!(top <= 1e-12 * s.norm(), "{kind}: {top}");
            }
        }
    }
}

#[test]
fn corrected_cell_symbol_is_dissipative() {
    let p = params();
    let st = StencilSymbol::extract(GridKind::CellCorrected, &p).unwrap();
    for kv in random_kvs(40, 11) {
        let s = st.eval(kv);
        for l in s.eigenvalues().unwrap() {
            assert!(l.re <= 1e-12 * s.norm() && l.im.abs() <= 1e-10 * s.norm(), "{l}");
        }
    }
}

#[test]
fn symbols_scale_linearly_in_eta() {
    let kv = Wavevector::new(1.1, -0.4);
    for kind in [GridKind::VertexLumped, GridKind::CellV, GridKind::CellCorrected, GridKind::EdgeCr { eps: 0.5 }] {
        let p1 = params();
        let p2 = SymbolParams { eta: 2.0 * p1.eta, ..p1 };
        let s1 = analytic_symbol(kind, kv, &p1).unwrap();
        let s2 = analytic_symbol(kind, kv, &p2).unwrap();
        assert!(s2.max_deviation(&SymbolMatrix { kind, matrix: s1.matrix.scaled(2.0) }) <= 1e-12 * s2.norm(), "{kind}");
    }
}

#[test]
fn symbols_are_periodic_on_the_reciprocal_lattice() {
    let f = 2.0 * PI;
    let g = [[f, -f / 3f64.sqrt()], [0.0, 2.0 * f / 3f64.sqrt()]];
    let p = params();
    for kind in [GridKind::VertexLumped, GridKind::CellV, GridKind::CellCorrected, GridKind::EdgeCr { eps: 0.2 }] {
        for kv in random_kvs(5, 3) {
            let base = analytic_symbol(kind, kv, &p).unwrap().eigenvalues().unwrap();
            for gv in g {
                let shifted = analytic_symbol(kind, kv.shifted(gv), &p).unwrap().eigenvalues().unwrap();
                for (x, y) in base.iter().zip(&shifted) {
                    assert!((x - y).norm() <= 1e-10 * (1.0 + x.norm()), "{kind}: {x} vs {y}");
                }
            }
        }
    }
}

fn physical_pair(values: &[f64]) -> [f64; 2] {
    // the two eigenvalues with the smallest magnitude
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut out = [v[0], v[1]];
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

fn real_eigs(s: &SymbolMatrix) -> Vec<f64> {
    s.eigenvalues().unwrap().iter().map(|l| l.re).collect()
}

#[test]
fn mass_treatment_flips_the_error_sign() {
    let p = params();
    let kv = Wavevector::polar(0.3, PI / 6.0, 1.0);
    let cont = continuous_eigenvalues(kv, p.eta, p.z * p.eta);
    let lumped = physical_pair(&real_eigs(&vertex_symbol(kv, &p, MassKind::Lumped).unwrap()));
    let consistent = physical_pair(&real_eigs(&vertex_symbol(kv, &p, MassKind::Consistent).unwrap()));
    for i in 0..2 {
        let (el, ec) = (lumped[i] - cont[i], consistent[i] - cont[i]);
        assert!(el * ec < 0.0, "branch {i}: {el:e} vs {ec:e}");
    }
}

#[test]
fn corrected_cell_grid_is_more_accurate_than_vertex_grid() {
    let p = params();
    let kv = Wavevector::polar(0.5, PI / 6.0, 1.0);
    let cont = continuous_eigenvalues(kv, p.eta, p.z * p.eta);
    let vert = physical_pair(&real_eigs(&analytic_symbol(GridKind::VertexLumped, kv, &p).unwrap()));
    let cell = physical_pair(&real_eigs(&analytic_symbol(GridKind::CellCorrected, kv, &p).unwrap()));
    for i in 0..2 {
        let ev = ((vert[i] - cont[i]) / cont[i]).abs();
        let ec = ((cell[i] - cont[i]) / cont[i]).abs();
        assert!(ec < ev, "branch {i}: cell {ec:e} vertex {ev:e}");
    }
}

#[test]
fn cell_v_small_k_matches_continuum() {
    let p = params();
    let kv = Wavevector::polar(0.2, PI / 6.0, 1.0);
    let cont = continuous_eigenvalues(kv, p.eta, p.z * p.eta);
    let ev = real_eigs(&cell_v_symbol(kv, &p));
    let nonzero: Vec<f64> = ev.iter().copied().filter(|l| l.abs() > 1e-10).collect();
    assert_eq!(nonzero.len(), 2);
    let pair = physical_pair(&nonzero);
    for i in 0..2 {
        assert!(((pair[i] - cont[i]) / cont[i]).abs() <= 0.02);
    }
}

#[test]
fn jump_penalty_alone_has_two_zero_branches() {
    let p = params();
    for ka in [0.01, 0.1, 1.0] {
        let kv = Wavevector::polar(ka, PI / 6.0, 1.0);
        let t = stabilization_symbol(kv, &p);
        let s = SymbolMatrix { kind: GridKind::EdgeCr { eps: 1.0 }, matrix: t };
        let ev = real_eigs(&s);
        let zeros = ev.iter().filter(|l| l.abs() <= 1e-12 * s.norm()).count();
        assert_eq!(zeros, 2, "ka={ka}");
        let finite = ev.iter().filter(|l| l.abs() > 1.0).count();
        assert_eq!(finite, 4, "ka={ka}");
    }
}

#[test]
fn corrected_cell_symbol_has_dissipative_hermitian_part() {
    let p = params();
    let st = StencilSymbol::extract(GridKind::CellCorrected, &p).unwrap();
    for kv in random_kvs(200, 13) {
        let s = st.eval(kv);
        let hp = SymbolMatrix { kind: s.kind, matrix: hermitian_part(&s.matrix) };
        let top = real_eigs(&hp).into_iter().fold(f64::MIN, f64::max);
        assert!(top <= 1e-12 * s.norm(), "{kv:?}: {top}");
    }
}
