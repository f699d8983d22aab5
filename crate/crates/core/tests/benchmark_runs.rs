//! Full benchmark runs at desk scale.

use std::fs;

use seaice_tri::benchmark::*;
use seaice_tri::mevp::{MevpParams, Scheme};

fn desk(scheme: Scheme, dt: f64) -> BenchmarkConfig {
    BenchmarkConfig {
        scheme,
        mevp: MevpParams { alpha: 1000.0, beta: 1000.0, n_evp: 100, dt, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn short_run_writes_snapshots_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BenchmarkConfig {
        length: 32e3,
        duration: 3600.0,
        output_every: 1800.0,
        output_dir: Some(dir.path().to_path_buf()),
        mevp: MevpParams { n_evp: 20, ..Default::default() },
        ..Default::default()
    };
    let d = run_benchmark(&cfg).unwrap();
    assert!(d.completed());
    for i in 0..3 {
        let vtk = fs::read_to_string(dir.path().join(format!("snapshot_{i:04}.vtk"))).unwrap();
        assert!(vtk.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(vtk.contains("SCALARS shear double 1"));
    }
    let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    let mut expected = Vec::new();
    d.write_csv(&mut expected).unwrap();
    assert_eq!(csv.as_bytes(), expected.as_slice());
}

// 24 h runs with the moving cyclone; each takes several seconds.

#[test]
fn edge_grid_is_clean_at_short_steps_and_breaks_at_three_minutes() {
    let clean = run_benchmark(&desk(Scheme::CD, 90.0)).unwrap();
    assert!(clean.completed(), "{:?}", clean.abort);
    assert!(clean.rows.iter().all(|r| r.max_speed < 5.0));
    let broken = run_benchmark(&desk(Scheme::CD, 180.0)).unwrap();
    assert!(!broken.completed());
}

#[test]
fn case_v_cell_grid_is_noisier_than_corrected() {
    let corrected = run_benchmark(&desk(Scheme::B, 120.0)).unwrap();
    let case_v = run_benchmark(&desk(Scheme::BCaseV, 120.0)).unwrap();
    assert!(corrected.completed() && case_v.completed());
    // compare from the second hour on, once the cyclone has built up shear
    for (c, v) in corrected.rows.iter().zip(&case_v.rows).skip(2) {
        assert!(v.noise_metric > c.noise_metric, "t = {}: {} vs {}", c.time, v.noise_metric, c.noise_metric);
    }
}

#[test]
fn vertex_grid_reference_is_clean() {
    let d = run_benchmark(&reference_config(&desk(Scheme::A, 120.0))).unwrap();
    assert!(d.completed());
    // far below the checkerboard value of 2
    assert!(d.rows.iter().all(|r| r.noise_metric < 0.5));
    assert!(d.shear.iter().all(|&s| s >= 0.0));
    assert!(d.concentration.iter().all(|&a| (0.0..=1.0).contains(&a)));
}
