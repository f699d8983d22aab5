use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use seaice_tri::eigen::{eig_general, eig_small, CMatrix};

/// Cyclic Jacobi for real symmetric matrices; returns sorted eigenvalues.
fn real_jacobi(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
                let (s, c) = theta.sin_cos();
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Real embedding `[[Re, -Im], [Im, Re]]`; each eigenvalue appears twice.
fn embedding(m: &CMatrix) -> Vec<Vec<f64>> {
    let n = m.dim();
    let mut r = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            r[i][j] = z.re;
            r[i][j + n] = -z.im;
            r[i + n][j] = z.im;
            r[i + n][j + n] = z.re;
        }
    }
    r
}

fn random_hermitian(rng: &mut StdRng, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n);
    for i in 0..n {
        m[(i, i)] = C64::new(rng.gen_range(-3.0..3.0), 0.0);
        for j in i + 1..n {
            let z = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

fn random_general(rng: &mut StdRng, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    m
}

#[test]
fn hermitian_eigenvalues_match_real_embedding_jacobi() {
    let mut rng = StdRng::seed_from_u64(42);
    for _ in 0..200 {
        let n = rng.gen_range(2..=6);
        let m = random_hermitian(&mut rng, n);
        let r = eig_small(&m).unwrap();
        let oracle = real_jacobi(embedding(&m));
        for (i, l) in r.eigenvalues.iter().enumerate() {
            assert!(l.im.abs() <= 1e-12 * m.norm());
            assert!((l.re - oracle[2 * i]).abs() <= 1e-10 * m.norm(), "{l} vs {}", oracle[2 * i]);
            assert!((l.re - oracle[2 * i + 1]).abs() <= 1e-10 * m.norm());
        }
    }
}

#[test]
fn general_path_agrees_with_jacobi_on_hermitian_input() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..50 {
        let m = random_hermitian(&mut rng, 6);
        let a = eig_small(&m).unwrap();
        let b = eig_general(&m).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - y).norm() <= 1e-10 * m.norm());
        }
    }
}

#[test]
fn general_matrices_satisfy_trace_and_determinant() {
    let mut rng = StdRng::seed_from_u64(9);
    for _ in 0..300 {
        let n = rng.gen_range(2..=6);
        let m = random_general(&mut rng, n);
        let r = eig_small(&m).unwrap();
        assert!(r.residual <= 1e-10 * m.norm());
        let sum: C64 = r.eigenvalues.iter().sum();
        assert!((sum - m.trace()).norm() <= 1e-10 * m.norm());
        if n <= 3 {
            let prod: C64 = r.eigenvalues.iter().product();
            assert!((prod - m.det()).norm() <= 1e-10 * m.norm().powi(n as i32));
        }
        for j in 0..n {
            let v = r.eigenvector(j);
            let nrm: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            assert!((nrm - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn defective_jordan_block_is_handled() {
    let m = CMatrix::from_real(&[vec![2.0, 1.0, 0.0], vec![0.0, 2.0, 1.0], vec![0.0, 0.0, 2.0]]);
    let r = eig_small(&m).unwrap();
    assert!(r.eigenvalues.iter().all(|l| (l - C64::new(2.0, 0.0)).norm() < 1e-10));
}

proptest! {
    #[test]
    fn hermitian_spectrum_is_real(entries in prop::collection::vec(-5.0f64..5.0, 36)) {
        let n = 4;
        let mut m = CMatrix::zeros(n);
        let mut it = entries.into_iter();
        for i in 0..n {
            m[(i, i)] = C64::new(it.next().unwrap(), 0.0);
            for j in i + 1..n {
                let z = C64::new(it.next().unwrap(), it.next().unwrap());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        let r = eig_small(&m).unwrap();
        prop_assert!(r.residual <= 1e-10 * m.norm().max(1.0));
        for l in &r.eigenvalues {
            prop_assert!(l.im.abs() <= 1e-12 * m.norm().max(1.0));
        }
    }
}
