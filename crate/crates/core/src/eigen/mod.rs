//! Dense complex eigenproblems of size up to 6 and branch sweeps built on them.

mod branches;

pub use branches::{
    brillouin_extent, max_lambda2, sweep_branches, Branch, BranchClass, BranchTable, Lambda2,
    SweepParams,
};

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Row-major dense complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<C64>> =
            rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self[(j, i)].conj();
            }
        }
        m
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// `||A - A^H||_F`
    pub fn hermitian_defect(&self) -> f64 {
        self.sub(&self.adjoint()).norm()
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_defect() <= rel_tol * self.norm().max(f64::MIN_POSITIVE)
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> C64 {
        let n = self.n;
        let mut a = self.clone();
        let mut det = C64::new(1.0, 0.0);
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm())).unwrap();
            if a[(p, k)].norm() == 0.0 {
                return C64::new(0.0, 0.0);
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(p * n + j, k * n + j);
                }
                det = -det;
            }
            det *= a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / a[(k, k)];
                for j in k..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= f * akj;
                }
            }
        }
        det
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        let n = self.n;
        assert_eq!(n, rhs.n);
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    m[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub eigenvalues: Vec<C64>,
    /// Unit-norm eigenvectors stored as columns.
    pub eigenvectors: CMatrix,
    /// `max_i ||A v_i - lambda_i v_i||`
    pub residual: f64,
}

impl EigenResult {
    pub fn eigenvector(&self, i: usize) -> Vec<C64> {
        self.eigenvectors.column(i)
    }
}

const RESIDUAL_TOL: f64 = 1e-10;

/// Eigen decomposition of a small dense complex matrix.
///
/// Hermitian input (to 1e-12 relative) goes through cyclic Jacobi rotations;
/// anything else through Hessenberg reduction and shifted QR. Eigenvalues are
/// returned in ascending order of real part.
pub fn eig_small(a: &CMatrix) -> Result<EigenResult> {
    if a.data.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let res = if a.is_hermitian(1e-12) { eig_hermitian(a) } else { eig_general(a)? };
    let scale = a.norm().max(f64::MIN_POSITIVE);
    if res.residual > RESIDUAL_TOL * scale && a.norm() > 0.0 {
        return Err(Error::NonConvergence { what: "eigen decomposition", residual: res.residual });
    }
    Ok(res)
}

fn finish(a: &CMatrix, mut values: Vec<C64>, mut vectors: CMatrix) -> EigenResult {
    let n = a.n;
    for j in 0..n {
        let nrm = (0..n).map(|i| vectors[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        // fix the phase so the largest component is real and positive
        let big = (0..n).max_by(|&p, &q| vectors[(p, j)].norm().total_cmp(&vectors[(q, j)].norm())).unwrap();
        let phase = if vectors[(big, j)].norm() > 0.0 {
            vectors[(big, j)].conj() / vectors[(big, j)].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            vectors[(i, j)] = vectors[(i, j)] * phase / nrm;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| values[p].re.total_cmp(&values[q].re).then(values[p].im.total_cmp(&values[q].im)));
    let sorted_values: Vec<C64> = order.iter().map(|&k| values[k]).collect();
    let mut sorted_vectors = CMatrix::zeros(n);
    for (jn, &jo) in order.iter().enumerate() {
        for i in 0..n {
            sorted_vectors[(i, jn)] = vectors[(i, jo)];
        }
    }
    values = sorted_values;
    let residual = (0..n)
        .map(|j| {
            let v = sorted_vectors.column(j);
            let av = a.mul_vec(&v);
            av.iter().zip(&v).map(|(x, y)| (x - values[j] * y).norm_sqr()).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    EigenResult { eigenvalues: values, eigenvectors: sorted_vectors, residual }
}

/// Cyclic complex Jacobi rotations for a Hermitian matrix.
pub fn eig_hermitian(a: &CMatrix) -> EigenResult {
    let n = a.n;
    let mut m = a.clone();
    // symmetrize away rounding-level defects
    for i in 0..n {
        m[(i, i)] = C64::new(m[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(n);
    let scale = m.norm();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag; // e^{i phi}
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to (p, q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                let upp = C64::new(c, 0.0);
                let upq = C64::new(s, 0.0);
                let uqp = -phase.conj() * s;
                let uqq = phase.conj() * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * upp + mkq * uqp;
                    m[(k, q)] = mkp * upq + mkq * uqq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = upp.conj() * mpk + uqp.conj() * mqk;
                    m[(q, k)] = upq.conj() * mpk + uqq.conj() * mqk;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * upp + vkq * uqp;
                    v[(k, q)] = vkp * upq + vkq * uqq;
                }
            }
        }
    }
    let values = (0..n).map(|i| C64::new(m[(i, i)].re, 0.0)).collect();
    finish(a, values, v)
}

/// `G^H [a; b] = [r; 0]` with `G^H = [[c, s], [-conj(s), c]]`, `c` real.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if r == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if a.norm() == 0.0 {
        return (0.0, C64::new(1.0, 0.0));
    }
    let c = a.norm() / r;
    let s = c * b.conj() / a.conj();
    (c, s)
}

fn rotate_rows(m: &mut CMatrix, k: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let x = m[(k, j)];
        let y = m[(k + 1, j)];
        m[(k, j)] = x * c + s * y;
        m[(k + 1, j)] = -s.conj() * x + y * c;
    }
}

fn rotate_cols(m: &mut CMatrix, k: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for i in rows {
        let x = m[(i, k)];
        let y = m[(i, k + 1)];
        m[(i, k)] = x * c + y * s.conj();
        m[(i, k + 1)] = -x * s + y * c;
    }
}

/// Householder reduction to upper Hessenberg form, `A = Q H Q^H`.
fn hessenberg(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.n;
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<C64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in &mut v {
            *z /= vnorm;
        }
        // H <- P H P with P = I - 2 v v^H acting on indices k+1..n
        for j in 0..n {
            let dotp: C64 = (0..v.len()).map(|i| v[i].conj() * h[(k + 1 + i, j)]).sum();
            for i in 0..v.len() {
                h[(k + 1 + i, j)] -= 2.0 * v[i] * dotp;
            }
        }
        for mat in [&mut h, &mut q] {
            for i in 0..n {
                let dotp: C64 = (0..v.len()).map(|j| mat[(i, k + 1 + j)] * v[j]).sum();
                for j in 0..v.len() {
                    mat[(i, k + 1 + j)] -= 2.0 * dotp * v[j].conj();
                }
            }
        }
    }
    (h, q)
}

/// Hessenberg reduction followed by single-shift complex QR iterations.
pub fn eig_general(a: &CMatrix) -> Result<EigenResult> {
    let n = a.n;
    let (mut h, mut z) = hessenberg(a);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let mut hi = n;
    let mut iter = 0usize;
    while hi > 1 {
        let top = hi - 1;
        // find the start of the unreduced block ending at `top`
        let mut lo = top;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            if sub <= f64::EPSILON * diag.max(1e-3 * scale) {
                h[(lo, lo - 1)] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == top {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 200 {
            let residual = h[(top, top - 1)].norm();
            return Err(Error::NonConvergence { what: "shifted QR", residual });
        }
        let mu = if iter % 11 == 0 {
            h[(top, top)] + C64::new(h[(top, top - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(h[(top - 1, top - 1)], h[(top - 1, top)], h[(top, top - 1)], h[(top, top)])
        };
        // rotations from the shifted active block
        let mut work = h.clone();
        for i in lo..=top {
            work[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(top - lo);
        for k in lo..top {
            let (c, s) = givens(work[(k, k)], work[(k + 1, k)]);
            rotate_rows(&mut work, k, c, s, lo..n);
            rots.push((k, c, s));
        }
        for &(k, c, s) in &rots {
            rotate_rows(&mut h, k, c, s, 0..n);
        }
        for &(k, c, s) in &rots {
            rotate_cols(&mut h, k, c, s, 0..n);
            rotate_cols(&mut z, k, c, s, 0..n);
        }
    }
    // eigenvectors of the triangular Schur factor by back substitution
    let tnorm = h.norm().max(f64::MIN_POSITIVE);
    let mut y = CMatrix::zeros(n);
    for k in 0..n {
        y[(k, k)] = C64::new(1.0, 0.0);
        for j in (0..k).rev() {
            let s: C64 = (j + 1..=k).map(|m| h[(j, m)] * y[(m, k)]).sum();
            let mut denom = h[(j, j)] - h[(k, k)];
            if denom.norm() < f64::EPSILON * tnorm {
                denom = C64::new(f64::EPSILON * tnorm, 0.0);
            }
            y[(j, k)] = -s / denom;
        }
    }
    let vectors = &z * &y;
    let values = (0..n).map(|i| h[(i, i)]).collect();
    Ok(finish(a, values, vectors))
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let m1 = (a + d) * 0.5 + disc;
    let m2 = (a + d) * 0.5 - disc;
    if (m1 - d).norm() < (m2 - d).norm() {
        m1
    } else {
        m2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let r = eig_small(&CMatrix::identity(6)).unwrap();
        assert!(r.eigenvalues.iter().all(|l| (l - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn diagonal_values() {
        let a = CMatrix::from_real(&[vec![-1.0, 0.0], vec![0.0, -2.0]]);
        let r = eig_small(&a).unwrap();
        assert!((r.eigenvalues[0] - c(-2.0, 0.0)).norm() < 1e-15);
        assert!((r.eigenvalues[1] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_by_two_matches_characteristic_polynomial() {
        let a = CMatrix::from_rows(&[vec![c(1.0, 0.5), c(-2.0, 1.0)], vec![c(0.3, 0.0), c(-0.7, 2.0)]]);
        let r = eig_small(&a).unwrap();
        let tr = a.trace();
        let det = a.det();
        let disc = (tr * tr - 4.0 * det).sqrt();
        let mut roots = [(tr + disc) / 2.0, (tr - disc) / 2.0];
        roots.sort_by(|p, q| p.re.total_cmp(&q.re));
        for (l, root) in r.eigenvalues.iter().zip(roots) {
            assert!((l - root).norm() < 1e-12, "{l} vs {root}");
        }
    }

    #[test]
    fn general_path_handles_non_normal() {
        let a = CMatrix::from_real(&[
            vec![1.0, 100.0, 0.0, 3.0],
            vec![0.0, 2.0, 50.0, 0.0],
            vec![0.01, 0.0, 3.0, 7.0],
            vec![0.0, 0.0, 0.0, 4.0],
        ]);
        let r = eig_general(&a).unwrap();
        assert!(r.residual < 1e-10 * a.norm());
        let sum: C64 = r.eigenvalues.iter().sum();
        assert!((sum - a.trace()).norm() < 1e-10 * a.norm());
    }

    #[test]
    fn rotation_matrix_has_complex_pair() {
        let a = CMatrix::from_real(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        let r = eig_small(&a).unwrap();
        let mut ims: Vec<f64> = r.eigenvalues.iter().map(|l| l.im).collect();
        ims.sort_by(f64::total_cmp);
        assert!((ims[0] + 1.0).abs() < 1e-14 && (ims[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        let r = eig_small(&CMatrix::zeros(4)).unwrap();
        assert!(r.eigenvalues.iter().all(|l| l.norm() == 0.0));
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = CMatrix::zeros(2);
        a[(0, 1)] = c(f64::NAN, 0.0);
        assert!(eig_small(&a).is_err());
    }
}
