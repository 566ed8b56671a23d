// Copyright 2026 The ragetn Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License.You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

//! Dense matrix kernels: QR, truncated SVD, Hermitian and generalized
//! Hermitian eigenproblems. Decompositions are delegated to `faer`.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = Mat<C64>;
pub type RMatrix = Mat<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Default relative cutoff for metric eigenvalues.
pub const METRIC_CUTOFF: f64 = 1e-12;

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn from_rows(rows: usize, cols: usize, data: &[C64]) -> CMatrix {
    assert_eq!(data.len(), rows * cols);
    Mat::from_fn(rows, cols, |i, j| data[i * cols + j])
}

pub fn to_rows(m: &CMatrix) -> Vec<C64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn diag(entries: &[C64]) -> CMatrix {
    let n = entries.len();
    Mat::from_fn(n, n, |i, j| if i == j { entries[i] } else { ZERO })
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.adjoint().to_owned()
}

pub fn transpose(m: &CMatrix) -> CMatrix {
    m.transpose().to_owned()
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b
}

pub fn scale(m: &CMatrix, z: C64) -> CMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * z)
}

pub fn add(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a + b
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * br, a.ncols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Frobenius norm of `a - b`.
pub fn distance(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += (a[(i, j)] - b[(i, j)]).norm_sqr();
        }
    }
    s.sqrt()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// `v† m v`.
pub fn quadratic_form(m: &CMatrix, v: &[C64]) -> C64 {
    let n = v.len();
    let mut acc = ZERO;
    for i in 0..n {
        let mut row = ZERO;
        for j in 0..n {
            row += m[(i, j)] * v[j];
        }
        acc += v[i].conj() * row;
    }
    acc
}

pub fn mat_vec(m: &CMatrix, v: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// Row-major product of an `m × k` and a `k × n` block.
pub fn gemm_rows(a: &[C64], b: &[C64], m: usize, k: usize, n: usize) -> Vec<C64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    if m * k * n > 32 * 32 * 32 {
        let am = from_rows(m, k, a);
        let bm = from_rows(k, n, b);
        return to_rows(&(&am * &bm));
    }
    let mut out = vec![ZERO; m * n];
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == ZERO {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
    out
}

/// Thin QR with the diagonal of `r` real and nonnegative.
///
/// For an `m × n` input, `q` is `m × k` and `r` is `k × n` with `k = min(m, n)`.
pub fn qr_reduce(m: &CMatrix) -> (CMatrix, CMatrix) {
    let (rows, cols) = (m.nrows(), m.ncols());
    assert!(rows >= 1 && cols >= 1);
    let k = rows.min(cols);
    let qr = m.qr();
    let mut q = qr.compute_thin_Q();
    let r_full = qr.thin_R();
    let mut r = Mat::from_fn(k, cols, |i, j| if j >= i { r_full[(i, j)] } else { ZERO });
    for i in 0..k {
        let d = r[(i, i)];
        let a = d.norm();
        let ph = if a > 0.0 { d / a } else { ONE };
        for j in 0..cols {
            r[(i, j)] *= ph.conj();
        }
        for row in 0..rows {
            q[(row, i)] *= ph;
        }
    }
    (q, r)
}

#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    /// `m × k`, orthonormal columns.
    pub u: CMatrix,
    /// Descending.
    pub s: Vec<f64>,
    /// `k × n`, orthonormal rows.
    pub v: CMatrix,
    /// Sum of squared dropped singular values.
    pub discarded_weight: f64,
}

impl TruncatedSvd {
    pub fn reconstruct(&self) -> CMatrix {
        let us = Mat::from_fn(self.u.nrows(), self.s.len(), |i, j| self.u[(i, j)] * self.s[j]);
        &us * &self.v
    }
}

pub fn truncated_svd(m: &CMatrix, max_rank: usize) -> Result<TruncatedSvd> {
    if max_rank == 0 {
        return Err(Error::InvalidArgument("max_rank must be at least 1".into()));
    }
    let svd = m
        .thin_svd()
        .map_err(|e| Error::Eigensolver(format!("svd: {e:?}")))?;
    let u = svd.U();
    let v = svd.V();
    let sv = svd.S().column_vector();
    let full: Vec<f64> = (0..sv.nrows()).map(|i| sv[i].re.max(0.0)).collect();
    let k = max_rank.min(full.len());
    let discarded_weight = full[k..].iter().map(|s| s * s).sum();
    Ok(TruncatedSvd {
        u: Mat::from_fn(m.nrows(), k, |i, j| u[(i, j)]),
        s: full[..k].to_vec(),
        v: Mat::from_fn(k, m.ncols(), |i, j| v[(j, i)].conj()),
        discarded_weight,
    })
}

pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(truncated_svd(m, m.nrows().min(m.ncols()).max(1))?.s)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let h = hermitian_part(m);
    let e = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = e.S().column_vector();
    let vals = (0..s.nrows()).map(|i| s[i].re).collect();
    Ok((vals, e.U().to_owned()))
}

pub fn eigvalsh(m: &CMatrix) -> Result<Vec<f64>> {
    let h = hermitian_part(m);
    let v = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    Ok(v)
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn eigh_real(m: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    let n = m.nrows();
    let h = Mat::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let e = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = e.S().column_vector();
    Ok(((0..n).map(|i| s[i]).collect(), e.U().to_owned()))
}

pub fn eigvalsh_real(m: &RMatrix) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Multiplies `v` by a unit phase so that its largest-magnitude entry is
/// real and nonnegative.
pub fn fix_phase(v: &mut [C64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = a;
        }
    }
    if best_abs > 0.0 {
        let ph = v[best].conj() / best_abs;
        for z in v.iter_mut() {
            *z *= ph;
        }
        v[best] = C64::new(v[best].re, 0.0);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditioningReport {
    pub effective_rank: usize,
    pub smallest_retained: f64,
    pub largest: f64,
}

#[derive(Clone, Debug)]
pub struct GeneralizedEigSolution {
    pub eigenvalue: f64,
    pub eigenvector: Vec<C64>,
    pub conditioning: ConditioningReport,
}

/// Minimal solution of `h x = λ metric x` on the subspace where the metric
/// eigenvalues exceed `cutoff` times the largest one.
pub fn solve_generalized_eig_min(
    h: &CMatrix,
    metric: &CMatrix,
    cutoff: f64,
) -> Result<GeneralizedEigSolution> {
    let n = h.nrows();
    if h.ncols() != n || metric.nrows() != n || metric.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "h is {}x{}, metric is {}x{}",
            h.nrows(),
            h.ncols(),
            metric.nrows(),
            metric.ncols()
        )));
    }
    if !(cutoff > 0.0) {
        return Err(Error::InvalidArgument("cutoff must be positive".into()));
    }
    let (lam, u) = eigh(metric)?;
    let largest = lam.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(largest > f64::MIN_POSITIVE) || !largest.is_finite() {
        return Err(Error::DegenerateMetric);
    }
    let keep: Vec<usize> = (0..n).filter(|&i| lam[i] > cutoff * largest).collect();
    let k = keep.len();
    let smallest_retained = keep.iter().map(|&i| lam[i]).fold(f64::INFINITY, f64::min);
    let p = Mat::from_fn(n, k, |i, j| u[(i, keep[j])] / lam[keep[j]].sqrt());
    let hp = &(p.adjoint() * h) * &p;
    let (mu, y) = eigh(&hp)?;
    let yv: Vec<C64> = (0..k).map(|i| y[(i, 0)]).collect();
    let mut x = mat_vec(&p, &yv);
    fix_phase(&mut x);
    Ok(GeneralizedEigSolution {
        eigenvalue: mu[0],
        eigenvector: x,
        conditioning: ConditioningReport { effective_rank: k, smallest_retained, largest },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{seeded, uniform_complex};

    fn random(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = seeded(seed);
        Mat::from_fn(rows, cols, |_, _| uniform_complex(&mut rng))
    }

    #[test]
    fn qr_identity_and_permutation() {
        let (q, r) = qr_reduce(&identity(3));
        assert!(distance(&q, &identity(3)) < 1e-14);
        assert!(distance(&r, &identity(3)) < 1e-14);
        let p = from_rows(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let (q, r) = qr_reduce(&p);
        assert!(distance(&(&q * &r), &p) < 1e-12);
        for i in 0..2 {
            assert!(r[(i, i)].re >= 0.0 && r[(i, i)].im == 0.0);
        }
    }

    #[test]
    fn qr_wide_random() {
        let m = random(4, 8, 3);
        let (q, r) = qr_reduce(&m);
        assert_eq!((q.nrows(), q.ncols(), r.nrows(), r.ncols()), (4, 4, 4, 8));
        assert!(distance(&(&q * &r), &m) < 1e-12);
        assert!(distance(&(q.adjoint() * &q), &identity(4)) < 1e-12);
        let mt = transpose(&m);
        let (q, r) = qr_reduce(&mt);
        assert!(distance(&(&q * &r), &mt) < 1e-12);
        assert!(distance(&(q.adjoint() * &q), &identity(4)) < 1e-12);
    }

    #[test]
    fn svd_examples() {
        let a = from_rows(2, 1, &[ONE, C64::new(2.0, 0.0)]);
        let b = from_rows(1, 3, &[ONE, I, C64::new(-1.0, 0.0)]);
        let m = &a * &b;
        let t = truncated_svd(&m, 1).unwrap();
        assert!(distance(&t.reconstruct(), &m) < 1e-12);
        assert!(t.discarded_weight < 1e-24);

        let d = diag(&[C64::new(3.0, 0.0), C64::new(2.0, 0.0), ONE]);
        let t = truncated_svd(&d, 2).unwrap();
        assert!((t.discarded_weight - 1.0).abs() < 1e-12);
        assert!((t.s[0] - 3.0).abs() < 1e-12 && (t.s[1] - 2.0).abs() < 1e-12);

        let m = random(6, 6, 9);
        let t = truncated_svd(&m, 6).unwrap();
        assert!(distance(&t.reconstruct(), &m) < 1e-12);
        assert!(t.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn generalized_trivial_cases() {
        let h = diag(&[C64::new(2.0, 0.0), ONE]);
        let s = solve_generalized_eig_min(&h, &identity(2), METRIC_CUTOFF).unwrap();
        assert!((s.eigenvalue - 1.0).abs() < 1e-14);
        assert!((s.eigenvector[1] - ONE).norm() < 1e-14 && s.eigenvector[0].norm() < 1e-14);

        let h = diag(&[ONE, C64::new(5.0, 0.0)]);
        let m = diag(&[ONE, ZERO]);
        let s = solve_generalized_eig_min(&h, &m, METRIC_CUTOFF).unwrap();
        assert!((s.eigenvalue - 1.0).abs() < 1e-14);
        assert_eq!(s.conditioning.effective_rank, 1);

        let err = solve_generalized_eig_min(&h, &zeros(2, 2), METRIC_CUTOFF).unwrap_err();
        assert_eq!(err, Error::DegenerateMetric);
    }

    #[test]
    fn generalized_rayleigh_sampling() {
        let a = random(8, 8, 11);
        let h = hermitian_part(&a);
        let b = random(8, 8, 12);
        let metric = &(b.adjoint() * &b) + &identity(8);
        let s = solve_generalized_eig_min(&h, &metric, METRIC_CUTOFF).unwrap();
        let x = &s.eigenvector;
        let rq = quadratic_form(&h, x).re / quadratic_form(&metric, x).re;
        assert!((rq - s.eigenvalue).abs() < 1e-10);
        assert!((quadratic_form(&metric, x).re - 1.0).abs() < 1e-10);
        let mut rng = seeded(13);
        for _ in 0..1000 {
            let v: Vec<C64> = (0..8).map(|_| uniform_complex(&mut rng)).collect();
            let q = quadratic_form(&h, &v).re / quadratic_form(&metric, &v).re;
            assert!(q >= s.eigenvalue - 1e-12);
        }
        let big = x.iter().cloned().fold(0.0f64, |m, z| m.max(z.norm()));
        assert!(x.iter().any(|z| (z.norm() - big).abs() < 1e-15 && z.im == 0.0 && z.re >= 0.0));
    }

    #[test]
    fn generalized_identity_matches_eigh() {
        let h = hermitian_part(&random(7, 7, 21));
        let s = solve_generalized_eig_min(&h, &identity(7), METRIC_CUTOFF).unwrap();
        let (vals, vecs) = eigh(&h).unwrap();
        assert!((s.eigenvalue - vals[0]).abs() < 1e-10);
        let mut v: Vec<C64> = (0..7).map(|i| vecs[(i, 0)]).collect();
        fix_phase(&mut v);
        let d: f64 = v.iter().zip(&s.eigenvector).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(d.sqrt() < 1e-10);
    }
}
