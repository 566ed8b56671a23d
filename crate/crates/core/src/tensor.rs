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

//! Row-major dense complex tensors.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ZERO};
use crate::rng::{uniform_complex, Rng};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() {
        return Err(Error::Shape("shape must be non-empty".into()));
    }
    if shape.iter().any(|&d| d == 0) {
        return Err(Error::Shape(format!("zero dimension in {shape:?}")));
    }
    Ok(shape.iter().product())
}

pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        let n = check_shape(&shape)?;
        if n != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} needs {n} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = check_shape(shape).expect("invalid shape");
        Self { shape: shape.to_vec(), data: vec![ZERO; n] }
    }

    pub fn scalar(z: C64) -> Self {
        Self { shape: vec![1], data: vec![z] }
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let n = check_shape(shape).expect("invalid shape");
        let mut idx = vec![0; shape.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            for k in (0..shape.len()).rev() {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Self { shape: shape.to_vec(), data }
    }

    /// Entries `A + iB`, `A, B` uniform on `[-1, 1]`.
    pub fn random(shape: &[usize], rng: &mut Rng) -> Self {
        let n = check_shape(shape).expect("invalid shape");
        Self { shape: shape.to_vec(), data: (0..n).map(|_| uniform_complex(rng)).collect() }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len());
        let mut off = 0;
        for (k, (&i, &d)) in idx.iter().zip(&self.shape).enumerate() {
            assert!(i < d, "index {i} out of range for axis {k}");
            off = off * d + i;
        }
        off
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], z: C64) {
        let o = self.offset(idx);
        self.data[o] = z;
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        Self::new(shape.to_vec(), self.data.clone())
    }

    pub fn permute(&self, perm: &[usize]) -> Self {
        let r = self.rank();
        assert_eq!(perm.len(), r, "permutation length");
        let mut seen = vec![false; r];
        for &p in perm {
            assert!(p < r && !seen[p], "invalid permutation {perm:?}");
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return self.clone();
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let old_strides = strides(&self.shape);
        let src_strides: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let n = self.data.len();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; r];
        let mut off = 0usize;
        for _ in 0..n {
            data.push(self.data[off]);
            for k in (0..r).rev() {
                idx[k] += 1;
                off += src_strides[k];
                if idx[k] < new_shape[k] {
                    break;
                }
                off -= src_strides[k] * new_shape[k];
                idx[k] = 0;
            }
        }
        Self { shape: new_shape, data }
    }

    pub fn conj(&self) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|x| x * z).collect() }
    }

    pub fn scale_in_place(&mut self, z: C64) {
        for x in &mut self.data {
            *x *= z;
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Groups the first `row_legs` axes into rows and the rest into columns.
    pub fn to_matrix(&self, row_legs: usize) -> CMatrix {
        let rows: usize = self.shape[..row_legs].iter().product();
        let cols = self.data.len() / rows;
        linalg::from_rows(rows, cols, &self.data)
    }

    pub fn from_matrix(m: &CMatrix, shape: &[usize]) -> Result<Self> {
        Self::new(shape.to_vec(), linalg::to_rows(m))
    }

    /// Replaces axis `leg` by `m` acting on it: `T'[.., j, ..] = Σ_i m[j, i] T[.., i, ..]`.
    pub fn apply_to_leg(&self, leg: usize, m: &CMatrix) -> Self {
        let d = self.shape[leg];
        assert_eq!(m.ncols(), d, "operator width must match axis {leg}");
        let nd = m.nrows();
        let pre: usize = self.shape[..leg].iter().product();
        let post: usize = self.shape[leg + 1..].iter().product();
        let mut shape = self.shape.clone();
        shape[leg] = nd;
        let mut data = vec![ZERO; pre * nd * post];
        for a in 0..pre {
            for j in 0..nd {
                let dst = &mut data[(a * nd + j) * post..(a * nd + j + 1) * post];
                for i in 0..d {
                    let c = m[(j, i)];
                    if c == ZERO {
                        continue;
                    }
                    let src = &self.data[(a * d + i) * post..(a * d + i + 1) * post];
                    for (o, s) in dst.iter_mut().zip(src) {
                        *o += c * s;
                    }
                }
            }
        }
        Self { shape, data }
    }

    /// `G[a, b] = Σ self[.., a, ..] conj(other[.., b, ..])`, summing every axis but `leg`.
    pub fn gram_except(&self, other: &Self, leg: usize) -> CMatrix {
        assert_eq!(self.rank(), other.rank());
        let mut perm: Vec<usize> = vec![leg];
        perm.extend((0..self.rank()).filter(|&k| k != leg));
        let x = self.permute(&perm);
        let y = other.permute(&perm);
        let (da, db) = (self.shape[leg], other.shape[leg]);
        let rest = x.len() / da;
        assert_eq!(rest, y.len() / db, "non-contracted axes must agree");
        let mut g = linalg::zeros(da, db);
        for a in 0..da {
            let xa = &x.data[a * rest..(a + 1) * rest];
            for b in 0..db {
                let yb = &y.data[b * rest..(b + 1) * rest];
                g[(a, b)] = xa.iter().zip(yb).map(|(p, q)| p * q.conj()).sum();
            }
        }
        g
    }

    /// `Σ self · conj(other)` over all entries.
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.len(), other.len());
        other.data.iter().zip(&self.data).map(|(b, a)| b.conj() * a).sum()
    }
}

/// Contracts `a` and `b` over the index pairs; the result carries the
/// unpaired axes of `a` followed by those of `b`. A full contraction returns
/// shape `[1]`.
pub fn contract(a: &DenseTensor, b: &DenseTensor, pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(i, j) in pairs {
        if i >= a.rank() || j >= b.rank() {
            return Err(Error::Shape(format!("pair ({i}, {j}) out of range")));
        }
        if used_a[i] {
            return Err(Error::DuplicateIndex { index: i });
        }
        if used_b[j] {
            return Err(Error::DuplicateIndex { index: j });
        }
        used_a[i] = true;
        used_b[j] = true;
        if a.shape[i] != b.shape[j] {
            return Err(Error::DimensionMismatch(format!(
                "axis {i} has dim {} but axis {j} has dim {}",
                a.shape[i], b.shape[j]
            )));
        }
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|&k| !used_a[k]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&k| !used_b[k]).collect();
    let mut pa = free_a.clone();
    pa.extend(pairs.iter().map(|p| p.0));
    let mut pb: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    pb.extend(free_b.iter().cloned());
    let ap = a.permute(&pa);
    let bp = b.permute(&pb);
    let m: usize = free_a.iter().map(|&k| a.shape[k]).product();
    let n: usize = free_b.iter().map(|&k| b.shape[k]).product();
    let k: usize = pairs.iter().map(|p| a.shape[p.0]).product();
    let data = linalg::gemm_rows(&ap.data, &bp.data, m, k, n);
    let mut shape: Vec<usize> = free_a.iter().map(|&k| a.shape[k]).collect();
    shape.extend(free_b.iter().map(|&k| b.shape[k]));
    if shape.is_empty() {
        shape.push(1);
    }
    DenseTensor::new(shape, data)
}
