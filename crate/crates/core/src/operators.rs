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

//! Site-factorized operators shared by every backbone.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};

/// `coeff · ⊗_j factors[j]`; `None` stands for the identity.
#[derive(Clone, Debug)]
pub struct ProductOperator {
    pub coeff: C64,
    pub factors: Vec<Option<CMatrix>>,
}

impl ProductOperator {
    pub fn identity(n_sites: usize) -> Self {
        Self { coeff: ONE, factors: vec![None; n_sites] }
    }

    pub fn n_sites(&self) -> usize {
        self.factors.len()
    }

    pub fn with_factor(mut self, site: usize, m: CMatrix) -> Self {
        self.factors[site] = Some(m);
        self
    }

    pub fn with_coeff(mut self, c: C64) -> Self {
        self.coeff = c;
        self
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.factors.len()).filter(|&j| self.factors[j].is_some()).collect()
    }

    pub fn factor(&self, site: usize, q: usize) -> CMatrix {
        self.factors[site].clone().unwrap_or_else(|| linalg::identity(q))
    }

    /// Site-wise product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n_sites(), other.n_sites());
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| match (a, b) {
                (None, None) => None,
                (Some(a), None) => Some(a.clone()),
                (None, Some(b)) => Some(b.clone()),
                (Some(a), Some(b)) => Some(a * b),
            })
            .collect();
        Self { coeff: self.coeff * other.coeff, factors }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            coeff: self.coeff.conj(),
            factors: self.factors.iter().map(|f| f.as_ref().map(linalg::adjoint)).collect(),
        }
    }

    pub fn check_dims(&self, q: usize) -> Result<()> {
        for (j, f) in self.factors.iter().enumerate() {
            if let Some(m) = f {
                if m.nrows() != q || m.ncols() != q {
                    return Err(Error::DimensionMismatch(format!(
                        "factor at site {j} is {}x{}, local dimension is {q}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A dense operator on an ordered set of sites; the first site is the most
/// significant digit of the row/column index.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    pub sites: Vec<usize>,
    pub matrix: CMatrix,
}

impl LocalOperator {
    pub fn new(sites: Vec<usize>, matrix: CMatrix, q: usize) -> Result<Self> {
        let dim = q.pow(sites.len() as u32);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "operator on {} sites must be {dim}x{dim}",
                sites.len()
            )));
        }
        let mut s = sites.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != sites.len() {
            return Err(Error::InvalidArgument("repeated site in support".into()));
        }
        Ok(Self { sites, matrix })
    }

    /// Expansion into elementary products `|a⟩⟨b|` on each support site.
    pub fn to_product_operators(&self, n_sites: usize, q: usize) -> Vec<ProductOperator> {
        let k = self.sites.len();
        let dim = self.matrix.nrows();
        let mut out = Vec::new();
        for row in 0..dim {
            for col in 0..dim {
                let c = self.matrix[(row, col)];
                if c == ZERO {
                    continue;
                }
                let mut op = ProductOperator::identity(n_sites).with_coeff(c);
                for (p, &site) in self.sites.iter().enumerate() {
                    let shift = q.pow((k - 1 - p) as u32);
                    let a = (row / shift) % q;
                    let b = (col / shift) % q;
                    let mut m = linalg::zeros(q, q);
                    m[(a, b)] = ONE;
                    op.factors[site] = Some(m);
                }
                out.push(op);
            }
        }
        out
    }
}

/// `|a⟩⟨b|` on a `q`-level site.
pub fn elementary(q: usize, a: usize, b: usize) -> CMatrix {
    let mut m = linalg::zeros(q, q);
    m[(a, b)] = ONE;
    m
}

/// `diag(e^{iθ_t})`.
pub fn phase_diagonal(angles: &[f64]) -> CMatrix {
    let d: Vec<C64> = angles.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    linalg::diag(&d)
}

pub fn is_diagonal(m: &CMatrix) -> bool {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[(i, j)] != ZERO {
                return false;
            }
        }
    }
    true
}
