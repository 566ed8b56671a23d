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

//! Dense state-vector ground truth.
//!
//! Site 0 is the most significant digit of the amplitude index.

use crate::error::{Error, Result};
use crate::hamiltonians::HamiltonianSum;
use crate::linalg::{self, CMatrix, RMatrix, C64, ONE, ZERO};
use crate::operators::ProductOperator;
use crate::wgs::{AdjacencyPhases, LocalRotations};

/// Largest Hilbert-space dimension the oracle accepts.
pub const MAX_DIM: usize = 1 << 14;

pub fn checked_dim(n_sites: usize, q: usize) -> Result<usize> {
    let mut d: usize = 1;
    for _ in 0..n_sites {
        d = d.checked_mul(q).filter(|&d| d <= MAX_DIM).ok_or_else(|| {
            Error::TooLarge(format!("{q}^{n_sites} exceeds the oracle limit {MAX_DIM}"))
        })?;
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    q: usize,
    amps: Vec<C64>,
}

/// Dense expansion of a network state.
pub trait Expand {
    fn expand(&self) -> Result<StateVector>;
}

pub fn expand<S: Expand + ?Sized>(state: &S) -> Result<StateVector> {
    state.expand()
}

impl StateVector {
    pub fn new(n_sites: usize, q: usize, amps: Vec<C64>) -> Result<Self> {
        let d = checked_dim(n_sites, q)?;
        if amps.len() != d {
            return Err(Error::Shape(format!("{} amplitudes for dimension {d}", amps.len())));
        }
        Ok(Self { n_sites, q, amps })
    }

    pub fn basis(n_sites: usize, q: usize, index: usize) -> Result<Self> {
        let d = checked_dim(n_sites, q)?;
        let mut amps = vec![ZERO; d];
        amps[index] = ONE;
        Ok(Self { n_sites, q, amps })
    }

    /// `⊗_j v_j`.
    pub fn product(locals: &[Vec<C64>]) -> Result<Self> {
        let q = locals.first().map_or(2, |v| v.len());
        checked_dim(locals.len(), q)?;
        let mut amps = vec![ONE];
        for v in locals {
            if v.len() != q {
                return Err(Error::DimensionMismatch("local vectors differ in length".into()));
            }
            amps = amps.iter().flat_map(|&a| v.iter().map(move |&b| a * b)).collect();
        }
        Ok(Self { n_sites: locals.len(), q, amps })
    }

    pub fn random(n_sites: usize, q: usize, rng: &mut crate::rng::Rng) -> Result<Self> {
        let d = checked_dim(n_sites, q)?;
        let amps = (0..d).map(|_| crate::rng::uniform_complex(rng)).collect();
        Ok(Self { n_sites, q, amps }.normalized())
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            for a in &mut self.amps {
                *a /= n;
            }
        }
        self
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn digits(&self, index: usize) -> Vec<usize> {
        index_digits(index, self.n_sites, self.q)
    }

    /// Applies a dense operator on the ordered `sites`, first site most significant.
    pub fn apply_local(&self, m: &CMatrix, sites: &[usize]) -> Result<Self> {
        let k = sites.len();
        let sub = self.q.pow(k as u32);
        if m.nrows() != sub || m.ncols() != sub {
            return Err(Error::DimensionMismatch(format!("operator must be {sub}x{sub}")));
        }
        if sites.iter().any(|&s| s >= self.n_sites) {
            return Err(Error::InvalidArgument("site out of range".into()));
        }
        let weights: Vec<usize> = sites.iter().map(|&s| self.q.pow((self.n_sites - 1 - s) as u32)).collect();
        let mut out = vec![ZERO; self.amps.len()];
        for (idx, &a) in self.amps.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let mut col = 0;
            let mut base = idx;
            for &w in &weights {
                let d = (idx / w) % self.q;
                col = col * self.q + d;
                base -= d * w;
            }
            for row in 0..sub {
                let v = m[(row, col)];
                if v == ZERO {
                    continue;
                }
                let mut target = base;
                let mut r = row;
                for &w in weights.iter().rev() {
                    target += (r % self.q) * w;
                    r /= self.q;
                }
                out[target] += v * a;
            }
        }
        Ok(Self { n_sites: self.n_sites, q: self.q, amps: out })
    }

    pub fn apply_product(&self, op: &ProductOperator) -> Result<Self> {
        if op.n_sites() != self.n_sites {
            return Err(Error::DimensionMismatch("operator width".into()));
        }
        op.check_dims(self.q)?;
        let mut s = self.clone();
        for (j, f) in op.factors.iter().enumerate() {
            if let Some(m) = f {
                s = s.apply_local(m, &[j])?;
            }
        }
        for a in &mut s.amps {
            *a *= op.coeff;
        }
        Ok(s)
    }

    /// Multiplies each amplitude by `e^{i Σ_{a<b} φ_ab[s_a, s_b]}`.
    pub fn apply_phases(&self, phases: &AdjacencyPhases) -> Result<Self> {
        if phases.n_sites() != self.n_sites || phases.local_dim() != self.q {
            return Err(Error::DimensionMismatch("phase layer does not match the state".into()));
        }
        let mut s = self.clone();
        for (idx, a) in s.amps.iter_mut().enumerate() {
            let d = index_digits(idx, self.n_sites, self.q);
            *a *= C64::from_polar(1.0, phases.total_phase(&d));
        }
        Ok(s)
    }

    pub fn apply_rotations(&self, rot: &LocalRotations) -> Result<Self> {
        if rot.n_sites() != self.n_sites {
            return Err(Error::DimensionMismatch("rotation layer does not match the state".into()));
        }
        let mut s = self.clone();
        for j in 0..self.n_sites {
            if !rot.is_identity_at(j) {
                if self.q != 2 {
                    return Err(Error::InvalidArgument("local rotations need qubit sites".into()));
                }
                s = s.apply_local(&rot.matrix(j), &[j])?;
            }
        }
        Ok(s)
    }
}

pub fn index_digits(mut index: usize, n_sites: usize, q: usize) -> Vec<usize> {
    let mut d = vec![0; n_sites];
    for j in (0..n_sites).rev() {
        d[j] = index % q;
        index /= q;
    }
    d
}

/// `⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn product_expectation(state: &StateVector, op: &ProductOperator) -> Result<C64> {
    let n = state.norm_sqr();
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(state.inner(&state.apply_product(op)?) / n)
}

fn check_qubits(state: &StateVector, h: &HamiltonianSum) -> Result<()> {
    if state.q != 2 {
        return Err(Error::InvalidArgument("Pauli sums act on qubits".into()));
    }
    if h.n_sites() != state.n_sites {
        return Err(Error::DimensionMismatch(format!(
            "operator on {} sites, state on {}",
            h.n_sites(),
            state.n_sites
        )));
    }
    Ok(())
}

/// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩`, complex.
pub fn exact_expectation_complex(state: &StateVector, h: &HamiltonianSum) -> Result<C64> {
    check_qubits(state, h)?;
    let n = state.norm_sqr();
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mut acc = ZERO;
    for t in h.terms() {
        for (idx, &a) in state.amps.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            let (out, ph) = t.apply_to_basis(idx);
            acc += state.amps[out].conj() * ph * a;
        }
    }
    Ok(acc / n)
}

pub fn exact_expectation(state: &StateVector, h: &HamiltonianSum) -> Result<f64> {
    let e = exact_expectation_complex(state, h)?;
    if e.im.abs() > 1e-8 {
        return Err(Error::NonHermitian(e.im));
    }
    Ok(e.re)
}

pub fn dense_hamiltonian(h: &HamiltonianSum) -> Result<CMatrix> {
    let d = checked_dim(h.n_sites(), 2)?;
    let mut m = linalg::zeros(d, d);
    for t in h.terms() {
        for idx in 0..d {
            let (out, ph) = t.apply_to_basis(idx);
            m[(out, idx)] += ph;
        }
    }
    Ok(m)
}

fn dense_hamiltonian_real(h: &HamiltonianSum) -> Result<RMatrix> {
    let d = checked_dim(h.n_sites(), 2)?;
    let mut m = RMatrix::zeros(d, d);
    for t in h.terms() {
        for idx in 0..d {
            let (out, ph) = t.apply_to_basis(idx);
            m[(out, idx)] += ph.re;
        }
    }
    Ok(m)
}

fn is_real(h: &HamiltonianSum) -> bool {
    h.terms().iter().all(|t| t.is_real())
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub first_excited: f64,
    pub state: StateVector,
    /// Gap below `1e-10 ×` spectral range.
    pub degenerate: bool,
}

fn degenerate(vals: &[f64]) -> bool {
    let range = vals.last().unwrap() - vals[0];
    vals.len() > 1 && vals[1] - vals[0] < 1e-10 * range.max(f64::MIN_POSITIVE)
}

fn check_hermitian(h: &HamiltonianSum) -> Result<()> {
    if !h.is_hermitian() {
        let im = h.terms().iter().map(|t| t.coeff().im.abs()).fold(0.0, f64::max);
        return Err(Error::NonHermitian(im));
    }
    Ok(())
}

pub fn exact_ground_state(h: &HamiltonianSum) -> Result<GroundState> {
    check_hermitian(h)?;
    let (vals, vec): (Vec<f64>, Vec<C64>) = if is_real(h) {
        let (vals, u) = linalg::eigh_real(&dense_hamiltonian_real(h)?)?;
        let v = (0..u.nrows()).map(|i| C64::new(u[(i, 0)], 0.0)).collect();
        (vals, v)
    } else {
        let (vals, u) = linalg::eigh(&dense_hamiltonian(h)?)?;
        let v = (0..u.nrows()).map(|i| u[(i, 0)]).collect();
        (vals, v)
    };
    let mut v = vec;
    linalg::fix_phase(&mut v);
    Ok(GroundState {
        energy: vals[0],
        first_excited: vals.get(1).copied().unwrap_or(vals[0]),
        degenerate: degenerate(&vals),
        state: StateVector::new(h.n_sites(), 2, v)?,
    })
}

/// Ascending spectrum without eigenvectors.
pub fn exact_spectrum(h: &HamiltonianSum) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    if is_real(h) {
        linalg::eigvalsh_real(&dense_hamiltonian_real(h)?)
    } else {
        linalg::eigvalsh(&dense_hamiltonian(h)?)
    }
}

/// `e^{-iHt}` by spectral decomposition.
pub fn evolution_operator(h: &HamiltonianSum, t: f64) -> Result<CMatrix> {
    check_hermitian(h)?;
    let (vals, u) = linalg::eigh(&dense_hamiltonian(h)?)?;
    let d: Vec<C64> = vals.iter().map(|&l| C64::from_polar(1.0, -l * t)).collect();
    Ok(&(&u * &linalg::diag(&d)) * &linalg::adjoint(&u))
}

pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.amps.len() != b.amps.len() {
        return Err(Error::DimensionMismatch("state dimensions differ".into()));
    }
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok((a.inner(b).norm_sqr() / (na * nb)).clamp(0.0, 1.0))
}

fn split_matrix(state: &StateVector, left: &[usize]) -> Result<CMatrix> {
    let n = state.n_sites;
    let mut seen = vec![false; n];
    for &s in left {
        if s >= n || seen[s] {
            return Err(Error::InvalidArgument(format!("invalid site {s} in subset")));
        }
        seen[s] = true;
    }
    let right: Vec<usize> = (0..n).filter(|&s| !seen[s]).collect();
    let q = state.q;
    let dl = q.pow(left.len() as u32);
    let dr = q.pow(right.len() as u32);
    let mut m = linalg::zeros(dl, dr);
    for (idx, &a) in state.amps.iter().enumerate() {
        let d = index_digits(idx, n, q);
        let r = left.iter().fold(0, |acc, &s| acc * q + d[s]);
        let c = right.iter().fold(0, |acc, &s| acc * q + d[s]);
        m[(r, c)] = a;
    }
    Ok(m)
}

/// Squared Schmidt coefficients across `left_sites | rest`, normalized to sum 1, descending.
pub fn schmidt_spectrum(state: &StateVector, left_sites: &[usize]) -> Result<Vec<f64>> {
    if left_sites.is_empty() || left_sites.len() >= state.n_sites {
        return Err(Error::InvalidArgument("subset must be nonempty and proper".into()));
    }
    let m = split_matrix(state, left_sites)?;
    let n = state.norm_sqr();
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let s = linalg::singular_values(&m)?;
    Ok(s.iter().map(|x| x * x / n).collect())
}

/// Normalized reduced density matrix on `sites`, ordered as given.
pub fn partial_trace(state: &StateVector, sites: &[usize]) -> Result<CMatrix> {
    let m = split_matrix(state, sites)?;
    let n = state.norm_sqr();
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(linalg::scale(&(&m * &linalg::adjoint(&m)), C64::new(1.0 / n, 0.0)))
}
