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

//! Projected entangled pair states on open rectangular grids.
//!
//! Site `(x, y)` is `y·lx + x`. Every tensor carries legs `[l, r, u, d, s]`;
//! legs on the grid boundary have dimension 1.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::oracle::{checked_dim, Expand, StateVector};
use crate::rage::dress_operator;
use crate::operators::{elementary, ProductOperator};
use crate::rng::Rng;
use crate::tensor::{contract, DenseTensor};
use crate::wgs::{AdjacencyPhases, LocalRotations};

/// Largest grid contracted exactly.
pub const MAX_EXACT_SITES: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct PepsState {
    lx: usize,
    ly: usize,
    q: usize,
    tensors: Vec<DenseTensor>,
}

impl PepsState {
    pub fn new(lx: usize, ly: usize, tensors: Vec<DenseTensor>) -> Result<Self> {
        if lx == 0 || ly == 0 || tensors.len() != lx * ly {
            return Err(Error::Shape(format!("{lx}×{ly} grid needs {} tensors", lx * ly)));
        }
        let q = tensors[0].shape().get(4).copied().unwrap_or(0);
        for y in 0..ly {
            for x in 0..lx {
                let t = &tensors[y * lx + x];
                let s = t.shape();
                if t.rank() != 5 || s[4] != q {
                    return Err(Error::Shape(format!("site ({x}, {y}) has shape {s:?}")));
                }
                if (x == 0 && s[0] != 1) || (x + 1 == lx && s[1] != 1) || (y == 0 && s[2] != 1) || (y + 1 == ly && s[3] != 1) {
                    return Err(Error::Shape(format!("boundary leg of ({x}, {y}) must have dimension 1")));
                }
                if x + 1 < lx && s[1] != tensors[y * lx + x + 1].shape()[0] {
                    return Err(Error::DimensionMismatch(format!("horizontal bond at ({x}, {y})")));
                }
                if y + 1 < ly && s[3] != tensors[(y + 1) * lx + x].shape()[2] {
                    return Err(Error::DimensionMismatch(format!("vertical bond at ({x}, {y})")));
                }
            }
        }
        Ok(Self { lx, ly, q, tensors })
    }

    pub fn random(lx: usize, ly: usize, q: usize, d: usize, rng: &mut Rng) -> Self {
        let mut tensors = Vec::with_capacity(lx * ly);
        for y in 0..ly {
            for x in 0..lx {
                let shape = [
                    if x == 0 { 1 } else { d },
                    if x + 1 == lx { 1 } else { d },
                    if y == 0 { 1 } else { d },
                    if y + 1 == ly { 1 } else { d },
                    q,
                ];
                tensors.push(DenseTensor::random(&shape, rng));
            }
        }
        Self::new(lx, ly, tensors).expect("consistent shapes")
    }

    pub fn product(lx: usize, ly: usize, locals: &[Vec<C64>]) -> Result<Self> {
        if locals.len() != lx * ly {
            return Err(Error::DimensionMismatch("one local vector per site".into()));
        }
        let tensors = locals.iter().map(|v| DenseTensor::new(vec![1, 1, 1, 1, v.len()], v.clone())).collect::<Result<Vec<_>>>()?;
        Self::new(lx, ly, tensors)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.lx, self.ly)
    }

    pub fn n_sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn local_dim(&self) -> usize {
        self.q
    }

    pub fn tensor(&self, site: usize) -> &DenseTensor {
        &self.tensors[site]
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Label {
    H(usize),
    V(usize),
    Phys(usize),
}

/// Contracts a list of labelled tensors left to right over shared labels.
fn contract_network(items: Vec<(DenseTensor, Vec<Label>)>) -> (DenseTensor, Vec<Label>) {
    let mut it = items.into_iter();
    let (mut acc, mut labels) = it.next().expect("nonempty network");
    for (t, tl) in it {
        let mut pairs = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            if let Some(j) = tl.iter().position(|m| m == l) {
                pairs.push((i, j));
            }
        }
        acc = contract(&acc, &t, &pairs).expect("bond dimensions");
        let mut next: Vec<Label> = labels.iter().enumerate().filter(|(i, _)| !pairs.iter().any(|p| p.0 == *i)).map(|x| *x.1).collect();
        next.extend(tl.iter().enumerate().filter(|(j, _)| !pairs.iter().any(|p| p.1 == *j)).map(|x| *x.1));
        labels = next;
    }
    (acc, labels)
}

impl PepsState {
    fn bond_labels(&self, site: usize) -> [Label; 4] {
        let (x, y) = (site % self.lx, site / self.lx);
        let lx = self.lx;
        let n = self.n_sites();
        // Boundary legs get labels that never repeat.
        let h_left = if x == 0 { Label::H(n + 2 * site) } else { Label::H(site - 1) };
        let h_right = if x + 1 == lx { Label::H(n + 2 * site + 1) } else { Label::H(site) };
        let v_up = if y == 0 { Label::V(n + 2 * site) } else { Label::V(site - lx) };
        let v_down = if y + 1 == self.ly { Label::V(n + 2 * site + 1) } else { Label::V(site) };
        [h_left, h_right, v_up, v_down]
    }
}

impl Expand for PepsState {
    fn expand(&self) -> Result<StateVector> {
        let n = self.n_sites();
        checked_dim(n, self.q)?;
        let items = (0..n)
            .map(|s| {
                let mut l = self.bond_labels(s).to_vec();
                l.push(Label::Phys(s));
                (self.tensors[s].clone(), l)
            })
            .collect();
        let (t, labels) = contract_network(items);
        let mut perm = vec![0; n];
        let mut rest = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            match l {
                Label::Phys(s) => perm[*s] = i,
                _ => rest.push(i),
            }
        }
        // Remaining boundary legs all have dimension 1.
        let mut full = perm.clone();
        full.extend(rest);
        let t = t.permute(&full);
        StateVector::new(n, self.q, t.into_data())
    }
}

/// `B[(l l'), (r r'), (u u'), (d d')] = Σ_{s,s'} op[s', s] A[.., s] conj(A[.., s'])`.
pub fn peps_b_tensor(p: &PepsState, site: usize, op: Option<&CMatrix>) -> Result<DenseTensor> {
    if site >= p.n_sites() {
        return Err(Error::InvalidArgument("site out of range".into()));
    }
    let a = &p.tensors[site];
    let x = match op {
        Some(o) => {
            if o.nrows() != p.q || o.ncols() != p.q {
                return Err(Error::DimensionMismatch("operator does not match the local dimension".into()));
            }
            a.apply_to_leg(4, o)
        }
        None => a.clone(),
    };
    let b = contract(&x, &a.conj(), &[(4, 4)])?;
    let s = a.shape();
    b.permute(&[0, 4, 1, 5, 2, 6, 3, 7]).reshape(&[s[0] * s[0], s[1] * s[1], s[2] * s[2], s[3] * s[3]])
}

fn check_ops(p: &PepsState, ops: Option<&[Option<CMatrix>]>) -> Result<()> {
    if let Some(o) = ops {
        if o.len() != p.n_sites() {
            return Err(Error::DimensionMismatch("one operator slot per site".into()));
        }
    }
    Ok(())
}

fn b_grid(p: &PepsState, ops: Option<&[Option<CMatrix>]>) -> Result<Vec<DenseTensor>> {
    check_ops(p, ops)?;
    (0..p.n_sites()).map(|s| peps_b_tensor(p, s, ops.and_then(|o| o[s].as_ref()))).collect()
}

/// Exact `⟨ψ| ⊗ ops |ψ⟩` by contracting the doubled network.
pub fn peps_exact_contract(p: &PepsState, ops: Option<&[Option<CMatrix>]>) -> Result<C64> {
    if p.n_sites() > MAX_EXACT_SITES {
        return Err(Error::TooLarge(format!("{} sites exceed the exact-contraction limit", p.n_sites())));
    }
    let grid = b_grid(p, ops)?;
    let items = grid.into_iter().enumerate().map(|(s, b)| (b, p.bond_labels(s).to_vec())).collect();
    let (t, _) = contract_network(items);
    Ok(t.data().iter().copied().sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryContractionReport {
    /// Discarded squared singular values after absorbing each row.
    pub discarded: Vec<f64>,
    pub value: C64,
    pub chi: usize,
}

/// Brings a chain `(bl, s, br)` to right-canonical form and truncates every bond to `chi`.
fn truncate_chain(sites: &mut [DenseTensor], chi: usize) -> Result<f64> {
    let n = sites.len();
    for j in 0..n.saturating_sub(1) {
        let sh = sites[j].shape().to_vec();
        let (qm, r) = linalg::qr_reduce(&sites[j].to_matrix(2));
        let k = qm.ncols();
        sites[j] = DenseTensor::from_matrix(&qm, &[sh[0], sh[1], k])?;
        sites[j + 1] = sites[j + 1].apply_to_leg(0, &r);
    }
    let mut discarded = 0.0;
    for j in (1..n).rev() {
        let sh = sites[j].shape().to_vec();
        let svd = linalg::truncated_svd(&sites[j].to_matrix(1), chi)?;
        discarded += svd.discarded_weight;
        let k = svd.s.len();
        sites[j] = DenseTensor::from_matrix(&svd.v, &[k, sh[1], sh[2]])?;
        let us = CMatrix::from_fn(svd.u.nrows(), k, |a, b| svd.u[(a, b)] * svd.s[b]);
        sites[j - 1] = sites[j - 1].apply_to_leg(2, &linalg::transpose(&us));
    }
    Ok(discarded)
}

/// Top-to-bottom boundary contraction with every boundary bond capped at `chi`.
pub fn peps_boundary_contract(p: &PepsState, chi: usize, ops: Option<&[Option<CMatrix>]>) -> Result<(C64, BoundaryContractionReport)> {
    if chi == 0 {
        return Err(Error::InvalidArgument("chi must be at least 1".into()));
    }
    let grid = b_grid(p, ops)?;
    let (lx, ly) = (p.lx, p.ly);
    // Boundary sites (bl, d, br) from the first row; its up legs have dimension 1.
    let mut bound: Vec<DenseTensor> = (0..lx)
        .map(|x| {
            let b = &grid[x];
            let s = b.shape();
            b.reshape(&[s[0], s[1], s[3]]).expect("u leg of dimension 1").permute(&[0, 2, 1])
        })
        .collect::<Vec<_>>();
    let mut discarded = Vec::new();
    for y in 1..ly {
        let mut next = Vec::with_capacity(lx);
        for x in 0..lx {
            let b = &grid[y * lx + x];
            let m = &bound[x];
            // m [bl, u, br] · b [l, r, u, d] → [bl, br, l, r, d]
            let t = contract(m, b, &[(1, 2)])?;
            let s = t.shape().to_vec();
            let t = t.permute(&[0, 2, 4, 1, 3]).reshape(&[s[0] * s[2], s[4], s[1] * s[3]])?;
            next.push(t);
        }
        bound = next;
        if y + 1 < ly {
            discarded.push(truncate_chain(&mut bound, chi)?);
        }
    }
    // Last row absorbed: physical legs have dimension 1.
    let mut env = DenseTensor::new(vec![1], vec![ONE])?;
    for t in &bound {
        let s = t.shape();
        let m = t.reshape(&[s[0], s[1] * s[2]])?;
        env = contract(&env, &m, &[(0, 0)])?;
        let k = env.shape()[0] / s[2];
        env = env.reshape(&[k, s[2]])?;
        env = DenseTensor::new(vec![s[2]], (0..s[2]).map(|j| (0..k).map(|i| env.get(&[i, j])).sum()).collect())?;
    }
    let value = env.data()[0];
    Ok((value, BoundaryContractionReport { discarded, value, chi }))
}

/// Reduced density on `support` of `V W |P⟩` for a PEPS backbone `P`.
///
/// Each element is one boundary contraction of the phase-dressed projector.
pub fn rage_peps_reduced_density(
    backbone: &PepsState,
    phases: &AdjacencyPhases,
    rotations: &LocalRotations,
    support: &[usize],
    chi: usize,
) -> Result<CMatrix> {
    let n = backbone.n_sites();
    let q = backbone.q;
    if phases.n_sites() != n || rotations.n_sites() != n || phases.local_dim() != q {
        return Err(Error::DimensionMismatch("phase or rotation layer does not match the grid".into()));
    }
    if support.len() != 2 || support[0] == support[1] || support.iter().any(|&s| s >= n) {
        return Err(Error::UnsupportedSupport("expected two distinct sites".into()));
    }
    if q != 2 && !rotations.is_identity() {
        return Err(Error::InvalidArgument("rotations are defined for qubits only".into()));
    }
    let (norm, _) = peps_boundary_contract(backbone, chi, None)?;
    if norm.norm() == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let bare = LocalRotations::identity(n);
    let dim = q * q;
    let mut rho = linalg::zeros(dim, dim);
    for t in 0..dim {
        for tp in 0..dim {
            let op = ProductOperator::identity(n)
                .with_factor(support[0], elementary(q, tp / q, t / q))
                .with_factor(support[1], elementary(q, tp % q, t % q));
            let mut acc = ZERO;
            for c in dress_operator(&op, phases, &bare)? {
                let (v, _) = peps_boundary_contract(backbone, chi, Some(&c.factors))?;
                acc += c.coeff * v;
            }
            rho[(t, tp)] = acc / norm;
        }
    }
    if q == 2 && support.iter().any(|&s| !rotations.is_identity_at(s)) {
        let v = linalg::kron(&rotations.matrix(support[0]), &rotations.matrix(support[1]));
        rho = linalg::matmul(&linalg::matmul(&v, &rho), &linalg::adjoint(&v));
    }
    Ok(linalg::hermitian_part(&rho))
}
