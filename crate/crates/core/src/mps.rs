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

//! Matrix product states.
//!
//! Every site tensor is stored with legs `(left bond, physical, right bond)`.
//! Open chains carry outer bonds of dimension 1; closed chains close the trace
//! over the bond between the last and the first site.

use crate::error::{Error, Result};
use crate::hamiltonians::HamiltonianSum;
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::operators::ProductOperator;
use crate::oracle::{checked_dim, Expand, StateVector};
use crate::rng::Rng;
use crate::tensor::{contract, DenseTensor};

/// Largest support accepted by [`mps_reduced_density`].
pub const MAX_DENSITY_SUPPORT: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    boundary: Boundary,
    q: usize,
    sites: Vec<DenseTensor>,
}

impl MpsState {
    pub fn new(boundary: Boundary, sites: Vec<DenseTensor>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidArgument("an MPS needs at least one site".into()));
        }
        let q = sites[0].shape().get(1).copied().unwrap_or(0);
        if q < 2 {
            return Err(Error::Shape("local dimension must be at least 2".into()));
        }
        let n = sites.len();
        for (j, t) in sites.iter().enumerate() {
            if t.rank() != 3 || t.shape()[1] != q {
                return Err(Error::Shape(format!("site {j} has shape {:?}", t.shape())));
            }
            let next = &sites[(j + 1) % n];
            if j + 1 < n || boundary == Boundary::Closed {
                if t.shape()[2] != next.shape()[0] {
                    return Err(Error::DimensionMismatch(format!("bond after site {j}")));
                }
            }
        }
        if boundary == Boundary::Open && (sites[0].shape()[0] != 1 || sites[n - 1].shape()[2] != 1) {
            return Err(Error::Shape("open chains need outer bonds of dimension 1".into()));
        }
        Ok(Self { boundary, q, sites })
    }

    /// Uniform bond dimension `d`, entries `A + iB` uniform, normalized.
    pub fn random(boundary: Boundary, n_sites: usize, q: usize, d: usize, rng: &mut Rng) -> Self {
        let sites = (0..n_sites)
            .map(|j| {
                let (l, r) = match boundary {
                    Boundary::Closed => (d, d),
                    Boundary::Open => (if j == 0 { 1 } else { d }, if j + 1 == n_sites { 1 } else { d }),
                };
                DenseTensor::random(&[l, q, r], rng)
            })
            .collect();
        let mut m = Self::new(boundary, sites).expect("consistent shapes");
        m.normalize();
        m
    }

    /// Open product state `⊗_j v_j`.
    pub fn product(locals: &[Vec<C64>]) -> Result<Self> {
        let sites = locals
            .iter()
            .map(|v| DenseTensor::new(vec![1, v.len(), 1], v.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(Boundary::Open, sites)
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn local_dim(&self) -> usize {
        self.q
    }

    pub fn site(&self, j: usize) -> &DenseTensor {
        &self.sites[j]
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    /// Replaces one site tensor; its bond dimensions must match the neighbours.
    pub fn set_site(&mut self, j: usize, t: DenseTensor) -> Result<()> {
        let mut s = self.sites.clone();
        s[j] = t;
        *self = Self::new(self.boundary, s)?;
        Ok(())
    }

    /// `(left, right)` bond dimensions of every site.
    pub fn bond_dims(&self) -> Vec<(usize, usize)> {
        self.sites.iter().map(|t| (t.shape()[0], t.shape()[2])).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().iter().map(|&(l, r)| l.max(r)).max().unwrap_or(1)
    }

    /// Number of complex entries in all site tensors.
    pub fn n_entries(&self) -> usize {
        self.sites.iter().map(|t| t.len()).sum()
    }

    pub fn scale(&mut self, z: C64) {
        self.sites[0].scale_in_place(z);
    }

    pub fn normalize(&mut self) {
        let n = mps_norm_squared(self);
        if n > 0.0 {
            self.scale(C64::new(1.0 / n.sqrt(), 0.0));
        }
    }

    /// `O` on the physical leg of site `j`.
    pub fn apply_site_operator(&mut self, j: usize, o: &CMatrix) {
        self.sites[j] = self.sites[j].apply_to_leg(1, o);
    }

    pub fn conj(&self) -> Self {
        Self { boundary: self.boundary, q: self.q, sites: self.sites.iter().map(|t| t.conj()).collect() }
    }
}

impl Expand for MpsState {
    fn expand(&self) -> Result<StateVector> {
        let n = self.n_sites();
        let q = self.q;
        checked_dim(n, q)?;
        let d0 = self.sites[0].shape()[0];
        // acc[a0, idx, b]
        let mut acc = vec![ZERO; d0 * d0];
        for a in 0..d0 {
            acc[a * d0 + a] = ONE;
        }
        let mut k = 1usize;
        let mut db = d0;
        for t in &self.sites {
            let dc = t.shape()[2];
            acc = linalg::gemm_rows(&acc, t.data(), d0 * k, db, q * dc);
            k *= q;
            db = dc;
        }
        let amps = (0..k)
            .map(|idx| {
                if self.boundary == Boundary::Open {
                    acc[idx]
                } else {
                    (0..d0).map(|a| acc[(a * k + idx) * db + a]).sum()
                }
            })
            .collect();
        StateVector::new(n, q, amps)
    }
}

/// Left environment `[x, e, b_ket, b_bra]`; `x` pairs the closing bonds, `e` collects open indices.
fn left_init(ket: &MpsState, bra: &MpsState) -> DenseTensor {
    let (dk, db) = (ket.sites[0].shape()[0], bra.sites[0].shape()[0]);
    DenseTensor::from_fn(&[dk * db, 1, dk, db], |i| {
        if i[0] == i[2] * db + i[3] {
            ONE
        } else {
            ZERO
        }
    })
}

/// Right environment `[c_ket, c_bra, x]`.
fn right_init(ket: &MpsState, bra: &MpsState) -> DenseTensor {
    let (dk, db) = (ket.sites[0].shape()[0], bra.sites[0].shape()[0]);
    DenseTensor::from_fn(&[dk, db, dk * db], |i| if i[2] == i[0] * db + i[1] { ONE } else { ZERO })
}

fn left_step(env: &DenseTensor, a: &DenseTensor, b: &DenseTensor, op: Option<&CMatrix>) -> DenseTensor {
    let t = contract(env, a, &[(2, 0)]).expect("bond dims"); // [x, e, b', s, c]
    let t = match op {
        Some(o) => t.apply_to_leg(3, o),
        None => t,
    };
    contract(&t, &b.conj(), &[(2, 0), (3, 1)]).expect("bond dims") // [x, e, c, c']
}

fn left_step_open(env: &DenseTensor, a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let t = contract(env, a, &[(2, 0)]).expect("bond dims"); // [x, e, b', s, c]
    let t = contract(&t, &b.conj(), &[(2, 0)]).expect("bond dims"); // [x, e, s, c, r, c']
    let t = t.permute(&[0, 1, 2, 4, 3, 5]);
    let s = t.shape().to_vec();
    t.reshape(&[s[0], s[1] * s[2] * s[3], s[4], s[5]]).expect("reshape")
}

fn right_step(env: &DenseTensor, a: &DenseTensor, b: &DenseTensor, op: Option<&CMatrix>) -> DenseTensor {
    let t = contract(a, env, &[(2, 0)]).expect("bond dims"); // [b, s, c', x]
    let t = match op {
        Some(o) => t.apply_to_leg(1, o),
        None => t,
    };
    let t = contract(&t, &b.conj(), &[(1, 1), (2, 2)]).expect("bond dims"); // [b, x, b']
    t.permute(&[0, 2, 1])
}

/// `Σ_{x,c,c'} L[x, e, c, c'] R[c, c', x]` for every `e`.
fn close(l: &DenseTensor, r: &DenseTensor) -> Vec<C64> {
    contract(l, r, &[(0, 2), (2, 0), (3, 1)]).expect("bond dims").into_data()
}

fn check_same_chain(ket: &MpsState, bra: &MpsState) -> Result<()> {
    if ket.n_sites() != bra.n_sites() || ket.q != bra.q || ket.boundary != bra.boundary {
        return Err(Error::DimensionMismatch("states live on different chains".into()));
    }
    Ok(())
}

/// `coeff · ⟨bra| ⊗_j O_j |ket⟩`.
pub fn transfer_value(ket: &MpsState, bra: &MpsState, op: &ProductOperator) -> Result<C64> {
    check_same_chain(ket, bra)?;
    if op.n_sites() != ket.n_sites() {
        return Err(Error::DimensionMismatch("operator width".into()));
    }
    op.check_dims(ket.q)?;
    let mut l = left_init(ket, bra);
    for j in 0..ket.n_sites() {
        l = left_step(&l, &ket.sites[j], &bra.sites[j], op.factors[j].as_ref());
    }
    Ok(op.coeff * close(&l, &right_init(ket, bra))[0])
}

/// `⟨bra|ket⟩`.
pub fn overlap(bra: &MpsState, ket: &MpsState) -> Result<C64> {
    transfer_value(ket, bra, &ProductOperator::identity(ket.n_sites()))
}

pub fn mps_norm_squared(m: &MpsState) -> f64 {
    transfer_value(m, m, &ProductOperator::identity(m.n_sites())).expect("same chain").re.max(0.0)
}

/// `E_{k,l} = A_k ⊗ conj(A_l)` as a `D_l² × D_r²` matrix.
pub fn transfer_matrix(m: &MpsState, site: usize, k: usize, l: usize) -> CMatrix {
    let t = &m.sites[site];
    let (dl, dr) = (t.shape()[0], t.shape()[2]);
    let ak = CMatrix::from_fn(dl, dr, |a, b| t.get(&[a, k, b]));
    let al = CMatrix::from_fn(dl, dr, |a, b| t.get(&[a, l, b]).conj());
    linalg::kron(&ak, &al)
}

/// `Σ_terms ⟨ψ|term|ψ⟩ / ⟨ψ|ψ⟩` over product components.
pub fn expectation_components(m: &MpsState, comps: &[ProductOperator]) -> Result<C64> {
    let n = mps_norm_squared(m);
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let env = IdentityEnvs::new(m);
    let mut acc = ZERO;
    for c in comps {
        acc += env.value(m, c)?;
    }
    Ok(acc / n)
}

pub fn mps_expectation(m: &MpsState, h: &HamiltonianSum) -> Result<f64> {
    if h.n_sites() != m.n_sites() || m.q != 2 {
        return Err(Error::DimensionMismatch("Hamiltonian does not act on this chain".into()));
    }
    let e = expectation_components(m, &h.product_operators())?;
    if e.im.abs() > 1e-8 * e.re.abs().max(1.0) {
        return Err(Error::NonHermitian(e.im));
    }
    Ok(e.re)
}

/// Cached identity environments so a term only pays for the span of its support.
struct IdentityEnvs {
    left: Vec<DenseTensor>,
    right: Vec<DenseTensor>,
}

impl IdentityEnvs {
    fn new(m: &MpsState) -> Self {
        let n = m.n_sites();
        let mut left = vec![left_init(m, m)];
        for j in 0..n {
            let l = left_step(&left[j], &m.sites[j], &m.sites[j], None);
            left.push(l);
        }
        let mut right = vec![right_init(m, m); n + 1];
        for j in (0..n).rev() {
            right[j] = right_step(&right[j + 1], &m.sites[j], &m.sites[j], None);
        }
        Self { left, right }
    }

    fn value(&self, m: &MpsState, op: &ProductOperator) -> Result<C64> {
        if op.n_sites() != m.n_sites() {
            return Err(Error::DimensionMismatch("operator width".into()));
        }
        op.check_dims(m.q)?;
        let s = op.support();
        let (lo, hi) = match (s.first(), s.last()) {
            (Some(&a), Some(&b)) => (a, b + 1),
            _ => (0, 0),
        };
        let mut l = self.left[lo].clone();
        for j in lo..hi {
            l = left_step(&l, &m.sites[j], &m.sites[j], op.factors[j].as_ref());
        }
        Ok(op.coeff * close(&l, &self.right[hi])[0])
    }
}

/// Normalized reduced density matrix on `support`, rows and columns ordered as given.
pub fn mps_reduced_density(m: &MpsState, support: &[usize]) -> Result<CMatrix> {
    let n = m.n_sites();
    if support.is_empty() || support.len() > MAX_DENSITY_SUPPORT {
        return Err(Error::UnsupportedSupport(format!("support of size {}", support.len())));
    }
    let mut sorted = support.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != support.len() || sorted.iter().any(|&s| s >= n) {
        return Err(Error::InvalidArgument(format!("bad support {support:?}")));
    }
    let q = m.q;
    let mut l = left_init(m, m);
    for j in 0..n {
        l = if sorted.contains(&j) {
            left_step_open(&l, &m.sites[j], &m.sites[j])
        } else {
            left_step(&l, &m.sites[j], &m.sites[j], None)
        };
    }
    let vals = close(&l, &right_init(m, m));
    let k = sorted.len();
    let dim = q.pow(k as u32);
    // vals index = Π_p (s_p q + r_p) over sorted sites.
    let pos: Vec<usize> = support.iter().map(|s| sorted.iter().position(|t| t == s).unwrap()).collect();
    let mut rho = linalg::zeros(dim, dim);
    let mut trace = ZERO;
    for e in 0..vals.len() {
        let mut rem = e;
        let mut sd = vec![0; k];
        let mut rd = vec![0; k];
        for p in (0..k).rev() {
            rd[p] = rem % q;
            rem /= q;
            sd[p] = rem % q;
            rem /= q;
        }
        let row = pos.iter().fold(0, |acc, &p| acc * q + sd[p]);
        let col = pos.iter().fold(0, |acc, &p| acc * q + rd[p]);
        rho[(row, col)] = vals[e];
        if row == col {
            trace += vals[e];
        }
    }
    if trace.re <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(linalg::scale(&rho, C64::new(1.0 / trace.re, 0.0)))
}

/// Per-component environments for one-site updates, refreshed as the
/// active site moves.
pub struct SweepEnvs<'a> {
    comps: &'a [ProductOperator],
    left: Vec<Vec<Option<DenseTensor>>>,
    right: Vec<Vec<Option<DenseTensor>>>,
}

impl<'a> SweepEnvs<'a> {
    /// Environments for the metric (slot 0) and every component, valid around `site`.
    pub fn new(m: &MpsState, comps: &'a [ProductOperator], site: usize) -> Self {
        let n = m.n_sites();
        let k = comps.len() + 1;
        let mut s = Self { comps, left: vec![vec![None; n + 1]; k], right: vec![vec![None; n + 1]; k] };
        for c in 0..k {
            s.left[c][0] = Some(left_init(m, m));
            s.right[c][n] = Some(right_init(m, m));
        }
        for j in 0..site {
            s.push_left(m, j);
        }
        for j in (site + 1..n).rev() {
            s.push_right(m, j);
        }
        s
    }

    fn op(&self, c: usize, j: usize) -> Option<&CMatrix> {
        if c == 0 {
            None
        } else {
            self.comps[c - 1].factors[j].as_ref()
        }
    }

    /// Absorbs site `j` into the left environments.
    pub fn push_left(&mut self, m: &MpsState, j: usize) {
        for c in 0..self.left.len() {
            let l = left_step(self.left[c][j].as_ref().expect("left env"), &m.sites[j], &m.sites[j], self.op(c, j));
            self.left[c][j + 1] = Some(l);
        }
    }

    /// Absorbs site `j` into the right environments.
    pub fn push_right(&mut self, m: &MpsState, j: usize) {
        for c in 0..self.right.len() {
            let r = right_step(self.right[c][j + 1].as_ref().expect("right env"), &m.sites[j], &m.sites[j], self.op(c, j));
            self.right[c][j] = Some(r);
        }
    }

    /// `(h, metric)` over the entries of site `j`, flattened as `(b, s, c)`.
    pub fn effective_pair(&self, m: &MpsState, j: usize) -> (CMatrix, CMatrix) {
        let sh = m.sites[j].shape();
        let (dl, q, dr) = (sh[0], sh[1], sh[2]);
        let p = dl * q * dr;
        let mut h = linalg::zeros(p, p);
        let mut metric = linalg::zeros(p, p);
        for c in 0..self.left.len() {
            let l = self.left[c][j].as_ref().expect("left env");
            let r = self.right[c][j + 1].as_ref().expect("right env");
            let env = contract(l, r, &[(0, 2)]).expect("bond dims"); // [1, b, b', c, c']
            let e = env.data();
            let (target, coeff, o) = if c == 0 {
                (&mut metric, ONE, linalg::identity(q))
            } else {
                let comp = &self.comps[c - 1];
                (&mut h, comp.coeff, comp.factor(j, q))
            };
            for b in 0..dl {
                for bp in 0..dl {
                    for cc in 0..dr {
                        for cp in 0..dr {
                            let v = e[((b * dl + bp) * dr + cc) * dr + cp] * coeff;
                            if v == ZERO {
                                continue;
                            }
                            for r_ in 0..q {
                                for s in 0..q {
                                    let w = o[(r_, s)];
                                    if w != ZERO {
                                        target[((bp * q + r_) * dr + cp, (b * q + s) * dr + cc)] += v * w;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        (linalg::hermitian_part(&h), linalg::hermitian_part(&metric))
    }
}

/// `(h̃, metric)` at `site` for `h`.
pub fn mps_effective_pair(m: &MpsState, site: usize, h: &HamiltonianSum) -> Result<(CMatrix, CMatrix)> {
    if site >= m.n_sites() || h.n_sites() != m.n_sites() {
        return Err(Error::InvalidArgument("site or Hamiltonian does not fit the chain".into()));
    }
    let comps = h.product_operators();
    Ok(effective_pair_components(m, site, &comps))
}

pub fn effective_pair_components(m: &MpsState, site: usize, comps: &[ProductOperator]) -> (CMatrix, CMatrix) {
    SweepEnvs::new(m, comps, site).effective_pair(m, site)
}

fn flat(m: &MpsState, j: usize) -> Vec<C64> {
    m.sites[j].data().to_vec()
}

/// Moves the orthogonality center from `j` to `j + 1` on an open chain.
pub(crate) fn move_center_right(m: &mut MpsState, j: usize) {
    let t = &m.sites[j];
    let sh = t.shape().to_vec();
    let (qm, r) = linalg::qr_reduce(&t.to_matrix(2));
    let k = qm.ncols();
    m.sites[j] = DenseTensor::from_matrix(&qm, &[sh[0], sh[1], k]).expect("shape");
    m.sites[j + 1] = m.sites[j + 1].apply_to_leg(0, &r);
}

/// Moves the orthogonality center from `j` to `j - 1` on an open chain.
pub(crate) fn move_center_left(m: &mut MpsState, j: usize) {
    let t = &m.sites[j];
    let sh = t.shape().to_vec();
    let mm = t.to_matrix(1);
    let (qm, r) = linalg::qr_reduce(&linalg::adjoint(&mm));
    let k = qm.ncols();
    m.sites[j] = DenseTensor::from_matrix(&linalg::adjoint(&qm), &[k, sh[1], sh[2]]).expect("shape");
    let rc = CMatrix::from_fn(r.nrows(), r.ncols(), |a, b| r[(a, b)].conj());
    m.sites[j - 1] = m.sites[j - 1].apply_to_leg(2, &rc);
}

/// Left-canonical sites before `center`, right-canonical after it.
pub fn mps_canonicalize_open(m: &MpsState, center: usize) -> Result<MpsState> {
    if m.boundary != Boundary::Open {
        return Err(Error::InvalidArgument("canonical form needs an open chain; cut the closed chain first".into()));
    }
    if center >= m.n_sites() {
        return Err(Error::InvalidArgument("center out of range".into()));
    }
    let mut out = m.clone();
    for j in 0..center {
        move_center_right(&mut out, j);
    }
    for j in (center + 1..out.n_sites()).rev() {
        move_center_left(&mut out, j);
    }
    Ok(out)
}

/// Largest deviation from the isometry conditions around `center`.
pub fn isometry_deviation(m: &MpsState, center: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (j, t) in m.sites.iter().enumerate() {
        if j == center {
            continue;
        }
        let g = if j < center { t.gram_except(t, 2) } else { t.gram_except(t, 0) };
        worst = worst.max(linalg::distance(&g, &linalg::identity(g.nrows())));
    }
    worst
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub max_sweeps: usize,
    pub rel_tol: f64,
    pub metric_cutoff: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { max_sweeps: 20, rel_tol: 1e-10, metric_cutoff: linalg::METRIC_CUTOFF }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult<S> {
    pub state: S,
    /// Energy before the first update and after every site update.
    pub energy_trace: Vec<f64>,
    /// Energy at the end of each full sweep.
    pub sweep_energies: Vec<f64>,
    /// `(sweep, site)` pairs skipped for a degenerate metric.
    pub skipped: Vec<(usize, usize)>,
    pub converged: bool,
}

/// Slack for accepting a local update whose energy should not rise.
pub const ACCEPT_SLACK: f64 = 1e-12;

/// Solves the local problem at `j` and installs the minimizer if it does not raise the energy.
fn local_update(
    m: &mut MpsState,
    envs: &SweepEnvs<'_>,
    j: usize,
    current: f64,
    cutoff: f64,
) -> Result<f64> {
    let (h, metric) = envs.effective_pair(m, j);
    let sol = linalg::solve_generalized_eig_min(&h, &metric, cutoff)?;
    if sol.eigenvalue <= current + ACCEPT_SLACK * current.abs().max(1.0) {
        let shape = m.sites[j].shape().to_vec();
        m.sites[j] = DenseTensor::new(shape, sol.eigenvector).expect("shape");
        Ok(sol.eigenvalue)
    } else {
        Ok(current)
    }
}

fn energy_from_envs(m: &MpsState, envs: &SweepEnvs<'_>, j: usize) -> f64 {
    let (h, metric) = envs.effective_pair(m, j);
    let x = flat(m, j);
    linalg::quadratic_form(&h, &x).re / linalg::quadratic_form(&metric, &x).re
}

/// One-site variational minimization of `Σ comps`.
pub fn sweep_minimize_components(
    m: &MpsState,
    comps: &[ProductOperator],
    opts: &SweepOptions,
) -> Result<SweepResult<MpsState>> {
    if opts.max_sweeps == 0 {
        return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
    }
    let n = m.n_sites();
    let open = m.boundary == Boundary::Open;
    let mut state = if open { mps_canonicalize_open(m, 0)? } else { m.clone() };
    state.normalize();
    let mut envs = SweepEnvs::new(&state, comps, 0);
    let mut energy = energy_from_envs(&state, &envs, 0);
    let mut trace = vec![energy];
    let mut sweep_energies = Vec::new();
    let mut skipped = Vec::new();
    let mut converged = false;
    let mut last = energy;
    for sweep in 0..opts.max_sweeps {
        let order: Vec<(usize, bool)> = if n == 1 {
            vec![(0, true)]
        } else {
            (0..n - 1).map(|j| (j, true)).chain((1..n).rev().map(|j| (j, false))).collect()
        };
        for (j, right) in order {
            match local_update(&mut state, &envs, j, energy, opts.metric_cutoff) {
                Ok(e) => energy = e,
                Err(Error::DegenerateMetric) => {
                    log::warn!("degenerate metric at site {j} in sweep {sweep}, update skipped");
                    skipped.push((sweep, j));
                }
                Err(e) => return Err(e),
            }
            trace.push(energy);
            if n == 1 {
                break;
            }
            if right {
                if open {
                    move_center_right(&mut state, j);
                }
                envs.push_left(&state, j);
            } else {
                if open {
                    move_center_left(&mut state, j);
                }
                envs.push_right(&state, j);
            }
        }
        sweep_energies.push(energy);
        if (last - energy).abs() <= opts.rel_tol * energy.abs().max(f64::MIN_POSITIVE) && sweep > 0 {
            converged = true;
            break;
        }
        if n == 1 && (last - energy).abs() <= opts.rel_tol * energy.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        last = energy;
    }
    state.normalize();
    Ok(SweepResult { state, energy_trace: trace, sweep_energies, skipped, converged })
}

pub fn mps_sweep_minimize(m: &MpsState, h: &HamiltonianSum, max_sweeps: usize, rel_tol: f64) -> Result<SweepResult<MpsState>> {
    if h.n_sites() != m.n_sites() || m.q != 2 {
        return Err(Error::DimensionMismatch("Hamiltonian does not act on this chain".into()));
    }
    let comps = h.product_operators();
    sweep_minimize_components(m, &comps, &SweepOptions { max_sweeps, rel_tol, ..Default::default() })
}

/// `Σ_k c_k |m_k⟩` on open chains as one MPS with block-diagonal bonds.
pub fn direct_sum(terms: &[(C64, MpsState)]) -> Result<MpsState> {
    let first = &terms.first().ok_or_else(|| Error::InvalidArgument("empty sum".into()))?.1;
    let n = first.n_sites();
    let q = first.q;
    for (_, t) in terms {
        if t.boundary != Boundary::Open {
            return Err(Error::InvalidArgument("direct sums need open chains".into()));
        }
        check_same_chain(first, t)?;
    }
    if n == 1 {
        let mut t = DenseTensor::zeros(&[1, q, 1]);
        for (c, m) in terms {
            t = t.add(&m.sites[0].scale(*c))?;
        }
        return MpsState::new(Boundary::Open, vec![t]);
    }
    let mut sites = Vec::with_capacity(n);
    for j in 0..n {
        let dims: Vec<(usize, usize)> = terms.iter().map(|(_, m)| (m.sites[j].shape()[0], m.sites[j].shape()[2])).collect();
        let dl: usize = if j == 0 { 1 } else { dims.iter().map(|d| d.0).sum() };
        let dr: usize = if j + 1 == n { 1 } else { dims.iter().map(|d| d.1).sum() };
        let mut t = DenseTensor::zeros(&[dl, q, dr]);
        let (mut ol, mut or) = (0, 0);
        for (k, (c, m)) in terms.iter().enumerate() {
            let src = &m.sites[j];
            let (sl, sr) = dims[k];
            let w = if j == 0 { *c } else { ONE };
            for a in 0..sl {
                for s in 0..q {
                    for b in 0..sr {
                        let (ta, tb) = (if j == 0 { 0 } else { ol + a }, if j + 1 == n { 0 } else { or + b });
                        let v = t.get(&[ta, s, tb]) + w * src.get(&[a, s, b]);
                        t.set(&[ta, s, tb], v);
                    }
                }
            }
            ol += sl;
            or += sr;
        }
        sites.push(t);
    }
    MpsState::new(Boundary::Open, sites)
}

/// SVD compression of an open chain to bond dimension `max_bond`; returns the summed discarded weight.
pub fn compress(m: &MpsState, max_bond: usize) -> Result<(MpsState, f64)> {
    let n = m.n_sites();
    let mut s = mps_canonicalize_open(m, n - 1)?;
    let mut discarded = 0.0;
    for j in (1..n).rev() {
        let t = &s.sites[j];
        let sh = t.shape().to_vec();
        let svd = linalg::truncated_svd(&t.to_matrix(1), max_bond)?;
        discarded += svd.discarded_weight;
        let k = svd.s.len();
        s.sites[j] = DenseTensor::from_matrix(&svd.v, &[k, sh[1], sh[2]])?;
        let us = CMatrix::from_fn(svd.u.nrows(), k, |a, b| svd.u[(a, b)] * svd.s[b]);
        s.sites[j - 1] = s.sites[j - 1].apply_to_leg(2, &linalg::transpose(&us));
    }
    Ok((s, discarded))
}

/// Overlap-maximizing one-site sweeps of `init` toward `target` on open chains.
///
/// Returns the fitted normalized state and `|⟨fit|target⟩|² / ⟨target|target⟩`.
pub fn fit_mps(target: &MpsState, init: &MpsState, sweeps: usize) -> Result<(MpsState, f64)> {
    check_same_chain(target, init)?;
    if target.boundary != Boundary::Open || init.boundary != Boundary::Open {
        return Err(Error::InvalidArgument("fitting needs open chains".into()));
    }
    let tnorm = mps_norm_squared(target);
    if tnorm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let n = target.n_sites();
    let mut x = mps_canonicalize_open(init, 0)?;
    x.normalize();
    let one = DenseTensor::new(vec![1, 1], vec![ONE])?;
    let left_push = |l: &DenseTensor, xs: &DenseTensor, ts: &DenseTensor| {
        let y = contract(l, ts, &[(1, 0)]).expect("bond");
        contract(&y, &xs.conj(), &[(0, 0), (1, 1)]).expect("bond").permute(&[1, 0])
    };
    let right_push = |r: &DenseTensor, xs: &DenseTensor, ts: &DenseTensor| {
        let y = contract(ts, r, &[(2, 1)]).expect("bond");
        contract(&xs.conj(), &y, &[(1, 1), (2, 2)]).expect("bond")
    };
    let local = |l: &DenseTensor, r: &DenseTensor, ts: &DenseTensor| {
        let y = contract(l, ts, &[(1, 0)]).expect("bond");
        contract(&y, r, &[(2, 1)]).expect("bond")
    };
    let mut right = vec![one.clone(); n + 1];
    for j in (1..n).rev() {
        right[j] = right_push(&right[j + 1], &x.sites[j], &target.sites[j]);
    }
    let mut left = vec![one; n + 1];
    let mut fid = 0.0;
    let install = |x: &mut MpsState, j: usize, b: DenseTensor| -> Result<f64> {
        let nb = b.norm_sqr();
        if nb == 0.0 {
            return Err(Error::ZeroNorm);
        }
        x.sites[j] = b.scale(C64::new(1.0 / nb.sqrt(), 0.0));
        Ok(nb / tnorm)
    };
    for _ in 0..sweeps.max(1) {
        for j in 0..n {
            let b = local(&left[j], &right[j + 1], &target.sites[j]);
            fid = install(&mut x, j, b)?;
            if j + 1 < n {
                move_center_right(&mut x, j);
                left[j + 1] = left_push(&left[j], &x.sites[j], &target.sites[j]);
            }
        }
        for j in (0..n).rev() {
            let b = local(&left[j], &right[j + 1], &target.sites[j]);
            fid = install(&mut x, j, b)?;
            if j > 0 {
                move_center_left(&mut x, j);
                right[j] = right_push(&right[j + 1], &x.sites[j], &target.sites[j]);
            }
        }
    }
    x.normalize();
    Ok((x, fid))
}
