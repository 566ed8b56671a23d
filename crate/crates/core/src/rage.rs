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

//! Tensor backbones dressed with a weighted-graph phase layer and local rotations.
//!
//! The represented state is `V W |A⟩`, with `W` the diagonal phase layer and
//! `V` a product of single-qubit rotations. Observables are evaluated by
//! conjugating them through `V W`: an elementary flip `|r⟩⟨s|` on a site
//! turns into phase-dressed diagonal factors on every other site it is
//! coupled to, so each dressed term is again a product operator on the
//! backbone.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::hamiltonians::{HamiltonianSum, PauliString};
use crate::linalg::{self, CMatrix, RMatrix, C64, ONE, ZERO};
use crate::mps::{
    effective_pair_components, expectation_components, mps_canonicalize_open, sweep_minimize_components, Boundary,
    MpsState, SweepOptions, ACCEPT_SLACK, MAX_DENSITY_SUPPORT,
};
use crate::operators::{elementary, ProductOperator};
use crate::oracle::{Expand, StateVector};
use crate::rng::Rng;
use crate::tensor::{contract, DenseTensor};
use crate::tts::{tts_canonicalize, tts_expectation_components, tts_sweep_minimize_components, TreeEnvs, TtsState};
use crate::wgs::{AdjacencyPhases, LocalRotations};

/// Cap on the number of product components one dressed term may expand into.
pub const MAX_DRESSED_COMPONENTS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub enum Backbone {
    Mps(MpsState),
    Tts(TtsState),
}

impl Backbone {
    pub fn n_sites(&self) -> usize {
        match self {
            Backbone::Mps(m) => m.n_sites(),
            Backbone::Tts(t) => t.n_sites(),
        }
    }

    pub fn local_dim(&self) -> usize {
        match self {
            Backbone::Mps(m) => m.local_dim(),
            Backbone::Tts(t) => t.local_dim(),
        }
    }

    pub fn n_entries(&self) -> usize {
        match self {
            Backbone::Mps(m) => m.n_entries(),
            Backbone::Tts(t) => t.n_entries(),
        }
    }

    /// `Σ_c ⟨A|c|A⟩ / ⟨A|A⟩`.
    pub fn expectation_components(&self, comps: &[ProductOperator]) -> Result<C64> {
        match self {
            Backbone::Mps(m) => expectation_components(m, comps),
            Backbone::Tts(t) => tts_expectation_components(t, comps),
        }
    }
}

impl Expand for Backbone {
    fn expand(&self) -> Result<StateVector> {
        match self {
            Backbone::Mps(m) => m.expand(),
            Backbone::Tts(t) => t.expand(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RageState {
    pub backbone: Backbone,
    pub phases: AdjacencyPhases,
    pub rotations: LocalRotations,
}

impl RageState {
    pub fn new(backbone: Backbone, phases: AdjacencyPhases, rotations: LocalRotations) -> Result<Self> {
        let n = backbone.n_sites();
        if phases.n_sites() != n || rotations.n_sites() != n {
            return Err(Error::DimensionMismatch(format!(
                "backbone has {n} sites, phases {}, rotations {}",
                phases.n_sites(),
                rotations.n_sites()
            )));
        }
        if phases.local_dim() != backbone.local_dim() {
            return Err(Error::DimensionMismatch("phase layer and backbone disagree on the local dimension".into()));
        }
        if backbone.local_dim() != 2 && !rotations.is_identity() {
            return Err(Error::InvalidArgument("local rotations are defined for qubits only".into()));
        }
        Ok(Self { backbone, phases, rotations })
    }

    /// No phases, no rotations.
    pub fn bare(backbone: Backbone) -> Self {
        let n = backbone.n_sites();
        let q = backbone.local_dim();
        Self { backbone, phases: AdjacencyPhases::zeros(n, q), rotations: LocalRotations::identity(n) }
    }

    pub fn n_sites(&self) -> usize {
        self.backbone.n_sites()
    }

    pub fn local_dim(&self) -> usize {
        self.backbone.local_dim()
    }
}

impl Expand for RageState {
    fn expand(&self) -> Result<StateVector> {
        self.backbone.expand()?.apply_phases(&self.phases)?.apply_rotations(&self.rotations)
    }
}

enum Branch {
    Diagonal(CMatrix),
    Flip(usize, usize, C64),
}

fn branches(m: &CMatrix) -> Vec<Branch> {
    let q = m.nrows();
    let scale = (0..q).flat_map(|i| (0..q).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].norm()).fold(0.0, f64::max);
    let tiny = 1e-15 * scale;
    let mut out = Vec::new();
    if (0..q).any(|i| m[(i, i)].norm() > tiny) {
        out.push(Branch::Diagonal(CMatrix::from_fn(q, q, |i, j| if i == j { m[(i, i)] } else { ZERO })));
    }
    for r in 0..q {
        for s in 0..q {
            if r != s && m[(r, s)].norm() > tiny {
                out.push(Branch::Flip(r, s, m[(r, s)]));
            }
        }
    }
    out
}

/// `(V W)† · op · (V W)` as a sum of product operators.
pub fn dress_operator(op: &ProductOperator, phases: &AdjacencyPhases, rotations: &LocalRotations) -> Result<Vec<ProductOperator>> {
    let n = op.n_sites();
    let q = phases.local_dim();
    let support = op.support();
    let mut per_site = Vec::with_capacity(support.len());
    let mut count = 1usize;
    for &j in &support {
        let mut m = op.factor(j, q);
        if q == 2 && !rotations.is_identity_at(j) {
            let v = rotations.matrix(j);
            m = linalg::matmul(&linalg::matmul(&linalg::adjoint(&v), &m), &v);
        }
        let b = branches(&m);
        count = count.saturating_mul(b.len());
        per_site.push(b);
    }
    if count > MAX_DRESSED_COMPONENTS {
        return Err(Error::UnsupportedSupport(format!("term expands into {count} components")));
    }
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return Ok(out);
    }
    let mut choice = vec![0usize; support.len()];
    loop {
        let mut coeff = op.coeff;
        let mut flips: Vec<(usize, usize, usize)> = Vec::new();
        let mut diag: Vec<Option<&CMatrix>> = vec![None; n];
        for (k, &j) in support.iter().enumerate() {
            match &per_site[k][choice[k]] {
                Branch::Diagonal(d) => diag[j] = Some(d),
                Branch::Flip(r, s, v) => {
                    coeff *= *v;
                    flips.push((j, *r, *s));
                }
            }
        }
        let mut inner = 0.0;
        for (x, &(f, rf, sf)) in flips.iter().enumerate() {
            for &(g, rg, sg) in &flips[x + 1..] {
                inner += phases.entry(f, g, sf, sg) - phases.entry(f, g, rf, rg);
            }
        }
        let mut factors: Vec<Option<CMatrix>> = vec![None; n];
        for &(f, r, s) in &flips {
            factors[f] = Some(elementary(q, r, s));
        }
        for c in 0..n {
            if factors[c].is_some() {
                continue;
            }
            let theta: Vec<f64> = (0..q)
                .map(|y| flips.iter().map(|&(f, r, s)| phases.entry(f, c, s, y) - phases.entry(f, c, r, y)).sum())
                .collect();
            let trivial = theta.iter().all(|t| *t == 0.0);
            match (diag[c], trivial) {
                (None, true) => {}
                (d, _) => {
                    let ph = CMatrix::from_fn(q, q, |i, j| if i == j { C64::from_polar(1.0, theta[i]) } else { ZERO });
                    factors[c] = Some(match d {
                        Some(d) => linalg::matmul(d, &ph),
                        None => ph,
                    });
                }
            }
        }
        out.push(ProductOperator { coeff: coeff * C64::from_polar(1.0, inner), factors });
        let mut k = 0;
        loop {
            if k == choice.len() {
                return Ok(out);
            }
            choice[k] += 1;
            if choice[k] < per_site[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

fn dress_all(r: &RageState, ops: &[ProductOperator]) -> Result<Vec<ProductOperator>> {
    let mut out = Vec::new();
    for op in ops {
        out.extend(dress_operator(op, &r.phases, &r.rotations)?);
    }
    Ok(out)
}

/// `⟨ψ| Σ ops |ψ⟩ / ⟨ψ|ψ⟩` for product operators acting on the dressed state.
pub fn rage_expectation_components(r: &RageState, ops: &[ProductOperator]) -> Result<C64> {
    if ops.is_empty() {
        return Ok(ZERO);
    }
    r.backbone.expectation_components(&dress_all(r, ops)?)
}

pub fn rage_expectation(r: &RageState, h: &HamiltonianSum) -> Result<f64> {
    if h.n_sites() != r.n_sites() || r.local_dim() != 2 {
        return Err(Error::DimensionMismatch("Hamiltonian does not act on this state".into()));
    }
    let e = rage_expectation_components(r, &h.product_operators())?;
    if e.im.abs() > 1e-8 * e.re.abs().max(1.0) {
        return Err(Error::NonHermitian(e.im));
    }
    Ok(e.re)
}

/// Normalized reduced density matrix on `support`, any backbone.
pub fn rage_reduced_density(r: &RageState, support: &[usize]) -> Result<CMatrix> {
    let n = r.n_sites();
    let q = r.local_dim();
    if support.is_empty() || support.len() > MAX_DENSITY_SUPPORT {
        return Err(Error::UnsupportedSupport(format!("support of size {}", support.len())));
    }
    for (i, &s) in support.iter().enumerate() {
        if s >= n || support[..i].contains(&s) {
            return Err(Error::InvalidArgument(format!("bad support site {s}")));
        }
    }
    let k = support.len();
    let dim = q.pow(k as u32);
    let digits = |mut x: usize| {
        let mut d = vec![0; k];
        for i in (0..k).rev() {
            d[i] = x % q;
            x /= q;
        }
        d
    };
    let bare_rot = LocalRotations::identity(n);
    let mut rho = linalg::zeros(dim, dim);
    let mut ops = Vec::with_capacity(dim * dim);
    for t in 0..dim {
        for tp in 0..dim {
            let (dt, dp) = (digits(t), digits(tp));
            let mut op = ProductOperator::identity(n);
            for i in 0..k {
                op.factors[support[i]] = Some(elementary(q, dp[i], dt[i]));
            }
            ops.push(((t, tp), op));
        }
    }
    for ((t, tp), op) in ops {
        let comps = dress_operator(&op, &r.phases, &bare_rot)?;
        rho[(t, tp)] = r.backbone.expectation_components(&comps)?;
    }
    if q == 2 && support.iter().any(|&s| !r.rotations.is_identity_at(s)) {
        let mut v = linalg::identity(1);
        for &s in support {
            v = linalg::kron(&v, &r.rotations.matrix(s));
        }
        rho = linalg::matmul(&linalg::matmul(&v, &rho), &linalg::adjoint(&v));
    }
    Ok(linalg::hermitian_part(&rho))
}

pub fn rage_reduced_density_mps(r: &RageState, support: &[usize]) -> Result<CMatrix> {
    if !matches!(r.backbone, Backbone::Mps(_)) {
        return Err(Error::InvalidArgument("expected an MPS backbone".into()));
    }
    rage_reduced_density(r, support)
}

pub fn rage_reduced_density_tts(r: &RageState, support: &[usize]) -> Result<CMatrix> {
    if !matches!(r.backbone, Backbone::Tts(_)) {
        return Err(Error::InvalidArgument("expected a TTS backbone".into()));
    }
    rage_reduced_density(r, support)
}

fn touching<'a>(ops: &'a [ProductOperator], sites: &[usize]) -> Vec<ProductOperator> {
    ops.iter().filter(|o| sites.iter().any(|&s| o.factors[s].is_some())).cloned().collect()
}

fn real_energy(r: &RageState, ops: &[ProductOperator]) -> Result<f64> {
    Ok(rage_expectation_components(r, ops)?.re)
}

/// Local update of one backbone tensor (site or tree node); returns the new energy.
pub fn rage_optimize_tensor(r: &RageState, index: usize, h: &HamiltonianSum) -> Result<(RageState, f64)> {
    let ops = h.product_operators();
    let current = real_energy(r, &ops)?;
    let comps = dress_all(r, &ops)?;
    let mut out = r.clone();
    let solve = |hm: &CMatrix, metric: &CMatrix| linalg::solve_generalized_eig_min(hm, metric, linalg::METRIC_CUTOFF);
    let sol = match &r.backbone {
        Backbone::Mps(m) => {
            if index >= m.n_sites() {
                return Err(Error::InvalidArgument("site out of range".into()));
            }
            let m = if m.boundary() == Boundary::Open { mps_canonicalize_open(m, index)? } else { m.clone() };
            let (hm, metric) = effective_pair_components(&m, index, &comps);
            let sol = solve(&hm, &metric);
            out.backbone = Backbone::Mps(m);
            sol
        }
        Backbone::Tts(t) => {
            if index >= t.topology().n_nodes() {
                return Err(Error::InvalidArgument("vertex out of range".into()));
            }
            let t = tts_canonicalize(t, index)?;
            let (hm, metric) = TreeEnvs::new(&comps).effective_pair(&t, index);
            let sol = solve(&hm, &metric);
            out.backbone = Backbone::Tts(t);
            sol
        }
    };
    let sol = match sol {
        Ok(s) => s,
        Err(Error::DegenerateMetric) => {
            log::warn!("degenerate metric at backbone index {index}, update skipped");
            return Ok((r.clone(), current));
        }
        Err(e) => return Err(e),
    };
    if sol.eigenvalue > current + ACCEPT_SLACK * current.abs().max(1.0) {
        return Ok((r.clone(), current));
    }
    match &mut out.backbone {
        Backbone::Mps(m) => {
            let shape = m.site(index).shape().to_vec();
            m.set_site(index, DenseTensor::new(shape, sol.eigenvector)?)?;
            m.normalize();
        }
        Backbone::Tts(t) => {
            let shape = t.tensor(index).shape().to_vec();
            let mut tensors = t.tensors().to_vec();
            tensors[index] = DenseTensor::new(shape, sol.eigenvector)?;
            let mut nt = TtsState::new(t.topology().clone(), t.local_dim(), tensors)?;
            nt.normalize();
            *t = nt;
        }
    }
    Ok((out, sol.eigenvalue))
}

/// One full backbone sweep against the dressed Hamiltonian.
fn sweep_tensors(r: &RageState, ops: &[ProductOperator], trace: &mut Vec<f64>) -> Result<RageState> {
    let comps = dress_all(r, ops)?;
    let opts = SweepOptions { max_sweeps: 1, ..Default::default() };
    let mut out = r.clone();
    match &r.backbone {
        Backbone::Mps(m) => {
            let res = sweep_minimize_components(m, &comps, &opts)?;
            trace.extend_from_slice(&res.energy_trace[1..]);
            out.backbone = Backbone::Mps(res.state);
        }
        Backbone::Tts(t) => {
            let res = tts_sweep_minimize_components(t, &comps, &opts)?;
            trace.extend_from_slice(&res.energy_trace[1..]);
            out.backbone = Backbone::Tts(res.state);
        }
    }
    Ok(out)
}

/// Optimal rotation at `site` with everything else fixed; returns the new energy.
///
/// The energy is `xᵀ M x` in the rotation parameters, so `M` is read off ten
/// probes and minimized over the unit sphere.
pub fn rage_optimize_rotation(r: &RageState, site: usize, h: &HamiltonianSum) -> Result<(RageState, f64)> {
    let ops = h.product_operators();
    let current = real_energy(r, &ops)?;
    optimize_rotation_ops(r, site, &ops, current)
}

fn optimize_rotation_ops(r: &RageState, site: usize, ops: &[ProductOperator], current: f64) -> Result<(RageState, f64)> {
    if r.local_dim() != 2 {
        return Err(Error::InvalidArgument("rotations are defined for qubits only".into()));
    }
    if site >= r.n_sites() {
        return Err(Error::InvalidArgument("site out of range".into()));
    }
    let local = touching(ops, &[site]);
    if local.is_empty() {
        return Ok((r.clone(), current));
    }
    let mut probe = r.clone();
    let mut f = |x: [f64; 4]| -> Result<f64> {
        probe.rotations.set_params(site, x);
        real_energy(&probe, &local)
    };
    let old = r.rotations.params(site);
    let f_old = f(old)?;
    let rest = current - f_old;
    let unit = |i: usize| {
        let mut e = [0.0; 4];
        e[i] = 1.0;
        e
    };
    let mut m = RMatrix::zeros(4, 4);
    for i in 0..4 {
        m[(i, i)] = f(unit(i))?;
    }
    for i in 0..4 {
        for j in i + 1..4 {
            let mut x = [0.0; 4];
            x[i] = 1.0;
            x[j] = 1.0;
            let v = f(x)? * 2.0 - m[(i, i)] - m[(j, j)];
            m[(i, j)] = v / 2.0;
            m[(j, i)] = v / 2.0;
        }
    }
    let (vals, vecs) = linalg::eigh_real(&m)?;
    let mut x = [vecs[(0, 0)], vecs[(1, 0)], vecs[(2, 0)], vecs[(3, 0)]];
    if x.iter().zip(&old).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
        x = x.map(|c| -c);
    }
    let new = rest + vals[0];
    if new > current + ACCEPT_SLACK * current.abs().max(1.0) {
        return Ok((r.clone(), current));
    }
    let mut out = r.clone();
    out.rotations.set_params(site, x);
    Ok((out, new))
}

/// `E(φ_ab) = A + B cos φ_ab + Γ sin φ_ab` with everything else fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseOptimizationCoefficients {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
}

impl PhaseOptimizationCoefficients {
    pub fn energy(&self, phi: f64) -> f64 {
        self.a + self.b * phi.cos() + self.gamma * phi.sin()
    }

    /// Minimizer in `[0, 2π)`; `None` when the energy does not depend on the angle.
    pub fn argmin(&self) -> Option<f64> {
        if self.b == 0.0 && self.gamma == 0.0 {
            return None;
        }
        Some((-self.gamma).atan2(-self.b).rem_euclid(2.0 * PI))
    }
}

/// Angle at which the coefficient model is checked against a direct evaluation.
pub const PHASE_VALIDATION_ANGLE: f64 = 1.0;

pub fn rage_phase_coefficients(r: &RageState, pair: (usize, usize), h: &HamiltonianSum) -> Result<PhaseOptimizationCoefficients> {
    let ops = h.product_operators();
    let current = real_energy(r, &ops)?;
    phase_coefficients_ops(r, pair, &ops, current)
}

fn phase_coefficients_ops(
    r: &RageState,
    (a, b): (usize, usize),
    ops: &[ProductOperator],
    current: f64,
) -> Result<PhaseOptimizationCoefficients> {
    if r.local_dim() != 2 {
        return Err(Error::InvalidArgument("phase coefficients are defined for qubits only".into()));
    }
    if a == b || a >= r.n_sites() || b >= r.n_sites() {
        return Err(Error::InvalidArgument(format!("bad pair ({a}, {b})")));
    }
    let local = touching(ops, &[a, b]);
    if local.is_empty() {
        return Ok(PhaseOptimizationCoefficients { a: current, b: 0.0, gamma: 0.0 });
    }
    let mut probe = r.clone();
    let mut f = |phi: f64| -> Result<f64> {
        probe.phases.set(a, b, phi);
        real_energy(&probe, &local)
    };
    let f_cur = f(r.phases.get(a, b))?;
    let rest = current - f_cur;
    let (f0, f1, f2) = (f(0.0)?, f(FRAC_PI_2)?, f(PI)?);
    let aa = (f0 + f2) / 2.0;
    let c = PhaseOptimizationCoefficients { a: aa + rest, b: (f0 - f2) / 2.0, gamma: f1 - aa };
    let check = f(PHASE_VALIDATION_ANGLE)? + rest;
    let dev = (check - c.energy(PHASE_VALIDATION_ANGLE)).abs();
    if dev > 1e-9 * check.abs().max(1.0) {
        return Err(Error::PhaseModel(dev));
    }
    Ok(c)
}

pub fn rage_optimize_phase(r: &RageState, pair: (usize, usize), h: &HamiltonianSum) -> Result<(RageState, f64)> {
    let ops = h.product_operators();
    let current = real_energy(r, &ops)?;
    optimize_phase_ops(r, pair, &ops, current)
}

fn optimize_phase_ops(r: &RageState, (a, b): (usize, usize), ops: &[ProductOperator], current: f64) -> Result<(RageState, f64)> {
    let c = phase_coefficients_ops(r, (a, b), ops, current)?;
    let Some(phi) = c.argmin() else {
        return Ok((r.clone(), current));
    };
    let new = c.energy(phi);
    if new > current + ACCEPT_SLACK * current.abs().max(1.0) {
        return Ok((r.clone(), current));
    }
    let mut out = r.clone();
    out.phases.set(a, b, phi);
    Ok((out, new))
}

/// Which parameter families an alternating round updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub tensors: bool,
    pub rotations: bool,
    pub phases: bool,
}

impl Schedule {
    pub const ALL: Schedule = Schedule { tensors: true, rotations: true, phases: true };
    pub const FIXED_PHASES: Schedule = Schedule { tensors: true, rotations: true, phases: false };
    pub const TENSORS_ONLY: Schedule = Schedule { tensors: true, rotations: false, phases: false };
    pub const NONE: Schedule = Schedule { tensors: false, rotations: false, phases: false };

    pub fn is_empty(&self) -> bool {
        !(self.tensors || self.rotations || self.phases)
    }
}

#[derive(Clone, Debug)]
pub struct AlternatingOptions {
    pub schedule: Schedule,
    pub rel_tol: f64,
    pub max_rounds: usize,
    /// Finite-difference refinement over phases and rotations after a stall.
    pub gradient: bool,
    pub fd_step: f64,
    pub stall_window: usize,
    pub stall_tol: f64,
}

impl Default for AlternatingOptions {
    fn default() -> Self {
        Self {
            schedule: Schedule::ALL,
            rel_tol: 1e-10,
            max_rounds: 50,
            gradient: true,
            fd_step: 1e-6,
            stall_window: 5,
            stall_tol: 1e-7,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Timing {
    pub tensors: Duration,
    pub rotations: Duration,
    pub phases: Duration,
    pub gradient: Duration,
}

#[derive(Clone, Debug)]
pub struct AlternatingResult {
    pub state: RageState,
    /// Energy at the start and after every single update.
    pub energy_trace: Vec<f64>,
    /// Energy at the end of each round.
    pub round_energies: Vec<f64>,
    pub timing: Timing,
    pub converged: bool,
    pub stalled: bool,
}

pub fn rage_alternating_minimize(r: &RageState, h: &HamiltonianSum, opts: &AlternatingOptions) -> Result<AlternatingResult> {
    if h.n_sites() != r.n_sites() || r.local_dim() != 2 {
        return Err(Error::DimensionMismatch("Hamiltonian does not act on this state".into()));
    }
    alternating_minimize_ops(r, &h.product_operators(), opts)
}

/// Alternating minimization of `Σ ops`; phases and rotations are only updated for qubits.
pub fn alternating_minimize_ops(r: &RageState, ops: &[ProductOperator], opts: &AlternatingOptions) -> Result<AlternatingResult> {
    let mut state = r.clone();
    let mut energy = real_energy(&state, ops)?;
    let mut trace = vec![energy];
    let mut rounds = Vec::new();
    let mut timing = Timing::default();
    let mut converged = false;
    let mut stalled = false;
    if opts.schedule.is_empty() {
        return Ok(AlternatingResult { state, energy_trace: trace, round_energies: rounds, timing, converged: true, stalled });
    }
    let n = state.n_sites();
    let qubit = state.local_dim() == 2;
    let mut gradient_tried = false;
    let mut last = energy;
    for _ in 0..opts.max_rounds {
        if opts.schedule.tensors {
            let t0 = Instant::now();
            let before = trace.len();
            state = sweep_tensors(&state, ops, &mut trace)?;
            if trace.len() > before {
                energy = *trace.last().unwrap();
            }
            timing.tensors += t0.elapsed();
        }
        if opts.schedule.rotations && qubit {
            let t0 = Instant::now();
            for k in 0..n {
                let (s, e) = optimize_rotation_ops(&state, k, ops, energy)?;
                state = s;
                energy = e;
                trace.push(energy);
            }
            timing.rotations += t0.elapsed();
        }
        if opts.schedule.phases && qubit {
            let t0 = Instant::now();
            for a in 0..n {
                for b in a + 1..n {
                    let (s, e) = optimize_phase_ops(&state, (a, b), ops, energy)?;
                    state = s;
                    energy = e;
                    trace.push(energy);
                }
            }
            timing.phases += t0.elapsed();
        }
        rounds.push(energy);
        let scale = energy.abs().max(f64::MIN_POSITIVE);
        let flat = (last - energy).abs() <= opts.rel_tol * scale;
        let w = opts.stall_window;
        let stall = rounds.len() > w && rounds[rounds.len() - 1 - w] - energy <= opts.stall_tol * scale;
        last = energy;
        if flat || stall {
            stalled = stall && !flat;
            let refine = opts.gradient && qubit && (opts.schedule.phases || opts.schedule.rotations) && !gradient_tried;
            if refine {
                gradient_tried = true;
                let t0 = Instant::now();
                let (s, e) = gradient_pass(&state, ops, energy, &opts.schedule, opts.fd_step)?;
                timing.gradient += t0.elapsed();
                let improved = energy - e > opts.rel_tol * scale;
                state = s;
                energy = e;
                trace.push(energy);
                last = energy;
                if improved {
                    continue;
                }
            }
            converged = flat;
            break;
        }
    }
    if stalled {
        log::warn!("alternating minimization stalled at energy {energy}");
    }
    Ok(AlternatingResult { state, energy_trace: trace, round_energies: rounds, timing, converged, stalled })
}

fn get_params(r: &RageState, s: &Schedule) -> Vec<f64> {
    let n = r.n_sites();
    let mut p = Vec::new();
    if s.phases {
        for a in 0..n {
            for b in a + 1..n {
                p.push(r.phases.get(a, b));
            }
        }
    }
    if s.rotations {
        for k in 0..n {
            p.extend_from_slice(&r.rotations.params(k));
        }
    }
    p
}

fn set_params(r: &mut RageState, s: &Schedule, p: &[f64]) {
    let n = r.n_sites();
    let mut i = 0;
    if s.phases {
        for a in 0..n {
            for b in a + 1..n {
                r.phases.set(a, b, p[i]);
                i += 1;
            }
        }
    }
    if s.rotations {
        for k in 0..n {
            r.rotations.set_params(k, [p[i], p[i + 1], p[i + 2], p[i + 3]]);
            i += 4;
        }
    }
}

/// Forward-difference gradient step with backtracking over phases and rotations.
fn gradient_pass(r: &RageState, ops: &[ProductOperator], energy: f64, schedule: &Schedule, step: f64) -> Result<(RageState, f64)> {
    let s = Schedule { tensors: false, ..*schedule };
    let p0 = get_params(r, &s);
    if p0.is_empty() {
        return Ok((r.clone(), energy));
    }
    let mut probe = r.clone();
    let mut grad = vec![0.0; p0.len()];
    for i in 0..p0.len() {
        let mut p = p0.clone();
        p[i] += step;
        set_params(&mut probe, &s, &p);
        grad[i] = (real_energy(&probe, ops)? - energy) / step;
    }
    let gmax = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if gmax == 0.0 {
        return Ok((r.clone(), energy));
    }
    let mut t = 0.5 / gmax;
    for _ in 0..30 {
        let p: Vec<f64> = p0.iter().zip(&grad).map(|(x, g)| x - t * g).collect();
        set_params(&mut probe, &s, &p);
        let e = real_energy(&probe, ops)?;
        if e < energy {
            return Ok((probe, e));
        }
        t /= 2.0;
    }
    Ok((r.clone(), energy))
}

/// Best of `restarts` alternating runs from seeded initial states.
pub fn rage_multistart(
    init: impl Fn(&mut Rng) -> RageState,
    h: &HamiltonianSum,
    opts: &AlternatingOptions,
    restarts: usize,
    seed: u64,
) -> Result<AlternatingResult> {
    let mut best: Option<AlternatingResult> = None;
    for k in 0..restarts.max(1) {
        let mut rng = crate::rng::seeded(seed.wrapping_add(k as u64));
        let res = rage_alternating_minimize(&init(&mut rng), h, opts)?;
        let better = match &best {
            Some(b) => res.energy_trace.last() < b.energy_trace.last(),
            None => true,
        };
        if better {
            best = Some(res);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Matrix product operator on an open chain, tensors `(Dl, out, in, Dr)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixProductOperator {
    pub tensors: Vec<DenseTensor>,
}

impl MatrixProductOperator {
    /// Sum of product operators with block-diagonal bonds.
    pub fn from_components(comps: &[ProductOperator], q: usize) -> Result<Self> {
        let k = comps.len();
        let n = comps.first().ok_or_else(|| Error::InvalidArgument("empty operator sum".into()))?.n_sites();
        let mut tensors = Vec::with_capacity(n);
        for j in 0..n {
            let dl = if j == 0 { 1 } else { k };
            let dr = if j == n - 1 { 1 } else { k };
            let mut t = DenseTensor::zeros(&[dl, q, q, dr]);
            for (c, comp) in comps.iter().enumerate() {
                let f = comp.factor(j, q);
                let w = if j == 0 { comp.coeff } else { ONE };
                let (l, r) = (if j == 0 { 0 } else { c }, if j == n - 1 { 0 } else { c });
                for o in 0..q {
                    for i in 0..q {
                        let v = t.get(&[l, o, i, r]) + w * f[(o, i)];
                        t.set(&[l, o, i, r], v);
                    }
                }
            }
            tensors.push(t);
        }
        Ok(Self { tensors })
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors.iter().take(self.tensors.len().saturating_sub(1)).map(|t| t.shape()[3]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Exact compression: drops singular values below `tol` times the largest on each bond.
    pub fn compress(&self, tol: f64) -> Result<Self> {
        let n = self.tensors.len();
        let mut t = self.tensors.clone();
        for j in 0..n.saturating_sub(1) {
            let sh = t[j].shape().to_vec();
            let (qm, r) = linalg::qr_reduce(&t[j].to_matrix(3));
            let k = qm.ncols();
            t[j] = DenseTensor::from_matrix(&qm, &[sh[0], sh[1], sh[2], k])?;
            t[j + 1] = t[j + 1].apply_to_leg(0, &r);
        }
        for j in (1..n).rev() {
            let sh = t[j].shape().to_vec();
            let m = t[j].to_matrix(1);
            let full = linalg::truncated_svd(&m, m.nrows().min(m.ncols()))?;
            let top = full.s.first().copied().unwrap_or(0.0);
            let keep = full.s.iter().filter(|&&s| s > tol * top).count().max(1);
            let svd = linalg::truncated_svd(&m, keep)?;
            t[j] = DenseTensor::from_matrix(&svd.v, &[keep, sh[1], sh[2], sh[3]])?;
            let us = CMatrix::from_fn(svd.u.nrows(), keep, |a, b| svd.u[(a, b)] * svd.s[b]);
            t[j - 1] = t[j - 1].apply_to_leg(3, &linalg::transpose(&us));
        }
        Ok(Self { tensors: t })
    }

    /// Dense `q^N × q^N` matrix, site 0 most significant.
    pub fn to_dense(&self) -> CMatrix {
        let mut acc = self.tensors[0].clone();
        for t in &self.tensors[1..] {
            let r = acc.rank();
            acc = contract(&acc, t, &[(r - 1, 0)]).expect("bond");
        }
        let n = self.tensors.len();
        let q = self.tensors[0].shape()[1];
        // Legs: 1, o0, i0, o1, i1, ..., 1.
        let mut perm: Vec<usize> = (0..n).map(|j| 1 + 2 * j).collect();
        perm.extend((0..n).map(|j| 2 + 2 * j));
        perm.insert(0, 0);
        perm.push(2 * n + 1);
        let p = acc.permute(&perm);
        let dim = q.pow(n as u32);
        DenseTensor::from_fn(&[dim, dim], |i| p.data()[i[0] * dim + i[1]]).to_matrix(1)
    }

    /// `⟨m| O |m⟩ / ⟨m|m⟩` on an open chain.
    pub fn expectation(&self, m: &MpsState) -> Result<C64> {
        if m.boundary() != Boundary::Open || m.n_sites() != self.tensors.len() {
            return Err(Error::InvalidArgument("operator needs an open chain of matching length".into()));
        }
        let mut env = DenseTensor::new(vec![1, 1, 1], vec![ONE])?;
        for (j, w) in self.tensors.iter().enumerate() {
            let a = m.site(j);
            // env [k, w, b] · A[k, s, k'] → [w, b, s, k']
            let x = contract(&env, a, &[(0, 0)])?;
            // · W[w, r, s, w'] over (w, s) → [b, k', r, w']
            let x = contract(&x, w, &[(0, 0), (2, 2)])?;
            // · conj(A)[b, r, b'] over (b, r) → [k', w', b']
            env = contract(&x, &a.conj(), &[(0, 0), (2, 1)])?;
        }
        let norm = crate::mps::mps_norm_squared(m);
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(env.data()[0] / norm)
    }
}

/// `(V W)† p (V W)` as a compressed matrix product operator.
pub fn pauli_conjugate_through_phases(
    p: &PauliString,
    phases: &AdjacencyPhases,
    rotations: &LocalRotations,
) -> Result<MatrixProductOperator> {
    if phases.local_dim() != 2 {
        return Err(Error::InvalidArgument("qubit phases expected".into()));
    }
    let supp = p.support();
    if supp.len() > 2 {
        return Err(Error::UnsupportedSupport(format!("Pauli string of weight {}", supp.len())));
    }
    let comps = dress_operator(&p.product_operator(), phases, rotations)?;
    if comps.is_empty() {
        let mut zero = ProductOperator::identity(p.letters().len());
        zero.coeff = ZERO;
        return MatrixProductOperator::from_components(&[zero], 2);
    }
    MatrixProductOperator::from_components(&comps, 2)?.compress(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{disturbed_graph_hamiltonian, graph_hamiltonian, ising_2d, Pauli};
    use crate::mps::mps_reduced_density;
    use crate::oracle::{dense_hamiltonian, exact_expectation, exact_ground_state, partial_trace};
    use crate::rng::seeded;
    use crate::tts::subcubic_tree;
    use crate::wgs::graph_state_phases;

    fn random_mps_rage(n: usize, d: usize, seed: u64) -> RageState {
        let mut rng = seeded(seed);
        let m = MpsState::random(Boundary::Open, n, 2, d, &mut rng);
        let ph = AdjacencyPhases::random_qubit(n, &mut rng);
        let rot = LocalRotations::random(n, &mut rng);
        RageState::new(Backbone::Mps(m), ph, rot).unwrap()
    }

    fn plus(n: usize) -> Backbone {
        let h = 1.0 / 2f64.sqrt();
        Backbone::Mps(MpsState::product(&vec![vec![C64::new(h, 0.0); 2]; n]).unwrap())
    }

    #[test]
    fn reduced_density_matches_oracle() {
        let r = random_mps_rage(8, 2, 1);
        let v = r.expand().unwrap();
        for s in [vec![3usize, 6], vec![0], vec![7, 2, 4]] {
            let a = rage_reduced_density(&r, &s).unwrap();
            let b = partial_trace(&v, &s).unwrap();
            assert!(linalg::distance(&a, &b) < 1e-9, "{s:?}");
        }
        let bare = RageState::bare(r.backbone.clone());
        let Backbone::Mps(m) = &bare.backbone else { unreachable!() };
        let a = rage_reduced_density(&bare, &[2, 5]).unwrap();
        assert!(linalg::distance(&a, &mps_reduced_density(m, &[2, 5]).unwrap()) < 1e-12);

        let mut ph = AdjacencyPhases::qubit_zeros(2);
        ph.set(0, 1, PI);
        let g = RageState::new(plus(2), ph, LocalRotations::identity(2)).unwrap();
        let rho = rage_reduced_density(&g, &[0]).unwrap();
        assert!(linalg::distance(&rho, &linalg::scale(&linalg::identity(2), C64::new(0.5, 0.0))) < 1e-12);
    }

    #[test]
    fn qudit_tts_density() {
        let mut rng = seeded(2);
        let t = TtsState::random(subcubic_tree(4, 3).unwrap(), 3, &mut rng);
        let ph = AdjacencyPhases::random_qudit(4, 3, &mut rng);
        let r = RageState::new(Backbone::Tts(t), ph, LocalRotations::identity(4)).unwrap();
        let v = r.expand().unwrap();
        for s in [vec![0usize, 3], vec![2, 1]] {
            let a = rage_reduced_density_tts(&r, &s).unwrap();
            assert!(linalg::distance(&a, &partial_trace(&v, &s).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn expectation_matches_oracle() {
        let h = ising_2d(3, 3, 1.0, 0.7, false);
        let r = random_mps_rage(9, 2, 3);
        let want = exact_expectation(&r.expand().unwrap(), &h).unwrap();
        assert!((rage_expectation(&r, &h).unwrap() - want).abs() < 1e-9);
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0)];
        let g = RageState::new(plus(4), graph_state_phases(4, &edges).unwrap(), LocalRotations::identity(4)).unwrap();
        assert!((rage_expectation(&g, &graph_hamiltonian(4, &edges).unwrap()).unwrap() + 4.0).abs() < 1e-12);
        assert!((rage_expectation(&r, &HamiltonianSum::identity(9)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_update() {
        let n = 1;
        let h = HamiltonianSum::new(n, vec![PauliString::new(n, &[(0, Pauli::Z)], 1.0)]).unwrap();
        let r = RageState::bare(plus(1));
        let (r2, e) = rage_optimize_rotation(&r, 0, &h).unwrap();
        assert!((e + 1.0).abs() < 1e-12);
        assert!((rage_expectation(&r2, &h).unwrap() + 1.0).abs() < 1e-12);
        for seed in 0..10 {
            let r = random_mps_rage(4, 2, 100 + seed);
            let h = ising_2d(2, 2, 1.0, 0.5, false);
            let e0 = rage_expectation(&r, &h).unwrap();
            let (r2, e) = rage_optimize_rotation(&r, (seed % 4) as usize, &h).unwrap();
            assert!(e <= e0 + 1e-10);
            assert!((rage_expectation(&r2, &h).unwrap() - e).abs() < 1e-9);
        }
    }

    #[test]
    fn phase_coefficients() {
        let h = HamiltonianSum::new(2, vec![PauliString::new(2, &[(0, Pauli::X)], 1.0)]).unwrap();
        let r = RageState::bare(plus(2));
        let c = rage_phase_coefficients(&r, (0, 1), &h).unwrap();
        assert!((c.a - 0.5).abs() < 1e-12 && (c.b - 0.5).abs() < 1e-12 && c.gamma.abs() < 1e-12);
        let (r2, e) = rage_optimize_phase(&r, (0, 1), &h).unwrap();
        assert!((e - 0.0).abs() < 1e-12);
        assert!((r2.phases.get(0, 1) - PI).abs() < 1e-12);

        let r = random_mps_rage(5, 2, 7);
        let h = ising_2d(1, 5, 1.0, 0.8, false);
        let c = rage_phase_coefficients(&r, (1, 3), &h).unwrap();
        let mut probe = r.clone();
        for k in 0..25 {
            let phi = 0.25 * k as f64;
            probe.phases.set(1, 3, phi);
            assert!((rage_expectation(&probe, &h).unwrap() - c.energy(phi)).abs() < 1e-9);
        }
        let far = HamiltonianSum::new(5, vec![PauliString::new(5, &[(4, Pauli::X)], 1.0)]).unwrap();
        let c = rage_phase_coefficients(&r, (0, 1), &far).unwrap();
        assert_eq!((c.b, c.gamma), (0.0, 0.0));
    }

    #[test]
    fn alternating_reaches_ground_state() {
        let edges = [(0, 1)];
        let h = disturbed_graph_hamiltonian(2, &edges, &[0.3, -0.2]).unwrap();
        let exact = exact_ground_state(&h).unwrap().energy;
        let best = rage_multistart(
            |rng| {
                let m = MpsState::random(Boundary::Open, 2, 2, 2, rng);
                RageState::new(Backbone::Mps(m), AdjacencyPhases::random_qubit(2, rng), LocalRotations::random(2, rng)).unwrap()
            },
            &h,
            &AlternatingOptions::default(),
            3,
            11,
        )
        .unwrap();
        assert!((best.energy_trace.last().unwrap() - exact).abs() < 1e-8);
        for w in best.energy_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
        let r = random_mps_rage(3, 2, 5);
        let res = rage_alternating_minimize(
            &r,
            &ising_2d(1, 3, 1.0, 1.0, false),
            &AlternatingOptions { schedule: Schedule::NONE, ..Default::default() },
        )
        .unwrap();
        assert_eq!(res.state, r);
    }

    #[test]
    fn conjugation_mpo() {
        let n = 5;
        let mut ph = AdjacencyPhases::qubit_zeros(n);
        ph.set(1, 3, PI);
        let id = LocalRotations::identity(n);
        let x1 = PauliString::new(n, &[(1, Pauli::X)], 1.0);
        let mpo = pauli_conjugate_through_phases(&x1, &ph, &id).unwrap();
        let want = dense_hamiltonian(
            &HamiltonianSum::new(n, vec![PauliString::new(n, &[(1, Pauli::X), (3, Pauli::Z)], 1.0)]).unwrap(),
        )
        .unwrap();
        assert!(linalg::distance(&mpo.to_dense(), &want) < 1e-10);
        let z = PauliString::new(n, &[(2, Pauli::Z)], 1.0);
        let mz = pauli_conjugate_through_phases(&z, &ph, &id).unwrap();
        assert_eq!(mz.max_bond(), 1);

        let mut rng = seeded(9);
        let ph = AdjacencyPhases::random_qubit(n, &mut rng);
        let m = MpsState::random(Boundary::Open, n, 2, 3, &mut rng);
        let r = RageState::new(Backbone::Mps(m.clone()), ph.clone(), id.clone()).unwrap();
        for p in [
            PauliString::new(n, &[(2, Pauli::X)], 1.0),
            PauliString::new(n, &[(0, Pauli::Y), (4, Pauli::X)], 1.0),
        ] {
            let mpo = pauli_conjugate_through_phases(&p, &ph, &id).unwrap();
            assert!(mpo.max_bond() <= 4);
            let hs = HamiltonianSum::new(n, vec![p.clone()]).unwrap();
            let want = exact_expectation(&r.expand().unwrap(), &hs).unwrap();
            assert!((mpo.expectation(&m).unwrap().re - want).abs() < 1e-9);
        }
    }
}
