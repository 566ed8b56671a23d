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

//! Gate circuits on graph-enhanced states.
//!
//! Controlled phases only touch the adjacency phases. Diagonal single-qubit
//! gates commute with the phase layer and go straight into the backbone.
//! Every other single-qubit gate is pulled through the phase layer, which
//! turns the new backbone into a short sum of product operators applied to
//! the old one; that sum is then fitted back to the fixed bond dimension.

use std::f64::consts::{PI, TAU};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::hamiltonians::{HamiltonianSum, Pauli};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::mps::{compress, direct_sum, fit_mps, mps_norm_squared, transfer_value, Boundary, MpsState};
use crate::operators::{elementary, is_diagonal, ProductOperator};
use crate::oracle::{fidelity, Expand, StateVector};
use crate::rage::{dress_operator, Backbone, RageState};
use crate::rng::{seeded, Rng};
use crate::wgs::{rotation_matrix, rotation_params_of, AdjacencyPhases, LocalRotations};

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    SingleQubit { site: usize, matrix: CMatrix },
    ControlledPhase { a: usize, b: usize, angle: f64 },
}

impl Gate {
    pub fn single(site: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != 2 || matrix.ncols() != 2 {
            return Err(Error::Shape("single-qubit gates are 2×2".into()));
        }
        let u = linalg::matmul(&linalg::adjoint(&matrix), &matrix);
        if linalg::distance(&u, &linalg::identity(2)) > 1e-12 {
            return Err(Error::InvalidArgument("gate is not unitary".into()));
        }
        Ok(Gate::SingleQubit { site, matrix })
    }

    pub fn controlled_phase(a: usize, b: usize, angle: f64) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidArgument("controlled phase needs two distinct sites".into()));
        }
        Ok(Gate::ControlledPhase { a, b, angle: angle.rem_euclid(TAU) })
    }

    pub fn sites(&self) -> Vec<usize> {
        match self {
            Gate::SingleQubit { site, .. } => vec![*site],
            Gate::ControlledPhase { a, b, .. } => vec![*a, *b],
        }
    }

    pub fn is_diagonal(&self) -> bool {
        match self {
            Gate::SingleQubit { matrix, .. } => is_diagonal(matrix),
            Gate::ControlledPhase { .. } => true,
        }
    }

    /// Dense action on a state vector.
    pub fn apply_dense(&self, v: &StateVector) -> Result<StateVector> {
        match self {
            Gate::SingleQubit { site, matrix } => v.apply_local(matrix, &[*site]),
            Gate::ControlledPhase { a, b, angle } => {
                let d = linalg::diag(&[ONE, ONE, ONE, C64::from_polar(1.0, *angle)]);
                v.apply_local(&d, &[*a, *b])
            }
        }
    }
}

pub fn hadamard() -> CMatrix {
    let h = 1.0 / 2f64.sqrt();
    linalg::from_rows(2, 2, &[C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)])
}

/// `diag(1, e^{iθ})`.
pub fn phase_gate(theta: f64) -> CMatrix {
    linalg::diag(&[ONE, C64::from_polar(1.0, theta)])
}

/// `e^{-iθ X / 2}`.
pub fn rx(theta: f64) -> CMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    linalg::from_rows(2, 2, &[C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0)])
}

/// `e^{-iθ P}` for a single Pauli letter.
fn pauli_exp(p: Pauli, theta: f64) -> CMatrix {
    let c = C64::new(theta.cos(), 0.0);
    let s = C64::new(0.0, -theta.sin());
    linalg::add(&linalg::scale(&linalg::identity(2), c), &linalg::scale(&p.matrix(), s))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_sites: usize,
    pub gates: Vec<Gate>,
    pub seed: Option<u64>,
}

impl Circuit {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites, gates: Vec::new(), seed: None }
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        if g.sites().iter().any(|&s| s >= self.n_sites) {
            return Err(Error::InvalidArgument(format!("gate outside {} sites", self.n_sites)));
        }
        self.gates.push(g);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn apply_dense(&self, v: &StateVector) -> Result<StateVector> {
        let mut out = v.clone();
        for g in &self.gates {
            out = g.apply_dense(&out)?;
        }
        Ok(out)
    }

    /// Dense unitary, column `k` is the image of basis state `k`.
    pub fn unitary(&self) -> Result<CMatrix> {
        let dim = crate::oracle::checked_dim(self.n_sites, 2)?;
        let mut u = linalg::zeros(dim, dim);
        for k in 0..dim {
            let v = self.apply_dense(&StateVector::basis(self.n_sites, 2, k)?)?;
            for (i, a) in v.amplitudes().iter().enumerate() {
                u[(i, k)] = *a;
            }
        }
        Ok(u)
    }
}

/// Blocks of one `R_x` gate at a random site with a uniform angle, then one
/// controlled phase on a random pair with a uniform angle.
pub fn random_circuit(n_sites: usize, n_blocks: usize, seed: u64) -> Result<Circuit> {
    if n_sites < 2 {
        return Err(Error::InvalidArgument("random circuits need at least two sites".into()));
    }
    if n_blocks == 0 {
        return Err(Error::InvalidArgument("at least one block".into()));
    }
    let mut rng = seeded(seed);
    let mut c = Circuit::new(n_sites);
    c.seed = Some(seed);
    for _ in 0..n_blocks {
        let site = rng.gen_range(0..n_sites);
        let theta = rng.gen_range(0.0..TAU);
        c.push(Gate::single(site, rx(theta))?)?;
        let a = rng.gen_range(0..n_sites);
        let mut b = rng.gen_range(0..n_sites - 1);
        if b >= a {
            b += 1;
        }
        let angle = rng.gen_range(0.0..TAU);
        c.push(Gate::controlled_phase(a.min(b), a.max(b), angle)?)?;
    }
    Ok(c)
}

/// Hadamards and controlled phases `π / 2^(j-i)`; the final swaps are left
/// out, so outputs come in bit-reversed order.
pub fn qft_circuit(n_sites: usize) -> Result<Circuit> {
    if n_sites == 0 {
        return Err(Error::InvalidArgument("at least one qubit".into()));
    }
    let mut c = Circuit::new(n_sites);
    for i in 0..n_sites {
        c.push(Gate::single(i, hadamard())?)?;
        for j in i + 1..n_sites {
            c.push(Gate::controlled_phase(i, j, PI / 2f64.powi((j - i) as i32))?)?;
        }
    }
    Ok(c)
}

/// First-order Trotter circuit for sums of one-site Pauli terms and `ZZ` pairs.
pub fn trotter_circuit(h: &HamiltonianSum, dt: f64, n_steps: usize) -> Result<Circuit> {
    let n = h.n_sites();
    let mut step = Vec::new();
    for t in h.terms() {
        if t.coeff().im != 0.0 {
            return Err(Error::InvalidArgument("complex term coefficient".into()));
        }
        let c = t.coeff().re;
        let theta = c * dt;
        let supp = t.support();
        match supp.as_slice() {
            [] => step.push(Gate::single(0, linalg::scale(&linalg::identity(2), C64::from_polar(1.0, -theta)))?),
            [a] => step.push(Gate::single(*a, pauli_exp(t.letter(*a), theta))?),
            [a, b] if t.letter(*a) == Pauli::Z && t.letter(*b) == Pauli::Z => {
                step.push(Gate::single(*a, pauli_exp(Pauli::Z, theta))?);
                step.push(Gate::single(*b, phase_gate(2.0 * theta))?);
                step.push(Gate::controlled_phase(*a, *b, -4.0 * theta)?);
            }
            _ => return Err(Error::InvalidArgument(format!("unsupported term {t}"))),
        }
    }
    let mut c = Circuit::new(n);
    if dt == 0.0 {
        return Ok(c);
    }
    for _ in 0..n_steps {
        for g in &step {
            c.push(g.clone())?;
        }
    }
    Ok(c)
}

/// `n_steps` equal fractional gates whose ordered product is `gate`.
///
/// The gate is split as `e^{iα} V(x)` with `α = arg(det)/2`; each step is
/// `e^{iα/n} exp(i θ/n · n̂·σ)` with `θ ∈ [0, π]` taken from `x₀ = cos θ`.
pub fn incremental_gate_schedule(gate: &Gate, n_steps: usize) -> Result<Vec<Gate>> {
    let Gate::SingleQubit { site, matrix } = gate else {
        return Err(Error::InvalidArgument("only single-qubit gates are split".into()));
    };
    if n_steps == 0 {
        return Err(Error::InvalidArgument("at least one step".into()));
    }
    let (alpha, x) = rotation_params_of(matrix);
    let theta = x[0].clamp(-1.0, 1.0).acos();
    let s = theta.sin();
    let axis = if s.abs() < 1e-300 { [0.0, 0.0, 0.0] } else { [x[1] / s, x[2] / s, x[3] / s] };
    let th = theta / n_steps as f64;
    let frac = rotation_matrix([th.cos(), th.sin() * axis[0], th.sin() * axis[1], th.sin() * axis[2]]);
    let frac = linalg::scale(&frac, C64::from_polar(1.0, alpha / n_steps as f64));
    Ok(vec![Gate::SingleQubit { site: *site, matrix: frac }; n_steps])
}

fn mps_backbone(r: &RageState) -> Result<&MpsState> {
    match &r.backbone {
        Backbone::Mps(m) if m.boundary() == Boundary::Open => Ok(m),
        _ => Err(Error::InvalidArgument("circuit updates need an open MPS backbone".into())),
    }
}

/// Exact: adds the angle to `φ_ab`.
pub fn apply_controlled_phase(r: &RageState, gate: &Gate) -> Result<RageState> {
    let Gate::ControlledPhase { a, b, angle } = gate else {
        return Err(Error::InvalidArgument("expected a controlled-phase gate".into()));
    };
    if r.local_dim() != 2 || *a >= r.n_sites() || *b >= r.n_sites() {
        return Err(Error::InvalidArgument("gate does not fit the state".into()));
    }
    if !r.rotations.is_diagonal_at(*a) || !r.rotations.is_diagonal_at(*b) {
        return Err(Error::InvalidArgument("non-diagonal rotation under a controlled phase".into()));
    }
    let mut out = r.clone();
    let cur = out.phases.get(*a, *b);
    out.phases.set(*a, *b, cur + angle);
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SingleQubitOptions {
    pub bond_dim: usize,
    pub sweeps: usize,
    /// Try one-row adjacency updates on the acted site.
    pub row_updates: bool,
}

impl Default for SingleQubitOptions {
    fn default() -> Self {
        Self { bond_dim: 2, sweeps: 2, row_updates: false }
    }
}

/// The gate's action expressed on the backbone frame of `phases`:
/// `W(phases)† · U · W(phases0) |A0⟩ = Σ_c comp_c |A0⟩`.
struct Target {
    a0: MpsState,
    phases0: AdjacencyPhases,
    comps0: Vec<ProductOperator>,
    site: usize,
    norm: f64,
}

impl Target {
    /// `g` acting on site `j` of `r`, whose rotation at `j` must already be folded into `g`.
    fn new(r: &RageState, j: usize, g: CMatrix) -> Result<Self> {
        let m = mps_backbone(r)?;
        let op = ProductOperator::identity(r.n_sites()).with_factor(j, g);
        let comps0 = dress_operator(&op, &r.phases, &LocalRotations::identity(r.n_sites()))?;
        Ok(Self { a0: m.clone(), phases0: r.phases.clone(), comps0, site: j, norm: mps_norm_squared(m) })
    }

    fn comps_in_frame(&self, phases: &AdjacencyPhases) -> Vec<ProductOperator> {
        let n = self.a0.n_sites();
        let j = self.site;
        let mut diff = Vec::new();
        for s in 0..2 {
            let mut p = ProductOperator::identity(n).with_factor(j, elementary(2, s, s));
            for k in 0..n {
                if k == j {
                    continue;
                }
                let d: Vec<f64> = (0..2).map(|y| self.phases0.entry(j, k, s, y) - phases.entry(j, k, s, y)).collect();
                if d.iter().any(|x| *x != 0.0) {
                    p.factors[k] = Some(linalg::diag(&[C64::from_polar(1.0, d[0]), C64::from_polar(1.0, d[1])]));
                }
            }
            diff.push(p);
        }
        let mut out = Vec::new();
        for d in &diff {
            for c in &self.comps0 {
                out.push(d.mul(c));
            }
        }
        out
    }

    fn mps_in_frame(&self, phases: &AdjacencyPhases) -> Result<MpsState> {
        let terms: Vec<(C64, MpsState)> = self
            .comps_in_frame(phases)
            .into_iter()
            .map(|c| {
                let mut m = self.a0.clone();
                for (k, f) in c.factors.iter().enumerate() {
                    if let Some(f) = f {
                        m.apply_site_operator(k, f);
                    }
                }
                (c.coeff, m)
            })
            .collect();
        direct_sum(&terms)
    }

    /// `|⟨T|W(phases) x⟩|² / (⟨T|T⟩⟨x|x⟩)`.
    fn fidelity(&self, phases: &AdjacencyPhases, x: &MpsState) -> Result<f64> {
        let mut ov = ZERO;
        for c in self.comps_in_frame(phases) {
            let adj = c.adjoint();
            ov += transfer_value(x, &self.a0, &adj)?;
        }
        Ok(ov.norm_sqr() / (self.norm * mps_norm_squared(x)))
    }
}

/// Best `a·1 + b·|11⟩⟨11|` correction on the pair `(j, k)` at fixed backbone.
///
/// Only the phase survives: `Δφ_jk = arg((a + b) / a)`. Accepted only if the
/// fidelity does not drop.
fn row_update(target: &Target, r: &RageState, x: &MpsState, k: usize, current: f64) -> Result<Option<(RageState, MpsState, f64)>> {
    let j = target.site;
    let n = x.n_sites();
    let nn_op = ProductOperator::identity(n).with_factor(j, elementary(2, 1, 1)).with_factor(k, elementary(2, 1, 1));
    let comps = target.comps_in_frame(&r.phases);
    let mut o = [ZERO; 2];
    for c in &comps {
        let adj = c.adjoint();
        o[0] += transfer_value(x, &target.a0, &adj)?;
        o[1] += transfer_value(x, &target.a0, &adj.mul(&nn_op))?;
    }
    let nx = mps_norm_squared(x);
    let cross = transfer_value(x, x, &nn_op)?.re;
    let metric = linalg::from_rows(2, 2, &[C64::new(nx, 0.0), C64::new(cross, 0.0), C64::new(cross, 0.0), C64::new(cross, 0.0)]);
    let w = linalg::from_rows(2, 1, &[o[0].conj(), o[1].conj()]);
    let (vals, vecs) = linalg::eigh(&metric)?;
    if vals[0] <= 1e-14 * vals[1].abs() {
        return Ok(None);
    }
    let inv = CMatrix::from_fn(2, 2, |a, b| (0..2).map(|i| vecs[(a, i)] * vecs[(b, i)].conj() / vals[i]).sum());
    let c = linalg::matmul(&inv, &w);
    let (a, b) = (c[(0, 0)], c[(1, 0)]);
    if a.norm() == 0.0 || (a + b).norm() == 0.0 {
        return Ok(None);
    }
    let delta = ((a + b) / a).arg();
    if delta.abs() < 1e-14 {
        return Ok(None);
    }
    let mut out = r.clone();
    let cur = out.phases.get(j, k);
    out.phases.set(j, k, cur + delta);
    let f = target.fidelity(&out.phases, x)?;
    if f + 1e-14 < current {
        return Ok(None);
    }
    Ok(Some((out, x.clone(), f)))
}

/// Variational single-qubit gate; returns the new state and `|⟨target|new⟩|²`
/// computed from the backbone overlaps alone.
pub fn apply_single_qubit_variational(r: &RageState, gate: &Gate, opts: &SingleQubitOptions) -> Result<(RageState, f64)> {
    let Gate::SingleQubit { site, matrix } = gate else {
        return Err(Error::InvalidArgument("expected a single-qubit gate".into()));
    };
    let j = *site;
    let m = mps_backbone(r)?;
    if r.local_dim() != 2 || j >= r.n_sites() {
        return Err(Error::InvalidArgument("gate does not fit the state".into()));
    }
    let mut out = r.clone();
    let g = linalg::matmul(matrix, &r.rotations.matrix(j));
    out.rotations.set_params(j, [1.0, 0.0, 0.0, 0.0]);
    if is_diagonal(&g) {
        let mut nm = m.clone();
        nm.apply_site_operator(j, &g);
        out.backbone = Backbone::Mps(nm);
        return Ok((out, 1.0));
    }
    let target = Target::new(&out, j, g)?;
    let t = target.mps_in_frame(&out.phases)?;
    let (init, _) = compress(&t, opts.bond_dim)?;
    let (out, f) = fit_to_target(&target, out, init, opts)?;
    Ok((out, f.min(1.0 + 1e-12)))
}

/// Backbone fit from `init` in the frame of `start.phases`, then optional row updates and a refit.
fn fit_to_target(target: &Target, start: RageState, init: MpsState, opts: &SingleQubitOptions) -> Result<(RageState, f64)> {
    let mut out = start;
    let t = target.mps_in_frame(&out.phases)?;
    let (mut x, mut f) = fit_mps(&t, &init, opts.sweeps)?;
    if opts.row_updates {
        for k in 0..out.n_sites() {
            if k == target.site {
                continue;
            }
            if let Some((s, nx, nf)) = row_update(target, &out, &x, k, f)? {
                out = s;
                x = nx;
                f = nf;
            }
        }
        let t = target.mps_in_frame(&out.phases)?;
        let (nx, nf) = fit_mps(&t, &x, opts.sweeps)?;
        if nf >= f {
            x = nx;
            f = nf;
        }
    }
    out.backbone = Backbone::Mps(x);
    Ok((out, f))
}

/// One adjacency-row correction on the pair `(acted_site, k)` toward `U|r_before⟩`,
/// where `r` already carries the fitted backbone.
pub fn update_adjacency_row(r_before: &RageState, r: &RageState, gate: &Gate, k: usize) -> Result<(RageState, f64)> {
    let Gate::SingleQubit { site, matrix } = gate else {
        return Err(Error::InvalidArgument("expected a single-qubit gate".into()));
    };
    let m = mps_backbone(r_before)?;
    let x = mps_backbone(r)?.clone();
    if k == *site || k >= r.n_sites() {
        return Err(Error::InvalidArgument("row partner must be another site".into()));
    }
    let g = linalg::matmul(matrix, &r_before.rotations.matrix(*site));
    let op = ProductOperator::identity(r.n_sites()).with_factor(*site, g);
    let comps0 = dress_operator(&op, &r_before.phases, &LocalRotations::identity(r.n_sites()))?;
    let target = Target { a0: m.clone(), phases0: r_before.phases.clone(), comps0, site: *site, norm: mps_norm_squared(m) };
    let f = target.fidelity(&r.phases, &x)?;
    Ok(match row_update(&target, r, &x, k, f)? {
        Some((s, _, nf)) => (s, nf),
        None => (r.clone(), f),
    })
}

/// Reaches `gate` through `n_steps` fractional powers: step `k` fits `gate^(k/n)|r⟩`
/// starting from the result of step `k - 1`. Returns the state and the final fidelity bound.
pub fn apply_single_qubit_incremental(r: &RageState, gate: &Gate, n_steps: usize, opts: &SingleQubitOptions) -> Result<(RageState, f64)> {
    let parts = incremental_gate_schedule(gate, n_steps)?;
    let Gate::SingleQubit { site, .. } = gate else { unreachable!() };
    let j = *site;
    let mut base = r.clone();
    let fold = r.rotations.matrix(j);
    base.rotations.set_params(j, [1.0, 0.0, 0.0, 0.0]);
    let mut cur = base.clone();
    let mut power = linalg::identity(2);
    let mut f = 1.0;
    for p in &parts {
        let Gate::SingleQubit { matrix, .. } = p else { unreachable!() };
        power = linalg::matmul(matrix, &power);
        let g = linalg::matmul(&power, &fold);
        if is_diagonal(&g) {
            let mut nm = mps_backbone(&base)?.clone();
            nm.apply_site_operator(j, &g);
            cur = base.clone();
            cur.backbone = Backbone::Mps(nm);
            f = 1.0;
            continue;
        }
        let target = Target::new(&base, j, g)?;
        let init = mps_backbone(&cur)?.clone();
        let (next, nf) = fit_to_target(&target, cur, init, opts)?;
        cur = next;
        f = nf;
    }
    Ok((cur, f.min(1.0 + 1e-12)))
}

/// Applies any gate to a graph-enhanced state; returns the fidelity bound of the step.
pub fn apply_gate_rage(r: &RageState, gate: &Gate, opts: &SingleQubitOptions) -> Result<(RageState, f64)> {
    match gate {
        Gate::ControlledPhase { .. } => Ok((apply_controlled_phase(r, gate)?, 1.0)),
        Gate::SingleQubit { .. } => apply_single_qubit_variational(r, gate, opts),
    }
}

/// Applies a gate to a plain open MPS at fixed bond dimension.
pub fn apply_gate_mps(m: &MpsState, gate: &Gate, bond_dim: usize, sweeps: usize) -> Result<(MpsState, f64)> {
    match gate {
        Gate::SingleQubit { site, matrix } => {
            let mut out = m.clone();
            out.apply_site_operator(*site, matrix);
            Ok((out, 1.0))
        }
        Gate::ControlledPhase { a, b, angle } => {
            let mut p0 = m.clone();
            p0.apply_site_operator(*a, &elementary(2, 0, 0));
            let mut p1 = m.clone();
            p1.apply_site_operator(*a, &elementary(2, 1, 1));
            p1.apply_site_operator(*b, &phase_gate(*angle));
            let t = direct_sum(&[(ONE, p0), (ONE, p1)])?;
            let (init, _) = compress(&t, bond_dim)?;
            fit_mps(&t, &init, sweeps)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Plain MPS, every gate fitted by overlap sweeps.
    Mps,
    /// Graph-enhanced MPS; `row_updates` enables adjacency-row corrections.
    Rage { row_updates: bool },
}

#[derive(Clone, Debug)]
pub struct FidelityTrace {
    pub method: Method,
    /// Fidelity with the dense state after each gate.
    pub fidelities: Vec<f64>,
    /// Method-internal fidelity bound of each gate step.
    pub step_bounds: Vec<f64>,
}

/// Runs `c` with every method and tracks the fidelity with dense evolution.
pub fn simulate_with_fidelity(c: &Circuit, initial: &RageState, methods: &[Method], bond_dim: usize) -> Result<Vec<FidelityTrace>> {
    if c.n_sites != initial.n_sites() {
        return Err(Error::DimensionMismatch("circuit and state widths differ".into()));
    }
    crate::oracle::checked_dim(c.n_sites, 2)?;
    let mut exact = vec![initial.expand()?];
    for g in &c.gates {
        let next = g.apply_dense(exact.last().unwrap())?;
        exact.push(next);
    }
    let opts = |row_updates| SingleQubitOptions { bond_dim, sweeps: 2, row_updates };
    let mut out = Vec::new();
    for &method in methods {
        let mut fids = Vec::with_capacity(c.len());
        let mut bounds = Vec::with_capacity(c.len());
        match method {
            Method::Mps => {
                if !initial.phases.is_zero() || !initial.rotations.is_identity() {
                    return Err(Error::InvalidArgument("plain MPS runs start from a bare backbone".into()));
                }
                let mut s = mps_backbone(initial)?.clone();
                for (i, g) in c.gates.iter().enumerate() {
                    let (ns, b) = apply_gate_mps(&s, g, bond_dim, 2)?;
                    s = ns;
                    fids.push(fidelity(&s.expand()?, &exact[i + 1])?);
                    bounds.push(b);
                }
            }
            Method::Rage { row_updates } => {
                let mut r = initial.clone();
                for (i, g) in c.gates.iter().enumerate() {
                    let (nr, b) = apply_gate_rage(&r, g, &opts(row_updates))?;
                    r = nr;
                    fids.push(fidelity(&r.expand()?, &exact[i + 1])?);
                    bounds.push(b);
                }
            }
        }
        out.push(FidelityTrace { method, fidelities: fids, step_bounds: bounds });
    }
    Ok(out)
}

/// Seed-averaged block fidelities of random circuits from random initial MPS.
///
/// Returns `(mean MPS trace, mean RAGE trace, per-seed traces)` indexed by block.
pub fn random_circuit_study(
    n_sites: usize,
    bond_dim: usize,
    n_blocks: usize,
    seeds: &[u64],
    row_updates: bool,
) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<FidelityTrace>>)> {
    let mut mps_mean = vec![0.0; n_blocks];
    let mut rage_mean = vec![0.0; n_blocks];
    let mut all = Vec::new();
    for &seed in seeds {
        let (traces, _) = random_circuit_run(n_sites, bond_dim, n_blocks, seed, row_updates)?;
        for b in 0..n_blocks {
            mps_mean[b] += traces[0].fidelities[2 * b + 1] / seeds.len() as f64;
            rage_mean[b] += traces[1].fidelities[2 * b + 1] / seeds.len() as f64;
        }
        all.push(traces);
    }
    Ok((mps_mean, rage_mean, all))
}

/// One seeded random-circuit run with both methods.
pub fn random_circuit_run(
    n_sites: usize,
    bond_dim: usize,
    n_blocks: usize,
    seed: u64,
    row_updates: bool,
) -> Result<(Vec<FidelityTrace>, Circuit)> {
    let c = random_circuit(n_sites, n_blocks, seed)?;
    let mut rng: Rng = seeded(seed ^ 0x9e37_79b9_7f4a_7c15);
    let m = MpsState::random(Boundary::Open, n_sites, 2, bond_dim, &mut rng);
    let init = RageState::bare(Backbone::Mps(m));
    let traces = simulate_with_fidelity(&c, &init, &[Method::Mps, Method::Rage { row_updates }], bond_dim)?;
    Ok((traces, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{ising_2d, PauliString};
    use crate::oracle::evolution_operator;
    use crate::wgs::graph_state_phases;

    fn plus_mps(n: usize) -> MpsState {
        let h = 1.0 / 2f64.sqrt();
        MpsState::product(&vec![vec![C64::new(h, 0.0); 2]; n]).unwrap()
    }

    #[test]
    fn controlled_phase_is_exact() {
        let mut rng = seeded(1);
        let m = MpsState::random(Boundary::Open, 5, 2, 2, &mut rng);
        let r = RageState::new(Backbone::Mps(m), AdjacencyPhases::random_qubit(5, &mut rng), LocalRotations::identity(5)).unwrap();
        let g = Gate::controlled_phase(1, 4, 2.3).unwrap();
        let out = apply_controlled_phase(&r, &g).unwrap();
        let f = fidelity(&out.expand().unwrap(), &g.apply_dense(&r.expand().unwrap()).unwrap()).unwrap();
        assert!((f - 1.0).abs() < 1e-12);
        let zero = apply_controlled_phase(&r, &Gate::controlled_phase(0, 1, 0.0).unwrap()).unwrap();
        assert_eq!(zero, r);
    }

    #[test]
    fn hadamard_on_graph_state() {
        let n = 6;
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let r = RageState::new(Backbone::Mps(plus_mps(n)), graph_state_phases(n, &edges).unwrap(), LocalRotations::identity(n))
            .unwrap();
        let g = Gate::single(0, hadamard()).unwrap();
        let (out, bound) = apply_single_qubit_variational(&r, &g, &SingleQubitOptions { bond_dim: 2, ..Default::default() }).unwrap();
        let f = fidelity(&out.expand().unwrap(), &g.apply_dense(&r.expand().unwrap()).unwrap()).unwrap();
        assert!(f >= 0.999, "{f}");
        assert!((f - bound).abs() < 1e-8);
        let id = Gate::single(2, linalg::identity(2)).unwrap();
        let (_, b) = apply_single_qubit_variational(&r, &id, &SingleQubitOptions::default()).unwrap();
        assert!((b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bound_matches_oracle() {
        let mut rng = seeded(5);
        let m = MpsState::random(Boundary::Open, 6, 2, 2, &mut rng);
        let r = RageState::new(Backbone::Mps(m), AdjacencyPhases::random_qubit(6, &mut rng), LocalRotations::identity(6)).unwrap();
        let g = Gate::single(2, rx(1.1)).unwrap();
        let want = g.apply_dense(&r.expand().unwrap()).unwrap();
        for row in [false, true] {
            let (out, bound) =
                apply_single_qubit_variational(&r, &g, &SingleQubitOptions { bond_dim: 2, sweeps: 2, row_updates: row }).unwrap();
            let f = fidelity(&out.expand().unwrap(), &want).unwrap();
            assert!((f - bound).abs() < 1e-8, "{f} {bound}");
            assert!(bound <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn row_update_recovers_angle() {
        let n = 4;
        let r = RageState::bare(Backbone::Mps(plus_mps(n)));
        // Target: CP(0.7) on (0, 2) then a Hadamard-like gate on 0, matched by a row update.
        let mut with_cp = r.clone();
        with_cp.phases.set(0, 2, 0.7);
        let g = Gate::single(0, rx(0.0)).unwrap();
        let (res, f) = update_adjacency_row(&with_cp, &r, &g, 2).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "{f}");
        let d = (res.phases.get(0, 2) - 0.7).rem_euclid(TAU);
        assert!(d.min(TAU - d) < 1e-6);
    }

    #[test]
    fn schedules_and_generators() {
        let x = Gate::single(0, Pauli::X.matrix()).unwrap();
        let parts = incremental_gate_schedule(&x, 4).unwrap();
        let mut p = linalg::identity(2);
        for g in &parts {
            let Gate::SingleQubit { matrix, .. } = g else { unreachable!() };
            p = linalg::matmul(matrix, &p);
        }
        assert!(linalg::distance(&p, &Pauli::X.matrix()) < 1e-12);

        let a = random_circuit(5, 7, 3).unwrap();
        assert_eq!(a, random_circuit(5, 7, 3).unwrap());
        assert_eq!(a.len(), 14);

        let q = qft_circuit(3).unwrap();
        let v = q.apply_dense(&StateVector::basis(3, 2, 0).unwrap()).unwrap();
        for amp in v.amplitudes() {
            assert!((amp - C64::new(1.0 / 8f64.sqrt(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn qft_matches_dft() {
        let n = 6;
        let dim = 1 << n;
        let u = qft_circuit(n).unwrap().unitary().unwrap();
        let rev = |mut k: usize| {
            let mut r = 0;
            for _ in 0..n {
                r = (r << 1) | (k & 1);
                k >>= 1;
            }
            r
        };
        let f = 1.0 / (dim as f64).sqrt();
        for x in 0..dim {
            for k in 0..dim {
                let want = C64::from_polar(f, TAU * (x * k) as f64 / dim as f64);
                assert!((u[(rev(k), x)] - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn trotter_first_order() {
        let h = ising_2d(1, 2, 1.0, 0.8, false);
        let exact = evolution_operator(&h, 0.5).unwrap();
        let err = |steps: usize| {
            let u = trotter_circuit(&h, 0.5 / steps as f64, steps).unwrap().unitary().unwrap();
            linalg::distance(&u, &exact)
        };
        let (e4, e8, e16) = (err(4), err(8), err(16));
        assert!(((e4 / e8) - 2.0).abs() < 0.3 && ((e8 / e16) - 2.0).abs() < 0.3, "{e4} {e8} {e16}");
        let zz = HamiltonianSum::new(3, vec![PauliString::new(3, &[(0, Pauli::Z), (2, Pauli::Z)], 0.7)]).unwrap();
        let u = trotter_circuit(&zz, 0.3, 1).unwrap().unitary().unwrap();
        assert!(linalg::distance(&u, &evolution_operator(&zz, 0.3).unwrap()) < 1e-12);
        assert!(trotter_circuit(&h, 0.0, 5).unwrap().is_empty());
    }

    #[test]
    fn small_random_circuit() {
        let (traces, c) = random_circuit_run(6, 2, 5, 1, true).unwrap();
        for (i, g) in c.gates.iter().enumerate() {
            if matches!(g, Gate::ControlledPhase { .. }) && i > 0 {
                assert!((traces[1].fidelities[i] - traces[1].fidelities[i - 1]).abs() < 1e-12);
            }
        }
        for t in &traces {
            assert!(t.fidelities.iter().all(|f| *f <= 1.0 + 1e-10));
        }
    }
}
