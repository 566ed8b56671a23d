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

//! Weighted graph states: adjacency phases, local rotations, stabilizer
//! groups and the reduction of a stabilizer group to graph form.
//!
//! Phase convention: a pair `(a, b)` contributes `e^{i φ_ab[s_a, s_b]}` to the
//! amplitude of a basis state, once per unordered pair. For qubits only the
//! `[1, 1]` entry is nonzero, so an edge with `φ = π` is a controlled-Z.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::{PI, TAU};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::hamiltonians::{Pauli, PauliString};
use crate::linalg::{self, CMatrix, C64, I, ONE};
use crate::rng::{uniform_angle, Rng};

fn wrap(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyPhases {
    n: usize,
    q: usize,
    /// `φ_ab[s, t]` at `((a n + b) q + s) q + t`.
    data: Vec<f64>,
}

impl AdjacencyPhases {
    pub fn zeros(n_sites: usize, q: usize) -> Self {
        assert!(q >= 2);
        Self { n: n_sites, q, data: vec![0.0; n_sites * n_sites * q * q] }
    }

    pub fn qubit_zeros(n_sites: usize) -> Self {
        Self::zeros(n_sites, 2)
    }

    /// Symmetric qubit phases from a matrix; the diagonal must vanish.
    pub fn from_qubit_matrix(phi: &[Vec<f64>]) -> Result<Self> {
        let n = phi.len();
        let mut p = Self::qubit_zeros(n);
        for a in 0..n {
            if phi[a].len() != n {
                return Err(Error::Shape("phase matrix is not square".into()));
            }
            if phi[a][a] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero self-phase at site {a}")));
            }
            for b in a + 1..n {
                if (phi[a][b] - phi[b][a]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!("phase matrix not symmetric at ({a}, {b})")));
                }
                p.set(a, b, phi[a][b]);
            }
        }
        Ok(p)
    }

    pub fn random_qubit(n_sites: usize, rng: &mut Rng) -> Self {
        let mut p = Self::qubit_zeros(n_sites);
        for a in 0..n_sites {
            for b in a + 1..n_sites {
                p.set(a, b, uniform_angle(rng));
            }
        }
        p
    }

    /// Random phases symmetric in the pair and in the level indices, zero on level 0.
    pub fn random_qudit(n_sites: usize, q: usize, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(n_sites, q);
        for a in 0..n_sites {
            for b in a + 1..n_sites {
                for s in 1..q {
                    for t in s..q {
                        let v = uniform_angle(rng);
                        p.set_entry(a, b, s, t, v);
                        p.set_entry(a, b, t, s, v);
                    }
                }
            }
        }
        p
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn local_dim(&self) -> usize {
        self.q
    }

    fn idx(&self, a: usize, b: usize, s: usize, t: usize) -> usize {
        ((a * self.n + b) * self.q + s) * self.q + t
    }

    /// Qubit phase `φ_ab`.
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[self.idx(a, b, 1, 1)]
    }

    pub fn set(&mut self, a: usize, b: usize, angle: f64) {
        assert_eq!(self.q, 2, "scalar phases are a qubit notion");
        self.set_entry(a, b, 1, 1, angle);
    }

    pub fn entry(&self, a: usize, b: usize, s: usize, t: usize) -> f64 {
        self.data[self.idx(a, b, s, t)]
    }

    /// Sets `φ_ab[s, t]` and its mirror `φ_ba[t, s]`.
    pub fn set_entry(&mut self, a: usize, b: usize, s: usize, t: usize, angle: f64) {
        assert!(a != b, "no self-phases");
        assert!(s > 0 && t > 0, "level 0 carries no phase");
        let v = wrap(angle);
        let i = self.idx(a, b, s, t);
        let j = self.idx(b, a, t, s);
        self.data[i] = v;
        self.data[j] = v;
    }

    /// Total phase `Σ_{a<b} φ_ab[s_a, s_b]` of a basis configuration.
    pub fn total_phase(&self, digits: &[usize]) -> f64 {
        let mut t = 0.0;
        for a in 0..self.n {
            if digits[a] == 0 {
                continue;
            }
            for b in a + 1..self.n {
                if digits[b] != 0 {
                    t += self.entry(a, b, digits[a], digits[b]);
                }
            }
        }
        t
    }

    /// Pairs with any nonzero phase.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in a + 1..self.n {
                let base = self.idx(a, b, 0, 0);
                if self.data[base..base + self.q * self.q].iter().any(|&v| v != 0.0) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn from_raw(n_sites: usize, q: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_sites * n_sites * q * q {
            return Err(Error::Shape("phase tensor length".into()));
        }
        Ok(Self { n: n_sites, q, data })
    }
}

/// Per-site unit vectors `x ∈ R⁴`, `V = x₀ 1 + i (x₁ X − x₂ Y + x₃ Z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalRotations {
    x: Vec<[f64; 4]>,
}

impl LocalRotations {
    pub fn identity(n_sites: usize) -> Self {
        Self { x: vec![[1.0, 0.0, 0.0, 0.0]; n_sites] }
    }

    pub fn random(n_sites: usize, rng: &mut Rng) -> Self {
        let x = (0..n_sites)
            .map(|_| {
                let mut v = [0.0; 4];
                for c in &mut v {
                    *c = rng.gen_range(-1.0..=1.0);
                }
                normalize4(v)
            })
            .collect();
        Self { x }
    }

    pub fn n_sites(&self) -> usize {
        self.x.len()
    }

    /// Stores the given unit vectors as they are.
    pub fn from_params(x: Vec<[f64; 4]>) -> Result<Self> {
        for (j, v) in x.iter().enumerate() {
            let n = v.iter().map(|c| c * c).sum::<f64>();
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("rotation parameters at site {j} are not a unit vector")));
            }
        }
        Ok(Self { x })
    }

    pub fn params(&self, site: usize) -> [f64; 4] {
        self.x[site]
    }

    pub fn set_params(&mut self, site: usize, x: [f64; 4]) {
        self.x[site] = normalize4(x);
    }

    pub fn is_identity_at(&self, site: usize) -> bool {
        self.x[site] == [1.0, 0.0, 0.0, 0.0]
    }

    pub fn is_identity(&self) -> bool {
        (0..self.x.len()).all(|s| self.is_identity_at(s))
    }

    /// Rotation at `site`; identity for sites flagged identity.
    pub fn matrix(&self, site: usize) -> CMatrix {
        rotation_matrix(self.x[site])
    }

    /// Diagonal up to numerical zero, so it commutes with the phase layer.
    pub fn is_diagonal_at(&self, site: usize) -> bool {
        let x = self.x[site];
        x[1] == 0.0 && x[2] == 0.0
    }
}

fn normalize4(v: [f64; 4]) -> [f64; 4] {
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    assert!(n > 0.0, "rotation parameters must be nonzero");
    [v[0] / n, v[1] / n, v[2] / n, v[3] / n]
}

pub fn rotation_matrix(x: [f64; 4]) -> CMatrix {
    linalg::from_rows(
        2,
        2,
        &[
            C64::new(x[0], x[3]),
            C64::new(-x[2], x[1]),
            C64::new(x[2], x[1]),
            C64::new(x[0], -x[3]),
        ],
    )
}

/// Splits a 2×2 unitary into `e^{iα} V(x)`.
pub fn rotation_params_of(u: &CMatrix) -> (f64, [f64; 4]) {
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let alpha = det.arg() / 2.0;
    let v = linalg::scale(u, C64::from_polar(1.0, -alpha));
    let x0 = ((v[(0, 0)] + v[(1, 1)]) / 2.0).re;
    let x3 = ((v[(0, 0)] - v[(1, 1)]) / (2.0 * I)).re;
    let x1 = ((v[(0, 1)] + v[(1, 0)]) / (2.0 * I)).re;
    let x2 = ((v[(1, 0)] - v[(0, 1)]) / 2.0).re;
    (alpha, normalize4([x0, x1, x2, x3]))
}

/// `φ_ab = π` on every edge.
pub fn graph_state_phases(n_sites: usize, edges: &[(usize, usize)]) -> Result<AdjacencyPhases> {
    check_edges(n_sites, edges)?;
    let mut p = AdjacencyPhases::qubit_zeros(n_sites);
    for &(a, b) in edges {
        p.set(a, b, PI);
    }
    Ok(p)
}

fn check_edges(n: usize, edges: &[(usize, usize)]) -> Result<()> {
    for &(a, b) in edges {
        if a == b {
            return Err(Error::InvalidArgument(format!("self-loop at vertex {a}")));
        }
        if a >= n || b >= n {
            return Err(Error::InvalidArgument(format!("edge ({a}, {b}) outside {n} vertices")));
        }
    }
    Ok(())
}

/// `K_a = X_a Π_{b ∈ N(a)} Z_b`, unit coefficients.
pub fn stabilizer_operators(n_sites: usize, edges: &[(usize, usize)]) -> Result<Vec<PauliString>> {
    check_edges(n_sites, edges)?;
    let mut nb = vec![vec![false; n_sites]; n_sites];
    for &(a, b) in edges {
        nb[a][b] = true;
        nb[b][a] = true;
    }
    Ok((0..n_sites)
        .map(|a| {
            let mut ops = vec![(a, Pauli::X)];
            ops.extend((0..n_sites).filter(|&b| nb[a][b]).map(|b| (b, Pauli::Z)));
            PauliString::new(n_sites, &ops, 1.0)
        })
        .collect())
}

/// `i^phase Π_j X_j^{x_j} Z_j^{z_j}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliOp {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
    pub phase: u8,
}

impl PauliOp {
    pub fn identity(n: usize) -> Self {
        Self { x: vec![false; n], z: vec![false; n], phase: 0 }
    }

    pub fn single(n: usize, site: usize, p: Pauli) -> Self {
        let mut op = Self::identity(n);
        let (x, z) = p.bits();
        op.x[site] = x;
        op.z[site] = z;
        if p == Pauli::Y {
            op.phase = 1;
        }
        op
    }

    /// Fails unless the coefficient is a power of `i`.
    pub fn from_pauli_string(p: &PauliString) -> Result<Self> {
        let c = p.coeff();
        let k = [ONE, I, -ONE, -I]
            .iter()
            .position(|&u| (c - u).norm() < 1e-12)
            .ok_or_else(|| Error::InvalidArgument(format!("coefficient {c} is not a power of i")))?;
        let n = p.n_sites();
        let mut op = Self::identity(n);
        let mut ys = 0u8;
        for (j, &l) in p.letters().iter().enumerate() {
            let (x, z) = l.bits();
            op.x[j] = x;
            op.z[j] = z;
            if l == Pauli::Y {
                ys += 1;
            }
        }
        op.phase = (k as u8 + ys) % 4;
        Ok(op)
    }

    pub fn to_pauli_string(&self) -> PauliString {
        let n = self.x.len();
        let ops: Vec<(usize, Pauli)> = (0..n)
            .filter(|&j| self.x[j] || self.z[j])
            .map(|j| (j, Pauli::from_bits(self.x[j], self.z[j])))
            .collect();
        let ys = ops.iter().filter(|(_, p)| *p == Pauli::Y).count() as i32;
        let k = (self.phase as i32 - ys).rem_euclid(4) as usize;
        PauliString::with_complex_coeff(n, &ops, [ONE, I, -ONE, -I][k])
    }

    pub fn n_qubits(&self) -> usize {
        self.x.len()
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.x.len();
        let mut ph = self.phase as u32 + o.phase as u32;
        let mut x = vec![false; n];
        let mut z = vec![false; n];
        for j in 0..n {
            if self.z[j] && o.x[j] {
                ph += 2;
            }
            x[j] = self.x[j] ^ o.x[j];
            z[j] = self.z[j] ^ o.z[j];
        }
        Self { x, z, phase: (ph % 4) as u8 }
    }

    pub fn commutes(&self, o: &Self) -> bool {
        let mut s = false;
        for j in 0..self.x.len() {
            s ^= (self.x[j] && o.z[j]) ^ (self.z[j] && o.x[j]);
        }
        !s
    }

    pub fn is_hermitian(&self) -> bool {
        let xz = (0..self.x.len()).filter(|&j| self.x[j] && self.z[j]).count();
        (self.phase as usize + xz) % 2 == 0
    }

    fn bits(&self) -> Vec<bool> {
        self.x.iter().chain(&self.z).copied().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cz(usize, usize),
    Cnot(usize, usize),
}

impl CliffordGate {
    pub fn inverse(self) -> Self {
        match self {
            CliffordGate::S(a) => CliffordGate::Sdg(a),
            CliffordGate::Sdg(a) => CliffordGate::S(a),
            g => g,
        }
    }

    pub fn sites(self) -> Vec<usize> {
        match self {
            CliffordGate::H(a)
            | CliffordGate::S(a)
            | CliffordGate::Sdg(a)
            | CliffordGate::X(a)
            | CliffordGate::Y(a)
            | CliffordGate::Z(a) => vec![a],
            CliffordGate::Cz(a, b) | CliffordGate::Cnot(a, b) => vec![a, b],
        }
    }

    /// Dense matrix on its own sites, first site most significant.
    pub fn matrix(self) -> CMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            CliffordGate::H(_) => linalg::from_rows(2, 2, &[C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)]),
            CliffordGate::S(_) => linalg::diag(&[ONE, I]),
            CliffordGate::Sdg(_) => linalg::diag(&[ONE, -I]),
            CliffordGate::X(_) => Pauli::X.matrix(),
            CliffordGate::Y(_) => Pauli::Y.matrix(),
            CliffordGate::Z(_) => Pauli::Z.matrix(),
            CliffordGate::Cz(..) => linalg::diag(&[ONE, ONE, ONE, -ONE]),
            CliffordGate::Cnot(..) => {
                let mut m = linalg::zeros(4, 4);
                m[(0, 0)] = ONE;
                m[(1, 1)] = ONE;
                m[(2, 3)] = ONE;
                m[(3, 2)] = ONE;
                m
            }
        }
    }

    /// `g P g†`.
    pub fn conjugate(self, p: &PauliOp) -> PauliOp {
        let n = p.n_qubits();
        let img = |site: usize, letter_x: bool| -> PauliOp {
            let base = if letter_x { Pauli::X } else { Pauli::Z };
            let mut out = PauliOp::single(n, site, base);
            match self {
                CliffordGate::H(a) if a == site => {
                    out = PauliOp::single(n, site, if letter_x { Pauli::Z } else { Pauli::X });
                }
                CliffordGate::S(a) if a == site && letter_x => {
                    out = PauliOp::single(n, site, Pauli::Y);
                }
                CliffordGate::Sdg(a) if a == site && letter_x => {
                    out = PauliOp::single(n, site, Pauli::Y);
                    out.phase = (out.phase + 2) % 4;
                }
                CliffordGate::X(a) if a == site && !letter_x => out.phase = 2,
                CliffordGate::Z(a) if a == site && letter_x => out.phase = 2,
                CliffordGate::Y(a) if a == site => out.phase = 2,
                CliffordGate::Cz(a, b) if letter_x && (a == site || b == site) => {
                    let other = if a == site { b } else { a };
                    out.z[other] = true;
                }
                CliffordGate::Cnot(c, t) => {
                    if letter_x && site == c {
                        out.x[t] = true;
                    } else if !letter_x && site == t {
                        out.z[c] = true;
                    }
                }
                _ => {}
            }
            out
        };
        let mut acc = PauliOp::identity(n);
        acc.phase = p.phase;
        for j in 0..n {
            if p.x[j] {
                acc = acc.mul(&img(j, true));
            }
            if p.z[j] {
                acc = acc.mul(&img(j, false));
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CliffordCircuit {
    pub n_qubits: usize,
    pub gates: Vec<CliffordGate>,
}

impl CliffordCircuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new() }
    }

    pub fn push(&mut self, g: CliffordGate) -> Result<()> {
        let s = g.sites();
        if s.iter().any(|&a| a >= self.n_qubits) || (s.len() == 2 && s[0] == s[1]) {
            return Err(Error::InvalidArgument(format!("bad gate {g:?}")));
        }
        self.gates.push(g);
        Ok(())
    }

    pub fn random(n_qubits: usize, n_gates: usize, rng: &mut Rng) -> Self {
        let mut c = Self::new(n_qubits);
        while c.gates.len() < n_gates {
            let a = rng.gen_range(0..n_qubits);
            let mut b = rng.gen_range(0..n_qubits);
            if n_qubits > 1 {
                while b == a {
                    b = rng.gen_range(0..n_qubits);
                }
            }
            let g = match rng.gen_range(0..4) {
                0 => CliffordGate::H(a),
                1 => CliffordGate::S(a),
                2 if n_qubits > 1 => CliffordGate::Cz(a, b),
                3 if n_qubits > 1 => CliffordGate::Cnot(a, b),
                _ => CliffordGate::H(a),
            };
            c.gates.push(g);
        }
        c
    }
}

/// `U† p U` where the circuit applies its gates in list order.
pub fn pauli_conjugate_through_clifford(p: &PauliString, c: &CliffordCircuit) -> Result<PauliString> {
    if p.n_sites() != c.n_qubits {
        return Err(Error::DimensionMismatch("Pauli string and circuit widths differ".into()));
    }
    let mut unit = p.clone();
    unit.set_coeff(ONE);
    let mut op = PauliOp::from_pauli_string(&unit)?;
    for g in c.gates.iter().rev() {
        op = g.inverse().conjugate(&op);
    }
    let mut out = op.to_pauli_string();
    out.set_coeff(out.coeff() * p.coeff());
    Ok(out)
}

/// A single-qubit Clifford up to global phase, tagged by its action
/// `C X C†`, `C Z C†` on the Pauli basis.
#[derive(Clone, Debug)]
pub struct LocalClifford {
    pub x_image: (Pauli, bool),
    pub z_image: (Pauli, bool),
    pub matrix: CMatrix,
}

impl PartialEq for LocalClifford {
    fn eq(&self, o: &Self) -> bool {
        self.x_image == o.x_image && self.z_image == o.z_image
    }
}

fn signed_image(u: &CMatrix, p: Pauli) -> (Pauli, bool) {
    let img = &(u * &p.matrix()) * &linalg::adjoint(u);
    for q in [Pauli::X, Pauli::Y, Pauli::Z] {
        let t = linalg::trace(&(&q.matrix() * &img)) / 2.0;
        if (t - ONE).norm() < 1e-9 {
            return (q, false);
        }
        if (t + ONE).norm() < 1e-9 {
            return (q, true);
        }
    }
    panic!("matrix is not a Clifford");
}

impl LocalClifford {
    pub fn identity() -> Self {
        Self::from_matrix(&linalg::identity(2))
    }

    pub fn from_matrix(u: &CMatrix) -> Self {
        Self { x_image: signed_image(u, Pauli::X), z_image: signed_image(u, Pauli::Z), matrix: u.clone() }
    }

    pub fn is_identity(&self) -> bool {
        self.x_image == (Pauli::X, false) && self.z_image == (Pauli::Z, false)
    }

    /// Short label built from H and S, e.g. `"HS"`; the matrix is the product left to right.
    pub fn label(&self) -> String {
        group()
            .iter()
            .find(|(_, c)| c == self)
            .map(|(w, _)| if w.is_empty() { "I".to_string() } else { w.clone() })
            .expect("member of the Clifford group")
    }
}

/// The 24 single-qubit Cliffords by breadth-first search over words in H, S.
pub fn single_qubit_clifford_group() -> Vec<LocalClifford> {
    group().into_iter().map(|(_, c)| c).collect()
}

fn group() -> Vec<(String, LocalClifford)> {
    let h = CliffordGate::H(0).matrix();
    let s = CliffordGate::S(0).matrix();
    let mut seen: HashMap<((Pauli, bool), (Pauli, bool)), ()> = HashMap::new();
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    queue.push_back((String::new(), linalg::identity(2)));
    while let Some((w, m)) = queue.pop_front() {
        let c = LocalClifford::from_matrix(&m);
        if seen.insert((c.x_image, c.z_image), ()).is_some() {
            continue;
        }
        out.push((w.clone(), c));
        queue.push_back((format!("{w}H"), &m * &h));
        queue.push_back((format!("{w}S"), &m * &s));
    }
    out
}

/// Commuting, independent Hermitian Pauli generators.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizerGroup {
    n: usize,
    gens: Vec<PauliOp>,
}

fn gf2_rank(rows: &[Vec<bool>]) -> usize {
    let mut m: Vec<Vec<bool>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        if let Some(p) = (rank..m.len()).find(|&r| m[r][c]) {
            m.swap(rank, p);
            for r in 0..m.len() {
                if r != rank && m[r][c] {
                    let pr = m[rank].clone();
                    for (a, b) in m[r].iter_mut().zip(pr) {
                        *a ^= b;
                    }
                }
            }
            rank += 1;
        }
    }
    rank
}

/// Basis of `{v : A v = 0}` over GF(2).
fn gf2_nullspace(rows: &[Vec<bool>], cols: usize) -> Vec<Vec<bool>> {
    let mut m: Vec<Vec<bool>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for c in 0..cols {
        if let Some(p) = (rank..m.len()).find(|&r| m[r][c]) {
            m.swap(rank, p);
            for r in 0..m.len() {
                if r != rank && m[r][c] {
                    let pr = m[rank].clone();
                    for (a, b) in m[r].iter_mut().zip(pr) {
                        *a ^= b;
                    }
                }
            }
            pivots.push(c);
            rank += 1;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![false; cols];
            v[f] = true;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = m[r][f];
            }
            v
        })
        .collect()
}

impl StabilizerGroup {
    pub fn new(n_qubits: usize, gens: Vec<PauliOp>) -> Result<Self> {
        for g in &gens {
            if g.n_qubits() != n_qubits {
                return Err(Error::DimensionMismatch("generator width".into()));
            }
            if !g.is_hermitian() {
                return Err(Error::InvalidArgument("generator is not Hermitian".into()));
            }
        }
        for i in 0..gens.len() {
            for j in i + 1..gens.len() {
                if !gens[i].commutes(&gens[j]) {
                    return Err(Error::InvalidArgument(format!("generators {i} and {j} anticommute")));
                }
            }
        }
        let rows: Vec<Vec<bool>> = gens.iter().map(|g| g.bits()).collect();
        let r = gf2_rank(&rows);
        if r != gens.len() {
            return Err(Error::InvalidArgument("generators are dependent".into()));
        }
        Ok(Self { n: n_qubits, gens })
    }

    pub fn from_pauli_strings(rows: &[PauliString]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.n_sites());
        Self::new(n, rows.iter().map(PauliOp::from_pauli_string).collect::<Result<_>>()?)
    }

    /// Greedy independent subset, kept in input order.
    pub fn independent_subset(rows: &[PauliString]) -> Result<Self> {
        let n = rows.first().map_or(0, |r| r.n_sites());
        let mut kept: Vec<PauliOp> = Vec::new();
        for r in rows {
            let op = PauliOp::from_pauli_string(r)?;
            let mut bits: Vec<Vec<bool>> = kept.iter().map(|g| g.bits()).collect();
            bits.push(op.bits());
            if gf2_rank(&bits) == bits.len() {
                kept.push(op);
            }
        }
        Self::new(n, kept)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn generators(&self) -> &[PauliOp] {
        &self.gens
    }

    pub fn to_pauli_strings(&self) -> Vec<PauliString> {
        self.gens.iter().map(|g| g.to_pauli_string()).collect()
    }

    /// Adds `+`-signed Paulis from the symplectic complement until the rank is `n`.
    pub fn complete_to_full_rank(&self) -> Result<Self> {
        let n = self.n;
        let mut gens = self.gens.clone();
        while gens.len() < n {
            // v commutes with g iff g_x·v_z + g_z·v_x = 0.
            let rows: Vec<Vec<bool>> = gens.iter().map(|g| g.z.iter().chain(&g.x).copied().collect()).collect();
            let span: Vec<Vec<bool>> = gens.iter().map(|g| g.bits()).collect();
            let cand = gf2_nullspace(&rows, 2 * n).into_iter().find(|v| {
                let mut t = span.clone();
                t.push(v.clone());
                gf2_rank(&t) == t.len()
            });
            let v = cand.ok_or_else(|| Error::Eigensolver("no completing Pauli found".into()))?;
            let x = v[..n].to_vec();
            let z = v[n..].to_vec();
            let xz = (0..n).filter(|&j| x[j] && z[j]).count();
            gens.push(PauliOp { x, z, phase: (xz % 4) as u8 });
        }
        Self::new(n, gens)
    }
}

/// Graph plus per-site Clifford corrections `C_j` with `(⊗ C_j)|G⟩` stabilized by `s`.
pub fn stabilizer_to_graph(s: &StabilizerGroup) -> Result<(Vec<(usize, usize)>, Vec<LocalClifford>)> {
    let n = s.n;
    let rows_bits: Vec<Vec<bool>> = s.gens.iter().map(|g| g.bits()).collect();
    let rank = gf2_rank(&rows_bits);
    if s.len() != n || rank != n {
        return Err(Error::RankDeficient { rank, n });
    }
    let mut rows = s.gens.clone();
    let mut applied: Vec<CliffordGate> = Vec::new();

    let apply = |rows: &mut Vec<PauliOp>, g: CliffordGate, applied: &mut Vec<CliffordGate>| {
        for r in rows.iter_mut() {
            *r = g.conjugate(r);
        }
        applied.push(g);
    };

    let eliminate_x = |rows: &mut Vec<PauliOp>| -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r0 = 0;
        for c in 0..n {
            if let Some(p) = (r0..n).find(|&r| rows[r].x[c]) {
                rows.swap(r0, p);
                for r in 0..n {
                    if r != r0 && rows[r].x[c] {
                        rows[r] = rows[r].mul(&rows[r0]);
                    }
                }
                pivots.push(c);
                r0 += 1;
            }
        }
        pivots
    };

    let pivots = eliminate_x(&mut rows);
    for c in 0..n {
        if !pivots.contains(&c) {
            apply(&mut rows, CliffordGate::H(c), &mut applied);
        }
    }
    let pivots = eliminate_x(&mut rows);
    if pivots.len() != n {
        return Err(Error::RankDeficient { rank: pivots.len(), n });
    }
    for a in 0..n {
        if rows[a].z[a] {
            apply(&mut rows, CliffordGate::Sdg(a), &mut applied);
        }
    }
    for a in 0..n {
        match rows[a].phase {
            0 => {}
            2 => apply(&mut rows, CliffordGate::Z(a), &mut applied),
            _ => return Err(Error::InvalidArgument("non-Hermitian generator after reduction".into())),
        }
    }
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rows[a].z[b] {
                edges.push((a, b));
            }
        }
    }
    // Rows now read U s U† = graph stabilizers, so the correction is U†.
    let mut u: Vec<CMatrix> = vec![linalg::identity(2); n];
    for g in &applied {
        let a = g.sites()[0];
        u[a] = &g.matrix() * &u[a];
    }
    let corrections = u.iter().map(|m| LocalClifford::from_matrix(&linalg::adjoint(m))).collect();
    Ok((edges, corrections))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn dense(p: &PauliString) -> CMatrix {
        let mut m = linalg::identity(1);
        for &l in p.letters() {
            m = linalg::kron(&m, &l.matrix());
        }
        linalg::scale(&m, p.coeff())
    }

    fn dense_gate(g: CliffordGate, n: usize) -> CMatrix {
        let s = g.sites();
        let m = g.matrix();
        let mut out = linalg::zeros(1 << n, 1 << n);
        for col in 0..1usize << n {
            let sub: usize = s.iter().fold(0, |acc, &q| (acc << 1) | ((col >> (n - 1 - q)) & 1));
            for r in 0..m.nrows() {
                let v = m[(r, sub)];
                if v == crate::linalg::ZERO {
                    continue;
                }
                let mut row = col;
                for (k, &q) in s.iter().enumerate() {
                    let bit = (r >> (s.len() - 1 - k)) & 1;
                    row = (row & !(1 << (n - 1 - q))) | (bit << (n - 1 - q));
                }
                out[(row, col)] += v;
            }
        }
        out
    }

    #[test]
    fn clifford_conjugation_small() {
        let mut c = CliffordCircuit::new(2);
        c.push(CliffordGate::H(0)).unwrap();
        let p = PauliString::from_letters("XI", 1.0).unwrap();
        assert_eq!(pauli_conjugate_through_clifford(&p, &c).unwrap(), PauliString::from_letters("ZI", 1.0).unwrap());
        let mut c = CliffordCircuit::new(2);
        c.push(CliffordGate::Cnot(0, 1)).unwrap();
        assert_eq!(pauli_conjugate_through_clifford(&p, &c).unwrap(), PauliString::from_letters("XX", 1.0).unwrap());
    }

    #[test]
    fn clifford_conjugation_matches_dense() {
        let mut rng = seeded(11);
        for _ in 0..5 {
            let c = CliffordCircuit::random(6, 20, &mut rng);
            let mut u = linalg::identity(64);
            for &g in &c.gates {
                u = &dense_gate(g, 6) * &u;
            }
            for letters in ["XIIIII", "IZIIII", "IIYIZI", "XXZZYY"] {
                let p = PauliString::from_letters(letters, 1.0).unwrap();
                let out = pauli_conjugate_through_clifford(&p, &c).unwrap();
                let want = &(&linalg::adjoint(&u) * &dense(&p)) * &u;
                assert!(linalg::distance(&want, &dense(&out)) < 1e-10);
            }
        }
    }

    #[test]
    fn clifford_group_has_24_elements() {
        assert_eq!(single_qubit_clifford_group().len(), 24);
        assert_eq!(LocalClifford::identity().label(), "I");
    }

    #[test]
    fn stabilizers_commute() {
        let edges = [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5), (2, 6)];
        let k = stabilizer_operators(7, &edges).unwrap();
        let ops: Vec<PauliOp> = k.iter().map(|p| PauliOp::from_pauli_string(p).unwrap()).collect();
        for a in &ops {
            for b in &ops {
                assert!(a.commutes(b));
            }
        }
        let path = stabilizer_operators(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path[1], PauliString::from_letters("ZXZ", 1.0).unwrap());
        assert!(stabilizer_operators(2, &[(1, 1)]).is_err());
    }

    #[test]
    fn graph_form_input_is_fixed_point() {
        let edges = vec![(0, 1), (0, 3), (1, 2)];
        let k = stabilizer_operators(4, &edges).unwrap();
        let g = StabilizerGroup::from_pauli_strings(&k).unwrap();
        let (e, corr) = stabilizer_to_graph(&g).unwrap();
        assert_eq!(e, edges);
        assert!(corr.iter().all(|c| c.is_identity()));
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let rows = vec![PauliString::from_letters("ZZ", 1.0).unwrap()];
        let g = StabilizerGroup::from_pauli_strings(&rows).unwrap();
        assert!(matches!(stabilizer_to_graph(&g), Err(Error::RankDeficient { .. })));
        assert_eq!(g.complete_to_full_rank().unwrap().len(), 2);
    }

    #[test]
    fn rotation_roundtrip() {
        let mut rng = seeded(3);
        let r = LocalRotations::random(3, &mut rng);
        for s in 0..3 {
            let v = r.matrix(s);
            let u = linalg::scale(&v, C64::from_polar(1.0, 0.7));
            let (_, x) = rotation_params_of(&u);
            let back = rotation_matrix(x);
            let ov = linalg::trace(&(&linalg::adjoint(&back) * &v)).norm() / 2.0;
            assert!((ov - 1.0).abs() < 1e-12);
        }
    }
}
