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

//! Pauli-string Hamiltonians and the model builders.
//!
//! Lattice sites are numbered row-major, `site = y * lx + x`. Periodic wraps
//! that would duplicate an existing bond (extent 2) are dropped, so every
//! lattice is a simple graph.

use std::fmt;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I, ONE, ZERO};
use crate::operators::ProductOperator;
use crate::rng::seeded;
use crate::wgs::{self, LocalClifford, StabilizerGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> CMatrix {
        let d = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        linalg::from_rows(2, 2, &d)
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// `(x, z)` bits with `Y ~ XZ`.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

/// Axis of a uniform field term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldAxis {
    X,
    Y,
    Z,
}

impl FieldAxis {
    pub fn pauli(self) -> Pauli {
        match self {
            FieldAxis::X => Pauli::X,
            FieldAxis::Y => Pauli::Y,
            FieldAxis::Z => Pauli::Z,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    letters: Vec<Pauli>,
    coeff: C64,
}

impl PauliString {
    pub fn identity(n_sites: usize, coeff: C64) -> Self {
        Self { letters: vec![Pauli::I; n_sites], coeff }
    }

    pub fn new(n_sites: usize, ops: &[(usize, Pauli)], coeff: f64) -> Self {
        Self::with_complex_coeff(n_sites, ops, C64::new(coeff, 0.0))
    }

    pub fn with_complex_coeff(n_sites: usize, ops: &[(usize, Pauli)], coeff: C64) -> Self {
        let mut letters = vec![Pauli::I; n_sites];
        for &(s, p) in ops {
            assert!(s < n_sites, "site {s} out of range");
            assert_eq!(letters[s], Pauli::I, "site {s} set twice");
            letters[s] = p;
        }
        Self { letters, coeff }
    }

    /// Parses letters such as `"XZIY"`.
    pub fn from_letters(letters: &str, coeff: f64) -> Result<Self> {
        let l = letters
            .chars()
            .map(|c| Pauli::from_letter(c).ok_or_else(|| Error::InvalidArgument(format!("bad Pauli letter {c}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { letters: l, coeff: C64::new(coeff, 0.0) })
    }

    pub fn n_sites(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    pub fn letter(&self, site: usize) -> Pauli {
        self.letters[site]
    }

    pub fn coeff(&self) -> C64 {
        self.coeff
    }

    pub fn set_coeff(&mut self, c: C64) {
        self.coeff = c;
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.letters.len()).filter(|&j| self.letters[j] != Pauli::I).collect()
    }

    pub fn is_real(&self) -> bool {
        let ys = self.letters.iter().filter(|&&p| p == Pauli::Y).count();
        if ys % 2 == 0 {
            self.coeff.im == 0.0
        } else {
            self.coeff.re == 0.0
        }
    }

    pub fn product_operator(&self) -> ProductOperator {
        ProductOperator {
            coeff: self.coeff,
            factors: self
                .letters
                .iter()
                .map(|&p| if p == Pauli::I { None } else { Some(p.matrix()) })
                .collect(),
        }
    }

    /// `P|idx⟩ = phase |out⟩` on qubits, site 0 the most significant bit.
    pub fn apply_to_basis(&self, idx: usize) -> (usize, C64) {
        let n = self.letters.len();
        let mut out = idx;
        let mut ph = self.coeff;
        for (j, &p) in self.letters.iter().enumerate() {
            let bit = n - 1 - j;
            let s = (idx >> bit) & 1;
            match p {
                Pauli::I => {}
                Pauli::X => out ^= 1 << bit,
                Pauli::Z => {
                    if s == 1 {
                        ph = -ph;
                    }
                }
                Pauli::Y => {
                    out ^= 1 << bit;
                    ph *= if s == 0 { I } else { -I };
                }
            }
        }
        (out, ph)
    }

    /// Dense `2^k × 2^k` matrix on the support, first support site most significant.
    pub fn support_matrix(&self) -> CMatrix {
        let mut m = linalg::identity(1);
        for s in self.support() {
            m = linalg::kron(&m, &self.letters[s].matrix());
        }
        linalg::scale(&m, self.coeff)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+}{:+}i) ", self.coeff.re, self.coeff.im)?;
        for p in &self.letters {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub lx: usize,
    pub ly: usize,
    pub periodic: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSum {
    n_sites: usize,
    terms: Vec<PauliString>,
    lattice: Option<Lattice>,
}

impl HamiltonianSum {
    pub fn new(n_sites: usize, terms: Vec<PauliString>) -> Result<Self> {
        for t in &terms {
            if t.n_sites() != n_sites {
                return Err(Error::DimensionMismatch(format!(
                    "term on {} sites in a {n_sites}-site sum",
                    t.n_sites()
                )));
            }
        }
        Ok(Self { n_sites, terms, lattice: None })
    }

    pub fn with_lattice(mut self, lattice: Lattice) -> Self {
        self.lattice = Some(lattice);
        self
    }

    pub fn identity(n_sites: usize) -> Self {
        Self { n_sites, terms: vec![PauliString::identity(n_sites, ONE)], lattice: None }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn lattice(&self) -> Option<Lattice> {
        self.lattice
    }

    pub fn push(&mut self, t: PauliString) {
        assert_eq!(t.n_sites(), self.n_sites);
        self.terms.push(t);
    }

    pub fn extend(&mut self, other: &HamiltonianSum) {
        assert_eq!(other.n_sites, self.n_sites);
        self.terms.extend(other.terms.iter().cloned());
    }

    /// Hermitian exactly when every term coefficient is real.
    pub fn is_hermitian(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.im.abs() <= 1e-14 * t.coeff.re.abs().max(1.0))
    }

    pub fn product_operators(&self) -> Vec<ProductOperator> {
        self.terms.iter().map(|t| t.product_operator()).collect()
    }

    pub fn max_support(&self) -> usize {
        self.terms.iter().map(|t| t.support().len()).max().unwrap_or(0)
    }

    /// Sum of `|coeff|` over terms containing both sites.
    pub fn interaction_weights(&self) -> Vec<Vec<f64>> {
        let n = self.n_sites;
        let mut w = vec![vec![0.0; n]; n];
        for t in &self.terms {
            let s = t.support();
            for (i, &a) in s.iter().enumerate() {
                for &b in &s[i + 1..] {
                    w[a][b] += t.coeff.norm();
                    w[b][a] += t.coeff.norm();
                }
            }
        }
        w
    }
}

pub fn site_index(lx: usize, x: usize, y: usize) -> usize {
    y * lx + x
}

/// Nearest-neighbour bonds `(a, b)` with `a < b`, sorted.
pub fn lattice_edges(lx: usize, ly: usize, periodic: bool) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    let mut push = |a: usize, b: usize| {
        let e = (a.min(b), a.max(b));
        if a != b && !edges.contains(&e) {
            edges.push(e);
        }
    };
    for y in 0..ly {
        for x in 0..lx {
            let s = site_index(lx, x, y);
            if x + 1 < lx {
                push(s, site_index(lx, x + 1, y));
            } else if periodic && lx > 2 {
                push(s, site_index(lx, 0, y));
            }
            if y + 1 < ly {
                push(s, site_index(lx, x, y + 1));
            } else if periodic && ly > 2 {
                push(s, site_index(lx, x, 0));
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// `J Σ_{⟨a,b⟩} Z_a Z_b + B Σ_a X_a`.
pub fn ising_2d(lx: usize, ly: usize, j: f64, b: f64, periodic: bool) -> HamiltonianSum {
    let n = lx * ly;
    let mut terms: Vec<PauliString> = lattice_edges(lx, ly, periodic)
        .into_iter()
        .map(|(a, c)| PauliString::new(n, &[(a, Pauli::Z), (c, Pauli::Z)], j))
        .collect();
    if b != 0.0 {
        terms.extend((0..n).map(|a| PauliString::new(n, &[(a, Pauli::X)], b)));
    }
    HamiltonianSum { n_sites: n, terms, lattice: Some(Lattice { lx, ly, periodic }) }
}

fn heisenberg_bond(n: usize, a: usize, b: usize, j: f64) -> [PauliString; 3] {
    [
        PauliString::new(n, &[(a, Pauli::X), (b, Pauli::X)], j),
        PauliString::new(n, &[(a, Pauli::Y), (b, Pauli::Y)], j),
        PauliString::new(n, &[(a, Pauli::Z), (b, Pauli::Z)], j),
    ]
}

/// `Σ_{⟨a,b⟩} (X X + Y Y + Z Z)`.
pub fn heisenberg_2d(lx: usize, ly: usize, periodic: bool) -> HamiltonianSum {
    let n = lx * ly;
    let terms = lattice_edges(lx, ly, periodic)
        .into_iter()
        .flat_map(|(a, b)| heisenberg_bond(n, a, b, 1.0))
        .collect();
    HamiltonianSum { n_sites: n, terms, lattice: Some(Lattice { lx, ly, periodic }) }
}

/// Open-boundary Heisenberg couplings `J_ab ~ N(1, 0.1)` drawn in bond order.
pub fn spin_glass_couplings(lx: usize, ly: usize, seed: u64) -> Vec<((usize, usize), f64)> {
    let mut rng = seeded(seed);
    let normal = Normal::new(1.0, 0.1).expect("valid normal");
    lattice_edges(lx, ly, false).into_iter().map(|e| (e, normal.sample(&mut rng))).collect()
}

pub fn spin_glass_2d(lx: usize, ly: usize, seed: u64) -> HamiltonianSum {
    let n = lx * ly;
    let terms = spin_glass_couplings(lx, ly, seed)
        .into_iter()
        .flat_map(|((a, b), j)| heisenberg_bond(n, a, b, j))
        .collect();
    HamiltonianSum { n_sites: n, terms, lattice: Some(Lattice { lx, ly, periodic: false }) }
}

/// `Σ_{i<j} Z_i Z_j / |i - j| + b Σ_i X_i`, each unordered pair once.
pub fn long_range_ising(n: usize, b: f64) -> HamiltonianSum {
    let mut terms = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            terms.push(PauliString::new(n, &[(i, Pauli::Z), (j, Pauli::Z)], 1.0 / (j - i) as f64));
        }
    }
    if b != 0.0 {
        terms.extend((0..n).map(|a| PauliString::new(n, &[(a, Pauli::X)], b)));
    }
    HamiltonianSum { n_sites: n, terms, lattice: Some(Lattice { lx: n, ly: 1, periodic: false }) }
}

/// `-Σ_a K_a`.
pub fn graph_hamiltonian(n: usize, edges: &[(usize, usize)]) -> Result<HamiltonianSum> {
    let mut terms = wgs::stabilizer_operators(n, edges)?;
    for t in &mut terms {
        t.set_coeff(-ONE);
    }
    Ok(HamiltonianSum { n_sites: n, terms, lattice: None })
}

/// `-Σ_a K_a + Σ_i h_i σ_z^(i)`.
pub fn disturbed_graph_hamiltonian(n: usize, edges: &[(usize, usize)], fields: &[f64]) -> Result<HamiltonianSum> {
    disturbed_graph_hamiltonian_axis(n, edges, fields, FieldAxis::Z)
}

pub fn disturbed_graph_hamiltonian_axis(
    n: usize,
    edges: &[(usize, usize)],
    fields: &[f64],
    axis: FieldAxis,
) -> Result<HamiltonianSum> {
    if fields.len() != n {
        return Err(Error::DimensionMismatch(format!("{} fields for {n} sites", fields.len())));
    }
    let mut h = graph_hamiltonian(n, edges)?;
    for (i, &f) in fields.iter().enumerate() {
        if f != 0.0 {
            h.terms.push(PauliString::new(n, &[(i, axis.pauli())], f));
        }
    }
    Ok(h)
}

/// Edge qubits of a periodic `lx × ly` vertex lattice.
///
/// Vertices are `(x, y)`; the horizontal edge leaving `(x, y)` is qubit
/// `2 (y lx + x)` and the vertical one is qubit `2 (y lx + x) + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToricLattice {
    pub lx: usize,
    pub ly: usize,
    pub n_qubits: usize,
    /// `X⊗4` generators, one per plaquette.
    pub loops: Vec<[usize; 4]>,
    /// `Z⊗4` generators, one per vertex except the lexicographically last.
    pub crosses: Vec<[usize; 4]>,
}

pub fn toric_lattice(lx: usize, ly: usize) -> Result<ToricLattice> {
    if lx < 2 || ly < 2 {
        return Err(Error::InvalidArgument("toric lattice needs lx, ly >= 2".into()));
    }
    let h = |x: usize, y: usize| 2 * ((y % ly) * lx + (x % lx));
    let v = |x: usize, y: usize| 2 * ((y % ly) * lx + (x % lx)) + 1;
    let mut loops = Vec::new();
    let mut crosses = Vec::new();
    for y in 0..ly {
        for x in 0..lx {
            loops.push([h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)]);
        }
    }
    for x in 0..lx {
        for y in 0..ly {
            if (x, y) == (lx - 1, ly - 1) {
                continue;
            }
            crosses.push([h(x, y), h(x + lx - 1, y), v(x, y), v(x, y + ly - 1)]);
        }
    }
    Ok(ToricLattice { lx, ly, n_qubits: 2 * lx * ly, loops, crosses })
}

pub fn toric_code_hamiltonian(lx: usize, ly: usize) -> Result<HamiltonianSum> {
    let lat = toric_lattice(lx, ly)?;
    let n = lat.n_qubits;
    let mut terms = Vec::new();
    for l in &lat.loops {
        let ops: Vec<(usize, Pauli)> = l.iter().map(|&q| (q, Pauli::X)).collect();
        terms.push(PauliString::new(n, &ops, -1.0));
    }
    for c in &lat.crosses {
        let ops: Vec<(usize, Pauli)> = c.iter().map(|&q| (q, Pauli::Z)).collect();
        terms.push(PauliString::new(n, &ops, -1.0));
    }
    Ok(HamiltonianSum { n_sites: n, terms, lattice: Some(Lattice { lx, ly, periodic: true }) })
}

/// Independent loop/cross generators completed to a full-rank stabilizer group.
pub fn toric_code_generators(lx: usize, ly: usize) -> Result<StabilizerGroup> {
    let h = toric_code_hamiltonian(lx, ly)?;
    let rows: Vec<PauliString> = h
        .terms()
        .iter()
        .map(|t| {
            let mut p = t.clone();
            p.set_coeff(ONE);
            p
        })
        .collect();
    let partial = StabilizerGroup::independent_subset(&rows)?;
    partial.complete_to_full_rank()
}

/// Graph form of the toric-code stabilizer state.
#[derive(Clone, Debug)]
pub struct ToricGraphForm {
    pub n_qubits: usize,
    pub edges: Vec<(usize, usize)>,
    pub corrections: Vec<LocalClifford>,
    pub generators: StabilizerGroup,
}

pub fn toric_graph_form(lx: usize, ly: usize) -> Result<ToricGraphForm> {
    let generators = toric_code_generators(lx, ly)?;
    let (edges, corrections) = wgs::stabilizer_to_graph(&generators)?;
    Ok(ToricGraphForm { n_qubits: generators.n_qubits(), edges, corrections, generators })
}

/// `H' = -J Σ_a K_a + B Σ_i σ_z^(i)` on the toric-code graph form.
pub fn kitaev_perturbed(lx: usize, ly: usize, j: f64, b: f64) -> Result<HamiltonianSum> {
    kitaev_perturbed_axis(lx, ly, j, b, FieldAxis::Z)
}

pub fn kitaev_perturbed_axis(lx: usize, ly: usize, j: f64, b: f64, axis: FieldAxis) -> Result<HamiltonianSum> {
    let form = toric_graph_form(lx, ly)?;
    kitaev_on_graph(form.n_qubits, &form.edges, j, b, axis)
}

pub fn kitaev_on_graph(n: usize, edges: &[(usize, usize)], j: f64, b: f64, axis: FieldAxis) -> Result<HamiltonianSum> {
    let mut h = graph_hamiltonian(n, edges)?;
    for t in &mut h.terms {
        t.set_coeff(C64::new(-j, 0.0));
    }
    if b != 0.0 {
        for i in 0..n {
            h.terms.push(PauliString::new(n, &[(i, axis.pauli())], b));
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_counts() {
        assert_eq!(lattice_edges(4, 4, true).len(), 32);
        assert_eq!(lattice_edges(2, 2, true).len(), 4);
        assert_eq!(lattice_edges(1, 2, false), vec![(0, 1)]);
        let h = ising_2d(4, 4, 1.0, 2.0, true);
        let zz = h.terms().iter().filter(|t| t.support().len() == 2).count();
        let x = h.terms().iter().filter(|t| t.support().len() == 1).count();
        assert_eq!((zz, x), (32, 16));
        assert_eq!(heisenberg_2d(3, 2, false).terms().len(), 3 * lattice_edges(3, 2, false).len());
    }

    #[test]
    fn long_range_pairs() {
        let h = long_range_ising(3, 0.0);
        let c: Vec<(Vec<usize>, f64)> = h.terms().iter().map(|t| (t.support(), t.coeff().re)).collect();
        assert_eq!(c, vec![(vec![0, 1], 1.0), (vec![0, 2], 0.5), (vec![1, 2], 1.0)]);
        assert_eq!(long_range_ising(2, 0.0).terms()[0].coeff().re, 1.0);
    }

    #[test]
    fn spin_glass_is_seeded() {
        let a = spin_glass_2d(3, 3, 7);
        assert_eq!(a, spin_glass_2d(3, 3, 7));
        assert_ne!(a, spin_glass_2d(3, 3, 8));
        for (_, j) in spin_glass_couplings(4, 4, 3) {
            assert!((j - 1.0).abs() < 0.6);
        }
    }

    #[test]
    fn toric_structure() {
        let lat = toric_lattice(2, 3).unwrap();
        assert_eq!(lat.n_qubits, 12);
        assert_eq!(lat.loops.len(), 6);
        assert_eq!(lat.crosses.len(), 5);
        for g in lat.loops.iter().chain(&lat.crosses) {
            let mut s = g.to_vec();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 4);
        }
        let g = toric_code_generators(2, 3).unwrap();
        assert_eq!(g.len(), 12);
    }

    #[test]
    fn basis_action() {
        let p = PauliString::from_letters("XYZ", 1.0).unwrap();
        let (out, ph) = p.apply_to_basis(0b011);
        assert_eq!(out, 0b101);
        assert!((ph - C64::new(0.0, 1.0)).norm() < 1e-15);
    }
}
