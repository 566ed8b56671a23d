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

//! Tree tensor states.
//!
//! A tree is a set of tensor nodes joined by bonds; physical sites hang off
//! nodes as extra legs, so an outer node may carry two spins and the root
//! none. Node tensors list their bond legs in neighbour order followed by
//! their physical legs in site order.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hamiltonians::HamiltonianSum;
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::mps::{Boundary, MpsState, SweepOptions, SweepResult, ACCEPT_SLACK};
use crate::operators::ProductOperator;
use crate::oracle::{checked_dim, Expand, StateVector};
use crate::rng::Rng;
use crate::tensor::{contract, DenseTensor};

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    /// `(neighbour, bond dimension)`.
    pub bonds: Vec<(usize, usize)>,
    pub sites: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeTopology {
    n_sites: usize,
    nodes: Vec<TreeNode>,
}

impl TreeTopology {
    pub fn new(n_sites: usize, nodes: Vec<TreeNode>) -> Result<Self> {
        let k = nodes.len();
        if k == 0 {
            return Err(Error::InvalidArgument("a tree needs at least one node".into()));
        }
        let mut owner = vec![usize::MAX; n_sites];
        let mut n_edges = 0;
        for (u, node) in nodes.iter().enumerate() {
            for &s in &node.sites {
                if s >= n_sites || owner[s] != usize::MAX {
                    return Err(Error::InvalidArgument(format!("site {s} missing or assigned twice")));
                }
                owner[s] = u;
            }
            for &(v, d) in &node.bonds {
                if v >= k || v == u || d == 0 {
                    return Err(Error::InvalidArgument(format!("bad bond ({u}, {v})")));
                }
                match nodes[v].bonds.iter().find(|b| b.0 == u) {
                    Some(&(_, d2)) if d2 == d => {}
                    _ => return Err(Error::InvalidArgument(format!("bond ({u}, {v}) not symmetric"))),
                }
                n_edges += 1;
            }
        }
        if owner.iter().any(|&o| o == usize::MAX) {
            return Err(Error::InvalidArgument("some site has no node".into()));
        }
        if n_edges / 2 + 1 != k {
            return Err(Error::InvalidArgument("graph is not a tree".into()));
        }
        let t = Self { n_sites, nodes };
        if t.dfs_order(0).len() != k {
            return Err(Error::InvalidArgument("tree is disconnected".into()));
        }
        Ok(t)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, u: usize) -> &TreeNode {
        &self.nodes[u]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn degree(&self, u: usize) -> usize {
        self.nodes[u].bonds.len()
    }

    /// Leg of node `u` pointing at neighbour `v`.
    pub fn leg(&self, u: usize, v: usize) -> usize {
        self.nodes[u].bonds.iter().position(|b| b.0 == v).expect("adjacent nodes")
    }

    pub fn bond_dim(&self, u: usize, v: usize) -> usize {
        self.nodes[u].bonds[self.leg(u, v)].1
    }

    fn set_bond_dim(&mut self, u: usize, v: usize, d: usize) {
        let lu = self.leg(u, v);
        let lv = self.leg(v, u);
        self.nodes[u].bonds[lu].1 = d;
        self.nodes[v].bonds[lv].1 = d;
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for (u, n) in self.nodes.iter().enumerate() {
            for &(v, _) in &n.bonds {
                if u < v {
                    e.push((u, v));
                }
            }
        }
        e
    }

    /// Tensor shape of node `u` for local dimension `q`.
    pub fn shape(&self, u: usize, q: usize) -> Vec<usize> {
        let n = &self.nodes[u];
        let mut s: Vec<usize> = n.bonds.iter().map(|b| b.1).collect();
        s.extend(std::iter::repeat(q).take(n.sites.len()));
        if s.is_empty() {
            s.push(1);
        }
        s
    }

    /// Preorder from `root`, children visited in neighbour order.
    pub fn dfs_order(&self, root: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![(root, usize::MAX)];
        let mut seen = vec![false; self.nodes.len()];
        while let Some((u, p)) = stack.pop() {
            if seen[u] {
                continue;
            }
            seen[u] = true;
            out.push(u);
            for &(v, _) in self.nodes[u].bonds.iter().rev() {
                if v != p {
                    stack.push((v, u));
                }
            }
        }
        out
    }

    /// Node path from `a` to `b` inclusive.
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let mut parent = vec![usize::MAX; self.nodes.len()];
        let mut queue = std::collections::VecDeque::from([a]);
        parent[a] = a;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.nodes[u].bonds {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        let mut p = vec![b];
        while *p.last().unwrap() != a {
            p.push(parent[*p.last().unwrap()]);
        }
        p.reverse();
        p
    }

    /// Nodes on `u`'s side of the bond `(u, v)`.
    pub fn side(&self, u: usize, v: usize) -> Vec<usize> {
        let mut out = vec![u];
        let mut stack = vec![(u, v)];
        while let Some((x, p)) = stack.pop() {
            for &(y, _) in &self.nodes[x].bonds {
                if y != p {
                    out.push(y);
                    stack.push((y, x));
                }
            }
        }
        out
    }

    fn sites_on_side(&self, u: usize, v: usize) -> usize {
        self.side(u, v).iter().map(|&x| self.nodes[x].sites.len()).sum()
    }

    /// Caps every bond at the largest Schmidt rank it can carry.
    fn cap_bonds(mut self, q: usize) -> Self {
        for (u, v) in self.edges() {
            let a = self.sites_on_side(u, v);
            let b = self.n_sites - a;
            let cap = q.checked_pow(a.min(b) as u32).unwrap_or(usize::MAX);
            let d = self.bond_dim(u, v).min(cap);
            self.set_bond_dim(u, v, d);
        }
        self
    }
}

fn link(nodes: &mut [TreeNode], a: usize, b: usize, d: usize) {
    nodes[a].bonds.push((b, d));
    nodes[b].bonds.push((a, d));
}

/// Subcubic tree over sites `0..n` in order.
pub fn subcubic_tree(n_sites: usize, chi: usize) -> Result<TreeTopology> {
    subcubic_tree_with_order(&(0..n_sites).collect::<Vec<_>>(), chi, 2)
}

/// Subcubic tree whose outer nodes hold consecutive pairs of `order`.
pub fn subcubic_tree_with_order(order: &[usize], chi: usize, q: usize) -> Result<TreeTopology> {
    let n = order.len();
    if n < 2 {
        return Err(Error::InvalidArgument("a tree needs at least two sites".into()));
    }
    if chi == 0 {
        return Err(Error::InvalidArgument("bond dimension must be positive".into()));
    }
    let mut nodes: Vec<TreeNode> =
        order.chunks(2).map(|c| TreeNode { bonds: Vec::new(), sites: c.to_vec() }).collect();
    if nodes.len() == 1 {
        return TreeTopology::new(n, nodes);
    }
    let mut level: Vec<usize> = (0..nodes.len()).collect();
    while level.len() > 3 {
        let mut next = Vec::new();
        for pair in level.chunks(2) {
            if pair.len() == 2 {
                let id = nodes.len();
                nodes.push(TreeNode { bonds: Vec::new(), sites: Vec::new() });
                link(&mut nodes, id, pair[0], chi);
                link(&mut nodes, id, pair[1], chi);
                next.push(id);
            } else {
                next.push(pair[0]);
            }
        }
        level = next;
    }
    if level.len() == 3 {
        let id = nodes.len();
        nodes.push(TreeNode { bonds: Vec::new(), sites: Vec::new() });
        for &c in &level {
            link(&mut nodes, id, c, chi);
        }
    } else {
        link(&mut nodes, level[0], level[1], chi);
    }
    // Root last in construction order; move it to index 0 for a stable DFS start.
    let root = nodes.len() - 1;
    let nodes = relabel(nodes, root);
    Ok(TreeTopology::new(n, nodes)?.cap_bonds(q))
}

fn relabel(nodes: Vec<TreeNode>, root: usize) -> Vec<TreeNode> {
    let k = nodes.len();
    let map = |u: usize| if u == root { 0 } else if u < root { u + 1 } else { u };
    let mut out = vec![TreeNode { bonds: Vec::new(), sites: Vec::new() }; k];
    for (u, n) in nodes.into_iter().enumerate() {
        out[map(u)] = TreeNode { bonds: n.bonds.into_iter().map(|(v, d)| (map(v), d)).collect(), sites: n.sites };
    }
    out
}

/// Path of single-site nodes; the tree form of an open MPS.
pub fn chain_tree(n_sites: usize, chi: usize) -> Result<TreeTopology> {
    if n_sites < 2 {
        return Err(Error::InvalidArgument("a chain needs at least two sites".into()));
    }
    let mut nodes: Vec<TreeNode> = (0..n_sites).map(|s| TreeNode { bonds: Vec::new(), sites: vec![s] }).collect();
    for j in 0..n_sites - 1 {
        link(&mut nodes, j, j + 1, chi);
    }
    Ok(TreeTopology::new(n_sites, nodes)?.cap_bonds(2))
}

/// Chain whose two end nodes hold two sites each.
///
/// With `chi = q²` the end tensors only change the local basis of their
/// neighbour, which is what the redundancy-discounted parameter count drops.
pub fn flat_tree(n_sites: usize, chi: usize) -> Result<TreeTopology> {
    if n_sites < 4 {
        return chain_tree(n_sites, chi);
    }
    let k = n_sites - 2;
    let mut nodes: Vec<TreeNode> = (0..k)
        .map(|j| {
            let sites = if j == 0 {
                vec![0, 1]
            } else if j == k - 1 {
                vec![n_sites - 2, n_sites - 1]
            } else {
                vec![j + 1]
            };
            TreeNode { bonds: Vec::new(), sites }
        })
        .collect();
    for j in 0..k - 1 {
        link(&mut nodes, j, j + 1, chi);
    }
    Ok(TreeTopology::new(n_sites, nodes)?.cap_bonds(2))
}

/// Site order from greedy pairing on interaction weight.
///
/// Repeatedly pairs the two unpaired sites with the largest summed
/// coupling; ties go to the lowest indices. Pairs are then ordered so that
/// each next pair couples most strongly to the one before it.
pub fn greedy_site_order(h: &HamiltonianSum) -> Vec<usize> {
    let w = h.interaction_weights();
    let n = w.len();
    let mut free: Vec<usize> = (0..n).collect();
    let mut pairs: Vec<Vec<usize>> = Vec::new();
    while free.len() >= 2 {
        let mut best = (f64::NEG_INFINITY, 0, 1);
        for i in 0..free.len() {
            for j in i + 1..free.len() {
                let x = w[free[i]][free[j]];
                if x > best.0 {
                    best = (x, i, j);
                }
            }
        }
        let (a, b) = (free[best.1], free[best.2]);
        pairs.push(vec![a, b]);
        free.retain(|&s| s != a && s != b);
    }
    if let Some(&s) = free.first() {
        pairs.push(vec![s]);
    }
    let mut order = vec![pairs.remove(0)];
    while !pairs.is_empty() {
        let last = order.last().unwrap();
        let (k, _) = pairs
            .iter()
            .enumerate()
            .map(|(k, p)| (k, p.iter().map(|&a| last.iter().map(|&b| w[a][b]).sum::<f64>()).sum::<f64>()))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        order.push(pairs.remove(k));
    }
    order.concat()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TtsState {
    topology: TreeTopology,
    q: usize,
    tensors: Vec<DenseTensor>,
}

impl TtsState {
    pub fn new(topology: TreeTopology, q: usize, tensors: Vec<DenseTensor>) -> Result<Self> {
        if tensors.len() != topology.n_nodes() {
            return Err(Error::Shape("one tensor per node".into()));
        }
        for (u, t) in tensors.iter().enumerate() {
            if t.shape() != topology.shape(u, q).as_slice() {
                return Err(Error::Shape(format!("node {u}: {:?} vs {:?}", t.shape(), topology.shape(u, q))));
            }
        }
        Ok(Self { topology, q, tensors })
    }

    pub fn random(topology: TreeTopology, q: usize, rng: &mut Rng) -> Self {
        let tensors = (0..topology.n_nodes()).map(|u| DenseTensor::random(&topology.shape(u, q), rng)).collect();
        let mut t = Self { topology, q, tensors };
        t.normalize();
        t
    }

    pub fn product(topology: TreeTopology, locals: &[Vec<C64>]) -> Result<Self> {
        let q = locals.first().map_or(2, |v| v.len());
        let mut topo = topology;
        for (u, v) in topo.edges() {
            topo.set_bond_dim(u, v, 1);
        }
        let tensors = (0..topo.n_nodes())
            .map(|u| {
                let sites = &topo.node(u).sites;
                DenseTensor::from_fn(&topo.shape(u, q), |i| {
                    let nb = topo.degree(u);
                    sites.iter().enumerate().map(|(k, &s)| locals[s][i[nb + k]]).product::<C64>()
                })
            })
            .collect();
        Self::new(topo, q, tensors)
    }

    /// The chain-tree form of an open MPS.
    pub fn from_mps(m: &MpsState) -> Result<Self> {
        if m.boundary() != Boundary::Open || m.n_sites() < 2 {
            return Err(Error::InvalidArgument("needs an open chain of at least two sites".into()));
        }
        let n = m.n_sites();
        let mut nodes: Vec<TreeNode> = (0..n).map(|s| TreeNode { bonds: Vec::new(), sites: vec![s] }).collect();
        for j in 0..n - 1 {
            link(&mut nodes, j, j + 1, m.site(j).shape()[2]);
        }
        let topo = TreeTopology::new(n, nodes)?;
        let q = m.local_dim();
        let tensors = (0..n)
            .map(|j| {
                let t = m.site(j).permute(&[0, 2, 1]);
                t.reshape(&topo.shape(j, q))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(topo, q, tensors)
    }

    pub fn topology(&self) -> &TreeTopology {
        &self.topology
    }

    pub fn local_dim(&self) -> usize {
        self.q
    }

    pub fn n_sites(&self) -> usize {
        self.topology.n_sites
    }

    pub fn tensor(&self, u: usize) -> &DenseTensor {
        &self.tensors[u]
    }

    pub fn tensors(&self) -> &[DenseTensor] {
        &self.tensors
    }

    pub fn n_entries(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn normalize(&mut self) {
        let n = tts_norm_squared(self);
        if n > 0.0 {
            self.tensors[0].scale_in_place(C64::new(1.0 / n.sqrt(), 0.0));
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Leg {
    Bond(usize),
    Site(usize),
}

impl TtsState {
    fn contract_subtree(&self, u: usize, parent: Option<usize>) -> (DenseTensor, Vec<Leg>) {
        let node = self.topology.node(u);
        let mut x = self.tensors[u].clone();
        let mut labels: Vec<Leg> = node.bonds.iter().map(|b| Leg::Bond(b.0)).collect();
        labels.extend(node.sites.iter().map(|&s| Leg::Site(s)));
        if labels.is_empty() {
            return (x, labels);
        }
        for &(v, _) in &node.bonds {
            if Some(v) == parent {
                continue;
            }
            let (y, ylabels) = self.contract_subtree(v, Some(u));
            let leg = labels.iter().position(|l| *l == Leg::Bond(v)).unwrap();
            let yleg = ylabels.iter().position(|l| *l == Leg::Bond(u)).unwrap();
            x = contract(&x, &y, &[(leg, yleg)]).expect("bond dims");
            labels.remove(leg);
            labels.extend(ylabels.into_iter().filter(|l| *l != Leg::Bond(u)));
        }
        (x, labels)
    }
}

impl Expand for TtsState {
    fn expand(&self) -> Result<StateVector> {
        let n = self.n_sites();
        checked_dim(n, self.q)?;
        let (x, labels) = self.contract_subtree(0, None);
        let mut perm = vec![0; n];
        for (k, l) in labels.iter().enumerate() {
            if let Leg::Site(s) = l {
                perm[*s] = k;
            }
        }
        let x = if n == labels.len() { x.permute(&perm) } else { x };
        StateVector::new(n, self.q, x.into_data())
    }
}

/// Block of the subtree on `u`'s side of bond `(u, v)`: `B[α, α']`, ket then bra.
fn block(t: &TtsState, ops: &[Option<CMatrix>], u: usize, v: Option<usize>, cache: &mut HashMap<(usize, usize), CMatrix>) -> DenseTensor {
    let node = t.topology.node(u);
    let mut x = t.tensors[u].clone();
    for (leg, &(w, _)) in node.bonds.iter().enumerate() {
        if Some(w) == v {
            continue;
        }
        let b = match cache.get(&(w, u)) {
            Some(b) => b.clone(),
            None => {
                let b = block(t, ops, w, Some(u), cache).to_matrix(1);
                cache.insert((w, u), b.clone());
                b
            }
        };
        x = x.apply_to_leg(leg, &linalg::transpose(&b));
    }
    for (k, &s) in node.sites.iter().enumerate() {
        if let Some(o) = &ops[s] {
            x = x.apply_to_leg(node.bonds.len() + k, o);
        }
    }
    match v {
        Some(v) => {
            let leg = t.topology.leg(u, v);
            let g = x.gram_except(&t.tensors[u], leg);
            DenseTensor::from_matrix(&g, &[g.nrows(), g.ncols()]).expect("shape")
        }
        None => DenseTensor::scalar(x.inner(&t.tensors[u])),
    }
}

/// `⟨ψ| ⊗_j O_j |ψ⟩` (unnormalized); `None` is the identity.
pub fn tts_product_expectation(t: &TtsState, ops: &[Option<CMatrix>]) -> Result<C64> {
    if ops.len() != t.n_sites() {
        return Err(Error::DimensionMismatch(format!("{} operators for {} sites", ops.len(), t.n_sites())));
    }
    for o in ops.iter().flatten() {
        if o.nrows() != t.q || o.ncols() != t.q {
            return Err(Error::DimensionMismatch("operator does not match the local dimension".into()));
        }
    }
    let mut cache = HashMap::new();
    Ok(block(t, ops, 0, None, &mut cache).data()[0])
}

pub fn tts_norm_squared(t: &TtsState) -> f64 {
    tts_product_expectation(t, &vec![None; t.n_sites()]).expect("identity ops").re.max(0.0)
}

/// `Σ_c ⟨ψ|c|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn tts_expectation_components(t: &TtsState, comps: &[ProductOperator]) -> Result<C64> {
    let n = tts_norm_squared(t);
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mut acc = ZERO;
    for c in comps {
        acc += c.coeff * tts_product_expectation(t, &c.factors)?;
    }
    Ok(acc / n)
}

pub fn tts_expectation(t: &TtsState, h: &HamiltonianSum) -> Result<f64> {
    if h.n_sites() != t.n_sites() || t.q != 2 {
        return Err(Error::DimensionMismatch("Hamiltonian does not act on this tree".into()));
    }
    let e = tts_expectation_components(t, &h.product_operators())?;
    Ok(e.re)
}

/// Subtree blocks per component, invalidated node by node.
pub struct TreeEnvs<'a> {
    comps: &'a [ProductOperator],
    /// Slot 0 is the metric.
    caches: Vec<HashMap<(usize, usize), CMatrix>>,
}

impl<'a> TreeEnvs<'a> {
    pub fn new(comps: &'a [ProductOperator]) -> Self {
        Self { comps, caches: vec![HashMap::new(); comps.len() + 1] }
    }

    /// Drops every block whose subtree contains `u`.
    pub fn invalidate(&mut self, t: &TtsState, u: usize) {
        for cache in &mut self.caches {
            cache.retain(|&(a, b), _| !t.topology.side(a, b).contains(&u));
        }
    }

    pub fn effective_pair(&mut self, t: &TtsState, u: usize) -> (CMatrix, CMatrix) {
        let n = t.n_sites();
        let shape = t.topology.shape(u, t.q);
        let p: usize = shape.iter().product();
        let mut h = linalg::zeros(p, p);
        let mut metric = linalg::zeros(p, p);
        let node = t.topology.node(u).clone();
        let id_ops = vec![None; n];
        for c in 0..self.caches.len() {
            let (ops, coeff) = if c == 0 { (&id_ops, ONE) } else { (&self.comps[c - 1].factors, self.comps[c - 1].coeff) };
            let mut m = linalg::identity(1);
            for &(w, _) in &node.bonds {
                let b = match self.caches[c].get(&(w, u)) {
                    Some(b) => b.clone(),
                    None => {
                        let b = block(t, ops, w, Some(u), &mut self.caches[c]).to_matrix(1);
                        self.caches[c].insert((w, u), b.clone());
                        b
                    }
                };
                m = linalg::kron(&m, &linalg::transpose(&b));
            }
            for &s in &node.sites {
                let o = ops[s].clone().unwrap_or_else(|| linalg::identity(t.q));
                m = linalg::kron(&m, &o);
            }
            if c == 0 {
                metric = m;
            } else {
                h = linalg::add(&h, &linalg::scale(&m, coeff));
            }
        }
        (linalg::hermitian_part(&h), linalg::hermitian_part(&metric))
    }
}

pub fn tts_effective_pair(t: &TtsState, vertex: usize, h: &HamiltonianSum) -> Result<(CMatrix, CMatrix)> {
    if vertex >= t.topology.n_nodes() || h.n_sites() != t.n_sites() {
        return Err(Error::InvalidArgument("vertex or Hamiltonian does not fit the tree".into()));
    }
    let comps = h.product_operators();
    Ok(TreeEnvs::new(&comps).effective_pair(t, vertex))
}

/// QR of node `u` toward neighbour `v`; `R` is absorbed into `v`.
fn push_toward(t: &mut TtsState, u: usize, v: usize) {
    let leg = t.topology.leg(u, v);
    let x = &t.tensors[u];
    let r = x.rank();
    let mut perm: Vec<usize> = (0..r).filter(|&k| k != leg).collect();
    perm.push(leg);
    let xp = x.permute(&perm);
    let (qm, rm) = linalg::qr_reduce(&xp.to_matrix(r - 1));
    let k = qm.ncols();
    let mut shape: Vec<usize> = xp.shape()[..r - 1].to_vec();
    shape.push(k);
    let qt = DenseTensor::from_matrix(&qm, &shape).expect("shape");
    let mut inv = vec![0; r];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    t.tensors[u] = qt.permute(&inv);
    let lv = t.topology.leg(v, u);
    t.tensors[v] = t.tensors[v].apply_to_leg(lv, &rm);
    t.topology.set_bond_dim(u, v, k);
}

/// Every node but `center` becomes an isometry toward `center`; the last `R`
/// factors are kept in `center`, so the state is unchanged.
pub fn tts_canonicalize(t: &TtsState, center: usize) -> Result<TtsState> {
    if center >= t.topology.n_nodes() {
        return Err(Error::InvalidArgument("center out of range".into()));
    }
    let mut out = t.clone();
    let order = t.topology.dfs_order(center);
    for &u in order.iter().rev() {
        if u != center {
            let parent = t.topology.path(u, center)[1];
            push_toward(&mut out, u, parent);
        }
    }
    Ok(out)
}

/// Largest deviation of non-center nodes from the isometry condition toward `center`.
pub fn tts_isometry_deviation(t: &TtsState, center: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for u in 0..t.topology.n_nodes() {
        if u == center {
            continue;
        }
        let path = t.topology.path(u, center);
        let leg = t.topology.leg(u, path[1]);
        let g = t.tensors[u].gram_except(&t.tensors[u], leg);
        worst = worst.max(linalg::distance(&g, &linalg::identity(g.nrows())));
    }
    worst
}

/// Moves the orthogonality center from `from` to `to` along the tree path.
fn move_center(t: &mut TtsState, envs: &mut TreeEnvs<'_>, from: usize, to: usize) {
    let path = t.topology.path(from, to);
    for w in path.windows(2) {
        push_toward(t, w[0], w[1]);
        envs.invalidate(t, w[0]);
        envs.invalidate(t, w[1]);
    }
}

/// One-site variational minimization over tree nodes, preorder from node 0
/// and back each sweep.
pub fn tts_sweep_minimize_components(
    t: &TtsState,
    comps: &[ProductOperator],
    opts: &SweepOptions,
) -> Result<SweepResult<TtsState>> {
    if opts.max_sweeps == 0 {
        return Err(Error::InvalidArgument("max_sweeps must be at least 1".into()));
    }
    let order = t.topology.dfs_order(0);
    let mut state = tts_canonicalize(t, order[0])?;
    state.normalize();
    let mut envs = TreeEnvs::new(comps);
    let mut center = order[0];
    let energy_at = |s: &TtsState, envs: &mut TreeEnvs<'_>, u: usize| {
        let (h, m) = envs.effective_pair(s, u);
        let x = s.tensors[u].data().to_vec();
        linalg::quadratic_form(&h, &x).re / linalg::quadratic_form(&m, &x).re
    };
    let mut energy = energy_at(&state, &mut envs, center);
    let mut trace = vec![energy];
    let mut sweep_energies = Vec::new();
    let mut skipped = Vec::new();
    let mut converged = false;
    let mut last = energy;
    let full: Vec<usize> = order.iter().copied().chain(order.iter().rev().copied()).collect();
    for sweep in 0..opts.max_sweeps {
        for &u in &full {
            move_center(&mut state, &mut envs, center, u);
            center = u;
            let (h, metric) = envs.effective_pair(&state, u);
            match linalg::solve_generalized_eig_min(&h, &metric, opts.metric_cutoff) {
                Ok(sol) => {
                    if sol.eigenvalue <= energy + ACCEPT_SLACK * energy.abs().max(1.0) {
                        let shape = state.tensors[u].shape().to_vec();
                        state.tensors[u] = DenseTensor::new(shape, sol.eigenvector)?;
                        envs.invalidate(&state, u);
                        energy = sol.eigenvalue;
                    }
                }
                Err(Error::DegenerateMetric) => {
                    log::warn!("degenerate metric at node {u} in sweep {sweep}, update skipped");
                    skipped.push((sweep, u));
                }
                Err(e) => return Err(e),
            }
            trace.push(energy);
        }
        sweep_energies.push(energy);
        if sweep > 0 && (last - energy).abs() <= opts.rel_tol * energy.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        last = energy;
    }
    state.normalize();
    Ok(SweepResult { state, energy_trace: trace, sweep_energies, skipped, converged })
}

pub fn tts_sweep_minimize(t: &TtsState, h: &HamiltonianSum, max_sweeps: usize, rel_tol: f64) -> Result<SweepResult<TtsState>> {
    if h.n_sites() != t.n_sites() || t.q != 2 {
        return Err(Error::DimensionMismatch("Hamiltonian does not act on this tree".into()));
    }
    let comps = h.product_operators();
    tts_sweep_minimize_components(t, &comps, &SweepOptions { max_sweeps, rel_tol, ..Default::default() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{Pauli, PauliString};
    use crate::oracle::{fidelity, product_expectation};
    use crate::rng::seeded;

    #[test]
    fn six_site_shape() {
        let t = subcubic_tree(6, 4).unwrap();
        assert_eq!(t.n_nodes(), 4);
        assert_eq!(t.degree(0), 3);
        assert!(t.node(0).sites.is_empty());
        for u in 1..4 {
            assert_eq!(t.node(u).sites.len(), 2);
            assert_eq!(t.degree(u), 1);
        }
        let t2 = subcubic_tree(2, 4).unwrap();
        assert_eq!(t2.n_nodes(), 1);
        assert_eq!(t2.node(0).sites, vec![0, 1]);
        let t16 = subcubic_tree(16, 4).unwrap();
        assert!(t16.nodes().iter().all(|n| n.bonds.len() <= 3));
        assert_eq!(t16.nodes().iter().map(|n| n.sites.len()).sum::<usize>(), 16);
        assert_eq!(t16.edges().len() + 1, t16.n_nodes());
        assert_eq!(chain_tree(3, 2).unwrap().edges().len(), 2);
    }

    #[test]
    fn chain_tree_matches_mps() {
        let mut rng = seeded(1);
        let m = MpsState::random(Boundary::Open, 6, 2, 3, &mut rng);
        let t = TtsState::from_mps(&m).unwrap();
        let a = m.expand().unwrap();
        let b = t.expand().unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn product_expectations() {
        let mut rng = seeded(2);
        let t = TtsState::random(subcubic_tree(8, 3).unwrap(), 2, &mut rng);
        let v = t.expand().unwrap();
        let ops: Vec<Option<CMatrix>> = (0..8)
            .map(|_| {
                let m = CMatrix::from_fn(2, 2, |_, _| crate::rng::uniform_complex(&mut rng));
                Some(m)
            })
            .collect();
        let mut p = ProductOperator::identity(8);
        p.factors = ops.clone();
        let want = product_expectation(&v, &p).unwrap() * v.norm_sqr();
        assert!((tts_product_expectation(&t, &ops).unwrap() - want).norm() < 1e-10);
        assert!((tts_product_expectation(&t, &vec![None; 8]).unwrap() - ONE).norm() < 1e-10);
        let z = TtsState::product(subcubic_tree(4, 2).unwrap(), &vec![vec![ONE, ZERO]; 4]).unwrap();
        let zs = vec![Some(Pauli::Z.matrix()); 4];
        assert!((tts_product_expectation(&z, &zs).unwrap() - ONE).norm() < 1e-14);
    }

    #[test]
    fn canonical_form() {
        let mut rng = seeded(3);
        let t = TtsState::random(subcubic_tree(6, 3).unwrap(), 2, &mut rng);
        for center in 0..t.topology().n_nodes() {
            let c = tts_canonicalize(&t, center).unwrap();
            assert!(tts_isometry_deviation(&c, center) < 1e-10);
            let f = fidelity(&t.expand().unwrap(), &c.expand().unwrap()).unwrap();
            assert!((f - 1.0).abs() < 1e-10);
            let (_, metric) = tts_effective_pair(&c, center, &HamiltonianSum::identity(6)).unwrap();
            assert!(linalg::distance(&metric, &linalg::identity(metric.nrows())) < 1e-10);
        }
    }

    #[test]
    fn sweep_product_ground_state() {
        let mut rng = seeded(4);
        let n = 6;
        let h = HamiltonianSum::new(n, (0..n).map(|i| PauliString::new(n, &[(i, Pauli::Z)], 1.0)).collect()).unwrap();
        let t = TtsState::random(subcubic_tree(n, 2).unwrap(), 2, &mut rng);
        let r = tts_sweep_minimize(&t, &h, 3, 1e-12).unwrap();
        assert!((r.energy_trace.last().unwrap() + n as f64).abs() < 1e-8);
        for w in r.energy_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
    }
}
