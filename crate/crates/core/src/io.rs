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

//! Line-oriented text format shared by all state, circuit and Hamiltonian types.
//!
//! Every block opens with a keyword line and closes with `end`. Numbers are written
//! with 17 significant digits, so a write/read round trip is exact. Blank lines and
//! lines starting with `#` are ignored.
//!
//! ```text
//! mps open 2
//! tensor 1 2 2
//! 1.0000000000000000e0 0.0000000000000000e0
//! ...
//! end
//! ```

use std::fmt::Write as _;

use crate::circuits::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::hamiltonians::{HamiltonianSum, Lattice, PauliString};
use crate::linalg::{self, C64};
use crate::mps::{Boundary, MpsState};
use crate::peps::PepsState;
use crate::rage::{Backbone, RageState};
use crate::tensor::DenseTensor;
use crate::tts::{TreeNode, TreeTopology, TtsState};
use crate::wgs::{AdjacencyPhases, LocalRotations};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_tensor(out: &mut String, t: &DenseTensor) {
    let dims: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "tensor {}", dims.join(" "));
    for z in t.data() {
        let _ = writeln!(out, "{} {}", num(z.re), num(z.im));
    }
}

pub fn write_hamiltonian(h: &HamiltonianSum) -> String {
    let mut out = format!("hamiltonian {}\n", h.n_sites());
    if let Some(l) = h.lattice() {
        let _ = writeln!(out, "lattice {} {} {}", l.lx, l.ly, if l.periodic { "periodic" } else { "open" });
    }
    for t in h.terms() {
        let letters: String = t.letters().iter().map(|p| p.letter()).collect();
        let _ = writeln!(out, "term {letters} {} {}", num(t.coeff().re), num(t.coeff().im));
    }
    out.push_str("end\n");
    out
}

pub fn write_circuit(c: &Circuit) -> String {
    let mut out = match c.seed {
        Some(s) => format!("circuit {} {s}\n", c.n_sites),
        None => format!("circuit {}\n", c.n_sites),
    };
    for g in &c.gates {
        match g {
            Gate::SingleQubit { site, matrix } => {
                let entries: Vec<String> = linalg::to_rows(matrix).iter().flat_map(|z| [num(z.re), num(z.im)]).collect();
                let _ = writeln!(out, "single {site} {}", entries.join(" "));
            }
            Gate::ControlledPhase { a, b, angle } => {
                let _ = writeln!(out, "cphase {a} {b} {}", num(*angle));
            }
        }
    }
    out.push_str("end\n");
    out
}

pub fn write_mps(m: &MpsState) -> String {
    let kind = match m.boundary() {
        Boundary::Open => "open",
        Boundary::Closed => "closed",
    };
    let mut out = format!("mps {kind} {}\n", m.n_sites());
    for t in m.sites() {
        write_tensor(&mut out, t);
    }
    out.push_str("end\n");
    out
}

pub fn write_tts(t: &TtsState) -> String {
    let top = t.topology();
    let mut out = format!("tts {} {} {}\n", top.n_sites(), top.n_nodes(), t.local_dim());
    for (u, node) in top.nodes().iter().enumerate() {
        let sites: Vec<String> = node.sites.iter().map(|s| s.to_string()).collect();
        let bonds: Vec<String> = node.bonds.iter().map(|(v, d)| format!("{v}:{d}")).collect();
        let _ = writeln!(out, "node {u} sites {} bonds {}", sites.join(" "), bonds.join(" "));
    }
    for tensor in t.tensors() {
        write_tensor(&mut out, tensor);
    }
    out.push_str("end\n");
    out
}

pub fn write_phases(p: &AdjacencyPhases) -> String {
    let (n, q) = (p.n_sites(), p.local_dim());
    let mut out = format!("phases {n} {q}\n");
    for a in 0..n {
        for b in a + 1..n {
            for s in 1..q {
                for t in 1..q {
                    let v = p.entry(a, b, s, t);
                    if v != 0.0 {
                        let _ = writeln!(out, "phase {a} {b} {s} {t} {}", num(v));
                    }
                }
            }
        }
    }
    out.push_str("end\n");
    out
}

pub fn write_rotations(r: &LocalRotations) -> String {
    let mut out = format!("rotations {}\n", r.n_sites());
    for j in 0..r.n_sites() {
        let x = r.params(j);
        let _ = writeln!(out, "rot {j} {} {} {} {}", num(x[0]), num(x[1]), num(x[2]), num(x[3]));
    }
    out.push_str("end\n");
    out
}

pub fn write_rage(r: &RageState) -> String {
    let mut out = String::from("rage\n");
    match &r.backbone {
        Backbone::Mps(m) => out.push_str(&write_mps(m)),
        Backbone::Tts(t) => out.push_str(&write_tts(t)),
    }
    out.push_str(&write_phases(&r.phases));
    out.push_str(&write_rotations(&r.rotations));
    out.push_str("end\n");
    out
}

pub fn write_peps(p: &PepsState) -> String {
    let (lx, ly) = p.dims();
    let mut out = format!("peps {lx} {ly} {}\n", p.local_dim());
    for t in p.tensors() {
        write_tensor(&mut out, t);
    }
    out.push_str("end\n");
    out
}

struct Reader<'a> {
    lines: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let l = l.trim();
                (!l.is_empty() && !l.starts_with('#')).then(|| (i + 1, l.split_whitespace().collect()))
            })
            .collect();
        Self { lines, pos: 0 }
    }

    fn line_no(&self) -> usize {
        self.lines.get(self.pos).map(|l| l.0).unwrap_or_else(|| self.lines.last().map(|l| l.0 + 1).unwrap_or(1))
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { line: self.line_no(), msg: msg.into() })
    }

    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        match self.lines.get(self.pos) {
            Some(l) => {
                self.pos += 1;
                Ok(l.clone())
            }
            None => self.err("unexpected end of input"),
        }
    }

    fn peek_keyword(&self) -> Option<&'a str> {
        self.lines.get(self.pos).map(|l| l.1[0])
    }

    fn header(&mut self, keyword: &str) -> Result<(usize, Vec<&'a str>)> {
        let (line, toks) = self.next()?;
        if toks[0] != keyword {
            return Err(Error::Parse { line, msg: format!("expected `{keyword}`, found `{}`", toks[0]) });
        }
        Ok((line, toks[1..].to_vec()))
    }

    fn end(&mut self) -> Result<()> {
        let (line, toks) = self.next()?;
        if toks != ["end"] {
            return Err(Error::Parse { line, msg: format!("expected `end`, found `{}`", toks.join(" ")) });
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.lines.len() {
            return self.err("trailing content");
        }
        Ok(())
    }

    fn tensor(&mut self) -> Result<DenseTensor> {
        let (line, dims) = self.header("tensor")?;
        let shape = dims.iter().map(|d| parse::<usize>(d, line)).collect::<Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            let (l, toks) = self.next()?;
            if toks.len() != 2 {
                return Err(Error::Parse { line: l, msg: "expected `re im`".into() });
            }
            data.push(C64::new(parse(toks[0], l)?, parse(toks[1], l)?));
        }
        DenseTensor::new(shape, data).map_err(|e| Error::Parse { line, msg: e.to_string() })
    }
}

fn parse<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse { line, msg: format!("cannot parse `{tok}`") })
}

fn arity(toks: &[&str], n: usize, line: usize) -> Result<()> {
    if toks.len() != n {
        return Err(Error::Parse { line, msg: format!("expected {n} fields, found {}", toks.len()) });
    }
    Ok(())
}

fn at(line: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Parse { .. } => e,
        other => Error::Parse { line, msg: other.to_string() },
    }
}

fn read_hamiltonian_block(r: &mut Reader) -> Result<HamiltonianSum> {
    let (line, toks) = r.header("hamiltonian")?;
    arity(&toks, 1, line)?;
    let n: usize = parse(toks[0], line)?;
    let mut lattice = None;
    if r.peek_keyword() == Some("lattice") {
        let (l, t) = r.header("lattice")?;
        arity(&t, 3, l)?;
        let periodic = match t[2] {
            "periodic" => true,
            "open" => false,
            other => return Err(Error::Parse { line: l, msg: format!("unknown boundary `{other}`") }),
        };
        let (lx, ly): (usize, usize) = (parse(t[0], l)?, parse(t[1], l)?);
        if lx * ly != n {
            return Err(Error::Parse { line: l, msg: format!("{lx}×{ly} lattice does not hold {n} sites") });
        }
        lattice = Some(Lattice { lx, ly, periodic });
    }
    let mut terms = Vec::new();
    while r.peek_keyword() == Some("term") {
        let (l, t) = r.header("term")?;
        arity(&t, 3, l)?;
        if t[0].chars().count() != n {
            return Err(Error::Parse { line: l, msg: format!("term has {} letters, expected {n}", t[0].chars().count()) });
        }
        let mut p = PauliString::from_letters(t[0], 0.0).map_err(at(l))?;
        p.set_coeff(C64::new(parse(t[1], l)?, parse(t[2], l)?));
        terms.push(p);
    }
    r.end()?;
    let h = HamiltonianSum::new(n, terms).map_err(at(line))?;
    Ok(match lattice {
        Some(l) => h.with_lattice(l),
        None => h,
    })
}

fn read_circuit_block(r: &mut Reader) -> Result<Circuit> {
    let (line, toks) = r.header("circuit")?;
    if toks.is_empty() || toks.len() > 2 {
        return Err(Error::Parse { line, msg: "expected `circuit <n> [seed]`".into() });
    }
    let mut c = Circuit::new(parse(toks[0], line)?);
    c.seed = toks.get(1).map(|s| parse(s, line)).transpose()?;
    loop {
        match r.peek_keyword() {
            Some("single") => {
                let (l, t) = r.header("single")?;
                arity(&t, 9, l)?;
                let site = parse(t[0], l)?;
                let v = t[1..].iter().map(|x| parse::<f64>(x, l)).collect::<Result<Vec<_>>>()?;
                let m = linalg::from_rows(2, 2, &[C64::new(v[0], v[1]), C64::new(v[2], v[3]), C64::new(v[4], v[5]), C64::new(v[6], v[7])]);
                c.push(Gate::single(site, m).map_err(at(l))?).map_err(at(l))?;
            }
            Some("cphase") => {
                let (l, t) = r.header("cphase")?;
                arity(&t, 3, l)?;
                let g = Gate::controlled_phase(parse(t[0], l)?, parse(t[1], l)?, parse(t[2], l)?).map_err(at(l))?;
                c.push(g).map_err(at(l))?;
            }
            _ => break,
        }
    }
    r.end()?;
    Ok(c)
}

fn read_mps_block(r: &mut Reader) -> Result<MpsState> {
    let (line, toks) = r.header("mps")?;
    arity(&toks, 2, line)?;
    let boundary = match toks[0] {
        "open" => Boundary::Open,
        "closed" => Boundary::Closed,
        other => return Err(Error::Parse { line, msg: format!("unknown boundary `{other}`") }),
    };
    let n: usize = parse(toks[1], line)?;
    let sites = (0..n).map(|_| r.tensor()).collect::<Result<Vec<_>>>()?;
    r.end()?;
    MpsState::new(boundary, sites).map_err(at(line))
}

fn read_tts_block(r: &mut Reader) -> Result<TtsState> {
    let (line, toks) = r.header("tts")?;
    arity(&toks, 3, line)?;
    let (n, n_nodes, q): (usize, usize, usize) = (parse(toks[0], line)?, parse(toks[1], line)?, parse(toks[2], line)?);
    let mut nodes = Vec::with_capacity(n_nodes);
    for u in 0..n_nodes {
        let (l, t) = r.header("node")?;
        if t.len() < 2 || parse::<usize>(t[0], l)? != u || t[1] != "sites" {
            return Err(Error::Parse { line: l, msg: format!("expected `node {u} sites ... bonds ...`") });
        }
        let split = t.iter().position(|x| *x == "bonds").ok_or(Error::Parse { line: l, msg: "missing `bonds`".into() })?;
        let sites = t[2..split].iter().map(|s| parse(s, l)).collect::<Result<Vec<usize>>>()?;
        let bonds = t[split + 1..]
            .iter()
            .map(|b| {
                let (v, d) = b.split_once(':').ok_or(Error::Parse { line: l, msg: format!("bad bond `{b}`") })?;
                Ok((parse(v, l)?, parse(d, l)?))
            })
            .collect::<Result<Vec<(usize, usize)>>>()?;
        nodes.push(TreeNode { bonds, sites });
    }
    let topology = TreeTopology::new(n, nodes).map_err(at(line))?;
    let tensors = (0..n_nodes).map(|_| r.tensor()).collect::<Result<Vec<_>>>()?;
    r.end()?;
    TtsState::new(topology, q, tensors).map_err(at(line))
}

fn read_phases_block(r: &mut Reader) -> Result<AdjacencyPhases> {
    let (line, toks) = r.header("phases")?;
    arity(&toks, 2, line)?;
    let (n, q): (usize, usize) = (parse(toks[0], line)?, parse(toks[1], line)?);
    if q < 2 {
        return Err(Error::Parse { line, msg: "local dimension must be at least 2".into() });
    }
    let mut p = AdjacencyPhases::zeros(n, q);
    while r.peek_keyword() == Some("phase") {
        let (l, t) = r.header("phase")?;
        arity(&t, 5, l)?;
        let (a, b, s, u): (usize, usize, usize, usize) = (parse(t[0], l)?, parse(t[1], l)?, parse(t[2], l)?, parse(t[3], l)?);
        if a >= n || b >= n || a == b || s == 0 || u == 0 || s >= q || u >= q {
            return Err(Error::Parse { line: l, msg: "phase indices out of range".into() });
        }
        p.set_entry(a, b, s, u, parse(t[4], l)?);
    }
    r.end()?;
    Ok(p)
}

fn read_rotations_block(r: &mut Reader) -> Result<LocalRotations> {
    let (line, toks) = r.header("rotations")?;
    arity(&toks, 1, line)?;
    let n: usize = parse(toks[0], line)?;
    let mut x = Vec::with_capacity(n);
    for j in 0..n {
        let (l, t) = r.header("rot")?;
        arity(&t, 5, l)?;
        if parse::<usize>(t[0], l)? != j {
            return Err(Error::Parse { line: l, msg: format!("expected site {j}") });
        }
        x.push([parse(t[1], l)?, parse(t[2], l)?, parse(t[3], l)?, parse(t[4], l)?]);
    }
    r.end()?;
    LocalRotations::from_params(x).map_err(at(line))
}

fn read_rage_block(r: &mut Reader) -> Result<RageState> {
    let (line, toks) = r.header("rage")?;
    arity(&toks, 0, line)?;
    let backbone = match r.peek_keyword() {
        Some("mps") => Backbone::Mps(read_mps_block(r)?),
        Some("tts") => Backbone::Tts(read_tts_block(r)?),
        _ => return r.err("expected an `mps` or `tts` backbone"),
    };
    let phases = read_phases_block(r)?;
    let rotations = read_rotations_block(r)?;
    r.end()?;
    RageState::new(backbone, phases, rotations).map_err(at(line))
}

fn read_peps_block(r: &mut Reader) -> Result<PepsState> {
    let (line, toks) = r.header("peps")?;
    arity(&toks, 3, line)?;
    let (lx, ly, q): (usize, usize, usize) = (parse(toks[0], line)?, parse(toks[1], line)?, parse(toks[2], line)?);
    let tensors = (0..lx * ly).map(|_| r.tensor()).collect::<Result<Vec<_>>>()?;
    r.end()?;
    let p = PepsState::new(lx, ly, tensors).map_err(at(line))?;
    if p.local_dim() != q {
        return Err(Error::Parse { line, msg: format!("tensors have local dimension {}, header says {q}", p.local_dim()) });
    }
    Ok(p)
}

fn whole<T>(text: &str, f: impl FnOnce(&mut Reader) -> Result<T>) -> Result<T> {
    let mut r = Reader::new(text);
    let v = f(&mut r)?;
    r.finish()?;
    Ok(v)
}

pub fn read_hamiltonian(text: &str) -> Result<HamiltonianSum> {
    whole(text, read_hamiltonian_block)
}

pub fn read_circuit(text: &str) -> Result<Circuit> {
    whole(text, read_circuit_block)
}

pub fn read_mps(text: &str) -> Result<MpsState> {
    whole(text, read_mps_block)
}

pub fn read_tts(text: &str) -> Result<TtsState> {
    whole(text, read_tts_block)
}

pub fn read_phases(text: &str) -> Result<AdjacencyPhases> {
    whole(text, read_phases_block)
}

pub fn read_rotations(text: &str) -> Result<LocalRotations> {
    whole(text, read_rotations_block)
}

pub fn read_rage(text: &str) -> Result<RageState> {
    whole(text, read_rage_block)
}

pub fn read_peps(text: &str) -> Result<PepsState> {
    whole(text, read_peps_block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::random_circuit;
    use crate::hamiltonians::ising_2d;
    use crate::rng::seeded;
    use crate::tts::subcubic_tree;

    #[test]
    fn round_trips() {
        let mut rng = seeded(5);
        let h = ising_2d(2, 2, 1.0, 0.7, false);
        assert_eq!(read_hamiltonian(&write_hamiltonian(&h)).unwrap(), h);
        let c = random_circuit(4, 3, 11).unwrap();
        assert_eq!(read_circuit(&write_circuit(&c)).unwrap(), c);
        let m = MpsState::random(Boundary::Open, 4, 2, 3, &mut rng);
        assert_eq!(read_mps(&write_mps(&m)).unwrap(), m);
        let mc = MpsState::random(Boundary::Closed, 3, 3, 2, &mut rng);
        assert_eq!(read_mps(&write_mps(&mc)).unwrap(), mc);
        let t = TtsState::random(subcubic_tree(6, 3).unwrap(), 2, &mut rng);
        assert_eq!(read_tts(&write_tts(&t)).unwrap(), t);
        let p = PepsState::random(2, 3, 2, 2, &mut rng);
        assert_eq!(read_peps(&write_peps(&p)).unwrap(), p);
        let rs = RageState::new(Backbone::Mps(m), AdjacencyPhases::random_qubit(4, &mut rng), LocalRotations::random(4, &mut rng)).unwrap();
        assert_eq!(read_rage(&write_rage(&rs)).unwrap(), rs);
        let pq = AdjacencyPhases::random_qudit(3, 3, &mut rng);
        assert_eq!(read_phases(&write_phases(&pq)).unwrap(), pq);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = read_hamiltonian("hamiltonian 2\nterm XZ 1.0 0.0\nterm X 1.0 0.0\nend\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 3, msg: "term has 1 letters, expected 2".into() });
        let e = read_mps("# header\nmps open 1\ntensor 1 2 1\n1.0 0.0\nbogus 0.0\nend\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 5, .. }));
        let e = read_circuit("circuit 2\ncphase 0 0 1.0\nend\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(matches!(read_rotations("rotations 1\n").unwrap_err(), Error::Parse { line: 2, .. }));
    }
}
