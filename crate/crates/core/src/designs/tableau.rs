//! Clifford group elements as symplectic tableaus with phase bits, plus
//! gate synthesis, exact enumeration (n ≤ 2) and uniform sampling.
//!
//! A tableau stores the images of the generators X_i, Z_i under conjugation.
//! Each image is a Hermitian signed Pauli `(-1)^sign · i^{|x∧z|} X^x Z^z`;
//! bit q of the masks refers to qubit q, and qubit q acts on bit q of the
//! computational basis index.

use std::collections::{HashMap, VecDeque};

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::qmath::CMatrix;

/// Elementary Clifford gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    H(usize),
    S(usize),
    Cnot(usize, usize),
    Cz(usize, usize),
}

impl Gate {
    /// Inverse as a short word over the same gate set (S⁻¹ = S·S·S).
    pub fn inverse_word(&self) -> Vec<Gate> {
        match *self {
            Gate::H(q) => vec![Gate::H(q)],
            Gate::S(q) => vec![Gate::S(q), Gate::S(q), Gate::S(q)],
            Gate::Cnot(c, t) => vec![Gate::Cnot(c, t)],
            Gate::Cz(c, t) => vec![Gate::Cz(c, t)],
        }
    }

    pub fn to_token(&self) -> String {
        match *self {
            Gate::H(q) => format!("H{q}"),
            Gate::S(q) => format!("S{q}"),
            Gate::Cnot(c, t) => format!("CX{c}-{t}"),
            Gate::Cz(c, t) => format!("CZ{c}-{t}"),
        }
    }

    pub fn from_token(tok: &str) -> Result<Gate> {
        let bad = || Error::Parse {
            what: "gate token".into(),
            reason: format!("unrecognized `{tok}`"),
        };
        let pair = |s: &str| -> Result<(usize, usize)> {
            let (a, b) = s.split_once('-').ok_or_else(bad)?;
            Ok((
                a.parse().map_err(|_| bad())?,
                b.parse().map_err(|_| bad())?,
            ))
        };
        if let Some(rest) = tok.strip_prefix("CX") {
            let (c, t) = pair(rest)?;
            Ok(Gate::Cnot(c, t))
        } else if let Some(rest) = tok.strip_prefix("CZ") {
            let (c, t) = pair(rest)?;
            Ok(Gate::Cz(c, t))
        } else if let Some(rest) = tok.strip_prefix('H') {
            Ok(Gate::H(rest.parse().map_err(|_| bad())?))
        } else if let Some(rest) = tok.strip_prefix('S') {
            Ok(Gate::S(rest.parse().map_err(|_| bad())?))
        } else {
            Err(bad())
        }
    }
}

/// Applies a gate to a state vector in place.
pub fn apply_gate(state: &mut [C64], gate: Gate) {
    let d = state.len();
    match gate {
        Gate::H(q) => {
            let bit = 1usize << q;
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..d {
                if i & bit == 0 {
                    let a0 = state[i];
                    let a1 = state[i | bit];
                    state[i] = (a0 + a1) * s;
                    state[i | bit] = (a0 - a1) * s;
                }
            }
        }
        Gate::S(q) => {
            let bit = 1usize << q;
            for (i, a) in state.iter_mut().enumerate() {
                if i & bit != 0 {
                    *a *= C64::i();
                }
            }
        }
        Gate::Cnot(c, t) => {
            let cb = 1usize << c;
            let tb = 1usize << t;
            for i in 0..d {
                if i & cb != 0 && i & tb == 0 {
                    state.swap(i, i | tb);
                }
            }
        }
        Gate::Cz(c, t) => {
            let cb = 1usize << c;
            let tb = 1usize << t;
            for (i, a) in state.iter_mut().enumerate() {
                if i & cb != 0 && i & tb != 0 {
                    *a = -*a;
                }
            }
        }
    }
}

/// Applies a gate word in circuit order (first gate first).
pub fn apply_gates(state: &mut [C64], gates: &[Gate]) {
    for g in gates {
        apply_gate(state, *g);
    }
}

/// U|x⟩ for a gate word.
pub fn gates_to_state(gates: &[Gate], n: usize, x: usize) -> Vec<C64> {
    let d = 1usize << n;
    let mut v = vec![C64::new(0.0, 0.0); d];
    v[x] = C64::new(1.0, 0.0);
    apply_gates(&mut v, gates);
    v
}

/// Dense unitary of a gate word (columns are U|x⟩).
pub fn gates_to_dense(gates: &[Gate], n: usize) -> CMatrix {
    let d = 1usize << n;
    let mut u = CMatrix::zeros(d, d);
    for x in 0..d {
        let col = gates_to_state(gates, n, x);
        for (i, v) in col.iter().enumerate() {
            u[(i, x)] = *v;
        }
    }
    u
}

/// A Hermitian signed Pauli: `(-1)^sign · i^{|x∧z|} X^x Z^z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliRow {
    pub x: u32,
    pub z: u32,
    pub sign: bool,
}

impl PauliRow {
    pub fn x_gen(q: usize) -> Self {
        PauliRow {
            x: 1 << q,
            z: 0,
            sign: false,
        }
    }

    pub fn z_gen(q: usize) -> Self {
        PauliRow {
            x: 0,
            z: 1 << q,
            sign: false,
        }
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// Conjugation by an elementary gate: row ← g · row · g†.
    pub fn apply_gate(&mut self, gate: Gate) {
        match gate {
            Gate::H(q) => {
                let bit = 1u32 << q;
                let xq = self.x & bit != 0;
                let zq = self.z & bit != 0;
                if xq && zq {
                    self.sign = !self.sign;
                }
                if xq != zq {
                    self.x ^= bit;
                    self.z ^= bit;
                }
            }
            Gate::S(q) => {
                let bit = 1u32 << q;
                if self.x & bit != 0 {
                    if self.z & bit != 0 {
                        self.sign = !self.sign;
                    }
                    self.z ^= bit;
                }
            }
            Gate::Cnot(c, t) => {
                let cb = 1u32 << c;
                let tb = 1u32 << t;
                let xc = self.x & cb != 0;
                let zt = self.z & tb != 0;
                let xt = self.x & tb != 0;
                let zc = self.z & cb != 0;
                if xc && zt && (xt == zc) {
                    self.sign = !self.sign;
                }
                if xc {
                    self.x ^= tb;
                }
                if zt {
                    self.z ^= cb;
                }
            }
            Gate::Cz(c, t) => {
                // CZ = H(t) · CNOT(c,t) · H(t)
                self.apply_gate(Gate::H(t));
                self.apply_gate(Gate::Cnot(c, t));
                self.apply_gate(Gate::H(t));
            }
        }
    }

    /// Dense matrix on n qubits.
    pub fn dense(&self, n: usize) -> CMatrix {
        let p = crate::models::pauli::PauliLabel::new(n, self.x, self.z);
        let m = p.dense();
        if self.sign {
            m.scale(-1.0)
        } else {
            m
        }
    }

    /// True iff the underlying Paulis anticommute.
    pub fn anticommutes(&self, other: &PauliRow) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 1
    }

    /// Exponent e with row = i^e X^x Z^z.
    fn phase_exp(&self) -> i64 {
        self.y_count() as i64 + if self.sign { 2 } else { 0 }
    }
}

/// Images of X_1..X_n and Z_1..Z_n under conjugation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CliffordTableau {
    pub n: usize,
    pub xout: Vec<PauliRow>,
    pub zout: Vec<PauliRow>,
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Self {
        CliffordTableau {
            n,
            xout: (0..n).map(PauliRow::x_gen).collect(),
            zout: (0..n).map(PauliRow::z_gen).collect(),
        }
    }

    pub fn apply_gate(&mut self, gate: Gate) {
        for r in self.xout.iter_mut().chain(self.zout.iter_mut()) {
            r.apply_gate(gate);
        }
    }

    pub fn from_gates(n: usize, gates: &[Gate]) -> Self {
        let mut t = CliffordTableau::identity(n);
        for g in gates {
            t.apply_gate(*g);
        }
        t
    }

    /// Image of an arbitrary signed Pauli under this tableau.
    pub fn image(&self, row: &PauliRow) -> PauliRow {
        // accumulate the product of generator images in qubit order
        let mut acc_x = 0u32;
        let mut acc_z = 0u32;
        let mut e: i64 = 0;
        for q in 0..self.n {
            for (bit_set, img) in [
                (row.x >> q & 1 == 1, &self.xout[q]),
                (row.z >> q & 1 == 1, &self.zout[q]),
            ] {
                if bit_set {
                    e += img.phase_exp() + 2 * ((acc_z & img.x).count_ones() as i64);
                    acc_x ^= img.x;
                    acc_z ^= img.z;
                }
            }
        }
        // source row = i^{phase_exp} Π X^{x_q} Z^{z_q}; restore canonical form
        let canon = (acc_x & acc_z).count_ones() as i64;
        let total = (row.phase_exp() + e - canon).rem_euclid(4);
        debug_assert!(total % 2 == 0, "non-Hermitian tableau image");
        PauliRow {
            x: acc_x,
            z: acc_z,
            sign: total == 2,
        }
    }

    /// Composition: tableau of U_self · U_other.
    pub fn compose(&self, other: &CliffordTableau) -> CliffordTableau {
        CliffordTableau {
            n: self.n,
            xout: other.xout.iter().map(|r| self.image(r)).collect(),
            zout: other.zout.iter().map(|r| self.image(r)).collect(),
        }
    }

    /// Checks the symplectic conditions: images preserve the (anti)commutation
    /// relations of the generators.
    pub fn is_symplectic(&self) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                if self.xout[i].anticommutes(&self.xout[j]) {
                    return false;
                }
                if self.zout[i].anticommutes(&self.zout[j]) {
                    return false;
                }
                let want = i == j;
                if self.xout[i].anticommutes(&self.zout[j]) != want {
                    return false;
                }
            }
        }
        true
    }

    /// Compact canonical key (for deduplication and deterministic ordering).
    pub fn key(&self) -> Vec<u64> {
        self.xout
            .iter()
            .chain(self.zout.iter())
            .map(|r| ((r.sign as u64) << 63) | ((r.z as u64) << 31) | r.x as u64)
            .collect()
    }

    /// Synthesizes a gate word whose tableau equals `self` exactly.
    pub fn synthesize(&self) -> Vec<Gate> {
        let n = self.n;
        let mut t = self.clone();
        let mut ops: Vec<Gate> = Vec::new();
        let push = |t: &mut CliffordTableau, ops: &mut Vec<Gate>, g: Gate| {
            t.apply_gate(g);
            ops.push(g);
        };
        for i in 0..n {
            // step 1: bring the Z_i image to ±Z_i
            let has_x = |t: &CliffordTableau| (t.zout[i].x >> i).count_ones() > 0
                || (i + 1..n).any(|j| t.zout[i].x >> j & 1 == 1);
            if has_x(&t) {
                if t.zout[i].x >> i & 1 == 0 {
                    let j = (i + 1..n).find(|&j| t.zout[i].x >> j & 1 == 1).unwrap();
                    for g in swap_word(i, j) {
                        push(&mut t, &mut ops, g);
                    }
                }
                for j in i + 1..n {
                    if t.zout[i].x >> j & 1 == 1 {
                        push(&mut t, &mut ops, Gate::Cnot(i, j));
                    }
                }
                if t.zout[i].z >> i & 1 == 1 {
                    push(&mut t, &mut ops, Gate::S(i));
                }
                for j in i + 1..n {
                    if t.zout[i].z >> j & 1 == 1 {
                        push(&mut t, &mut ops, Gate::Cz(i, j));
                    }
                }
                push(&mut t, &mut ops, Gate::H(i));
            } else {
                if t.zout[i].z >> i & 1 == 0 {
                    let j = (i + 1..n).find(|&j| t.zout[i].z >> j & 1 == 1).unwrap();
                    for g in swap_word(i, j) {
                        push(&mut t, &mut ops, g);
                    }
                }
                for j in i + 1..n {
                    if t.zout[i].z >> j & 1 == 1 {
                        push(&mut t, &mut ops, Gate::Cnot(j, i));
                    }
                }
            }
            // step 2: bring the X_i image to ±X_i, fixing Z_i
            debug_assert!(t.xout[i].x >> i & 1 == 1);
            for j in i + 1..n {
                if t.xout[i].x >> j & 1 == 1 {
                    push(&mut t, &mut ops, Gate::Cnot(i, j));
                }
            }
            if t.xout[i].z >> i & 1 == 1 {
                push(&mut t, &mut ops, Gate::S(i));
            }
            for j in i + 1..n {
                if t.xout[i].z >> j & 1 == 1 {
                    push(&mut t, &mut ops, Gate::Cz(i, j));
                }
            }
            // step 3: fix signs
            if t.xout[i].sign {
                push(&mut t, &mut ops, Gate::S(i));
                push(&mut t, &mut ops, Gate::S(i));
            }
            if t.zout[i].sign {
                push(&mut t, &mut ops, Gate::H(i));
                push(&mut t, &mut ops, Gate::S(i));
                push(&mut t, &mut ops, Gate::S(i));
                push(&mut t, &mut ops, Gate::H(i));
            }
        }
        debug_assert_eq!(t, CliffordTableau::identity(n));
        // ops reduce self to the identity; invert and reverse for the word
        let mut word = Vec::new();
        for g in ops.iter().rev() {
            word.extend(g.inverse_word());
        }
        word
    }
}

fn swap_word(i: usize, j: usize) -> Vec<Gate> {
    vec![Gate::Cnot(i, j), Gate::Cnot(j, i), Gate::Cnot(i, j)]
}

/// A Clifford group element: tableau plus a synthesized gate word.
#[derive(Clone, Debug)]
pub struct CliffordElement {
    pub tableau: CliffordTableau,
    pub gates: Vec<Gate>,
}

impl CliffordElement {
    pub fn from_tableau(tableau: CliffordTableau) -> Self {
        let gates = tableau.synthesize();
        CliffordElement { tableau, gates }
    }

    pub fn n_qubits(&self) -> usize {
        self.tableau.n
    }

    pub fn dim(&self) -> usize {
        1 << self.tableau.n
    }

    /// Dense unitary from the gate word. Rejected above 12 qubits; use the
    /// tableau beyond that.
    pub fn dense_unitary(&self) -> Result<CMatrix> {
        if self.tableau.n > 12 {
            return Err(Error::Unsupported(format!(
                "dense expansion rejected for n = {} > 12 qubits; use the tableau",
                self.tableau.n
            )));
        }
        Ok(gates_to_dense(&self.gates, self.tableau.n))
    }

    /// U|x⟩ without building the dense matrix.
    pub fn column(&self, x: usize) -> Vec<C64> {
        gates_to_state(&self.gates, self.tableau.n, x)
    }
}

/// Exact enumeration of the Clifford group modulo global phase.
///
/// Group orders: 24 for n = 1, 11520 for n = 2. Larger n must use
/// [`clifford_sample`].
pub fn clifford_enumerate(n: usize) -> Result<Vec<CliffordElement>> {
    if n == 0 || n > 2 {
        return Err(Error::Unsupported(format!(
            "exact enumeration only for n ∈ {{1, 2}} (got {n}); use clifford_sample"
        )));
    }
    let mut gens = Vec::new();
    for q in 0..n {
        gens.push(Gate::H(q));
        gens.push(Gate::S(q));
    }
    for a in 0..n {
        for b in 0..n {
            if a != b {
                gens.push(Gate::Cnot(a, b));
            }
        }
    }
    let start = CliffordTableau::identity(n);
    let mut seen: HashMap<Vec<u64>, CliffordTableau> = HashMap::new();
    seen.insert(start.key(), start.clone());
    let mut queue = VecDeque::from([start]);
    while let Some(t) = queue.pop_front() {
        for g in &gens {
            let mut t2 = t.clone();
            t2.apply_gate(*g);
            let k = t2.key();
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(k) {
                e.insert(t2.clone());
                queue.push_back(t2);
            }
        }
    }
    let mut tableaus: Vec<(Vec<u64>, CliffordTableau)> = seen.into_iter().collect();
    tableaus.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(tableaus
        .into_iter()
        .map(|(_, t)| CliffordElement::from_tableau(t))
        .collect())
}

/// Symplectic form on packed (x | z << n) bit vectors.
fn symp(n: usize, a: u64, b: u64) -> u64 {
    let mask = (1u64 << n) - 1;
    let (ax, az) = (a & mask, a >> n);
    let (bx, bz) = (b & mask, b >> n);
    (((ax & bz) ^ (az & bx)).count_ones() % 2) as u64
}

/// Uniformly samples a Clifford group element (modulo global phase).
///
/// The symplectic part is drawn by the canonical-layer construction: pick the
/// image pair of (X_i, Z_i) uniformly inside the running symplectic
/// complement, then recurse. Exactly uniform, no rejection; sign bits are
/// uniform on top.
pub fn clifford_sample<R: Rng>(n: usize, rng: &mut R) -> CliffordElement {
    assert!((1..=16).contains(&n));
    let mut basis: Vec<u64> = (0..2 * n)
        .map(|k| {
            let q = k / 2;
            if k % 2 == 0 {
                1u64 << q
            } else {
                1u64 << (n + q)
            }
        })
        .collect();
    let mut pairs: Vec<(u64, u64)> = Vec::with_capacity(n);
    for _ in 0..n {
        let m2 = basis.len();
        // v: uniform nonzero combination of the current basis
        let coeff = rng.random_range(1u64..(1u64 << m2));
        let mut v = 0u64;
        for (k, b) in basis.iter().enumerate() {
            if coeff >> k & 1 == 1 {
                v ^= b;
            }
        }
        // w: uniform among vectors with ⟨v, w⟩ = 1
        let pairings: Vec<u64> = basis.iter().map(|b| symp(n, v, *b)).collect();
        let j0 = pairings.iter().position(|p| *p == 1).expect("degenerate form");
        let mut w = basis[j0];
        for (k, b) in basis.iter().enumerate() {
            if k == j0 {
                continue;
            }
            if rng.random::<bool>() {
                w ^= b;
                if pairings[k] == 1 {
                    w ^= basis[j0];
                }
            }
        }
        pairs.push((v, w));
        // project the basis onto the symplectic complement of {v, w}
        let projected: Vec<u64> = basis
            .iter()
            .map(|b| {
                let mut bb = *b;
                if symp(n, v, bb) == 1 {
                    bb ^= w;
                }
                if symp(n, w, bb) == 1 {
                    bb ^= v;
                }
                bb
            })
            .collect();
        basis = gf2_independent(&projected, m2 - 2);
    }
    let mask = (1u64 << n) - 1;
    let tableau = CliffordTableau {
        n,
        xout: pairs
            .iter()
            .map(|(v, _)| PauliRow {
                x: (v & mask) as u32,
                z: (v >> n) as u32,
                sign: rng.random::<bool>(),
            })
            .collect(),
        zout: pairs
            .iter()
            .map(|(_, w)| PauliRow {
                x: (w & mask) as u32,
                z: (w >> n) as u32,
                sign: rng.random::<bool>(),
            })
            .collect(),
    };
    debug_assert!(tableau.is_symplectic());
    CliffordElement::from_tableau(tableau)
}

/// Extracts `want` independent vectors (GF(2) row reduction).
fn gf2_independent(vecs: &[u64], want: usize) -> Vec<u64> {
    let mut rows: Vec<u64> = Vec::with_capacity(want);
    let mut reduced: Vec<u64> = Vec::new();
    for v in vecs {
        let mut r = *v;
        for p in &reduced {
            let hp = 63 - p.leading_zeros();
            if r >> hp & 1 == 1 {
                r ^= p;
            }
        }
        if r != 0 {
            reduced.push(r);
            rows.push(*v);
            if rows.len() == want {
                break;
            }
        }
    }
    debug_assert_eq!(rows.len(), want);
    rows
}
