//! Pauli strings in binary-symplectic form, Clifford gates, and stabilizer
//! tableaux.
//!
//! A [`PauliString`] stores the X/Z bit vectors plus a phase exponent
//! `k ∈ {0,1,2,3}` so the operator is `i^k · W_1 ⊗ … ⊗ W_n` with literal
//! single-site letters `W_j ∈ {I,X,Y,Z}`. Hermitian strings have `k ∈ {0,2}`.
//!
//! A [`Tableau`] tracks the images of the `Z_j` generators (stabilizer rows)
//! and `X_j` generators (destabilizer rows) under a Clifford circuit, which is
//! the standard full-tableau construction: it simulates stabilizer states via
//! [`Tableau::apply`] and doubles as a symplectic representation of the
//! Clifford unitary itself for conjugating arbitrary strings.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{C64, DenseTensor};

/// One letter of the projective Pauli group.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliAxis {
    I,
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub fn from_index(m: usize) -> PauliAxis {
        match m {
            0 => PauliAxis::I,
            1 => PauliAxis::X,
            2 => PauliAxis::Y,
            3 => PauliAxis::Z,
            _ => panic!("pauli index out of range"),
        }
    }

    pub fn index(self) -> usize {
        match self {
            PauliAxis::I => 0,
            PauliAxis::X => 1,
            PauliAxis::Y => 2,
            PauliAxis::Z => 3,
        }
    }

    fn bits(self) -> (u8, u8) {
        match self {
            PauliAxis::I => (0, 0),
            PauliAxis::X => (1, 0),
            PauliAxis::Y => (1, 1),
            PauliAxis::Z => (0, 1),
        }
    }

    /// 2×2 matrix of the letter.
    pub fn matrix(self) -> DenseTensor {
        let i = C64::i();
        let (a, b, c, d) = match self {
            PauliAxis::I => (C64::ONE, C64::ZERO, C64::ZERO, C64::ONE),
            PauliAxis::X => (C64::ZERO, C64::ONE, C64::ONE, C64::ZERO),
            PauliAxis::Y => (C64::ZERO, -i, i, C64::ZERO),
            PauliAxis::Z => (C64::ONE, C64::ZERO, C64::ZERO, -C64::ONE),
        };
        DenseTensor::from_data(&[2, 2], vec![a, b, c, d]).unwrap()
    }
}

/// An n-qubit Pauli operator `i^phase · W_1 ⊗ … ⊗ W_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliString {
    x: Vec<u8>,
    z: Vec<u8>,
    /// Power of `i` in front of the literal tensor product.
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { x: vec![0; n], z: vec![0; n], phase: 0 }
    }

    /// Single-letter string: `axis` on `site`, identity elsewhere.
    pub fn single(n: usize, site: usize, axis: PauliAxis) -> Self {
        let mut p = Self::identity(n);
        p.set_axis(site, axis);
        p
    }

    pub fn from_axes(axes: &[PauliAxis]) -> Self {
        let mut p = Self::identity(axes.len());
        for (j, &a) in axes.iter().enumerate() {
            p.set_axis(j, a);
        }
        p
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn phase_factor(&self) -> C64 {
        match self.phase {
            0 => C64::ONE,
            1 => C64::i(),
            2 => -C64::ONE,
            _ => -C64::i(),
        }
    }

    pub fn set_phase(&mut self, phase: u8) {
        self.phase = phase % 4;
    }

    pub fn mul_phase(&mut self, quarter_turns: u8) {
        self.phase = (self.phase + quarter_turns) % 4;
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    pub fn x_bit(&self, site: usize) -> u8 {
        self.x[site]
    }

    pub fn z_bit(&self, site: usize) -> u8 {
        self.z[site]
    }

    pub fn axis(&self, site: usize) -> PauliAxis {
        match (self.x[site], self.z[site]) {
            (0, 0) => PauliAxis::I,
            (1, 0) => PauliAxis::X,
            (1, 1) => PauliAxis::Y,
            _ => PauliAxis::Z,
        }
    }

    pub fn set_axis(&mut self, site: usize, axis: PauliAxis) {
        let (x, z) = axis.bits();
        self.x[site] = x;
        self.z[site] = z;
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&b| b == 0) && self.z.iter().all(|&b| b == 0)
    }

    /// Sites carrying a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.axis(j) != PauliAxis::I).collect()
    }

    /// The binary-symplectic row `(x | z)` without the phase.
    pub fn symplectic_row(&self) -> Vec<u8> {
        let mut r = self.x.clone();
        r.extend_from_slice(&self.z);
        r
    }

    /// Product `self · other` with exact phase tracking.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch("pauli product: length mismatch".into()));
        }
        let mut phase = (self.phase + other.phase) % 4;
        let mut x = vec![0u8; self.len()];
        let mut z = vec![0u8; self.len()];
        for j in 0..self.len() {
            let (p, extra) = mul_letter(self.axis(j), other.axis(j));
            phase = (phase + extra) % 4;
            let (bx, bz) = p.bits();
            x[j] = bx;
            z[j] = bz;
        }
        Ok(Self { x, z, phase })
    }

    /// Parse text like `XYIZ`, `+XX`, `-iYZ`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut rest = s.trim();
        let mut phase = 0u8;
        if let Some(r) = rest.strip_prefix("+i") {
            phase = 1;
            rest = r;
        } else if let Some(r) = rest.strip_prefix("-i") {
            phase = 3;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        } else if let Some(r) = rest.strip_prefix('-') {
            phase = 2;
            rest = r;
        }
        let mut axes = Vec::new();
        for ch in rest.chars() {
            axes.push(match ch {
                'I' => PauliAxis::I,
                'X' => PauliAxis::X,
                'Y' => PauliAxis::Y,
                'Z' => PauliAxis::Z,
                _ => return Err(Error::Config(format!("bad pauli letter '{ch}'"))),
            });
        }
        if axes.is_empty() {
            return Err(Error::Config("empty pauli string".into()));
        }
        let mut p = Self::from_axes(&axes);
        p.phase = phase;
        Ok(p)
    }

    /// Dense `2^n × 2^n` matrix of the string, phase included.
    pub fn dense(&self) -> DenseTensor {
        let mut m = self.axis(0).matrix().scale(self.phase_factor());
        for j in 1..self.len() {
            m = m.kron(&self.axis(j).matrix()).unwrap();
        }
        m
    }

    /// In-place conjugation `p ↦ g p g†`.
    pub fn conjugate_with(&mut self, gate: CliffordGate) {
        match gate {
            CliffordGate::H(j) => {
                if self.x[j] & self.z[j] == 1 {
                    self.mul_phase(2); // Y -> -Y
                }
                let t = self.x[j];
                self.x[j] = self.z[j];
                self.z[j] = t;
            }
            CliffordGate::S(j) => {
                // X -> Y, Y -> -X, Z -> Z.
                if self.x[j] & self.z[j] == 1 {
                    self.mul_phase(2);
                }
                self.z[j] ^= self.x[j];
            }
            CliffordGate::Sdg(j) => {
                // X -> -Y, Y -> X.
                self.z[j] ^= self.x[j];
                if self.x[j] & self.z[j] == 1 {
                    self.mul_phase(2);
                }
            }
            CliffordGate::X(j) => {
                if self.z[j] == 1 {
                    self.mul_phase(2);
                }
            }
            CliffordGate::Y(j) => {
                if self.x[j] ^ self.z[j] == 1 {
                    self.mul_phase(2);
                }
            }
            CliffordGate::Z(j) => {
                if self.x[j] == 1 {
                    self.mul_phase(2);
                }
            }
            CliffordGate::Cnot(c, t) => {
                // Sign flips exactly on the XZ -> -YY and YY -> -XZ rows of the
                // update table.
                if self.x[c] & self.z[t] & (self.x[t] ^ self.z[c] ^ 1) == 1 {
                    self.mul_phase(2);
                }
                self.x[t] ^= self.x[c];
                self.z[c] ^= self.z[t];
            }
            CliffordGate::Cz(a, b) => {
                self.conjugate_with(CliffordGate::H(b));
                self.conjugate_with(CliffordGate::Cnot(a, b));
                self.conjugate_with(CliffordGate::H(b));
            }
            CliffordGate::Swap(a, b) => {
                self.x.swap(a, b);
                self.z.swap(a, b);
            }
        }
    }

    /// Conjugate through a whole circuit: `p ↦ U p U†` with `U = g_k … g_1`.
    pub fn conjugated_by_circuit(&self, gates: &[CliffordGate]) -> PauliString {
        let mut q = self.clone();
        for &g in gates {
            q.conjugate_with(g);
        }
        q
    }

    /// Inverse-direction conjugation: `p ↦ U† p U`.
    pub fn conjugated_by_circuit_inv(&self, gates: &[CliffordGate]) -> PauliString {
        let mut q = self.clone();
        for &g in gates.iter().rev() {
            q.conjugate_with(g.inverse());
        }
        q
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.phase {
            0 => write!(f, "+")?,
            1 => write!(f, "+i")?,
            2 => write!(f, "-")?,
            _ => write!(f, "-i")?,
        }
        for j in 0..self.len() {
            let c = match self.axis(j) {
                PauliAxis::I => 'I',
                PauliAxis::X => 'X',
                PauliAxis::Y => 'Y',
                PauliAxis::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Single-site product `a · b = i^k c`; returns `(c, k)`.
fn mul_letter(a: PauliAxis, b: PauliAxis) -> (PauliAxis, u8) {
    use PauliAxis::*;
    match (a, b) {
        (I, p) | (p, I) => (p, 0),
        (X, X) | (Y, Y) | (Z, Z) => (I, 0),
        (X, Y) => (Z, 1),
        (Y, X) => (Z, 3),
        (Y, Z) => (X, 1),
        (Z, Y) => (X, 3),
        (Z, X) => (Y, 1),
        (X, Z) => (Y, 3),
    }
}

/// `true` iff the symplectic inner product of the two binary rows vanishes.
pub fn symplectic_commutes(g: &PauliString, h: &PauliString) -> Result<bool> {
    if g.len() != h.len() {
        return Err(Error::ShapeMismatch("symplectic product: length mismatch".into()));
    }
    let mut acc = 0u8;
    for j in 0..g.len() {
        acc ^= (g.x[j] & h.z[j]) ^ (g.z[j] & h.x[j]);
    }
    Ok(acc == 0)
}

/// Elementary Clifford gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CliffordGate {
    H(usize),
    S(usize),
    /// Inverse phase gate.
    Sdg(usize),
    X(usize),
    Y(usize),
    Z(usize),
    /// Control then target.
    Cnot(usize, usize),
    Cz(usize, usize),
    Swap(usize, usize),
}

impl CliffordGate {
    pub fn inverse(self) -> CliffordGate {
        match self {
            CliffordGate::S(j) => CliffordGate::Sdg(j),
            CliffordGate::Sdg(j) => CliffordGate::S(j),
            g => g,
        }
    }

    /// Shift all site indices by `offset`.
    pub fn shifted(self, offset: usize) -> CliffordGate {
        match self {
            CliffordGate::H(j) => CliffordGate::H(j + offset),
            CliffordGate::S(j) => CliffordGate::S(j + offset),
            CliffordGate::Sdg(j) => CliffordGate::Sdg(j + offset),
            CliffordGate::X(j) => CliffordGate::X(j + offset),
            CliffordGate::Y(j) => CliffordGate::Y(j + offset),
            CliffordGate::Z(j) => CliffordGate::Z(j + offset),
            CliffordGate::Cnot(c, t) => CliffordGate::Cnot(c + offset, t + offset),
            CliffordGate::Cz(a, b) => CliffordGate::Cz(a + offset, b + offset),
            CliffordGate::Swap(a, b) => CliffordGate::Swap(a + offset, b + offset),
        }
    }

    /// Dense unitary on `n` qubits, site 0 being the most significant bit.
    pub fn dense(self, n: usize) -> DenseTensor {
        let h = DenseTensor::from_data(
            &[2, 2],
            vec![
                C64::from(0.5f64.sqrt()),
                C64::from(0.5f64.sqrt()),
                C64::from(0.5f64.sqrt()),
                -C64::from(0.5f64.sqrt()),
            ],
        )
        .unwrap();
        let s = DenseTensor::from_data(&[2, 2], vec![C64::ONE, C64::ZERO, C64::ZERO, C64::i()])
            .unwrap();
        let one_site = |j: usize, m: &DenseTensor| -> DenseTensor {
            let mut acc: Option<DenseTensor> = None;
            for k in 0..n {
                let f = if k == j { m.clone() } else { DenseTensor::identity_matrix(2) };
                acc = Some(match acc {
                    None => f,
                    Some(a) => a.kron(&f).unwrap(),
                });
            }
            acc.unwrap()
        };
        let bit = |v: usize, q: usize| (v >> (n - 1 - q)) & 1;
        match self {
            CliffordGate::H(j) => one_site(j, &h),
            CliffordGate::S(j) => one_site(j, &s),
            CliffordGate::Sdg(j) => one_site(j, &s.dagger().unwrap()),
            CliffordGate::X(j) => one_site(j, &PauliAxis::X.matrix()),
            CliffordGate::Y(j) => one_site(j, &PauliAxis::Y.matrix()),
            CliffordGate::Z(j) => one_site(j, &PauliAxis::Z.matrix()),
            CliffordGate::Cnot(c, t) => DenseTensor::from_fn(&[1 << n, 1 << n], |ix| {
                let (r, col) = (ix[0], ix[1]);
                let cb = bit(col, c);
                let expect_t = bit(col, t) ^ cb;
                let mut ok = bit(r, c) == cb && bit(r, t) == expect_t;
                for q in 0..n {
                    if q != c && q != t {
                        ok &= bit(r, q) == bit(col, q);
                    }
                }
                if ok { C64::ONE } else { C64::ZERO }
            }),
            CliffordGate::Cz(a, b) => DenseTensor::from_fn(&[1 << n, 1 << n], |ix| {
                if ix[0] != ix[1] {
                    return C64::ZERO;
                }
                if bit(ix[0], a) == 1 && bit(ix[0], b) == 1 { -C64::ONE } else { C64::ONE }
            }),
            CliffordGate::Swap(a, b) => DenseTensor::from_fn(&[1 << n, 1 << n], |ix| {
                let mut ok = bit(ix[0], a) == bit(ix[1], b) && bit(ix[0], b) == bit(ix[1], a);
                for q in 0..n {
                    if q != a && q != b {
                        ok &= bit(ix[0], q) == bit(ix[1], q);
                    }
                }
                if ok { C64::ONE } else { C64::ZERO }
            }),
        }
    }
}

/// Full stabilizer tableau: images of the `Z_j` (stabilizer rows) and `X_j`
/// (destabilizer rows) generators under the accumulated Clifford.
#[derive(Clone, Debug)]
pub struct Tableau {
    n: usize,
    stab: Vec<PauliString>,
    destab: Vec<PauliString>,
}

impl Tableau {
    /// Tableau of `|0…0⟩` (equivalently, of the identity Clifford).
    pub fn new(n: usize) -> Self {
        let stab = (0..n).map(|j| PauliString::single(n, j, PauliAxis::Z)).collect();
        let destab = (0..n).map(|j| PauliString::single(n, j, PauliAxis::X)).collect();
        Self { n, stab, destab }
    }

    pub fn from_circuit(n: usize, gates: &[CliffordGate]) -> Self {
        let mut t = Self::new(n);
        for &g in gates {
            t.apply(g);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn stabilizers(&self) -> &[PauliString] {
        &self.stab
    }

    pub fn destabilizers(&self) -> &[PauliString] {
        &self.destab
    }

    /// Conjugate every row by the gate.
    pub fn apply(&mut self, gate: CliffordGate) {
        for row in self.stab.iter_mut().chain(self.destab.iter_mut()) {
            row.conjugate_with(gate);
        }
    }

    /// Rows must pairwise commute, be independent over GF(2), and each
    /// destabilizer must anticommute exactly with its partner stabilizer.
    pub fn is_valid(&self) -> bool {
        for i in 0..self.n {
            for j in 0..self.n {
                if !symplectic_commutes(&self.stab[i], &self.stab[j]).unwrap() {
                    return false;
                }
                let c = symplectic_commutes(&self.destab[i], &self.stab[j]).unwrap();
                if (i == j) == c {
                    return false;
                }
            }
        }
        let rows: Vec<Vec<u8>> = self.stab.iter().map(|p| p.symplectic_row()).collect();
        gf2_rank(&rows) == self.n
    }

    /// `U p U†` (forward) computed by composing generator images.
    pub fn conjugate_pauli(&self, p: &PauliString) -> Result<PauliString> {
        if p.len() != self.n {
            return Err(Error::ShapeMismatch("conjugate_pauli: length mismatch".into()));
        }
        let mut acc = PauliString::identity(self.n);
        acc.set_phase(p.phase());
        for j in 0..self.n {
            match p.axis(j) {
                PauliAxis::I => {}
                PauliAxis::X => acc = acc.mul(&self.destab[j])?,
                PauliAxis::Z => acc = acc.mul(&self.stab[j])?,
                // Y = i·X·Z, so image(Y) = i·image(X)·image(Z); the literal Y
                // letter carries no i, so compensate with -i.
                PauliAxis::Y => {
                    let m = self.destab[j].mul(&self.stab[j])?;
                    acc = acc.mul(&m)?;
                    acc.mul_phase(1);
                }
            }
        }
        Ok(acc)
    }

    /// `U† p U` (inverse direction).
    pub fn conjugate_pauli_inv(&self, p: &PauliString) -> Result<PauliString> {
        if p.len() != self.n {
            return Err(Error::ShapeMismatch("conjugate_pauli: length mismatch".into()));
        }
        // Express row(p) over the images of the generators; the same product of
        // the bare generators is then U† p U up to a phase fixed by a forward
        // round trip.
        let fwd_rows: Vec<Vec<u8>> = self
            .destab
            .iter()
            .chain(self.stab.iter())
            .map(|r| r.symplectic_row())
            .collect();
        let target = p.symplectic_row();
        let coeffs = gf2_solve(&fwd_rows, &target).ok_or_else(|| {
            Error::Numeric("tableau rows do not span the Pauli group".into())
        })?;
        let mut candidate = PauliString::identity(self.n);
        for (idx, &c) in coeffs.iter().enumerate() {
            if c == 1 {
                let gen = if idx < self.n {
                    PauliString::single(self.n, idx, PauliAxis::X)
                } else {
                    PauliString::single(self.n, idx - self.n, PauliAxis::Z)
                };
                candidate = candidate.mul(&gen)?;
            }
        }
        let roundtrip = self.conjugate_pauli(&candidate)?;
        let k = (4 + p.phase() as i8 - roundtrip.phase() as i8) as u8 % 4;
        candidate.mul_phase(k);
        Ok(candidate)
    }

    /// Entanglement entropy (nats) of the stabilizer state across the
    /// bipartition `A` vs rest: `(N_A − k_A)·log 2` with `k_A` the number of
    /// independent group elements supported entirely inside `A`. That count is
    /// `N` minus the GF(2) rank of the generator matrix with `A`'s entries
    /// zeroed out (the kernel of the restriction to the complement).
    pub fn stabilizer_entropy(&self, subsystem: &[usize]) -> Result<f64> {
        for &j in subsystem {
            if j >= self.n {
                return Err(Error::Contract(format!("site {j} out of range")));
            }
        }
        let mut in_a = vec![false; self.n];
        for &j in subsystem {
            in_a[j] = true;
        }
        let rows: Vec<Vec<u8>> = self
            .stab
            .iter()
            .map(|p| {
                let mut r = Vec::with_capacity(2 * self.n);
                for j in 0..self.n {
                    r.push(if in_a[j] { 0 } else { p.x[j] });
                }
                for j in 0..self.n {
                    r.push(if in_a[j] { 0 } else { p.z[j] });
                }
                r
            })
            .collect();
        let k_a = self.n - gf2_rank(&rows);
        Ok((subsystem.len() as f64 - k_a as f64) * std::f64::consts::LN_2)
    }

    /// Measure `Z` on `site`, collapsing the tableau in place.
    pub fn measure_z(&mut self, site: usize, rng: &mut impl Rng) -> u8 {
        let anti: Vec<usize> = (0..self.n).filter(|&k| self.stab[k].x[site] == 1).collect();
        if let Some(&p) = anti.first() {
            let outcome: u8 = if rng.random::<bool>() { 1 } else { 0 };
            for k in anti[1..].iter() {
                self.stab[*k] = self.stab[*k].mul(&self.stab[p]).unwrap();
            }
            for k in 0..self.n {
                if k != p && self.destab[k].x[site] == 1 {
                    self.destab[k] = self.destab[k].mul(&self.stab[p]).unwrap();
                }
            }
            self.destab[p] = self.stab[p].clone();
            let mut new_stab = PauliString::single(self.n, site, PauliAxis::Z);
            if outcome == 1 {
                new_stab.mul_phase(2);
            }
            self.stab[p] = new_stab;
            outcome
        } else {
            // Deterministic outcome: Z_site is a product of stabilizers, found
            // through the destabilizer pairing.
            let mut acc = PauliString::identity(self.n);
            for k in 0..self.n {
                if self.destab[k].x[site] == 1 {
                    acc = acc.mul(&self.stab[k]).unwrap();
                }
            }
            if acc.phase() == 2 { 1 } else { 0 }
        }
    }

    /// The paper-layout generator matrix dump: `x-bits | z-bits | sign` rows.
    pub fn g_matrix_string(&self) -> String {
        let mut out = String::new();
        for p in &self.stab {
            for j in 0..self.n {
                out.push_str(&format!("{} ", p.x[j]));
            }
            out.push_str("| ");
            for j in 0..self.n {
                out.push_str(&format!("{} ", p.z[j]));
            }
            out.push_str(if p.phase() == 2 { "| -" } else { "| +" });
            out.push('\n');
        }
        out
    }

    /// Dense state vector `U|0…0⟩` for cross-checks (small n only).
    pub fn dense_state_from_circuit(n: usize, gates: &[CliffordGate]) -> DenseTensor {
        let mut v = DenseTensor::zeros(&[1 << n]);
        v.data_mut()[0] = C64::ONE;
        for &g in gates {
            let u = g.dense(n);
            v = crate::tensor::contract(&u, &[1], &v, &[0]).unwrap();
        }
        v
    }
}

/// Rank of a set of GF(2) rows.
pub fn gf2_rank(rows: &[Vec<u8>]) -> usize {
    let mut m: Vec<Vec<u8>> = rows.to_vec();
    let ncols = m.first().map(|r| r.len()).unwrap_or(0);
    let mut rank = 0;
    for col in 0..ncols {
        let pivot = (rank..m.len()).find(|&r| m[r][col] == 1);
        if let Some(p) = pivot {
            m.swap(rank, p);
            for r in 0..m.len() {
                if r != rank && m[r][col] == 1 {
                    for c in 0..ncols {
                        m[r][c] ^= m[rank][c];
                    }
                }
            }
            rank += 1;
            if rank == m.len() {
                break;
            }
        }
    }
    rank
}

/// Solve `sum_i y_i rows[i] = target` over GF(2); `None` if unsolvable.
pub fn gf2_solve(rows: &[Vec<u8>], target: &[u8]) -> Option<Vec<u8>> {
    let nrows = rows.len();
    let ncols = target.len();
    let mut m: Vec<Vec<u8>> = (0..ncols)
        .map(|c| {
            let mut row: Vec<u8> = (0..nrows).map(|r| rows[r][c]).collect();
            row.push(target[c]);
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..nrows {
        let pivot = (rank..m.len()).find(|&r| m[r][col] == 1);
        if let Some(p) = pivot {
            m.swap(rank, p);
            for r in 0..m.len() {
                if r != rank && m[r][col] == 1 {
                    for c in 0..=nrows {
                        m[r][c] ^= m[rank][c];
                    }
                }
            }
            pivots.push(col);
            rank += 1;
        }
    }
    for r in rank..m.len() {
        if m[r][nrows] == 1 {
            return None;
        }
    }
    let mut y = vec![0u8; nrows];
    for (r, &col) in pivots.iter().enumerate() {
        y[col] = m[r][nrows];
    }
    Some(y)
}

/// Reduce a set of Pauli strings to an independent generating subset (GF(2)).
pub fn independent_subset(strings: &[PauliString]) -> Vec<PauliString> {
    let mut basis: Vec<Vec<u8>> = Vec::new();
    let mut out = Vec::new();
    let mut rank = 0;
    for p in strings {
        if p.is_identity() {
            continue;
        }
        basis.push(p.symplectic_row());
        let new_rank = gf2_rank(&basis);
        if new_rank > rank {
            rank = new_rank;
            out.push(p.clone());
        } else {
            basis.pop();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::contract;
    use rand::Rng;

    #[test]
    fn symplectic_commutation_basics() {
        let n1x = PauliString::single(1, 0, PauliAxis::X);
        let n1z = PauliString::single(1, 0, PauliAxis::Z);
        assert!(!symplectic_commutes(&n1x, &n1z).unwrap());
        let x1 = PauliString::single(2, 0, PauliAxis::X);
        let z2 = PauliString::single(2, 1, PauliAxis::Z);
        assert!(symplectic_commutes(&x1, &z2).unwrap());
    }

    #[test]
    fn symplectic_matches_dense_commutator() {
        let mut rng = crate::rng::rng_from_seed(21);
        for _ in 0..40 {
            let n = 1 + rng.random_range(0..4usize);
            let g = PauliString::from_axes(
                &(0..n).map(|_| PauliAxis::from_index(rng.random_range(0..4))).collect::<Vec<_>>(),
            );
            let h = PauliString::from_axes(
                &(0..n).map(|_| PauliAxis::from_index(rng.random_range(0..4))).collect::<Vec<_>>(),
            );
            let gd = g.dense();
            let hd = h.dense();
            let gh = gd.matmul(&hd).unwrap();
            let hg = hd.matmul(&gd).unwrap();
            let commute_dense = gh.max_abs_diff(&hg) < 1e-12;
            assert_eq!(symplectic_commutes(&g, &h).unwrap(), commute_dense);
        }
    }

    #[test]
    fn pauli_product_phases() {
        let x = PauliString::single(1, 0, PauliAxis::X);
        let y = PauliString::single(1, 0, PauliAxis::Y);
        let z = PauliString::single(1, 0, PauliAxis::Z);
        let xy = x.mul(&y).unwrap();
        assert_eq!((xy.axis(0), xy.phase()), (PauliAxis::Z, 1)); // XY = iZ
        let yx = y.mul(&x).unwrap();
        assert_eq!((yx.axis(0), yx.phase()), (PauliAxis::Z, 3)); // YX = -iZ
        let zz = z.mul(&z).unwrap();
        assert!(zz.is_identity());
        assert_eq!(zz.phase(), 0);
        // Dense cross-check on random pairs.
        let mut rng = crate::rng::rng_from_seed(27);
        for _ in 0..20 {
            let n = 1 + rng.random_range(0..3usize);
            let g = PauliString::from_axes(
                &(0..n).map(|_| PauliAxis::from_index(rng.random_range(0..4))).collect::<Vec<_>>(),
            );
            let h = PauliString::from_axes(
                &(0..n).map(|_| PauliAxis::from_index(rng.random_range(0..4))).collect::<Vec<_>>(),
            );
            let prod = g.mul(&h).unwrap();
            let dense = g.dense().matmul(&h.dense()).unwrap();
            assert!(dense.max_abs_diff(&prod.dense()) < 1e-12);
        }
    }

    #[test]
    fn parse_and_display() {
        let p = PauliString::parse("-iXYIZ").unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.phase(), 3);
        assert_eq!(p.to_string(), "-iXYIZ");
        assert_eq!(PauliString::parse("+XX").unwrap().to_string(), "+XX");
        assert!(PauliString::parse("XQ").is_err());
    }

    #[test]
    fn gate_conjugation_rules_match_printed_tables() {
        // H: Y -> -Y.
        let mut y = PauliString::single(1, 0, PauliAxis::Y);
        y.conjugate_with(CliffordGate::H(0));
        assert_eq!((y.axis(0), y.phase()), (PauliAxis::Y, 2));
        // S: X -> Y, Y -> -X.
        let mut x = PauliString::single(1, 0, PauliAxis::X);
        x.conjugate_with(CliffordGate::S(0));
        assert_eq!((x.axis(0), x.phase()), (PauliAxis::Y, 0));
        let mut y2 = PauliString::single(1, 0, PauliAxis::Y);
        y2.conjugate_with(CliffordGate::S(0));
        assert_eq!((y2.axis(0), y2.phase()), (PauliAxis::X, 2));
        // CNOT: X⊗Z -> -Y⊗Y and Y⊗Y -> -X⊗Z.
        let mut xz = PauliString::from_axes(&[PauliAxis::X, PauliAxis::Z]);
        xz.conjugate_with(CliffordGate::Cnot(0, 1));
        assert_eq!((xz.axis(0), xz.axis(1), xz.phase()), (PauliAxis::Y, PauliAxis::Y, 2));
        let mut yy = PauliString::from_axes(&[PauliAxis::Y, PauliAxis::Y]);
        yy.conjugate_with(CliffordGate::Cnot(0, 1));
        assert_eq!((yy.axis(0), yy.axis(1), yy.phase()), (PauliAxis::X, PauliAxis::Z, 2));
    }

    #[test]
    fn gate_conjugation_matches_dense() {
        let mut rng = crate::rng::rng_from_seed(22);
        let n = 3;
        let gates = [
            CliffordGate::H(0),
            CliffordGate::S(1),
            CliffordGate::Sdg(2),
            CliffordGate::X(0),
            CliffordGate::Y(1),
            CliffordGate::Z(2),
            CliffordGate::Cnot(0, 2),
            CliffordGate::Cnot(2, 1),
            CliffordGate::Cz(0, 1),
            CliffordGate::Swap(1, 2),
        ];
        for &g in &gates {
            for _ in 0..8 {
                let p = PauliString::from_axes(
                    &(0..n)
                        .map(|_| PauliAxis::from_index(rng.random_range(0..4)))
                        .collect::<Vec<_>>(),
                );
                let mut q = p.clone();
                q.conjugate_with(g);
                let u = g.dense(n);
                let lhs =
                    u.matmul(&p.dense()).unwrap().matmul(&u.dagger().unwrap()).unwrap();
                assert!(lhs.max_abs_diff(&q.dense()) < 1e-12, "gate {g:?} on {p} gave {q}");
            }
        }
    }

    #[test]
    fn tableau_worked_example_bell() {
        let mut t = Tableau::new(2);
        t.apply(CliffordGate::H(0));
        t.apply(CliffordGate::Cnot(0, 1));
        assert_eq!(t.stabilizers()[0].to_string(), "+XX");
        assert_eq!(t.stabilizers()[1].to_string(), "+ZZ");
        assert!(t.is_valid());
    }

    #[test]
    fn s_squared_equals_z() {
        let mut a = Tableau::new(1);
        a.apply(CliffordGate::S(0));
        a.apply(CliffordGate::S(0));
        let b = Tableau::from_circuit(1, &[CliffordGate::Z(0)]);
        assert_eq!(a.stabilizers(), b.stabilizers());
        assert_eq!(a.destabilizers(), b.destabilizers());
    }

    #[test]
    fn tableau_stays_valid_under_many_random_gates() {
        let n = 16;
        let mut rng = crate::rng::rng_from_seed(23);
        let mut t = Tableau::new(n);
        for _ in 0..10_000 {
            let g = match rng.random_range(0..4) {
                0 => CliffordGate::H(rng.random_range(0..n)),
                1 => CliffordGate::S(rng.random_range(0..n)),
                2 => {
                    let c = rng.random_range(0..n);
                    let mut t2 = rng.random_range(0..n);
                    while t2 == c {
                        t2 = rng.random_range(0..n);
                    }
                    CliffordGate::Cnot(c, t2)
                }
                _ => {
                    CliffordGate::Cz(rng.random_range(0..n / 2), n / 2 + rng.random_range(0..n / 2))
                }
            };
            t.apply(g);
        }
        assert!(t.is_valid());
    }

    #[test]
    fn conjugate_pauli_identity_and_h() {
        let t = Tableau::new(2);
        let p = PauliString::parse("XY").unwrap();
        assert_eq!(t.conjugate_pauli(&p).unwrap(), p);
        let th = Tableau::from_circuit(1, &[CliffordGate::H(0)]);
        let x = PauliString::single(1, 0, PauliAxis::X);
        assert_eq!(th.conjugate_pauli(&x).unwrap().to_string(), "+Z");
    }

    #[test]
    fn conjugate_pauli_matches_dense_on_random_clifford() {
        let n = 4;
        let mut rng = crate::rng::rng_from_seed(24);
        let mut gates = Vec::new();
        for _ in 0..30 {
            gates.push(match rng.random_range(0..3) {
                0 => CliffordGate::H(rng.random_range(0..n)),
                1 => CliffordGate::S(rng.random_range(0..n)),
                _ => {
                    let c = rng.random_range(0..n);
                    let mut t2 = rng.random_range(0..n);
                    while t2 == c {
                        t2 = rng.random_range(0..n);
                    }
                    CliffordGate::Cnot(c, t2)
                }
            });
        }
        let t = Tableau::from_circuit(n, &gates);
        let mut u = DenseTensor::identity_matrix(1 << n);
        for &g in &gates {
            u = g.dense(n).matmul(&u).unwrap();
        }
        for _ in 0..10 {
            let p = PauliString::from_axes(
                &(0..n).map(|_| PauliAxis::from_index(rng.random_range(0..4))).collect::<Vec<_>>(),
            );
            let fwd = t.conjugate_pauli(&p).unwrap();
            let dense_fwd =
                u.matmul(&p.dense()).unwrap().matmul(&u.dagger().unwrap()).unwrap();
            assert!(dense_fwd.max_abs_diff(&fwd.dense()) < 1e-10);
            let inv = t.conjugate_pauli_inv(&p).unwrap();
            let dense_inv =
                u.dagger().unwrap().matmul(&p.dense()).unwrap().matmul(&u).unwrap();
            assert!(dense_inv.max_abs_diff(&inv.dense()) < 1e-10);
            assert_eq!(t.conjugate_pauli(&inv).unwrap(), p);
        }
    }

    #[test]
    fn stabilizer_entropy_product_bell_ghz() {
        let t = Tableau::new(4);
        assert!(t.stabilizer_entropy(&[0, 1]).unwrap().abs() < 1e-12);

        let bell = Tableau::from_circuit(2, &[CliffordGate::H(0), CliffordGate::Cnot(0, 1)]);
        let s = bell.stabilizer_entropy(&[0]).unwrap();
        assert!((s - std::f64::consts::LN_2).abs() < 1e-12);

        let mut gates = vec![CliffordGate::H(0)];
        for j in 0..5 {
            gates.push(CliffordGate::Cnot(j, j + 1));
        }
        let ghz = Tableau::from_circuit(6, &gates);
        for a in 1..6 {
            let block: Vec<usize> = (0..a).collect();
            let s = ghz.stabilizer_entropy(&block).unwrap();
            assert!((s - std::f64::consts::LN_2).abs() < 1e-12, "block {block:?}");
        }
    }

    #[test]
    fn gottesman_knill_dense_consistency() {
        let mut rng = crate::rng::rng_from_seed(25);
        for n in 2..=5usize {
            let mut gates = Vec::new();
            for _ in 0..20 {
                gates.push(match rng.random_range(0..3) {
                    0 => CliffordGate::H(rng.random_range(0..n)),
                    1 => CliffordGate::S(rng.random_range(0..n)),
                    _ => {
                        let c = rng.random_range(0..n);
                        let mut t2 = rng.random_range(0..n);
                        while t2 == c {
                            t2 = rng.random_range(0..n);
                        }
                        CliffordGate::Cnot(c, t2)
                    }
                });
            }
            let t = Tableau::from_circuit(n, &gates);
            let v = Tableau::dense_state_from_circuit(n, &gates);
            for g in t.stabilizers() {
                let gv = contract(&g.dense(), &[1], &v, &[0]).unwrap();
                assert!(gv.max_abs_diff(&v) < 1e-10);
            }
        }
    }

    #[test]
    fn measure_z_on_plus_and_bell() {
        let mut rng = crate::rng::rng_from_seed(26);
        let mut seen = [false, false];
        for _ in 0..32 {
            let mut t = Tableau::from_circuit(1, &[CliffordGate::H(0)]);
            let o = t.measure_z(0, &mut rng);
            seen[o as usize] = true;
            assert_eq!(t.measure_z(0, &mut rng), o);
        }
        assert!(seen[0] && seen[1]);
        for _ in 0..16 {
            let mut t = Tableau::from_circuit(2, &[CliffordGate::H(0), CliffordGate::Cnot(0, 1)]);
            let a = t.measure_z(0, &mut rng);
            let b = t.measure_z(1, &mut rng);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn single_qubit_stabilizer_states_count() {
        // All single-qubit stabilizer states generated by H and S circuits:
        // exactly 6 distinct states; the |Stab| formula gives 60 for N=2.
        let mut states: Vec<DenseTensor> = Vec::new();
        let gate_sets: Vec<Vec<CliffordGate>> = vec![
            vec![],
            vec![CliffordGate::X(0)],
            vec![CliffordGate::H(0)],
            vec![CliffordGate::H(0), CliffordGate::Z(0)],
            vec![CliffordGate::H(0), CliffordGate::S(0)],
            vec![CliffordGate::H(0), CliffordGate::Sdg(0)],
            vec![CliffordGate::S(0), CliffordGate::H(0)],
            vec![CliffordGate::H(0), CliffordGate::S(0), CliffordGate::H(0)],
        ];
        for gates in &gate_sets {
            let v = Tableau::dense_state_from_circuit(1, gates);
            let is_new = states.iter().all(|w| {
                let ip = contract(&w.conj(), &[0], &v, &[0]).unwrap();
                ip.data()[0].norm() < 1.0 - 1e-9
            });
            if is_new {
                states.push(v);
            }
        }
        assert_eq!(states.len(), 6);
        let n = 2u32;
        let stab_count: u64 = 2u64.pow(n) * (0..n).map(|k| 2u64.pow(n - k) + 1).product::<u64>();
        assert_eq!(stab_count, 60);
    }

    #[test]
    fn independent_subset_reduces_ghz_group() {
        // The 16-element GHZ(4) stabilizer group reduces to 4 generators.
        let gens = [
            PauliString::parse("XXXX").unwrap(),
            PauliString::parse("ZZII").unwrap(),
            PauliString::parse("IZZI").unwrap(),
            PauliString::parse("IIZZ").unwrap(),
        ];
        let mut all = Vec::new();
        for mask in 0..16u32 {
            let mut p = PauliString::identity(4);
            for (b, g) in gens.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    p = p.mul(g).unwrap();
                }
            }
            all.push(p);
        }
        let ind = independent_subset(&all);
        assert_eq!(ind.len(), 4);
    }
}
