//! Matrix product states: construction, canonical gauges, observables,
//! compression, sampling, and gate application.
//!
//! Site tensors are order-3 [`DenseTensor`]s with legs (left bond, physical,
//! right bond); boundary bonds have dimension 1. Canonical form is tracked as
//! metadata and operations that need a particular gauge canonicalize on
//! demand (logged at debug level) instead of erroring.
//!
//! Values are immutable snapshots: every operation returns a new `Mps`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::stab::{PauliAxis, PauliString};
use crate::tensor::{
    contract, qr, svd_truncated, C64, DenseTensor, QrSide, TruncationPolicy,
};

/// Gauge of an [`Mps`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    None,
    Left,
    Right,
    Mixed(usize),
}

/// Schmidt values across one bond, descending, with unit squared sum.
#[derive(Clone, Debug)]
pub struct SchmidtSpectrum {
    /// Bond index, 1-based: bond `c` separates sites `c-1` and `c`.
    pub cut: usize,
    pub values: Vec<f64>,
}

impl SchmidtSpectrum {
    /// Von Neumann entropy `−Σ λ² log λ²` in nats.
    pub fn entropy(&self) -> f64 {
        self.values
            .iter()
            .filter(|&&l| l > 1e-15)
            .map(|&l| {
                let p = l * l;
                -p * p.ln()
            })
            .sum()
    }
}

/// One gate of an exported circuit: a unitary on one site or an adjacent pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateOp {
    pub sites: Vec<usize>,
    pub matrix: DenseTensor,
}

/// Named state constructors accepted by [`make_named_state`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedState {
    Product,
    Ghz,
    W,
    PlusAll,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mps {
    sites: Vec<DenseTensor>,
    form: Form,
    /// Log of a scalar prefactor kept separate from the (normalized) tensors
    /// when evolution is non-unitary.
    #[serde(default)]
    pub log_norm: f64,
}

pub fn hadamard() -> DenseTensor {
    let s = C64::from(0.5f64.sqrt());
    DenseTensor::from_data(&[2, 2], vec![s, s, s, -s]).unwrap()
}

pub fn cnot() -> DenseTensor {
    DenseTensor::from_fn(&[4, 4], |ix| {
        let (r, c) = (ix[0], ix[1]);
        let (cc, tc) = (c >> 1, c & 1);
        if r == (cc << 1 | (tc ^ cc)) { C64::ONE } else { C64::ZERO }
    })
}

pub fn swap_gate() -> DenseTensor {
    DenseTensor::from_fn(&[4, 4], |ix| {
        let (r, c) = (ix[0], ix[1]);
        if r == ((c & 1) << 1 | c >> 1) { C64::ONE } else { C64::ZERO }
    })
}

impl Mps {
    /// Build from raw site tensors; validates bond consistency.
    pub fn from_sites(sites: Vec<DenseTensor>, form: Form) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Contract("an MPS needs at least one site".into()));
        }
        for (j, s) in sites.iter().enumerate() {
            if s.order() != 3 {
                return Err(Error::ShapeMismatch(format!("site {j} is not order-3")));
            }
        }
        if sites[0].shape()[0] != 1 || sites[sites.len() - 1].shape()[2] != 1 {
            return Err(Error::ShapeMismatch("boundary bonds must have dimension 1".into()));
        }
        for j in 0..sites.len() - 1 {
            if sites[j].shape()[2] != sites[j + 1].shape()[0] {
                return Err(Error::ShapeMismatch(format!(
                    "bond mismatch between sites {j} and {}",
                    j + 1
                )));
            }
        }
        Ok(Self { sites, form, log_norm: 0.0 })
    }

    /// Product state from per-site kets.
    pub fn product_state(kets: &[DenseTensor]) -> Result<Self> {
        if kets.is_empty() {
            return Err(Error::Contract("empty product state".into()));
        }
        let sites = kets
            .iter()
            .map(|k| {
                let d = k.dim_total();
                k.with_shape(&[1, d, 1])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_sites(sites, Form::Left)
    }

    /// Computational basis state |bits⟩.
    pub fn basis_state(bits: &[u8]) -> Result<Self> {
        let kets: Vec<DenseTensor> = bits
            .iter()
            .map(|&b| {
                let mut k = DenseTensor::zeros(&[2]);
                k.data_mut()[b as usize] = C64::ONE;
                k
            })
            .collect();
        Self::product_state(&kets)
    }

    /// |+⟩^⊗n.
    pub fn plus_all(n: usize) -> Result<Self> {
        let s = C64::from(0.5f64.sqrt());
        let plus = DenseTensor::from_data(&[2], vec![s, s]).unwrap();
        Self::product_state(&vec![plus; n])
    }

    /// GHZ state as the bond-2 diagonal MPS with boundary vectors (1 1)/√2.
    pub fn ghz(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Contract("GHZ needs n >= 2".into()));
        }
        let s = C64::from(0.5f64.sqrt());
        let mut sites = Vec::with_capacity(n);
        let first = DenseTensor::from_fn(&[1, 2, 2], |ix| {
            if ix[1] == ix[2] { s } else { C64::ZERO }
        });
        sites.push(first);
        for _ in 1..n - 1 {
            sites.push(DenseTensor::from_fn(&[2, 2, 2], |ix| {
                if ix[0] == ix[1] && ix[1] == ix[2] { C64::ONE } else { C64::ZERO }
            }));
        }
        sites.push(DenseTensor::from_fn(&[2, 2, 1], |ix| {
            if ix[0] == ix[1] { C64::ONE } else { C64::ZERO }
        }));
        Self::from_sites(sites, Form::None)
    }

    /// W state from the lower-triangular site matrices [[|0⟩, 0], [|1⟩, |0⟩]].
    pub fn w_state(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Contract("W needs n >= 2".into()));
        }
        let a = C64::from(1.0 / (n as f64).sqrt());
        // Bulk tensor M[a, x, b]: (0,0)->|0>, (1,0)->|1>, (1,1)->|0>.
        let bulk = DenseTensor::from_fn(&[2, 2, 2], |ix| match (ix[0], ix[1], ix[2]) {
            (0, 0, 0) => C64::ONE,
            (1, 1, 0) => C64::ONE,
            (1, 0, 1) => C64::ONE,
            _ => C64::ZERO,
        });
        let mut sites = Vec::with_capacity(n);
        // Boundary row (0 1) selects starting auxiliary state 1; amplitude 1/sqrt(n).
        sites.push(DenseTensor::from_fn(&[1, 2, 2], |ix| match (ix[1], ix[2]) {
            (1, 0) => a,
            (0, 1) => a,
            _ => C64::ZERO,
        }));
        for _ in 1..n - 1 {
            sites.push(bulk.clone());
        }
        // Boundary column (1 0)^T keeps auxiliary state 0.
        sites.push(DenseTensor::from_fn(&[2, 2, 1], |ix| match (ix[0], ix[1]) {
            (0, 0) => C64::ONE,
            (1, 1) => C64::ONE,
            _ => C64::ZERO,
        }));
        Self::from_sites(sites, Form::None)
    }

    /// Random normalized state with bond dimension capped at `chi`.
    pub fn random(n: usize, d: usize, chi: usize, seed: u64) -> Result<Self> {
        use rand::Rng as _;
        let mut rng = crate::rng::rng_from_seed(seed);
        let mut sites = Vec::with_capacity(n);
        let mut left = 1usize;
        for j in 0..n {
            let remaining = d.pow((n - 1 - j) as u32).min(chi);
            let right = if j == n - 1 { 1 } else { (left * d).min(remaining).min(chi) };
            sites.push(DenseTensor::from_fn(&[left, d, right], |_| {
                C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            }));
            left = right;
        }
        let mut s = Self::from_sites(sites, Form::None)?;
        s = s.canonicalize(Form::Right)?;
        s.normalize_in_place();
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn form(&self) -> Form {
        self.form
    }

    pub fn site(&self, j: usize) -> &DenseTensor {
        &self.sites[j]
    }

    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.shape()[1]).collect()
    }

    /// Swap in a new site tensor; callers are responsible for bond
    /// consistency and for keeping the form flag honest.
    pub(crate) fn replace_site(&mut self, j: usize, t: DenseTensor) {
        self.sites[j] = t;
    }

    pub(crate) fn set_form_unchecked(&mut self, form: Form) {
        self.form = form;
    }

    /// Bond dimensions at the n−1 internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        (0..self.len() - 1).map(|j| self.sites[j].shape()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Contract the chain into the full order-n amplitude tensor.
    pub fn to_dense(&self) -> DenseTensor {
        let mut acc = self.sites[0].clone(); // (1, d, r)
        for s in &self.sites[1..] {
            // acc (1, d..d, r) x s (r, d, r')
            let k = acc.order() - 1;
            acc = contract(&acc, &[k], s, &[0]).unwrap();
        }
        // Strip the two boundary legs of dimension 1.
        let shape: Vec<usize> = acc.shape()[1..acc.order() - 1].to_vec();
        acc.with_shape(&shape).unwrap()
    }

    /// Dense amplitudes flattened to a vector of length `prod(d_j)`.
    pub fn to_vector(&self) -> DenseTensor {
        let d = self.to_dense();
        let tot = d.dim_total();
        d.with_shape(&[tot]).unwrap()
    }

    pub fn norm(&self) -> f64 {
        overlap(self, self).map(|z| z.re.max(0.0).sqrt()).unwrap_or(0.0)
    }

    fn normalize_in_place(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let c = C64::from(1.0 / n);
            // Scale the orthogonality-center site when known, else the first.
            let j = match self.form {
                Form::Mixed(c0) => c0,
                Form::Right => 0,
                Form::Left => self.len() - 1,
                Form::None => 0,
            };
            self.sites[j] = self.sites[j].scale(c);
        }
    }

    /// New state scaled to unit norm (log of the removed factor is added to
    /// `log_norm`).
    pub fn normalized(&self) -> Self {
        let mut s = self.clone();
        let n = s.norm();
        s.normalize_in_place();
        if n > 0.0 {
            s.log_norm += n.ln();
        }
        s
    }

    // Left-normalize site j (QR), absorbing the triangular factor into j+1.
    fn push_right(&mut self, j: usize) {
        let (l, d, r) = dims3(&self.sites[j]);
        let m = self.sites[j].with_shape(&[l * d, r]).unwrap();
        let (q, rr) = qr(&m, QrSide::Left).unwrap();
        let k = q.shape()[1];
        self.sites[j] = q.with_shape(&[l, d, k]).unwrap();
        self.sites[j + 1] = contract(&rr, &[1], &self.sites[j + 1], &[0]).unwrap();
    }

    // Right-normalize site j (LQ), absorbing the triangular factor into j-1.
    fn push_left(&mut self, j: usize) {
        let (l, d, r) = dims3(&self.sites[j]);
        let m = self.sites[j].with_shape(&[l, d * r]).unwrap();
        let (q, ll) = qr(&m, QrSide::Right).unwrap();
        let k = q.shape()[0];
        self.sites[j] = q.with_shape(&[k, d, r]).unwrap();
        self.sites[j - 1] = contract(&self.sites[j - 1], &[2], &ll, &[0]).unwrap();
    }

    /// Bring the state into the requested gauge. The represented vector is
    /// unchanged (no renormalization happens here).
    pub fn canonicalize(&self, target: Form) -> Result<Self> {
        let mut s = self.clone();
        match target {
            Form::Right => {
                for j in (1..s.len()).rev() {
                    s.push_left(j);
                }
                s.form = Form::Right;
            }
            Form::Left => {
                for j in 0..s.len() - 1 {
                    s.push_right(j);
                }
                s.form = Form::Left;
            }
            Form::Mixed(center) => {
                if center >= s.len() {
                    return Err(Error::Contract(format!("center {center} out of range")));
                }
                s = s.canonicalize(Form::Right)?;
                for j in 0..center {
                    s.push_right(j);
                }
                s.form = Form::Mixed(center);
            }
            Form::None => {}
        }
        Ok(s)
    }

    /// Ensure the orthogonality center sits at `center`, moving it with QR
    /// steps when the current gauge already fixes one.
    pub fn with_center(&self, center: usize) -> Result<Self> {
        let current = match self.form {
            Form::Mixed(c) => Some(c),
            Form::Right => Some(0),
            Form::Left => Some(self.len() - 1),
            Form::None => None,
        };
        match current {
            None => {
                log::debug!("auto-canonicalizing to mixed({center})");
                self.canonicalize(Form::Mixed(center))
            }
            Some(c0) => {
                let mut s = self.clone();
                let mut c = c0;
                while c < center {
                    s.push_right(c);
                    c += 1;
                }
                while c > center {
                    s.push_left(c);
                    c -= 1;
                }
                s.form = Form::Mixed(center);
                Ok(s)
            }
        }
    }

    /// Verify the canonical conditions of the current form to tolerance.
    pub fn check_canonical(&self, tol: f64) -> bool {
        let (lo, hi) = match self.form {
            Form::Left => (self.len() - 1, self.len() - 1),
            Form::Right => (0, 0),
            Form::Mixed(c) => (c, c),
            Form::None => return true,
        };
        for j in 0..self.len() {
            if j < lo {
                if !is_left_normalized(&self.sites[j], tol) {
                    return false;
                }
            } else if j > hi && !is_right_normalized(&self.sites[j], tol) {
                return false;
            }
        }
        true
    }

    /// Schmidt spectrum and entanglement entropy at a 1-based bond cut.
    pub fn entropy_at_bond(&self, cut: usize) -> Result<(SchmidtSpectrum, f64)> {
        if cut == 0 || cut >= self.len() {
            return Err(Error::Contract(format!(
                "cut {cut} out of range 1..{}",
                self.len() - 1
            )));
        }
        let s = self.with_center(cut)?;
        let (l, d, r) = dims3(&s.sites[cut]);
        let m = s.sites[cut].with_shape(&[l, d * r])?;
        let f = svd_truncated(&m, &TruncationPolicy::unlimited())?;
        let total: f64 = f.singulars.iter().map(|v| v * v).sum();
        let values: Vec<f64> =
            f.singulars.iter().map(|v| v / total.sqrt()).filter(|v| *v > 0.0).collect();
        let spec = SchmidtSpectrum { cut, values };
        let entropy = spec.entropy();
        Ok((spec, entropy))
    }

    /// SVD-truncate every bond with one left-to-right sweep.
    ///
    /// Returns the compressed state and the total discarded squared weight.
    pub fn truncate_svd(&self, policy: &TruncationPolicy) -> Result<(Self, f64)> {
        let mut s = self.canonicalize(Form::Right)?;
        let mut discarded = 0.0;
        for j in 0..s.len() - 1 {
            let (l, d, r) = dims3(&s.sites[j]);
            let m = s.sites[j].with_shape(&[l * d, r])?;
            let f = svd_truncated(&m, policy)?;
            discarded += f.discarded_weight;
            let k = f.singulars.len();
            s.sites[j] = f.left.with_shape(&[l, d, k])?;
            let sv = DenseTensor::from_fn(&[k, k], |ix| {
                if ix[0] == ix[1] { C64::from(f.singulars[ix[0]]) } else { C64::ZERO }
            });
            let rest = sv.matmul(&f.right)?;
            s.sites[j + 1] = contract(&rest, &[1], &s.sites[j + 1], &[0])?;
        }
        s.form = Form::Mixed(s.len() - 1);
        Ok((s, discarded))
    }

    /// Apply a unitary gate on one site or an adjacent pair.
    ///
    /// Two-site gates leave the orthogonality center at the left site of the
    /// pair; the bond is truncated per `policy` and the discarded weight is
    /// returned.
    pub fn apply_gate(
        &self,
        gate: &DenseTensor,
        sites: &[usize],
        policy: &TruncationPolicy,
    ) -> Result<(Self, f64)> {
        match sites {
            [j] => {
                let d = self.sites[*j].shape()[1];
                if gate.shape() != [d, d] {
                    return Err(Error::ShapeMismatch("gate dimension mismatch".into()));
                }
                let mut s = self.clone();
                // (d', d) x (l, d, r) over the physical leg.
                let t = contract(gate, &[1], &s.sites[*j], &[1])?; // (d', l, r)
                s.sites[*j] = t.permute(&[1, 0, 2])?;
                Ok((s, 0.0))
            }
            [i, j] => {
                if *j != i + 1 {
                    return Err(Error::Contract(
                        "two-site gates act on adjacent sites only; insert SWAP gates first"
                            .into(),
                    ));
                }
                self.apply_two_site(gate, *i, policy, false)
            }
            _ => Err(Error::Contract("gates act on one site or an adjacent pair".into())),
        }
    }

    /// Two-site gate at (i, i+1). With `center_right` the orthogonality center
    /// ends at i+1 (useful for left-to-right sweeps), otherwise at i.
    pub(crate) fn apply_two_site(
        &self,
        gate: &DenseTensor,
        i: usize,
        policy: &TruncationPolicy,
        center_right: bool,
    ) -> Result<(Self, f64)> {
        let n = self.len();
        if i + 1 >= n {
            return Err(Error::Contract("pair out of range".into()));
        }
        let da = self.sites[i].shape()[1];
        let db = self.sites[i + 1].shape()[1];
        if gate.dim_total() != (da * db) * (da * db) {
            return Err(Error::ShapeMismatch("two-site gate dimension mismatch".into()));
        }
        let mut s = self.with_center(i)?;
        let theta = contract(&s.sites[i], &[2], &s.sites[i + 1], &[0])?; // (l,x,y,r)
        let g = gate.with_shape(&[da, db, da, db])?; // (x',y',x,y)
        let t = contract(&g, &[2, 3], &theta, &[1, 2])?; // (x',y',l,r)
        let t = t.permute(&[2, 0, 1, 3])?; // (l,x',y',r)
        let (l, _, _, r) = (t.shape()[0], t.shape()[1], t.shape()[2], t.shape()[3]);
        let m = t.with_shape(&[l * da, db * r])?;
        let f = svd_truncated(&m, policy)?;
        let k = f.singulars.len();
        let sv = DenseTensor::from_fn(&[k, k], |ix| {
            if ix[0] == ix[1] { C64::from(f.singulars[ix[0]]) } else { C64::ZERO }
        });
        if center_right {
            s.sites[i] = f.left.with_shape(&[l, da, k])?;
            s.sites[i + 1] = sv.matmul(&f.right)?.with_shape(&[k, db, r])?;
            s.form = Form::Mixed(i + 1);
        } else {
            s.sites[i] = f.left.matmul(&sv)?.with_shape(&[l, da, k])?;
            s.sites[i + 1] = f.right.with_shape(&[k, db, r])?;
            s.form = Form::Mixed(i);
        }
        Ok((s, f.discarded_weight))
    }

    /// ⟨ψ|σ₁⊗…⊗σₙ|ψ⟩ / ⟨ψ|ψ⟩ of a Hermitian Pauli string by a boundary sweep.
    pub fn expect_pauli_string(&self, p: &PauliString) -> Result<f64> {
        if p.len() != self.len() {
            return Err(Error::ShapeMismatch("pauli string length mismatch".into()));
        }
        if !p.is_hermitian() {
            return Err(Error::Contract("expectation of a non-Hermitian string".into()));
        }
        let mut num = DenseTensor::identity_matrix(1);
        let mut den = DenseTensor::identity_matrix(1);
        for (j, a) in self.sites.iter().enumerate() {
            num = transfer_step(&num, a, Some(&p.axis(j).matrix()));
            den = transfer_step(&den, a, None);
        }
        let v = num.data()[0] * p.phase_factor() / den.data()[0];
        Ok(v.re)
    }

    /// Draw one computational-basis sample and its exact probability.
    ///
    /// Cost O(n·χ²) per sample via the left-environment update.
    pub fn sample_bitstring(&self, rng: &mut Rng) -> Result<(Vec<u8>, f64)> {
        use rand::Rng as _;
        let norm = self.norm();
        if norm < 1e-14 {
            return Err(Error::Numeric("sampling a zero-norm state".into()));
        }
        let s = if matches!(self.form, Form::Right) && (norm - 1.0).abs() < 1e-12 {
            self.clone()
        } else {
            log::debug!("sample_bitstring: auto right-canonicalizing");
            let mut t = self.canonicalize(Form::Right)?;
            t.normalize_in_place();
            t
        };
        let n = s.len();
        let mut bits = Vec::with_capacity(n);
        let mut prob = 1.0;
        // Row vector over the current bond.
        let mut v = DenseTensor::identity_matrix(1).with_shape(&[1])?;
        for j in 0..n {
            let d = s.sites[j].shape()[1];
            let branches: Vec<DenseTensor> = (0..d)
                .map(|x| {
                    let sel = DenseTensor::from_fn(&[d], |ix| {
                        if ix[0] == x { C64::ONE } else { C64::ZERO }
                    });
                    let bx = contract(&sel, &[0], &s.sites[j], &[1]).unwrap(); // (l, r)
                    contract(&v, &[0], &bx, &[0]).unwrap() // (r,)
                })
                .collect();
            let weights: Vec<f64> = branches
                .iter()
                .map(|w| w.data().iter().map(|z| z.norm_sqr()).sum::<f64>())
                .collect();
            let total: f64 = weights.iter().sum();
            let u: f64 = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut x = d - 1;
            for (cand, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    x = cand;
                    break;
                }
            }
            let p = weights[x] / total;
            prob *= p;
            bits.push(x as u8);
            let scale = weights[x].sqrt();
            v = branches[x].scale(C64::from(1.0 / scale.max(1e-300)));
        }
        Ok((bits, prob))
    }

    /// Project `site` onto `outcome` in the given basis and renormalize.
    ///
    /// The orthogonality center is restored at `site+1` (or `site` at the
    /// right edge) via QR.
    pub fn project_onto(&self, site: usize, basis: MeasureBasis, outcome: u8) -> Result<Self> {
        if site >= self.len() {
            return Err(Error::Contract("site out of range".into()));
        }
        let mut s = self.with_center(site)?;
        if basis == MeasureBasis::X {
            let t = contract(&hadamard(), &[1], &s.sites[site], &[1])?;
            s.sites[site] = t.permute(&[1, 0, 2])?;
        }
        let (l, d, r) = dims3(&s.sites[site]);
        let mut proj = s.sites[site].clone();
        for a in 0..l {
            for x in 0..d {
                for b in 0..r {
                    if x != outcome as usize {
                        proj.set(&[a, x, b], C64::ZERO);
                    }
                }
            }
        }
        let w: f64 = proj.data().iter().map(|z| z.norm_sqr()).sum();
        let total: f64 = s.sites[site].data().iter().map(|z| z.norm_sqr()).sum();
        if w / total.max(1e-300) < 1e-14 {
            return Err(Error::Numeric(format!(
                "projection onto outcome {outcome} has vanishing probability"
            )));
        }
        s.sites[site] = proj.scale(C64::from(1.0 / w.sqrt()));
        if basis == MeasureBasis::X {
            let t = contract(&hadamard(), &[1], &s.sites[site], &[1])?;
            s.sites[site] = t.permute(&[1, 0, 2])?;
        }
        if site + 1 < s.len() {
            s.push_right(site);
            s.form = Form::Mixed(site + 1);
        }
        Ok(s)
    }

    /// Born-rule projective measurement of one site.
    pub fn project_and_measure(
        &self,
        site: usize,
        basis: MeasureBasis,
        rng: &mut Rng,
    ) -> Result<(u8, Self)> {
        use rand::Rng as _;
        if site >= self.len() {
            return Err(Error::Contract("site out of range".into()));
        }
        let s = self.with_center(site)?;
        let axis = match basis {
            MeasureBasis::Z => PauliAxis::Z,
            MeasureBasis::X => PauliAxis::X,
        };
        // Local expectation at the orthogonality center.
        let op = axis.matrix();
        let t = contract(&op, &[1], &s.sites[site], &[1])?; // (d', l, r)
        let num = contract(&s.sites[site].conj(), &[0, 1, 2], &t, &[1, 0, 2])?;
        let den: f64 = s.sites[site].data().iter().map(|z| z.norm_sqr()).sum();
        let e = num.data()[0].re / den;
        let p0 = ((1.0 + e) / 2.0).clamp(0.0, 1.0);
        let outcome: u8 = if rng.random::<f64>() < p0 { 0 } else { 1 };
        let collapsed = s.project_onto(site, basis, outcome)?;
        Ok((outcome, collapsed))
    }

    /// Variationally compress to bond dimension `chi`.
    ///
    /// The initial guess is the SVD-truncated state; each sweep solves the
    /// local fitting equations site by site. The squared distance to the
    /// input is non-increasing across sweeps.
    pub fn variational_compress(&self, chi: usize, sweeps: usize) -> Result<Self> {
        let policy = TruncationPolicy { max_bond: chi, sv_cutoff: 0.0, renormalize: false };
        let (guess, _) = self.truncate_svd(&policy)?;
        if self.max_bond() <= chi {
            return Ok(guess);
        }
        fit_mps(&guess, self, sweeps)
    }

    /// Leading transfer-matrix eigenpair at one site by power iteration.
    ///
    /// Returns `(eta, left fixed point, right fixed point)`; the fixed points
    /// are Hermitian and positive semidefinite up to numerical tolerance.
    pub fn transfer_matrix_leading(&self, site: usize) -> Result<(f64, DenseTensor, DenseTensor)> {
        let a = &self.sites[site];
        let (l_dim, _, r_dim) = dims3(a);
        if l_dim != r_dim {
            return Err(Error::Contract(
                "transfer matrix needs equal left and right bond dimensions".into(),
            ));
        }
        let left_map = |m: &DenseTensor| -> DenseTensor {
            // L' = sum_x A^x† L A^x. L is (l,l).
            let t = contract(m, &[1], a, &[0]).unwrap(); // (l_bra, d, r)
            contract(&a.conj(), &[0, 1], &t, &[0, 1]).unwrap() // (r_bra, r)... legs: conj(a)(l,d,r) over l,d
        };
        let right_map = |m: &DenseTensor| -> DenseTensor {
            // R' = sum_x A^x R A^x†. R is (r,r).
            let t = contract(a, &[2], m, &[0]).unwrap(); // (l, d, r_ket)
            contract(&t, &[1, 2], &a.conj(), &[1, 2]).unwrap() // (l, l_bra)
        };
        let eta_l = power_iterate(l_dim, &left_map)?;
        let eta_r = power_iterate(r_dim, &right_map)?;
        let (eta, l_fp) = eta_l;
        let (_, r_fp) = eta_r;
        Ok((eta, hermitize(&l_fp), hermitize(&r_fp)))
    }

    /// Decompose a χ≤2 state into a staircase circuit of 4×4 unitaries plus a
    /// final single-qubit gate. Applying the gates in order to |0…0⟩
    /// reproduces the state up to global phase.
    pub fn to_staircase_circuit(&self) -> Result<Vec<GateOp>> {
        let n = self.len();
        for (j, d) in self.phys_dims().iter().enumerate() {
            if *d != 2 {
                return Err(Error::Contract(format!("site {j} is not a qubit")));
            }
        }
        if self.bond_dims().iter().any(|&b| b > 2) {
            return Err(Error::Contract(
                "staircase circuits need every internal bond <= 2".into(),
            ));
        }
        if n == 1 {
            let v = self.normalized().to_vector();
            let u = complete_unitary(&[v.data().to_vec()], 2)?;
            return Ok(vec![GateOp { sites: vec![0], matrix: u }]);
        }
        let mut s = self.canonicalize(Form::Right)?;
        s.normalize_in_place();
        let mut gates = Vec::with_capacity(n);
        // First site: one constrained column |00> -> sum B_0[0,x,b]|x,b>.
        {
            let (_, _, r) = dims3(&s.sites[0]);
            let mut col = vec![C64::ZERO; 4];
            for x in 0..2 {
                for b in 0..r {
                    col[x * 2 + b] = s.sites[0].get(&[0, x, b]);
                }
            }
            let u = complete_unitary_cols(&[(0usize, col)], 4)?;
            gates.push(GateOp { sites: vec![0, 1], matrix: u });
        }
        // Bulk sites: columns (alpha,0) constrained by the isometry.
        for j in 1..n - 1 {
            let (l, _, r) = dims3(&s.sites[j]);
            let mut cols = Vec::new();
            for alpha in 0..l {
                let mut col = vec![C64::ZERO; 4];
                for x in 0..2 {
                    for b in 0..r {
                        col[x * 2 + b] = s.sites[j].get(&[alpha, x, b]);
                    }
                }
                cols.push((alpha * 2, col));
            }
            let u = complete_unitary_cols(&cols, 4)?;
            gates.push(GateOp { sites: vec![j, j + 1], matrix: u });
        }
        // Last site: single-qubit unitary U[x, alpha] = B[alpha, x, 0].
        {
            let (l, _, _) = dims3(&s.sites[n - 1]);
            let mut cols = Vec::new();
            for alpha in 0..l {
                let mut col = vec![C64::ZERO; 2];
                for x in 0..2 {
                    col[x] = s.sites[n - 1].get(&[alpha, x, 0]);
                }
                cols.push((alpha, col));
            }
            let u = complete_unitary_cols(&cols, 2)?;
            gates.push(GateOp { sites: vec![n - 1], matrix: u });
        }
        Ok(gates)
    }
}

/// Measurement basis for projective single-site measurements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureBasis {
    Z,
    X,
}

/// ⟨a|b⟩ by a boundary sweep; no normalization is assumed.
pub fn overlap(a: &Mps, b: &Mps) -> Result<C64> {
    if a.len() != b.len() || a.phys_dims() != b.phys_dims() {
        return Err(Error::ShapeMismatch("overlap: register mismatch".into()));
    }
    let mut env = DenseTensor::identity_matrix(1);
    for (sa, sb) in a.sites.iter().zip(&b.sites) {
        let t = contract(&env, &[1], sb, &[0]).unwrap(); // (bra, d, r_ket)
        env = contract(&sa.conj(), &[0, 1], &t, &[0, 1]).unwrap(); // (r_bra, r_ket)
    }
    Ok(env.data()[0])
}

/// Squared fidelity |⟨a|b⟩|²/(⟨a|a⟩⟨b|b⟩).
pub fn fidelity2(a: &Mps, b: &Mps) -> Result<f64> {
    let ab = overlap(a, b)?.norm_sqr();
    let aa = overlap(a, a)?.re;
    let bb = overlap(b, b)?.re;
    Ok(ab / (aa * bb))
}

/// Dispatcher used by the batch runner.
pub fn make_named_state(
    name: NamedState,
    n: usize,
    local_kets: Option<&[DenseTensor]>,
) -> Result<Mps> {
    match name {
        NamedState::Ghz => Mps::ghz(n),
        NamedState::W => Mps::w_state(n),
        NamedState::PlusAll => Mps::plus_all(n),
        NamedState::Product => match local_kets {
            Some(kets) => {
                if kets.len() != n {
                    return Err(Error::Contract("product state needs n local kets".into()));
                }
                Mps::product_state(kets)
            }
            None => Mps::basis_state(&vec![0u8; n]),
        },
    }
}

/// Sequential SVD factorization of a dense amplitude tensor (left-canonical).
pub fn from_dense(v: &DenseTensor, policy: &TruncationPolicy) -> Result<Mps> {
    if v.order() == 0 {
        return Err(Error::Contract("cannot factor an order-0 tensor".into()));
    }
    let dims = v.shape().to_vec();
    let n = dims.len();
    let mut sites = Vec::with_capacity(n);
    let mut rest = v.with_shape(&[1, v.dim_total()])?;
    let mut left = 1usize;
    for (j, &d) in dims.iter().enumerate().take(n - 1) {
        let cols = rest.dim_total() / (left * d);
        let m = rest.with_shape(&[left * d, cols])?;
        let f = svd_truncated(&m, policy)?;
        let k = f.singulars.len();
        sites.push(f.left.with_shape(&[left, d, k])?);
        let sv = DenseTensor::from_fn(&[k, k], |ix| {
            if ix[0] == ix[1] { C64::from(f.singulars[ix[0]]) } else { C64::ZERO }
        });
        rest = sv.matmul(&f.right)?;
        let _ = j;
        left = k;
    }
    sites.push(rest.with_shape(&[left, dims[n - 1], 1])?);
    let mut s = Mps::from_sites(sites, Form::Left)?;
    s.form = Form::Mixed(n - 1);
    Ok(s)
}

fn dims3(t: &DenseTensor) -> (usize, usize, usize) {
    (t.shape()[0], t.shape()[1], t.shape()[2])
}

fn is_left_normalized(a: &DenseTensor, tol: f64) -> bool {
    let (_, _, r) = dims3(a);
    let g = contract(&a.conj(), &[0, 1], a, &[0, 1]).unwrap();
    g.max_abs_diff(&DenseTensor::identity_matrix(r)) < tol
}

fn is_right_normalized(a: &DenseTensor, tol: f64) -> bool {
    let (l, _, _) = dims3(a);
    let g = contract(a, &[1, 2], &a.conj(), &[1, 2]).unwrap();
    g.max_abs_diff(&DenseTensor::identity_matrix(l)) < tol
}

/// One step of the mixed transfer sweep: env' = Σ A† (σ) env A.
fn transfer_step(env: &DenseTensor, a: &DenseTensor, op: Option<&DenseTensor>) -> DenseTensor {
    let t = contract(env, &[1], a, &[0]).unwrap(); // (bra, d, r)
    let t = match op {
        Some(sigma) => contract(sigma, &[1], &t, &[1]).unwrap().permute(&[1, 0, 2]).unwrap(),
        None => t,
    };
    contract(&a.conj(), &[0, 1], &t, &[0, 1]).unwrap()
}

fn hermitize(m: &DenseTensor) -> DenseTensor {
    m.add(&m.dagger().unwrap()).unwrap().scale(C64::from(0.5))
}

fn power_iterate(
    dim: usize,
    map: &dyn Fn(&DenseTensor) -> DenseTensor,
) -> Result<(f64, DenseTensor)> {
    let mut v = DenseTensor::identity_matrix(dim);
    let mut eta = 0.0;
    for _ in 0..10_000 {
        let w = map(&v);
        let norm = w.norm_frobenius();
        if norm < 1e-300 {
            return Err(Error::Numeric("transfer map annihilated the start vector".into()));
        }
        let new_eta = norm / v.norm_frobenius();
        let w = w.scale(C64::from(1.0 / norm));
        let delta = w.sub(&v.scale(C64::from(1.0 / v.norm_frobenius())))?.norm_frobenius();
        v = w;
        if (new_eta - eta).abs() < 1e-13 && delta < 1e-12 {
            eta = new_eta;
            break;
        }
        eta = new_eta;
    }
    Ok((eta, v))
}

/// Variational fitting of `guess` towards `target` (both fixed registers).
fn fit_mps(guess: &Mps, target: &Mps, sweeps: usize) -> Result<Mps> {
    let n = guess.len();
    let mut g = guess.canonicalize(Form::Right)?;
    // Right overlap environments between the bra (compressed) and ket (target).
    let mut right_env: Vec<DenseTensor> = vec![DenseTensor::identity_matrix(1); n + 1];
    for j in (1..n).rev() {
        right_env[j] = overlap_env_right(&right_env[j + 1], &g.sites[j], &target.sites[j]);
    }
    let mut left_env: Vec<DenseTensor> = vec![DenseTensor::identity_matrix(1); n + 1];
    for _ in 0..sweeps {
        // Left-to-right.
        for j in 0..n {
            let t = local_fit(&left_env[j], &target.sites[j], &right_env[j + 1]);
            if j < n - 1 {
                let (l, d, r) = dims3(&t);
                let m = t.with_shape(&[l * d, r])?;
                let (q, _) = qr(&m, QrSide::Left)?;
                let k = q.shape()[1];
                g.sites[j] = q.with_shape(&[l, d, k])?;
                left_env[j + 1] = overlap_env_left(&left_env[j], &g.sites[j], &target.sites[j]);
            } else {
                g.sites[j] = t;
            }
        }
        // Right-to-left.
        for j in (0..n).rev() {
            let t = local_fit(&left_env[j], &target.sites[j], &right_env[j + 1]);
            if j > 0 {
                let (l, d, r) = dims3(&t);
                let m = t.with_shape(&[l, d * r])?;
                let (q, _) = qr(&m, QrSide::Right)?;
                let k = q.shape()[0];
                g.sites[j] = q.with_shape(&[k, d, r])?;
                right_env[j] = overlap_env_right(&right_env[j + 1], &g.sites[j], &target.sites[j]);
            } else {
                g.sites[j] = t;
            }
        }
    }
    g.form = Form::Mixed(0);
    Ok(g)
}

/// env' with legs (bra bond of compressed, ket bond of target), sweeping right.
fn overlap_env_left(env: &DenseTensor, bra: &DenseTensor, ket: &DenseTensor) -> DenseTensor {
    let t = contract(env, &[1], ket, &[0]).unwrap(); // (bra, d, r_ket)
    contract(&bra.conj(), &[0, 1], &t, &[0, 1]).unwrap()
}

fn overlap_env_right(env: &DenseTensor, bra: &DenseTensor, ket: &DenseTensor) -> DenseTensor {
    // env legs (bra bond, ket bond) to the right of the current site.
    let t = contract(ket, &[2], env, &[1]).unwrap(); // (l_ket, d, bra)
    contract(&t, &[1, 2], &bra.conj(), &[1, 2]).unwrap().permute(&[1, 0]).unwrap()
}

/// Optimal local tensor: contraction of the target site with both overlap
/// environments.
fn local_fit(left: &DenseTensor, ket: &DenseTensor, right: &DenseTensor) -> DenseTensor {
    let t = contract(left, &[1], ket, &[0]).unwrap(); // (bra_l, d, r_ket)
    contract(&t, &[2], right, &[1]).unwrap() // (bra_l, d, bra_r)
}

/// Complete a set of orthonormal columns (given as (index, column) pairs) to a
/// full unitary by stable Gram–Schmidt against the existing columns.
fn complete_unitary_cols(fixed: &[(usize, Vec<C64>)], dim: usize) -> Result<DenseTensor> {
    let mut cols: Vec<Option<Vec<C64>>> = vec![None; dim];
    for (idx, col) in fixed {
        if col.len() != dim {
            return Err(Error::ShapeMismatch("column length mismatch".into()));
        }
        cols[*idx] = Some(col.clone());
    }
    let mut basis: Vec<Vec<C64>> = fixed.iter().map(|(_, c)| c.clone()).collect();
    let mut candidates = (0..dim).map(|k| {
        let mut e = vec![C64::ZERO; dim];
        e[k] = C64::ONE;
        e
    });
    for slot in 0..dim {
        if cols[slot].is_some() {
            continue;
        }
        // Find a candidate with a nonzero residual after projecting out the basis.
        let mut chosen: Option<Vec<C64>> = None;
        for cand in candidates.by_ref() {
            let mut v = cand.clone();
            for b in &basis {
                let ip: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= ip * bi;
                }
            }
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                for z in v.iter_mut() {
                    *z /= C64::from(norm);
                }
                chosen = Some(v);
                break;
            }
        }
        let v = chosen.ok_or_else(|| Error::Numeric("orthonormal completion failed".into()))?;
        basis.push(v.clone());
        cols[slot] = Some(v);
    }
    Ok(DenseTensor::from_fn(&[dim, dim], |ix| {
        cols[ix[1]].as_ref().unwrap()[ix[0]]
    }))
}

fn complete_unitary(fixed_cols: &[Vec<C64>], dim: usize) -> Result<DenseTensor> {
    let pairs: Vec<(usize, Vec<C64>)> =
        fixed_cols.iter().cloned().enumerate().collect();
    complete_unitary_cols(&pairs, dim)
}
