//! Dense multi-index tensors and the three matrix decompositions the chain
//! algorithms are built from.
//!
//! A [`DenseTensor`] is a shaped array of complex amplitudes stored row-major.
//! Contraction is performed by permuting the contracted legs to the inside and
//! multiplying the two resulting matrices, which reproduces the naive
//! nested-loop summation exactly. Factorizations (SVD, QR/LQ, Hermitian
//! eigendecomposition) go through `nalgebra` on the order-2 reshape of the
//! tensor; singular values and eigenvalues are always returned in descending
//! order.

use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Default absolute tolerance for orthogonality and Hermiticity checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Shaped array of complex amplitudes, row-major.
///
/// Order-0 tensors (empty shape, one element) are permitted and act as scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<C64>,
}

/// How to drop singular values after a factorization.
///
/// A value `s_k` (descending order, `k` starting at 0) is kept iff `k < max_bond`
/// and its relative squared weight `s_k^2 / sum(s^2)` is at least `sv_cutoff`.
/// At least one value is always kept. With `renormalize` the surviving values
/// are rescaled to unit squared sum.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TruncationPolicy {
    pub max_bond: usize,
    pub sv_cutoff: f64,
    pub renormalize: bool,
}

impl TruncationPolicy {
    pub fn new(max_bond: usize, sv_cutoff: f64, renormalize: bool) -> Result<Self> {
        if max_bond < 1 {
            return Err(Error::Contract("max_bond must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&sv_cutoff) {
            return Err(Error::Contract("sv_cutoff must lie in [0, 1)".into()));
        }
        Ok(Self { max_bond, sv_cutoff, renormalize })
    }

    /// No truncation at all: unlimited bond, zero cutoff, no rescaling.
    pub fn unlimited() -> Self {
        Self { max_bond: usize::MAX, sv_cutoff: 0.0, renormalize: false }
    }

    /// Cap the bond at `chi`, drop numerically-zero weights, keep the state normalized.
    pub fn capped(chi: usize) -> Self {
        Self { max_bond: chi, sv_cutoff: 0.0, renormalize: true }
    }
}

/// Result of a truncated SVD: `m ≈ left · diag(singulars) · right`.
#[derive(Clone, Debug)]
pub struct FactorizationResult {
    /// Columns orthonormal.
    pub left: DenseTensor,
    /// Descending, non-negative.
    pub singulars: Vec<f64>,
    /// Rows orthonormal.
    pub right: DenseTensor,
    /// Sum of the squared dropped singular values.
    pub discarded_weight: f64,
}

/// A reshape instruction: either fuse groups of legs or split one leg.
#[derive(Clone, Debug)]
pub enum ReshapePlan {
    /// Each group lists original axes; every axis must appear exactly once.
    /// Groups may reorder axes (an implicit permutation is applied first).
    Fuse(Vec<Vec<usize>>),
    /// Split `axis` into factors whose product equals its dimension.
    Split { axis: usize, dims: Vec<usize> },
}

/// Which side of a QR-type factorization carries the orthogonal factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QrSide {
    /// `m = Q·R` with Q column-orthonormal and R upper triangular.
    Left,
    /// `m = L·Q` with L lower triangular and Q row-orthonormal.
    Right,
}

impl DenseTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len: usize = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![C64::ZERO; len] }
    }

    pub fn scalar(value: C64) -> Self {
        Self { shape: vec![], data: vec![value] }
    }

    pub fn from_data(shape: &[usize], data: Vec<C64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if data.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "{} elements for shape {:?} (expected {})",
                data.len(),
                shape,
                len
            )));
        }
        Ok(Self { shape: shape.to_vec(), data })
    }

    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> C64) -> Self {
        let mut t = Self::zeros(shape);
        let mut idx = vec![0usize; shape.len()];
        for k in 0..t.data.len() {
            t.unravel(k, &mut idx);
            t.data[k] = f(&idx);
        }
        t
    }

    /// d×d identity matrix.
    pub fn identity_matrix(d: usize) -> Self {
        Self::from_fn(&[d, d], |ix| if ix[0] == ix[1] { C64::ONE } else { C64::ZERO })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.len()
    }

    /// Product of all index dimensions.
    pub fn dim_total(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.shape.len()];
        for i in (0..self.shape.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.shape[i + 1];
        }
        s
    }

    fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for i in (0..self.shape.len()).rev() {
            out[i] = flat % self.shape[i];
            flat /= self.shape[i];
        }
    }

    pub fn get(&self, idx: &[usize]) -> C64 {
        debug_assert_eq!(idx.len(), self.shape.len());
        let strides = self.strides();
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[flat]
    }

    pub fn set(&mut self, idx: &[usize], value: C64) {
        let strides = self.strides();
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        self.data[flat] = value;
    }

    /// Reorder the legs. `perm[k]` is the original axis that lands at position `k`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.shape.len() {
            return Err(Error::InvalidPlan("permutation length mismatch".into()));
        }
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidPlan("invalid permutation".into()));
            }
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let old_strides = self.strides();
        let mut out = Self::zeros(&new_shape);
        let out_strides = out.strides();
        let mut idx = vec![0usize; new_shape.len()];
        for k in 0..out.data.len() {
            out.unravel(k, &mut idx);
            let mut src = 0usize;
            for (pos, &ax) in perm.iter().enumerate() {
                src += idx[pos] * old_strides[ax];
            }
            let dst: usize = idx.iter().zip(&out_strides).map(|(i, s)| i * s).sum();
            out.data[dst] = self.data[src];
        }
        Ok(out)
    }

    /// Apply a fuse or split plan. The element multiset is preserved and a fuse
    /// followed by the matching split is the identity.
    pub fn reshape(&self, plan: &ReshapePlan) -> Result<Self> {
        match plan {
            ReshapePlan::Fuse(groups) => self.fuse(groups),
            ReshapePlan::Split { axis, dims } => self.split(*axis, dims),
        }
    }

    /// Fuse groups of legs into single legs; groups may imply a permutation.
    pub fn fuse(&self, groups: &[Vec<usize>]) -> Result<Self> {
        let mut seen = vec![false; self.shape.len()];
        let mut order = Vec::with_capacity(self.shape.len());
        for g in groups {
            for &ax in g {
                if ax >= self.shape.len() || seen[ax] {
                    return Err(Error::InvalidPlan(format!(
                        "fuse plan must reference each index exactly once (axis {ax})"
                    )));
                }
                seen[ax] = true;
                order.push(ax);
            }
        }
        if order.len() != self.shape.len() {
            return Err(Error::InvalidPlan("fuse plan misses indices".into()));
        }
        let permuted = self.permute(&order)?;
        let new_shape: Vec<usize> = groups
            .iter()
            .map(|g| g.iter().map(|&ax| self.shape[ax]).product())
            .collect();
        Ok(Self { shape: new_shape, data: permuted.data })
    }

    /// Split one leg into factors whose product equals its dimension (row-major).
    pub fn split(&self, axis: usize, dims: &[usize]) -> Result<Self> {
        if axis >= self.shape.len() {
            return Err(Error::InvalidPlan(format!("split axis {axis} out of range")));
        }
        let prod: usize = dims.iter().product();
        if prod != self.shape[axis] {
            return Err(Error::InvalidPlan(format!(
                "split factors {:?} do not multiply to dimension {}",
                dims, self.shape[axis]
            )));
        }
        let mut new_shape = Vec::with_capacity(self.shape.len() + dims.len() - 1);
        new_shape.extend_from_slice(&self.shape[..axis]);
        new_shape.extend_from_slice(dims);
        new_shape.extend_from_slice(&self.shape[axis + 1..]);
        Ok(Self { shape: new_shape, data: self.data.clone() })
    }

    /// Plain row-major reinterpretation to a new shape of equal total dimension.
    pub fn with_shape(&self, shape: &[usize]) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != self.data.len() {
            return Err(Error::ShapeMismatch(format!(
                "cannot view {:?} as {:?}",
                self.shape, shape
            )));
        }
        Ok(Self { shape: shape.to_vec(), data: self.data.clone() })
    }

    pub fn conj(&self) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| z.conj()).collect() }
    }

    /// Conjugate transpose of an order-2 tensor.
    pub fn dagger(&self) -> Result<Self> {
        if self.order() != 2 {
            return Err(Error::ShapeMismatch("dagger needs an order-2 tensor".into()));
        }
        Ok(self.permute(&[1, 0])?.conj())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { shape: self.shape.clone(), data: self.data.iter().map(|z| z * factor).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch("add: shapes differ".into()));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(self.add(&other.scale(-C64::ONE))?)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Kronecker product of two matrices (order-2 tensors).
    pub fn kron(&self, other: &Self) -> Result<Self> {
        if self.order() != 2 || other.order() != 2 {
            return Err(Error::ShapeMismatch("kron needs order-2 tensors".into()));
        }
        let (m, n) = (self.shape[0], self.shape[1]);
        let (p, q) = (other.shape[0], other.shape[1]);
        Ok(Self::from_fn(&[m * p, n * q], |ix| {
            let (r, c) = (ix[0], ix[1]);
            self.get(&[r / p, c / q]) * other.get(&[r % p, c % q])
        }))
    }

    pub fn as_matrix(&self) -> Result<DMatrix<C64>> {
        if self.order() != 2 {
            return Err(Error::ShapeMismatch(format!(
                "expected an order-2 tensor, got shape {:?}",
                self.shape
            )));
        }
        Ok(DMatrix::from_row_iterator(
            self.shape[0],
            self.shape[1],
            self.data.iter().cloned(),
        ))
    }

    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        Self { shape: vec![m.nrows(), m.ncols()], data }
    }

    /// Matrix product of two order-2 tensors.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        contract(self, &[1], other, &[0])
    }

    /// Hermitian matrix exponential `exp(scale · self)` via eigendecomposition.
    pub fn expm_hermitian(&self, scale: C64) -> Result<Self> {
        let (vals, vecs) = eig_hermitian(self)?;
        let u = vecs.as_matrix()?;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            vals.len(),
            vals.iter().map(|&l| (scale * l).exp()),
        ));
        let m = &u * d * u.adjoint();
        Ok(Self::from_matrix(&m))
    }

    /// General small-matrix exponential by scaling and squaring with a Taylor core.
    pub fn expm(&self) -> Result<Self> {
        let m = self.as_matrix()?;
        if m.nrows() != m.ncols() {
            return Err(Error::ShapeMismatch("expm needs a square matrix".into()));
        }
        let norm = m.iter().map(|z| z.norm()).fold(0.0, f64::max) * m.nrows() as f64;
        let squarings = norm.log2().ceil().max(0.0) as u32 + 1;
        let a = m.map(|z| z / C64::from(2f64.powi(squarings as i32)));
        let n = m.nrows();
        let mut term = DMatrix::<C64>::identity(n, n);
        let mut acc = DMatrix::<C64>::identity(n, n);
        for k in 1..30 {
            term = (&term * &a).map(|z| z / C64::from(k as f64));
            acc += &term;
            if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            acc = &acc * &acc;
        }
        Ok(Self::from_matrix(&acc))
    }
}

/// Contract `a` and `b` over the paired legs `a_legs[k] ↔ b_legs[k]`.
///
/// The result carries `a`'s free legs (original order) followed by `b`'s.
pub fn contract(
    a: &DenseTensor,
    a_legs: &[usize],
    b: &DenseTensor,
    b_legs: &[usize],
) -> Result<DenseTensor> {
    if a_legs.len() != b_legs.len() {
        return Err(Error::ShapeMismatch("contract: unequal number of paired legs".into()));
    }
    for (&la, &lb) in a_legs.iter().zip(b_legs) {
        if la >= a.order() || lb >= b.order() {
            return Err(Error::ShapeMismatch("contract: leg index out of range".into()));
        }
        if a.shape[la] != b.shape[lb] {
            return Err(Error::ShapeMismatch(format!(
                "contract: leg {} of a (dim {}) vs leg {} of b (dim {})",
                la, a.shape[la], lb, b.shape[lb]
            )));
        }
    }
    let a_free: Vec<usize> = (0..a.order()).filter(|ax| !a_legs.contains(ax)).collect();
    let b_free: Vec<usize> = (0..b.order()).filter(|ax| !b_legs.contains(ax)).collect();
    let pa = a.permute(&[a_free.clone(), a_legs.to_vec()].concat())?;
    let pb = b.permute(&[b_legs.to_vec(), b_free.clone()].concat())?;
    let m: usize = a_free.iter().map(|&ax| a.shape[ax]).product();
    let k: usize = a_legs.iter().map(|&ax| a.shape[ax]).product();
    let n: usize = b_free.iter().map(|&ax| b.shape[ax]).product();
    let ma = DMatrix::from_row_iterator(m, k, pa.data.iter().cloned());
    let mb = DMatrix::from_row_iterator(k, n, pb.data.iter().cloned());
    let mc = ma * mb;
    let mut shape: Vec<usize> = a_free.iter().map(|&ax| a.shape[ax]).collect();
    shape.extend(b_free.iter().map(|&ax| b.shape[ax]));
    let mut data = Vec::with_capacity(m * n);
    for r in 0..m {
        for c in 0..n {
            data.push(mc[(r, c)]);
        }
    }
    DenseTensor::from_data(&shape, data)
}

/// Number of scalar multiplications of the naive pairwise contraction:
/// `dim(A)·dim(B)/dim(A∩B)`.
pub fn contraction_cost(a_shape: &[usize], b_shape: &[usize], shared_dims: &[usize]) -> Result<u128> {
    let da: u128 = a_shape.iter().map(|&d| d as u128).product();
    let db: u128 = b_shape.iter().map(|&d| d as u128).product();
    let ds: u128 = shared_dims.iter().map(|&d| d as u128).product();
    if ds == 0 || da % ds != 0 || db % ds != 0 {
        return Err(Error::Contract(format!(
            "shared dimension {ds} must divide both total dimensions ({da}, {db})"
        )));
    }
    Ok(da * db / ds)
}

/// Full SVD by QR-preconditioned one-sided Jacobi iteration.
///
/// `nalgebra`'s implicit-QR complex SVD mis-factors some matrices with
/// near-zero entries, so the decomposition here is done from scratch: the
/// Jacobi sweep orthogonalizes the columns of the triangular factor, which is
/// slower but unconditionally accurate. Returns `(U, singulars, V†)` with the
/// singular values sorted descending.
fn jacobi_svd(mat: &DMatrix<C64>) -> Result<(DMatrix<C64>, Vec<f64>, DMatrix<C64>)> {
    let (rows, cols) = (mat.nrows(), mat.ncols());
    if rows < cols {
        // Factor the adjoint and swap the roles of U and V.
        let (u, s, vt) = jacobi_svd(&mat.adjoint())?;
        return Ok((vt.adjoint(), s, u.adjoint()));
    }
    // Thin QR, then Jacobi on the k×k triangular factor.
    let qr = mat.clone().qr();
    let q = qr.q();
    let mut a = qr.r();
    let k = cols;
    let mut v = DMatrix::<C64>::identity(k, k);
    let mut norms2: Vec<f64> = (0..k).map(|j| a.column(j).norm_squared()).collect();
    let scale = norms2.iter().cloned().fold(0.0, f64::max).sqrt().max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..k {
            for q_col in p + 1..k {
                let gamma: C64 = a
                    .column(p)
                    .iter()
                    .zip(a.column(q_col).iter())
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let alpha = norms2[p];
                let beta = norms2[q_col];
                let g = gamma.norm();
                if g <= 1e-30 * scale * scale {
                    continue;
                }
                off = off.max(g / (alpha * beta).sqrt().max(1e-300));
                if g < 1e-16 * (alpha * beta).sqrt() {
                    continue;
                }
                let phase = gamma / C64::from(g);
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // col_p' = c·u − s·conj(phase)·v ; col_q' = s·phase·u + c·v.
                for i in 0..k {
                    let up = a[(i, p)];
                    let uq = a[(i, q_col)];
                    a[(i, p)] = C64::from(c) * up - C64::from(s) * phase.conj() * uq;
                    a[(i, q_col)] = C64::from(s) * phase * up + C64::from(c) * uq;
                }
                for i in 0..k {
                    let vp = v[(i, p)];
                    let vq = v[(i, q_col)];
                    v[(i, p)] = C64::from(c) * vp - C64::from(s) * phase.conj() * vq;
                    v[(i, q_col)] = C64::from(s) * phase * vp + C64::from(c) * vq;
                }
                norms2[p] = a.column(p).norm_squared();
                norms2[q_col] = a.column(q_col).norm_squared();
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    // Singular values and left vectors from the orthogonalized columns.
    let mut order: Vec<usize> = (0..k).collect();
    let sigmas: Vec<f64> = norms2.iter().map(|n2| n2.sqrt()).collect();
    order.sort_by(|&i, &j| sigmas[j].partial_cmp(&sigmas[i]).unwrap_or(std::cmp::Ordering::Equal));
    let mut u_r = DMatrix::<C64>::zeros(k, k);
    let mut singulars = Vec::with_capacity(k);
    let smax = order.first().map(|&i| sigmas[i]).unwrap_or(0.0);
    for (new_col, &old_col) in order.iter().enumerate() {
        let s = sigmas[old_col];
        singulars.push(s);
        if s > smax * 1e-150 && s > 0.0 {
            for i in 0..k {
                u_r[(i, new_col)] = a[(i, old_col)] / C64::from(s);
            }
        } else {
            // Zero column: fill with a unit vector orthogonalized later; the
            // truncation logic drops these entries anyway.
            u_r[(new_col % k, new_col)] = C64::ONE;
        }
    }
    let v_sorted = {
        let mut vs = DMatrix::<C64>::zeros(k, k);
        for (new_col, &old_col) in order.iter().enumerate() {
            for i in 0..k {
                vs[(i, new_col)] = v[(i, old_col)];
            }
        }
        vs
    };
    let u = &q * u_r;
    Ok((u, singulars, v_sorted.adjoint()))
}

/// Truncated singular value decomposition of an order-2 tensor.
pub fn svd_truncated(m: &DenseTensor, policy: &TruncationPolicy) -> Result<FactorizationResult> {
    let mat = m.as_matrix()?;
    let (u, singulars, vt) = jacobi_svd(&mat)?;
    let order: Vec<usize> = (0..singulars.len()).collect();
    if singulars.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("svd produced non-finite singular values".into()));
    }
    let total: f64 = singulars.iter().map(|s| s * s).sum();
    let smax = singulars.first().copied().unwrap_or(0.0);
    let mut keep = 0usize;
    for (k, s) in singulars.iter().enumerate() {
        if k >= policy.max_bond {
            break;
        }
        if total > 0.0 && s * s / total < policy.sv_cutoff {
            break;
        }
        // Exact zeros (to machine precision) carry no weight under any policy.
        if *s <= smax * 1e-14 {
            break;
        }
        keep = k + 1;
    }
    keep = keep.max(1);
    let discarded_weight: f64 = singulars[keep..].iter().map(|s| s * s).sum();
    let mut kept: Vec<f64> = singulars[..keep].to_vec();
    if policy.renormalize {
        let w: f64 = kept.iter().map(|s| s * s).sum::<f64>().sqrt();
        if w > 0.0 {
            for s in kept.iter_mut() {
                *s /= w;
            }
        }
    }
    let rows = m.shape()[0];
    let cols = m.shape()[1];
    let left = DenseTensor::from_fn(&[rows, keep], |ix| u[(ix[0], order[ix[1]])]);
    let right = DenseTensor::from_fn(&[keep, cols], |ix| vt[(order[ix[0]], ix[1])]);
    Ok(FactorizationResult { left, singulars: kept, right, discarded_weight })
}

/// QR (`side = Left`) or LQ (`side = Right`) factorization of an order-2 tensor.
///
/// Returns `(orthogonal factor, triangular factor)` ordered as they multiply:
/// `(Q, R)` for the left mode and `(L, Q)` for the right mode, with the
/// orthogonal factor listed first in both cases.
pub fn qr(m: &DenseTensor, side: QrSide) -> Result<(DenseTensor, DenseTensor)> {
    match side {
        QrSide::Left => {
            let mat = m.as_matrix()?;
            let qr = mat.qr();
            let (q, r) = (qr.q(), qr.r());
            Ok((DenseTensor::from_matrix(&q), DenseTensor::from_matrix(&r)))
        }
        QrSide::Right => {
            // LQ of M from QR of M†: M = (Q_r R_r)† with M† = Q_r R_r.
            let mat = m.as_matrix()?.adjoint();
            let qr = mat.qr();
            let l = DenseTensor::from_matrix(&qr.r().adjoint());
            let q = DenseTensor::from_matrix(&qr.q().adjoint());
            Ok((q, l))
        }
    }
}

/// Eigendecomposition of a Hermitian order-2 tensor.
///
/// Eigenvalues come out descending; the columns of the returned tensor are the
/// matching orthonormal eigenvectors. Inputs that are not Hermitian within
/// [`DEFAULT_TOL`] (relative to the largest entry) are rejected.
pub fn eig_hermitian(m: &DenseTensor) -> Result<(Vec<f64>, DenseTensor)> {
    let mat = m.as_matrix()?;
    if mat.nrows() != mat.ncols() {
        return Err(Error::ShapeMismatch("eig_hermitian needs a square matrix".into()));
    }
    let scale = mat.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let herm_err = (&mat - mat.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm_err > DEFAULT_TOL * scale.max(1.0) {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (deviation {herm_err:.3e})"
        )));
    }
    let sym = nalgebra::SymmetricEigen::new(mat);
    let mut order: Vec<usize> = (0..sym.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        sym.eigenvalues[j]
            .partial_cmp(&sym.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals: Vec<f64> = order.iter().map(|&i| sym.eigenvalues[i]).collect();
    let n = vals.len();
    let vecs = DenseTensor::from_fn(&[n, n], |ix| sym.eigenvectors[(ix[0], order[ix[1]])]);
    Ok((vals, vecs))
}

impl Serialize for DenseTensor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("DenseTensor", 3)?;
        s.serialize_field("shape", &self.shape)?;
        s.serialize_field("re", &self.data.iter().map(|z| z.re).collect::<Vec<_>>())?;
        s.serialize_field("im", &self.data.iter().map(|z| z.im).collect::<Vec<_>>())?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for DenseTensor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            shape: Vec<usize>,
            re: Vec<f64>,
            im: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.re.len() != raw.im.len() {
            return Err(D::Error::custom("re/im length mismatch"));
        }
        let data: Vec<C64> = raw.re.iter().zip(&raw.im).map(|(&re, &im)| C64::new(re, im)).collect();
        DenseTensor::from_data(&raw.shape, data).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_tensor(shape: &[usize], rng: &mut impl Rng) -> DenseTensor {
        DenseTensor::from_fn(shape, |_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn random_hermitian(n: usize, rng: &mut impl Rng) -> DenseTensor {
        let a = random_tensor(&[n, n], rng);
        a.add(&a.dagger().unwrap()).unwrap().scale(C64::from(0.5))
    }

    #[test]
    fn fuse_last_two_legs() {
        let mut rng = crate::rng::rng_from_seed(1);
        let t = random_tensor(&[2, 3, 4], &mut rng);
        let fused = t.fuse(&[vec![0], vec![1, 2]]).unwrap();
        assert_eq!(fused.shape(), &[2, 12]);
        // Fuse then split reproduces the original bit-exactly.
        let back = fused.split(1, &[3, 4]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn split_two_qubit_amplitudes() {
        // shape (4,) holding a 2-qubit state: psi(x1, x2) = psi(2*x1 + x2).
        let v = DenseTensor::from_data(
            &[4],
            (0..4).map(|k| C64::new(k as f64 + 1.0, -(k as f64))).collect(),
        )
        .unwrap();
        let t = v.split(0, &[2, 2]).unwrap();
        for x1 in 0..2 {
            for x2 in 0..2 {
                assert_eq!(t.get(&[x1, x2]), v.get(&[2 * x1 + x2]));
            }
        }
    }

    #[test]
    fn split_plan_dimension_mismatch_errors() {
        let t = DenseTensor::zeros(&[2, 12]);
        assert!(t.split(1, &[5, 2]).is_err());
        assert!(t.fuse(&[vec![0], vec![0, 1]]).is_err());
    }

    #[test]
    fn contract_identity_on_vector() {
        let id = DenseTensor::identity_matrix(2);
        let v = DenseTensor::from_data(&[2], vec![C64::new(0.3, 0.1), C64::new(-0.7, 0.2)]).unwrap();
        let out = contract(&id, &[1], &v, &[0]).unwrap();
        assert_eq!(out.shape(), &[2]);
        assert!(out.max_abs_diff(&v) < 1e-15);
    }

    #[test]
    fn contract_matches_nested_loop_oracle() {
        let mut rng = crate::rng::rng_from_seed(2);
        let a = random_tensor(&[2, 3], &mut rng);
        let b = random_tensor(&[3, 2], &mut rng);
        let c = contract(&a, &[1], &b, &[0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = C64::ZERO;
                for k in 0..3 {
                    acc += a.get(&[i, k]) * b.get(&[k, j]);
                }
                assert!((c.get(&[i, j]) - acc).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn chain_contraction_order_same_values_different_cost() {
        // A(x,i,k), B(i,j), C(k,j,y): triangle network with two free legs.
        let chi = 3usize;
        let mut rng = crate::rng::rng_from_seed(3);
        let a = random_tensor(&[chi, chi, chi], &mut rng);
        let b = random_tensor(&[chi, chi], &mut rng);
        let c = random_tensor(&[chi, chi, chi], &mut rng);

        // Path 1: (A,C) over k first.
        let ac = contract(&a, &[2], &c, &[0]).unwrap(); // (x,i,j,y)
        let path1 = contract(&ac, &[1, 2], &b, &[0, 1]).unwrap(); // (x,y)
        // Path 2: (B,C) over j first.
        let bc = contract(&b, &[1], &c, &[1]).unwrap(); // (i,k,y)
        let path2 = contract(&a, &[1, 2], &bc, &[0, 1]).unwrap(); // (x,y)
        assert!(path1.max_abs_diff(&path2) < 1e-12);

        // Costs of the first pairwise step: chi^5 vs chi^4.
        let cost_ac = contraction_cost(&[chi, chi, chi], &[chi, chi, chi], &[chi]).unwrap();
        let cost_bc = contraction_cost(&[chi, chi], &[chi, chi, chi], &[chi]).unwrap();
        assert_eq!(cost_ac, (chi as u128).pow(5));
        assert_eq!(cost_bc, (chi as u128).pow(4));
    }

    #[test]
    fn contraction_cost_examples() {
        // dim(A)=24, dim(B)=20, shared=4 -> 120 multiplications.
        assert_eq!(contraction_cost(&[6, 4], &[4, 5], &[4]).unwrap(), 120);
        // Outer product: no shared legs.
        assert_eq!(contraction_cost(&[3, 2], &[5], &[]).unwrap(), 30);
        // Full overlap (inner product).
        assert_eq!(contraction_cost(&[8], &[8], &[8]).unwrap(), 8);
        assert!(contraction_cost(&[3, 2], &[4], &[4]).is_err());
    }

    #[test]
    fn contraction_cost_equals_loop_count() {
        // Enumerate small (m, k, n) matrix shapes with total dimensions <= 256 and
        // compare the formula with an explicit nested-loop multiplication count.
        for m in 1..8usize {
            for k in 1..8usize {
                for n in 1..8usize {
                    if m * k > 256 || k * n > 256 {
                        continue;
                    }
                    let mut count = 0u128;
                    for _ in 0..m {
                        for _ in 0..n {
                            for _ in 0..k {
                                count += 1;
                            }
                        }
                    }
                    assert_eq!(
                        contraction_cost(&[m, k], &[k, n], &[k]).unwrap(),
                        count
                    );
                }
            }
        }
    }

    #[test]
    fn contract_is_multilinear() {
        let mut rng = crate::rng::rng_from_seed(4);
        for _ in 0..10 {
            let a = random_tensor(&[3, 2], &mut rng);
            let b = random_tensor(&[3, 2], &mut rng);
            let c = random_tensor(&[2, 4], &mut rng);
            let alpha = C64::new(rng.random::<f64>(), rng.random::<f64>());
            let lhs = contract(&a.scale(alpha).add(&b).unwrap(), &[1], &c, &[0]).unwrap();
            let rhs = contract(&a, &[1], &c, &[0])
                .unwrap()
                .scale(alpha)
                .add(&contract(&b, &[1], &c, &[0]).unwrap())
                .unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }

    #[test]
    fn svd_identity() {
        let id = DenseTensor::identity_matrix(2);
        let f = svd_truncated(&id, &TruncationPolicy::unlimited()).unwrap();
        assert!((f.singulars[0] - 1.0).abs() < 1e-12);
        assert!((f.singulars[1] - 1.0).abs() < 1e-12);
        assert!(f.discarded_weight == 0.0);
    }

    #[test]
    fn svd_rank_one() {
        let mut rng = crate::rng::rng_from_seed(5);
        let u = random_tensor(&[5], &mut rng);
        let v = random_tensor(&[3], &mut rng);
        let m = DenseTensor::from_fn(&[5, 3], |ix| u.get(&[ix[0]]) * v.get(&[ix[1]]));
        let f = svd_truncated(&m, &TruncationPolicy::unlimited()).unwrap();
        let expected = u.norm_frobenius() * v.norm_frobenius();
        assert!((f.singulars[0] - expected).abs() < 1e-10);
        for s in &f.singulars[1..] {
            assert!(*s < 1e-10);
        }
    }

    #[test]
    fn svd_truncation_error_matches_dropped_weight() {
        let mut rng = crate::rng::rng_from_seed(6);
        let m = random_tensor(&[6, 4], &mut rng);
        let full = svd_truncated(&m, &TruncationPolicy::unlimited()).unwrap();
        let pol = TruncationPolicy::new(2, 0.0, false).unwrap();
        let f = svd_truncated(&m, &pol).unwrap();
        assert_eq!(f.singulars.len(), 2);
        let dropped: f64 = full.singulars[2..].iter().map(|s| s * s).sum();
        assert!((f.discarded_weight - dropped).abs() < 1e-12);
        // Reconstruction error squared equals the discarded weight.
        let s = DenseTensor::from_fn(&[2, 2], |ix| {
            if ix[0] == ix[1] { C64::from(f.singulars[ix[0]]) } else { C64::ZERO }
        });
        let rec = f.left.matmul(&s).unwrap().matmul(&f.right).unwrap();
        let err2 = m.sub(&rec).unwrap().norm_frobenius().powi(2);
        assert!((err2 - f.discarded_weight).abs() < 1e-10);
    }

    #[test]
    fn svd_reproduces_input_when_bond_suffices() {
        let mut rng = crate::rng::rng_from_seed(7);
        let m = random_tensor(&[5, 7], &mut rng);
        let f = svd_truncated(&m, &TruncationPolicy::unlimited()).unwrap();
        let k = f.singulars.len();
        let s = DenseTensor::from_fn(&[k, k], |ix| {
            if ix[0] == ix[1] { C64::from(f.singulars[ix[0]]) } else { C64::ZERO }
        });
        let rec = f.left.matmul(&s).unwrap().matmul(&f.right).unwrap();
        let rel = m.sub(&rec).unwrap().norm_frobenius() / m.norm_frobenius();
        assert!(rel < 1e-10);
        // Orthogonality residuals.
        let ltl = f.left.dagger().unwrap().matmul(&f.left).unwrap();
        let rtr = f.right.matmul(&f.right.dagger().unwrap()).unwrap();
        assert!(ltl.max_abs_diff(&DenseTensor::identity_matrix(k)) < 1e-10);
        assert!(rtr.max_abs_diff(&DenseTensor::identity_matrix(k)) < 1e-10);
    }

    #[test]
    fn qr_identity_and_orthogonality() {
        let id = DenseTensor::identity_matrix(3);
        let (q, r) = qr(&id, QrSide::Left).unwrap();
        assert!(q.max_abs_diff(&DenseTensor::identity_matrix(3)) < 1e-12);
        assert!(r.max_abs_diff(&DenseTensor::identity_matrix(3)) < 1e-12);

        let mut rng = crate::rng::rng_from_seed(8);
        let m = random_tensor(&[4, 3], &mut rng);
        let (q, r) = qr(&m, QrSide::Left).unwrap();
        let qtq = q.dagger().unwrap().matmul(&q).unwrap();
        assert!(qtq.max_abs_diff(&DenseTensor::identity_matrix(3)) < 1e-12);
        // R upper triangular, Q·R reconstructs.
        for i in 0..r.shape()[0] {
            for j in 0..i.min(r.shape()[1]) {
                assert!(r.get(&[i, j]).norm() < 1e-12);
            }
        }
        assert!(q.matmul(&r).unwrap().max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn lq_of_wide_matrix() {
        let mut rng = crate::rng::rng_from_seed(9);
        let m = random_tensor(&[3, 4], &mut rng);
        let (q, l) = qr(&m, QrSide::Right).unwrap();
        let qqt = q.matmul(&q.dagger().unwrap()).unwrap();
        assert!(qqt.max_abs_diff(&DenseTensor::identity_matrix(3)) < 1e-12);
        for i in 0..l.shape()[0] {
            for j in (i + 1)..l.shape()[1] {
                assert!(l.get(&[i, j]).norm() < 1e-12);
            }
        }
        assert!(l.matmul(&q).unwrap().max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn eig_pauli_z_and_x() {
        let z = DenseTensor::from_data(
            &[2, 2],
            vec![C64::ONE, C64::ZERO, C64::ZERO, -C64::ONE],
        )
        .unwrap();
        let (vals, _) = eig_hermitian(&z).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] + 1.0).abs() < 1e-12);

        let x = DenseTensor::from_data(
            &[2, 2],
            vec![C64::ZERO, C64::ONE, C64::ONE, C64::ZERO],
        )
        .unwrap();
        let (vals, vecs) = eig_hermitian(&x).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] + 1.0).abs() < 1e-12);
        // Eigenvectors are (|0> ± |1>)/sqrt(2) up to phase: |<v|expected>| = 1.
        let s = 0.5f64.sqrt();
        for (col, sign) in [(0usize, 1.0), (1usize, -1.0)] {
            let ip = vecs.get(&[0, col]) * s + vecs.get(&[1, col]) * s * sign;
            assert!((ip.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hermitian_singular_values_are_absolute_eigenvalues() {
        let mut rng = crate::rng::rng_from_seed(10);
        let h = random_hermitian(8, &mut rng);
        let (vals, vecs) = eig_hermitian(&h).unwrap();
        // U diag(vals) U^dag reconstructs.
        let u = vecs.as_matrix().unwrap();
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            8,
            vals.iter().map(|&v| C64::from(v)),
        ));
        let rec = DenseTensor::from_matrix(&(&u * d * u.adjoint()));
        assert!(rec.max_abs_diff(&h) < 1e-10);

        let f = svd_truncated(&h, &TruncationPolicy::unlimited()).unwrap();
        let mut abs_vals: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
        abs_vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (s, av) in f.singulars.iter().zip(&abs_vals) {
            assert!((s - av).abs() < 1e-10);
        }
    }

    #[test]
    fn non_hermitian_input_rejected() {
        let m = DenseTensor::from_data(
            &[2, 2],
            vec![C64::ZERO, C64::ONE, C64::ZERO, C64::ZERO],
        )
        .unwrap();
        assert!(eig_hermitian(&m).is_err());
    }

    #[test]
    fn expm_matches_hermitian_route() {
        let mut rng = crate::rng::rng_from_seed(11);
        let h = random_hermitian(4, &mut rng);
        let a = h.scale(C64::new(0.0, -0.3));
        let via_series = a.expm().unwrap();
        let via_eig = h.expm_hermitian(C64::new(0.0, -0.3)).unwrap();
        assert!(via_series.max_abs_diff(&via_eig) < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = crate::rng::rng_from_seed(12);
        let t = random_tensor(&[2, 3], &mut rng);
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"shape\"") && s.contains("\"re\"") && s.contains("\"im\""));
        let back: DenseTensor = serde_json::from_str(&s).unwrap();
        assert!(t.max_abs_diff(&back) == 0.0);
    }
}
