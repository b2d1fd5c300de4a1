//! Matrix product operators: symbolic Hamiltonian builders, arithmetic, and
//! application to states.
//!
//! Site tensors are order-4 with legs (left bond, physical out, physical in,
//! right bond). Builders assemble the bulk operator-valued matrices of the
//! auxiliary-state construction and extract the boundaries as the last row /
//! first column of the bulk matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mps::{Form, Mps};
use crate::stab::{PauliAxis, PauliString};
use crate::tensor::{contract, C64, DenseTensor, TruncationPolicy};

/// Field axis for the local-field builder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn matrix(self) -> DenseTensor {
        match self {
            Axis::X => PauliAxis::X.matrix(),
            Axis::Y => PauliAxis::Y.matrix(),
            Axis::Z => PauliAxis::Z.matrix(),
        }
    }
}

/// Symbolic operator descriptions accepted by [`build_mpo`].
#[derive(Clone, Debug)]
pub enum OperatorSpec {
    /// `Σ_j h_j σ^axis_j`.
    LocalField { h: Vec<f64>, axis: Axis },
    /// `Σ_j X_j X_{j+1} + Y_j Y_{j+1} + Δ Z_j Z_{j+1}`.
    Xxz { n: usize, delta: f64 },
    /// `Σ_k Σ_{j>i} α_k λ_k^{j-i-1} S_i S_j` with a caller-supplied local
    /// operator `S`; one auxiliary channel per exponential.
    LongRange { n: usize, weights: Vec<f64>, decays: Vec<f64>, op: DenseTensor },
    /// Explicit sum of weighted Pauli strings.
    PauliSum { terms: Vec<(f64, PauliString)> },
}

impl OperatorSpec {
    pub fn sites(&self) -> usize {
        match self {
            OperatorSpec::LocalField { h, .. } => h.len(),
            OperatorSpec::Xxz { n, .. } => *n,
            OperatorSpec::LongRange { n, .. } => *n,
            OperatorSpec::PauliSum { terms } => {
                terms.first().map(|(_, p)| p.len()).unwrap_or(0)
            }
        }
    }

    /// Uniform transverse-field Ising chain `-j Σ Z Z - h Σ X` as a Pauli sum.
    pub fn tfi(n: usize, j: f64, h: f64) -> OperatorSpec {
        let mut terms = Vec::new();
        for k in 0..n - 1 {
            let mut p = PauliString::identity(n);
            p.set_axis(k, PauliAxis::Z);
            p.set_axis(k + 1, PauliAxis::Z);
            terms.push((-j, p));
        }
        for k in 0..n {
            terms.push((-h, PauliString::single(n, k, PauliAxis::X)));
        }
        OperatorSpec::PauliSum { terms }
    }

    /// Nearest-neighbour bond terms `ĥ_{j,j+1}` as 4×4 matrices, one per bond.
    ///
    /// Single-site contributions are split half/half between the adjacent
    /// bonds (full weight at the chain edges). Errors when the spec contains
    /// couplings beyond nearest neighbours.
    pub fn bond_terms(&self) -> Result<Vec<DenseTensor>> {
        let n = self.sites();
        if n < 2 {
            return Err(Error::Contract("bond terms need n >= 2".into()));
        }
        let id = DenseTensor::identity_matrix(2);
        let mut bonds: Vec<DenseTensor> = vec![DenseTensor::zeros(&[4, 4]); n - 1];
        let add_site = |bonds: &mut Vec<DenseTensor>, j: usize, m: &DenseTensor| {
            // Split between bonds (j-1,j) and (j,j+1).
            let mut weights = Vec::new();
            if j > 0 {
                weights.push((j - 1, false));
            }
            if j < n - 1 {
                weights.push((j, true));
            }
            let w = 1.0 / weights.len() as f64;
            for (b, left_factor) in weights {
                let term = if left_factor {
                    m.kron(&id).unwrap()
                } else {
                    id.kron(m).unwrap()
                };
                bonds[b] = bonds[b].add(&term.scale(C64::from(w))).unwrap();
            }
        };
        match self {
            OperatorSpec::LocalField { h, axis } => {
                for (j, &hj) in h.iter().enumerate() {
                    add_site(&mut bonds, j, &axis.matrix().scale(C64::from(hj)));
                }
            }
            OperatorSpec::Xxz { delta, .. } => {
                let xx = PauliAxis::X.matrix().kron(&PauliAxis::X.matrix())?;
                let yy = PauliAxis::Y.matrix().kron(&PauliAxis::Y.matrix())?;
                let zz = PauliAxis::Z.matrix().kron(&PauliAxis::Z.matrix())?;
                let term = xx.add(&yy)?.add(&zz.scale(C64::from(*delta)))?;
                for b in bonds.iter_mut() {
                    *b = b.add(&term)?;
                }
            }
            OperatorSpec::PauliSum { terms } => {
                for (w, p) in terms {
                    let support = p.support();
                    match support.len() {
                        0 => {
                            return Err(Error::Contract(
                                "identity term has no bond decomposition".into(),
                            ))
                        }
                        1 => {
                            let j = support[0];
                            let m = p.axis(j).matrix().scale(C64::from(*w) * p.phase_factor());
                            add_site(&mut bonds, j, &m);
                        }
                        2 => {
                            let (i, j) = (support[0], support[1]);
                            if j != i + 1 {
                                return Err(Error::Contract(format!(
                                    "term {p} is not nearest-neighbour"
                                )));
                            }
                            let m = p
                                .axis(i)
                                .matrix()
                                .kron(&p.axis(j).matrix())?
                                .scale(C64::from(*w) * p.phase_factor());
                            bonds[i] = bonds[i].add(&m)?;
                        }
                        _ => {
                            return Err(Error::Contract(format!(
                                "term {p} spans more than two sites"
                            )))
                        }
                    }
                }
            }
            OperatorSpec::LongRange { .. } => {
                return Err(Error::Contract(
                    "long-range interactions have no nearest-neighbour decomposition".into(),
                ))
            }
        }
        Ok(bonds)
    }
}

/// Matrix product operator over a register of qubit-like sites.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mpo {
    sites: Vec<DenseTensor>,
}

impl Mpo {
    pub fn from_sites(sites: Vec<DenseTensor>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Contract("an MPO needs at least one site".into()));
        }
        for (j, s) in sites.iter().enumerate() {
            if s.order() != 4 {
                return Err(Error::ShapeMismatch(format!("MPO site {j} is not order-4")));
            }
        }
        if sites[0].shape()[0] != 1 || sites[sites.len() - 1].shape()[3] != 1 {
            return Err(Error::ShapeMismatch("MPO boundary bonds must be 1".into()));
        }
        for j in 0..sites.len() - 1 {
            if sites[j].shape()[3] != sites[j + 1].shape()[0] {
                return Err(Error::ShapeMismatch(format!("MPO bond mismatch at {j}")));
            }
        }
        Ok(Self { sites })
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
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

    pub fn bond_dims(&self) -> Vec<usize> {
        (0..self.len() - 1).map(|j| self.sites[j].shape()[3]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Identity operator on `n` sites of local dimension `d`.
    pub fn identity(n: usize, d: usize) -> Self {
        let site = DenseTensor::from_fn(&[1, d, d, 1], |ix| {
            if ix[1] == ix[2] { C64::ONE } else { C64::ZERO }
        });
        Self { sites: vec![site; n] }
    }

    /// Product of per-site 2×2 (or d×d) operators: bond dimension 1.
    pub fn from_local_ops(ops: &[DenseTensor]) -> Result<Self> {
        let sites = ops
            .iter()
            .map(|m| {
                let d = m.shape()[0];
                m.with_shape(&[1, d, d, 1])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_sites(sites)
    }

    /// Dense `2^n × 2^n` matrix (small registers only).
    pub fn to_dense(&self) -> DenseTensor {
        let mut acc = self.sites[0].clone(); // (1, o, i, r)
        for s in &self.sites[1..] {
            let k = acc.order() - 1;
            acc = contract(&acc, &[k], s, &[0]).unwrap(); // (1, o,i, o,i, ..., r)
        }
        // Strip boundary legs, then interleave (o1,i1,o2,i2,...) -> (o..,i..).
        let n = self.len();
        let inner: Vec<usize> = acc.shape()[1..acc.order() - 1].to_vec();
        let t = acc.with_shape(&inner).unwrap();
        let mut perm: Vec<usize> = (0..n).map(|j| 2 * j).collect();
        perm.extend((0..n).map(|j| 2 * j + 1));
        let t = t.permute(&perm).unwrap();
        let dout: usize = (0..n).map(|j| inner[2 * j]).product();
        let din: usize = (0..n).map(|j| inner[2 * j + 1]).product();
        t.with_shape(&[dout, din]).unwrap()
    }

    /// Adjoint operator.
    pub fn dagger(&self) -> Self {
        let sites = self
            .sites
            .iter()
            .map(|s| s.conj().permute(&[0, 2, 1, 3]).unwrap())
            .collect();
        Self { sites }
    }
}

/// Build the exact MPO of a symbolic operator.
pub fn build_mpo(spec: &OperatorSpec) -> Result<Mpo> {
    let n = spec.sites();
    if n == 0 {
        return Err(Error::Contract("empty operator spec".into()));
    }
    match spec {
        OperatorSpec::LocalField { h, axis } => {
            if n == 1 {
                return Mpo::from_local_ops(&[axis.matrix().scale(C64::from(h[0]))]);
            }
            let id = DenseTensor::identity_matrix(2);
            let op = axis.matrix();
            // Bulk: [[I, 0], [h_j op, I]]; boundaries are last row / first column.
            let bulk = |hj: f64| {
                operator_valued(&[
                    vec![Some(id.clone()), None],
                    vec![Some(op.scale(C64::from(hj))), Some(id.clone())],
                ])
            };
            let mut sites = Vec::with_capacity(n);
            for (j, &hj) in h.iter().enumerate() {
                let w = bulk(hj);
                sites.push(if j == 0 {
                    last_row(&w)
                } else if j == n - 1 {
                    first_col(&w)
                } else {
                    w
                });
            }
            Mpo::from_sites(sites)
        }
        OperatorSpec::Xxz { delta, .. } => {
            if n < 2 {
                return Err(Error::Contract("XXZ needs n >= 2".into()));
            }
            let id = DenseTensor::identity_matrix(2);
            let x = PauliAxis::X.matrix();
            let y = PauliAxis::Y.matrix();
            let z = PauliAxis::Z.matrix();
            // Bulk 5×5 operator-valued matrix in the standard layout.
            let w = operator_valued(&[
                vec![Some(id.clone()), None, None, None, None],
                vec![Some(x.clone()), None, None, None, None],
                vec![Some(y.clone()), None, None, None, None],
                vec![Some(z.clone()), None, None, None, None],
                vec![
                    None,
                    Some(x.clone()),
                    Some(y.clone()),
                    Some(z.scale(C64::from(*delta))),
                    Some(id.clone()),
                ],
            ]);
            let mut sites = Vec::with_capacity(n);
            for j in 0..n {
                sites.push(if j == 0 {
                    last_row(&w)
                } else if j == n - 1 {
                    first_col(&w)
                } else {
                    w.clone()
                });
            }
            Mpo::from_sites(sites)
        }
        OperatorSpec::LongRange { weights, decays, op, .. } => {
            if n < 2 {
                return Err(Error::Contract("long-range spec needs n >= 2".into()));
            }
            if weights.len() != decays.len() || weights.is_empty() {
                return Err(Error::Contract("weights/decays length mismatch".into()));
            }
            for &l in decays {
                if !(0.0 < l && l <= 1.0) {
                    return Err(Error::Contract("decay rates must lie in (0, 1]".into()));
                }
            }
            let k = weights.len();
            let d = 2 + k;
            let id = DenseTensor::identity_matrix(2);
            // Rows/cols: 0 = finished, 1..=k = in-flight channel, d-1 = not started.
            let mut cells: Vec<Vec<Option<DenseTensor>>> = vec![vec![None; d]; d];
            cells[0][0] = Some(id.clone());
            cells[d - 1][d - 1] = Some(id.clone());
            for c in 0..k {
                cells[1 + c][0] = Some(op.clone()); // close the pair
                cells[1 + c][1 + c] = Some(id.scale(C64::from(decays[c]))); // pad the gap
                cells[d - 1][1 + c] = Some(op.scale(C64::from(weights[c]))); // open the pair
            }
            let w = operator_valued(&cells);
            let mut sites = Vec::with_capacity(n);
            for j in 0..n {
                sites.push(if j == 0 {
                    last_row(&w)
                } else if j == n - 1 {
                    first_col(&w)
                } else {
                    w.clone()
                });
            }
            Mpo::from_sites(sites)
        }
        OperatorSpec::PauliSum { terms } => {
            if terms.is_empty() {
                return Err(Error::Contract("empty pauli sum".into()));
            }
            // Direct sum of bond-1 string MPOs: diagonal bulk blocks, boundary
            // row/column vectors; coefficients folded into the first site.
            let k = terms.len();
            let mut sites = Vec::with_capacity(n);
            for j in 0..n {
                let (l, r) = if n == 1 {
                    (1, 1)
                } else if j == 0 {
                    (1, k)
                } else if j == n - 1 {
                    (k, 1)
                } else {
                    (k, k)
                };
                let t = DenseTensor::from_fn(&[l, 2, 2, r], |ix| {
                    let c = if l == 1 && r == 1 {
                        if terms.len() > 1 {
                            return C64::ZERO; // unreachable for n==1 handled below
                        }
                        0
                    } else if l == 1 {
                        ix[3]
                    } else if r == 1 {
                        ix[0]
                    } else if ix[0] == ix[3] {
                        ix[0]
                    } else {
                        return C64::ZERO;
                    };
                    let (wgt, p) = &terms[c];
                    let m = p.axis(j).matrix();
                    let scale = if j == 0 {
                        C64::from(*wgt) * p.phase_factor()
                    } else {
                        C64::ONE
                    };
                    m.get(&[ix[1], ix[2]]) * scale
                });
                sites.push(t);
            }
            if n == 1 {
                // Sum the 2×2 matrices directly.
                let mut m = DenseTensor::zeros(&[2, 2]);
                for (w, p) in terms {
                    m = m.add(&p.axis(0).matrix().scale(C64::from(*w) * p.phase_factor()))?;
                }
                return Mpo::from_local_ops(&[m]);
            }
            Mpo::from_sites(sites)
        }
    }
}

/// Direct sum of two MPOs on the same register.
pub fn mpo_sum(a: &Mpo, b: &Mpo) -> Result<Mpo> {
    if a.len() != b.len() || a.phys_dims() != b.phys_dims() {
        return Err(Error::ShapeMismatch("mpo_sum: register mismatch".into()));
    }
    let n = a.len();
    let mut sites = Vec::with_capacity(n);
    for j in 0..n {
        let sa = &a.sites[j];
        let sb = &b.sites[j];
        let (la, d, _, ra) = shape4(sa);
        let (lb, _, _, rb) = shape4(sb);
        let (l, r) = if n == 1 {
            (1, 1)
        } else if j == 0 {
            (1, ra + rb)
        } else if j == n - 1 {
            (la + lb, 1)
        } else {
            (la + lb, ra + rb)
        };
        let t = DenseTensor::from_fn(&[l, d, d, r], |ix| {
            let (li, o, i, ri) = (ix[0], ix[1], ix[2], ix[3]);
            let in_a_row = li < la || j == 0;
            let in_a_col = ri < ra || j == n - 1;
            if n == 1 {
                return sa.get(&[0, o, i, 0]) + sb.get(&[0, o, i, 0]);
            }
            if j == 0 {
                if ri < ra { sa.get(&[0, o, i, ri]) } else { sb.get(&[0, o, i, ri - ra]) }
            } else if j == n - 1 {
                if li < la { sa.get(&[li, o, i, 0]) } else { sb.get(&[li - la, o, i, 0]) }
            } else if in_a_row && in_a_col {
                sa.get(&[li, o, i, ri])
            } else if !in_a_row && !in_a_col {
                sb.get(&[li - la, o, i, ri - ra])
            } else {
                C64::ZERO
            }
        });
        sites.push(t);
    }
    Mpo::from_sites(sites)
}

/// Apply `o` to `s` exactly (bond χ·D), then compress per `policy`.
///
/// Returns the new state and the discarded squared weight of the compression.
pub fn apply_mpo(o: &Mpo, s: &Mps, policy: &TruncationPolicy) -> Result<(Mps, f64)> {
    let exact = apply_mpo_exact(o, s)?;
    exact.truncate_svd(policy)
}

/// The exact MPO·MPS product with bond dimension χ·D.
pub fn apply_mpo_exact(o: &Mpo, s: &Mps) -> Result<Mps> {
    if o.len() != s.len() || o.phys_dims() != s.phys_dims() {
        return Err(Error::ShapeMismatch("apply_mpo: register mismatch".into()));
    }
    let mut sites = Vec::with_capacity(s.len());
    for (w, a) in o.sites.iter().zip(s.sites()) {
        // w (L, o, i, R) with a (l, i, r) -> (L, o, R, l, r) -> ((L,l), o, (R,r)).
        let t = contract(w, &[2], a, &[1])?; // (L, o, R, l, r)
        let t = t.permute(&[0, 3, 1, 2, 4])?; // (L, l, o, R, r)
        let (bl, l, d, br, r) =
            (t.shape()[0], t.shape()[1], t.shape()[2], t.shape()[3], t.shape()[4]);
        sites.push(t.with_shape(&[bl * l, d, br * r])?);
    }
    let mut out = Mps::from_sites(sites, Form::None)?;
    out.log_norm = s.log_norm;
    Ok(out)
}

/// ⟨ψ|O|ψ⟩ / ⟨ψ|ψ⟩ by sequentially updating the boundary tensor.
pub fn expectation(s: &Mps, o: &Mpo) -> Result<C64> {
    if o.len() != s.len() || o.phys_dims() != s.phys_dims() {
        return Err(Error::ShapeMismatch("expectation: register mismatch".into()));
    }
    // env legs: (bra bond, mpo bond, ket bond).
    let mut env = DenseTensor::from_data(&[1, 1, 1], vec![C64::ONE]).unwrap();
    for (w, a) in o.sites.iter().zip(s.sites()) {
        env = env_step_left(&env, a, w);
    }
    let num = env.data()[0];
    let den = crate::mps::overlap(s, s)?;
    Ok(num / den)
}

/// One left-environment update: env' = A† W env A (legs bra, mpo, ket).
pub(crate) fn env_step_left(env: &DenseTensor, a: &DenseTensor, w: &DenseTensor) -> DenseTensor {
    // env (b, m, k), a (k, i, k'), w (m, o, i, m'), bra a* (b, o, b').
    let t = contract(env, &[2], a, &[0]).unwrap(); // (b, m, i, k')
    let t = contract(&t, &[1, 2], w, &[0, 2]).unwrap(); // (b, k', o, m')
    let t = contract(&a.conj(), &[0, 1], &t, &[0, 2]).unwrap(); // (b', k', m')
    t.permute(&[0, 2, 1]).unwrap()
}

/// One right-environment update: env' legs (bra, mpo, ket).
pub(crate) fn env_step_right(env: &DenseTensor, a: &DenseTensor, w: &DenseTensor) -> DenseTensor {
    // env (b, m, k), a (k', i, k), w (m', o, i, m), bra a* (b', o, b).
    let t = contract(a, &[2], env, &[2]).unwrap(); // (k', i, b, m)
    let t = contract(w, &[2, 3], &t, &[1, 3]).unwrap(); // (m', o, k', b)
    let t = contract(&a.conj(), &[1, 2], &t, &[1, 3]).unwrap(); // (b', m', k')
    t
}

fn shape4(t: &DenseTensor) -> (usize, usize, usize, usize) {
    (t.shape()[0], t.shape()[1], t.shape()[2], t.shape()[3])
}

/// Assemble an order-4 site tensor from a matrix of optional 2×2 operators.
fn operator_valued(cells: &[Vec<Option<DenseTensor>>]) -> DenseTensor {
    let rows = cells.len();
    let cols = cells[0].len();
    DenseTensor::from_fn(&[rows, 2, 2, cols], |ix| match &cells[ix[0]][ix[3]] {
        Some(m) => m.get(&[ix[1], ix[2]]),
        None => C64::ZERO,
    })
}

/// Left boundary = last row of the bulk operator-valued matrix.
fn last_row(bulk: &DenseTensor) -> DenseTensor {
    let (rows, d, _, cols) = shape4(bulk);
    DenseTensor::from_fn(&[1, d, d, cols], |ix| bulk.get(&[rows - 1, ix[1], ix[2], ix[3]]))
}

/// Right boundary = first column of the bulk operator-valued matrix.
fn first_col(bulk: &DenseTensor) -> DenseTensor {
    let (_, d, _, _) = shape4(bulk);
    DenseTensor::from_fn(&[bulk.shape()[0], d, d, 1], |ix| bulk.get(&[ix[0], ix[1], ix[2], 0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::{fidelity2, overlap, Mps};
    use crate::tensor::TruncationPolicy;

    fn kron_chain(ops: &[DenseTensor]) -> DenseTensor {
        let mut acc = ops[0].clone();
        for m in &ops[1..] {
            acc = acc.kron(m).unwrap();
        }
        acc
    }

    fn dense_local_sum(n: usize, h: &[f64], op: &DenseTensor) -> DenseTensor {
        let id = DenseTensor::identity_matrix(2);
        let mut acc = DenseTensor::zeros(&[1 << n, 1 << n]);
        for j in 0..n {
            let ops: Vec<DenseTensor> = (0..n)
                .map(|k| if k == j { op.scale(C64::from(h[j])) } else { id.clone() })
                .collect();
            acc = acc.add(&kron_chain(&ops)).unwrap();
        }
        acc
    }

    fn dense_xxz(n: usize, delta: f64) -> DenseTensor {
        let id = DenseTensor::identity_matrix(2);
        let mut acc = DenseTensor::zeros(&[1 << n, 1 << n]);
        for j in 0..n - 1 {
            for (op, w) in [
                (PauliAxis::X.matrix(), 1.0),
                (PauliAxis::Y.matrix(), 1.0),
                (PauliAxis::Z.matrix(), delta),
            ] {
                let ops: Vec<DenseTensor> = (0..n)
                    .map(|k| if k == j || k == j + 1 { op.clone() } else { id.clone() })
                    .collect();
                acc = acc.add(&kron_chain(&ops).scale(C64::from(w))).unwrap();
            }
        }
        acc
    }

    #[test]
    fn local_field_mpo_matches_kron() {
        let spec = OperatorSpec::LocalField { h: vec![1.0, 1.0], axis: Axis::Z };
        let mpo = build_mpo(&spec).unwrap();
        assert_eq!(mpo.max_bond(), 2);
        let dense = dense_local_sum(2, &[1.0, 1.0], &PauliAxis::Z.matrix());
        assert!(mpo.to_dense().max_abs_diff(&dense) < 1e-12);

        let spec = OperatorSpec::LocalField { h: vec![0.3, -0.8, 2.0, 0.1], axis: Axis::X };
        let mpo = build_mpo(&spec).unwrap();
        let dense = dense_local_sum(4, &[0.3, -0.8, 2.0, 0.1], &PauliAxis::X.matrix());
        assert!(mpo.to_dense().max_abs_diff(&dense) < 1e-12);
    }

    #[test]
    fn xxz_mpo_matches_kron() {
        for (n, delta) in [(3usize, 1.0), (4, 0.5), (5, -1.3)] {
            let mpo = build_mpo(&OperatorSpec::Xxz { n, delta }).unwrap();
            assert_eq!(mpo.max_bond(), 5);
            assert!(mpo.to_dense().max_abs_diff(&dense_xxz(n, delta)) < 1e-10);
        }
    }

    #[test]
    fn long_range_mpo_matches_sum() {
        // K=1, alpha=1, lambda=e^{-1}: H = sum_{j>i} alpha * lambda^{j-i-1} S_i S_j.
        let n = 4;
        let lam = (-1.0f64).exp();
        let op = PauliAxis::Z.matrix();
        let mpo = build_mpo(&OperatorSpec::LongRange {
            n,
            weights: vec![1.0],
            decays: vec![lam],
            op: op.clone(),
        })
        .unwrap();
        assert_eq!(mpo.max_bond(), 3);
        let id = DenseTensor::identity_matrix(2);
        let mut dense = DenseTensor::zeros(&[1 << n, 1 << n]);
        for i in 0..n {
            for j in i + 1..n {
                let w = lam.powi((j - i - 1) as i32);
                let ops: Vec<DenseTensor> = (0..n)
                    .map(|k| if k == i || k == j { op.clone() } else { id.clone() })
                    .collect();
                dense = dense.add(&kron_chain(&ops).scale(C64::from(w))).unwrap();
            }
        }
        assert!(mpo.to_dense().max_abs_diff(&dense) < 1e-10);

        // Two exponentials: bond 2+K.
        let mpo2 = build_mpo(&OperatorSpec::LongRange {
            n,
            weights: vec![0.7, -0.2],
            decays: vec![0.5, 0.9],
            op: op.clone(),
        })
        .unwrap();
        assert_eq!(mpo2.max_bond(), 4);
        let mut dense2 = DenseTensor::zeros(&[1 << n, 1 << n]);
        for i in 0..n {
            for j in i + 1..n {
                let w = 0.7 * 0.5f64.powi((j - i - 1) as i32)
                    - 0.2 * 0.9f64.powi((j - i - 1) as i32);
                let ops: Vec<DenseTensor> = (0..n)
                    .map(|k| if k == i || k == j { op.clone() } else { id.clone() })
                    .collect();
                dense2 = dense2.add(&kron_chain(&ops).scale(C64::from(w))).unwrap();
            }
        }
        assert!(mpo2.to_dense().max_abs_diff(&dense2) < 1e-10);
    }

    #[test]
    fn pauli_sum_mpo_matches_kron() {
        let terms = vec![
            (0.5, PauliString::parse("XZI").unwrap()),
            (-1.5, PauliString::parse("IYY").unwrap()),
            (0.25, PauliString::parse("ZIZ").unwrap()),
        ];
        let mpo = build_mpo(&OperatorSpec::PauliSum { terms: terms.clone() }).unwrap();
        let mut dense = DenseTensor::zeros(&[8, 8]);
        for (w, p) in &terms {
            dense = dense.add(&p.dense().scale(C64::from(*w))).unwrap();
        }
        assert!(mpo.to_dense().max_abs_diff(&dense) < 1e-12);
    }

    #[test]
    fn hermitian_specs_give_hermitian_matrices() {
        for spec in [
            OperatorSpec::LocalField { h: vec![0.4, -0.6, 1.1], axis: Axis::Y },
            OperatorSpec::Xxz { n: 4, delta: 0.7 },
            OperatorSpec::tfi(4, 1.0, 0.5),
        ] {
            let d = build_mpo(&spec).unwrap().to_dense();
            assert!(d.max_abs_diff(&d.dagger().unwrap()) < 1e-12);
        }
    }

    #[test]
    fn mpo_sum_examples() {
        // a + zero = a.
        let a = build_mpo(&OperatorSpec::LocalField { h: vec![1.0, 2.0], axis: Axis::Z }).unwrap();
        let zero = Mpo::from_local_ops(&[
            DenseTensor::zeros(&[2, 2]),
            DenseTensor::zeros(&[2, 2]),
        ])
        .unwrap();
        let s = mpo_sum(&a, &zero).unwrap();
        assert!(s.to_dense().max_abs_diff(&a.to_dense()) < 1e-12);

        // Z-field + X-field.
        let b = build_mpo(&OperatorSpec::LocalField { h: vec![0.5, -1.0], axis: Axis::X }).unwrap();
        let s = mpo_sum(&a, &b).unwrap();
        let dense = a.to_dense().add(&b.to_dense()).unwrap();
        assert!(s.to_dense().max_abs_diff(&dense) < 1e-12);

        // XXZ + field: bulk bond 5 + 2.
        let xxz = build_mpo(&OperatorSpec::Xxz { n: 4, delta: 1.0 }).unwrap();
        let fld =
            build_mpo(&OperatorSpec::LocalField { h: vec![1.0; 4], axis: Axis::Z }).unwrap();
        let s = mpo_sum(&xxz, &fld).unwrap();
        assert_eq!(s.max_bond(), 7);
        let dense = xxz.to_dense().add(&fld.to_dense()).unwrap();
        assert!(s.to_dense().max_abs_diff(&dense) < 1e-10);
    }

    #[test]
    fn apply_identity_mpo_is_identity() {
        let s = Mps::random(4, 2, 3, 70).unwrap();
        let id = Mpo::identity(4, 2);
        let (t, w) = apply_mpo(&id, &s, &TruncationPolicy::unlimited()).unwrap();
        assert!(w < 1e-20);
        assert!((fidelity2(&s, &t).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn apply_field_mpo_matches_dense() {
        let n = 4;
        let s = Mps::plus_all(n).unwrap();
        let o = build_mpo(&OperatorSpec::LocalField { h: vec![1.0; n], axis: Axis::Z }).unwrap();
        let (t, _) = apply_mpo(&o, &s, &TruncationPolicy::unlimited()).unwrap();
        let dense = contract(&o.to_dense(), &[1], &s.to_vector(), &[0]).unwrap();
        assert!(t.to_vector().max_abs_diff(&dense) < 1e-10);
    }

    #[test]
    fn projector_mpo_onto_ghz_fixes_ghz() {
        // |GHZ><GHZ| as an MPO from the state's own tensors.
        let ghz = Mps::ghz(4).unwrap();
        let sites: Vec<DenseTensor> = ghz
            .sites()
            .iter()
            .map(|a| {
                // (l,i,r) x conj (l',i',r') -> ((l,l'), i, i', (r,r')).
                let t = contract(a, &[], &a.conj(), &[]).unwrap(); // (l,i,r,l',i',r')
                let t = t.permute(&[0, 3, 1, 4, 2, 5]).unwrap();
                let (l, lp, i, ip, r, rp) = (
                    t.shape()[0],
                    t.shape()[1],
                    t.shape()[2],
                    t.shape()[3],
                    t.shape()[4],
                    t.shape()[5],
                );
                t.with_shape(&[l * lp, i, ip, r * rp]).unwrap()
            })
            .collect();
        let proj = Mpo::from_sites(sites).unwrap();
        let (out, _) = apply_mpo(&proj, &ghz, &TruncationPolicy::unlimited()).unwrap();
        assert!((fidelity2(&out, &ghz).unwrap() - 1.0).abs() < 1e-10);
        // And on an orthogonal state it annihilates (norm ~ overlap).
        let w = Mps::w_state(4).unwrap();
        let (pw, _) = apply_mpo(&proj, &w, &TruncationPolicy::unlimited()).unwrap();
        assert!(pw.norm() < 1e-10);
    }

    #[test]
    fn expectation_examples() {
        // Energy of |0..0> under Z-field h=1 is n.
        let n = 5;
        let s = Mps::basis_state(&vec![0; n]).unwrap();
        let o = build_mpo(&OperatorSpec::LocalField { h: vec![1.0; n], axis: Axis::Z }).unwrap();
        let e = expectation(&s, &o).unwrap();
        assert!((e.re - n as f64).abs() < 1e-10 && e.im.abs() < 1e-12);

        // XXZ energy of the Néel state, n=4, delta=1: only ZZ contributes, -3.
        let neel = Mps::basis_state(&[0, 1, 0, 1]).unwrap();
        let xxz = build_mpo(&OperatorSpec::Xxz { n: 4, delta: 1.0 }).unwrap();
        let e = expectation(&neel, &xxz).unwrap();
        let dense = dense_xxz(4, 1.0);
        let v = neel.to_vector();
        let hv = contract(&dense, &[1], &v, &[0]).unwrap();
        let oracle = contract(&v.conj(), &[0], &hv, &[0]).unwrap().data()[0];
        assert!((e - oracle).norm() < 1e-10);
        assert!((e.re + 3.0).abs() < 1e-10);

        // GHZ under the ZZ-chain: n-1.
        let n = 5;
        let ghz = Mps::ghz(n).unwrap();
        let mut terms = Vec::new();
        for j in 0..n - 1 {
            let mut p = PauliString::identity(n);
            p.set_axis(j, PauliAxis::Z);
            p.set_axis(j + 1, PauliAxis::Z);
            terms.push((1.0, p));
        }
        let zz = build_mpo(&OperatorSpec::PauliSum { terms }).unwrap();
        let e = expectation(&ghz, &zz).unwrap();
        assert!((e.re - (n as f64 - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn apply_then_identity_expectation_consistency() {
        // <psi|O†O|psi> computed two ways.
        let s = Mps::random(4, 2, 3, 71).unwrap();
        let o = build_mpo(&OperatorSpec::Xxz { n: 4, delta: 0.3 }).unwrap();
        let (os, _) = apply_mpo(&o, &s, &TruncationPolicy::unlimited()).unwrap();
        let lhs = overlap(&os, &os).unwrap().re;
        let dense = o.to_dense();
        let v = s.to_vector();
        let hv = contract(&dense, &[1], &v, &[0]).unwrap();
        let rhs = contract(&hv.conj(), &[0], &hv, &[0]).unwrap().data()[0].re;
        assert!((lhs - rhs).abs() < 1e-8 * rhs.abs().max(1.0));
    }

    #[test]
    fn bond_terms_reconstruct_hamiltonians() {
        // Sum of bond terms equals the full dense Hamiltonian.
        let id = DenseTensor::identity_matrix(2);
        for spec in [
            OperatorSpec::Xxz { n: 4, delta: 0.9 },
            OperatorSpec::LocalField { h: vec![0.2, -0.4, 0.6, 1.0], axis: Axis::Z },
            OperatorSpec::tfi(4, 1.0, 0.7),
        ] {
            let n = spec.sites();
            let bonds = spec.bond_terms().unwrap();
            let mut acc = DenseTensor::zeros(&[1 << n, 1 << n]);
            for (b, h2) in bonds.iter().enumerate() {
                let mut ops: Vec<DenseTensor> = Vec::new();
                for k in 0..n {
                    if k == b {
                        ops.push(h2.clone());
                    } else if k != b + 1 {
                        ops.push(id.clone());
                    }
                }
                acc = acc.add(&kron_chain(&ops)).unwrap();
            }
            let full = build_mpo(&spec).unwrap().to_dense();
            assert!(acc.max_abs_diff(&full) < 1e-10);
        }
        // Long-range refuses.
        assert!(OperatorSpec::LongRange {
            n: 4,
            weights: vec![1.0],
            decays: vec![0.5],
            op: PauliAxis::Z.matrix()
        }
        .bond_terms()
        .is_err());
    }

    #[test]
    fn builders_match_kron_up_to_n6() {
        for n in 2..=6usize {
            let h: Vec<f64> = (0..n).map(|j| 0.3 * j as f64 - 0.5).collect();
            let f = build_mpo(&OperatorSpec::LocalField { h: h.clone(), axis: Axis::Z }).unwrap();
            assert!(
                f.to_dense().max_abs_diff(&dense_local_sum(n, &h, &PauliAxis::Z.matrix()))
                    < 1e-10
            );
            let x = build_mpo(&OperatorSpec::Xxz { n, delta: 0.8 }).unwrap();
            assert!(x.to_dense().max_abs_diff(&dense_xxz(n, 0.8)) < 1e-10);
        }
    }
}
