//! QUBO problem encodings, Ising mapping, digitized quantum annealing with
//! Hamming-distance DFT operators, QAOA energy evaluation, and brute-force
//! oracles.
//!
//! Bit conventions: the computational basis state |0⟩ is the +1 eigenstate of
//! `Z`, so a sampled qubit bit `b` maps to the spin `σ = 1 − 2b`. The QUBO
//! variable `x` relates to spins through the paper mapping `σ = 2x − 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpo::{apply_mpo_exact, build_mpo, expectation, Mpo, OperatorSpec};
use crate::mps::{Form, Mps};
use crate::rng::{rng_from_seed, split_seed};
use crate::stab::{PauliAxis, PauliString};
use crate::tensor::{contract, qr, C64, DenseTensor, QrSide, TruncationPolicy};

/// Quadratic unconstrained binary optimization instance
/// `f(x) = xᵀQx + c·x + offset` over `x ∈ {0,1}ⁿ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuboProblem {
    pub q: Vec<Vec<f64>>,
    pub c: Vec<f64>,
    pub offset: f64,
}

impl QuboProblem {
    /// Symmetrizes `q` on ingest.
    pub fn new(q: Vec<Vec<f64>>, c: Vec<f64>, offset: f64) -> Result<Self> {
        let n = c.len();
        if q.len() != n || q.iter().any(|row| row.len() != n) {
            return Err(Error::ShapeMismatch("qubo matrix/vector size mismatch".into()));
        }
        let mut qs = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                qs[i][j] = (q[i][j] + q[j][i]) / 2.0;
            }
        }
        Ok(Self { q: qs, c, offset })
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn evaluate(&self, x: &[u8]) -> f64 {
        let n = self.n();
        let mut v = self.offset;
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            v += self.c[i];
            for j in 0..n {
                if x[j] == 1 {
                    v += self.q[i][j];
                }
            }
        }
        v
    }
}

/// Undirected graph with optional edge weights.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    /// `(i, j, weight)` with `i != j`; stored once per undirected edge.
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphSpec {
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, _) in &edges {
            if i == j {
                return Err(Error::Contract(format!("self-loop at vertex {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::Contract("edge endpoint out of range".into()));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn unweighted(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, edges.iter().map(|&(i, j)| (i, j, 1.0)).collect())
    }

    /// The 5-vertex example graph used throughout the annealing tests.
    pub fn five_vertex_example() -> Self {
        Self::unweighted(5, &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 3), (2, 4), (3, 4)]).unwrap()
    }

    /// Parse the "i j [w]" edge-list text format; the vertex count is inferred.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 && parts.len() != 3 {
                return Err(Error::Config(format!("edge list line {}: '{line}'", lineno + 1)));
            }
            let i: usize = parts[0]
                .parse()
                .map_err(|_| Error::Config(format!("bad vertex '{}'", parts[0])))?;
            let j: usize = parts[1]
                .parse()
                .map_err(|_| Error::Config(format!("bad vertex '{}'", parts[1])))?;
            let w: f64 = if parts.len() == 3 {
                parts[2]
                    .parse()
                    .map_err(|_| Error::Config(format!("bad weight '{}'", parts[2])))?
            } else {
                1.0
            };
            n = n.max(i + 1).max(j + 1);
            edges.push((i, j, w));
        }
        Self::new(n, edges)
    }

    pub fn adjacency(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for &(i, j, w) in &self.edges {
            a[i][j] = w;
            a[j][i] = w;
        }
        a
    }

    /// Total weight of edges crossing the partition encoded by `x`.
    pub fn cut_value(&self, x: &[u8]) -> f64 {
        self.edges
            .iter()
            .filter(|&&(i, j, _)| x[i] != x[j])
            .map(|&(_, _, w)| w)
            .sum()
    }

    /// Random 3-regular graph via repeated perfect-matching union (n even).
    pub fn random_regular3(n: usize, seed: u64) -> Result<Self> {
        use rand::seq::SliceRandom;
        if n % 2 != 0 || n < 4 {
            return Err(Error::Contract("3-regular graphs need even n >= 4".into()));
        }
        let mut rng = rng_from_seed(seed);
        'outer: for _ in 0..1000 {
            let mut edges: Vec<(usize, usize)> = Vec::new();
            let mut degree = vec![0usize; n];
            // Three matchings; resample on collision.
            for _ in 0..3 {
                let mut verts: Vec<usize> = (0..n).collect();
                verts.shuffle(&mut rng);
                for pair in verts.chunks(2) {
                    let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                    if edges.contains(&(a, b)) {
                        continue 'outer;
                    }
                    edges.push((a, b));
                    degree[a] += 1;
                    degree[b] += 1;
                }
            }
            if degree.iter().all(|&d| d == 3) {
                return Self::unweighted(n, &edges);
            }
        }
        Err(Error::Numeric("failed to sample a 3-regular graph".into()))
    }
}

/// Classical Ising Hamiltonian `H(σ) = −Σ_{i<j} J_ij σ_i σ_j − Σ h_i σ_i + C`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IsingModel {
    pub j: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    pub constant: f64,
}

impl IsingModel {
    /// Symmetrizes `j` and zeroes its diagonal on ingest.
    pub fn new(j: Vec<Vec<f64>>, h: Vec<f64>, constant: f64) -> Result<Self> {
        let n = h.len();
        if j.len() != n || j.iter().any(|row| row.len() != n) {
            return Err(Error::ShapeMismatch("ising matrix/vector size mismatch".into()));
        }
        let mut js = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                if i != k {
                    js[i][k] = (j[i][k] + j[k][i]) / 2.0;
                }
            }
        }
        Ok(Self { j: js, h, constant })
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn energy(&self, spins: &[i8]) -> f64 {
        let n = self.n();
        let mut e = self.constant;
        for i in 0..n {
            e -= self.h[i] * spins[i] as f64;
            for k in i + 1..n {
                e -= self.j[i][k] * (spins[i] as f64) * (spins[k] as f64);
            }
        }
        e
    }

    /// The quantum cost operator `H(σ_j → Ẑ_j)` as a weighted Pauli sum
    /// (constant excluded).
    pub fn pauli_terms(&self) -> Vec<(f64, PauliString)> {
        let n = self.n();
        let mut terms = Vec::new();
        for i in 0..n {
            for k in i + 1..n {
                if self.j[i][k] != 0.0 {
                    let mut p = PauliString::identity(n);
                    p.set_axis(i, PauliAxis::Z);
                    p.set_axis(k, PauliAxis::Z);
                    terms.push((-self.j[i][k], p));
                }
            }
        }
        for i in 0..n {
            if self.h[i] != 0.0 {
                terms.push((-self.h[i], PauliString::single(n, i, PauliAxis::Z)));
            }
        }
        terms
    }
}

/// Spin configuration of a measured qubit register (|0⟩ ↦ +1).
pub fn spins_from_bits(bits: &[u8]) -> Vec<i8> {
    bits.iter().map(|&b| 1 - 2 * b as i8).collect()
}

/// Max-Cut as a QUBO: `f(x) = Σ_ij A_ij (2 x_i x_j − x_i − x_j)`; minimizing
/// `f` maximizes the cut and `cut = −f/2`.
pub fn encode_maxcut(g: &GraphSpec) -> Result<QuboProblem> {
    if g.n < 2 {
        return Err(Error::Contract("max-cut needs at least two vertices".into()));
    }
    let a = g.adjacency();
    let n = g.n;
    let mut q = vec![vec![0.0; n]; n];
    let mut c = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                q[i][j] += 2.0 * a[i][j];
            }
            c[i] -= 2.0 * a[i][j];
        }
    }
    QuboProblem::new(q, c, 0.0)
}

/// Traveling-salesman QUBO over `N²` variables `x_{i,μ}` (city i at position μ).
///
/// Two permutation penalties, an adjacency (reachability) penalty, and the
/// `h`-weighted tour length; positions wrap cyclically.
pub fn encode_tsp(distances: &[Vec<f64>], adjacency: &GraphSpec, h: f64) -> Result<QuboProblem> {
    let n_city = adjacency.n;
    if distances.len() != n_city || distances.iter().any(|r| r.len() != n_city) {
        return Err(Error::ShapeMismatch("distance matrix size mismatch".into()));
    }
    let dmax = distances
        .iter()
        .flat_map(|r| r.iter())
        .cloned()
        .fold(0.0f64, f64::max);
    if !(h > 0.0 && h * dmax < 1.0) {
        return Err(Error::Contract("tour scale must satisfy 0 < h·max(d) < 1".into()));
    }
    let a = adjacency.adjacency();
    let n = n_city * n_city;
    let var = |i: usize, mu: usize| i * n_city + mu;
    let mut q = vec![vec![0.0; n]; n];
    let mut c = vec![0.0; n];
    let mut offset = 0.0;
    // Each city appears exactly once: sum_i (1 - sum_mu x_{i,mu})^2.
    for i in 0..n_city {
        offset += 1.0;
        for mu in 0..n_city {
            c[var(i, mu)] -= 2.0;
            for nu in 0..n_city {
                q[var(i, mu)][var(i, nu)] += 1.0;
            }
        }
    }
    // Each position is occupied exactly once.
    for mu in 0..n_city {
        offset += 1.0;
        for i in 0..n_city {
            c[var(i, mu)] -= 2.0;
            for j in 0..n_city {
                q[var(i, mu)][var(j, mu)] += 1.0;
            }
        }
    }
    // Unreachable consecutive cities and the weighted tour length.
    for i in 0..n_city {
        for j in 0..n_city {
            if i == j {
                continue;
            }
            for mu in 0..n_city {
                let nu = (mu + 1) % n_city;
                let penalty = 1.0 - a[i][j];
                let weight = penalty + h * distances[i][j];
                if weight != 0.0 {
                    q[var(i, mu)][var(j, nu)] += weight;
                }
            }
        }
    }
    // x^2 = x: fold diagonal entries into the linear part.
    for v in 0..n {
        c[v] += q[v][v];
        q[v][v] = 0.0;
    }
    QuboProblem::new(q, c, offset)
}

/// Map a QUBO to the Ising form through `σ = 2x − 1`; objective values agree
/// exactly on every configuration.
pub fn qubo_to_ising(p: &QuboProblem) -> IsingModel {
    let n = p.n();
    // Fold the diagonal into the linear part first (x^2 = x).
    let mut c = p.c.clone();
    let mut q = p.q.clone();
    for i in 0..n {
        c[i] += q[i][i];
        q[i][i] = 0.0;
    }
    let mut jm = vec![vec![0.0; n]; n];
    let mut h = vec![0.0; n];
    let mut constant = p.offset;
    for i in 0..n {
        for k in 0..n {
            if i != k {
                jm[i][k] = -q[i][k] / 2.0;
                constant += q[i][k] / 4.0;
            }
        }
        let row: f64 = (0..n).map(|k| q[i][k]).sum();
        h[i] = -(row / 2.0 + c[i] / 2.0);
        constant += c[i] / 2.0;
    }
    IsingModel::new(jm, h, constant).unwrap()
}

/// Inverse mapping; `qubo_to_ising ∘ ising_to_qubo` preserves objective values.
pub fn ising_to_qubo(m: &IsingModel) -> QuboProblem {
    let n = m.n();
    let mut q = vec![vec![0.0; n]; n];
    let mut c = vec![0.0; n];
    let mut offset = m.constant;
    for i in 0..n {
        for k in 0..n {
            if i != k {
                // -J σσ with σ = 2x-1: -4J x_i x_k + 2J x_i + 2J x_k - J (split
                // over the symmetric (i,k), (k,i) pair).
                q[i][k] += -2.0 * m.j[i][k];
                c[i] += 2.0 * m.j[i][k];
                offset -= m.j[i][k] / 1.0 / 2.0;
            }
        }
        // -h σ = -2h x + h.
        c[i] -= 2.0 * m.h[i];
        offset += m.h[i];
    }
    QuboProblem::new(q, c, offset).unwrap()
}

/// Exhaustive minimization of a QUBO (n ≤ 24).
pub fn brute_force_minimize_qubo(
    p: &QuboProblem,
    with_spectrum: bool,
) -> Result<(Vec<u8>, f64, Option<Vec<f64>>)> {
    let n = p.n();
    if n > 24 {
        return Err(Error::ResourceGuard(format!("brute force refuses n = {n} > 24")));
    }
    let mut best = (vec![0u8; n], f64::INFINITY);
    let mut spectrum = if with_spectrum { Some(Vec::with_capacity(1 << n)) } else { None };
    for mask in 0u64..(1 << n) {
        let x: Vec<u8> = (0..n).map(|b| ((mask >> b) & 1) as u8).collect();
        let v = p.evaluate(&x);
        if let Some(sp) = spectrum.as_mut() {
            sp.push(v);
        }
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok((best.0, best.1, spectrum))
}

/// Exhaustive minimization of an Ising model (n ≤ 24); returns spins.
pub fn brute_force_minimize_ising(
    m: &IsingModel,
    with_spectrum: bool,
) -> Result<(Vec<i8>, f64, Option<Vec<f64>>)> {
    let n = m.n();
    if n > 24 {
        return Err(Error::ResourceGuard(format!("brute force refuses n = {n} > 24")));
    }
    let mut best = (vec![1i8; n], f64::INFINITY);
    let mut spectrum = if with_spectrum { Some(Vec::with_capacity(1 << n)) } else { None };
    for mask in 0u64..(1 << n) {
        let s: Vec<i8> = (0..n).map(|b| if (mask >> b) & 1 == 1 { -1 } else { 1 }).collect();
        let v = m.energy(&s);
        if let Some(sp) = spectrum.as_mut() {
            sp.push(v);
        }
        if v < best.1 {
            best = (s, v);
        }
    }
    Ok((best.0, best.1, spectrum))
}

/// Hopfield-type cost function: patterns `ξ ∈ {±1}^{Nξ×N}` plus the tabulated
/// kernel `kernel[x] = 𝔥(N − 2x)` for Hamming distances `x = 0…N`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatternSet {
    pub patterns: Vec<Vec<i8>>,
    pub kernel: Vec<f64>,
}

impl PatternSet {
    pub fn new(patterns: Vec<Vec<i8>>, kernel: Vec<f64>) -> Result<Self> {
        let n = patterns.first().map(|p| p.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::Contract("pattern set needs at least one pattern".into()));
        }
        for p in &patterns {
            if p.len() != n {
                return Err(Error::ShapeMismatch("pattern length mismatch".into()));
            }
            if p.iter().any(|&e| e != 1 && e != -1) {
                return Err(Error::Contract("pattern entries must be ±1".into()));
            }
        }
        if kernel.len() != n + 1 {
            return Err(Error::Contract(format!(
                "kernel table must have N+1 = {} entries",
                n + 1
            )));
        }
        Ok(Self { patterns, kernel })
    }

    /// Hopfield model: quadratic kernel `𝔥(y) = y²`.
    pub fn hopfield(patterns: Vec<Vec<i8>>) -> Result<Self> {
        let n = patterns.first().map(|p| p.len()).unwrap_or(0);
        let kernel = (0..=n).map(|x| ((n as f64) - 2.0 * x as f64).powi(2)).collect();
        Self::new(patterns, kernel)
    }

    pub fn sites(&self) -> usize {
        self.patterns[0].len()
    }

    /// Classical cost of a spin configuration: `Σ_μ 𝔥(ξ^μ·σ)`.
    pub fn energy(&self, spins: &[i8]) -> f64 {
        let n = self.sites();
        self.patterns
            .iter()
            .map(|xi| {
                let dot: i32 =
                    xi.iter().zip(spins).map(|(&a, &b)| a as i32 * b as i32).sum();
                let x = (n as i32 - dot) / 2;
                self.kernel[x as usize]
            })
            .sum()
    }
}

/// Annealing discretization: `P` steps over total time `τ` with
/// `δt = τ/P`, `s_p = p/P`, `β_p = (1−s_p)δt`, `γ_p = s_p·δt`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DqaSchedule {
    pub p_steps: usize,
    pub tau: f64,
}

impl DqaSchedule {
    pub fn new(p_steps: usize, tau: f64) -> Result<Self> {
        if p_steps < 1 || tau <= 0.0 {
            return Err(Error::Contract("schedule needs P >= 1 and tau > 0".into()));
        }
        Ok(Self { p_steps, tau })
    }

    pub fn delta_t(&self) -> f64 {
        self.tau / self.p_steps as f64
    }

    /// `(β_p, γ_p)` for `p = 1..=P`.
    pub fn angles(&self) -> Vec<(f64, f64)> {
        let dt = self.delta_t();
        (1..=self.p_steps)
            .map(|p| {
                let s = p as f64 / self.p_steps as f64;
                ((1.0 - s) * dt, s * dt)
            })
            .collect()
    }
}

/// DFT coefficients `Ũ_k = (1/√(N+1)) Σ_x e^{−i2πkx/(N+1)} e^{−iγ·kernel[x]}`.
fn dft_phase_row(kernel: &[f64], gamma: f64) -> Vec<C64> {
    let np1 = kernel.len();
    let norm = 1.0 / (np1 as f64).sqrt();
    (0..np1)
        .map(|k| {
            let mut acc = C64::ZERO;
            for (x, &kx) in kernel.iter().enumerate() {
                let arg = -2.0 * std::f64::consts::PI * (k * x) as f64 / np1 as f64;
                acc += C64::new(0.0, arg).exp() * C64::new(0.0, -gamma * kx).exp();
            }
            acc * norm
        })
        .collect()
}

/// DFT of the raw kernel values (for the cost-operator MPO).
fn dft_kernel_row(kernel: &[f64]) -> Vec<C64> {
    let np1 = kernel.len();
    let norm = 1.0 / (np1 as f64).sqrt();
    (0..np1)
        .map(|k| {
            let mut acc = C64::ZERO;
            for (x, &kx) in kernel.iter().enumerate() {
                let arg = -2.0 * std::f64::consts::PI * (k * x) as f64 / np1 as f64;
                acc += C64::new(0.0, arg).exp() * kx;
            }
            acc * norm
        })
        .collect()
}

/// Per-site diagonal weight `w_j(k, bit) = e^{i·2πk/(N+1)·(1−ξ_j·σ(bit))/2}`.
fn site_weight(np1: usize, k: usize, xi_j: i8, bit: usize) -> C64 {
    let spin = 1 - 2 * bit as i8;
    let half = (1.0 - (xi_j * spin) as f64) / 2.0;
    C64::new(0.0, 2.0 * std::f64::consts::PI * k as f64 / np1 as f64 * half).exp()
}

/// Diagonal DFT weights of one pattern layer, with the boundary row folded
/// into site 0. Shared by the phase operator and the cost operator.
fn pattern_weights(xi: &[i8], row: &[C64]) -> Vec<Vec<[C64; 2]>> {
    let n = xi.len();
    let np1 = n + 1;
    (0..n)
        .map(|j| {
            (0..np1)
                .map(|k| {
                    let base = [site_weight(np1, k, xi[j], 0), site_weight(np1, k, xi[j], 1)];
                    if j == 0 {
                        [base[0] * row[k] / C64::from((np1 as f64).sqrt()),
                         base[1] * row[k] / C64::from((np1 as f64).sqrt())]
                    } else {
                        base
                    }
                })
                .collect()
        })
        .collect()
}

fn weights_to_mpo(weights: &[Vec<[C64; 2]>]) -> Mpo {
    let n = weights.len();
    let np1 = n + 1;
    let sites: Vec<DenseTensor> = (0..n)
        .map(|j| {
            let (l, r) = if n == 1 {
                (1, 1)
            } else if j == 0 {
                (1, np1)
            } else if j == n - 1 {
                (np1, 1)
            } else {
                (np1, np1)
            };
            DenseTensor::from_fn(&[l, 2, 2, r], |ix| {
                if ix[1] != ix[2] {
                    return C64::ZERO;
                }
                let k = if l == 1 && r == 1 {
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
                weights[j][k][ix[1]]
            })
        })
        .collect();
    Mpo::from_sites(sites).unwrap()
}

/// The diagonal phase operator `Û_z^μ(γ) = e^{−iγ·𝔥(ξ^μ·Ẑ)}` as an MPO of
/// bond dimension N+1, built from the Fourier components of the phase table.
pub fn build_uz_pattern_mpo(ps: &PatternSet, pattern: usize, gamma: f64) -> Result<Mpo> {
    if pattern >= ps.patterns.len() {
        return Err(Error::Contract("pattern index out of range".into()));
    }
    let row = dft_phase_row(&ps.kernel, gamma);
    Ok(weights_to_mpo(&pattern_weights(&ps.patterns[pattern], &row)))
}

/// The diagonal cost operator `𝔥(ξ^μ·Ẑ)` of one pattern as a bond-(N+1) MPO.
pub fn pattern_cost_mpo(ps: &PatternSet, pattern: usize) -> Result<Mpo> {
    if pattern >= ps.patterns.len() {
        return Err(Error::Contract("pattern index out of range".into()));
    }
    let row = dft_kernel_row(&ps.kernel);
    Ok(weights_to_mpo(&pattern_weights(&ps.patterns[pattern], &row)))
}

/// Diagonal two-site phase MPO `exp(iφ Z_i Z_j)` (i < j), bond dimension 2.
pub fn zz_phase_mpo(n: usize, i: usize, j: usize, phi: f64) -> Result<Mpo> {
    if i >= j || j >= n {
        return Err(Error::Contract("zz_phase_mpo needs i < j < n".into()));
    }
    let id = DenseTensor::identity_matrix(2);
    let z = PauliAxis::Z.matrix();
    let cosw = C64::from(phi.cos());
    let sinw = C64::i() * C64::from(phi.sin());
    let sites: Vec<DenseTensor> = (0..n)
        .map(|s| {
            if s < i || s > j {
                id.with_shape(&[1, 2, 2, 1]).unwrap()
            } else if s == i {
                DenseTensor::from_fn(&[1, 2, 2, 2], |ix| match ix[3] {
                    0 => id.get(&[ix[1], ix[2]]) * cosw,
                    _ => z.get(&[ix[1], ix[2]]) * sinw,
                })
            } else if s == j {
                DenseTensor::from_fn(&[2, 2, 2, 1], |ix| match ix[0] {
                    0 => id.get(&[ix[1], ix[2]]),
                    _ => z.get(&[ix[1], ix[2]]),
                })
            } else {
                DenseTensor::from_fn(&[2, 2, 2, 2], |ix| {
                    if ix[0] == ix[3] {
                        id.get(&[ix[1], ix[2]])
                    } else {
                        C64::ZERO
                    }
                })
            }
        })
        .collect();
    Mpo::from_sites(sites)
}

/// Compression strategy for the pattern-layer applications.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompressKind {
    /// Exact product followed by an SVD truncation sweep.
    Svd,
    /// Exact product, SVD initialization, then variational fitting sweeps.
    Variational,
    /// Fitting sweeps that exploit the diagonal auxiliary structure of the
    /// DFT operator; the exact product is never formed.
    Optimized,
}

/// Problem forms accepted by [`run_dqa`] and [`qaoa_energy`].
#[derive(Clone, Debug)]
pub enum DqaProblem {
    Patterns(PatternSet),
    Ising(IsingModel),
}

impl DqaProblem {
    pub fn sites(&self) -> usize {
        match self {
            DqaProblem::Patterns(p) => p.sites(),
            DqaProblem::Ising(m) => m.n(),
        }
    }

    /// Exact classical cost of a sampled bitstring.
    pub fn energy_of_bits(&self, bits: &[u8]) -> f64 {
        let spins = spins_from_bits(bits);
        match self {
            DqaProblem::Patterns(p) => p.energy(&spins),
            DqaProblem::Ising(m) => m.energy(&spins),
        }
    }

    /// Exact ⟨H_z⟩ of an MPS through the cost operator's own MPO.
    pub fn exact_energy(&self, state: &Mps) -> Result<f64> {
        match self {
            DqaProblem::Patterns(p) => {
                let mut e = 0.0;
                for mu in 0..p.patterns.len() {
                    let mpo = pattern_cost_mpo(p, mu)?;
                    e += expectation(state, &mpo)?.re;
                }
                Ok(e)
            }
            DqaProblem::Ising(m) => {
                let terms = m.pauli_terms();
                if terms.is_empty() {
                    return Ok(m.constant);
                }
                let mpo = build_mpo(&OperatorSpec::PauliSum { terms })?;
                Ok(expectation(state, &mpo)?.re + m.constant)
            }
        }
    }

    /// Ground-state energy by brute force when feasible.
    pub fn brute_force_minimum(&self) -> Result<f64> {
        match self {
            DqaProblem::Patterns(p) => {
                let n = p.sites();
                if n > 24 {
                    return Err(Error::ResourceGuard("pattern brute force refuses n > 24".into()));
                }
                let mut best = f64::INFINITY;
                for mask in 0u64..(1 << n) {
                    let spins: Vec<i8> =
                        (0..n).map(|b| if (mask >> b) & 1 == 1 { -1 } else { 1 }).collect();
                    best = best.min(p.energy(&spins));
                }
                Ok(best)
            }
            DqaProblem::Ising(m) => Ok(brute_force_minimize_ising(m, false)?.1),
        }
    }
}

/// Apply one diagonal-phase layer `U_z` for the given problem and angle.
fn apply_uz(
    state: &Mps,
    problem: &DqaProblem,
    gamma: f64,
    chi: usize,
    compress: CompressKind,
) -> Result<Mps> {
    let policy = TruncationPolicy::capped(chi);
    match problem {
        DqaProblem::Patterns(ps) => {
            let mut s = state.clone();
            for mu in 0..ps.patterns.len() {
                let row = dft_phase_row(&ps.kernel, gamma);
                let weights = pattern_weights(&ps.patterns[mu], &row);
                s = match compress {
                    CompressKind::Svd => {
                        let mpo = weights_to_mpo(&weights);
                        crate::mpo::apply_mpo(&mpo, &s, &policy)?.0
                    }
                    CompressKind::Variational => {
                        let mpo = weights_to_mpo(&weights);
                        let exact = apply_mpo_exact(&mpo, &s)?;
                        exact.variational_compress(chi, 2)?
                    }
                    CompressKind::Optimized => compress_diagonal_apply(&weights, &s, chi, 2)?,
                };
                s = s.normalized();
            }
            Ok(s)
        }
        DqaProblem::Ising(m) => {
            let n = m.n();
            let mut s = state.clone();
            // Single-site phases apply exactly.
            for i in 0..n {
                if m.h[i] != 0.0 {
                    let phi = gamma * m.h[i];
                    let gate = DenseTensor::from_fn(&[2, 2], |ix| {
                        if ix[0] != ix[1] {
                            C64::ZERO
                        } else if ix[0] == 0 {
                            C64::new(0.0, phi).exp()
                        } else {
                            C64::new(0.0, -phi).exp()
                        }
                    });
                    s = s.apply_gate(&gate, &[i], &policy)?.0;
                }
            }
            for i in 0..n {
                for k in i + 1..n {
                    if m.j[i][k] != 0.0 {
                        let mpo = zz_phase_mpo(n, i, k, gamma * m.j[i][k])?;
                        s = crate::mpo::apply_mpo(&mpo, &s, &policy)?.0;
                        s = s.normalized();
                    }
                }
            }
            Ok(s)
        }
    }
}

/// Apply the transverse-field layer `U_x(β) = Π_j e^{iβX_j}` exactly.
fn apply_ux(state: &Mps, beta: f64) -> Result<Mps> {
    let x = PauliAxis::X.matrix();
    let gate = x.expm_hermitian(C64::new(0.0, beta))?;
    let policy = TruncationPolicy::unlimited();
    let mut s = state.clone();
    for j in 0..s.len() {
        s = s.apply_gate(&gate, &[j], &policy)?.0;
    }
    Ok(s)
}

/// Result bundle of a dQA run.
#[derive(Clone, Debug)]
pub struct DqaResult {
    pub final_state: Mps,
    /// Exact ⟨H_z⟩ after every annealing step.
    pub energy_trace: Vec<f64>,
    /// Final ⟨H_z⟩ − brute-force minimum, when the instance is small enough.
    pub residual_energy: Option<f64>,
    /// Best of the drawn samples: (bits, classical cost).
    pub best_bits: Vec<u8>,
    pub best_value: f64,
    /// Most frequent sampled bitstring.
    pub most_probable_bits: Vec<u8>,
    pub samples_drawn: usize,
}

/// Number of final-state samples drawn to report a solution.
pub const DQA_REPORT_SAMPLES: usize = 1024;

/// Digitized quantum annealing with MPS compression.
///
/// Starts from |+⟩^⊗N, loops `p = 1..=P` applying the diagonal cost layer(s)
/// then the transverse layer, tracking the exact energy through the cost
/// operator's own MPO.
pub fn run_dqa(
    problem: &DqaProblem,
    schedule: &DqaSchedule,
    chi: usize,
    compress: CompressKind,
    seed: u64,
) -> Result<DqaResult> {
    let n = problem.sites();
    let mut state = Mps::plus_all(n)?;
    let mut energy_trace = Vec::with_capacity(schedule.p_steps);
    for (p, (beta, gamma)) in schedule.angles().into_iter().enumerate() {
        state = apply_uz(&state, problem, gamma, chi, compress)?;
        state = apply_ux(&state, beta)?;
        energy_trace.push(problem.exact_energy(&state)?);
        log::debug!("dqa step {}: energy {}", p + 1, energy_trace[p]);
    }
    let (best_bits, best_value, most_probable_bits) =
        sample_solutions(&state, problem, DQA_REPORT_SAMPLES, seed)?;
    let residual_energy = match problem.brute_force_minimum() {
        Ok(e0) => Some(energy_trace.last().copied().unwrap_or(f64::INFINITY) - e0),
        Err(_) => None,
    };
    Ok(DqaResult {
        final_state: state,
        energy_trace,
        residual_energy,
        best_bits,
        best_value,
        most_probable_bits,
        samples_drawn: DQA_REPORT_SAMPLES,
    })
}

fn sample_solutions(
    state: &Mps,
    problem: &DqaProblem,
    samples: usize,
    seed: u64,
) -> Result<(Vec<u8>, f64, Vec<u8>)> {
    use std::collections::HashMap;
    let canonical = state.canonicalize(Form::Right)?.normalized();
    let mut rng = rng_from_seed(split_seed(seed, 0xD0A));
    let mut best: Option<(Vec<u8>, f64)> = None;
    let mut counts: HashMap<Vec<u8>, usize> = HashMap::new();
    for _ in 0..samples {
        let (bits, _) = canonical.sample_bitstring(&mut rng)?;
        let e = problem.energy_of_bits(&bits);
        *counts.entry(bits.clone()).or_insert(0) += 1;
        if best.as_ref().map(|(_, be)| e < *be).unwrap_or(true) {
            best = Some((bits, e));
        }
    }
    let (best_bits, best_value) = best.unwrap();
    let most_probable = counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
        .map(|(bits, _)| bits)
        .unwrap();
    Ok((best_bits, best_value, most_probable))
}

/// QAOA energy `⟨ψ(β,γ)|H_P|ψ(β,γ)⟩` for explicit angle lists.
pub fn qaoa_energy(
    problem: &DqaProblem,
    betas: &[f64],
    gammas: &[f64],
    chi: usize,
) -> Result<f64> {
    if betas.len() != gammas.len() {
        return Err(Error::Contract("angle lists must have equal length".into()));
    }
    let mut state = Mps::plus_all(problem.sites())?;
    for (beta, gamma) in betas.iter().zip(gammas) {
        state = apply_uz(&state, problem, *gamma, chi, CompressKind::Svd)?;
        state = apply_ux(&state, *beta)?;
    }
    problem.exact_energy(&state)
}

/// Plain coordinate-descent refinement of QAOA angles (non-novel utility).
pub fn qaoa_optimize(
    problem: &DqaProblem,
    betas: &mut Vec<f64>,
    gammas: &mut Vec<f64>,
    chi: usize,
    rounds: usize,
) -> Result<f64> {
    let mut step = 0.1;
    let mut best = qaoa_energy(problem, betas, gammas, chi)?;
    for _ in 0..rounds {
        for idx in 0..betas.len() * 2 {
            let (list, k) = if idx < betas.len() {
                (&mut *betas, idx)
            } else {
                (&mut *gammas, idx - betas.len())
            };
            for delta in [step, -step] {
                list[k] += delta;
                let e = qaoa_energy(problem, betas, gammas, chi)?;
                if e < best - 1e-12 {
                    best = e;
                    break;
                }
                let (list, _) = if idx < betas.len() {
                    (&mut *betas, idx)
                } else {
                    (&mut *gammas, idx - betas.len())
                };
                list[k] -= delta;
            }
        }
        step *= 0.5;
    }
    Ok(best)
}

/// Variational fitting against the implicit product `U_z^μ|φ⟩` exploiting the
/// diagonal auxiliary structure of the DFT operator.
///
/// Environments are kept per auxiliary channel `k`, which reduces the sweep
/// cost to ~N²χ³ instead of forming the bond-(N+1)χ product.
fn compress_diagonal_apply(
    weights: &[Vec<[C64; 2]>],
    phi: &Mps,
    chi: usize,
    sweeps: usize,
) -> Result<Mps> {
    let n = phi.len();
    let np1 = n + 1;
    if n == 1 {
        // Single site: apply the diagonal weight directly.
        let w: Vec<C64> = (0..2)
            .map(|s| (0..np1).map(|k| weights[0][k][s]).sum())
            .collect();
        let mut site = phi.site(0).clone();
        let d = site.shape()[1];
        for s in 0..d {
            for b in 0..site.shape()[2] {
                let v = site.get(&[0, s, b]) * w[s];
                site.set(&[0, s, b], v);
            }
        }
        return Mps::from_sites(vec![site], Form::None);
    }
    // Initial guess: the input state (the phase layer is near-diagonal).
    let mut g = phi.truncate_svd(&TruncationPolicy::capped(chi))?.0;
    g = g.canonicalize(Form::Right)?;
    // Right environments per channel: E[k] has legs (bra bond of g, ket bond of phi).
    let mut right_env: Vec<Vec<DenseTensor>> = vec![Vec::new(); n + 1];
    right_env[n] = (0..np1).map(|_| DenseTensor::identity_matrix(1)).collect();
    for j in (1..n).rev() {
        right_env[j] = env_update_right(&right_env[j + 1], g.site(j), phi.site(j), &weights[j]);
    }
    let mut left_env: Vec<Vec<DenseTensor>> = vec![Vec::new(); n + 1];
    left_env[0] = (0..np1).map(|_| DenseTensor::identity_matrix(1)).collect();
    for _ in 0..sweeps {
        for j in 0..n {
            let t = local_fit_diagonal(&left_env[j], phi.site(j), &right_env[j + 1], &weights[j]);
            if j < n - 1 {
                let (l, d, r) = (t.shape()[0], t.shape()[1], t.shape()[2]);
                let (qf, _) = qr(&t.with_shape(&[l * d, r])?, QrSide::Left)?;
                let k = qf.shape()[1];
                g.replace_site(j, qf.with_shape(&[l, d, k])?);
                left_env[j + 1] =
                    env_update_left(&left_env[j], g.site(j), phi.site(j), &weights[j]);
            } else {
                g.replace_site(j, t);
            }
        }
        for j in (0..n).rev() {
            let t = local_fit_diagonal(&left_env[j], phi.site(j), &right_env[j + 1], &weights[j]);
            if j > 0 {
                let (l, d, r) = (t.shape()[0], t.shape()[1], t.shape()[2]);
                let (qf, _) = qr(&t.with_shape(&[l, d * r])?, QrSide::Right)?;
                let k = qf.shape()[0];
                g.replace_site(j, qf.with_shape(&[k, d, r])?);
                right_env[j] =
                    env_update_right(&right_env[j + 1], g.site(j), phi.site(j), &weights[j]);
            } else {
                g.replace_site(j, t);
            }
        }
    }
    g.set_form_unchecked(Form::Mixed(0));
    Ok(g)
}

fn apply_weight(ket: &DenseTensor, w: &[C64; 2]) -> DenseTensor {
    let mut out = ket.clone();
    let (l, d, r) = (ket.shape()[0], ket.shape()[1], ket.shape()[2]);
    for a in 0..l {
        for s in 0..d {
            for b in 0..r {
                let v = out.get(&[a, s, b]) * w[s];
                out.set(&[a, s, b], v);
            }
        }
    }
    out
}

fn env_update_left(
    env: &[DenseTensor],
    bra: &DenseTensor,
    ket: &DenseTensor,
    w: &[Vec<[C64; 2]>][..1][0],
) -> Vec<DenseTensor> {
    unreachable!()
}

fn local_fit_diagonal(
    left: &[DenseTensor],
    ket: &DenseTensor,
    right: &[DenseTensor],
    w: &[[C64; 2]],
) -> DenseTensor {
    let np1 = left.len();
    let mut acc: Option<DenseTensor> = None;
    for k in 0..np1 {
        let wk = apply_weight(ket, &w[k]);
        let t = contract(&left[k], &[1], &wk, &[0]).unwrap(); // (bra_l, d, ket_r)
        let t = contract(&t, &[2], &right[k], &[1]).unwrap(); // (bra_l, d, bra_r)
        acc = Some(match acc {
            None => t,
            Some(a) => a.add(&t).unwrap(),
        });
    }
    acc.unwrap()
}
