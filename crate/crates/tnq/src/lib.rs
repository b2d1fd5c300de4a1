//! Matrix-product-state engine for quantum simulation at desk scale.
//!
//! The crate is organized around a dense complex tensor value ([`tensor::DenseTensor`])
//! and two chain ansätze built on top of it: matrix product states ([`mps::Mps`]) and
//! matrix product operators ([`mpo::Mpo`]). Everything else is algorithms over those
//! values:
//!
//! - [`tebd`] — Trotterized real/imaginary time evolution and brickwork circuits,
//! - [`tdvp`] — tangent-space evolution at fixed or adaptive bond dimension with a
//!   Krylov/Lanczos exponential applier,
//! - [`anneal`] — QUBO encodings, Ising mapping, digitized quantum annealing with
//!   Hamming-distance DFT operators, QAOA energies, and brute-force oracles,
//! - [`open_systems`] — thermal superkets, METTS sampling, Lindblad stepping in the
//!   Pauli basis, and quantum-jump monitored trajectories,
//! - [`stab`] — Pauli strings, tableau simulation, Clifford conjugation,
//! - [`magic`] — stabilizer Rényi entropies (exact, sampled, replica) and stabilizer
//!   group search over MPS,
//! - [`cmps`] — Clifford-enhanced MPS, stabilizer MPOs, and Clifford-dressed TDVP,
//! - [`config`] — the batch runner behind the `tnq` binary.
//!
//! Every runnable capability also ships as an example under `examples/`; see the
//! README for the catalogue.

pub mod error;
pub mod tdvp;
pub mod tebd;
pub mod mpo;
pub mod mps;
pub mod rng;
pub mod stab;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{C64, DenseTensor, FactorizationResult, TruncationPolicy};
