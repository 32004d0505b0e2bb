//! Low-lying spectra and minimum gaps of adiabatic Hamiltonians whose
//! potential is a sum of Hamming-symmetric wells on `n` qubits.
//!
//! The Hamiltonian is
//!
//! ```text
//! H(s) = -a(s)/n * sum_j X_j + sum_k b_k(s) V_k(d(x, c_k))
//! ```
//!
//! where `d(x, c_k)` is the Hamming distance from the well centre `c_k`.
//! Three solver families are provided:
//!
//! * [`exact`]: symmetry-reduced exact diagonalization for up to three wells,
//!   plus a full `2^n` brute-force oracle for small `n`.
//! * [`tb`]: a tight-binding approximation over isolated-well bound states
//!   for any number of wells, solved with the Fix-Heiberger reduction in
//!   [`geigen`].
//! * [`cli`]: s-grid sweeps and the reference experiments, emitting CSV.
//!
//! All numerical code is generic over [`Real`]; the aliases below fix the
//! scalar to `f64`, which is what the command-line tool uses.

// Comparisons are negated on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod exact;
pub mod geigen;
pub mod model;
pub mod scalar;
pub mod symmetry;
pub mod tb;

pub use scalar::Real;

pub use model::{BitString, ScheduleTag};

/// Scalar used by the concrete aliases.
pub type Scalar = f64;

pub type PotentialProfile = model::PotentialProfile<Scalar>;
pub type WellSpec = model::WellSpec<Scalar>;
pub type ProblemInstance = model::ProblemInstance<Scalar>;
pub type RunConfig = model::RunConfig<Scalar>;
pub type EigenResult = exact::EigenResult<Scalar>;
pub type SectorBlock = exact::SectorBlock<Scalar>;
pub type BoundState = tb::BoundState<Scalar>;
pub type TbSystem = tb::TbSystem<Scalar>;
pub type TbDiagnostics = tb::TbDiagnostics<Scalar>;
pub type PencilResult = geigen::PencilResult<Scalar>;
