//! Stability certificates for discrete-time switched linear systems
//! `x(k+1) = A_σ(k) x(k)` whose switching respects a ranged dwell time.
//!
//! The crate enumerates L-switching-cycles, builds the clock-dependent and
//! product-form LMI conditions over them, decides strict feasibility with a
//! barrier solver, and checks every certificate independently of the solver.
//! Brute-force spectral radius oracles provide instability witnesses.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod cycles;
pub mod error;
pub mod lmi;
pub mod matrix;
pub mod oracle;
pub mod report;
pub mod solver;
pub mod system;

pub use cycles::{enumerate_cycles, transition_matrix, Condition, CycleFamily, CycleSpec};
pub use error::{Error, Result};
pub use matrix::{mat_pow, max_sym_eigenvalue, spectral_radius, Matrix, SymMatrix};
pub use solver::{solve_feasibility, FeasibilityResult, SolverOptions, Status};
pub use system::{simulate, Dwell, SwitchedSystem, SwitchingSignal, Trajectory};
