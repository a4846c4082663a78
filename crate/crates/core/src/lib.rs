//! Simulation and feasibility analysis for exact, deterministic remote state
//! preparation (RSP).
//!
//! Alice knows a pure state `|φ⟩` on `C^d` and shares a maximally entangled
//! pair with Bob. She performs a POVM, sends one of `n` messages, and Bob
//! applies the matching unitary `u_m`. Such a protocol exists for `|φ⟩` iff
//!
//! ```text
//! Σ_m p_m(φ) u_m† |φ⟩⟨φ| u_m = I/d
//! ```
//!
//! has a solution on the probability simplex. The modules are:
//!
//! - [`qmath`]: dense complex linear algebra, states, partial trace, entropy,
//!   Haar sampling.
//! - [`protocol`]: POVM construction, measurement, Bob's correction and the
//!   clock-and-shift family.
//! - [`rsp_eq`]: residuals, the simplex feasibility solver, scans and the
//!   oblivious-case `X` matrix bounds.
//! - [`bloch`]: the qubit reduction `Σ_m p_m R_m χ = 0`, canonical forms,
//!   the three-message impossibility and the equatorial two-message protocol.
//! - [`io`]: JSON formats shared with the command line.

pub mod bloch;
pub mod error;
pub mod io;
pub mod protocol;
pub mod qmath;
pub mod rsp_eq;
pub mod simplex;

pub use error::{Error, Result};
