//! Microscopic simulator and analytic toolkit for phase metrology of a
//! single quantum emitter coupled to a bosonic dimerized (SSH) chain.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//! lattice  ->  dynamics  ->  metrology
//!    \                          /
//!     `----->  greens  <-------'
//! ```
//!
//! * [`lattice`] assembles the single-excitation Hamiltonian of the
//!   emitter-chain system and exposes band-structure helpers.
//! * [`dynamics`] computes the emitter survival amplitude u(t), either by
//!   full spectral decomposition or by seeded Lanczos tridiagonalization.
//! * [`greens`] carries the closed-form local bath Green's function, the
//!   in-gap pole equation and the bound-state residue.
//! * [`metrology`] converts amplitudes into the phase quantum Fisher
//!   information F(t) = |u(t)|^2 and the operational late-time diagnostics
//!   (late-time average, retention time, useful window).
//! * [`sweep`] drives parameter sweeps and CSV/JSON emission for the
//!   `sshqfi` command-line tool.

pub mod dynamics;
pub mod error;
pub mod greens;
pub mod lattice;
pub mod metrology;
pub mod sweep;

pub use error::{Error, Result};
