//! Entangled strategies for the multilinearity game and numeric realizations
//! of the operator constructions used in its soundness analysis.
//!
//! - [`state`], [`strategy`], [`game`]: shared states, point measurements
//!   and the exact game value, including the diagonal embedding of classical
//!   strategies and symmetrization.
//! - [`consistency`]: families of sub-measurements with multilinear outcomes
//!   and their consistency on a shared state.
//! - [`lines`], [`self_improvement`], [`pasting`]: the operator constructions.
//! - [`lemmas`]: randomized checks of the supporting inequalities.
//!
//! Structural identities are checked at [`linalg::IDENTITY_TOL`] and derived
//! inequalities at [`linalg::INEQUALITY_TOL`].

pub mod consistency;
pub mod error;
pub mod game;
pub mod lemmas;
pub mod linalg;
pub mod lines;
pub mod pasting;
pub mod self_improvement;
pub mod state;
pub mod strategy;

pub use consistency::{cons, cons_inc, inc, SubMeasurementFamily};
pub use error::QuantumError;
pub use game::{game_value_quantum, QuantumGameValue};
pub use linalg::CMatrix;
pub use state::{rho_norm, trace_rho, DensityMatrix, StateVector};
pub use strategy::{embed_classical, symmetrize, QuantumStrategy};
