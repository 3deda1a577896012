//! Simulator for a three-prover interactive proof system for succinct
//! 3-colorability that stays sound against entangled provers.
//!
//! The crate is organised bottom-up:
//! - [`field`]: GF(2^k) arithmetic.
//! - [`poly`]: arithmetic expressions, multilinear extensions, univariate
//!   interpolation.
//! - [`instances`]: desk-scale succinct graphs and their arithmetization.
//! - [`sumcheck`]: the summation test.
//! - [`smallbias`]: the powering ε-biased set and the AND test built on it.
//! - [`protocol`]: the five-test three-prover protocol and its adversaries.
//! - [`mlgame`]: the stand-alone multilinearity game for classical strategies.

pub mod field;
pub mod instances;
pub mod mlgame;
pub mod poly;
pub mod protocol;
pub mod rng;
pub mod smallbias;
pub mod stats;
pub mod sumcheck;

pub use field::{FieldElement, FieldError, FieldSpec, Provenance};
pub use poly::{ArithExpr, MultilinearFn, PolyError, UnivariatePoly};
