//! Exact computation of spaces of vector-valued modular forms for congruence
//! arithmetic types, using products of Eisenstein series.
//!
//! The crate is organised bottom-up:
//! - [`cyclotomic`]: exact arithmetic in Q(zeta_L)
//! - [`modgroup`]: SL2(Z) matrices, words in S and T, coset tables
//! - [`characters`]: Dirichlet characters
//! - [`artypes`]: arithmetic types and their evaluation
//! - [`fourier`]: truncated Puiseux series, deflation and inflation
//! - [`eisenstein`]: normalised Eisenstein series expansions
//! - [`invariants`]: invariant vectors, generic and structured
//! - [`engine`]: the basis computation and its numeric certification

pub mod arith;
pub mod artypes;
pub mod characters;
pub mod cyclotomic;
pub mod eisenstein;
pub mod engine;
pub mod fourier;
pub mod invariants;
pub mod linalg;
pub mod modgroup;
pub mod typespec;

pub use cyclotomic::Cyclotomic;
pub use modgroup::SL2;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("matrix {0} is not in the required subgroup")]
    NotInSubgroup(String),
    #[error("level mismatch: {0}")]
    Level(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Number of worker threads requested through `VVMF_THREADS`, if set.
pub fn thread_cap() -> Option<usize> {
    std::env::var("VVMF_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}
