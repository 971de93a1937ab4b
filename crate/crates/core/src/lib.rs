//! Exact machinery for studying the additive constant `t` in SSS_t+.
//!
//! The crate is `no_std` with `alloc`. It covers exact fractions
//! ([`rational`]), the rejection threshold ([`seqstep`]), the periodic
//! construction on which `t < 1` loses FDR control ([`construction`]), a
//! single seeded Monte Carlo trial ([`trial`]), and brute-force ground truth
//! at small sizes ([`oracle`]). Parallel experiment driving, file formats
//! and the command line live in the companion `sssplus-lab` crate.

#![no_std]

extern crate alloc;

pub mod construction;
pub mod oracle;
pub mod rational;
pub mod seqstep;
pub mod trial;

pub use construction::{build_spec, derive_ab, labels, mod_inverse, sample_trial, ConstructionSpec};
pub use rational::{compare, parse_rational, Rational, RationalError};
pub use seqstep::{
    canonical_t, fdp, reject_threshold, scan_counts, CompetitionSequence, ProcedureParams, ScanCounts,
    TrialOutcome, Truth, Win,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Rational(#[from] RationalError),
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: Rational },
    #[error("{name} is too large for exact evaluation")]
    TooLarge { name: &'static str },
    #[error("no construction for a = {a}, b = {b}: needs gcd(a, b) = 1 and 0 < a < b")]
    NotConstructible { a: u64, b: u64 },
    #[error("construction needs at least one hypothesis")]
    EmptyConstruction,
    #[error("{value} has no inverse modulo {modulus}")]
    NotInvertible { value: i64, modulus: u64 },
    #[error("{wins} win indicators but {labels} labels")]
    LengthMismatch { wins: usize, labels: usize },
    #[error("p-values must lie in [0, 1]")]
    InvalidPValue,
    #[error("construction has (a, b) = {spec:?} but parameters give {params:?}")]
    Mismatch { spec: (u64, u64), params: (u64, u64) },
    #[error("enumeration needs 2^{needed} cases, above the 2^{limit} budget")]
    BudgetExceeded { needed: u64, limit: u64 },
    #[error("exact sum overflowed 128-bit arithmetic")]
    Overflow,
}
