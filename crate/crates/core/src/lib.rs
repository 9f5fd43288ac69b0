//! Extreme subsets and pseudo-Sidon constants of finite abelian groups.
//!
//! A finite subset `E` of a group `G` is extreme when some measure `μ` supported on `E`
//! satisfies `‖μ̂‖∞ = ‖μ‖/√#E`. For unimodular masses this is the exact identity
//! `μ * μ̃ = #E·δ0`, which [`cyclotomic::exact_extremality_check`] decides in exact
//! cyclotomic arithmetic. [`search`] looks for such measures on grids of roots of unity
//! and certifies their absence.
//!
//! Floating point code is generic over [`num_traits::Float`]; the aliases below fix the
//! common precisions.

pub mod catalog;
pub mod cyclotomic;
pub mod equivalence;
pub mod group;
pub mod ingest;
pub mod literal;
pub mod measure;
pub mod search;
pub mod structure;
pub mod turn;

pub use cyclotomic::{exact_extremality_check, CycloSum, ExactVerdict};
pub use group::{Character, Element, GroupSpec, Subgroup};
pub use measure::{ComplexMeasure, Mass, PhaseMeasure, Spectrum};
pub use turn::{snap_turn, RationalTurn};

pub type Spectrum64 = measure::Spectrum<f64>;
pub type Spectrum32 = measure::Spectrum<f32>;
pub type ComplexMeasure64 = measure::ComplexMeasure<f64>;
pub type ComplexMeasure32 = measure::ComplexMeasure<f32>;
pub type CycloSum64 = cyclotomic::CycloSum<i64>;
pub type CycloSumBig = cyclotomic::CycloSum<num_bigint::BigInt>;
pub type SearchReport64 = search::SearchReport<f64>;
pub type SearchReport32 = search::SearchReport<f32>;

/// Errors shared by every module.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("invalid element: {0}")]
    InvalidElement(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("{what} needs size {size}, above the cap {cap}")]
    TooLarge { what: &'static str, size: u64, cap: u64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("integer overflow in {0}")]
    Overflow(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
