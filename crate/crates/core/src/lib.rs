//! Tree-structured copula graphical models.
//!
//! Structure is learned from empirical Spearman rank correlations and each
//! edge's copula family is picked from precomputed expected-log-likelihood
//! curves combined with a prior over the family's attainable correlations.
//! A per-edge maximum-likelihood learner is provided as the exact (slow)
//! reference, together with numerical checks of the entropy ordering theory
//! the method relies on.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel
//! drivers and the command line live in the companion `sms` crate.
#![no_std]
// `!(a < b)` is the NaN-rejecting form throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod copula;
pub mod curves;
pub mod dependence;
pub mod error;
pub mod eval;
pub mod family;
pub mod marginal;
pub mod math;
pub mod mst;
pub mod optimize;
pub mod quadrature;
pub mod stats;
pub mod synth;
pub mod tree;
pub mod verify;

pub use copula::BivariateCopula;
pub use curves::{CharacteristicCurve, FamilyPrior, PriorForm};
pub use error::{Error, Result};
pub use eval::FittedModel;
pub use family::CopulaFamily;
pub use marginal::EmpiricalMarginal;
pub use quadrature::Resolution;
pub use stats::Dataset;
pub use tree::{CopulaTree, LearnConfig, LearnMethod, TreeEdge};


