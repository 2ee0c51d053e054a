//! File formats, parallel drivers and the command-line front end for
//! sparse model selection of copula trees.

pub mod compare;
pub mod config;
pub mod data;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod synth;
pub mod verifier;

pub use error::{Error, Result};
