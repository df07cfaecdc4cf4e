//! Multi-class boosting from triplet comparisons.
//!
//! The only training signal is a set of statements "example `i` is closer to
//! `j` than to `k`". Weak learners are triplet classifiers over a reference
//! pair `(j, k)`; they abstain on examples whose side is unknown.

pub mod boost;
pub mod bounds;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod predict;
pub mod rng;
pub mod synthetic;
pub mod triplets;
pub mod weak_learner;

pub use error::{Error, Result};
