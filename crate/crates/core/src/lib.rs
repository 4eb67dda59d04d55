//! Extraction of ranked, probabilistic grammar rules `S ⇒ (P ⇒ᵅ Q)` from
//! dependency treebanks.
//!
//! The pipeline reads CoNLL-U ([`treebank`]), selects the dependency edges
//! of a scope and labels them with a response ([`query`]), turns their
//! syntactic neighbourhood into boolean features ([`featurize`]), fits an
//! L1-regularized logistic regression with an unpenalized intercept along a
//! grid of regularization strengths ([`sparse_glm`], [`regpath`]) and
//! annotates every feature that enters the path with corpus statistics
//! ([`rulestats`]). [`pipeline`] ties the stages together behind a
//! declarative run configuration.

pub mod config;
pub mod error;
pub mod featurize;
pub mod pipeline;
pub mod query;
pub mod regpath;
pub mod report;
pub mod rulestats;
pub mod sparse_glm;
pub mod synthetic;
pub mod treebank;

pub use error::{Error, Result};
