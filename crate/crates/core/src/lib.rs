//! Graph-based semi-supervised classification.
//!
//! Feature embeddings plus a small labeled subset go in; label predictions
//! for every node come out. The pieces:
//!
//! - [`graph`]: exact kNN graph construction and the normalized operator
//!   `S = D^{-1/2} W D^{-1/2}`.
//! - [`diffusion::l2`]: quadratic label spreading, `H = (I - alpha S)^{-1} Y`,
//!   with a dense direct solver, iterative solvers and grid selection of alpha.
//! - [`diffusion::l1`]: graph total-variation ratio minimization,
//!   one-vs-rest over classes, solved with a primal-dual splitting.
//! - [`certainty`]: argmax hardening and entropy-based pseudo-label weights.
//! - [`pipeline`]: the one-pass and dynamic-pass loops, the feature
//!   extractor protocol and a built-in mock extractor.
//! - [`metrics`]: accuracy and Mann-Whitney ROC-AUC.
//! - [`io`]: the GNZE/GNZG binary formats and the CSV tables.
//!
//! The `gnz` binary wraps all of this; see [`cli`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certainty;
pub mod cli;
pub mod data;
pub mod diffusion;
pub mod error;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod pipeline;

pub use data::{EmbeddingMatrix, LabelSet};
pub use diffusion::ScoreMatrix;
pub use error::{Error, FormatError, LabelIssue, Result};
pub use graph::{Graph, NormalizedOperator};
