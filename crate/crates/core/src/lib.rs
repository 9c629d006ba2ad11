//! Measuring superposition in graph neural networks.
//!
//! This crate trains small message-passing models (GCN, GIN, GATv2) on
//! synthetic graph tasks and analyzes the geometry of the feature
//! directions they learn. Features are extracted as class-conditional
//! centroids of pooled graph embeddings or as linear-probe normals on
//! node embeddings, and their arrangement is summarized with
//! basis-invariant diagnostics: effective rank, the superposition index,
//! Welch-normalized overlap, the alignment index, and numerical rank
//! profiles of the pooled embedding matrix.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`] — dense 64-bit tensors, one-sided Jacobi SVD, and a
//!   small reverse-mode differentiation tape covering the closed set of
//!   operations the models need.
//! - [`graphgen`] — deterministic generation of the PAIRWISE and
//!   CONJUNCTION datasets plus the exact cycle oracles behind their
//!   labels.
//! - [`model`] — the three architectures, the signed power-mean pooling
//!   family (global and local scopes), and readout.
//! - [`trainer`] — full-batch Adam on BCE, evaluation, and scheduled
//!   snapshots of the pooled-embedding spectrum.
//! - [`features`] — probes, centroids, activeness filters, and AUC.
//! - [`geometry`] — the diagnostics themselves.
//! - [`expcli`] — the configuration-driven study runner behind the CLI.

pub mod error;
pub mod expcli;
pub mod features;
pub mod geometry;
pub mod graphgen;
pub mod model;
pub mod numerics;
pub mod trainer;

pub use error::Error;

/// Crate result alias.
pub type Result<T> = std::result::Result<T, Error>;
