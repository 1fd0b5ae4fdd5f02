//! Adaptive dataflow selection for sparse matrix-matrix multiplication (SpGEMM).
//!
//! The crate bundles everything needed to go from raw sparse matrices to a
//! trained dataflow selector:
//!
//! - [`sparse`]: CSR/CSC matrices, Matrix Market I/O, random generation,
//!   block partitioning and a dense reference multiplier.
//! - [`sim`]: cycle-level cost models of the inner-product, outer-product and
//!   row-wise (Gustavson) dataflows on a small processing-element array.
//! - [`features`]: the twelve per-pair features and min-max scaling.
//! - [`dataset`]: labeled block-pair datasets, grouped splits, class weights.
//! - [`cart`]: a weighted-Gini classification tree with rule export.
//! - [`dqn`]: a one-hidden-layer Q-network trained offline as a contextual bandit.
//! - [`heuristic`]: the fixed two-level threshold selector.
//! - [`evaluate`]: speedup, accuracy, storage and sweep reports.

pub mod cart;
pub mod corpus;
pub mod dataset;
pub mod dqn;
mod error;
pub mod evaluate;
pub mod features;
pub mod heuristic;
mod label;
pub mod sim;
pub mod sparse;

pub use error::{Error, ParseErrorKind, Result};
pub use label::DataflowLabel;

pub use cart::{DecisionTree, TreeNode, TreeParams};
pub use dataset::{Dataset, DatasetRow};
pub use dqn::{DqnHyper, DqnModel, QNetwork};
pub use features::{Feature, FeatureVector, Scaler};
pub use sim::{SimConfig, SimResult};
pub use sparse::{BlockGrid, Layout, SparseMatrix};
