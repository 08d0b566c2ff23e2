//! Structural compression for graph contrastive learning.
//!
//! Encoders are trained on partition-compressed nodes (cluster means of the
//! node features) with an MLP, and the learned weights are transferred to a
//! message-passing GCN for inference. The crate covers the whole pipeline:
//!
//! - [`graph`]: CSR graphs, normalized adjacency, sparse-dense kernels
//! - [`partition`]: multilevel balanced partitioning and partition quality
//! - [`compress`]: node compression, compressed graph, DropMember
//! - [`encoder`]: linear / 2-layer MLP and GCN forward + backward passes
//! - [`losses`]: SCE, COLES, InfoNCE, SAGE, CCA-SSG and the spectral loss
//! - [`training`]: compressed and full-graph trainers, Adam, sweeps
//! - [`data`]: synthetic generators, splits, linear probe, dataset IO
//! - [`theory`]: executable checks of the approximation bounds and identities
//! - [`io`]: binary matrix / parameter formats, results, run manifests
//! - [`cli`]: the `structcomp` command line

// `!(x > 0.0)` is the NaN-rejecting form used throughout input validation
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod cli;
pub mod compress;
pub mod data;
pub mod encoder;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod io;
pub mod losses;
pub mod matrix;
pub mod optim;
pub mod partition;
pub mod rng;
pub mod theory;
pub mod training;

pub use error::{Error, Result};
pub use graph::SparseGraph;
pub use matrix::DenseMatrix;
pub use partition::Partition;
