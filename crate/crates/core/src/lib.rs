//! Multi-label node classification with a graph convolutional network whose
//! hidden node representations are co-embedded with a trainable label
//! matrix.
//!
//! The pipeline, bottom-up:
//!
//! * [`tensor`]: dense and CSR matrices with fixed-order kernels;
//! * [`graph`]: the graph data model, dataset directories, adjacency
//!   normalization and a planted-correlation generator;
//! * [`gcn`]: two-layer forward/backward pass and the supervised loss;
//! * [`embed`]: label embedding, negative sampling and the node-label and
//!   label-label losses;
//! * [`optim`]: the Adam optimizer;
//! * [`trainer`]: the joint training loop, prediction and gradient checking;
//! * [`eval`]: micro-F1 and the ablation / training-size experiments;
//! * [`config`], [`model_file`], [`commands`]: the command-line surface.
//!
//! With the default `parallel` feature, row kernels, per-node loss terms and
//! independent experiment runs fan out over rayon. Results are bit-identical
//! with and without the feature.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod embed;
pub mod error;
pub mod eval;
pub mod gcn;
pub mod graph;
pub mod model_file;
pub mod optim;
pub mod par;
pub mod rng;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
