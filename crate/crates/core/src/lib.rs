//! Supervised contrastive fine-tuning treated as a two-objective problem.
//!
//! The positive (intra-class) and negative (inter-class) contrastive losses are
//! optimized jointly with cross-entropy, either by linear scalarization over a
//! preference vector or by exact Pareto optimal (EPO) search along the
//! preference ray. The crate also ships an analytic two-objective toy lab used
//! to check both solvers against a known Pareto front.
//!
//! Module map:
//! - [`diffcore`]: flat parameters, AdamW, finite-difference checking, checkpoints
//! - [`encoder`]: hashed n-gram features and the trainable MLP encoder
//! - [`contrastive`]: similarity blocks, positive/negative losses, cross-entropy
//! - [`moo`]: dominance, preference vectors, scalarization and EPO weights
//! - [`paretolab`]: analytic toy problem and solver traces
//! - [`pipeline`]: TSV loading, few-shot/full splits, per-class batch sampling
//! - [`trainer`]: training loop, evaluation, multi-seed runs and sweeps
//! - [`cli`]: configuration parsing, overrides and report emission

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod contrastive;
pub mod diffcore;
pub mod encoder;
pub mod error;
pub mod moo;
pub mod paretolab;
pub mod pipeline;
pub mod seeding;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
