//! Tabular data augmentation for low-data regimes.
//!
//! The crate covers the full loop: ingest a small labelled CSV, split it into
//! train/oracle/test partitions, prompt an LLM (or a seeded mock) for synthetic
//! rows, curate those rows by the learning dynamics of a classifier trained on
//! the real data, generate interpolation/density baselines, and score
//! everything with train-on-synthetic / test-on-real metrics.
//!
//! All randomness flows through [`rng::rng_for`], so every artifact is a pure
//! function of its inputs and a `u64` seed.

pub mod baselines;
pub mod bias;
pub mod curator;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod learners;
pub mod llm_client;
pub mod promptgen;
pub mod rng;
pub mod schema;

pub use error::{Error, Result};
