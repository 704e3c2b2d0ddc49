//! Influence estimation for social posts: a pairwise repost estimator,
//! Independent-Cascade simulation, prompt construction for LLM revision, and
//! an experiment harness comparing revision strategies.

pub mod cascade;
pub mod dataio;
pub mod embed;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod graph;
pub mod llm;
pub mod prompting;
pub mod rng;

pub use error::{Error, Result};
