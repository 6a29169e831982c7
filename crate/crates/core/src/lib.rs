//! Exploration engine for collections of social-media users.
//!
//! The crate covers the full analysis pipeline:
//!
//! * [`corpus`]: ingestion of annotated multimodal posts (JSONL), indexing,
//!   keyword search and a synthetic corpus generator.
//! * [`vectorize`]: per-channel TF-IDF user vectors, early fusion and PCA.
//! * [`embed`]: a joint word/concept/user embedding trained with a
//!   margin-ranking loss and negative sampling.
//! * [`profile`]: multimodal user and community profiles built by iterative
//!   Borda aggregation of usage, representativeness and diversity rankings,
//!   plus k-means communities.
//! * [`interactive`]: relevance-feedback sessions backed by a linear SVM.
//! * [`evaluate`]: simulated-analyst evaluation producing MAP curves.
//! * [`layout`]: 2D coordinates for the overview map.

#![allow(clippy::needless_range_loop)]

pub mod corpus;
pub mod embed;
mod error;
pub mod evaluate;
pub mod interactive;
pub mod layout;
pub mod linalg;
pub mod profile;
pub mod vectorize;

pub use error::{Error, Result};
