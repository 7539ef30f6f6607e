//! Weighted-aspect opinion mining with a two-channel convolutional
//! network, lexicon-based aspect rating, tensor-weighted aspect clusters,
//! and SVD-backed user-based collaborative filtering.

pub mod artifact;
pub mod aspects;
pub mod balance;
pub mod cluster;
pub mod cnn;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod pipeline;
pub mod recommend;
pub mod rng;
pub mod stem;
pub mod svd;
pub mod synthetic;
pub mod tagger;
pub mod tensor;

pub use error::{Error, Result};
