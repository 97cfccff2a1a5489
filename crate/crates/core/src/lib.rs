//! Sparse retrieval with BM25 and pluggable query expansion: RM3,
//! offer-weight pseudo-relevance feedback, and expansion terms produced by an
//! external generator over the wire protocol in [`protocol`].

pub mod analysis;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod expansion;
pub mod generator_client;
pub mod index;
pub mod mock;
pub mod pipeline;
pub mod protocol;
pub mod rerank;
pub mod retrieval;
pub mod server;

pub use error::{Error, Result};
