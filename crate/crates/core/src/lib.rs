//! Mining sequential API usage patterns from source code.
//!
//! The pipeline scans a multi-source corpus ([`corpus`]), abstracts every
//! file into typed items grouped per class or method block
//! ([`abstraction`]), mines frequent item sequences with PrefixSpan and
//! ranks them by `k × support` ([`mine`]), persists both repositories as XML
//! ([`store`]) and answers developer queries with ranked patterns and code
//! skeletons ([`recommend`]).

pub mod abstraction;
pub mod corpus;
pub mod error;
pub mod mine;
pub mod pipeline;
pub mod recommend;
pub mod store;
pub mod synth;

pub use error::{Error, Result};
