//! Emotion experiencer detection and span-conditioned emotion and appraisal
//! classification, with a pipeline-aware evaluation protocol.
//!
//! The crate is organised along the processing chain:
//!
//! - [`corpus`]: documents, annotations, loading, writer-token injection and
//!   splitting
//! - [`span_tagger`]: greedy BILOU tagger trained as an averaged perceptron
//! - [`classifier`]: indicator-marked span encoding and one-vs-rest logistic
//!   heads
//! - [`pipeline`]: gold-spans and pipeline regimes
//! - [`evaluation`]: span matching, metrics, error attribution and report
//!   tables
//! - [`cli`]: the `emoter` command-line tool

pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod evaluation;
pub mod hashing;
pub mod pipeline;
pub mod span_tagger;
pub mod synthetic;
