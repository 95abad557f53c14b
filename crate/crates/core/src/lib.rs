//! Text-side statistics for a cascaded speech-to-text translation pipeline.
//!
//! The crate is organised by pipeline stage:
//!
//! - [`corpus`]: corpora, vocabularies, N-best lists, pronunciation lexicons
//! - [`lm`]: modified Kneser-Ney n-gram models, ARPA I/O, EM interpolation,
//!   relative-entropy pruning
//! - [`select`]: cross-entropy-difference data selection
//! - [`rover`]: word-transition-network system combination
//! - [`qe`]: quality-estimation features and an ARD Gaussian process
//! - [`rescore`]: confidence-gated N-best rescoring
//! - [`metrics`]: WER and BLEU
//! - [`synth`]: seeded synthetic corpora used by the examples and tests
//!
//! The `cascade` binary exposes each stage as a subcommand (see [`cli`]).

pub mod cli;
pub mod corpus;
pub mod error;
pub mod lm;
pub mod metrics;
pub mod qe;
pub mod rescore;
pub mod rover;
pub mod select;
pub mod synth;

pub use error::{Error, Result};
