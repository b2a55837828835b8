//! Optimal-transport based precision/recall scoring for generated token
//! sequences (method names in particular), together with the baselines it is
//! usually compared against and a small evaluation harness.
//!
//! The pipeline is:
//!
//! 1. [`tokenizer`] splits identifiers into lowercase subtokens.
//! 2. [`embedding`] looks the subtokens up in a word2vec table, normalizes the
//!    vectors and turns norms / TF-IDF scores into simplex weights.
//! 3. [`transport`] solves the exact discrete transportation problem.
//! 4. [`metrics`] combines the above into WRDScore, greedy-match, ROUGE-N and
//!    WMD.
//! 5. [`eval`] scores whole datasets and compares them with human judgments.

pub mod cli;
pub mod embedding;
pub mod eval;
pub mod metrics;
pub mod tokenizer;
pub mod transport;

pub use embedding::{EmbeddingTable, IdfTable, OovPolicy, WeightScheme, WeightedEmbeddingSequence};
pub use metrics::ScoreTriple;
pub use tokenizer::{split_identifier, TokenSequence};
pub use transport::{solve_transport, CostMatrix, TransportPlan};
