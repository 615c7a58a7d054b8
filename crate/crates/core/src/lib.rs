//! Monte Carlo laboratory for the fluctuations of the longest common
//! subsequence of a three-letter string against a binary one.
//!
//! The core objects are the bit-drop construction of `Z^k` ([`drop_scheme`]),
//! the score curve `k -> LCS(Z^k, Y)` kept up to date under insertions
//! ([`lcs::IncrementalLcs`]), canonical minimal matchings ([`matchings`])
//! and the estimators that sit on top ([`experiments`]).

pub mod cli;
pub mod drop_scheme;
pub mod error;
pub mod experiments;
pub mod lcs;
pub mod matchings;
pub mod rope;
pub mod sequences;
pub mod stats;

pub use drop_scheme::{simulate_ln_coupled, DropState, InsertionMode};
pub use error::{Error, Result};
pub use lcs::{align_score, lcs_bitparallel, lcs_length, lcs_prefix_curve, ScoreCurve, SubstitutionMatrix};
pub use matchings::{minimal_matching, Matching};
pub use sequences::{generate_case1, strip_a, BinarySequence, Bit, RngStream, Symbol3, TriSequence};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
