//! Mixture-of-experts neural optimizer for black-box binary optimization.
//!
//! The library has three layers:
//!
//! - a self-contained neural substrate ([`nn`]) with dense layers, batch
//!   normalization, reverse-mode gradients and Adam;
//! - the optimizer itself: per-instance expert models ([`expert`]) and the
//!   solving pipeline that routes, fine-tunes and generates solutions
//!   ([`moe`]);
//! - a benchmark harness: six pseudo-Boolean problem classes ([`problems`]),
//!   search baselines and hybrids ([`baselines`]), the statistics used for
//!   routing and evaluation ([`stats`]), similarity/clustering studies
//!   ([`analysis`]) and campaign orchestration ([`campaign`]).
//!
//! Every source of randomness is an explicit [`rand_chacha::ChaCha8Rng`]
//! seeded through [`rng::derive_seed`]; there is no global RNG and all
//! results are reproducible from a single master seed.
//!
//! The `book/` directory of the repository is a narrative guide to the same
//! material; its code snippets compile as doc-tests.

// modules still under construction are appended as they land
pub mod bits;
pub mod error;
pub mod expert;
pub mod nn;
pub mod problems;
pub mod rng;
pub mod stats;
pub mod textio;

pub use bits::BitVector;
pub use error::{Error, Result};
