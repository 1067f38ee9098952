//! Fault-seeding research toolkit.
//!
//! The crate hosts three mutant-generation engines (grammar-based,
//! pattern-based with IR localization, and masked-token prediction), a
//! deterministic mini-language used as the execution substrate, a kill-matrix
//! harness, token/behavior similarity metrics, and the analytics that compare
//! seeded faults against reference faults (quartiles, resemblance,
//! subsumption, cost-effectiveness simulation).
//!
//! Numeric routines are generic over [`num::Real`]; the pipeline itself runs
//! on [`Score`] (`f64`).

pub mod analysis;
pub mod artifacts;
pub mod config;
pub mod diff;
pub mod engines;
pub mod harness;
pub mod lexing;
pub mod metrics;
pub mod minilang;
pub mod mutant;
pub mod num;
pub mod pipeline;
pub mod seeds;
pub mod simulate;
pub mod stats;

/// Scalar type used by the pipeline for every similarity score, correlation
/// coefficient and simulated fraction.
pub type Score = f64;

pub use lexing::{lex, LexError, Token, TokenKind, TokenStream};
pub use minilang::{parse, Program, SyntaxError};
pub use mutant::{Engine, Mutant};
