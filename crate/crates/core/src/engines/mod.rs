//! The three mutant-generation engines.
//!
//! * [`grammar`] applies a frozen catalog of syntactic operators at every
//!   applicable site.
//! * [`pattern`] ranks likely-faulty statements from a bug report and applies
//!   inverted fix-patterns there, up to a cap.
//! * [`predictor`] masks one token at a time and asks a pluggable predictor
//!   for replacements; ships an n-gram back-off model.

pub mod grammar;
pub mod pattern;
pub mod predictor;
