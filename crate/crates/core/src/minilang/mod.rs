//! A tiny deterministic imperative language: integer-only semantics,
//! C-like syntax, and a bundled micro-corpus of subjects with reference
//! faults. It exists so the whole seeding/execution/analysis pipeline can be
//! tested hermetically.
//!
//! Grammar sketch:
//!
//! ```text
//! program  := fn+
//! fn       := "fn" IDENT "(" params? ")" block
//! block    := "{" stmt* "}"
//! stmt     := IDENT "=" expr ";"
//!           | "if" "(" expr ")" block ("else" block)?
//!           | "while" "(" expr ")" block
//!           | "return" expr ";"
//! expr     := precedence climbing over || && (== !=) (< <= > >=) (+ -) (* / %)
//!             with unary "-" and "!", integer literals, variables, calls.
//! ```
//!
//! Arithmetic wraps at 64-bit bounds; comparisons and logical operators
//! produce 0/1; any nonzero value is truthy.

mod ast;
mod corpus;
mod interp;
mod parser;
mod printer;

pub use ast::{BinaryOp, Expr, FunctionDecl, Program, Span, Stmt, UnaryOp};
pub use corpus::{Corpus, CorpusEntry, CorpusError, Expected, TestCase};
pub use interp::{run_test, ExecOutcome, ExecStatus, RunError, DEFAULT_STEP_LIMIT};
pub use parser::{parse, SyntaxError};
