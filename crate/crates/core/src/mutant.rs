//! The mutant record shared by all engines, plus the validity pipeline every
//! candidate goes through before it is emitted: splice the replacement into
//! the source, re-parse, and drop anything that equals the original text.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::lexing::{lex, TokenStream};
use crate::minilang::{parse, Span};

/// Which engine produced a mutant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Grammar,
    Pattern,
    Predictor,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Grammar => "grammar",
            Engine::Pattern => "pattern",
            Engine::Predictor => "predictor",
        }
    }

    pub fn all() -> [Engine; 3] {
        [Engine::Grammar, Engine::Pattern, Engine::Predictor]
    }

    pub fn parse(s: &str) -> Option<Engine> {
        match s {
            "grammar" => Some(Engine::Grammar),
            "pattern" => Some(Engine::Pattern),
            "predictor" => Some(Engine::Predictor),
            _ => None,
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One seeded fault.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    /// Stable content hash of (engine, operator, span, replacement).
    pub id: String,
    pub engine: Engine,
    pub operator_id: String,
    /// Function containing the mutated span.
    pub function: String,
    /// Byte span of the original source that was replaced.
    pub span: Span,
    pub original_tokens: Vec<String>,
    pub mutated_tokens: Vec<String>,
    /// Full mutated source text.
    pub patched_source: String,
}

/// Replace `span` in `source` with `replacement` text.
pub fn splice(source: &str, span: Span, replacement: &str) -> String {
    let mut out = String::with_capacity(source.len() + replacement.len());
    out.push_str(&source[..span.0]);
    out.push_str(replacement);
    out.push_str(&source[span.1..]);
    out
}

fn mutant_id(engine: Engine, operator_id: &str, span: Span, replacement: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(engine.as_str().as_bytes());
    hasher.update([0x1f]);
    hasher.update(operator_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(span.0.to_le_bytes());
    hasher.update(span.1.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(replacement.as_bytes());
    let digest = hasher.finalize();
    let mut id = String::with_capacity(13);
    id.push(match engine {
        Engine::Grammar => 'g',
        Engine::Pattern => 'p',
        Engine::Predictor => 'n',
    });
    for byte in digest.iter().take(6) {
        id.push_str(&format!("{byte:02x}"));
    }
    id
}

/// Builds [`Mutant`]s for one program, enforcing the shared invariants.
pub struct MutantFactory<'a> {
    source: &'a str,
    tokens: TokenStream,
}

impl<'a> MutantFactory<'a> {
    /// `source` must lex (engines only run on parsed programs).
    pub fn new(source: &'a str) -> Self {
        let tokens = lex(source).expect("engine input must lex");
        MutantFactory { source, tokens }
    }

    pub fn source(&self) -> &str {
        self.source
    }

    /// Token texts covered by a span of the original source.
    pub fn tokens_in(&self, span: Span) -> Vec<String> {
        self.tokens
            .in_span(span.0, span.1)
            .iter()
            .map(|t| t.text.clone())
            .collect()
    }

    /// Attempt to materialize a candidate. Returns `None` when the patched
    /// program fails to parse or does not differ from the original — such
    /// candidates are silently discarded, mirroring the compile-and-dedup
    /// filter of real seeding tools.
    pub fn build(
        &self,
        engine: Engine,
        operator_id: &str,
        function: &str,
        span: Span,
        replacement_tokens: &[String],
    ) -> Option<Mutant> {
        let replacement = replacement_tokens.join(" ");
        let patched = splice(self.source, span, &replacement);
        if patched == self.source {
            return None;
        }
        // Token-level equality also counts as a duplicate of the original
        // (pure whitespace changes are not faults).
        let patched_stream = lex(&patched).ok()?;
        if patched_stream.texts() == self.tokens.texts() {
            return None;
        }
        parse(&patched).ok()?;
        Some(Mutant {
            id: mutant_id(engine, operator_id, span, &replacement),
            engine,
            operator_id: operator_id.to_string(),
            function: function.to_string(),
            span,
            original_tokens: self.tokens_in(span),
            mutated_tokens: replacement_tokens.to_vec(),
            patched_source: patched,
        })
    }
}

/// Drop repeated ids while preserving first-seen order.
pub fn dedupe_by_id(mutants: Vec<Mutant>) -> Vec<Mutant> {
    let mut seen = std::collections::BTreeSet::new();
    mutants
        .into_iter()
        .filter(|m| seen.insert(m.id.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "fn f(a, b) {\n    return a < b;\n}\n";

    fn op_span() -> Span {
        let at = SRC.find('<').unwrap();
        (at, at + 1)
    }

    #[test]
    fn build_produces_parsing_mutant() {
        let factory = MutantFactory::new(SRC);
        let m = factory
            .build(Engine::Grammar, "relational_replacement", "f", op_span(), &[">".into()])
            .unwrap();
        assert!(m.patched_source.contains("a > b"));
        assert_eq!(m.original_tokens, vec!["<"]);
        assert_eq!(m.mutated_tokens, vec![">"]);
        assert!(m.id.starts_with('g'));
    }

    #[test]
    fn identical_replacement_discarded() {
        let factory = MutantFactory::new(SRC);
        assert!(factory
            .build(Engine::Grammar, "relational_replacement", "f", op_span(), &["<".into()])
            .is_none());
    }

    #[test]
    fn non_parsing_replacement_discarded() {
        let factory = MutantFactory::new(SRC);
        assert!(factory
            .build(Engine::Grammar, "x", "f", op_span(), &["%%%".into()])
            .is_none());
    }

    #[test]
    fn ids_stable_across_runs() {
        let factory = MutantFactory::new(SRC);
        let a = factory
            .build(Engine::Pattern, "widen_narrow_relational", "f", op_span(), &["<=".into()])
            .unwrap();
        let b = factory
            .build(Engine::Pattern, "widen_narrow_relational", "f", op_span(), &["<=".into()])
            .unwrap();
        assert_eq!(a.id, b.id);
        assert!(a.id.starts_with('p'));
    }

    #[test]
    fn dedupe_keeps_first() {
        let factory = MutantFactory::new(SRC);
        let m = factory
            .build(Engine::Grammar, "op", "f", op_span(), &[">".into()])
            .unwrap();
        let out = dedupe_by_id(vec![m.clone(), m.clone()]);
        assert_eq!(out.len(), 1);
    }
}
