//! Tokenization shared by the mini-language frontend, the mutation engines
//! and the token-level similarity metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Keywords of the mini language. Everything else that looks like a word is
/// an identifier.
pub const KEYWORDS: &[&str] = &["fn", "if", "else", "while", "return"];

/// Lexical class of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Ident,
    IntLit,
    Operator,
    Punct,
    Keyword,
}

/// One lexed token with its byte span in the original source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Half-open byte range `[start, end)` into the source text.
    pub span: (usize, usize),
}

/// Ordered token sequence for one source unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    pub source_id: String,
}

impl TokenStream {
    /// Token texts in stream order.
    pub fn texts(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    /// Tokens whose span lies fully inside `[start, end)`.
    pub fn in_span(&self, start: usize, end: usize) -> &[Token] {
        let lo = self.tokens.partition_point(|t| t.span.0 < start);
        let hi = self.tokens.partition_point(|t| t.span.1 <= end);
        &self.tokens[lo..hi]
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LexError {
    #[error("illegal character {ch:?} at byte {offset}")]
    IllegalChar { ch: char, offset: usize },
    #[error("non-ASCII byte at {offset}")]
    NonAscii { offset: usize },
}

/// Tokenize `source` using maximal munch. Whitespace and `//` line comments
/// are dropped from the stream; spans always index into the original text.
pub fn lex(source: &str) -> Result<TokenStream, LexError> {
    lex_with_id(source, "<memory>")
}

/// Same as [`lex`] but tags the stream with a source identifier.
pub fn lex_with_id(source: &str, source_id: &str) -> Result<TokenStream, LexError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if !b.is_ascii() {
            return Err(LexError::NonAscii { offset: i });
        }
        if b.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if b.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            tokens.push(token(TokenKind::IntLit, source, start, i));
            continue;
        }
        if b.is_ascii_alphabetic() || b == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let kind = if KEYWORDS.contains(&&source[start..i]) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            };
            tokens.push(token(kind, source, start, i));
            continue;
        }
        // Two-character operators first (maximal munch).
        if i + 1 < bytes.len() {
            let pair = &source[i..i + 2];
            if matches!(pair, "<=" | ">=" | "==" | "!=" | "&&" | "||") {
                i += 2;
                tokens.push(token(TokenKind::Operator, source, start, i));
                continue;
            }
        }
        match b {
            b'+' | b'-' | b'*' | b'/' | b'%' | b'<' | b'>' | b'!' | b'=' => {
                i += 1;
                tokens.push(token(TokenKind::Operator, source, start, i));
            }
            b'(' | b')' | b'{' | b'}' | b',' | b';' => {
                i += 1;
                tokens.push(token(TokenKind::Punct, source, start, i));
            }
            _ => {
                return Err(LexError::IllegalChar {
                    ch: b as char,
                    offset: i,
                })
            }
        }
    }
    Ok(TokenStream {
        tokens,
        source_id: source_id.to_string(),
    })
}

fn token(kind: TokenKind, source: &str, start: usize, end: usize) -> Token {
    Token {
        kind,
        text: source[start..end].to_string(),
        span: (start, end),
    }
}

/// Rebuild the source from spans plus the inter-token gaps of `source`.
/// Used by tests to assert that spans tile the input.
pub fn reconstruct(source: &str, stream: &TokenStream) -> String {
    let mut out = String::new();
    let mut cursor = 0;
    for t in &stream.tokens {
        out.push_str(&source[cursor..t.span.0]);
        out.push_str(&t.text);
        cursor = t.span.1;
    }
    out.push_str(&source[cursor..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn texts(src: &str) -> Vec<String> {
        lex(src).unwrap().texts()
    }

    #[test]
    fn minimal_expression() {
        let s = lex("a == b").unwrap();
        let kinds: Vec<_> = s.tokens.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![TokenKind::Ident, TokenKind::Operator, TokenKind::Ident]
        );
        assert_eq!(texts("a == b"), vec!["a", "==", "b"]);
    }

    #[test]
    fn maximal_munch_le() {
        assert_eq!(texts("a<=b"), vec!["a", "<=", "b"]);
    }

    #[test]
    fn assignment_token_kinds() {
        let s = lex("x1 = 10;").unwrap();
        let kinds: Vec<_> = s.tokens.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![
                TokenKind::Ident,
                TokenKind::Operator,
                TokenKind::IntLit,
                TokenKind::Punct
            ]
        );
    }

    #[test]
    fn keywords_are_classified() {
        let s = lex("fn f(a) { return a; }").unwrap();
        assert_eq!(s.tokens[0].kind, TokenKind::Keyword);
        assert_eq!(s.tokens[1].kind, TokenKind::Ident);
    }

    #[test]
    fn comments_dropped_spans_preserved() {
        let src = "a = 1; // trailing note\nb = 2;";
        let s = lex(src).unwrap();
        assert_eq!(s.tokens.len(), 8);
        assert_eq!(reconstruct(src, &s), src);
    }

    #[test]
    fn illegal_character_reports_offset() {
        match lex("a @ b") {
            Err(LexError::IllegalChar { ch, offset }) => {
                assert_eq!(ch, '@');
                assert_eq!(offset, 2);
            }
            other => panic!("expected IllegalChar, got {other:?}"),
        }
    }

    #[test]
    fn lone_ampersand_rejected() {
        assert!(matches!(lex("a & b"), Err(LexError::IllegalChar { .. })));
    }

    #[test]
    fn spans_strictly_increase() {
        let s = lex("while (b != 0) { r = a % b; }").unwrap();
        for w in s.tokens.windows(2) {
            assert!(w[0].span.1 <= w[1].span.0);
            assert!(w[0].span.0 < w[0].span.1);
        }
    }

    proptest! {
        // Lexing is stable under re-printing: joining token texts with spaces
        // and lexing again yields the same texts.
        #[test]
        fn relex_fixpoint(src in "[a-z0-9+\\-*/%<>=!&|(){},; \n]{0,64}") {
            if let Ok(stream) = lex(&src) {
                let joined = stream.texts().join(" ");
                if let Ok(again) = lex(&joined) {
                    prop_assert_eq!(stream.texts(), again.texts());
                }
            }
        }

        #[test]
        fn reconstruct_total(src in "[a-z0-9+\\-*/%<>=!(){},; \n]{0,64}") {
            if let Ok(stream) = lex(&src) {
                prop_assert_eq!(reconstruct(&src, &stream), src);
            }
        }
    }
}
