//! Masked-token mutation: for every maskable token, build a masked query,
//! ask a predictor for the top-k replacements, and materialize the
//! survivors. The default predictor is an n-gram back-off model trained on
//! the corpus; anything honoring [`TokenPredictor`] can be swapped in.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::lexing::{lex, LexError, TokenKind};
use crate::minilang::Program;
use crate::mutant::{dedupe_by_id, Engine, Mutant, MutantFactory};
use crate::Score;

/// Sentinel standing in for the masked token.
pub const MASK: &str = "<mask>";

/// A context window with exactly one [`MASK`] in it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskedQuery {
    /// Window of token texts containing exactly one mask sentinel.
    pub context_tokens: Vec<String>,
    /// Maximum window width the query was built under.
    pub context_limit: usize,
    /// The original token hidden by the mask; predictors must never
    /// propose it back.
    pub masked_original: String,
}

impl MaskedQuery {
    pub fn mask_index(&self) -> usize {
        self.context_tokens
            .iter()
            .position(|t| t == MASK)
            .expect("query contains a mask")
    }
}

/// Ranked replacement candidates; scores are non-increasing and ties are
/// broken by token text ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub candidates: Vec<(String, Score)>,
    pub k: usize,
}

/// Anything that can fill a masked token slot.
pub trait TokenPredictor {
    fn predict(&self, query: &MaskedQuery, k: usize) -> Prediction;
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("training source does not lex: {0}")]
    Lex(#[from] LexError),
}

/// Back-off n-gram model over token texts.
///
/// `counts` maps a left-context tuple (length 0 to order-1) to the frequency
/// of each following token. Prediction walks from the longest matching
/// context down to the unigram table; a candidate found at context length
/// `c` with conditional frequency `p` scores `(c + p) / order`, which makes
/// longer-context matches rank strictly above shorter ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramModel {
    pub order: usize,
    pub counts: BTreeMap<Vec<String>, BTreeMap<String, u64>>,
    pub vocabulary: BTreeSet<String>,
}

/// Count n-grams of every order up to `order` over the token streams of
/// `sources`.
pub fn train_ngram(sources: &[String], order: usize) -> Result<NGramModel, TrainError> {
    assert!(order >= 1, "order must be at least 1");
    if sources.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    let mut counts: BTreeMap<Vec<String>, BTreeMap<String, u64>> = BTreeMap::new();
    let mut vocabulary = BTreeSet::new();
    for src in sources {
        let texts = lex(src)?.texts();
        for (i, tok) in texts.iter().enumerate() {
            vocabulary.insert(tok.clone());
            for ctx_len in 0..order.min(i + 1) {
                let ctx = texts[i - ctx_len..i].to_vec();
                *counts
                    .entry(ctx)
                    .or_default()
                    .entry(tok.clone())
                    .or_insert(0) += 1;
            }
        }
    }
    Ok(NGramModel {
        order,
        counts,
        vocabulary,
    })
}

impl NGramModel {
    /// Serialize as sorted `context TAB token TAB count` lines (context
    /// tokens joined by spaces). The format is diff-friendly and reproducible.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (ctx, tokens) in &self.counts {
            for (tok, count) in tokens {
                out.push_str(&format!("{}\t{}\t{}\n", ctx.join(" "), tok, count));
            }
        }
        out
    }

    pub fn from_text(text: &str, order: usize) -> Result<NGramModel, String> {
        let mut counts: BTreeMap<Vec<String>, BTreeMap<String, u64>> = BTreeMap::new();
        let mut vocabulary = BTreeSet::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (ctx, tok, count) = match (parts.next(), parts.next(), parts.next()) {
                (Some(c), Some(t), Some(n)) => (c, t, n),
                _ => return Err(format!("line {}: expected 3 tab-separated fields", lineno + 1)),
            };
            let count: u64 = count
                .parse()
                .map_err(|_| format!("line {}: bad count", lineno + 1))?;
            let ctx: Vec<String> = if ctx.is_empty() {
                Vec::new()
            } else {
                ctx.split(' ').map(str::to_string).collect()
            };
            if ctx.is_empty() {
                vocabulary.insert(tok.to_string());
            }
            counts.entry(ctx).or_default().insert(tok.to_string(), count);
        }
        Ok(NGramModel {
            order,
            counts,
            vocabulary,
        })
    }
}

impl TokenPredictor for NGramModel {
    fn predict(&self, query: &MaskedQuery, k: usize) -> Prediction {
        assert!(k >= 1, "k must be at least 1");
        let mask_at = query.mask_index();
        let left = &query.context_tokens[..mask_at];
        let max_ctx = (self.order - 1).min(left.len());

        let mut candidates: Vec<(String, Score)> = Vec::new();
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for ctx_len in (0..=max_ctx).rev() {
            let ctx = left[left.len() - ctx_len..].to_vec();
            let Some(table) = self.counts.get(&ctx) else {
                continue;
            };
            let total: u64 = table.values().sum();
            let mut level: Vec<(&String, &u64)> = table.iter().collect();
            level.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
            for (tok, count) in level {
                if candidates.len() == k {
                    return Prediction { candidates, k };
                }
                if tok == &query.masked_original || !seen.insert(tok) {
                    continue;
                }
                let p = *count as Score / total as Score;
                let score = (ctx_len as Score + p) / self.order as Score;
                candidates.push((tok.clone(), score));
            }
        }
        Prediction { candidates, k }
    }
}

/// Selection policy over the generated mutants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorPolicy {
    /// Keep every surviving mutant.
    All,
    /// Keep only the best-scoring surviving mutant per function, emulating
    /// one-mutant-per-method budgets.
    OnePerFunction,
}

/// Build the masked queries for `program`: one per identifier, operator or
/// integer-literal token inside a statement, with up to `context_limit`
/// surrounding tokens.
pub fn masked_queries(program: &Program, context_limit: usize) -> Vec<(usize, MaskedQuery)> {
    let stream = lex(&program.source_text).expect("program lexes");
    let texts = stream.texts();

    // Byte ranges of statement bodies; declaration headers are not masked.
    let mut stmt_spans = Vec::new();
    for f in &program.functions {
        for s in &f.body {
            stmt_spans.push(s.span());
        }
    }

    let mut queries = Vec::new();
    for (idx, tok) in stream.tokens.iter().enumerate() {
        let maskable_kind = matches!(
            tok.kind,
            TokenKind::Ident | TokenKind::Operator | TokenKind::IntLit
        );
        if !maskable_kind {
            continue;
        }
        if !stmt_spans
            .iter()
            .any(|(s, e)| tok.span.0 >= *s && tok.span.1 <= *e)
        {
            continue;
        }
        // Window of at most context_limit tokens centered on the mask.
        let half = (context_limit - 1) / 2;
        let left_avail = idx;
        let right_avail = texts.len() - idx - 1;
        let mut left = half.min(left_avail);
        let mut right = (context_limit - 1 - left).min(right_avail);
        left = (context_limit - 1 - right).min(left_avail);
        right = (context_limit - 1 - left).min(right_avail);
        let mut context: Vec<String> = texts[idx - left..idx].to_vec();
        context.push(MASK.to_string());
        context.extend(texts[idx + 1..=idx + right].iter().cloned());
        queries.push((
            idx,
            MaskedQuery {
                context_tokens: context,
                context_limit,
                masked_original: tok.text.clone(),
            },
        ));
    }
    queries
}

/// Mask every maskable token, query the predictor and materialize the
/// surviving mutants.
pub fn generate_predictor_mutants(
    program: &Program,
    predictor: &dyn TokenPredictor,
    k: usize,
    context_limit: usize,
    policy: PredictorPolicy,
) -> Vec<Mutant> {
    let factory = MutantFactory::new(&program.source_text);
    let stream = lex(&program.source_text).expect("program lexes");

    let enclosing_function = |span: (usize, usize)| -> Option<&str> {
        program
            .functions
            .iter()
            .find(|f| span.0 >= f.span.0 && span.1 <= f.span.1)
            .map(|f| f.name.as_str())
    };

    let mut scored: Vec<(Mutant, Score)> = Vec::new();
    for (idx, query) in masked_queries(program, context_limit) {
        let tok = &stream.tokens[idx];
        let Some(function) = enclosing_function(tok.span) else {
            continue;
        };
        let prediction = predictor.predict(&query, k);
        debug_assert!(prediction.candidates.len() <= k);
        for (candidate, score) in prediction.candidates {
            if let Some(m) = factory.build(
                Engine::Predictor,
                "mask_replace",
                function,
                tok.span,
                &[candidate],
            ) {
                scored.push((m, score));
            }
        }
    }

    let deduped = {
        let mut seen = BTreeSet::new();
        scored
            .into_iter()
            .filter(|(m, _)| seen.insert(m.id.clone()))
            .collect::<Vec<_>>()
    };

    let selected: Vec<Mutant> = match policy {
        PredictorPolicy::All => deduped.into_iter().map(|(m, _)| m).collect(),
        PredictorPolicy::OnePerFunction => {
            let mut best: BTreeMap<String, (Mutant, Score)> = BTreeMap::new();
            for (m, s) in deduped {
                match best.get(&m.function) {
                    Some((held, held_score)) => {
                        let better = s > *held_score
                            || (s == *held_score
                                && (m.span.0, m.mutated_tokens.join(" "))
                                    < (held.span.0, held.mutated_tokens.join(" ")));
                        if better {
                            best.insert(m.function.clone(), (m, s));
                        }
                    }
                    None => {
                        best.insert(m.function.clone(), (m, s));
                    }
                }
            }
            // Function declaration order.
            program
                .functions
                .iter()
                .filter_map(|f| best.remove(&f.name).map(|(m, _)| m))
                .collect()
        }
    };
    dedupe_by_id(selected)
}
