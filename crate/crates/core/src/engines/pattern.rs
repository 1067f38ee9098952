//! Pattern-based seeding: rank likely-faulty locations from a bug-report
//! text with TF-IDF cosine, then apply inverted fix-patterns at those
//! locations until a cap is reached.
//!
//! Locations are the top-level statements of each function. A statement's
//! "document" is the identifier/keyword multiset of its whole subtree, with
//! identifiers split on underscores and case boundaries. The pattern catalog
//! is frozen (ids in [`PATTERN_CATALOG`]); patterns that inspect expressions
//! search the full statement subtree, patterns that restructure statements
//! act on the located statement itself.

use std::collections::BTreeMap;

use crate::lexing::TokenKind;
use crate::minilang::{Expr, FunctionDecl, Program, Span, Stmt};
use crate::mutant::{dedupe_by_id, Engine, Mutant, MutantFactory};
use crate::Score;

/// One ranked location.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationScore {
    pub function: String,
    /// Index into the function's top-level statement list.
    pub statement_index: usize,
    pub score: Score,
}

/// Locations sorted by score descending, ties by (function name, statement
/// index) ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationRanking {
    pub entries: Vec<LocationScore>,
}

/// Split an identifier on underscores and lowercase/uppercase boundaries;
/// lowercase the parts. `gcd_remainder` -> [gcd, remainder],
/// `maxValue` -> [max, value].
pub fn split_identifier(ident: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for chunk in ident.split('_') {
        if chunk.is_empty() {
            continue;
        }
        let mut current = String::new();
        let mut prev_lower = false;
        for c in chunk.chars() {
            if c.is_ascii_uppercase() && prev_lower {
                parts.push(current.to_ascii_lowercase());
                current = String::new();
            }
            prev_lower = c.is_ascii_lowercase() || c.is_ascii_digit();
            current.push(c);
        }
        if !current.is_empty() {
            parts.push(current.to_ascii_lowercase());
        }
    }
    parts
}

/// Words of a free-text report, normalized the same way as identifiers.
pub fn report_terms(report: &str) -> BTreeMap<String, usize> {
    let mut terms = BTreeMap::new();
    let mut word = String::new();
    for c in report.chars().chain(std::iter::once(' ')) {
        if c.is_ascii_alphanumeric() || c == '_' {
            word.push(c);
        } else if !word.is_empty() {
            for part in split_identifier(&word) {
                *terms.entry(part).or_insert(0) += 1;
            }
            word.clear();
        }
    }
    terms
}

/// Identifier/keyword multiset of a statement subtree.
fn statement_terms(factory: &MutantFactory, span: Span) -> BTreeMap<String, usize> {
    let mut terms = BTreeMap::new();
    let stream = crate::lexing::lex(factory.source()).expect("source lexes");
    for tok in stream.in_span(span.0, span.1) {
        match tok.kind {
            TokenKind::Ident => {
                for part in split_identifier(&tok.text) {
                    *terms.entry(part).or_insert(0) += 1;
                }
            }
            TokenKind::Keyword => *terms.entry(tok.text.clone()).or_insert(0) += 1,
            _ => {}
        }
    }
    terms
}

fn cosine(a: &BTreeMap<String, Score>, b: &BTreeMap<String, Score>) -> Score {
    let dot: Score = a
        .iter()
        .filter_map(|(t, w)| b.get(t).map(|v| w * v))
        .sum();
    if dot == 0.0 {
        return 0.0;
    }
    let na: Score = a.values().map(|w| w * w).sum::<Score>().sqrt();
    let nb: Score = b.values().map(|w| w * w).sum::<Score>().sqrt();
    dot / (na * nb)
}

/// Score every top-level statement of `program` against `bug_report` by
/// TF-IDF cosine. Statements with no term overlap score 0.
pub fn localize(program: &Program, bug_report: &str) -> LocalizationRanking {
    assert!(!bug_report.trim().is_empty(), "bug report must be non-empty");
    let factory = MutantFactory::new(&program.source_text);

    // Documents: (function, index, term multiset).
    let mut docs = Vec::new();
    for f in &program.functions {
        for (i, stmt) in f.body.iter().enumerate() {
            docs.push((f.name.clone(), i, statement_terms(&factory, stmt.span())));
        }
    }
    let n = docs.len() as Score;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, _, terms) in &docs {
        for term in terms.keys() {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    // Smoothed idf; defined (and positive) even for terms absent from every
    // document.
    let idf = |term: &str| -> Score {
        let d = df.get(term).copied().unwrap_or(0) as Score;
        (1.0 + n / (1.0 + d)).ln()
    };
    let weigh = |terms: &BTreeMap<String, usize>| -> BTreeMap<String, Score> {
        terms
            .iter()
            .map(|(t, c)| (t.clone(), *c as Score * idf(t)))
            .collect()
    };

    let query = weigh(&report_terms(bug_report));
    let mut entries: Vec<LocationScore> = docs
        .iter()
        .map(|(function, index, terms)| LocationScore {
            function: function.clone(),
            statement_index: *index,
            score: cosine(&query, &weigh(terms)),
        })
        .collect();
    entries.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.function.cmp(&b.function))
            .then_with(|| a.statement_index.cmp(&b.statement_index))
    });
    LocalizationRanking { entries }
}

/// Frozen pattern catalog, in application order.
pub const PATTERN_CATALOG: [&str; 12] = [
    "negate_condition",
    "remove_guard",
    "off_by_one",
    "swap_call_args",
    "replace_variable",
    "delete_statement",
    "widen_narrow_relational",
    "replace_literal",
    "force_early_return",
    "drop_else",
    "duplicate_statement",
    "swap_logical",
];

struct Draft {
    span: Span,
    replacement: Vec<String>,
}

fn src_tokens(factory: &MutantFactory, span: Span) -> Vec<String> {
    factory.tokens_in(span)
}

/// All applications of `pattern` within the located statement, in source
/// order.
fn apply_pattern(
    pattern: &str,
    stmt: &Stmt,
    func: &FunctionDecl,
    factory: &MutantFactory,
) -> Vec<Draft> {
    let mut drafts = Vec::new();
    match pattern {
        "negate_condition" => stmt.walk(&mut |s| {
            if let Stmt::If { cond, .. } | Stmt::While { cond, .. } = s {
                let mut repl = vec!["!".to_string(), "(".to_string()];
                repl.extend(src_tokens(factory, cond.span()));
                repl.push(")".to_string());
                drafts.push(Draft {
                    span: cond.span(),
                    replacement: repl,
                });
            }
        }),
        "remove_guard" => stmt.walk(&mut |s| {
            if let Stmt::If {
                then_block,
                else_block: None,
                span,
                ..
            } = s
            {
                let repl = match (then_block.first(), then_block.last()) {
                    (Some(first), Some(last)) => {
                        src_tokens(factory, (first.span().0, last.span().1))
                    }
                    _ => Vec::new(),
                };
                drafts.push(Draft {
                    span: *span,
                    replacement: repl,
                });
            }
        }),
        "off_by_one" => stmt.walk_exprs(&mut |e| {
            if let Expr::Binary { op, rhs, .. } = e {
                if matches!(
                    op,
                    crate::minilang::BinaryOp::Lt
                        | crate::minilang::BinaryOp::Le
                        | crate::minilang::BinaryOp::Gt
                        | crate::minilang::BinaryOp::Ge
                ) {
                    for delta in ["+", "-"] {
                        let mut repl = src_tokens(factory, rhs.span());
                        repl.push(delta.to_string());
                        repl.push("1".to_string());
                        drafts.push(Draft {
                            span: rhs.span(),
                            replacement: repl,
                        });
                    }
                }
            }
        }),
        "swap_call_args" => stmt.walk_exprs(&mut |e| {
            if let Expr::Call { args, .. } = e {
                for pair in args.windows(2) {
                    let (a, b) = (&pair[0], &pair[1]);
                    let mut repl = src_tokens(factory, b.span());
                    repl.push(",".to_string());
                    repl.extend(src_tokens(factory, a.span()));
                    drafts.push(Draft {
                        span: (a.span().0, b.span().1),
                        replacement: repl,
                    });
                }
            }
        }),
        "replace_variable" => {
            let vars = func.in_scope_variables();
            stmt.walk_exprs(&mut |e| {
                if let Expr::Var { name, span } = e {
                    for other in vars.iter().filter(|v| *v != name) {
                        drafts.push(Draft {
                            span: *span,
                            replacement: vec![other.clone()],
                        });
                    }
                }
            });
        }
        "delete_statement" => {
            if !stmt.is_return() {
                drafts.push(Draft {
                    span: stmt.span(),
                    replacement: Vec::new(),
                });
            }
        }
        "widen_narrow_relational" => stmt.walk_exprs(&mut |e| {
            if let Expr::Binary { op, op_span, .. } = e {
                let repl = match op {
                    crate::minilang::BinaryOp::Lt => "<=",
                    crate::minilang::BinaryOp::Le => "<",
                    crate::minilang::BinaryOp::Gt => ">=",
                    crate::minilang::BinaryOp::Ge => ">",
                    _ => return,
                };
                drafts.push(Draft {
                    span: *op_span,
                    replacement: vec![repl.to_string()],
                });
            }
        }),
        "replace_literal" => stmt.walk_exprs(&mut |e| {
            if let Expr::Int { span, .. } = e {
                let original = &factory.source()[span.0..span.1];
                for variant in ["0", "1", "-1"] {
                    if *variant == *original {
                        continue;
                    }
                    let repl: Vec<String> = if let Some(stripped) = variant.strip_prefix('-') {
                        vec!["-".to_string(), stripped.to_string()]
                    } else {
                        vec![variant.to_string()]
                    };
                    drafts.push(Draft {
                        span: *span,
                        replacement: repl,
                    });
                }
            }
        }),
        "force_early_return" => {
            let mut repl = vec!["return".to_string(), "0".to_string(), ";".to_string()];
            repl.extend(src_tokens(factory, stmt.span()));
            drafts.push(Draft {
                span: stmt.span(),
                replacement: repl,
            });
        }
        "drop_else" => stmt.walk(&mut |s| {
            if let Stmt::If {
                else_span: Some(espan),
                then_span,
                ..
            } = s
            {
                // Remove from the end of the then-block through the else.
                drafts.push(Draft {
                    span: (then_span.1, espan.1),
                    replacement: Vec::new(),
                });
            }
        }),
        "duplicate_statement" => {
            if !stmt.is_return() {
                let tokens = src_tokens(factory, stmt.span());
                let mut repl = tokens.clone();
                repl.extend(tokens);
                drafts.push(Draft {
                    span: stmt.span(),
                    replacement: repl,
                });
            }
        }
        "swap_logical" => stmt.walk_exprs(&mut |e| {
            if let Expr::Binary { op, op_span, .. } = e {
                let repl = match op {
                    crate::minilang::BinaryOp::And => "||",
                    crate::minilang::BinaryOp::Or => "&&",
                    _ => return,
                };
                drafts.push(Draft {
                    span: *op_span,
                    replacement: vec![repl.to_string()],
                });
            }
        }),
        other => unreachable!("unknown pattern {other}"),
    }
    drafts.sort_by_key(|d| d.span);
    drafts
}

/// Walk locations in ranking order and apply every matching pattern, up to
/// `cap` emitted mutants. `scope_filter`, when present, restricts locations
/// to the named functions.
pub fn generate_pattern_mutants(
    program: &Program,
    ranking: &LocalizationRanking,
    cap: usize,
    scope_filter: Option<&std::collections::BTreeSet<String>>,
) -> Vec<Mutant> {
    assert!(cap >= 1, "cap must be at least 1");
    let factory = MutantFactory::new(&program.source_text);
    let mut out: Vec<Mutant> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();

    'locations: for loc in &ranking.entries {
        if let Some(filter) = scope_filter {
            if !filter.contains(&loc.function) {
                continue;
            }
        }
        let func = program
            .function(&loc.function)
            .expect("ranking references existing function");
        let stmt = &func.body[loc.statement_index];
        for pattern in PATTERN_CATALOG {
            for draft in apply_pattern(pattern, stmt, func, &factory) {
                let built = factory.build(
                    Engine::Pattern,
                    pattern,
                    &loc.function,
                    draft.span,
                    &draft.replacement,
                );
                if let Some(m) = built {
                    if seen.insert(m.id.clone()) {
                        out.push(m);
                        if out.len() == cap {
                            break 'locations;
                        }
                    }
                }
            }
        }
    }
    dedupe_by_id(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;

    const GCD: &str = "fn gcd(a, b) {
    while (b != 0) {
        remainder = a % b;
        if (remainder < b) {
            a = b;
            b = remainder;
        } else {
            a = remainder;
        }
    }
    return a;
}
";

    #[test]
    fn identifier_splitting() {
        assert_eq!(split_identifier("gcd_remainder"), vec!["gcd", "remainder"]);
        assert_eq!(split_identifier("maxValue"), vec!["max", "value"]);
        assert_eq!(split_identifier("x1"), vec!["x1"]);
        assert_eq!(split_identifier("HTTPServer"), vec!["httpserver"]);
    }

    #[test]
    fn gcd_report_ranks_while_loop_first() {
        let p = parse(GCD).unwrap();
        let ranking = localize(&p, "gcd loop remainder");
        let top = &ranking.entries[0];
        assert_eq!(top.function, "gcd");
        assert_eq!(top.statement_index, 0, "while statement must rank first");
        assert!(top.score > 0.0);
        // The only other top-level statement (`return a;`) has no overlap.
        assert_eq!(ranking.entries[1].score, 0.0);
    }

    #[test]
    fn zero_overlap_gives_all_zero_scores_tiebreak_order() {
        let p = parse("fn f(a){ a = a + 1; return a; } fn e(b){ return b; }").unwrap();
        let ranking = localize(&p, "quaternion flux capacitor");
        assert!(ranking.entries.iter().all(|e| e.score == 0.0));
        let order: Vec<_> = ranking
            .entries
            .iter()
            .map(|e| (e.function.clone(), e.statement_index))
            .collect();
        assert_eq!(
            order,
            vec![
                ("e".to_string(), 0),
                ("f".to_string(), 0),
                ("f".to_string(), 1)
            ]
        );
    }

    #[test]
    fn exact_identifier_multiset_scores_one() {
        let p = parse("fn f(alpha, beta){ gamma = alpha + beta; return gamma; }").unwrap();
        let ranking = localize(&p, "gamma alpha beta");
        let top = &ranking.entries[0];
        assert_eq!(top.statement_index, 0);
        assert!((top.score - 1.0).abs() < 1e-12, "score = {}", top.score);
    }

    #[test]
    fn cap_limits_output_exactly() {
        let p = parse(GCD).unwrap();
        let ranking = localize(&p, "gcd loop remainder");
        let all = generate_pattern_mutants(&p, &ranking, 100, None);
        assert!(all.len() > 5);
        let one = generate_pattern_mutants(&p, &ranking, 1, None);
        assert_eq!(one.len(), 1);
        // Highest-ranked location, first catalog pattern that applies there.
        assert_eq!(one[0].id, all[0].id);
        for cap in [2, 3, all.len()] {
            assert_eq!(generate_pattern_mutants(&p, &ranking, cap, None).len(), cap);
        }
    }

    #[test]
    fn scope_filter_restricts_functions() {
        let src = "fn gcd(a, b){ while (b != 0) { t = a % b; a = b; b = t; } return a; } fn other(x){ return x + 1; }";
        let p = parse(src).unwrap();
        let ranking = localize(&p, "gcd remainder loop");
        let filter: std::collections::BTreeSet<String> = ["gcd".to_string()].into();
        let ms = generate_pattern_mutants(&p, &ranking, 100, Some(&filter));
        assert!(!ms.is_empty());
        assert!(ms.iter().all(|m| m.function == "gcd"));
    }

    #[test]
    fn deterministic_order() {
        let p = parse(GCD).unwrap();
        let ranking = localize(&p, "gcd loop remainder");
        let a = generate_pattern_mutants(&p, &ranking, 50, None);
        let b = generate_pattern_mutants(&p, &ranking, 50, None);
        assert_eq!(a, b);
    }

    #[test]
    fn remove_guard_unwraps_then_block() {
        let src = "fn ratio(a, b){ r = 0; if (b != 0) { r = a / b; } return r; }";
        let p = parse(src).unwrap();
        let ranking = localize(&p, "zero guard dropped before division");
        let ms = generate_pattern_mutants(&p, &ranking, 200, None);
        let guard = ms.iter().find(|m| m.operator_id == "remove_guard").unwrap();
        assert!(!guard.patched_source.contains("if"));
        assert!(guard.patched_source.contains("r = a / b"));
        parse(&guard.patched_source).unwrap();
    }

    #[test]
    fn drop_else_keeps_then_branch() {
        let src = "fn f(a, b){ if (a > b) { return a - b; } else { return b - a; } }";
        let p = parse(src).unwrap();
        let ranking = localize(&p, "difference negative branch");
        let ms = generate_pattern_mutants(&p, &ranking, 200, None);
        let dropped = ms.iter().find(|m| m.operator_id == "drop_else").unwrap();
        assert!(!dropped.patched_source.contains("else"));
        parse(&dropped.patched_source).unwrap();
    }

    #[test]
    fn swap_call_args_swaps_adjacent_pair() {
        let src = "fn sub(x, y){ return x - y; } fn f(a, b){ return sub(a, b); }";
        let p = parse(src).unwrap();
        let ranking = localize(&p, "subtraction arguments reversed");
        let ms = generate_pattern_mutants(&p, &ranking, 200, None);
        let swap = ms.iter().find(|m| m.operator_id == "swap_call_args").unwrap();
        assert!(swap.patched_source.contains("sub(b , a)") || swap.patched_source.contains("b , a"));
        parse(&swap.patched_source).unwrap();
    }
}
