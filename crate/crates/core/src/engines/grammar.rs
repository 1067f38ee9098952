//! Grammar-based mutant generation: a frozen catalog of 11 operator families
//! applied exhaustively at every applicable site, in source order.
//!
//! The catalog (operator ids are stable artifacts):
//!
//! | operator id               | sites                     | replacements            |
//! |---------------------------|---------------------------|-------------------------|
//! | `relational_replacement`  | `< <= > >= == !=`         | each of the other five  |
//! | `relational_boundary`     | `< <= > >=`               | boundary partner        |
//! | `arithmetic_replacement`  | binary `+ - * / %`        | each of the other four  |
//! | `logical_replacement`     | `&&` `\|\|`               | the other one           |
//! | `condition_negation`      | if/while conditions       | `!(cond)`               |
//! | `remove_conditionals_true`| if/while conditions       | `1 == 1`                |
//! | `remove_conditionals_false`| if/while conditions      | `0 == 1`                |
//! | `literal_mutation`        | integer literals          | n+1, n-1, 0             |
//! | `return_value_zero`       | return statements         | returned expr becomes 0 |
//! | `statement_deletion`      | non-return statements     | statement removed       |
//! | `unary_negation_insertion`| variable/literal operands | operand negated         |
//!
//! The language has no boolean literals, so always-true / always-false
//! conditions are encoded as `1 == 1` and `0 == 1`.

use crate::minilang::{BinaryOp, Expr, Program, Span, Stmt};
use crate::mutant::{dedupe_by_id, Engine, Mutant, MutantFactory};

const RELATIONALS: [BinaryOp; 6] = [
    BinaryOp::Lt,
    BinaryOp::Le,
    BinaryOp::Gt,
    BinaryOp::Ge,
    BinaryOp::Eq,
    BinaryOp::Ne,
];

const ARITHMETICS: [BinaryOp; 5] = [
    BinaryOp::Add,
    BinaryOp::Sub,
    BinaryOp::Mul,
    BinaryOp::Div,
    BinaryOp::Rem,
];

fn boundary_partner(op: BinaryOp) -> Option<BinaryOp> {
    Some(match op {
        BinaryOp::Lt => BinaryOp::Le,
        BinaryOp::Le => BinaryOp::Lt,
        BinaryOp::Gt => BinaryOp::Ge,
        BinaryOp::Ge => BinaryOp::Gt,
        _ => return None,
    })
}

/// Sites collected from one function, each in source order.
#[derive(Default)]
struct Sites {
    relational: Vec<(Span, BinaryOp)>,
    arithmetic: Vec<(Span, BinaryOp)>,
    logical: Vec<(Span, BinaryOp)>,
    /// Condition spans of `if` and `while` statements.
    conditions: Vec<Span>,
    literals: Vec<(Span, i64, String)>,
    /// Returned expression spans (with the literal-zero ones flagged).
    returns: Vec<(Span, bool)>,
    /// Spans of non-return statements, nested included.
    deletable: Vec<Span>,
    /// Variable and literal operand spans.
    operands: Vec<Span>,
}

fn collect(function_body: &[Stmt]) -> Sites {
    let mut sites = Sites::default();
    for stmt in function_body {
        stmt.walk(&mut |s| {
            match s {
                Stmt::If { cond, .. } | Stmt::While { cond, .. } => {
                    sites.conditions.push(cond.span());
                }
                Stmt::Return { value, .. } => {
                    let zero = matches!(value, Expr::Int { value: 0, .. });
                    sites.returns.push((value.span(), zero));
                }
                Stmt::Assign { .. } => {}
            }
            if !s.is_return() {
                sites.deletable.push(s.span());
            }
        });
        stmt.walk_exprs(&mut |e| match e {
            Expr::Binary { op, op_span, .. } => {
                if op.is_relational() {
                    sites.relational.push((*op_span, *op));
                } else if op.is_arithmetic() {
                    sites.arithmetic.push((*op_span, *op));
                } else {
                    sites.logical.push((*op_span, *op));
                }
            }
            Expr::Int { value, span } => {
                sites.literals.push((*span, *value, String::new()));
                sites.operands.push(*span);
            }
            Expr::Var { span, .. } => sites.operands.push(*span),
            _ => {}
        });
    }
    // Source order within each category.
    sites.relational.sort_by_key(|(s, _)| *s);
    sites.arithmetic.sort_by_key(|(s, _)| *s);
    sites.logical.sort_by_key(|(s, _)| *s);
    sites.conditions.sort();
    sites.literals.sort_by_key(|(s, ..)| *s);
    sites.returns.sort_by_key(|(s, _)| *s);
    sites.deletable.sort();
    sites.operands.sort();
    sites
}

/// Apply the full catalog to every applicable site of `program`.
///
/// Deterministic: the same program yields the same mutants in the same
/// order. Candidates that fail to re-parse or that equal the original are
/// discarded.
pub fn generate_grammar_mutants(program: &Program) -> Vec<Mutant> {
    let factory = MutantFactory::new(&program.source_text);
    let src = &program.source_text;
    let mut out = Vec::new();

    for func in &program.functions {
        let sites = collect(&func.body);
        let name = func.name.as_str();
        let mut push = |m: Option<Mutant>| out.extend(m);

        for (span, op) in &sites.relational {
            for repl in RELATIONALS.iter().filter(|r| *r != op) {
                push(factory.build(
                    Engine::Grammar,
                    "relational_replacement",
                    name,
                    *span,
                    &[repl.symbol().to_string()],
                ));
            }
        }
        for (span, op) in &sites.relational {
            if let Some(partner) = boundary_partner(*op) {
                push(factory.build(
                    Engine::Grammar,
                    "relational_boundary",
                    name,
                    *span,
                    &[partner.symbol().to_string()],
                ));
            }
        }
        for (span, op) in &sites.arithmetic {
            for repl in ARITHMETICS.iter().filter(|r| *r != op) {
                push(factory.build(
                    Engine::Grammar,
                    "arithmetic_replacement",
                    name,
                    *span,
                    &[repl.symbol().to_string()],
                ));
            }
        }
        for (span, op) in &sites.logical {
            let repl = if *op == BinaryOp::And { "||" } else { "&&" };
            push(factory.build(
                Engine::Grammar,
                "logical_replacement",
                name,
                *span,
                &[repl.to_string()],
            ));
        }
        for span in &sites.conditions {
            let mut negated = vec!["!".to_string(), "(".to_string()];
            negated.extend(factory.tokens_in(*span));
            negated.push(")".to_string());
            push(factory.build(Engine::Grammar, "condition_negation", name, *span, &negated));
        }
        for span in &sites.conditions {
            push(factory.build(
                Engine::Grammar,
                "remove_conditionals_true",
                name,
                *span,
                &["1".into(), "==".into(), "1".into()],
            ));
        }
        for span in &sites.conditions {
            push(factory.build(
                Engine::Grammar,
                "remove_conditionals_false",
                name,
                *span,
                &["0".into(), "==".into(), "1".into()],
            ));
        }
        for (span, value, _) in &sites.literals {
            for variant in [value.wrapping_add(1), value.wrapping_sub(1), 0] {
                let text = variant.to_string();
                if text == src[span.0..span.1] {
                    continue;
                }
                let tokens: Vec<String> = if variant < 0 {
                    vec!["-".into(), variant.unsigned_abs().to_string()]
                } else {
                    vec![text]
                };
                push(factory.build(Engine::Grammar, "literal_mutation", name, *span, &tokens));
            }
        }
        for (span, is_zero) in &sites.returns {
            if !is_zero {
                push(factory.build(
                    Engine::Grammar,
                    "return_value_zero",
                    name,
                    *span,
                    &["0".into()],
                ));
            }
        }
        for span in &sites.deletable {
            push(factory.build(Engine::Grammar, "statement_deletion", name, *span, &[]));
        }
        for span in &sites.operands {
            let mut tokens = vec!["-".to_string()];
            tokens.extend(factory.tokens_in(*span));
            push(factory.build(
                Engine::Grammar,
                "unary_negation_insertion",
                name,
                *span,
                &tokens,
            ));
        }
    }
    dedupe_by_id(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::parse;

    fn ids(mutants: &[Mutant]) -> Vec<&str> {
        mutants.iter().map(|m| m.operator_id.as_str()).collect()
    }

    #[test]
    fn identity_function_gets_exactly_two_mutants() {
        let p = parse("fn f(a){return a;}").unwrap();
        let ms = generate_grammar_mutants(&p);
        assert_eq!(ms.len(), 2, "{:?}", ids(&ms));
        assert_eq!(ms[0].operator_id, "return_value_zero");
        assert!(ms[0].patched_source.contains("return 0;"));
        assert_eq!(ms[1].operator_id, "unary_negation_insertion");
        assert!(ms[1].patched_source.contains("- a"));
    }

    #[test]
    fn relational_site_produces_five_replacements_and_boundary() {
        let p = parse("fn f(a, b){return a < b;}").unwrap();
        let ms = generate_grammar_mutants(&p);
        let rel: Vec<_> = ms
            .iter()
            .filter(|m| m.operator_id == "relational_replacement")
            .collect();
        assert_eq!(rel.len(), 5);
        assert!(rel.iter().any(|m| m.patched_source.contains("a > b")));
        let boundary: Vec<_> = ms
            .iter()
            .filter(|m| m.operator_id == "relational_boundary")
            .collect();
        assert_eq!(boundary.len(), 1);
        assert!(boundary[0].patched_source.contains("a <= b"));
    }

    #[test]
    fn remove_conditionals_covers_both_polarities() {
        let p = parse("fn f(b, x, y){ if (b != 0) { return x; } return y; }").unwrap();
        let ms = generate_grammar_mutants(&p);
        let tru: Vec<_> = ms
            .iter()
            .filter(|m| m.operator_id == "remove_conditionals_true")
            .collect();
        let fls: Vec<_> = ms
            .iter()
            .filter(|m| m.operator_id == "remove_conditionals_false")
            .collect();
        assert_eq!(tru.len(), 1);
        assert_eq!(fls.len(), 1);
        assert!(tru[0].patched_source.contains("if (1 == 1)"));
        assert!(fls[0].patched_source.contains("if (0 == 1)"));
    }

    #[test]
    fn condition_negation_wraps_whole_condition() {
        let p = parse("fn f(a){ while (a > 0 && a < 9) { a = a - 1; } return a; }").unwrap();
        let ms = generate_grammar_mutants(&p);
        let neg = ms
            .iter()
            .find(|m| m.operator_id == "condition_negation")
            .unwrap();
        assert!(neg.patched_source.contains("while (! ( a > 0 && a < 9 ))"));
        parse(&neg.patched_source).unwrap();
    }

    #[test]
    fn literal_mutation_variants() {
        let p = parse("fn f(a){return a + 5;}").unwrap();
        let ms = generate_grammar_mutants(&p);
        let lits: Vec<_> = ms
            .iter()
            .filter(|m| m.operator_id == "literal_mutation")
            .map(|m| m.mutated_tokens.join(""))
            .collect();
        assert_eq!(lits, vec!["6", "4", "0"]);
    }

    #[test]
    fn zero_literal_skips_zero_variant() {
        let p = parse("fn f(a){return a + 0;}").unwrap();
        let ms = generate_grammar_mutants(&p);
        let lits: Vec<_> = ms
            .iter()
            .filter(|m| m.operator_id == "literal_mutation")
            .map(|m| m.mutated_tokens.join(" "))
            .collect();
        assert_eq!(lits, vec!["1", "- 1"]);
    }

    #[test]
    fn statement_deletion_skips_returns() {
        let p = parse("fn f(a){ a = a + 1; return a; }").unwrap();
        let ms = generate_grammar_mutants(&p);
        let dels: Vec<_> = ms
            .iter()
            .filter(|m| m.operator_id == "statement_deletion")
            .collect();
        assert_eq!(dels.len(), 1);
        assert!(!dels[0].patched_source.contains("a + 1"));
        parse(&dels[0].patched_source).unwrap();
    }

    #[test]
    fn every_mutant_parses_and_differs() {
        let p = parse(
            "fn gcd(a, b){ while (b != 0) { remainder = a % b; if (remainder < b) { a = b; b = remainder; } else { a = remainder; } } return a; }",
        )
        .unwrap();
        let ms = generate_grammar_mutants(&p);
        assert!(ms.len() > 30);
        for m in &ms {
            parse(&m.patched_source).expect("mutant must parse");
            assert_ne!(m.patched_source, p.source_text);
        }
        // Determinism.
        let again = generate_grammar_mutants(&p);
        assert_eq!(ms, again);
    }

    #[test]
    fn ids_unique_within_run() {
        let p = parse("fn f(a, b){ if (a < b && a != 0) { return a * b; } return a - b; }").unwrap();
        let ms = generate_grammar_mutants(&p);
        let mut ids: Vec<_> = ms.iter().map(|m| m.id.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), ms.len());
    }
}
