//! Canonical re-printer. `parse(print(parse(s)))` must be structurally
//! identical to `parse(s)`; redundant parentheses from the original source
//! are not preserved.

use super::ast::{Expr, FunctionDecl, Program, Stmt, UnaryOp};
use super::parser::prec;

pub fn print_program(program: &Program) -> String {
    let mut out = String::new();
    for (i, f) in program.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_function(&mut out, f);
    }
    out
}

fn print_function(out: &mut String, f: &FunctionDecl) {
    out.push_str(&format!("fn {}({}) {{\n", f.name, f.params.join(", ")));
    for s in &f.body {
        print_stmt(out, s, 1);
    }
    out.push_str("}\n");
}

fn print_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    let pad = "    ".repeat(depth);
    match stmt {
        Stmt::Assign { name, value, .. } => {
            out.push_str(&format!("{pad}{name} = {};\n", expr_str(value)));
        }
        Stmt::Return { value, .. } => {
            out.push_str(&format!("{pad}return {};\n", expr_str(value)));
        }
        Stmt::While { cond, body, .. } => {
            out.push_str(&format!("{pad}while ({}) {{\n", expr_str(cond)));
            for s in body {
                print_stmt(out, s, depth + 1);
            }
            out.push_str(&format!("{pad}}}\n"));
        }
        Stmt::If {
            cond,
            then_block,
            else_block,
            ..
        } => {
            out.push_str(&format!("{pad}if ({}) {{\n", expr_str(cond)));
            for s in then_block {
                print_stmt(out, s, depth + 1);
            }
            if let Some(els) = else_block {
                out.push_str(&format!("{pad}}} else {{\n"));
                for s in els {
                    print_stmt(out, s, depth + 1);
                }
            }
            out.push_str(&format!("{pad}}}\n"));
        }
    }
}

pub fn expr_str(expr: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, expr, 0, false);
    s
}

// `parent_prec` is the binding power of the surrounding operator; a child
// with weaker binding gets parenthesized. Equal precedence only needs parens
// on the right of a left-associative chain.
fn write_expr(out: &mut String, expr: &Expr, parent_prec: u8, is_right: bool) {
    match expr {
        Expr::Int { value, .. } => out.push_str(&value.to_string()),
        Expr::Var { name, .. } => out.push_str(name),
        Expr::Call { name, args, .. } => {
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, 0, false);
            }
            out.push(')');
        }
        Expr::Unary { op, operand, .. } => {
            out.push(match op {
                UnaryOp::Neg => '-',
                UnaryOp::Not => '!',
            });
            if matches!(**operand, Expr::Binary { .. } | Expr::Unary { .. }) {
                out.push('(');
                write_expr(out, operand, 0, false);
                out.push(')');
            } else {
                write_expr(out, operand, 7, false);
            }
        }
        Expr::Binary { op, lhs, rhs, .. } => {
            let my = prec(*op);
            let needs_parens = my < parent_prec || (my == parent_prec && is_right);
            if needs_parens {
                out.push('(');
            }
            write_expr(out, lhs, my, false);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, rhs, my, true);
            if needs_parens {
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::minilang::parse;

    fn roundtrip(src: &str) {
        let once = parse(src).unwrap().to_source();
        let twice = parse(&once).unwrap().to_source();
        assert_eq!(once, twice, "printer not a fixpoint for {src}");
    }

    #[test]
    fn print_parse_fixpoint() {
        roundtrip("fn f(a){return a;}");
        roundtrip("fn f(a,b){ if (a<b) { return a*2+1; } else { return b; } }");
        roundtrip("fn f(a){ while (a>0) { a = a - 1; } return -a; }");
        roundtrip("fn f(a,b){ return (a+b)*(a-b) % 7; }");
        roundtrip("fn f(a){ return !(a == 1 || a == 2) && a < 9; }");
        roundtrip("fn g(x){return x;} fn f(a){ return g(g(a)) - -a; }");
    }

    #[test]
    fn associativity_preserved() {
        // a - (b - c) must keep its parentheses; (a - b) - c must not.
        let p = parse("fn f(a,b,c){return a - (b - c);}").unwrap();
        assert!(p.to_source().contains("a - (b - c)"));
        let q = parse("fn f(a,b,c){return (a - b) - c;}").unwrap();
        assert!(q.to_source().contains("a - b - c"));
    }

    #[test]
    fn redundant_parens_dropped() {
        let p = parse("fn f(a){return ((a));}").unwrap();
        assert!(p.to_source().contains("return a;"));
    }
}
