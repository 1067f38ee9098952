//! Recursive-descent parser producing span-carrying syntax trees.

use thiserror::Error;

use super::ast::{BinaryOp, Expr, FunctionDecl, Program, Span, Stmt, UnaryOp};
use crate::lexing::{lex, LexError, Token, TokenKind};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct SyntaxError {
    pub message: String,
    pub line: usize,
    pub col: usize,
    pub offset: usize,
}

/// Parse a full program. Function names must be unique; at least one
/// function is required.
pub fn parse(source: &str) -> Result<Program, SyntaxError> {
    let stream = lex(source).map_err(|e| lex_to_syntax(source, e))?;
    let mut p = Parser {
        source,
        tokens: &stream.tokens,
        pos: 0,
    };
    let mut functions = Vec::new();
    while !p.at_end() {
        functions.push(p.function()?);
    }
    if functions.is_empty() {
        return Err(p.error_at(0, "empty program"));
    }
    for (i, f) in functions.iter().enumerate() {
        if functions[..i].iter().any(|g| g.name == f.name) {
            return Err(SyntaxError {
                message: format!("duplicate function name `{}`", f.name),
                ..locate(source, f.name_span.0)
            });
        }
    }
    Ok(Program {
        functions,
        source_text: source.to_string(),
    })
}

fn locate(source: &str, offset: usize) -> SyntaxError {
    let mut line = 1;
    let mut col = 1;
    for b in source.as_bytes().iter().take(offset) {
        if *b == b'\n' {
            line += 1;
            col = 1;
        } else {
            col += 1;
        }
    }
    SyntaxError {
        message: String::new(),
        line,
        col,
        offset,
    }
}

fn lex_to_syntax(source: &str, e: LexError) -> SyntaxError {
    let offset = match e {
        LexError::IllegalChar { offset, .. } | LexError::NonAscii { offset } => offset,
    };
    SyntaxError {
        message: e.to_string(),
        ..locate(source, offset)
    }
}

struct Parser<'a> {
    source: &'a str,
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn error_here(&self, message: &str) -> SyntaxError {
        let offset = self
            .peek()
            .map(|t| t.span.0)
            .unwrap_or(self.source.len());
        self.error_at(offset, message)
    }

    fn error_at(&self, offset: usize, message: &str) -> SyntaxError {
        SyntaxError {
            message: message.to_string(),
            ..locate(self.source, offset)
        }
    }

    fn expect_text(&mut self, text: &str) -> Result<&'a Token, SyntaxError> {
        match self.peek() {
            Some(t) if t.text == text => Ok(self.advance().unwrap()),
            Some(t) => Err(self.error_at(t.span.0, &format!("expected `{text}`, found `{}`", t.text))),
            None => Err(self.error_at(self.source.len(), &format!("expected `{text}`, found end of input"))),
        }
    }

    fn expect_ident(&mut self) -> Result<&'a Token, SyntaxError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => Ok(self.advance().unwrap()),
            Some(t) => Err(self.error_at(t.span.0, &format!("expected identifier, found `{}`", t.text))),
            None => Err(self.error_at(self.source.len(), "expected identifier, found end of input")),
        }
    }

    fn function(&mut self) -> Result<FunctionDecl, SyntaxError> {
        let fn_tok = self.expect_text("fn")?;
        let name_tok = self.expect_ident()?;
        self.expect_text("(")?;
        let mut params = Vec::new();
        if self.peek().map(|t| t.text.as_str()) != Some(")") {
            loop {
                let p = self.expect_ident()?;
                if params.contains(&p.text) {
                    return Err(self.error_at(p.span.0, &format!("duplicate parameter `{}`", p.text)));
                }
                params.push(p.text.clone());
                if self.peek().map(|t| t.text.as_str()) == Some(",") {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect_text(")")?;
        let (body, block_span) = self.block()?;
        Ok(FunctionDecl {
            name: name_tok.text.clone(),
            name_span: name_tok.span,
            params,
            body,
            span: (fn_tok.span.0, block_span.1),
        })
    }

    fn block(&mut self) -> Result<(Vec<Stmt>, Span), SyntaxError> {
        let open = self.expect_text("{")?;
        let mut stmts = Vec::new();
        loop {
            match self.peek() {
                Some(t) if t.text == "}" => {
                    let close = self.advance().unwrap();
                    return Ok((stmts, (open.span.0, close.span.1)));
                }
                Some(_) => stmts.push(self.statement()?),
                None => return Err(self.error_at(self.source.len(), "expected `}`, found end of input")),
            }
        }
    }

    fn statement(&mut self) -> Result<Stmt, SyntaxError> {
        let tok = self.peek().ok_or_else(|| self.error_here("expected statement"))?;
        match (tok.kind, tok.text.as_str()) {
            (TokenKind::Keyword, "if") => self.if_statement(),
            (TokenKind::Keyword, "while") => {
                let kw = self.advance().unwrap();
                self.expect_text("(")?;
                let cond = self.expression()?;
                self.expect_text(")")?;
                let (body, body_span) = self.block()?;
                Ok(Stmt::While {
                    cond,
                    body,
                    span: (kw.span.0, body_span.1),
                })
            }
            (TokenKind::Keyword, "return") => {
                let kw = self.advance().unwrap();
                let value = self.expression()?;
                let semi = self.expect_text(";")?;
                Ok(Stmt::Return {
                    value,
                    span: (kw.span.0, semi.span.1),
                })
            }
            (TokenKind::Ident, _) => {
                let name = self.advance().unwrap();
                self.expect_text("=")?;
                let value = self.expression()?;
                let semi = self.expect_text(";")?;
                Ok(Stmt::Assign {
                    name: name.text.clone(),
                    name_span: name.span,
                    value,
                    span: (name.span.0, semi.span.1),
                })
            }
            _ => Err(self.error_at(tok.span.0, &format!("expected statement, found `{}`", tok.text))),
        }
    }

    fn if_statement(&mut self) -> Result<Stmt, SyntaxError> {
        let kw = self.expect_text("if")?;
        self.expect_text("(")?;
        let cond = self.expression()?;
        self.expect_text(")")?;
        let (then_block, then_span) = self.block()?;
        let mut else_block = None;
        let mut else_span = None;
        let mut end = then_span.1;
        if self.peek().map(|t| t.text.as_str()) == Some("else") {
            let else_kw = self.advance().unwrap();
            let (els, els_span) = self.block()?;
            end = els_span.1;
            else_block = Some(els);
            else_span = Some((else_kw.span.0, els_span.1));
        }
        Ok(Stmt::If {
            cond,
            then_block,
            then_span,
            else_block,
            else_span,
            span: (kw.span.0, end),
        })
    }

    fn expression(&mut self) -> Result<Expr, SyntaxError> {
        self.binary(1)
    }

    // Precedence-climbing over left-associative binary operators.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, SyntaxError> {
        let mut lhs = if min_prec > 6 {
            self.unary()?
        } else {
            self.binary(min_prec + 1)?
        };
        loop {
            let op = match self.peek() {
                Some(t) if t.kind == TokenKind::Operator => match binop_of(&t.text) {
                    Some(op) if prec(op) == min_prec => op,
                    _ => break,
                },
                _ => break,
            };
            let op_tok = self.advance().unwrap();
            let rhs = if min_prec > 6 {
                self.unary()?
            } else {
                self.binary(min_prec + 1)?
            };
            let span = (lhs.span().0, rhs.span().1);
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                op_span: op_tok.span,
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, SyntaxError> {
        if let Some(t) = self.peek() {
            if t.kind == TokenKind::Operator && (t.text == "-" || t.text == "!") {
                let op_tok = self.advance().unwrap();
                let op = if op_tok.text == "-" { UnaryOp::Neg } else { UnaryOp::Not };
                let operand = self.unary()?;
                let span = (op_tok.span.0, operand.span().1);
                return Ok(Expr::Unary {
                    op,
                    operand: Box::new(operand),
                    span,
                });
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        let tok = self.peek().ok_or_else(|| self.error_here("expected expression, found end of input"))?;
        match (tok.kind, tok.text.as_str()) {
            (TokenKind::IntLit, _) => {
                let t = self.advance().unwrap();
                let value: i64 = t
                    .text
                    .parse()
                    .map_err(|_| self.error_at(t.span.0, "integer literal out of range"))?;
                Ok(Expr::Int { value, span: t.span })
            }
            (TokenKind::Ident, _) => {
                let t = self.advance().unwrap();
                if self.peek().map(|n| n.text.as_str()) == Some("(") {
                    self.advance();
                    let mut args = Vec::new();
                    if self.peek().map(|n| n.text.as_str()) != Some(")") {
                        loop {
                            args.push(self.expression()?);
                            if self.peek().map(|n| n.text.as_str()) == Some(",") {
                                self.advance();
                            } else {
                                break;
                            }
                        }
                    }
                    let close = self.expect_text(")")?;
                    Ok(Expr::Call {
                        name: t.text.clone(),
                        name_span: t.span,
                        args,
                        span: (t.span.0, close.span.1),
                    })
                } else {
                    Ok(Expr::Var {
                        name: t.text.clone(),
                        span: t.span,
                    })
                }
            }
            (TokenKind::Punct, "(") => {
                self.advance();
                let inner = self.expression()?;
                self.expect_text(")")?;
                Ok(inner)
            }
            _ => Err(self.error_at(tok.span.0, &format!("expected expression, found `{}`", tok.text))),
        }
    }
}

fn binop_of(text: &str) -> Option<BinaryOp> {
    Some(match text {
        "||" => BinaryOp::Or,
        "&&" => BinaryOp::And,
        "==" => BinaryOp::Eq,
        "!=" => BinaryOp::Ne,
        "<" => BinaryOp::Lt,
        "<=" => BinaryOp::Le,
        ">" => BinaryOp::Gt,
        ">=" => BinaryOp::Ge,
        "+" => BinaryOp::Add,
        "-" => BinaryOp::Sub,
        "*" => BinaryOp::Mul,
        "/" => BinaryOp::Div,
        "%" => BinaryOp::Rem,
        _ => return None,
    })
}

pub(super) fn prec(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Or => 1,
        BinaryOp::And => 2,
        BinaryOp::Eq | BinaryOp::Ne => 3,
        BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
        BinaryOp::Add | BinaryOp::Sub => 5,
        BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 6,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program() {
        let p = parse("fn f(a){return a;}").unwrap();
        assert_eq!(p.functions.len(), 1);
        assert_eq!(p.functions[0].all_statements().len(), 1);
    }

    #[test]
    fn truncated_input_errors_at_end() {
        let err = parse("fn f(a){return a <").unwrap_err();
        assert!(err.message.contains("end of input"), "{err}");
        assert_eq!(err.offset, "fn f(a){return a <".len());
    }

    #[test]
    fn reports_line_and_column() {
        let err = parse("fn f(a) {\n  return 1 +;\n}").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.col > 1);
    }

    #[test]
    fn duplicate_function_names_rejected() {
        assert!(parse("fn f(a){return a;} fn f(b){return b;}").is_err());
    }

    #[test]
    fn duplicate_params_rejected() {
        assert!(parse("fn f(a, a){return a;}").is_err());
    }

    #[test]
    fn precedence_shapes_tree() {
        let p = parse("fn f(a, b){return a + b * 2 < 10 && b > 0;}").unwrap();
        let Stmt::Return { value, .. } = &p.functions[0].body[0] else {
            panic!("expected return");
        };
        let Expr::Binary { op, .. } = value else {
            panic!("expected binary");
        };
        assert_eq!(*op, BinaryOp::And);
    }

    #[test]
    fn parens_group_expressions() {
        let p = parse("fn f(a, b){return (a + b) * 2;}").unwrap();
        let Stmt::Return { value, .. } = &p.functions[0].body[0] else {
            panic!("expected return");
        };
        let Expr::Binary { op, lhs, .. } = value else {
            panic!("expected binary");
        };
        assert_eq!(*op, BinaryOp::Mul);
        assert!(matches!(**lhs, Expr::Binary { op: BinaryOp::Add, .. }));
    }

    #[test]
    fn else_requires_block() {
        assert!(parse("fn f(a){if (a > 0) { return 1; } else return 0;}").is_err());
    }

    #[test]
    fn call_arguments() {
        let p = parse("fn g(x, y){return x - y;} fn f(a){return g(a, 2);}").unwrap();
        let Stmt::Return { value, .. } = &p.functions[1].body[0] else {
            panic!("expected return");
        };
        let Expr::Call { name, args, .. } = value else {
            panic!("expected call");
        };
        assert_eq!(name, "g");
        assert_eq!(args.len(), 2);
    }
}
