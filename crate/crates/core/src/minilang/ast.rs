//! Syntax tree with byte spans back into the source text. Spans are what
//! lets the mutation engines patch source at token boundaries.

/// Half-open byte range into the source.
pub type Span = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(
            self,
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem
        )
    }

    pub fn is_relational(self) -> bool {
        matches!(
            self,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge | BinaryOp::Eq | BinaryOp::Ne
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinaryOp::And | BinaryOp::Or)
    }
}

#[derive(Debug, Clone)]
pub enum Expr {
    Int {
        value: i64,
        span: Span,
    },
    Var {
        name: String,
        span: Span,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
        span: Span,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        /// Span of the operator token itself.
        op_span: Span,
        span: Span,
    },
    Call {
        name: String,
        name_span: Span,
        args: Vec<Expr>,
        span: Span,
    },
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Int { span, .. }
            | Expr::Var { span, .. }
            | Expr::Unary { span, .. }
            | Expr::Binary { span, .. }
            | Expr::Call { span, .. } => *span,
        }
    }

    /// Pre-order walk over this expression and its children.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Expr)) {
        visit(self);
        match self {
            Expr::Int { .. } | Expr::Var { .. } => {}
            Expr::Unary { operand, .. } => operand.walk(visit),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.walk(visit);
                rhs.walk(visit);
            }
            Expr::Call { args, .. } => {
                for a in args {
                    a.walk(visit);
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Assign {
        name: String,
        name_span: Span,
        value: Expr,
        span: Span,
    },
    If {
        cond: Expr,
        then_block: Vec<Stmt>,
        /// Span of the then block including braces.
        then_span: Span,
        else_block: Option<Vec<Stmt>>,
        /// Span from the `else` keyword through its closing brace.
        else_span: Option<Span>,
        span: Span,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
        span: Span,
    },
    Return {
        value: Expr,
        span: Span,
    },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Assign { span, .. }
            | Stmt::If { span, .. }
            | Stmt::While { span, .. }
            | Stmt::Return { span, .. } => *span,
        }
    }

    pub fn is_return(&self) -> bool {
        matches!(self, Stmt::Return { .. })
    }

    /// Pre-order walk over this statement and every nested statement.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Stmt)) {
        visit(self);
        match self {
            Stmt::Assign { .. } | Stmt::Return { .. } => {}
            Stmt::If {
                then_block,
                else_block,
                ..
            } => {
                for s in then_block {
                    s.walk(visit);
                }
                if let Some(els) = else_block {
                    for s in els {
                        s.walk(visit);
                    }
                }
            }
            Stmt::While { body, .. } => {
                for s in body {
                    s.walk(visit);
                }
            }
        }
    }

    /// Every expression directly owned by this statement subtree, pre-order.
    pub fn walk_exprs<'a>(&'a self, visit: &mut impl FnMut(&'a Expr)) {
        self.walk(&mut |s| match s {
            Stmt::Assign { value, .. } | Stmt::Return { value, .. } => value.walk(visit),
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => cond.walk(visit),
        });
    }
}

#[derive(Debug, Clone)]
pub struct FunctionDecl {
    pub name: String,
    pub name_span: Span,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

impl FunctionDecl {
    /// Flat view of every statement in the function, pre-order.
    pub fn all_statements(&self) -> Vec<&Stmt> {
        let mut out = Vec::new();
        for s in &self.body {
            s.walk(&mut |st| out.push(st));
        }
        out
    }

    /// Variables that exist anywhere in the function: parameters plus every
    /// assignment target, in first-appearance order.
    pub fn in_scope_variables(&self) -> Vec<String> {
        let mut vars: Vec<String> = self.params.clone();
        for s in self.all_statements() {
            if let Stmt::Assign { name, .. } = s {
                if !vars.contains(name) {
                    vars.push(name.clone());
                }
            }
        }
        vars
    }
}

#[derive(Debug, Clone)]
pub struct Program {
    pub functions: Vec<FunctionDecl>,
    pub source_text: String,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDecl> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Canonical re-print of the parsed structure.
    pub fn to_source(&self) -> String {
        super::printer::print_program(self)
    }

    /// Total number of statements, nested included.
    pub fn statement_count(&self) -> usize {
        self.functions
            .iter()
            .map(|f| f.all_statements().len())
            .sum()
    }
}
