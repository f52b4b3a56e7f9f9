//! Abstract syntax tree and concrete-grammar front end for Crystality
//! contracts.
//!
//! The grammar is the contract / state-variable / function shape with
//! `@address` / `@engine` / `@global` scope annotations, statement forms
//! (declaration, skip, assignment, relay call, return, function call,
//! sequencing, conditional, loop) and expressions extended with literals,
//! infix operators and parentheses so that realistic token code such as
//! `amount <= balance` is expressible.

mod lexer;
mod parser;
mod pretty;

pub use parser::{parse_contract, ParseError, MAX_NESTING_DEPTH, MAX_SOURCE_LEN};
pub use pretty::pretty_print;

use serde::Serialize;

use crate::store::{TypeName, TypedValue};

/// Source position (1-based line and column).
///
/// Spans are diagnostics metadata, not program structure: every span
/// compares equal to every other span, so parse/pretty round trips and
/// synthesized code compare structurally.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Storage/execution scope annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScopeTag {
    Address,
    Engine,
    Global,
}

impl std::fmt::Display for ScopeTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScopeTag::Address => "@address",
            ScopeTag::Engine => "@engine",
            ScopeTag::Global => "@global",
        })
    }
}

/// A whole contract: name, state variables, functions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContractDecl {
    pub name: String,
    pub state_vars: Vec<StateVarDecl>,
    pub functions: Vec<FuncDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateVarDecl {
    pub type_name: TypeName,
    pub scope: ScopeTag,
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FuncDecl {
    pub name: String,
    pub params: Vec<(TypeName, String)>,
    pub scope: ScopeTag,
    pub return_type: Option<TypeName>,
    pub body: Stmt,
    pub span: Span,
}

/// Statement tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Stmt {
    Prim(PStmt),
    Seq(Box<Stmt>, Box<Stmt>),
    If(Exp, Box<Stmt>, Box<Stmt>, Span),
    While(Exp, Box<Stmt>, Span),
}

impl Stmt {
    /// Right-fold a non-empty statement list into the canonical `Seq` shape
    /// the parser produces.
    pub fn seq_of(mut stmts: Vec<Stmt>) -> Stmt {
        let last = stmts.pop().expect("seq_of needs at least one statement");
        stmts
            .into_iter()
            .rev()
            .fold(last, |acc, s| Stmt::Seq(Box::new(s), Box::new(acc)))
    }

    pub fn skip() -> Stmt {
        Stmt::Prim(PStmt::Skip(Span::default()))
    }
}

impl From<PStmt> for Stmt {
    fn from(p: PStmt) -> Stmt {
        Stmt::Prim(p)
    }
}

/// Primitive statements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum PStmt {
    TempDecl(TypeName, String, Span),
    Skip(Span),
    Assign(String, Exp, Span),
    Relay(RelayTargetExpr, String, Vec<Exp>, Span),
    Return(Exp, Span),
    Call(String, Vec<Exp>, Span),
}

impl PStmt {
    pub fn span(&self) -> Span {
        match self {
            PStmt::TempDecl(_, _, s)
            | PStmt::Skip(s)
            | PStmt::Assign(_, _, s)
            | PStmt::Relay(_, _, _, s)
            | PStmt::Return(_, s)
            | PStmt::Call(_, _, s) => *s,
        }
    }
}

/// Relay destination: a computed address, every engine, or the global scope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RelayTargetExpr {
    AtExp(Exp),
    AtEngines,
    AtGlobal,
}

/// Expression node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exp {
    pub kind: ExpKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ExpKind {
    Ident(String),
    Call(String, Vec<Exp>),
    Lit(TypedValue),
    Binop(BinOp, Box<Exp>, Box<Exp>),
}

impl Exp {
    pub fn ident(name: impl Into<String>) -> Exp {
        Exp {
            kind: ExpKind::Ident(name.into()),
            span: Span::default(),
        }
    }

    pub fn lit(v: TypedValue) -> Exp {
        Exp {
            kind: ExpKind::Lit(v),
            span: Span::default(),
        }
    }

    pub fn binop(op: BinOp, lhs: Exp, rhs: Exp) -> Exp {
        Exp {
            kind: ExpKind::Binop(op, Box::new(lhs), Box::new(rhs)),
            span: Span::default(),
        }
    }

    pub fn call(name: impl Into<String>, args: Vec<Exp>) -> Exp {
        Exp {
            kind: ExpKind::Call(name.into(), args),
            span: Span::default(),
        }
    }
}

/// Built-in infix operators, distinct from user function calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Le,
    Lt,
    Eq,
    Ge,
    Gt,
    Ne,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Le => "<=",
            BinOp::Lt => "<",
            BinOp::Eq => "==",
            BinOp::Ge => ">=",
            BinOp::Gt => ">",
            BinOp::Ne => "!=",
        }
    }

    /// Binding strength: comparisons < additive < multiplicative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Le | BinOp::Lt | BinOp::Eq | BinOp::Ge | BinOp::Gt | BinOp::Ne => 1,
            BinOp::Add | BinOp::Sub => 2,
            BinOp::Mul | BinOp::Div => 3,
        }
    }
}

impl std::fmt::Display for BinOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}
