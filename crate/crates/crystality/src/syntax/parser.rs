//! Recursive descent parser for the contract grammar.

use thiserror::Error;

use crate::store::{AddressValue, TypeName, TypedValue};
use crate::syntax::lexer::{tokenize, Token, TokenKind};
use crate::syntax::{
    BinOp, ContractDecl, Exp, ExpKind, FuncDecl, PStmt, RelayTargetExpr, ScopeTag, Span,
    StateVarDecl, Stmt,
};

/// Upper bound on accepted source length, in bytes.
pub const MAX_SOURCE_LEN: usize = 1 << 20;

/// Upper bound on statement/expression nesting.
pub const MAX_NESTING_DEPTH: u32 = 256;

/// Position-annotated parse failure with the token set that was expected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {line}:{column}: expected {}, found {found}", .expected.join(" or "))]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    fn new(span: Span, expected: Vec<String>, found: String) -> Self {
        ParseError {
            line: span.line,
            column: span.col,
            expected,
            found,
        }
    }
}

/// Parse a full contract from source text.
pub fn parse_contract(source: &str) -> Result<ContractDecl, ParseError> {
    if source.len() > MAX_SOURCE_LEN {
        return Err(ParseError {
            line: 1,
            column: 1,
            expected: vec![format!("at most {MAX_SOURCE_LEN} bytes of source")],
            found: format!("{} bytes", source.len()),
        });
    }
    let tokens = tokenize(source).map_err(|e| ParseError {
        line: e.span.line,
        column: e.span.col,
        expected: vec![e.message],
        found: "invalid token".into(),
    })?;
    let mut p = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let contract = p.contract()?;
    p.expect(&TokenKind::Eof, "end of input")?;
    Ok(contract)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: u32,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek2_kind(&self) -> &TokenKind {
        let i = (self.pos + 1).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err(&self, expected: &[&str]) -> ParseError {
        let t = self.peek();
        ParseError::new(
            t.span,
            expected.iter().map(|s| s.to_string()).collect(),
            t.kind.describe(),
        )
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> Result<Token, ParseError> {
        if &self.peek().kind == kind {
            Ok(self.bump())
        } else {
            Err(self.err(&[what]))
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING_DEPTH {
            let t = self.peek();
            return Err(ParseError::new(
                t.span,
                vec![format!("nesting no deeper than {MAX_NESTING_DEPTH}")],
                t.kind.describe(),
            ));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Ident(name) => {
                self.bump();
                Ok((name, t.span))
            }
            _ => Err(self.err(&["identifier"])),
        }
    }

    fn type_name(&mut self) -> Result<TypeName, ParseError> {
        let t = match &self.peek().kind {
            TokenKind::TyUInt256 => TypeName::UInt256,
            TokenKind::TyBool => TypeName::Bool,
            TokenKind::TyAddress => TypeName::Address,
            _ => return Err(self.err(&["`uint256`", "`bool`", "`address`"])),
        };
        self.bump();
        Ok(t)
    }

    fn peek_is_type(&self) -> bool {
        matches!(
            self.peek().kind,
            TokenKind::TyUInt256 | TokenKind::TyBool | TokenKind::TyAddress
        )
    }

    fn scope_tag(&mut self) -> Result<ScopeTag, ParseError> {
        let s = match &self.peek().kind {
            TokenKind::AtAddress => ScopeTag::Address,
            TokenKind::AtEngine => ScopeTag::Engine,
            TokenKind::AtGlobal => ScopeTag::Global,
            _ => return Err(self.err(&["`@address`", "`@engine`", "`@global`"])),
        };
        self.bump();
        Ok(s)
    }

    fn contract(&mut self) -> Result<ContractDecl, ParseError> {
        self.expect(&TokenKind::Contract, "`contract`")?;
        let (name, _) = self.ident()?;
        self.expect(&TokenKind::LBrace, "`{`")?;

        let mut state_vars = Vec::new();
        while self.peek_is_type() {
            state_vars.push(self.state_var()?);
        }
        let mut functions = Vec::new();
        while self.peek().kind == TokenKind::Function {
            functions.push(self.func_decl()?);
        }
        self.expect(&TokenKind::RBrace, "`}`")?;
        Ok(ContractDecl {
            name,
            state_vars,
            functions,
        })
    }

    fn state_var(&mut self) -> Result<StateVarDecl, ParseError> {
        let span = self.peek().span;
        let type_name = self.type_name()?;
        let scope = self.scope_tag()?;
        let (name, _) = self.ident()?;
        self.expect(&TokenKind::Semi, "`;`")?;
        Ok(StateVarDecl {
            type_name,
            scope,
            name,
            span,
        })
    }

    fn func_decl(&mut self) -> Result<FuncDecl, ParseError> {
        let span = self.peek().span;
        self.expect(&TokenKind::Function, "`function`")?;
        let (name, _) = self.ident()?;
        self.expect(&TokenKind::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                let t = self.type_name()?;
                let (p, _) = self.ident()?;
                params.push((t, p));
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(&TokenKind::RParen, "`)`")?;
        }
        let scope = self.scope_tag()?;
        self.expect(&TokenKind::Returns, "`returns`")?;
        let return_type = if self.peek_is_type() {
            Some(self.type_name()?)
        } else {
            None
        };
        let body = self.block()?;
        Ok(FuncDecl {
            name,
            params,
            scope,
            return_type,
            body,
            span,
        })
    }

    /// `{ stmt+ }`, folded right into the canonical `Seq` shape.
    fn block(&mut self) -> Result<Stmt, ParseError> {
        self.enter()?;
        self.expect(&TokenKind::LBrace, "`{`")?;
        let mut stmts = vec![self.stmt()?];
        while self.peek().kind != TokenKind::RBrace {
            stmts.push(self.stmt()?);
        }
        self.expect(&TokenKind::RBrace, "`}`")?;
        self.leave();
        Ok(Stmt::seq_of(stmts))
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        self.enter()?;
        let span = self.peek().span;
        let out = match &self.peek().kind {
            TokenKind::If => {
                self.bump();
                self.expect(&TokenKind::LParen, "`(`")?;
                let cond = self.exp()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                self.expect(&TokenKind::Then, "`then`")?;
                let then_branch = self.block()?;
                self.expect(&TokenKind::Else, "`else`")?;
                let else_branch = self.block()?;
                Ok(Stmt::If(
                    cond,
                    Box::new(then_branch),
                    Box::new(else_branch),
                    span,
                ))
            }
            TokenKind::While => {
                self.bump();
                self.expect(&TokenKind::LParen, "`(`")?;
                let cond = self.exp()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                let body = self.block()?;
                Ok(Stmt::While(cond, Box::new(body), span))
            }
            _ => self.pstmt().map(Stmt::Prim),
        };
        self.leave();
        out
    }

    fn pstmt(&mut self) -> Result<PStmt, ParseError> {
        let span = self.peek().span;
        match &self.peek().kind {
            TokenKind::TyUInt256 | TokenKind::TyBool | TokenKind::TyAddress => {
                let t = self.type_name()?;
                let (name, _) = self.ident()?;
                self.expect(&TokenKind::Semi, "`;`")?;
                Ok(PStmt::TempDecl(t, name, span))
            }
            TokenKind::Skip => {
                self.bump();
                // the reference listing writes `skip` without a semicolon
                self.eat(&TokenKind::Semi);
                Ok(PStmt::Skip(span))
            }
            TokenKind::Return => {
                self.bump();
                let e = self.exp()?;
                self.expect(&TokenKind::Semi, "`;`")?;
                Ok(PStmt::Return(e, span))
            }
            TokenKind::Relay => {
                self.bump();
                let target = match &self.peek().kind {
                    TokenKind::AtEngines => {
                        self.bump();
                        RelayTargetExpr::AtEngines
                    }
                    TokenKind::AtGlobal => {
                        self.bump();
                        RelayTargetExpr::AtGlobal
                    }
                    TokenKind::At => {
                        self.bump();
                        RelayTargetExpr::AtExp(self.exp()?)
                    }
                    _ => return Err(self.err(&["`@`", "`@engines`", "`@global`"])),
                };
                let (func, _) = self.ident()?;
                let args = self.call_args()?;
                self.expect(&TokenKind::Semi, "`;`")?;
                Ok(PStmt::Relay(target, func, args, span))
            }
            TokenKind::Ident(_) => {
                let (name, _) = self.ident()?;
                match &self.peek().kind {
                    TokenKind::Assign => {
                        self.bump();
                        let e = self.exp()?;
                        self.expect(&TokenKind::Semi, "`;`")?;
                        Ok(PStmt::Assign(name, e, span))
                    }
                    TokenKind::LParen => {
                        let args = self.call_args()?;
                        self.expect(&TokenKind::Semi, "`;`")?;
                        Ok(PStmt::Call(name, args, span))
                    }
                    _ => Err(self.err(&["`:=`", "`(`"])),
                }
            }
            _ => Err(self.err(&["statement"])),
        }
    }

    fn call_args(&mut self) -> Result<Vec<Exp>, ParseError> {
        self.expect(&TokenKind::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek().kind != TokenKind::RParen {
            loop {
                args.push(self.exp()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(&TokenKind::RParen, "`)`")?;
        Ok(args)
    }

    fn exp(&mut self) -> Result<Exp, ParseError> {
        self.enter()?;
        let out = self.cmp_exp();
        self.leave();
        out
    }

    fn cmp_exp(&mut self) -> Result<Exp, ParseError> {
        let mut lhs = self.add_exp()?;
        loop {
            let op = match &self.peek().kind {
                TokenKind::Le => BinOp::Le,
                TokenKind::Lt => BinOp::Lt,
                TokenKind::EqEq => BinOp::Eq,
                TokenKind::Ge => BinOp::Ge,
                TokenKind::Gt => BinOp::Gt,
                TokenKind::Ne => BinOp::Ne,
                _ => break,
            };
            let span = self.bump().span;
            let rhs = self.add_exp()?;
            lhs = Exp {
                kind: ExpKind::Binop(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn add_exp(&mut self) -> Result<Exp, ParseError> {
        let mut lhs = self.mul_exp()?;
        loop {
            let op = match &self.peek().kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            let span = self.bump().span;
            let rhs = self.mul_exp()?;
            lhs = Exp {
                kind: ExpKind::Binop(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn mul_exp(&mut self) -> Result<Exp, ParseError> {
        let mut lhs = self.atom_exp()?;
        loop {
            let op = match &self.peek().kind {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => break,
            };
            let span = self.bump().span;
            let rhs = self.atom_exp()?;
            lhs = Exp {
                kind: ExpKind::Binop(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn atom_exp(&mut self) -> Result<Exp, ParseError> {
        self.enter()?;
        let span = self.peek().span;
        let out = match self.peek().kind.clone() {
            TokenKind::Int(v) => {
                self.bump();
                Ok(Exp {
                    kind: ExpKind::Lit(TypedValue::UInt256(v)),
                    span,
                })
            }
            TokenKind::True => {
                self.bump();
                Ok(Exp {
                    kind: ExpKind::Lit(TypedValue::Bool(true)),
                    span,
                })
            }
            TokenKind::False => {
                self.bump();
                Ok(Exp {
                    kind: ExpKind::Lit(TypedValue::Bool(false)),
                    span,
                })
            }
            // `address(r, j)` is the literal form of an address value
            TokenKind::TyAddress => {
                self.bump();
                self.expect(&TokenKind::LParen, "`(`")?;
                let engine = self.u64_literal()?;
                self.expect(&TokenKind::Comma, "`,`")?;
                let addr = self.u64_literal()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(Exp {
                    kind: ExpKind::Lit(TypedValue::Address(AddressValue::new(engine, addr))),
                    span,
                })
            }
            TokenKind::Ident(name) => {
                self.bump();
                if self.peek().kind == TokenKind::LParen {
                    let args = self.call_args()?;
                    Ok(Exp {
                        kind: ExpKind::Call(name, args),
                        span,
                    })
                } else {
                    Ok(Exp {
                        kind: ExpKind::Ident(name),
                        span,
                    })
                }
            }
            TokenKind::LParen => {
                self.bump();
                let inner = self.exp()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.err(&["expression"])),
        };
        self.leave();
        out
    }

    fn u64_literal(&mut self) -> Result<u64, ParseError> {
        let t = self.peek().clone();
        match &t.kind {
            TokenKind::Int(v) => {
                let s = v.to_string();
                let parsed: u64 = s.parse().map_err(|_| {
                    ParseError::new(
                        t.span,
                        vec!["integer fitting 64 bits".into()],
                        t.kind.describe(),
                    )
                })?;
                self.bump();
                Ok(parsed)
            }
            _ => Err(self.err(&["integer"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::pretty_print;

    pub const MYTOKEN: &str = r#"
contract MyToken {
    uint256 @address balance;
    function transfer(address payee, uint256 amount)
    @address returns
    {
        if (amount <= balance) then {
            balance := balance - amount;
            relay @ payee mint (amount);
        } else { skip }
    }
}
"#;

    #[test]
    fn mytoken_shape() {
        let c = parse_contract(MYTOKEN).unwrap();
        assert_eq!(c.name, "MyToken");
        assert_eq!(c.state_vars.len(), 1);
        let sv = &c.state_vars[0];
        assert_eq!(
            (sv.type_name, sv.scope, sv.name.as_str()),
            (TypeName::UInt256, ScopeTag::Address, "balance")
        );
        assert_eq!(c.functions.len(), 1);
        let f = &c.functions[0];
        assert_eq!(f.name, "transfer");
        assert_eq!(f.scope, ScopeTag::Address);
        assert_eq!(f.return_type, None);
        assert_eq!(
            f.params,
            vec![
                (TypeName::Address, "payee".to_string()),
                (TypeName::UInt256, "amount".to_string()),
            ]
        );
        match &f.body {
            Stmt::If(cond, _, else_branch, _) => {
                assert!(matches!(cond.kind, ExpKind::Binop(BinOp::Le, _, _)));
                assert_eq!(**else_branch, Stmt::skip());
            }
            other => panic!("expected if at top of body, got {other:?}"),
        }
    }

    #[test]
    fn empty_contract() {
        let c = parse_contract("contract E { }").unwrap();
        assert_eq!(c.name, "E");
        assert!(c.state_vars.is_empty());
        assert!(c.functions.is_empty());
    }

    #[test]
    fn missing_scope_on_state_var() {
        let err = parse_contract("contract X { uint256 balance; }").unwrap_err();
        // the parser stops on the identifier token where a scope was required
        assert_eq!((err.line, err.column), (1, 22));
        assert!(err.expected.iter().any(|e| e.contains("@address")));
        assert!(err.found.contains("balance"));
    }

    #[test]
    fn parse_is_deterministic() {
        let a = parse_contract(MYTOKEN).unwrap();
        let b = parse_contract(MYTOKEN).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mytoken_round_trips() {
        let a = parse_contract(MYTOKEN).unwrap();
        let b = parse_contract(&pretty_print(&a)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_contract_prints_canonically() {
        let c = parse_contract("contract E { }").unwrap();
        assert_eq!(pretty_print(&c), "contract E {\n}\n");
    }

    #[test]
    fn precedence_and_parens() {
        let c = parse_contract(
            "contract P { function f() @engine returns uint256 { return 1 + 2 * 3 <= (4 + 5) * 6; } }",
        )
        .unwrap();
        let b = parse_contract(&pretty_print(&c)).unwrap();
        assert_eq!(c, b);
        let Stmt::Prim(PStmt::Return(e, _)) = &c.functions[0].body else {
            panic!("expected return");
        };
        // `<=` binds loosest
        assert!(matches!(e.kind, ExpKind::Binop(BinOp::Le, _, _)));
    }

    #[test]
    fn deep_nesting_is_rejected_not_crashing() {
        let mut src = String::from("contract D { function f() @engine returns uint256 { return ");
        for _ in 0..600 {
            src.push('(');
        }
        src.push('1');
        for _ in 0..600 {
            src.push(')');
        }
        src.push_str("; } }");
        let err = parse_contract(&src).unwrap_err();
        assert!(err.expected[0].contains("nesting"));
    }

    #[test]
    fn oversized_source_is_rejected() {
        let big = " ".repeat(MAX_SOURCE_LEN + 1);
        assert!(parse_contract(&big).is_err());
    }

    #[test]
    fn relay_forms() {
        let c = parse_contract(
            "contract R { function f() @address returns { relay @ payee mint(1); relay @engines tick(); relay @global bump(2); } }",
        )
        .unwrap();
        let body = &c.functions[0].body;
        let Stmt::Seq(first, rest) = body else {
            panic!()
        };
        assert!(matches!(
            **first,
            Stmt::Prim(PStmt::Relay(RelayTargetExpr::AtExp(_), _, _, _))
        ));
        let Stmt::Seq(second, third) = &**rest else {
            panic!()
        };
        assert!(matches!(
            **second,
            Stmt::Prim(PStmt::Relay(RelayTargetExpr::AtEngines, _, _, _))
        ));
        assert!(matches!(
            **third,
            Stmt::Prim(PStmt::Relay(RelayTargetExpr::AtGlobal, _, _, _))
        ));
    }

    #[test]
    fn address_literal() {
        let c = parse_contract(
            "contract A { function f() @engine returns address { return address(2, 1); } }",
        )
        .unwrap();
        let Stmt::Prim(PStmt::Return(e, _)) = &c.functions[0].body else {
            panic!()
        };
        assert_eq!(
            e.kind,
            ExpKind::Lit(TypedValue::Address(AddressValue::new(2, 1)))
        );
    }

    #[test]
    fn garbage_never_panics() {
        for src in [
            "",
            "contract",
            "contract X {",
            "contract X { uint256 @address 5; }",
            "}}}{{{",
            "contract X { function f( @engine returns { skip } }",
        ] {
            assert!(parse_contract(src).is_err());
        }
    }
}
