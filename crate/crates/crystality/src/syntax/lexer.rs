//! Hand-rolled lexer producing position-annotated tokens.

use crate::store::U256;
use crate::syntax::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(U256),
    // keywords
    Contract,
    Function,
    Returns,
    If,
    Then,
    Else,
    While,
    Skip,
    Relay,
    Return,
    True,
    False,
    // type keywords
    TyUInt256,
    TyBool,
    TyAddress,
    // scope / relay-target markers
    AtAddress,
    AtEngine,
    AtEngines,
    AtGlobal,
    At,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Assign,
    // operators
    Plus,
    Minus,
    Star,
    Slash,
    Le,
    Lt,
    EqEq,
    Ge,
    Gt,
    Ne,
    Eof,
}

impl TokenKind {
    /// Human-readable description used in parse errors.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int(v) => format!("integer `{v}`"),
            TokenKind::Contract => "`contract`".into(),
            TokenKind::Function => "`function`".into(),
            TokenKind::Returns => "`returns`".into(),
            TokenKind::If => "`if`".into(),
            TokenKind::Then => "`then`".into(),
            TokenKind::Else => "`else`".into(),
            TokenKind::While => "`while`".into(),
            TokenKind::Skip => "`skip`".into(),
            TokenKind::Relay => "`relay`".into(),
            TokenKind::Return => "`return`".into(),
            TokenKind::True => "`true`".into(),
            TokenKind::False => "`false`".into(),
            TokenKind::TyUInt256 => "`uint256`".into(),
            TokenKind::TyBool => "`bool`".into(),
            TokenKind::TyAddress => "`address`".into(),
            TokenKind::AtAddress => "`@address`".into(),
            TokenKind::AtEngine => "`@engine`".into(),
            TokenKind::AtEngines => "`@engines`".into(),
            TokenKind::AtGlobal => "`@global`".into(),
            TokenKind::At => "`@`".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Assign => "`:=`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Star => "`*`".into(),
            TokenKind::Slash => "`/`".into(),
            TokenKind::Le => "`<=`".into(),
            TokenKind::Lt => "`<`".into(),
            TokenKind::EqEq => "`==`".into(),
            TokenKind::Ge => "`>=`".into(),
            TokenKind::Gt => "`>`".into(),
            TokenKind::Ne => "`!=`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub span: Span,
    pub message: String,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut lx = Lexer {
        src: source.as_bytes(),
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut out = Vec::new();
    loop {
        let tok = lx.next_token()?;
        let done = tok.kind == TokenKind::Eof;
        out.push(tok);
        if done {
            return Ok(out);
        }
    }
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'/') if self.peek2() == Some(b'/') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn read_word(&mut self) -> String {
        let mut w = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                w.push(c as char);
                self.bump();
            } else {
                break;
            }
        }
        w
    }

    fn next_token(&mut self) -> Result<Token, LexError> {
        self.skip_trivia();
        let span = self.here();
        let Some(c) = self.peek() else {
            return Ok(Token {
                kind: TokenKind::Eof,
                span,
            });
        };

        let kind = match c {
            b'{' => {
                self.bump();
                TokenKind::LBrace
            }
            b'}' => {
                self.bump();
                TokenKind::RBrace
            }
            b'(' => {
                self.bump();
                TokenKind::LParen
            }
            b')' => {
                self.bump();
                TokenKind::RParen
            }
            b',' => {
                self.bump();
                TokenKind::Comma
            }
            b';' => {
                self.bump();
                TokenKind::Semi
            }
            b'+' => {
                self.bump();
                TokenKind::Plus
            }
            b'-' => {
                self.bump();
                TokenKind::Minus
            }
            b'*' => {
                self.bump();
                TokenKind::Star
            }
            b'/' => {
                self.bump();
                TokenKind::Slash
            }
            b':' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    TokenKind::Assign
                } else {
                    return Err(LexError {
                        span,
                        message: "expected `:=`".into(),
                    });
                }
            }
            b'<' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    TokenKind::Le
                } else {
                    TokenKind::Lt
                }
            }
            b'>' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    TokenKind::Ge
                } else {
                    TokenKind::Gt
                }
            }
            b'=' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    TokenKind::EqEq
                } else {
                    return Err(LexError {
                        span,
                        message: "expected `==`".into(),
                    });
                }
            }
            b'!' => {
                self.bump();
                if self.peek() == Some(b'=') {
                    self.bump();
                    TokenKind::Ne
                } else {
                    return Err(LexError {
                        span,
                        message: "expected `!=`".into(),
                    });
                }
            }
            b'@' => {
                self.bump();
                // `@` glued to a scope word forms one token; anything else
                // (including whitespace) leaves a bare `@` for `relay @ exp`.
                let mark = (self.pos, self.line, self.col);
                let word = self.read_word();
                match word.as_str() {
                    "address" => TokenKind::AtAddress,
                    "engine" => TokenKind::AtEngine,
                    "engines" => TokenKind::AtEngines,
                    "global" => TokenKind::AtGlobal,
                    _ => {
                        (self.pos, self.line, self.col) = mark;
                        TokenKind::At
                    }
                }
            }
            b'0'..=b'9' => {
                let digits = self.read_word();
                let value = U256::from_dec_str(&digits).ok_or_else(|| LexError {
                    span,
                    message: format!("integer literal `{digits}` is not a valid uint256"),
                })?;
                TokenKind::Int(value)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let word = self.read_word();
                match word.as_str() {
                    "contract" => TokenKind::Contract,
                    "function" => TokenKind::Function,
                    "returns" => TokenKind::Returns,
                    "if" => TokenKind::If,
                    "then" => TokenKind::Then,
                    "else" => TokenKind::Else,
                    "while" => TokenKind::While,
                    "skip" => TokenKind::Skip,
                    "relay" => TokenKind::Relay,
                    "return" => TokenKind::Return,
                    "true" => TokenKind::True,
                    "false" => TokenKind::False,
                    "uint256" => TokenKind::TyUInt256,
                    "bool" => TokenKind::TyBool,
                    "address" => TokenKind::TyAddress,
                    "rt" => {
                        return Err(LexError {
                            span,
                            message: "`rt` is reserved for return-value slots".into(),
                        })
                    }
                    _ => TokenKind::Ident(word),
                }
            }
            other => {
                return Err(LexError {
                    span,
                    message: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok(Token { kind, span })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn at_forms() {
        assert_eq!(
            kinds("@address @engine @engines @global @ payee"),
            vec![
                TokenKind::AtAddress,
                TokenKind::AtEngine,
                TokenKind::AtEngines,
                TokenKind::AtGlobal,
                TokenKind::At,
                TokenKind::Ident("payee".into()),
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn at_before_plain_word_stays_bare() {
        assert_eq!(
            kinds("@payee"),
            vec![TokenKind::At, TokenKind::Ident("payee".into()), TokenKind::Eof]
        );
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(
            kinds("skip // the rest is ignored\nskip"),
            vec![TokenKind::Skip, TokenKind::Skip, TokenKind::Eof]
        );
    }

    #[test]
    fn rt_is_reserved() {
        let err = tokenize("rt").unwrap_err();
        assert!(err.message.contains("reserved"));
    }

    #[test]
    fn oversized_integer_is_rejected() {
        let src = "115792089237316195423570985008687907853269984665640564039457584007913129639936";
        assert!(tokenize(src).is_err());
    }

    #[test]
    fn positions_track_lines() {
        let toks = tokenize("skip\n  skip").unwrap();
        assert_eq!((toks[1].span.line, toks[1].span.col), (2, 3));
    }
}
