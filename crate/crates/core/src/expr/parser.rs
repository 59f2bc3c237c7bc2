use super::{BinOp, Expr, ExprError, Func, Var};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Token, usize)>, ExprError> {
        let mut lexer = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lexer.next()?;
            let end = tok == Token::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn next(&mut self) -> Result<(Token, usize), ExprError> {
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(b) = self.peek() else {
            return Ok((Token::End, start));
        };
        let tok = match b {
            b'0'..=b'9' | b'.' => self.number()?,
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while self
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
                {
                    self.pos += 1;
                }
                Token::Ident(self.src[start..self.pos].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Token::Op(b as char)
            }
            b'(' => {
                self.pos += 1;
                Token::LParen
            }
            b')' => {
                self.pos += 1;
                Token::RParen
            }
            _ => {
                return Err(ExprError::Syntax {
                    offset: start,
                    expected: "a number, identifier, operator or parenthesis".into(),
                })
            }
        };
        Ok((tok, start))
    }

    fn number(&mut self) -> Result<Token, ExprError> {
        let start = self.pos;
        let digits = |lx: &mut Self| {
            let from = lx.pos;
            while lx.peek().is_some_and(|c| c.is_ascii_digit()) {
                lx.pos += 1;
            }
            lx.pos > from
        };
        let mut any = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            any |= digits(self);
        }
        if !any {
            return Err(ExprError::Syntax {
                offset: start,
                expected: "digits".into(),
            });
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !digits(self) {
                // Not an exponent after all; leave `e` for the identifier lexer.
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Token::Num)
            .map_err(|_| ExprError::Syntax {
                offset: start,
                expected: "a valid number".into(),
            })
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    idx: usize,
}

/// Parses the infix grammar
///
/// ```text
/// sum     := product (("+" | "-") product)*
/// product := unary (("*" | "/") unary)*
/// unary   := "-" unary | power
/// power   := primary ("^" unary)?
/// primary := number | "a" | "x" | func "(" sum ")" | "(" sum ")"
/// ```
///
/// so `^` binds tighter than unary minus and is right-associative.
pub fn parse(text: &str) -> Result<Expr, ExprError> {
    let tokens = Lexer::tokens(text)?;
    let mut p = Parser { tokens, idx: 0 };
    if p.peek() == &Token::End {
        return Err(ExprError::Syntax {
            offset: 0,
            expected: "an expression".into(),
        });
    }
    let e = p.sum()?;
    match p.peek() {
        Token::End => Ok(e),
        _ => Err(p.error("an operator or end of input")),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.idx].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.idx].1
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.idx].0.clone();
        if self.idx + 1 < self.tokens.len() {
            self.idx += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.offset(),
            expected: expected.to_string(),
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Token::Op('+') => BinOp::Add,
                Token::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Token::Op('*') => BinOp::Mul,
                Token::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == &Token::Op('-') {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peek() == &Token::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let at = self.offset();
        match self.bump() {
            Token::Num(v) => Ok(Expr::Const(v)),
            Token::LParen => {
                let e = self.sum()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "a" => Ok(Expr::Var(Var::A)),
                "x" => Ok(Expr::Var(Var::X)),
                _ => {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(ExprError::UnknownIdentifier { name, offset: at });
                    };
                    if self.peek() != &Token::LParen {
                        return Err(self.error(&format!("`(` after `{name}`")));
                    }
                    self.bump();
                    let arg = self.sum()?;
                    self.expect_rparen()?;
                    Ok(Expr::Call(func, Box::new(arg)))
                }
            },
            _ => Err(ExprError::Syntax {
                offset: at,
                expected: "a number, variable, function call or `(`".into(),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if self.peek() == &Token::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error("`)`"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = parse("-x^2").unwrap();
        assert_eq!(e.eval(1.0, 3.0).unwrap(), -9.0);
        let e = parse("2^3^2").unwrap();
        assert_eq!(e.eval(0.0, 0.0).unwrap(), 512.0);
        let e = parse("8/4/2").unwrap();
        assert_eq!(e.eval(0.0, 0.0).unwrap(), 1.0);
        let e = parse("1 - 2 - 3").unwrap();
        assert_eq!(e.eval(0.0, 0.0).unwrap(), -4.0);
        let e = parse("2^-1").unwrap();
        assert_eq!(e.eval(0.0, 0.0).unwrap(), 0.5);
        let e = parse("- -x * 2").unwrap();
        assert_eq!(e.eval(0.0, 1.5).unwrap(), 3.0);
    }

    #[test]
    fn numbers() {
        assert_eq!(parse("1e-3").unwrap(), Expr::Const(1e-3));
        assert_eq!(parse(".25").unwrap(), Expr::Const(0.25));
        assert_eq!(parse("2.").unwrap(), Expr::Const(2.0));
        assert_eq!(parse("3E2").unwrap(), Expr::Const(300.0));
    }

    #[test]
    fn whitespace_is_ignored() {
        let a = parse("  x ^2+\ta ").unwrap();
        let b = parse("x^2+a").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trailing_operator_reports_offset() {
        match parse("x +").unwrap_err() {
            ExprError::Syntax { offset, .. } => assert_eq!(offset, 3),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn syntax_errors() {
        for (src, at) in [
            ("", 0),
            ("(x", 2),
            ("x)", 1),
            ("sin x", 4),
            ("x $ 1", 2),
            ("*x", 0),
        ] {
            match parse(src).unwrap_err() {
                ExprError::Syntax { offset, .. } => assert_eq!(offset, at, "{src:?}"),
                e => panic!("{src:?}: {e:?}"),
            }
        }
    }

    #[test]
    fn unknown_identifiers() {
        match parse("x + y").unwrap_err() {
            ExprError::UnknownIdentifier { name, offset } => {
                assert_eq!(name, "y");
                assert_eq!(offset, 4);
            }
            e => panic!("{e:?}"),
        }
        assert!(matches!(
            parse("tan(x)"),
            Err(ExprError::UnknownIdentifier { .. })
        ));
    }
}
