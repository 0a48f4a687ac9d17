//! Text parser for the deterministic printer syntax.
//!
//! `parse_expr` reads back everything `Display for Expr` emits, plus
//! ordinary parenthesized arithmetic, so golden values and plan files
//! can be written as readable strings.

use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};

use crate::error::{Error, Result};

use super::monomial::Exponent;
use super::raw::RawExpr;
use super::symbol::Symbol;
use super::Expr;

/// Names that the parser may resolve beyond the built-in vocabulary
/// (jets, `a1..a15`, `f0..f4` with primes).
#[derive(Clone, Debug, Default)]
pub struct ParseContext {
    pub consts: Vec<Arc<str>>,
    /// When set, unknown identifiers become `Const` symbols instead of
    /// an error.
    pub auto_const: bool,
}

impl ParseContext {
    pub fn with_consts<I, S>(names: I) -> ParseContext
    where
        I: IntoIterator<Item = S>,
        S: Into<Arc<str>>,
    {
        ParseContext {
            consts: names.into_iter().map(Into::into).collect(),
            auto_const: false,
        }
    }
}

pub fn parse_expr(text: &str, ctx: &ParseContext) -> Result<Expr> {
    let mut parser = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        ctx,
        consts: ctx.consts.clone(),
    };
    let raw = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.bytes.len() {
        return Err(Error::parse(parser.pos, "trailing input"));
    }
    raw.canonicalize()
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    ctx: &'a ParseContext,
    consts: Vec<Arc<str>>,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        if self.eat(b) {
            Ok(())
        } else {
            Err(Error::parse(self.pos, format!("expected '{}'", b as char)))
        }
    }

    fn expr(&mut self) -> Result<RawExpr> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = RawExpr::Add(vec![acc, self.term()?]);
            } else if self.eat(b'-') {
                acc = RawExpr::Sub(Box::new(acc), Box::new(self.term()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<RawExpr> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = RawExpr::Mul(vec![acc, self.factor()?]);
            } else if self.eat(b'/') {
                acc = RawExpr::Div(Box::new(acc), Box::new(self.factor()?));
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<RawExpr> {
        if self.eat(b'-') {
            return Ok(RawExpr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.eat(b'^') {
            let e = self.exponent()?;
            return Ok(RawExpr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<RawExpr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(RawExpr::Rational(BigRational::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let ident = self.ident();
                let sym = self.resolve(&ident)?;
                Ok(RawExpr::Symbol(sym))
            }
            _ => Err(Error::parse(self.pos, "expected a number, name, or '('")),
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::parse(self.pos, "expected digits"));
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        BigInt::from_str(text).map_err(|e| Error::parse(start, e.to_string()))
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        // Trailing primes mark formal derivatives of f-symbols.
        while self.pos < self.bytes.len() && self.bytes[self.pos] == b'\'' {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned()
    }

    fn resolve(&mut self, name: &str) -> Result<Symbol> {
        if let Some(sym) = Symbol::from_name(name, &self.consts) {
            return Ok(sym);
        }
        if self.ctx.auto_const && !name.is_empty() && !name.contains('\'') {
            let arc: Arc<str> = Arc::from(name);
            self.consts.push(arc.clone());
            return Ok(Symbol::Const(arc));
        }
        Err(Error::parse(
            self.pos,
            format!("unknown symbol '{name}' (declare constants explicitly)"),
        ))
    }

    /// `^3`, `^12`, or `^(p/q)` with optional sign inside the parens.
    fn exponent(&mut self) -> Result<Exponent> {
        if self.eat(b'(') {
            let neg = self.eat(b'-');
            let n = self.small_integer()?;
            let d = if self.eat(b'/') { self.small_integer()? } else { 1 };
            self.expect(b')')?;
            if d == 0 {
                return Err(Error::parse(self.pos, "zero exponent denominator"));
            }
            let e = Ratio::new(if neg { -n } else { n }, d);
            return super::monomial::check_exponent(e);
        }
        let neg = self.eat(b'-');
        let n = self.small_integer()?;
        Ok(Ratio::from_integer(if neg { -n } else { n }))
    }

    fn small_integer(&mut self) -> Result<i64> {
        let start = self.pos;
        let big = self.integer()?;
        i64::try_from(big).map_err(|_| Error::parse(start, "exponent too large"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{exp, JetCoord};

    fn parse(s: &str) -> Expr {
        parse_expr(s, &ParseContext::default()).unwrap()
    }

    #[test]
    fn printer_round_trip() {
        let cases = [
            "-(f4*u + 3*p)/u^(4/5)",
            "1/(a1*a3*u)",
            "(10*f4'*u^2 - 12*f4*p*u - 5*f3*u^2 - 9*p^2 - 10*q*u)/(5*u^(8/5))",
            "0",
            "7",
            "a15/a1",
        ];
        for case in cases {
            let e = parse(case);
            let printed = e.to_string();
            let back = parse(&printed);
            assert_eq!(e, back, "round trip failed for {case}: printed {printed}");
        }
    }

    #[test]
    fn precedence_matches_convention() {
        // 3/5*u is (3/5)*u, not 3/(5u).
        let e = parse("3/5*u");
        let expected = Expr::rational(3, 5).mul(&Expr::jet(JetCoord::U));
        assert_eq!(e, expected);
        // Exponent binds tighter than division.
        let f = parse("x/u^(4/5)");
        let expected =
            Expr::jet(JetCoord::X).div(&Expr::jet(JetCoord::U).pow(exp(4, 5)).unwrap()).unwrap();
        assert_eq!(f, expected);
    }

    #[test]
    fn unknown_symbols_error_without_auto_const() {
        assert!(parse_expr("lam*u", &ParseContext::default()).is_err());
        let ctx = ParseContext::with_consts(["lam"]);
        assert!(parse_expr("lam*u", &ctx).is_ok());
        let auto = ParseContext {
            auto_const: true,
            ..Default::default()
        };
        assert!(parse_expr("lam*u", &auto).is_ok());
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_expr("u + ", &ParseContext::default()).unwrap_err();
        match err {
            Error::Parse { position, .. } => assert_eq!(position, 4),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
