//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term { ("+"|"-") term }
//! term   := factor { ("*"|"/") factor }
//! factor := atom [ "^" integer ] | "-" factor
//! atom   := number | "x" | "u" [ "_" digits ] | ident "(" expr ")" | ident | "(" expr ")"
//! ```
//!
//! Numbers are read exactly: `0.25` is the rational `1/4`. `I` is the
//! imaginary unit. Identifiers other than the variables and kernel names
//! must be declared parameters.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::atom::Kernel;
use super::number::Scalar;
use super::tree::Expr;
use crate::error::{Error, Result};

fn perr(line: usize, col: usize, msg: &str) -> Error {
    Error::parse(line, col, msg)
}

/// Which names denote the independent and dependent variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Dialect {
    /// `x`, `u`, `u_k` (also `uk`).
    #[default]
    Jet,
    /// `y`, `v`, `v_k` (also `vk`), mapped onto the same coordinates.
    Substitution,
}

#[derive(Clone, Debug, Default)]
pub struct ParseContext {
    pub params: BTreeSet<String>,
    pub dialect: Dialect,
    /// Line number reported in errors.
    pub line: usize,
}

impl ParseContext {
    pub fn new() -> ParseContext {
        ParseContext {
            line: 1,
            ..Default::default()
        }
    }

    pub fn with_params<I, S>(params: I) -> ParseContext
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ParseContext {
            params: params.into_iter().map(Into::into).collect(),
            line: 1,
            ..Default::default()
        }
    }

    pub fn dialect(mut self, d: Dialect) -> ParseContext {
        self.dialect = d;
        self
    }
}

/// Parses with no declared parameters.
pub fn parse(src: &str) -> Result<Expr> {
    parse_with(src, &ParseContext::new())
}

pub fn parse_with(src: &str, ctx: &ParseContext) -> Result<Expr> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        ctx,
    };
    p.skip_ws();
    if p.pos >= p.src.len() {
        return Err(p.err("empty expression"));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err(&format!("unexpected '{}'", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    ctx: &'a ParseContext,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        perr(self.ctx.line.max(1), self.pos + 1, msg)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                terms.push(Expr::Neg(Box::new(self.term()?)));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Add(terms)
        })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                let f = self.factor()?;
                acc = match acc {
                    Expr::Mul(mut fs) => {
                        fs.push(f);
                        Expr::Mul(fs)
                    }
                    other => Expr::Mul(vec![other, f]),
                };
            } else if self.eat(b'/') {
                let f = self.factor()?;
                acc = Expr::Div(Box::new(acc), Box::new(f));
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        if self.eat(b'+') {
            return self.factor();
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let e = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32> {
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        if !neg {
            self.eat(b'+');
        }
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer exponent"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let v: i32 = s.parse().map_err(|_| self.err("exponent too large"))?;
        if paren && !self.eat(b')') {
            return Err(self.err("expected ')'"));
        }
        Ok(if neg { -v } else { v })
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.err(&format!("unexpected '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let mut int_part = String::new();
        let mut frac_part = String::new();
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            int_part.push(self.src[self.pos] as char);
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                frac_part.push(self.src[self.pos] as char);
                self.pos += 1;
            }
        }
        if int_part.is_empty() && frac_part.is_empty() {
            self.pos = start;
            return Err(self.err("malformed number"));
        }
        let mut exp10: i64 = -(frac_part.len() as i64);
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            let mut neg = false;
            if self.pos < self.src.len()
                && (self.src[self.pos] == b'-' || self.src[self.pos] == b'+')
            {
                neg = self.src[self.pos] == b'-';
                self.pos += 1;
            }
            let ds = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if ds == self.pos {
                self.pos = save;
            } else {
                let v: i64 = std::str::from_utf8(&self.src[ds..self.pos])
                    .expect("ascii")
                    .parse()
                    .map_err(|_| self.err("exponent too large"))?;
                if v > 4000 {
                    return Err(self.err("exponent too large"));
                }
                exp10 += if neg { -v } else { v };
            }
        }
        let digits = format!("{int_part}{frac_part}");
        let mantissa: BigInt = digits.parse().map_err(|_| self.err("malformed number"))?;
        let ten = BigInt::from(10);
        let r = if exp10 >= 0 {
            BigRational::from_integer(mantissa * num_traits::pow(ten, exp10 as usize))
        } else {
            BigRational::new(mantissa, num_traits::pow(ten, (-exp10) as usize))
        };
        Ok(Expr::Num(Scalar::Rational(r)))
    }

    fn ident(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .to_string();
        if let Some(k) = Kernel::from_name(&name) {
            if self.eat(b'(') {
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                return Ok(Expr::Apply(k, Box::new(arg)));
            }
            self.pos = start;
            return Err(self.err(&format!("kernel '{name}' needs an argument")));
        }
        if self.peek() == Some(b'(') {
            self.pos = start;
            return Err(self.err(&format!("unknown function '{name}'")));
        }
        if name == "I" {
            return Ok(Expr::Num(Scalar::Complex(
                BigRational::zero(),
                BigRational::one(),
            )));
        }
        let (indep, dep) = match self.ctx.dialect {
            Dialect::Jet => ("x", "u"),
            Dialect::Substitution => ("y", "v"),
        };
        if name == indep {
            return Ok(Expr::X);
        }
        if let Some(rest) = name.strip_prefix(dep) {
            let digits = rest.strip_prefix('_').unwrap_or(rest);
            if rest.is_empty() {
                return Ok(Expr::Jet(0));
            }
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let k: u32 = digits
                    .parse()
                    .map_err(|_| perr(self.ctx.line.max(1), start + 1, "jet index too large"))?;
                let max = super::atom::max_jet_order();
                if k as usize > max {
                    return Err(perr(
                        self.ctx.line.max(1),
                        start + 1,
                        &format!("jet order {k} exceeds the maximum {max}"),
                    ));
                }
                return Ok(Expr::Jet(k));
            }
        }
        if self.ctx.params.contains(&name) {
            return Ok(Expr::param(&name));
        }
        Err(perr(
            self.ctx.line.max(1),
            start + 1,
            &format!("undeclared identifier '{name}'"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn reads_jets_and_rationals() {
        let e = parse("u_3/u_1 - 3/2*u2^2/u_1^2").unwrap();
        let n = e.normalize().unwrap();
        assert_eq!(n.to_string(), "(2*u_1*u_3 - 3*u_2^2)/(2*u_1^2)");
    }

    #[test]
    fn decimals_are_exact() {
        let a = parse("0.25*u").unwrap().to_ratfn().unwrap();
        let b = parse("u/4").unwrap().to_ratfn().unwrap();
        assert_eq!(a, b);
        let c = parse("1.5e-1").unwrap().to_ratfn().unwrap();
        assert_eq!(c, parse("3/20").unwrap().to_ratfn().unwrap());
    }

    #[test]
    fn undeclared_identifiers_are_errors() {
        match parse("u + lam") {
            Err(Error::Parse { line, col, .. }) => assert_eq!((line, col), (1, 5)),
            other => panic!("unexpected {other:?}"),
        }
        let ctx = ParseContext::with_params(["lam"]);
        assert!(parse_with("u + lam", &ctx).is_ok());
    }

    #[test]
    fn substitution_dialect() {
        let ctx = ParseContext::new().dialect(Dialect::Substitution);
        assert_eq!(
            parse_with("y + v_2", &ctx).unwrap(),
            parse("x + u_2").unwrap()
        );
        assert!(parse_with("u", &ctx).is_err());
    }

    #[test]
    fn negative_exponents_and_imaginary_unit() {
        let e = parse("u^(-2)*u^2 + I*I").unwrap().to_ratfn().unwrap();
        assert!(e.is_zero());
    }

    #[test]
    fn jet_bound_enforced() {
        assert!(parse("u_100000").is_err());
    }
}
