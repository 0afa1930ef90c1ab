//! Text form of algebra elements.
//!
//! Grammar: terms joined by `+`/`-`; a term is `[coef*]var(^exp)(*var(^exp))*`
//! with an integer or `a/b` coefficient; variables are `x0..xn`, `y1..yk` and
//! `e1..eN` for the odd slots. Whitespace is ignored. The renderer emits the
//! same grammar with terms in descending monomial order, so render/parse is a
//! round trip.

use num::{BigInt, One, Signed, Zero};

use super::{Scalar, SuperPolynomial, Vars};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
}

fn tokenize(input: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '+' => {
                chars.next();
                tokens.push(Token::Plus);
            }
            '-' => {
                chars.next();
                tokens.push(Token::Minus);
            }
            '*' => {
                chars.next();
                tokens.push(Token::Star);
            }
            '^' => {
                chars.next();
                tokens.push(Token::Caret);
            }
            '/' => {
                chars.next();
                tokens.push(Token::Slash);
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        digits.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let n = digits
                    .parse::<BigInt>()
                    .map_err(|_| Error::Parse(format!("bad integer `{digits}`")))?;
                tokens.push(Token::Number(n));
            }
            c if c.is_ascii_alphabetic() => {
                let mut name = String::new();
                name.push(c);
                chars.next();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_alphanumeric() {
                        name.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                tokens.push(Token::Ident(name));
            }
            other => return Err(Error::Parse(format!("unexpected character `{other}`"))),
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    vars: Vars,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn expect_number(&mut self, what: &str) -> Result<BigInt> {
        match self.bump() {
            Some(Token::Number(n)) => Ok(n.clone()),
            other => Err(Error::Parse(format!("expected {what}, found {other:?}"))),
        }
    }

    /// factor := number [ '/' number ] | ident [ '^' number ]
    fn factor(&mut self) -> Result<SuperPolynomial> {
        match self.bump() {
            Some(Token::Number(n)) => {
                let numer = n.clone();
                let denom = if matches!(self.peek(), Some(Token::Slash)) {
                    self.bump();
                    let d = self.expect_number("denominator")?;
                    if d.is_zero() {
                        return Err(Error::Parse("zero denominator".into()));
                    }
                    d
                } else {
                    BigInt::one()
                };
                Ok(SuperPolynomial::constant(
                    self.vars,
                    Scalar::new(numer, denom),
                ))
            }
            Some(Token::Ident(name)) => {
                let (slot, odd) = self
                    .vars
                    .lookup(name)
                    .ok_or_else(|| Error::Parse(format!("unknown variable `{name}`")))?;
                let base = if odd {
                    SuperPolynomial::eta(self.vars, slot)
                } else {
                    SuperPolynomial::var(self.vars, slot)
                };
                let exp = if matches!(self.peek(), Some(Token::Caret)) {
                    self.bump();
                    let e = self.expect_number("exponent")?;
                    u32::try_from(e).map_err(|_| Error::Parse("exponent out of range".into()))?
                } else {
                    1
                };
                let mut out = SuperPolynomial::one(self.vars);
                for _ in 0..exp {
                    out = &out * &base;
                }
                Ok(out)
            }
            other => Err(Error::Parse(format!(
                "expected coefficient or variable, found {other:?}"
            ))),
        }
    }

    /// term := factor ( '*' factor )*
    fn term(&mut self) -> Result<SuperPolynomial> {
        let mut out = self.factor()?;
        while matches!(self.peek(), Some(Token::Star)) {
            self.bump();
            out = &out * &self.factor()?;
        }
        Ok(out)
    }

    fn polynomial(&mut self) -> Result<SuperPolynomial> {
        let mut out = SuperPolynomial::zero(self.vars);
        let mut negate = match self.peek() {
            Some(Token::Minus) => {
                self.bump();
                true
            }
            Some(Token::Plus) => {
                self.bump();
                false
            }
            _ => false,
        };
        loop {
            let t = self.term()?;
            if negate {
                out -= &t;
            } else {
                out += &t;
            }
            match self.bump() {
                None => break,
                Some(Token::Plus) => negate = false,
                Some(Token::Minus) => negate = true,
                Some(other) => {
                    return Err(Error::Parse(format!("expected + or -, found {other:?}")))
                }
            }
        }
        Ok(out)
    }
}

/// Parse one polynomial over the given variable layout.
pub fn parse_polynomial(vars: Vars, input: &str) -> Result<SuperPolynomial> {
    let tokens = tokenize(input)?;
    if tokens.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        vars,
    };
    p.polynomial()
}

fn render_term(vars: Vars, m: &super::SuperMonomial, c: &Scalar) -> String {
    let mut factors: Vec<String> = Vec::new();
    for slot in 0..vars.total() {
        let e = m.exponent(slot);
        if e == 1 {
            factors.push(vars.name(slot));
        } else if e > 1 {
            factors.push(format!("{}^{}", vars.name(slot), e));
        }
    }
    for slot in m.eta_slots() {
        factors.push(vars.eta_name(slot));
    }
    if factors.is_empty() {
        return format!("{c}");
    }
    let body = factors.join("*");
    if c.is_one() {
        body
    } else if (-c).is_one() {
        format!("-{body}")
    } else {
        format!("{c}*{body}")
    }
}

/// Canonical text form: descending monomial order, `+`/`-` separators, no
/// whitespace. The zero polynomial renders as `0`.
pub fn render_polynomial(p: &SuperPolynomial) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let vars = p.vars();
    let mut out = String::new();
    for (i, (m, c)) in p.terms().iter().enumerate() {
        if i == 0 {
            out.push_str(&render_term(vars, m, c));
        } else if c.is_negative() {
            out.push('-');
            out.push_str(&render_term(vars, m, &-c.clone()));
        } else {
            out.push('+');
            out.push_str(&render_term(vars, m, c));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{scalar, scalar_frac};

    fn vars() -> Vars {
        Vars::new(2, 1)
    }

    #[test]
    fn parses_fermat_cubic_generator() {
        let p = parse_polynomial(vars(), "x0^3+x1^3+x2^3").unwrap();
        assert_eq!(p.term_count(), 3);
        assert_eq!(render_polynomial(&p), "x0^3+x1^3+x2^3");
    }

    #[test]
    fn parses_coefficients_and_signs() {
        let v = vars();
        let p = parse_polynomial(v, " -2/3 * y1 * x0^2 + 1 ").unwrap();
        let expected = &(&SuperPolynomial::var(v, 0)
            * &{
                let x0 = SuperPolynomial::var(v, 1);
                &x0 * &x0
            })
        .scale(&scalar_frac(-2, 3))
            + &SuperPolynomial::one(v);
        assert_eq!(p, expected);
        assert_eq!(render_polynomial(&p), "-2/3*y1*x0^2+1");
    }

    #[test]
    fn eta_order_normalizes_with_sign() {
        let v = vars();
        let swapped = parse_polynomial(v, "e2*e1").unwrap();
        let canonical = parse_polynomial(v, "-1*e1*e2").unwrap();
        assert_eq!(swapped, canonical);
        assert_eq!(render_polynomial(&swapped), "-e1*e2");
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_polynomial(vars(), "x9").is_err());
        assert!(parse_polynomial(vars(), "3//4").is_err());
        assert!(parse_polynomial(vars(), "").is_err());
        assert!(parse_polynomial(vars(), "x0^-2").is_err());
        assert!(parse_polynomial(vars(), "q1").is_err());
    }

    #[test]
    fn round_trips_through_text() {
        let v = vars();
        let samples = [
            "0",
            "1",
            "-1/2",
            "y1*x0*x1*x2",
            "x0^3+x1^3+x2^3",
            "3*y1*x0^2-4*e1*e2+x2*e4",
        ];
        for s in samples {
            let p = parse_polynomial(v, s).unwrap();
            let text = render_polynomial(&p);
            let q = parse_polynomial(v, &text).unwrap();
            assert_eq!(p, q, "round trip failed for {s}");
        }
        assert_eq!(render_polynomial(&scalar_poly(v)), "0");
    }

    fn scalar_poly(v: Vars) -> SuperPolynomial {
        &SuperPolynomial::constant(v, scalar(2)) - &SuperPolynomial::constant(v, scalar(2))
    }
}
