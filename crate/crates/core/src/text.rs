//! Number formatting and the shared term-list parser used by the textual
//! formats for complex scalars, polynomials and Puiseux series.

use crate::algebra::Scalar;
use crate::error::{Error, Result};
use crate::puiseux::ExpQ;

/// Formats a real with 12 significant digits, trailing zeros removed.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let e: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&e) {
        let decimals = (11 - e).max(0) as usize;
        trim_fraction(&format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_fraction(mant), e)
    }
}

fn trim_fraction(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Rounds to 12 significant digits, so serialized output is reproducible.
pub fn round12(x: f64) -> f64 {
    fmt_real(x).parse().unwrap_or(x)
}

fn shown_parts(c: Scalar) -> (f64, f64) {
    let m = c.norm();
    let re = if c.re.abs() <= 1e-14 * m { 0.0 } else { c.re };
    let im = if c.im.abs() <= 1e-14 * m { 0.0 } else { c.im };
    (re, im)
}

/// Formats a complex number as `a`, `bi`, `a+bi` or `a-bi`. Parts smaller
/// than 1e-14 of the modulus are shown as zero.
pub fn fmt_complex(c: Scalar) -> String {
    let (re, im) = shown_parts(c);
    if im == 0.0 {
        fmt_real(re)
    } else if re == 0.0 {
        format!("{}i", fmt_real(im))
    } else if im < 0.0 {
        format!("{}-{}i", fmt_real(re), fmt_real(-im))
    } else {
        format!("{}+{}i", fmt_real(re), fmt_real(im))
    }
}

/// True when the formatted literal needs parentheses to be used as a
/// coefficient in a term list.
pub fn needs_parens(c: Scalar) -> bool {
    let (re, im) = shown_parts(c);
    re != 0.0 && im != 0.0
}

/// A parsed `c0*v^e0 + c1*v^e1 + ... + O(v^p)` expression.
#[derive(Debug, Clone, PartialEq)]
pub struct TermList {
    pub terms: Vec<(ExpQ, Scalar)>,
    pub order: Option<ExpQ>,
}

pub struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    var: u8,
}

impl<'a> Parser<'a> {
    pub fn new(s: &'a str, var: char) -> Self {
        Parser {
            s: s.as_bytes(),
            pos: 0,
            var: var as u8,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::SyntaxError {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    pub fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    /// Unsigned decimal real with optional exponent; `None` if no digits.
    fn number(&mut self) -> Result<Option<f64>> {
        self.ws();
        let start = self.pos;
        let b = self.s;
        let mut i = self.pos;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i < b.len() && b[i] == b'.' {
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i == start || (i == start + 1 && b[start] == b'.') {
            return Ok(None);
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            if j < b.len() && b[j].is_ascii_digit() {
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&b[start..i]).expect("ascii");
        self.pos = i;
        match text.parse::<f64>() {
            Ok(v) => Ok(Some(v)),
            Err(_) => {
                self.pos = start;
                self.err("malformed number")
            }
        }
    }

    fn integer(&mut self) -> Result<i64> {
        let neg = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        self.ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let v: i64 = std::str::from_utf8(&self.s[start..self.pos])
            .expect("ascii")
            .parse()
            .or_else(|_| self.err("integer out of range"))?;
        Ok(if neg { -v } else { v })
    }

    /// `int` or `(int)` or `(int/int)`.
    fn exponent(&mut self) -> Result<ExpQ> {
        if self.eat(b'(') {
            let p = self.integer()?;
            let q = if self.eat(b'/') { self.integer()? } else { 1 };
            self.expect(b')')?;
            if q == 0 {
                return self.err("zero exponent denominator");
            }
            Ok(ExpQ::new(p, q))
        } else {
            Ok(ExpQ::from_int(self.integer()?))
        }
    }

    /// Complex literal `a`, `bi`, `a+bi`, `a-bi` (signs allowed on `a`).
    pub fn complex_literal(&mut self) -> Result<Scalar> {
        let neg = self.eat(b'-') || {
            self.eat(b'+');
            false
        };
        let first = self.number()?;
        let sign = if neg { -1.0 } else { 1.0 };
        if self.eat(b'i') {
            return Ok(Scalar::new(0.0, sign * first.unwrap_or(1.0)));
        }
        let Some(a) = first else {
            return self.err("expected number");
        };
        let re = sign * a;
        let save = self.pos;
        let s2 = match self.peek() {
            Some(b'+') => 1.0,
            Some(b'-') => -1.0,
            _ => return Ok(Scalar::new(re, 0.0)),
        };
        self.pos += 1;
        let b = self.number()?;
        if self.eat(b'i') {
            Ok(Scalar::new(re, s2 * b.unwrap_or(1.0)))
        } else {
            self.pos = save;
            Ok(Scalar::new(re, 0.0))
        }
    }

    fn coefficient(&mut self) -> Result<Option<Scalar>> {
        if self.eat(b'(') {
            let c = self.complex_literal()?;
            self.expect(b')')?;
            return Ok(Some(c));
        }
        match self.number()? {
            Some(v) => {
                if self.eat(b'i') {
                    Ok(Some(Scalar::new(0.0, v)))
                } else {
                    Ok(Some(Scalar::new(v, 0.0)))
                }
            }
            None => {
                if self.peek() == Some(b'i') {
                    self.pos += 1;
                    Ok(Some(Scalar::new(0.0, 1.0)))
                } else {
                    Ok(None)
                }
            }
        }
    }

    fn power(&mut self) -> Result<Option<ExpQ>> {
        if self.peek() == Some(self.var) {
            self.pos += 1;
            if self.eat(b'^') {
                Ok(Some(self.exponent()?))
            } else {
                Ok(Some(ExpQ::one()))
            }
        } else {
            Ok(None)
        }
    }

    fn order_term(&mut self) -> Result<Option<ExpQ>> {
        if self.peek() == Some(b'O') {
            self.pos += 1;
            self.expect(b'(')?;
            let e = match self.power()? {
                Some(e) => e,
                None => {
                    // O(1)
                    let n = self.integer()?;
                    if n != 1 {
                        return self.err("expected O(1) or O(var^e)");
                    }
                    ExpQ::zero()
                }
            };
            self.expect(b')')?;
            Ok(Some(e))
        } else {
            Ok(None)
        }
    }

    /// Parses a whole term list and requires end of input.
    pub fn term_list(&mut self) -> Result<TermList> {
        let list = self.term_list_prefix()?;
        if !self.at_end() {
            return self.err("unexpected trailing input");
        }
        Ok(list)
    }

    /// Parses a term list, stopping at the first character that cannot
    /// continue it.
    pub fn term_list_prefix(&mut self) -> Result<TermList> {
        let mut terms = Vec::new();
        let mut order = None;
        let mut sign = if self.eat(b'-') {
            -1.0
        } else {
            self.eat(b'+');
            1.0
        };
        loop {
            if let Some(o) = self.order_term()? {
                if sign < 0.0 {
                    return self.err("order term must be added");
                }
                order = Some(o);
                break;
            }
            let coef = self.coefficient()?;
            if coef.is_some() {
                self.eat(b'*');
            }
            let pw = self.power()?;
            if coef.is_none() && pw.is_none() {
                return self.err("expected term");
            }
            let c = coef.unwrap_or(Scalar::new(1.0, 0.0)) * sign;
            terms.push((pw.unwrap_or_else(ExpQ::zero), c));
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    sign = 1.0;
                }
                Some(b'-') => {
                    self.pos += 1;
                    sign = -1.0;
                }
                _ => break,
            }
        }
        Ok(TermList { terms, order })
    }
}

/// Formats a term list in the grammar accepted by [`Parser::term_list`].
pub fn fmt_terms(terms: &[(ExpQ, Scalar)], order: Option<ExpQ>, var: char) -> String {
    let mut out = String::new();
    for (k, (e, c)) in terms.iter().enumerate() {
        let real_neg = !needs_parens(*c) && fmt_complex(*c).starts_with('-');
        let shown = if real_neg { -*c } else { *c };
        if k == 0 {
            if real_neg {
                out.push('-');
            }
        } else {
            out.push_str(if real_neg { " - " } else { " + " });
        }
        let lit = fmt_complex(shown);
        let coef = if needs_parens(shown) {
            format!("({lit})")
        } else {
            lit
        };
        if e.is_zero() {
            out.push_str(&coef);
        } else {
            if coef != "1" {
                out.push_str(&coef);
                out.push('*');
            }
            out.push(var);
            if *e != ExpQ::one() {
                out.push('^');
                out.push_str(&fmt_exponent(*e));
            }
        }
    }
    if let Some(p) = order {
        if out.is_empty() {
            out.push('0');
        }
        out.push_str(&format!(" + O({var}^{})", fmt_exponent(p)));
    } else if out.is_empty() {
        out.push('0');
    }
    out
}

fn fmt_exponent(e: ExpQ) -> String {
    if e.den() == 1 {
        format!("{}", e.num())
    } else {
        format!("({}/{})", e.num(), e.den())
    }
}
