//! Truncated Puiseux series in `t` with rational exponents and explicit
//! absolute precision.
//!
//! A series is a finite sorted list of terms `c t^e` together with an
//! optional precision `p`: when present, the series is only known modulo
//! `O(t^p)`; when absent, the finite sum is exact.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::algebra::{Poly, Scalar, ToleranceConfig, ONE, ZERO};
use crate::error::{Error, Result};
use crate::text::{self, Parser};

/// Precision assigned to parsed series that carry no `O(t^p)` term.
pub const DEFAULT_PRECISION: i64 = 6;
/// Largest exponent denominator accepted by the parser.
pub const RAMIFICATION_BOUND: i64 = 64;

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Reduced rational exponent with positive denominator.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct ExpQ {
    num: i64,
    den: i64,
}

impl ExpQ {
    /// Panics when `den == 0`.
    pub fn new(num: i64, den: i64) -> ExpQ {
        assert!(den != 0, "zero denominator in exponent");
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        ExpQ {
            num: s * num / g,
            den: s * den / g,
        }
    }

    pub fn from_int(n: i64) -> ExpQ {
        ExpQ { num: n, den: 1 }
    }

    pub fn zero() -> ExpQ {
        ExpQ::from_int(0)
    }

    pub fn one() -> ExpQ {
        ExpQ::from_int(1)
    }

    pub fn num(self) -> i64 {
        self.num
    }

    pub fn den(self) -> i64 {
        self.den
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_positive(self) -> bool {
        self.num > 0
    }

    pub fn is_negative(self) -> bool {
        self.num < 0
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    fn from_i128(n: i128, d: i128) -> Option<ExpQ> {
        let g = {
            let (mut a, mut b) = (n.abs(), d.abs());
            while b != 0 {
                let r = a % b;
                a = b;
                b = r;
            }
            a.max(1)
        };
        let s = if d < 0 { -1 } else { 1 };
        Some(ExpQ {
            num: i64::try_from(s * n / g).ok()?,
            den: i64::try_from(s * d / g).ok()?,
        })
    }

    pub fn checked_add(self, o: ExpQ) -> Option<ExpQ> {
        let n = self.num as i128 * o.den as i128 + o.num as i128 * self.den as i128;
        ExpQ::from_i128(n, self.den as i128 * o.den as i128)
    }

    pub fn checked_sub(self, o: ExpQ) -> Option<ExpQ> {
        self.checked_add(-o)
    }

    pub fn checked_mul(self, o: ExpQ) -> Option<ExpQ> {
        ExpQ::from_i128(
            self.num as i128 * o.num as i128,
            self.den as i128 * o.den as i128,
        )
    }

    pub fn checked_div(self, o: ExpQ) -> Option<ExpQ> {
        if o.num == 0 {
            return None;
        }
        ExpQ::from_i128(
            self.num as i128 * o.den as i128,
            self.den as i128 * o.num as i128,
        )
    }

    /// Smallest integer not below `self`.
    pub fn ceil(self) -> i64 {
        self.num.div_euclid(self.den) + i64::from(self.num.rem_euclid(self.den) != 0)
    }

    pub fn min(self, o: ExpQ) -> ExpQ {
        if self <= o {
            self
        } else {
            o
        }
    }

    pub fn max(self, o: ExpQ) -> ExpQ {
        if self >= o {
            self
        } else {
            o
        }
    }
}

impl std::ops::Add for ExpQ {
    type Output = ExpQ;
    fn add(self, o: ExpQ) -> ExpQ {
        self.checked_add(o).expect("exponent overflow")
    }
}

impl std::ops::Sub for ExpQ {
    type Output = ExpQ;
    fn sub(self, o: ExpQ) -> ExpQ {
        self.checked_sub(o).expect("exponent overflow")
    }
}

impl std::ops::Mul for ExpQ {
    type Output = ExpQ;
    fn mul(self, o: ExpQ) -> ExpQ {
        self.checked_mul(o).expect("exponent overflow")
    }
}

impl std::ops::Div for ExpQ {
    type Output = ExpQ;
    fn div(self, o: ExpQ) -> ExpQ {
        self.checked_div(o).expect("exponent overflow or division by zero")
    }
}

impl std::ops::Neg for ExpQ {
    type Output = ExpQ;
    fn neg(self) -> ExpQ {
        ExpQ {
            num: -self.num,
            den: self.den,
        }
    }
}

impl Ord for ExpQ {
    fn cmp(&self, o: &ExpQ) -> Ordering {
        (self.num as i128 * o.den as i128).cmp(&(o.num as i128 * self.den as i128))
    }
}

impl PartialOrd for ExpQ {
    fn partial_cmp(&self, o: &ExpQ) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for ExpQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for ExpQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExpQ {
    type Err = Error;
    fn from_str(s: &str) -> Result<ExpQ> {
        let bad = |msg: &str| Error::SyntaxError {
            pos: 0,
            msg: format!("{msg}: {s:?}"),
        };
        let (p, q) = match s.trim().split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s.trim(), "1"),
        };
        let p: i64 = p.parse().map_err(|_| bad("bad exponent numerator"))?;
        let q: i64 = q.parse().map_err(|_| bad("bad exponent denominator"))?;
        if q == 0 {
            return Err(bad("zero exponent denominator"));
        }
        Ok(ExpQ::new(p, q))
    }
}

impl Serialize for ExpQ {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Coefficient rings for Puiseux series.
pub trait Coefficient: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_scalar(c: Scalar) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, c: Scalar) -> Self;
    /// Multiplicative inverse when it exists in the ring.
    fn inv(&self) -> Option<Self>;
    fn magnitude(&self) -> f64;
    /// Replaces parts negligible against `scale` by zero.
    fn chop(self, scale: f64, tol: &ToleranceConfig) -> Self;
}

impl Coefficient for Scalar {
    fn zero() -> Self {
        ZERO
    }
    fn one() -> Self {
        ONE
    }
    fn from_scalar(c: Scalar) -> Self {
        c
    }
    fn is_zero(&self) -> bool {
        *self == ZERO
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, c: Scalar) -> Self {
        self * c
    }
    fn inv(&self) -> Option<Self> {
        (*self != ZERO).then(|| ONE / self)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn chop(self, scale: f64, tol: &ToleranceConfig) -> Self {
        if tol.negligible(self.norm(), scale) {
            ZERO
        } else {
            self
        }
    }
}

impl Coefficient for Poly {
    fn zero() -> Self {
        Poly::zero()
    }
    fn one() -> Self {
        Poly::one()
    }
    fn from_scalar(c: Scalar) -> Self {
        Poly::constant(c)
    }
    fn is_zero(&self) -> bool {
        Poly::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        Poly::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Poly::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Poly::mul(self, o)
    }
    fn neg(&self) -> Self {
        Poly::neg(self)
    }
    fn scale(&self, c: Scalar) -> Self {
        Poly::scale(self, c)
    }
    fn inv(&self) -> Option<Self> {
        (self.degree() == Some(0)).then(|| Poly::constant(ONE / self.coeff(0)))
    }
    fn magnitude(&self) -> f64 {
        self.norm_inf()
    }
    fn chop(self, scale: f64, tol: &ToleranceConfig) -> Self {
        Poly::chop(&self, scale, tol)
    }
}

/// Valuation of a truncated series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Valuation {
    /// The smallest exponent with a nonzero coefficient.
    Finite(ExpQ),
    /// No nonzero term below the precision `p`.
    ZeroToPrecision(ExpQ),
    /// The exact zero series.
    Zero,
}

impl Valuation {
    /// A lower bound for the valuation; `None` stands for `+∞`.
    pub fn lower(self) -> Option<ExpQ> {
        match self {
            Valuation::Finite(v) | Valuation::ZeroToPrecision(v) => Some(v),
            Valuation::Zero => None,
        }
    }

    pub fn finite(self) -> Option<ExpQ> {
        match self {
            Valuation::Finite(v) => Some(v),
            _ => None,
        }
    }
}

/// `min` with `None` as `+∞`.
pub fn opt_min(a: Option<ExpQ>, b: Option<ExpQ>) -> Option<ExpQ> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn opt_add(a: Option<ExpQ>, b: Option<ExpQ>) -> Option<ExpQ> {
    Some(a? + b?)
}

#[derive(Clone, PartialEq)]
pub struct PuiseuxSeries<C> {
    terms: Vec<(ExpQ, C)>,
    prec: Option<ExpQ>,
}

pub type Series = PuiseuxSeries<Scalar>;

impl<C: Coefficient> PuiseuxSeries<C> {
    /// Sorts, merges equal exponents, drops zero coefficients and terms at
    /// or beyond the precision.
    pub fn from_terms(terms: Vec<(ExpQ, C)>, prec: Option<ExpQ>) -> Self {
        let mut map: BTreeMap<ExpQ, C> = BTreeMap::new();
        for (e, c) in terms {
            if prec.map_or(false, |p| e >= p) {
                continue;
            }
            match map.get_mut(&e) {
                Some(x) => *x = x.add(&c),
                None => {
                    map.insert(e, c);
                }
            }
        }
        PuiseuxSeries {
            terms: map.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            prec,
        }
    }

    pub fn exact(terms: Vec<(ExpQ, C)>) -> Self {
        Self::from_terms(terms, None)
    }

    pub fn zero() -> Self {
        PuiseuxSeries {
            terms: Vec::new(),
            prec: None,
        }
    }

    pub fn zero_to(prec: ExpQ) -> Self {
        PuiseuxSeries {
            terms: Vec::new(),
            prec: Some(prec),
        }
    }

    pub fn constant(c: C) -> Self {
        Self::exact(vec![(ExpQ::zero(), c)])
    }

    pub fn one() -> Self {
        Self::constant(C::one())
    }

    pub fn monomial(c: C, e: ExpQ) -> Self {
        Self::exact(vec![(e, c)])
    }

    /// The series `t`.
    pub fn t() -> Self {
        Self::monomial(C::one(), ExpQ::one())
    }

    pub fn terms(&self) -> &[(ExpQ, C)] {
        &self.terms
    }

    pub fn prec(&self) -> Option<ExpQ> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    pub fn valuation(&self) -> Valuation {
        match (self.terms.first(), self.prec) {
            (Some((e, _)), _) => Valuation::Finite(*e),
            (None, Some(p)) => Valuation::ZeroToPrecision(p),
            (None, None) => Valuation::Zero,
        }
    }

    /// True when no term is known to be nonzero.
    pub fn is_zero_to_precision(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading(&self) -> Option<(ExpQ, &C)> {
        self.terms.first().map(|(e, c)| (*e, c))
    }

    pub fn coeff_at(&self, e: ExpQ) -> C {
        self.terms
            .iter()
            .find(|(x, _)| *x == e)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(C::zero)
    }

    pub fn from_coefficient(c: &C) -> Self {
        Self::constant(c.clone())
    }

    pub fn map_coeffs<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> PuiseuxSeries<D> {
        PuiseuxSeries::from_terms(
            self.terms.iter().map(|(e, c)| (*e, f(c))).collect(),
            self.prec,
        )
    }

    /// Drops terms at or beyond `p` and lowers the precision to `p`.
    pub fn truncate(&self, p: ExpQ) -> Self {
        let prec = Some(opt_min(self.prec, Some(p)).expect("finite"));
        Self::from_terms(self.terms.clone(), prec)
    }

    /// Like [`truncate`](Self::truncate) but refuses to claim precision the
    /// series does not have.
    pub fn set_precision(&self, p: ExpQ) -> Result<Self> {
        if let Some(q) = self.prec {
            if p > q {
                return Err(Error::PrecisionIncrease {
                    requested: p.to_string(),
                    available: q.to_string(),
                });
            }
        }
        Ok(self.truncate(p))
    }

    /// The terms strictly below `r` as an exact series.
    pub fn exact_part_below(&self, r: ExpQ) -> Self {
        Self::exact(self.terms.iter().filter(|(e, _)| *e < r).cloned().collect())
    }

    pub fn neg(&self) -> Self {
        PuiseuxSeries {
            terms: self.terms.iter().map(|(e, c)| (*e, c.neg())).collect(),
            prec: self.prec,
        }
    }

    /// Multiplies by the exact monomial `t^e`.
    pub fn shift(&self, e: ExpQ) -> Self {
        PuiseuxSeries {
            terms: self.terms.iter().map(|(x, c)| (*x + e, c.clone())).collect(),
            prec: self.prec.map(|p| p + e),
        }
    }

    pub fn scale(&self, c: Scalar) -> Self {
        Self::from_terms(
            self.terms.iter().map(|(e, x)| (*e, x.scale(c))).collect(),
            self.prec,
        )
    }

    pub fn mul_coeff(&self, c: &C) -> Self {
        Self::from_terms(
            self.terms.iter().map(|(e, x)| (*e, x.mul(c))).collect(),
            self.prec,
        )
    }

    fn combine(&self, o: &Self, sign: bool, tol: &ToleranceConfig) -> Self {
        let prec = opt_min(self.prec, o.prec);
        let mut map: BTreeMap<ExpQ, (C, f64)> = BTreeMap::new();
        for (e, c) in &self.terms {
            map.insert(*e, (c.clone(), c.magnitude()));
        }
        for (e, c) in &o.terms {
            let c = if sign { c.clone() } else { c.neg() };
            let m = c.magnitude();
            match map.get_mut(e) {
                Some((x, s)) => {
                    *x = x.add(&c);
                    *s = s.max(m);
                }
                None => {
                    map.insert(*e, (c, m));
                }
            }
        }
        Self::from_terms(
            map.into_iter()
                .map(|(e, (c, s))| (e, c.chop(s, tol)))
                .collect(),
            prec,
        )
    }

    pub fn add(&self, o: &Self, tol: &ToleranceConfig) -> Self {
        self.combine(o, true, tol)
    }

    pub fn sub(&self, o: &Self, tol: &ToleranceConfig) -> Self {
        self.combine(o, false, tol)
    }

    pub fn mul(&self, o: &Self, tol: &ToleranceConfig) -> Self {
        let (va, vb) = (self.valuation().lower(), o.valuation().lower());
        let prec = if va.is_none() || vb.is_none() {
            // exact zero factor
            None
        } else {
            opt_min(opt_add(self.prec, vb), opt_add(o.prec, va))
        };
        let mut map: BTreeMap<ExpQ, (C, f64)> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e = *ea + *eb;
                if prec.map_or(false, |p| e >= p) {
                    continue;
                }
                let c = ca.mul(cb);
                let m = ca.magnitude() * cb.magnitude();
                match map.get_mut(&e) {
                    Some((x, s)) => {
                        *x = x.add(&c);
                        *s += m;
                    }
                    None => {
                        map.insert(e, (c, m));
                    }
                }
            }
        }
        Self::from_terms(
            map.into_iter()
                .map(|(e, (c, s))| (e, c.chop(s, tol)))
                .collect(),
            prec,
        )
    }

    pub fn pow(&self, n: u32, tol: &ToleranceConfig) -> Self {
        let mut r = Self::one();
        for _ in 0..n {
            r = r.mul(self, tol);
        }
        r
    }

    /// Inverse of `1 + beta` (with `val beta > 0`) modulo `O(t^p)`.
    fn geometric_inverse(beta: &Self, p: ExpQ, tol: &ToleranceConfig) -> Result<Self> {
        let mut inv = Self::one().truncate(p);
        if beta.is_zero_to_precision() {
            return Ok(inv);
        }
        let nb = beta.neg();
        let mut power = Self::one();
        loop {
            power = power.mul(&nb, tol).truncate(p);
            if power.is_zero_to_precision() {
                break;
            }
            inv = inv.add(&power, tol);
        }
        Ok(inv)
    }

    /// Splits `b = b0 t^v (1 + beta)`.
    fn split_leading(&self) -> Result<(ExpQ, C, Self)> {
        let (v, b0) = match self.valuation() {
            Valuation::Finite(v) => (v, self.terms[0].1.clone()),
            _ => return Err(Error::DivisionByZeroSeries),
        };
        let b0inv = b0
            .inv()
            .ok_or_else(|| Error::InvalidArgument("leading coefficient not invertible".into()))?;
        let beta = Self::from_terms(
            self.terms[1..]
                .iter()
                .map(|(e, c)| (*e - v, c.mul(&b0inv)))
                .collect(),
            self.prec.map(|p| p - v),
        );
        Ok((v, b0inv, beta))
    }

    /// Quotient. When both operands are exact and the quotient does not
    /// terminate, the result is cut at `val + DEFAULT_PRECISION`.
    pub fn div(&self, o: &Self, tol: &ToleranceConfig) -> Result<Self> {
        self.div_with_cap(o, None, tol)
    }

    pub fn div_with_cap(&self, o: &Self, cap: Option<ExpQ>, tol: &ToleranceConfig) -> Result<Self> {
        let (v, b0inv, beta) = o.split_leading()?;
        let va = match self.valuation() {
            Valuation::Zero => return Ok(Self::zero()),
            Valuation::ZeroToPrecision(p) => return Ok(Self::zero_to(p - v)),
            Valuation::Finite(x) => x,
        };
        let natural = opt_min(
            self.prec.map(|p| p - v),
            o.prec.map(|p| p - v - v + va),
        );
        let target = opt_min(natural, cap)
            .unwrap_or_else(|| va - v + ExpQ::from_int(DEFAULT_PRECISION));
        let rel = target - va + v;
        let inv = Self::geometric_inverse(&beta, rel, tol)?;
        let q = self
            .mul(&inv.mul_coeff(&b0inv).shift(-v), tol)
            .truncate(target);
        if beta.is_exact() && self.is_exact() && natural.is_none() && beta.is_zero_to_precision() {
            // exact monomial divisor
            return Ok(Self::from_terms(q.terms, None));
        }
        Ok(q)
    }

    /// Largest exponent denominator among terms and precision.
    pub fn ramification(&self) -> i64 {
        self.terms
            .iter()
            .map(|(e, _)| e.den())
            .chain(self.prec.map(|p| p.den()))
            .fold(1, |a, b| a / gcd(a, b) * b)
    }
}

impl PuiseuxSeries<Scalar> {
    /// Parses `c0 + c1*t^(p/q) + ... + O(t^p)`. Series without an order term
    /// get precision [`DEFAULT_PRECISION`].
    pub fn parse(s: &str) -> Result<Series> {
        Self::parse_var(s, 't')
    }

    pub fn parse_var(s: &str, var: char) -> Result<Series> {
        let mut p = Parser::new(s, var);
        let list = p.term_list()?;
        Self::from_term_list(list)
    }

    pub(crate) fn from_term_list(list: text::TermList) -> Result<Series> {
        for e in list.terms.iter().map(|(e, _)| e).chain(list.order.iter()) {
            if e.den() > RAMIFICATION_BOUND {
                return Err(Error::RamificationBound(e.den(), RAMIFICATION_BOUND));
            }
        }
        let prec = list
            .order
            .unwrap_or_else(|| ExpQ::from_int(DEFAULT_PRECISION));
        Ok(Self::from_terms(list.terms, Some(prec)))
    }

    pub fn constant_scalar(c: Scalar) -> Series {
        Self::constant(c)
    }

    /// Numeric value at a real `t > 0`, ignoring the error term.
    pub fn eval_at(&self, t: f64) -> Scalar {
        let lt = t.ln();
        self.terms
            .iter()
            .map(|(e, c)| c * (e.to_f64() * lt).exp())
            .sum()
    }

    /// Square root with leading coefficient the principal root. Exact
    /// inputs are expanded to `val/2 + DEFAULT_PRECISION`.
    pub fn sqrt(&self, tol: &ToleranceConfig) -> Result<Series> {
        let v = match self.valuation() {
            Valuation::Zero => return Ok(Self::zero()),
            Valuation::ZeroToPrecision(p) => return Ok(Self::zero_to(p / ExpQ::from_int(2))),
            Valuation::Finite(v) => v,
        };
        let (_, b0inv, beta) = self.split_leading()?;
        let b0 = ONE / b0inv;
        let rel = beta.prec.unwrap_or(ExpQ::from_int(DEFAULT_PRECISION));
        let mut sum = Self::one().truncate(rel);
        let mut power = Self::one();
        let mut binom = ONE;
        let mut k = 0.0f64;
        loop {
            binom *= (0.5 - k) / (k + 1.0);
            k += 1.0;
            power = power.mul(&beta, tol).truncate(rel);
            if power.is_zero_to_precision() {
                break;
            }
            sum = sum.add(&power.scale(binom), tol);
        }
        Ok(sum.scale(b0.sqrt()).shift(v / ExpQ::from_int(2)))
    }
}

impl fmt::Display for PuiseuxSeries<Scalar> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::fmt_terms(&self.terms, self.prec, 't'))
    }
}

impl<C: fmt::Debug> fmt::Debug for PuiseuxSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut l = f.debug_list();
        for (e, c) in &self.terms {
            l.entry(&format_args!("{c:?}*t^{e}"));
        }
        if let Some(p) = self.prec {
            l.entry(&format_args!("O(t^{p})"));
        }
        l.finish()
    }
}

impl FromStr for Series {
    type Err = Error;
    fn from_str(s: &str) -> Result<Series> {
        Series::parse(s)
    }
}

impl Serialize for Series {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}
