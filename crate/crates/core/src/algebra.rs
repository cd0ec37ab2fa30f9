//! Complex polynomials and rational functions: root finding with
//! multiplicities, cancellation of common factors, composition.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{self, Parser};

pub type Scalar = Complex64;

pub const ZERO: Scalar = Complex64::new(0.0, 0.0);
pub const ONE: Scalar = Complex64::new(1.0, 0.0);

/// Zero tests and root matching thresholds. Passed explicitly everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceConfig {
    pub zero_abs: f64,
    pub zero_rel: f64,
    pub root_match: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            zero_abs: 1e-12,
            zero_rel: 1e-9,
            root_match: 1e-7,
        }
    }
}

impl ToleranceConfig {
    pub fn new(zero_abs: f64, zero_rel: f64, root_match: f64) -> Result<Self> {
        let t = ToleranceConfig {
            zero_abs,
            zero_rel,
            root_match,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("zero_abs", self.zero_abs),
            ("zero_rel", self.zero_rel),
            ("root_match", self.root_match),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// `|x| <= zero_abs + zero_rel * scale`.
    pub fn negligible(&self, x: f64, scale: f64) -> bool {
        x <= self.zero_abs + self.zero_rel * scale
    }
}

/// A point of the Riemann sphere over the complex numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ext {
    Finite(Scalar),
    Infinity,
}

impl Ext {
    pub fn finite(self) -> Option<Scalar> {
        match self {
            Ext::Finite(z) => Some(z),
            Ext::Infinity => None,
        }
    }

    /// Chordal distance on the unit-diameter sphere model, in [0, 1].
    pub fn chordal(self, other: Ext) -> f64 {
        match (self, other) {
            (Ext::Infinity, Ext::Infinity) => 0.0,
            (Ext::Finite(z), Ext::Infinity) | (Ext::Infinity, Ext::Finite(z)) => {
                1.0 / (1.0 + z.norm_sqr()).sqrt()
            }
            (Ext::Finite(a), Ext::Finite(b)) => {
                (a - b).norm() / ((1.0 + a.norm_sqr()).sqrt() * (1.0 + b.norm_sqr()).sqrt())
            }
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(z) => f.write_str(&text::fmt_complex(*z)),
            Ext::Infinity => f.write_str("inf"),
        }
    }
}

/// Dense polynomial, coefficients lowest degree first, no zero leading
/// coefficient. The zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<Scalar>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Scalar::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Scalar) -> Self {
        Poly::new(vec![c])
    }

    pub fn one() -> Self {
        Poly::constant(ONE)
    }

    /// The polynomial `z`.
    pub fn x() -> Self {
        Poly::new(vec![ZERO, ONE])
    }

    pub fn monomial(c: Scalar, k: usize) -> Self {
        let mut v = vec![ZERO; k + 1];
        v[k] = c;
        Poly::new(v)
    }

    /// `∏ (z - r)` over the given roots.
    pub fn from_roots(roots: &[Scalar]) -> Self {
        let mut p = Poly::one();
        for &r in roots {
            p = p.mul(&Poly::new(vec![-r, ONE]));
        }
        p
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Scalar {
        self.coeffs.get(k).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Scalar {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    /// Largest coefficient modulus.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: Scalar) -> Scalar {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and the rounding scale `Σ |c_k| |z|^k`.
    pub fn eval_with_scale(&self, z: Scalar) -> (Scalar, f64) {
        let r = z.norm();
        let mut v = ZERO;
        let mut s = 0.0;
        for &c in self.coeffs.iter().rev() {
            v = v * z + c;
            s = s * r + c.norm();
        }
        (v, s)
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - o.coeff(k)).collect())
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, s: Scalar) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut v = vec![ZERO; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Poly::new(v)
    }

    pub fn pow(&self, n: usize) -> Poly {
        let mut r = Poly::one();
        for _ in 0..n {
            r = r.mul(self);
        }
        r
    }

    /// `self(inner(z))`.
    pub fn compose(&self, inner: &Poly) -> Poly {
        self.coeffs
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, &c| acc.mul(inner).add(&Poly::constant(c)))
    }

    /// Coefficients of `self(c + w)` as a polynomial in `w`.
    pub fn taylor_shift(&self, c: Scalar) -> Poly {
        let mut a = self.coeffs.clone();
        let n = a.len();
        for i in 0..n {
            for k in (i..n.saturating_sub(1)).rev() {
                let next = a[k + 1];
                a[k] += c * next;
            }
        }
        Poly::new(a)
    }

    /// Quotient and remainder by a nonzero divisor.
    pub fn div_rem(&self, d: &Poly) -> Result<(Poly, Poly)> {
        let dd = d.degree().ok_or(Error::ZeroPolynomial)?;
        let Some(nd) = self.degree() else {
            return Ok((Poly::zero(), Poly::zero()));
        };
        if nd < dd {
            return Ok((Poly::zero(), self.clone()));
        }
        let lead = d.leading();
        let mut r = self.coeffs.clone();
        let mut q = vec![ZERO; nd - dd + 1];
        for k in (0..=nd - dd).rev() {
            let c = r[k + dd] / lead;
            q[k] = c;
            for (j, &dc) in d.coeffs.iter().enumerate() {
                r[k + j] -= c * dc;
            }
        }
        r.truncate(dd);
        Ok((Poly::new(q), Poly::new(r)))
    }

    /// Divides out `(z - r)`, discarding the remainder.
    pub fn deflate(&self, r: Scalar) -> Poly {
        let n = self.coeffs.len();
        if n <= 1 {
            return Poly::zero();
        }
        let mut q = vec![ZERO; n - 1];
        let mut acc = ZERO;
        for k in (1..n).rev() {
            acc = acc * r + self.coeffs[k];
            q[k - 1] = acc;
        }
        Poly::new(q)
    }

    /// Zeros every coefficient negligible against `scale` and trims.
    pub fn chop(&self, scale: f64, tol: &ToleranceConfig) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .map(|&c| if tol.negligible(c.norm(), scale) { ZERO } else { c })
                .collect(),
        )
    }

    /// Drops leading coefficients negligible against the largest one.
    pub fn trim(&self, tol: &ToleranceConfig) -> Poly {
        let scale = self.norm_inf();
        let mut v = self.coeffs.clone();
        while let Some(c) = v.last() {
            if tol.negligible(c.norm(), scale) {
                v.pop();
            } else {
                break;
            }
        }
        Poly::new(v)
    }

    /// Reversed coefficients for formal degree `n`: `z^n p(1/z)`.
    pub fn reversed(&self, n: usize) -> Poly {
        let mut v = vec![ZERO; n + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            if k <= n {
                v[n - k] = c;
            }
        }
        Poly::new(v)
    }

    /// Parses a polynomial in the given variable, e.g. `z^2 - (1+i)z + 3`.
    pub fn parse(s: &str, var: char) -> Result<Poly> {
        let mut p = Parser::new(s, var);
        let list = p.term_list()?;
        Poly::from_term_list(&list, 0)
    }

    pub(crate) fn from_term_list(list: &text::TermList, pos: usize) -> Result<Poly> {
        if list.order.is_some() {
            return Err(Error::SyntaxError {
                pos,
                msg: "order term not allowed in a polynomial".into(),
            });
        }
        let mut v: Vec<Scalar> = Vec::new();
        for (e, c) in &list.terms {
            if e.den() != 1 || e.num() < 0 {
                return Err(Error::SyntaxError {
                    pos,
                    msg: format!("exponent {e} is not a nonnegative integer"),
                });
            }
            let k = e.num() as usize;
            if v.len() <= k {
                v.resize(k + 1, ZERO);
            }
            v[k] += c;
        }
        Ok(Poly::new(v))
    }

    pub fn to_string_var(&self, var: char) -> String {
        let terms: Vec<_> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(|(k, &c)| (crate::puiseux::ExpQ::from_int(k as i64), c))
            .collect();
        text::fmt_terms(&terms, None, var)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_var('z'))
    }
}

/// Spread radius below which `m` computed roots are treated as one root of
/// multiplicity `m`. A root of multiplicity `m` is perturbed by roughly
/// `eps^(1/m)` under rounding.
fn cluster_radius(m: usize, tol: &ToleranceConfig) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let r = 4.0 * (2e-13f64).powf(1.0 / m as f64);
    r.max(tol.root_match)
}

/// Roots with multiplicities. Roots closer than the tolerance radius are
/// merged into one entry at their mean.
pub fn poly_roots(p: &Poly, tol: &ToleranceConfig) -> Result<Vec<(Scalar, usize)>> {
    poly_roots_with(p, tol, |_, _| true)
}

/// As [`poly_roots`], merging a candidate cluster of `k` roots about `c`
/// only when `accept(c, k)` holds.
pub fn poly_roots_with(
    p: &Poly,
    tol: &ToleranceConfig,
    accept: impl Fn(Scalar, usize) -> bool,
) -> Result<Vec<(Scalar, usize)>> {
    let (core, roots) = raw_roots(p, tol, false)?;
    Ok(cluster_with(&roots, tol, accept)
        .into_iter()
        .map(|(z, m)| {
            if m > 1 && z != ZERO {
                (refine_multiple(&core, z, m), m)
            } else {
                (z, m)
            }
        })
        .collect())
}

/// Unclustered roots, listing zero once per multiplicity, together with
/// the polynomial left after removing the zero roots. With `exact_zero`,
/// only vanishing low coefficients count as zero roots.
fn raw_roots(p: &Poly, tol: &ToleranceConfig, exact_zero: bool) -> Result<(Poly, Vec<Scalar>)> {
    let p = if exact_zero { p.clone() } else { p.trim(tol) };
    let n = p.degree().ok_or(Error::ZeroPolynomial)?;
    if n == 0 {
        return Ok((p, Vec::new()));
    }
    let scale = p.norm_inf();
    let mut low = 0;
    let zero = |c: Scalar| if exact_zero { c == ZERO } else { tol.negligible(c.norm(), scale) };
    while low < n && zero(p.coeff(low)) {
        low += 1;
    }
    let core = Poly::new(p.coeffs[low..].to_vec());
    let mut roots = aberth(&core)?;
    roots.extend(std::iter::repeat(ZERO).take(low));
    Ok((core, roots))
}

/// Groups nearby roots: repeatedly takes the largest set of `k` mutually
/// close roots whose spread stays within the multiplicity-`k` radius.
pub fn cluster(roots: &[Scalar], tol: &ToleranceConfig) -> Vec<(Scalar, usize)> {
    cluster_with(roots, tol, |_, _| true)
}

/// As [`cluster`], with a veto on each candidate cluster.
pub fn cluster_with(
    roots: &[Scalar],
    tol: &ToleranceConfig,
    accept: impl Fn(Scalar, usize) -> bool,
) -> Vec<(Scalar, usize)> {
    let mean = |g: &[Scalar]| g.iter().sum::<Scalar>() / g.len() as f64;
    let mut left: Vec<Scalar> = roots.to_vec();
    let mut out: Vec<(Scalar, usize)> = Vec::new();
    while !left.is_empty() {
        let mut best: (usize, Vec<usize>, f64) = (0, vec![0], f64::INFINITY);
        for i in 0..left.len() {
            let mut idx: Vec<usize> = (0..left.len()).collect();
            idx.sort_by(|&a, &b| {
                (left[a] - left[i])
                    .norm()
                    .partial_cmp(&(left[b] - left[i]).norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
            let scale = left[i].norm().max(1.0);
            let kmax = (2..=idx.len())
                .filter(|&k| {
                    (left[idx[k - 1]] - left[i]).norm() <= 2.0 * cluster_radius(k, tol) * scale
                })
                .last()
                .unwrap_or(1);
            for k in (2..=kmax).rev() {
                let g: Vec<Scalar> = idx[..k].iter().map(|&j| left[j]).collect();
                let c = mean(&g);
                let spread = g.iter().map(|r| (r - c).norm()).fold(0.0, f64::max);
                if spread <= cluster_radius(k, tol) * c.norm().max(1.0) && accept(c, k) {
                    if k > best.1.len() || (k == best.1.len() && spread < best.2) {
                        best = (i, idx[..k].to_vec(), spread);
                    }
                    break;
                }
            }
        }
        if best.1.len() == 1 {
            // no cluster anywhere: the rest are simple roots
            out.extend(left.drain(..).map(|z| (z, 1)));
            break;
        }
        let mut members = best.1;
        members.sort_unstable_by(|a, b| b.cmp(a));
        let g: Vec<Scalar> = members.iter().map(|&j| left[j]).collect();
        for j in members {
            left.swap_remove(j);
        }
        out.push((mean(&g), g.len()));
    }
    out.sort_by(|a, b| {
        (a.0.re, a.0.im)
            .partial_cmp(&(b.0.re, b.0.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    out
}

/// Newton steps on `p^(m-1)`, where a root of multiplicity `m` is simple.
fn refine_multiple(p: &Poly, c: Scalar, m: usize) -> Scalar {
    let mut d = p.clone();
    for _ in 1..m {
        d = d.derivative();
    }
    let dd = d.derivative();
    let mut z = c;
    for _ in 0..4 {
        let den = dd.eval(z);
        if den == ZERO {
            break;
        }
        let step = d.eval(z) / den;
        if !step.is_finite() || step.norm() > 1e-3 * z.norm().max(1.0) {
            break;
        }
        z -= step;
        if step.norm() <= f64::EPSILON * z.norm() {
            break;
        }
    }
    z
}

/// Simultaneous Aberth–Ehrlich refinement of approximate roots of a
/// polynomial given only through `eval(z) = (p(z), p'(z))`. Roots stay
/// apart, so two guesses never settle on the same simple root.
pub fn aberth_refine(z: &mut [Scalar], eval: impl Fn(Scalar) -> (Scalar, Scalar), max_iter: usize) {
    let n = z.len();
    let mut done = vec![false; n];
    for _ in 0..max_iter {
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (v, dv) = eval(z[i]);
            if v == ZERO {
                done[i] = true;
                continue;
            }
            let ratio = v / dv;
            let sum: Scalar = (0..n)
                .filter(|&j| j != i)
                .map(|j| ONE / (z[i] - z[j]))
                .sum();
            let w = ratio / (ONE - ratio * sum);
            if !w.is_finite() {
                done[i] = true;
                continue;
            }
            z[i] -= w;
            if w.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(1e-300) {
                done[i] = true;
            }
        }
        if done.iter().all(|&d| d) {
            return;
        }
    }
}

/// Roots of `p` without clustering or trimming: small leading coefficients
/// give large roots and only exact zero coefficients give roots at 0.
pub fn poly_roots_raw(p: &Poly, tol: &ToleranceConfig) -> Result<Vec<Scalar>> {
    Ok(raw_roots(p, tol, true)?.1)
}

/// Aberth–Ehrlich iteration on a polynomial with nonzero constant term.
fn aberth(p: &Poly) -> Result<Vec<Scalar>> {
    let n = p.degree().ok_or(Error::ZeroPolynomial)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![-p.coeff(0) / p.coeff(1)]);
    }
    let lead = p.leading();
    let monic = p.scale(ONE / lead);
    let dp = monic.derivative();
    let radius = monic.coeff(0).norm().powf(1.0 / n as f64).max(1e-300);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ n as u64);
    for attempt in 0..4 {
        let (rad, phase) = if attempt == 0 {
            (radius, 0.4)
        } else {
            (radius * rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU))
        };
        let mut z: Vec<Scalar> = (0..n)
            .map(|k| Scalar::from_polar(rad, phase + std::f64::consts::TAU * k as f64 / n as f64))
            .collect();
        let mut done = vec![false; n];
        for _ in 0..500 {
            for i in 0..n {
                if done[i] {
                    continue;
                }
                let (v, s) = monic.eval_with_scale(z[i]);
                if v.norm() <= 8.0 * f64::EPSILON * s {
                    done[i] = true;
                    continue;
                }
                let ratio = v / dp.eval(z[i]);
                let sum: Scalar = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| ONE / (z[i] - z[j]))
                    .sum();
                let w = ratio / (ONE - ratio * sum);
                if !w.is_finite() {
                    continue;
                }
                z[i] -= w;
                if w.norm() <= 4.0 * f64::EPSILON * z[i].norm() {
                    done[i] = true;
                }
            }
            if done.iter().all(|&d| d) {
                return Ok(z);
            }
        }
    }
    Err(Error::NoConvergence(format!(
        "Aberth iteration for degree {n} exceeded 500 iterations"
    )))
}

/// Rational function `num/den` over the complex numbers with `den` monic
/// and no common roots.
#[derive(Debug, Clone, PartialEq)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    /// Builds and cancels common roots.
    pub fn new(num: Poly, den: Poly, tol: &ToleranceConfig) -> Result<RatFunc> {
        rat_cancel(&num, &den, tol)
    }

    /// Builds without cancellation; `den` is made monic.
    pub fn from_parts(num: Poly, den: Poly) -> Result<RatFunc> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        let l = den.leading();
        Ok(RatFunc {
            num: num.scale(ONE / l),
            den: den.scale(ONE / l),
        })
    }

    pub fn from_poly(p: Poly) -> RatFunc {
        RatFunc {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn identity() -> RatFunc {
        RatFunc::from_poly(Poly::x())
    }

    pub fn constant(c: Scalar) -> RatFunc {
        RatFunc::from_poly(Poly::constant(c))
    }

    /// `(a z + b) / (c z + d)`.
    pub fn mobius(a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> Result<RatFunc> {
        if (a * d - b * c).norm() == 0.0 {
            return Err(Error::InvalidArgument("singular Möbius matrix".into()));
        }
        RatFunc::from_parts(Poly::new(vec![b, a]), Poly::new(vec![d, c]))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.num
            .degree()
            .unwrap_or(0)
            .max(self.den.degree().unwrap_or(0))
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Value on the Riemann sphere.
    pub fn eval(&self, z: Ext, tol: &ToleranceConfig) -> Ext {
        match z {
            Ext::Finite(z) => {
                let (d, ds) = self.den.eval_with_scale(z);
                let (n, _) = self.num.eval_with_scale(z);
                if d == ZERO || (tol.negligible(d.norm(), ds) && n.norm() > d.norm()) {
                    Ext::Infinity
                } else {
                    Ext::Finite(n / d)
                }
            }
            Ext::Infinity => {
                let dn = self.num.degree();
                let dd = self.den.degree().unwrap_or(0);
                match dn {
                    None => Ext::Finite(ZERO),
                    Some(k) if k > dd => Ext::Infinity,
                    Some(k) if k == dd => Ext::Finite(self.num.leading() / self.den.leading()),
                    Some(_) => Ext::Finite(ZERO),
                }
            }
        }
    }

    pub fn eval_finite(&self, z: Scalar) -> Scalar {
        self.num.eval(z) / self.den.eval(z)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &RatFunc, tol: &ToleranceConfig) -> Result<RatFunc> {
        rat_compose(self, inner, tol)
    }

    /// Derivative as an uncancelled quotient.
    pub fn derivative(&self) -> RatFunc {
        let n = self
            .num
            .derivative()
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.derivative()));
        RatFunc {
            num: n,
            den: self.den.mul(&self.den),
        }
    }

    /// Parses `P`, `(P)/(Q)` or `P/(Q)` with polynomials in `var`.
    pub fn parse(s: &str, var: char, tol: &ToleranceConfig) -> Result<RatFunc> {
        let s = s.trim();
        if let Some(idx) = top_level_slash(s) {
            let (a, b) = (&s[..idx], &s[idx + 1..]);
            let num = Poly::parse(strip_parens(a), var)?;
            let den = Poly::parse(strip_parens(b), var).map_err(|e| shift_pos(e, idx + 1))?;
            RatFunc::new(num, den, tol)
        } else {
            Ok(RatFunc::from_poly(Poly::parse(strip_parens(s), var)?))
        }
    }

    pub fn to_string_var(&self, var: char) -> String {
        if self.den == Poly::one() {
            self.num.to_string_var(var)
        } else {
            format!("({})/({})", self.num.to_string_var(var), self.den.to_string_var(var))
        }
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_string_var('z'))
    }
}

fn shift_pos(e: Error, by: usize) -> Error {
    match e {
        Error::SyntaxError { pos, msg } => Error::SyntaxError { pos: pos + by, msg },
        e => e,
    }
}

fn top_level_slash(s: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '/' if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

/// Removes one pair of enclosing parentheses when they wrap the whole input.
fn strip_parens(s: &str) -> &str {
    let t = s.trim();
    if t.starts_with('(') && t.ends_with(')') {
        let mut depth = 0;
        for (i, ch) in t.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 && i + 1 < t.len() {
                        return t;
                    }
                }
                _ => {}
            }
        }
        &t[1..t.len() - 1]
    } else {
        t
    }
}

/// Cancels roots shared by `num` and `den` (with multiplicity, matched
/// within the tolerance) and normalizes `den` to be monic.
pub fn rat_cancel(num: &Poly, den: &Poly, tol: &ToleranceConfig) -> Result<RatFunc> {
    let den = den.trim(tol);
    if den.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    let num = num.trim(tol);
    if num.is_zero() {
        return Ok(RatFunc {
            num: Poly::zero(),
            den: Poly::one(),
        });
    }
    let (_, n, d) = split_common_roots(&num, &den, tol)?;
    RatFunc::from_parts(n, d)
}

/// Finite roots shared by two nonzero polynomials, counted with the smaller
/// multiplicity, and the two cofactors left after dividing them out. Each
/// polynomial is deflated by its own approximation of a shared root.
pub fn split_common_roots(
    p: &Poly,
    q: &Poly,
    tol: &ToleranceConfig,
) -> Result<(Vec<(Scalar, usize)>, Poly, Poly)> {
    let pr = poly_roots(p, tol)?;
    let qr = poly_roots(q, tol)?;
    let samples = sample_points(&pr, &qr);
    let mut used = vec![0usize; pr.len()];
    let mut a = p.trim(tol);
    let mut b = q.trim(tol);
    let mut common = Vec::new();
    for &(rq, mq) in &qr {
        let mut best: Option<(usize, f64)> = None;
        for (i, &(rp, mp)) in pr.iter().enumerate() {
            if used[i] >= mp {
                continue;
            }
            let dist = (rp - rq).norm();
            let radius = tol
                .root_match
                .max(cluster_radius(mq.min(mp - used[i]), tol))
                * rq.norm().max(1.0);
            if dist <= radius && best.map_or(true, |b| dist < b.1) {
                best = Some((i, dist));
            }
        }
        if let Some((i, _)) = best {
            let k = mq.min(pr[i].1 - used[i]);
            let (mut a2, mut b2) = (a.clone(), b.clone());
            for _ in 0..k {
                a2 = a2.deflate(pr[i].0);
                b2 = b2.deflate(rq);
            }
            // nearby but distinct roots must not be cancelled
            if same_quotient(p, q, &a2, &b2, &samples) {
                used[i] += k;
                a = a2;
                b = b2;
                common.push(((pr[i].0 + rq) * 0.5, k));
            }
        }
    }
    Ok((common, a, b))
}

/// Points on a circle enclosing all roots, where both quotients are tame.
fn sample_points(pr: &[(Scalar, usize)], qr: &[(Scalar, usize)]) -> Vec<Scalar> {
    let rad = pr
        .iter()
        .chain(qr)
        .map(|(z, _)| z.norm())
        .fold(1.0f64, f64::max)
        * 1.5;
    (0..5)
        .map(|k| Scalar::from_polar(rad, 0.4 + k as f64 * std::f64::consts::TAU / 5.0))
        .collect()
}

fn same_quotient(p: &Poly, q: &Poly, a: &Poly, b: &Poly, samples: &[Scalar]) -> bool {
    samples.iter().all(|&s| {
        let want = p.eval(s) / q.eval(s);
        let got = a.eval(s) / b.eval(s);
        (want - got).norm() <= 1e-6 * (1.0 + want.norm())
    })
}

/// Composition `outer ∘ inner` followed by cancellation.
pub fn rat_compose(outer: &RatFunc, inner: &RatFunc, tol: &ToleranceConfig) -> Result<RatFunc> {
    let m = outer.degree();
    let (n, d) = (&inner.num, &inner.den);
    let mut npow = vec![Poly::one()];
    let mut dpow = vec![Poly::one()];
    for _ in 0..m {
        npow.push(npow.last().unwrap().mul(n));
        dpow.push(dpow.last().unwrap().mul(d));
    }
    let mut top = Poly::zero();
    let mut bot = Poly::zero();
    for i in 0..=m {
        let term = npow[i].mul(&dpow[m - i]);
        top = top.add(&term.scale(outer.num.coeff(i)));
        bot = bot.add(&term.scale(outer.den.coeff(i)));
    }
    rat_cancel(&top, &bot, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Scalar {
        Scalar::new(re, im)
    }

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn roots_of_cubic_with_double_root() {
        // (z-1)^2 (z+2)
        let p = Poly::from_roots(&[ONE, ONE, c(-2.0, 0.0)]);
        let r = poly_roots(&p, &tol()).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0].0 - c(-2.0, 0.0)).norm() < 1e-10 && r[0].1 == 1);
        assert!((r[1].0 - ONE).norm() < 1e-10 && r[1].1 == 2);
    }

    #[test]
    fn roots_of_unity() {
        let p = Poly::new(vec![-ONE, ZERO, ZERO, ZERO, ZERO, ONE]);
        let r = poly_roots(&p, &tol()).unwrap();
        assert_eq!(r.len(), 5);
        for (z, m) in r {
            assert_eq!(m, 1);
            assert!((z.powu(5) - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_roots_are_split_off() {
        let p = Poly::new(vec![ZERO, ZERO, ZERO, -ONE, ONE]);
        let r = poly_roots(&p, &tol()).unwrap();
        assert_eq!(r, vec![(ZERO, 3), (ONE, 1)]);
    }

    #[test]
    fn triple_root_detected() {
        let p = Poly::from_roots(&[c(0.5, 0.5); 3]).mul(&Poly::from_roots(&[c(3.0, 0.0)]));
        let r = poly_roots(&p, &tol()).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().any(|&(z, m)| m == 3 && (z - c(0.5, 0.5)).norm() < 1e-6));
    }

    #[test]
    fn zero_polynomial_rejected() {
        assert_eq!(poly_roots(&Poly::zero(), &tol()), Err(Error::ZeroPolynomial));
    }

    #[test]
    fn cancel_near_common_root() {
        let num = Poly::new(vec![c(-(1.0 + 1e-9), 0.0), ZERO, ONE]);
        let den = Poly::new(vec![-ONE, ONE]);
        let r = rat_cancel(&num, &den, &tol()).unwrap();
        assert_eq!(r.den(), &Poly::one());
        assert!((r.num().coeff(0) - ONE).norm() < 1e-8);
        assert!((r.num().coeff(1) - ONE).norm() < 1e-12);
        assert_eq!(r.num().degree(), Some(1));
    }

    #[test]
    fn cancel_rejects_zero_denominator() {
        assert_eq!(
            rat_cancel(&Poly::one(), &Poly::zero(), &tol()),
            Err(Error::ZeroDenominator)
        );
    }

    #[test]
    fn compose_tangent_maps_of_the_period_two_cycle() {
        // 1 - 1/(2w) after 1/(1-u^2) gives (1+u^2)/2
        let outer = RatFunc::new(Poly::from_real(&[-1.0, 2.0]), Poly::from_real(&[0.0, 2.0]), &tol())
            .unwrap();
        let inner = RatFunc::new(Poly::one(), Poly::from_real(&[1.0, 0.0, -1.0]), &tol()).unwrap();
        let g = rat_compose(&outer, &inner, &tol()).unwrap();
        assert_eq!(g.den(), &Poly::one());
        let want = Poly::from_real(&[0.5, 0.0, 0.5]);
        assert!(g.num().sub(&want).norm_inf() < 1e-14);
    }

    #[test]
    fn taylor_shift_matches_evaluation() {
        let p = Poly::new(vec![c(1.0, 2.0), c(-3.0, 0.0), c(0.5, -1.0), ONE]);
        let s = c(0.3, -0.7);
        let q = p.taylor_shift(s);
        for w in [ZERO, ONE, c(0.2, 0.9)] {
            assert!((q.eval(w) - p.eval(s + w)).norm() < 1e-12);
        }
    }

    #[test]
    fn division_with_remainder() {
        let p = Poly::from_real(&[1.0, 2.0, 3.0, 4.0]);
        let d = Poly::from_real(&[1.0, 1.0]);
        let (q, r) = p.div_rem(&d).unwrap();
        assert!(q.mul(&d).add(&r).sub(&p).norm_inf() < 1e-14);
        assert!(r.degree().unwrap_or(0) == 0);
    }

    #[test]
    fn parse_rational_functions() {
        let r = RatFunc::parse("(z^2 - 1)/(z - 1)", 'z', &tol()).unwrap();
        assert_eq!(r.degree(), 1);
        assert!((r.eval_finite(c(2.0, 0.0)) - c(3.0, 0.0)).norm() < 1e-12);
        let p = RatFunc::parse("z^2-1", 'z', &tol()).unwrap();
        assert_eq!(p.num(), &Poly::from_real(&[-1.0, 0.0, 1.0]));
        assert!(RatFunc::parse("z^(1/2)", 'z', &tol()).is_err());
    }

    #[test]
    fn evaluation_on_the_sphere() {
        let r = RatFunc::parse("(2z^2 + 1)/(z^2 - 1)", 'z', &tol()).unwrap();
        assert_eq!(r.eval(Ext::Infinity, &tol()), Ext::Finite(c(2.0, 0.0)));
        assert_eq!(r.eval(Ext::Finite(ONE), &tol()), Ext::Infinity);
    }
}
