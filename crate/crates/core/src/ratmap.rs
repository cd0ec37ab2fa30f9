//! Rational maps over the Puiseux series field and over the complex numbers.
//!
//! A map of degree `d` is stored homogeneously: `F(X, Y) = Σ num[k] X^k Y^(d-k)`
//! and `G(X, Y) = Σ den[k] X^k Y^(d-k)`, so that points at infinity and
//! formal degree drops are handled uniformly.

use std::fmt;

use crate::algebra::{poly_roots, split_common_roots, Ext, Poly, RatFunc, Scalar, ToleranceConfig, ONE, ZERO};
use crate::error::{Error, Result};
use crate::puiseux::{ExpQ, Series, Valuation};
use crate::text;

/// Default bound on the degree of composites and iterates.
pub const DEFAULT_DEGREE_CAP: usize = 81;

// ---------------------------------------------------------------------------
// Complex rational maps

/// Complex rational map in homogeneous form. `den` may vanish only for the
/// constant map with value infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRatMap {
    num: Poly,
    den: Poly,
    degree: usize,
}

impl ComplexRatMap {
    pub fn new(num: Poly, den: Poly) -> Result<ComplexRatMap> {
        if num.is_zero() && den.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let degree = num.degree().unwrap_or(0).max(den.degree().unwrap_or(0));
        Ok(ComplexRatMap { num, den, degree })
    }

    pub fn from_ratfunc(r: &RatFunc) -> ComplexRatMap {
        ComplexRatMap {
            num: r.num().clone(),
            den: r.den().clone(),
            degree: r.degree(),
        }
    }

    pub fn to_ratfunc(&self) -> Result<RatFunc> {
        RatFunc::from_parts(self.num.clone(), self.den.clone())
    }

    pub fn parse(s: &str, tol: &ToleranceConfig) -> Result<ComplexRatMap> {
        Ok(ComplexRatMap::from_ratfunc(&RatFunc::parse(s, 'z', tol)?))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn eval(&self, z: Ext) -> Ext {
        match z {
            Ext::Finite(z) => {
                let n = self.num.eval(z);
                let d = self.den.eval(z);
                let v = n / d;
                if d == ZERO || !v.is_finite() {
                    Ext::Infinity
                } else {
                    Ext::Finite(v)
                }
            }
            Ext::Infinity => {
                let n = self.num.coeff(self.degree);
                let d = self.den.coeff(self.degree);
                if d == ZERO {
                    Ext::Infinity
                } else {
                    Ext::Finite(n / d)
                }
            }
        }
    }

    /// `self ∘ inner` without cancellation; degrees multiply.
    pub fn compose(&self, inner: &ComplexRatMap) -> ComplexRatMap {
        let (n, d) = (&inner.num, &inner.den);
        let m = self.degree;
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
            top = top.add(&term.scale(self.num.coeff(i)));
            bot = bot.add(&term.scale(self.den.coeff(i)));
        }
        let s = top.norm_inf().max(bot.norm_inf());
        let s = if s > 0.0 { ONE / s } else { ONE };
        ComplexRatMap {
            num: top.scale(s),
            den: bot.scale(s),
            degree: m * inner.degree,
        }
    }

    pub fn iterate(&self, n: usize, cap: usize) -> Result<ComplexRatMap> {
        check_cap(self.degree, n, cap)?;
        let mut r = ComplexRatMap::new(Poly::x(), Poly::one())?;
        for _ in 0..n {
            r = self.compose(&r);
        }
        Ok(r)
    }

    /// `N(z) - z D(z)`, whose roots are the finite fixed points; its formal
    /// degree is `degree + 1`.
    pub fn fixed_point_poly(&self) -> Poly {
        self.num.sub(&self.den.mul(&Poly::x()))
    }

    /// `N' D - N D'`, of formal degree `2 degree - 2`.
    pub fn wronskian(&self) -> Poly {
        self.num
            .derivative()
            .mul(&self.den)
            .sub(&self.num.mul(&self.den.derivative()))
    }

    /// Derivative of the map read in the chart at `src` (coordinate `z` when
    /// `|src| <= 1`, else `1/z`) and the chart at `dst` chosen the same way.
    pub fn chart_derivative(&self, src: Ext, dst: Ext) -> Scalar {
        let (x, a, b) = match src {
            Ext::Finite(z) if z.norm() <= 1.0 => (z, self.num.clone(), self.den.clone()),
            Ext::Finite(z) => (
                ONE / z,
                self.num.reversed(self.degree),
                self.den.reversed(self.degree),
            ),
            Ext::Infinity => (
                ZERO,
                self.num.reversed(self.degree),
                self.den.reversed(self.degree),
            ),
        };
        let (a, b) = match dst {
            Ext::Finite(w) if w.norm() <= 1.0 => (a, b),
            _ => (b, a),
        };
        let (av, bv) = (a.eval(x), b.eval(x));
        (a.derivative().eval(x) * bv - av * b.derivative().eval(x)) / (bv * bv)
    }

    /// Multiplier of a cycle given by its points in orbit order.
    pub fn cycle_multiplier(&self, points: &[Ext]) -> Scalar {
        let n = points.len();
        (0..n)
            .map(|i| self.chart_derivative(points[i], points[(i + 1) % n]))
            .product()
    }
}

impl fmt::Display for ComplexRatMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == Poly::one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

fn check_cap(d: usize, n: usize, cap: usize) -> Result<()> {
    let mut deg: usize = 1;
    for _ in 0..n {
        deg = deg.saturating_mul(d);
        if deg > cap {
            return Err(Error::DegreeCapExceeded(deg, cap));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Polynomials with series coefficients

/// Polynomial in one variable with series coefficients, lowest degree first.
pub type SeriesPoly = Vec<Series>;

pub fn sp_add(a: &[Series], b: &[Series], tol: &ToleranceConfig) -> SeriesPoly {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| match (a.get(k), b.get(k)) {
            (Some(x), Some(y)) => x.add(y, tol),
            (Some(x), None) => x.clone(),
            (None, Some(y)) => y.clone(),
            (None, None) => Series::zero(),
        })
        .collect()
}

pub fn sp_sub(a: &[Series], b: &[Series], tol: &ToleranceConfig) -> SeriesPoly {
    let nb: SeriesPoly = b.iter().map(|s| s.neg()).collect();
    sp_add(a, &nb, tol)
}

pub fn sp_mul(a: &[Series], b: &[Series], tol: &ToleranceConfig) -> SeriesPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Series::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.valuation() == Valuation::Zero {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if y.valuation() == Valuation::Zero {
                continue;
            }
            out[i + j] = out[i + j].add(&x.mul(y, tol), tol);
        }
    }
    out
}

pub fn sp_scale(a: &[Series], s: &Series, tol: &ToleranceConfig) -> SeriesPoly {
    a.iter().map(|x| x.mul(s, tol)).collect()
}

pub fn sp_derivative(a: &[Series]) -> SeriesPoly {
    a.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c.scale(Scalar::new(k as f64, 0.0)))
        .collect()
}

/// Value at a series argument by Horner's rule.
pub fn sp_eval(a: &[Series], z: &Series, tol: &ToleranceConfig) -> Series {
    a.iter()
        .rev()
        .fold(Series::zero(), |acc, c| acc.mul(z, tol).add(c, tol))
}

/// `a(inner(z))` as a series polynomial.
pub fn sp_compose(a: &[Series], inner: &[Series], tol: &ToleranceConfig) -> SeriesPoly {
    a.iter().rev().fold(Vec::new(), |acc, c| {
        let m = sp_mul(&acc, inner, tol);
        sp_add(&m, std::slice::from_ref(c), tol)
    })
}

/// Index of the highest coefficient not known to vanish.
fn sp_degree(a: &[Series]) -> Option<usize> {
    a.iter().rposition(|c| !c.is_zero_to_precision())
}

// ---------------------------------------------------------------------------
// Points of P^1 over the series field

/// Point `[x : y]` of the projective line, scaled so that the smaller known
/// valuation of the two coordinates is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjPointL {
    x: Series,
    y: Series,
}

impl ProjPointL {
    pub fn new(x: Series, y: Series) -> Result<ProjPointL> {
        let m = [x.valuation(), y.valuation()]
            .into_iter()
            .filter_map(Valuation::finite)
            .min()
            .ok_or_else(|| {
                Error::PrecisionExhausted("both homogeneous coordinates vanish to precision".into())
            })?;
        Ok(ProjPointL {
            x: x.shift(-m),
            y: y.shift(-m),
        })
    }

    pub fn finite(z: Series) -> ProjPointL {
        ProjPointL { x: z, y: Series::one() }
    }

    pub fn infinity() -> ProjPointL {
        ProjPointL {
            x: Series::one(),
            y: Series::zero(),
        }
    }

    pub fn x(&self) -> &Series {
        &self.x
    }

    pub fn y(&self) -> &Series {
        &self.y
    }

    /// True when the second coordinate vanishes to its known precision.
    pub fn is_infinity(&self) -> bool {
        self.y.is_zero_to_precision()
    }

    /// The affine coordinate `x / y`, or `None` at infinity.
    pub fn affine(&self, tol: &ToleranceConfig) -> Result<Option<Series>> {
        if self.is_infinity() {
            return Ok(None);
        }
        if self.y == Series::one() {
            return Ok(Some(self.x.clone()));
        }
        Ok(Some(self.x.div(&self.y, tol)?))
    }

    /// Image in `P^1(C)` under `t -> 0`.
    pub fn reduction(&self) -> Result<Ext> {
        let unknown = |s: &Series| s.prec().map_or(false, |p| !p.is_positive());
        if unknown(&self.x) || unknown(&self.y) {
            return Err(Error::PrecisionExhausted("reduction of point".into()));
        }
        let x0 = self.x.coeff_at(ExpQ::zero());
        let y0 = self.y.coeff_at(ExpQ::zero());
        if y0 == ZERO {
            Ok(Ext::Infinity)
        } else {
            Ok(Ext::Finite(x0 / y0))
        }
    }

    /// Numeric value at a real parameter `t > 0`.
    pub fn eval_at(&self, t: f64) -> Ext {
        let y = self.y.eval_at(t);
        if y == ZERO {
            Ext::Infinity
        } else {
            Ext::Finite(self.x.eval_at(t) / y)
        }
    }
}

impl fmt::Display for ProjPointL {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinity() {
            f.write_str("inf")
        } else if self.y == Series::one() {
            write!(f, "{}", self.x)
        } else {
            write!(f, "[{} : {}]", self.x, self.y)
        }
    }
}

// ---------------------------------------------------------------------------
// Rational maps over the series field

#[derive(Debug, Clone, PartialEq)]
pub struct RationalMapL {
    num: SeriesPoly,
    den: SeriesPoly,
    degree: usize,
}

/// Reduction of a map modulo `t`: the reduced map and the common roots
/// (holes) of the reduced homogeneous pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Reduction {
    pub map: ComplexRatMap,
    pub holes: Vec<(Ext, usize)>,
}

impl Reduction {
    /// Number of holes counted with multiplicity.
    pub fn hole_count(&self) -> usize {
        self.holes.iter().map(|h| h.1).sum()
    }
}

/// The two critical points of a bicritical map.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPair {
    pub c1: ProjPointL,
    pub c2: ProjPointL,
}

impl RationalMapL {
    /// Builds a map whose degree is the largest index with a coefficient
    /// not exactly zero.
    pub fn new(num: SeriesPoly, den: SeriesPoly) -> Result<RationalMapL> {
        let top = |v: &[Series]| v.iter().rposition(|c| c.valuation() != Valuation::Zero);
        let d = match (top(&num), top(&den)) {
            (None, None) => return Err(Error::ZeroPolynomial),
            (a, b) => a.unwrap_or(0).max(b.unwrap_or(0)),
        };
        RationalMapL::with_degree(num, den, d)
    }

    /// Builds a map of the given formal degree.
    pub fn with_degree(mut num: SeriesPoly, mut den: SeriesPoly, d: usize) -> Result<RationalMapL> {
        for v in [&mut num, &mut den] {
            if v.iter().skip(d + 1).any(|c| c.valuation() != Valuation::Zero) {
                return Err(Error::InvalidArgument("coefficient above the formal degree".into()));
            }
            v.resize(d + 1, Series::zero());
        }
        if den.iter().all(|c| c.valuation() == Valuation::Zero) {
            return Err(Error::ZeroDenominator);
        }
        Ok(RationalMapL { num, den, degree: d })
    }

    /// Map with constant complex coefficients.
    pub fn from_complex(f: &ComplexRatMap) -> RationalMapL {
        let lift = |p: &Poly| -> SeriesPoly {
            (0..=f.degree())
                .map(|k| {
                    let c = p.coeff(k);
                    if c == ZERO {
                        Series::zero()
                    } else {
                        Series::constant(c)
                    }
                })
                .collect()
        };
        RationalMapL {
            num: lift(f.num()),
            den: lift(f.den()),
            degree: f.degree(),
        }
    }

    pub fn num(&self) -> &[Series] {
        &self.num
    }

    pub fn den(&self) -> &[Series] {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Rescales all coefficients by the same power of `t` so that the
    /// smallest valuation is zero.
    pub fn normalized(&self) -> RationalMapL {
        let m = self
            .num
            .iter()
            .chain(self.den.iter())
            .filter_map(|c| c.valuation().finite())
            .min();
        match m {
            Some(m) if !m.is_zero() => RationalMapL {
                num: self.num.iter().map(|c| c.shift(-m)).collect(),
                den: self.den.iter().map(|c| c.shift(-m)).collect(),
                degree: self.degree,
            },
            _ => self.clone(),
        }
    }

    /// Image of a point, computed homogeneously.
    pub fn eval(&self, p: &ProjPointL, tol: &ToleranceConfig) -> Result<ProjPointL> {
        let d = self.degree;
        let mut xp = vec![Series::one()];
        let mut yp = vec![Series::one()];
        for _ in 0..d {
            xp.push(xp.last().unwrap().mul(&p.x, tol));
            yp.push(yp.last().unwrap().mul(&p.y, tol));
        }
        let mut fx = Series::zero();
        let mut gx = Series::zero();
        for k in 0..=d {
            let mono = xp[k].mul(&yp[d - k], tol);
            fx = fx.add(&self.num[k].mul(&mono, tol), tol);
            gx = gx.add(&self.den[k].mul(&mono, tol), tol);
        }
        ProjPointL::new(fx, gx)
    }

    /// `self ∘ inner`, homogeneous and without cancellation.
    pub fn compose(&self, inner: &RationalMapL, cap: usize, tol: &ToleranceConfig) -> Result<RationalMapL> {
        let deg = self.degree * inner.degree;
        if deg > cap {
            return Err(Error::DegreeCapExceeded(deg, cap));
        }
        let m = self.degree;
        let mut npow: Vec<SeriesPoly> = vec![vec![Series::one()]];
        let mut dpow: Vec<SeriesPoly> = vec![vec![Series::one()]];
        for _ in 0..m {
            npow.push(sp_mul(npow.last().unwrap(), &inner.num, tol));
            dpow.push(sp_mul(dpow.last().unwrap(), &inner.den, tol));
        }
        let mut top: SeriesPoly = Vec::new();
        let mut bot: SeriesPoly = Vec::new();
        for i in 0..=m {
            let a_zero = self.num[i].valuation() == Valuation::Zero;
            let b_zero = self.den[i].valuation() == Valuation::Zero;
            if a_zero && b_zero {
                continue;
            }
            let term = sp_mul(&npow[i], &dpow[m - i], tol);
            if !a_zero {
                top = sp_add(&top, &sp_scale(&term, &self.num[i], tol), tol);
            }
            if !b_zero {
                bot = sp_add(&bot, &sp_scale(&term, &self.den[i], tol), tol);
            }
        }
        top.resize(deg + 1, Series::zero());
        bot.resize(deg + 1, Series::zero());
        Ok(RationalMapL {
            num: top,
            den: bot,
            degree: deg,
        }
        .normalized())
    }

    /// The `n`-th iterate; refuses when `degree^n` exceeds `cap`.
    pub fn iterate(&self, n: usize, cap: usize, tol: &ToleranceConfig) -> Result<RationalMapL> {
        check_cap(self.degree, n, cap)?;
        let mut r = RationalMapL {
            num: vec![Series::zero(), Series::one()],
            den: vec![Series::one(), Series::zero()],
            degree: 1,
        };
        for _ in 0..n {
            r = self.compose(&r, cap, tol)?;
        }
        Ok(r)
    }

    /// The pair `(N'D - ND', D^2)` as a map of formal degree `2d`, not reduced.
    pub fn derivative_map(&self, tol: &ToleranceConfig) -> RationalMapL {
        let w = self.wronskian(tol);
        let mut num = w;
        num.resize(2 * self.degree + 1, Series::zero());
        let mut den = sp_mul(&self.den, &self.den, tol);
        den.resize(2 * self.degree + 1, Series::zero());
        RationalMapL {
            num,
            den,
            degree: 2 * self.degree,
        }
    }

    /// `N' D - N D'` in the affine coordinate.
    pub fn wronskian(&self, tol: &ToleranceConfig) -> SeriesPoly {
        sp_sub(
            &sp_mul(&sp_derivative(&self.num), &self.den, tol),
            &sp_mul(&self.num, &sp_derivative(&self.den), tol),
            tol,
        )
    }

    /// Derivative read in charts: the affine coordinate at points of
    /// valuation `>= 0` and its reciprocal elsewhere, chosen at `p` and at
    /// `next` (the point the image is compared with).
    pub fn chart_derivative(&self, p: &ProjPointL, next: &ProjPointL, tol: &ToleranceConfig) -> Result<Series> {
        let in_unit = |q: &ProjPointL| -> bool {
            // |x| <= |y| in the t-adic sense
            match (q.x.valuation().lower(), q.y.valuation().finite()) {
                (_, None) => false,
                (None, Some(_)) => true,
                (Some(vx), Some(vy)) => vx >= vy,
            }
        };
        let rev = |v: &SeriesPoly| -> SeriesPoly { v.iter().rev().cloned().collect() };
        let (x, a, b) = if in_unit(p) {
            (p.x.div(&p.y, tol)?, self.num.clone(), self.den.clone())
        } else {
            (p.y.div(&p.x, tol)?, rev(&self.num), rev(&self.den))
        };
        let (a, b) = if in_unit(next) { (a, b) } else { (b, a) };
        let av = sp_eval(&a, &x, tol);
        let bv = sp_eval(&b, &x, tol);
        let da = sp_eval(&sp_derivative(&a), &x, tol);
        let db = sp_eval(&sp_derivative(&b), &x, tol);
        let top = da.mul(&bv, tol).sub(&av.mul(&db, tol), tol);
        top.div(&bv.mul(&bv, tol), tol)
    }

    /// Reduction modulo `t`. All coefficients are divided by the smallest
    /// power of `t` present; the holes are the common roots of the reduced
    /// pair, including infinity.
    pub fn reduce_mod_t(&self, tol: &ToleranceConfig) -> Result<Reduction> {
        let all = self.num.iter().chain(self.den.iter());
        let m = all
            .clone()
            .filter_map(|c| c.valuation().finite())
            .min()
            .ok_or_else(|| Error::PrecisionExhausted("every coefficient vanishes to precision".into()))?;
        if all.clone().any(|c| matches!(c.valuation(), Valuation::ZeroToPrecision(p) if p <= m)) {
            return Err(Error::PrecisionExhausted(format!(
                "a coefficient is unknown at order t^{m}"
            )));
        }
        let lead = |v: &SeriesPoly| Poly::new(v.iter().map(|c| c.coeff_at(m)).collect());
        let (nb, mb) = (lead(&self.num), lead(&self.den));
        let d = self.degree;
        let deg = |p: &Poly| p.degree().unwrap_or(0);
        let mut holes: Vec<(Ext, usize)> = Vec::new();
        if nb.is_zero() || mb.is_zero() {
            let other = if nb.is_zero() { &mb } else { &nb };
            for (z, k) in poly_roots(other, tol)? {
                holes.push((Ext::Finite(z), k));
            }
            if d > deg(other) {
                holes.push((Ext::Infinity, d - deg(other)));
            }
            let map = if nb.is_zero() {
                ComplexRatMap::new(Poly::zero(), Poly::one())?
            } else {
                ComplexRatMap::new(Poly::one(), Poly::zero())?
            };
            return Ok(Reduction { map, holes });
        }
        let (common, n2, m2) = split_common_roots(&nb, &mb, tol)?;
        for (z, k) in common {
            holes.push((Ext::Finite(z), k));
        }
        let inf = (d - deg(&nb)).min(d - deg(&mb));
        if inf > 0 {
            holes.push((Ext::Infinity, inf));
        }
        // deflation leaves rounding noise in place of vanished coefficients
        let scale = n2.norm_inf().max(m2.norm_inf());
        let map = ComplexRatMap::new(n2.chop(scale, tol), m2.chop(scale, tol))?;
        Ok(Reduction { map, holes })
    }

    /// Critical points of a bicritical map. Maps of the form
    /// `(a z^d + b)/(c z^d + e)` give `0` and `infinity` directly; otherwise
    /// the Wronskian is matched against `k (z^2 + p z + s)^(d-1)` (or
    /// `k (z - c)^(d-1)` when infinity is critical).
    pub fn critical_points_bicritical(&self, tol: &ToleranceConfig) -> Result<CriticalPair> {
        let d = self.degree;
        if d < 2 {
            return Err(Error::NotBicritical("degree below 2".into()));
        }
        let inner_zero = |v: &SeriesPoly| v[1..d].iter().all(|c| c.is_zero_to_precision());
        if inner_zero(&self.num) && inner_zero(&self.den) {
            return Ok(CriticalPair {
                c1: ProjPointL::finite(Series::zero()),
                c2: ProjPointL::infinity(),
            });
        }
        let w = self.wronskian(tol);
        let Some(top) = sp_degree(&w) else {
            return Err(Error::NotBicritical("constant map".into()));
        };
        let kappa = w[top].clone();
        let e = (d - 1) as f64;
        let sc = |x: f64| Scalar::new(x, 0.0);
        let candidate: SeriesPoly;
        let pair;
        if top == d - 1 {
            let c = w[d - 2].div(&kappa, tol)?.scale(sc(-1.0 / e));
            let lin = vec![c.neg(), Series::one()];
            candidate = (0..d - 1).fold(vec![kappa.clone()], |acc, _| sp_mul(&acc, &lin, tol));
            pair = CriticalPair {
                c1: ProjPointL::finite(c),
                c2: ProjPointL::infinity(),
            };
        } else if top == 2 * d - 2 {
            let p = w[2 * d - 3].div(&kappa, tol)?.scale(sc(1.0 / e));
            let binom = e * (e - 1.0) / 2.0;
            let s = w[2 * d - 4]
                .div(&kappa, tol)?
                .sub(&p.mul(&p, tol).scale(sc(binom)), tol)
                .scale(sc(1.0 / e));
            let disc = p.mul(&p, tol).sub(&s.scale(sc(4.0)), tol);
            if disc.is_zero_to_precision() {
                return Err(Error::NotBicritical("the two critical points coincide".into()));
            }
            let root = disc.sqrt(tol)?;
            let half = sc(0.5);
            let c1 = p.neg().add(&root, tol).scale(half);
            let c2 = p.neg().sub(&root, tol).scale(half);
            let quad = vec![s, p, Series::one()];
            candidate = (0..d - 1).fold(vec![kappa.clone()], |acc, _| sp_mul(&acc, &quad, tol));
            pair = CriticalPair {
                c1: ProjPointL::finite(c1),
                c2: ProjPointL::finite(c2),
            };
        } else {
            return Err(Error::NotBicritical("critical multiplicities do not split as d-1, d-1".into()));
        }
        let diff = sp_sub(&w, &candidate, tol);
        if let Some(k) = diff.iter().position(|c| !c.is_zero_to_precision()) {
            return Err(Error::NotBicritical(format!(
                "Wronskian coefficient {k} does not match a bicritical profile"
            )));
        }
        Ok(pair)
    }

    /// Conjugate `M^-1 ∘ self ∘ M` by the affine map `M(z) = a + t^r z`.
    pub fn conjugate_affine(&self, a: &Series, r: ExpQ, tol: &ToleranceConfig) -> RationalMapL {
        let tr = Series::monomial(ONE, r);
        let m = vec![a.clone(), tr.clone()];
        let nm = sp_compose(&self.num, &m, tol);
        let dm = sp_compose(&self.den, &m, tol);
        let mut top = sp_sub(&nm, &sp_scale(&dm, a, tol), tol);
        let mut bot = sp_scale(&dm, &tr, tol);
        top.resize(self.degree + 1, Series::zero());
        bot.resize(self.degree + 1, Series::zero());
        RationalMapL {
            num: top,
            den: bot,
            degree: self.degree,
        }
        .normalized()
    }

    /// Complex map obtained by substituting a real `t > 0`.
    pub fn numeric_at(&self, t: f64) -> ComplexRatMap {
        let ev = |v: &SeriesPoly| Poly::new(v.iter().map(|c| c.eval_at(t)).collect());
        ComplexRatMap {
            num: ev(&self.num),
            den: ev(&self.den),
            degree: self.degree,
        }
    }

    /// Parses `ratmap { num = [c0, c1, ...], den = [c0, c1, ...] }` with
    /// series entries, lowest degree first.
    pub fn parse(s: &str) -> Result<RationalMapL> {
        let err = |pos: usize, msg: &str| Error::SyntaxError {
            pos,
            msg: msg.to_string(),
        };
        let t = s.trim_start();
        let off = s.len() - t.len();
        let body = t
            .strip_prefix("ratmap")
            .ok_or_else(|| err(off, "expected 'ratmap'"))?
            .trim();
        let body = body
            .strip_prefix('{')
            .and_then(|b| b.trim_end().strip_suffix('}'))
            .ok_or_else(|| err(off + 6, "expected '{ ... }'"))?;
        let base = s.find('{').unwrap_or(0) + 1;
        let mut num = None;
        let mut den = None;
        let mut rest = body;
        while !rest.trim().is_empty() {
            let r = rest.trim_start();
            let here = base + (body.len() - r.len());
            let (key, after) = r
                .split_once('=')
                .ok_or_else(|| err(here, "expected 'num =' or 'den ='"))?;
            let after = after.trim_start();
            let open = after
                .strip_prefix('[')
                .ok_or_else(|| err(here, "expected '['"))?;
            let close = open.find(']').ok_or_else(|| err(here, "missing ']'"))?;
            let mut entries = Vec::new();
            for item in split_top_level(&open[..close]) {
                let item = item.trim().trim_matches('"');
                let lp = base + (body.len() - rest.len());
                entries.push(Series::parse(item).map_err(|e| match e {
                    Error::SyntaxError { pos, msg } => Error::SyntaxError { pos: lp + pos, msg },
                    e => e,
                })?);
            }
            match key.trim() {
                "num" => num = Some(entries),
                "den" => den = Some(entries),
                _ => return Err(err(here, "unknown key")),
            }
            rest = open[close + 1..].trim_start();
            rest = rest.strip_prefix(',').unwrap_or(rest);
        }
        let num = num.ok_or_else(|| err(base, "missing num"))?;
        let den = den.ok_or_else(|| err(base, "missing den"))?;
        RationalMapL::new(num, den)
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if !s[start..].trim().is_empty() {
        out.push(&s[start..]);
    }
    out
}

impl fmt::Display for RationalMapL {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &SeriesPoly| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
        write!(f, "ratmap {{ num = [{}], den = [{}] }}", list(&self.num), list(&self.den))
    }
}

/// Formats a hole list as `point^multiplicity` entries.
pub fn fmt_holes(holes: &[(Ext, usize)]) -> String {
    holes
        .iter()
        .map(|(z, k)| match z {
            Ext::Finite(z) => format!("{}^{}", text::fmt_complex(*z), k),
            Ext::Infinity => format!("inf^{k}"),
        })
        .collect::<Vec<_>>()
        .join(", ")
}
