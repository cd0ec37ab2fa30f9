//! Explicit families: the bicritical family `f_{u,v}`, its degeneracy
//! locus, the worked degenerating example
//! `phi(z) = 1 + t / (1 - z^d + g(t))` and a solver for the coefficients of
//! `g` that produce a 3-cycle whose first-return map is a power map.

use serde::Serialize;

use crate::algebra::{poly_roots, Ext, RatFunc, Scalar, ToleranceConfig, ONE, ZERO};
use crate::berkovich::TypeIIPoint;
use crate::dynamics::{critical_points, find_cycle_type_ii, is_conjugate_to_power_map, PowerMapConjugacy};
use crate::error::{Error, Result};
use crate::puiseux::{ExpQ, Series, Valuation};
use crate::ratmap::{ComplexRatMap, ProjPointL, RationalMapL};

/// Coefficients `(A, B, C, D)` of `f_{u,v} = (A z^d + B) / (C z^d + D)`.
pub fn milnor_coeffs(u: Scalar, v: Scalar) -> [Scalar; 4] {
    let a = (u + 2.0) * v + u * u + 2.0 * u + 2.0;
    let b = u * v + v * v - 1.0;
    let c = -v * v + u * v + (u + 1.0) * (u + 1.0);
    let d = (u + 2.0 * v + 2.0) * v;
    [a, b, c, d]
}

/// `(v + 1)^2 (u + v + 1)^2`, the value of `AD - BC`.
pub fn milnor_resultant(u: Scalar, v: Scalar) -> Scalar {
    let x = (v + 1.0) * (u + v + 1.0);
    x * x
}

fn homogeneous(d: usize, top: Scalar, bottom: Scalar) -> crate::algebra::Poly {
    let mut c = vec![ZERO; d + 1];
    c[0] = bottom;
    c[d] += top;
    crate::algebra::Poly::new(c)
}

/// The complex map `f_{u,v}` of degree `d`.
pub fn milnor_map(u: Scalar, v: Scalar, d: usize, tol: &ToleranceConfig) -> Result<ComplexRatMap> {
    if d < 2 {
        return Err(Error::InvalidArgument("degree below 2".into()));
    }
    let x = (v + 1.0) * (u + v + 1.0);
    if tol.negligible(x.norm(), 0.0) {
        return Err(Error::Degenerate);
    }
    let [a, b, c, dd] = milnor_coeffs(u, v);
    ComplexRatMap::new(homogeneous(d, a, b), homogeneous(d, c, dd))
}

/// The map `f_{u(t),v(t)}` over the series field.
pub fn milnor_map_series(u: &Series, v: &Series, d: usize, tol: &ToleranceConfig) -> Result<RationalMapL> {
    if d < 2 {
        return Err(Error::InvalidArgument("degree below 2".into()));
    }
    let one = Series::one();
    let two = Series::constant(Scalar::new(2.0, 0.0));
    let v1 = v.add(&one, tol);
    let uv1 = u.add(&v1, tol);
    if v1.mul(&uv1, tol).is_zero_to_precision() {
        return Err(Error::Degenerate);
    }
    let u1 = u.add(&one, tol);
    let a = u.add(&two, tol).mul(v, tol).add(&u.mul(u, tol), tol).add(&u.scale(Scalar::new(2.0, 0.0)), tol).add(&two, tol);
    let b = u.mul(v, tol).add(&v.mul(v, tol), tol).sub(&one, tol);
    let c = u.mul(v, tol).sub(&v.mul(v, tol), tol).add(&u1.mul(&u1, tol), tol);
    let dd = u.add(&v.scale(Scalar::new(2.0, 0.0)), tol).add(&two, tol).mul(v, tol);
    let lift = |top: Series, bottom: Series| {
        let mut p = vec![Series::zero(); d + 1];
        p[0] = bottom;
        p[d] = top;
        p
    };
    RationalMapL::with_degree(lift(a, b), lift(c, dd), d)
}

/// Where a curve `(u(t), v(t))` tends in the compactified parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum DegeneracyClass {
    None,
    LineAtInfinity,
    VLine,
    UvLine,
}

fn tends_to_zero(s: &Series) -> Result<bool> {
    match s.valuation() {
        Valuation::Zero => Ok(true),
        Valuation::Finite(v) => Ok(v.is_positive()),
        Valuation::ZeroToPrecision(p) if p.is_positive() => Ok(true),
        Valuation::ZeroToPrecision(p) => Err(Error::PrecisionExhausted(format!("series known only to t^{p}"))),
    }
}

pub fn degeneracy_check(u: &Series, v: &Series, tol: &ToleranceConfig) -> Result<DegeneracyClass> {
    for s in [u, v] {
        match s.valuation() {
            Valuation::Finite(x) if x.is_negative() => return Ok(DegeneracyClass::LineAtInfinity),
            Valuation::ZeroToPrecision(p) if !p.is_positive() => {
                return Err(Error::PrecisionExhausted(format!("series known only to t^{p}")))
            }
            _ => {}
        }
    }
    let v1 = v.add(&Series::one(), tol);
    if tends_to_zero(&v1)? {
        return Ok(DegeneracyClass::VLine);
    }
    if tends_to_zero(&u.add(&v1, tol))? {
        return Ok(DegeneracyClass::UvLine);
    }
    Ok(DegeneracyClass::None)
}

/// Degree and the coefficients `a_1, a_2, ...` of `g(t) = sum a_n t^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleParams {
    pub d: usize,
    #[serde(skip)]
    pub g: Vec<Scalar>,
}

impl ExampleParams {
    pub fn new(d: usize, g: Vec<Scalar>) -> Result<ExampleParams> {
        if !(2..=5).contains(&d) {
            return Err(Error::InvalidArgument(format!("degree {d} outside 2..=5")));
        }
        if g.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        Ok(ExampleParams { d, g })
    }
}

/// `phi(z) = ((1 + g + t) - z^d) / ((1 + g) - z^d)` with coefficients known
/// to `t^prec`.
pub fn example_map(p: &ExampleParams, prec: ExpQ) -> RationalMapL {
    let gterms: Vec<(ExpQ, Scalar)> = p
        .g
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != ZERO)
        .map(|(k, c)| (ExpQ::from_int(k as i64 + 1), *c))
        .collect();
    let mut den0 = vec![(ExpQ::zero(), ONE)];
    den0.extend(gterms.iter().cloned());
    let mut num0 = den0.clone();
    num0.push((ExpQ::one(), ONE));
    let d = p.d;
    let mk = |c0: Vec<(ExpQ, Scalar)>| {
        let mut v = vec![Series::zero(); d + 1];
        v[0] = Series::from_terms(c0, Some(prec));
        v[d] = Series::constant(-ONE);
        v
    };
    RationalMapL::with_degree(mk(num0), mk(den0), d).expect("denominator is nonzero")
}

/// Outcome of the 3-cycle check at `xi(0; 1/(d-1))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExampleVerification {
    pub period: Option<usize>,
    pub conjugate: bool,
    pub residual: f64,
    #[serde(skip)]
    pub first_return: Option<RatFunc>,
}

impl ExampleVerification {
    pub fn passed(&self) -> bool {
        self.period == Some(3) && self.conjugate
    }
}

/// Searches for the cycle through `xi(0; 1/(d-1))` and tests its
/// first-return map for conjugacy to `z^d`.
pub fn verify_example(p: &ExampleParams, prec: ExpQ, tol: &ToleranceConfig) -> Result<ExampleVerification> {
    let phi = example_map(p, prec);
    let xi = TypeIIPoint::new(&Series::zero(), ExpQ::new(1, p.d as i64 - 1))?;
    let rec = match find_cycle_type_ii(&phi, &xi, 6, tol) {
        Ok(r) => r,
        Err(Error::InsufficientPrecision(_)) | Err(Error::PrecisionExhausted(_)) => None,
        Err(e) => return Err(e),
    };
    let Some(rec) = rec else {
        return Ok(ExampleVerification {
            period: None,
            conjugate: false,
            residual: f64::INFINITY,
            first_return: None,
        });
    };
    let conj = if rec.first_return.degree() >= 2 {
        is_conjugate_to_power_map(&ComplexRatMap::from_ratfunc(&rec.first_return), tol)?
    } else {
        PowerMapConjugacy {
            conjugate: false,
            witness: None,
            residual: f64::INFINITY,
        }
    };
    Ok(ExampleVerification {
        period: Some(rec.period),
        conjugate: conj.conjugate,
        residual: conj.residual,
        first_return: Some(rec.first_return),
    })
}

/// First-return tangent map of the 2-cycle through the Gauss point.
pub fn gauss_return_map(p: &ExampleParams, prec: ExpQ, tol: &ToleranceConfig) -> Result<RatFunc> {
    let phi = example_map(p, prec);
    let rec = find_cycle_type_ii(&phi, &TypeIIPoint::gauss(), 4, tol)?
        .ok_or_else(|| Error::NoSolution("no cycle through the Gauss point".into()))?;
    if rec.period != 2 {
        return Err(Error::NoSolution(format!("Gauss cycle has period {}", rec.period)));
    }
    Ok(rec.first_return)
}

/// A verified coefficient set for the 3-cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExampleCandidate {
    pub d: usize,
    /// Target point of `Lambda = G^-1(1) \ {1}`.
    #[serde(skip)]
    pub h: Scalar,
    /// `a_1, a_2, ...`; entries past `a_2` are present only when the
    /// return map at `xi(0; 1/(d-1))` needed a further correction.
    #[serde(skip)]
    pub g: Vec<Scalar>,
    pub verification: ExampleVerification,
}

impl ExampleCandidate {
    pub fn a1(&self) -> Scalar {
        self.g[0]
    }

    pub fn a2(&self) -> Scalar {
        self.g[1]
    }
}

fn with_g(d: usize, g: Vec<Scalar>) -> ExampleParams {
    ExampleParams { d, g }
}

fn gauss_value_at_zero(d: usize, a1: Scalar, prec: ExpQ, tol: &ToleranceConfig) -> Result<Ext> {
    let g = gauss_return_map(&with_g(d, vec![a1]), prec, tol)?;
    Ok(g.eval(Ext::Finite(ZERO), tol))
}

/// `G^-1(1)` without the point 1, for the Gauss return map at `a1`.
pub fn lambda_set(d: usize, a1: Scalar, prec: ExpQ, tol: &ToleranceConfig) -> Result<Vec<Scalar>> {
    let g = gauss_return_map(&with_g(d, vec![a1]), prec, tol)?;
    let h = g.num().sub(g.den());
    Ok(poly_roots(&h, tol)?
        .into_iter()
        .filter(|(z, _)| (z - ONE).norm() > 1e-6)
        .map(|(z, _)| z)
        .collect())
}

/// Möbius interpolation: the value at `y` of the Möbius map sending each
/// `ys[i]` to `xs[i]`, via invariance of the cross ratio.
fn mobius_interpolate(ys: [Scalar; 3], xs: [Scalar; 3], y: Scalar) -> Scalar {
    let [y1, y2, y3] = ys;
    let [a1, a2, a3] = xs;
    let k = (y - y1) * (y2 - y3) / ((y - y3) * (y2 - y1));
    (a1 * (a2 - a3) - k * a3 * (a2 - a1)) / ((a2 - a3) - k * (a2 - a1))
}

/// Solves `G_{a1}(0) = h` for `a1`, by Möbius interpolation through three
/// evaluations followed by secant polishing.
fn solve_a1(d: usize, h: Scalar, prec: ExpQ, tol: &ToleranceConfig) -> Result<Scalar> {
    let f = |a: Scalar| -> Result<Scalar> {
        match gauss_value_at_zero(d, a, prec, tol)? {
            Ext::Finite(y) => Ok(y - h),
            Ext::Infinity => Err(Error::NoSolution("G(0) is infinite".into())),
        }
    };
    let xs = [Scalar::new(0.1, 0.2), Scalar::new(-0.7, 0.4), Scalar::new(0.9, -1.1)];
    let mut ys = [ZERO; 3];
    for i in 0..3 {
        ys[i] = f(xs[i])? + h;
    }
    let mut a = mobius_interpolate(ys, xs, h);
    let mut b = a + Scalar::new(1e-4, 1e-4);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    for _ in 0..40 {
        if fb.norm() <= 1e-14 * (1.0 + h.norm()) || fb == fa {
            break;
        }
        let c = b - fb * (b - a) / (fb - fa);
        a = b;
        fa = fb;
        b = c;
        fb = f(b)?;
    }
    let best = if fb.norm() <= fa.norm() { (b, fb) } else { (a, fa) };
    if best.1.norm() > 1e-9 * (1.0 + h.norm()) {
        return Err(Error::NoSolution(format!("a1 solve stalled with residual {:e}", best.1.norm())));
    }
    Ok(best.0)
}

/// Leading `t` coefficient of `1 - x2^d + g(t)` where `x2 = phi^2(0)`; also
/// returns the absolute value of its constant term.
pub fn landing_coefficient(p: &ExampleParams, prec: ExpQ, tol: &ToleranceConfig) -> Result<(Scalar, f64)> {
    let phi = example_map(p, prec);
    let zero = ProjPointL::finite(Series::zero());
    let x2 = phi.eval(&phi.eval(&zero, tol)?, tol)?;
    let x2 = x2
        .affine(tol)?
        .ok_or_else(|| Error::NoSolution("phi^2(0) is infinite".into()))?;
    let mut y = Series::one().sub(&x2.pow(p.d as u32, tol), tol);
    let g = Series::exact(
        p.g.iter()
            .enumerate()
            .map(|(k, c)| (ExpQ::from_int(k as i64 + 1), *c))
            .collect(),
    );
    y = y.add(&g, tol);
    Ok((y.coeff_at(ExpQ::one()), y.coeff_at(ExpQ::zero()).norm()))
}

/// Finds `x` with `f(x) = target` for `f` affine, checking affinity at a
/// third point.
fn solve_affine(f: impl Fn(Scalar) -> Result<Scalar>, target: Scalar) -> Result<Scalar> {
    let f0 = f(ZERO)?;
    let f1 = f(ONE)?;
    let f2 = f(Scalar::new(2.0, 0.0))?;
    let slope = f1 - f0;
    let scale = f0.norm().max(f1.norm()).max(1.0);
    if (f2 - f0 - slope * 2.0).norm() > 1e-8 * scale {
        return Err(Error::NoSolution("coefficient is not affine in the unknown".into()));
    }
    if slope.norm() <= 1e-12 * scale {
        return Err(Error::NoSolution("coefficient does not depend on the unknown".into()));
    }
    Ok((target - f0) / slope)
}

/// Residue of the first-return value at a critical point that the return
/// map at `xi(0; 1/(d-1))` fails to fix.
fn unfixed_critical_point(r: &RatFunc, tol: &ToleranceConfig) -> Result<Option<Ext>> {
    let cm = ComplexRatMap::from_ratfunc(r);
    for (c, _) in critical_points(&cm, tol)? {
        if cm.eval(c).chordal(c) > 1e-9 {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Solves for the coefficients of `g` branch by branch over `h` in
/// `Lambda`. Returns only verified candidates.
pub fn solve_example_coefficients(d: usize, prec: ExpQ, tol: &ToleranceConfig) -> Result<Vec<ExampleCandidate>> {
    ExampleParams::new(d, vec![])?;
    let reference = Scalar::new(0.31, 0.17);
    let lambda = lambda_set(d, reference, prec, tol)?;
    let check = lambda_set(d, Scalar::new(-0.43, 0.61), prec, tol)?;
    if lambda.len() != check.len()
        || lambda
            .iter()
            .any(|h| check.iter().all(|k| (h - k).norm() > 1e-7))
    {
        return Err(Error::NoSolution("G^-1(1) depends on a1".into()));
    }
    let mut out = Vec::new();
    for &h in &lambda {
        let Ok(a1) = solve_a1(d, h, prec, tol) else {
            continue;
        };
        let g = gauss_return_map(&with_g(d, vec![a1]), prec, tol)?;
        let g0 = g.eval(Ext::Finite(ZERO), tol);
        let g1 = g.eval(g0, tol);
        let dg = g.derivative().eval(g0, tol);
        let landed = g0.chordal(Ext::Finite(ONE)) > 1e-6
            && g1.chordal(Ext::Finite(ONE)) < 1e-8
            && dg.chordal(Ext::Finite(ZERO)) > 1e-8;
        if !landed {
            continue;
        }
        let c_of = |a2: Scalar| landing_coefficient(&with_g(d, vec![a1, a2]), prec, tol).map(|x| x.0);
        let Ok(a2) = solve_affine(c_of, -ONE) else {
            continue;
        };
        let mut coeffs = vec![a1, a2];
        let mut ver = verify_example(&with_g(d, coeffs.clone()), prec, tol)?;
        // a further coefficient fixes the remaining critical point of the
        // return map when a1 and a2 alone do not
        for _ in 0..2 {
            if ver.passed() || ver.period != Some(3) {
                break;
            }
            let Some(r) = ver.first_return.clone() else { break };
            let Some(c) = unfixed_critical_point(&r, tol)? else { break };
            let Ext::Finite(cz) = c else { break };
            let base = coeffs.clone();
            let ret_at = |a: Scalar| -> Result<Scalar> {
                let mut g = base.clone();
                g.push(a);
                let v = verify_example(&with_g(d, g), prec, tol)?;
                let r = v.first_return.ok_or_else(|| Error::NoSolution("cycle lost".into()))?;
                r.eval(c, tol)
                    .finite()
                    .ok_or_else(|| Error::NoSolution("return value infinite".into()))
            };
            let Ok(a) = solve_affine(ret_at, cz) else { break };
            coeffs.push(a);
            ver = verify_example(&with_g(d, coeffs.clone()), prec, tol)?;
        }
        if ver.passed() {
            out.push(ExampleCandidate {
                d,
                h,
                g: coeffs,
                verification: ver,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::NoSolution(format!("no branch verifies for d = {d}")));
    }
    Ok(out)
}

/// The published pair for `d = 3`.
pub fn published_cubic_pair() -> (Scalar, Scalar) {
    let s3 = 3f64.sqrt();
    let w = Scalar::new(3.0, s3);
    let a1 = Scalar::new(7.0, 3.0 * s3) / w;
    let a2 = Scalar::new(-2.0 * 49.0, -2.0 * 25.0 * s3) / (w * 9.0);
    (a1, a2)
}
