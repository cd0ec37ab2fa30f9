//! Type II points of the Berkovich projective line, tangent directions,
//! images under rational maps and the induced tangent (reduction) maps.
//!
//! A type II point is a closed disk `D(a, |t^r|)`: a center `a` known to
//! order `t^r` and a rational radius exponent `r`. Larger `r` means a
//! smaller disk. The Gauss point is `D(0, 1)`, i.e. `r = 0`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::algebra::{Ext, Poly, RatFunc, Scalar, ToleranceConfig, ZERO};
use crate::error::{Error, Result};
use crate::puiseux::{ExpQ, PuiseuxSeries, Series, Valuation};
use crate::ratmap::{ProjPointL, RationalMapL};
use crate::text::Parser;

/// Bound on the number of leading-term corrections in [`image_type_ii`].
const MAX_CENTER_STEPS: usize = 256;

#[derive(Clone, PartialEq)]
pub struct TypeIIPoint {
    center: Series,
    rexp: ExpQ,
}

impl TypeIIPoint {
    /// The disk `D(center, |t^r|)`. Terms of the center at or beyond `r`
    /// are discarded; the center must be known to order `r`.
    pub fn new(center: &Series, r: ExpQ) -> Result<TypeIIPoint> {
        if let Some(p) = center.prec() {
            if p < r {
                return Err(Error::PrecisionExhausted(format!(
                    "center known to t^{p} but radius exponent is {r}"
                )));
            }
        }
        Ok(TypeIIPoint {
            center: center.exact_part_below(r),
            rexp: r,
        })
    }

    pub fn gauss() -> TypeIIPoint {
        TypeIIPoint {
            center: Series::zero(),
            rexp: ExpQ::zero(),
        }
    }

    pub fn center(&self) -> &Series {
        &self.center
    }

    pub fn rexp(&self) -> ExpQ {
        self.rexp
    }

    /// Equality of disks: same radius and centers agreeing below it.
    pub fn same_point(&self, o: &TypeIIPoint, tol: &ToleranceConfig) -> bool {
        self.rexp == o.rexp && self.center.sub(&o.center, tol).is_zero_to_precision()
    }

    /// The generic point `a + t^r u` as a series over `C[u]`.
    fn generic(&self) -> PuiseuxSeries<Poly> {
        let mut terms: Vec<(ExpQ, Poly)> = self
            .center
            .terms()
            .iter()
            .map(|(e, c)| (*e, Poly::constant(*c)))
            .collect();
        terms.push((self.rexp, Poly::x()));
        PuiseuxSeries::exact(terms)
    }

    /// Parses `gauss` or `xi("<series>"; p/q)`. A center without an order
    /// term is exact.
    pub fn parse(s: &str) -> Result<TypeIIPoint> {
        let t = s.trim();
        if t == "gauss" {
            return Ok(TypeIIPoint::gauss());
        }
        let off = s.len() - s.trim_start().len();
        let err = |pos: usize, msg: &str| Error::SyntaxError {
            pos,
            msg: msg.into(),
        };
        let inner = t
            .strip_prefix("xi")
            .map(str::trim_start)
            .and_then(|r| r.strip_prefix('('))
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| err(off, "expected gauss or xi(\"<series>\"; p/q)"))?;
        let (cs, rs) = inner
            .rsplit_once(';')
            .ok_or_else(|| err(off, "expected ';' between center and radius"))?;
        let cs = cs.trim().trim_matches('"');
        let base = off + t.find(cs).unwrap_or(0);
        let mut p = Parser::new(cs, 't');
        let list = p.term_list().map_err(|e| match e {
            Error::SyntaxError { pos, msg } => Error::SyntaxError { pos: base + pos, msg },
            e => e,
        })?;
        let exact = list.order.is_none();
        let center = Series::from_term_list(list)?;
        let center = if exact {
            Series::exact(center.terms().to_vec())
        } else {
            center
        };
        let r: ExpQ = rs.trim().parse().map_err(|_| err(off + t.len(), "bad radius exponent"))?;
        TypeIIPoint::new(&center, r)
    }
}

impl fmt::Display for TypeIIPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rexp.is_zero() && self.center.is_zero_to_precision() {
            f.write_str("gauss")
        } else {
            write!(f, "xi(\"{}\"; {})", self.center, self.rexp)
        }
    }
}

impl fmt::Debug for TypeIIPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for TypeIIPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// A tangent direction at a type II point, named by its residue: the
/// direction of points `a + t^r (residue + ...)`, or the outward direction
/// for `Infinity`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub at: TypeIIPoint,
    pub residue: Ext,
}

impl Direction {
    pub fn same(&self, o: &Direction, tol: &ToleranceConfig) -> bool {
        self.at.same_point(&o.at, tol)
            && match (self.residue, o.residue) {
                (Ext::Infinity, Ext::Infinity) => true,
                (Ext::Finite(a), Ext::Finite(b)) => {
                    (a - b).norm() <= tol.root_match * a.norm().max(b.norm()).max(1.0)
                }
                _ => false,
            }
    }
}

/// Image of a type II point with its tangent map.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentData {
    pub source: TypeIIPoint,
    pub image: TypeIIPoint,
    /// Map between residue coordinates at `source` and at `image`.
    pub map: RatFunc,
    pub local_degree: usize,
}

fn horner_generic(coeffs: &[Series], g: &PuiseuxSeries<Poly>, tol: &ToleranceConfig) -> PuiseuxSeries<Poly> {
    coeffs.iter().rev().fold(PuiseuxSeries::zero(), |acc, c| {
        acc.mul(g, tol).add(&c.map_coeffs(|x| Poly::constant(*x)), tol)
    })
}

/// If `e = k d` up to tolerance, returns `k`.
fn proportional(e: &Poly, d: &Poly, tol: &ToleranceConfig) -> Option<Scalar> {
    let (j, dj) = d
        .coeffs()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())?;
    let k = e.coeff(j) / dj;
    let r = e.sub(&d.scale(k));
    let scale = e.norm_inf().max(k.norm() * d.norm_inf());
    tol.negligible(r.norm_inf(), scale).then_some(k)
}

/// Image of `xi` under `phi` and the tangent map there.
///
/// With `z = a + t^r u`, write `N(z)` and `D(z)` as series over `C[u]`.
/// The image center `c` is built term by term: while the leading
/// coefficient of `N - c D` is a constant multiple `k` of the leading
/// coefficient `D_v(u)` of `D`, the term `k t^(e - v)` is added to `c`.
/// When it is not, the image is `D(c, |t^(e-v)|)` and the tangent map is
/// `E_e(u) / D_v(u)` after cancellation. No series is ever inverted.
pub fn image_type_ii(phi: &RationalMapL, xi: &TypeIIPoint, tol: &ToleranceConfig) -> Result<TangentData> {
    let g = xi.generic();
    let nn = horner_generic(phi.num(), &g, tol);
    let dd = horner_generic(phi.den(), &g, tol);
    let (v, dv) = match dd.valuation() {
        Valuation::Finite(v) => (v, dd.leading().unwrap().1.clone()),
        _ => {
            return Err(Error::InsufficientPrecision(format!(
                "denominator vanishes to precision at {xi}"
            )))
        }
    };
    let mut c = Series::zero();
    let mut e_ser = nn;
    for _ in 0..MAX_CENTER_STEPS {
        let (e, ee) = match e_ser.valuation() {
            Valuation::Finite(e) => (e, e_ser.leading().unwrap().1.clone()),
            _ => {
                return Err(Error::InsufficientPrecision(format!(
                    "image center of {xi} not determined before t^{}",
                    e_ser.prec().map(|p| p - v).unwrap_or(ExpQ::zero())
                )))
            }
        };
        let s = e - v;
        if let Some(k) = proportional(&ee, &dv, tol) {
            c = c.add(&Series::monomial(k, s), tol);
            let shifted = dd.shift(s).map_coeffs(|p| p.scale(k));
            e_ser = e_ser.sub(&shifted, tol);
            continue;
        }
        let map = RatFunc::new(ee, dv.clone(), tol)?;
        let local_degree = map.degree();
        return Ok(TangentData {
            source: xi.clone(),
            image: TypeIIPoint::new(&c, s)?,
            map,
            local_degree,
        });
    }
    Err(Error::InsufficientPrecision(format!(
        "image center of {xi} needs more than {MAX_CENTER_STEPS} terms"
    )))
}

/// Residue of a series point at `xi`.
fn residue_of_series(xi: &TypeIIPoint, z: &Series, tol: &ToleranceConfig) -> Result<Ext> {
    let r = xi.rexp;
    let diff = z.sub(&xi.center, tol);
    match diff.valuation() {
        Valuation::Zero => Ok(Ext::Finite(ZERO)),
        Valuation::ZeroToPrecision(p) if p > r => Ok(Ext::Finite(ZERO)),
        Valuation::ZeroToPrecision(_) => Err(Error::PrecisionExhausted(format!(
            "point not known to order t^{r}"
        ))),
        Valuation::Finite(w) if w < r => Ok(Ext::Infinity),
        Valuation::Finite(w) if w > r => Ok(Ext::Finite(ZERO)),
        Valuation::Finite(_) => Ok(Ext::Finite(diff.coeff_at(r))),
    }
}

/// Direction at `xi` containing the type I point `p`.
pub fn direction_of_point(xi: &TypeIIPoint, p: &ProjPointL, tol: &ToleranceConfig) -> Result<Direction> {
    let residue = match p.affine(tol)? {
        None => Ext::Infinity,
        Some(z) => residue_of_series(xi, &z, tol)?,
    };
    Ok(Direction {
        at: xi.clone(),
        residue,
    })
}

/// Direction at `xi` containing the type II point `eta`.
pub fn direction_of(xi: &TypeIIPoint, eta: &TypeIIPoint, tol: &ToleranceConfig) -> Result<Direction> {
    let r = xi.rexp;
    let diff = eta.center.sub(&xi.center, tol);
    let v = diff.valuation().lower();
    let inside = v.map_or(true, |v| v >= r);
    let residue = if inside && eta.rexp > r {
        Ext::Finite(diff.coeff_at(r))
    } else if inside && eta.rexp == r {
        return Err(Error::SamePoint);
    } else {
        Ext::Infinity
    };
    Ok(Direction {
        at: xi.clone(),
        residue,
    })
}

/// Smallest disk containing both points.
pub fn join(a: &TypeIIPoint, b: &TypeIIPoint, tol: &ToleranceConfig) -> TypeIIPoint {
    let diff = a.center.sub(&b.center, tol);
    let mut r = a.rexp.min(b.rexp);
    if let Some(v) = diff.valuation().lower() {
        r = r.min(v);
    }
    TypeIIPoint {
        center: a.center.exact_part_below(r),
        rexp: r,
    }
}

/// Join of two type I points: the disk centered at one with radius
/// `|x - y|`.
pub fn join_of(x: &ProjPointL, y: &ProjPointL, tol: &ToleranceConfig) -> Result<TypeIIPoint> {
    let (Some(a), Some(b)) = (x.affine(tol)?, y.affine(tol)?) else {
        return Err(Error::InfiniteJoin);
    };
    let diff = a.sub(&b, tol);
    match diff.valuation() {
        Valuation::Finite(v) => TypeIIPoint::new(&a, v),
        Valuation::Zero => Err(Error::SamePoint),
        Valuation::ZeroToPrecision(p) => Err(Error::PrecisionExhausted(format!(
            "points agree to t^{p}; their join is not determined"
        ))),
    }
}

/// Hyperbolic distance.
pub fn hyp_distance(a: &TypeIIPoint, b: &TypeIIPoint, tol: &ToleranceConfig) -> ExpQ {
    let j = join(a, b, tol);
    (a.rexp - j.rexp) + (b.rexp - j.rexp)
}

/// True when `p` lies on the segment `[a, b]`.
pub fn on_segment(p: &TypeIIPoint, a: &TypeIIPoint, b: &TypeIIPoint, tol: &ToleranceConfig) -> bool {
    hyp_distance(a, p, tol) + hyp_distance(p, b, tol) == hyp_distance(a, b, tol)
}

/// The point of `[a, b]` at distance `dist` from `a`.
pub fn point_on_segment(a: &TypeIIPoint, b: &TypeIIPoint, dist: ExpQ, tol: &ToleranceConfig) -> Result<TypeIIPoint> {
    let j = join(a, b, tol);
    let up = a.rexp - j.rexp;
    let total = up + (b.rexp - j.rexp);
    if dist.is_negative() || dist > total {
        return Err(Error::InvalidArgument(format!(
            "distance {dist} outside segment of length {total}"
        )));
    }
    if dist <= up {
        TypeIIPoint::new(&a.center, a.rexp - dist)
    } else {
        TypeIIPoint::new(&b.center, j.rexp + (dist - up))
    }
}

/// Whether `xi` lies on the segment joining the two critical points of a
/// bicritical map: exactly when the critical points lie in different
/// directions at `xi`.
pub fn on_ramification(
    xi: &TypeIIPoint,
    c1: &ProjPointL,
    c2: &ProjPointL,
    tol: &ToleranceConfig,
) -> Result<bool> {
    let d1 = direction_of_point(xi, c1, tol)?;
    let d2 = direction_of_point(xi, c2, tol)?;
    Ok(!d1.same(&d2, tol))
}

/// A direction is bad when it meets the segment between the critical
/// points. Off that segment exactly one direction meets it, the one
/// containing the critical points; on it, every direction is good.
pub fn is_bad_direction(phi: &RationalMapL, dir: &Direction, tol: &ToleranceConfig) -> Result<bool> {
    let c = phi.critical_points_bicritical(tol)?;
    if on_ramification(&dir.at, &c.c1, &c.c2, tol)? {
        return Ok(false);
    }
    Ok(direction_of_point(&dir.at, &c.c1, tol)?.same(dir, tol))
}

/// The tree spanned by a set of type II points: vertices are the points
/// and their pairwise joins, each joined to the nearest vertex above it.
#[derive(Debug, Clone)]
pub struct Tree {
    pub vertices: Vec<TypeIIPoint>,
    /// `(child, parent, length)`.
    pub edges: Vec<(usize, usize, ExpQ)>,
}

pub fn spanning_tree(points: &[TypeIIPoint], tol: &ToleranceConfig) -> Tree {
    let mut vertices: Vec<TypeIIPoint> = Vec::new();
    let push = |p: TypeIIPoint, v: &mut Vec<TypeIIPoint>| {
        if !v.iter().any(|q| q.same_point(&p, tol)) {
            v.push(p);
        }
    };
    for p in points {
        push(p.clone(), &mut vertices);
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            push(join(&points[i], &points[j], tol), &mut vertices);
        }
    }
    let above = |w: &TypeIIPoint, v: &TypeIIPoint| -> bool {
        w.rexp < v.rexp
            && v.center
                .sub(&w.center, tol)
                .valuation()
                .lower()
                .map_or(true, |x| x >= w.rexp)
    };
    let mut edges = Vec::new();
    for (i, v) in vertices.iter().enumerate() {
        let parent = vertices
            .iter()
            .enumerate()
            .filter(|(_, w)| above(w, v))
            .max_by(|a, b| a.1.rexp.cmp(&b.1.rexp));
        if let Some((j, w)) = parent {
            edges.push((i, j, v.rexp - w.rexp));
        }
    }
    Tree { vertices, edges }
}
