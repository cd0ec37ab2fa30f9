//! Orbits and cycles of type II points, rescaling limits, lifting of type I
//! periodic points by Newton's method over the series field, multipliers
//! and fixed-point counts in fixed Rivera domains.

use serde::Serialize;

use crate::algebra::{poly_roots, rat_compose, Ext, Poly, RatFunc, Scalar, ToleranceConfig, ONE, ZERO};
use crate::berkovich::{direction_of, direction_of_point, image_type_ii, point_on_segment, join, hyp_distance, TangentData, TypeIIPoint};
use crate::error::{Error, Result};
use crate::puiseux::{ExpQ, Series, Valuation};
use crate::ratmap::{sp_derivative, sp_eval, sp_mul, sp_sub, ComplexRatMap, ProjPointL, RationalMapL, Reduction};
use crate::text;

pub const MAX_ORBIT: usize = 64;
pub const MAX_PERIOD: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Classification {
    Repelling,
    Indifferent,
}

/// A cycle of type II points with its first-return tangent map at
/// `points[0]`.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CycleRecord {
    pub points: Vec<TypeIIPoint>,
    pub period: usize,
    pub local_degrees: Vec<usize>,
    #[serde(serialize_with = "ser_ratfunc_u")]
    pub first_return: RatFunc,
    pub classification: Classification,
    #[serde(skip)]
    pub legs: Vec<TangentData>,
}

fn ser_ratfunc_u<S: serde::Serializer>(r: &RatFunc, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string_var('u'))
}

/// Successive images of `xi`, stopping after the first image that revisits
/// an earlier point.
pub fn orbit_type_ii(
    phi: &RationalMapL,
    xi: &TypeIIPoint,
    max_iter: usize,
    tol: &ToleranceConfig,
) -> Result<Vec<TangentData>> {
    if max_iter > MAX_ORBIT {
        return Err(Error::InvalidArgument(format!("maxIter above {MAX_ORBIT}")));
    }
    let mut visited = vec![xi.clone()];
    let mut out = Vec::new();
    let mut cur = xi.clone();
    for _ in 0..max_iter {
        let td = image_type_ii(phi, &cur, tol)?;
        let revisit = visited.iter().any(|p| p.same_point(&td.image, tol));
        cur = td.image.clone();
        out.push(td);
        if revisit {
            break;
        }
        visited.push(cur.clone());
    }
    Ok(out)
}

/// Finds the cycle entered by the orbit of `seed`, if its period is at
/// most `max_period` and it is reached within `2 max_period` steps.
pub fn find_cycle_type_ii(
    phi: &RationalMapL,
    seed: &TypeIIPoint,
    max_period: usize,
    tol: &ToleranceConfig,
) -> Result<Option<CycleRecord>> {
    if max_period > MAX_PERIOD {
        return Err(Error::InvalidArgument(format!("maxPeriod above {MAX_PERIOD}")));
    }
    let orbit = orbit_type_ii(phi, seed, (2 * max_period).min(MAX_ORBIT), tol)?;
    let Some(last) = orbit.last() else {
        return Ok(None);
    };
    let Some(start) = orbit.iter().position(|td| td.source.same_point(&last.image, tol)) else {
        return Ok(None);
    };
    let legs: Vec<TangentData> = orbit[start..].to_vec();
    let period = legs.len();
    if period > max_period {
        return Ok(None);
    }
    let first_return = compose_legs(&legs, tol)?;
    let classification = if first_return.degree() == 1 {
        Classification::Indifferent
    } else {
        Classification::Repelling
    };
    Ok(Some(CycleRecord {
        points: legs.iter().map(|l| l.source.clone()).collect(),
        period,
        local_degrees: legs.iter().map(|l| l.local_degree).collect(),
        first_return,
        classification,
        legs,
    }))
}

/// `legs[k-1].map ∘ ... ∘ legs[0].map`.
fn compose_legs(legs: &[TangentData], tol: &ToleranceConfig) -> Result<RatFunc> {
    let mut r = RatFunc::identity();
    for l in legs {
        r = rat_compose(&l.map, &r, tol)?;
    }
    Ok(r)
}

impl CycleRecord {
    /// Tangent map of `phi^n` at `points[j]`, composed along the cycle.
    pub fn tangent_of_iterate(&self, j: usize, n: usize, tol: &ToleranceConfig) -> Result<RatFunc> {
        let q = self.period;
        let legs: Vec<TangentData> = (0..n).map(|k| self.legs[(j + k) % q].clone()).collect();
        compose_legs(&legs, tol)
    }
}

pub fn classify_type_ii_cycle(rec: &CycleRecord) -> Classification {
    if rec.first_return.degree() == 1 {
        Classification::Indifferent
    } else {
        Classification::Repelling
    }
}

/// The first-return map of a repelling cycle as a complex rational map.
pub fn rescaling_limit(rec: &CycleRecord) -> Result<ComplexRatMap> {
    if classify_type_ii_cycle(rec) != Classification::Repelling {
        return Err(Error::NotRepelling);
    }
    Ok(ComplexRatMap::from_ratfunc(&rec.first_return))
}

/// Result of [`is_conjugate_to_power_map`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMapConjugacy {
    pub conjugate: bool,
    /// Möbius map `W` with `W ∘ R ∘ W^-1 = z^d`.
    pub witness: Option<RatFunc>,
    /// Largest relative residual of `W(R(z)) = W(z)^d` over sample points.
    pub residual: f64,
}

impl PowerMapConjugacy {
    fn no() -> Self {
        PowerMapConjugacy {
            conjugate: false,
            witness: None,
            residual: f64::INFINITY,
        }
    }
}

/// Critical points of a complex map with multiplicities, infinity included.
pub fn critical_points(r: &ComplexRatMap, tol: &ToleranceConfig) -> Result<Vec<(Ext, usize)>> {
    let d = r.degree();
    let w = r.wronskian().trim(tol);
    let Some(dw) = w.degree() else {
        return Ok(Vec::new());
    };
    let mut out: Vec<(Ext, usize)> = poly_roots(&w, tol)?
        .into_iter()
        .map(|(z, m)| (Ext::Finite(z), m))
        .collect();
    if 2 * d >= 2 && 2 * d - 2 > dw {
        out.push((Ext::Infinity, 2 * d - 2 - dw));
    }
    Ok(out)
}

/// Inverse of a Möbius map.
pub fn mobius_inverse(m: &RatFunc) -> Result<RatFunc> {
    let (b, a) = (m.num().coeff(0), m.num().coeff(1));
    let (dd, c) = (m.den().coeff(0), m.den().coeff(1));
    RatFunc::mobius(dd, -b, -c, a)
}

/// Decides whether `r` is Möbius-conjugate to `z^d`: two critical points,
/// each of multiplicity `d - 1` and fixed.
pub fn is_conjugate_to_power_map(r: &ComplexRatMap, tol: &ToleranceConfig) -> Result<PowerMapConjugacy> {
    let d = r.degree();
    if d < 2 {
        return Ok(PowerMapConjugacy::no());
    }
    let crit = critical_points(r, tol)?;
    if crit.len() != 2 || crit.iter().any(|c| c.1 != d - 1) {
        return Ok(PowerMapConjugacy::no());
    }
    for (c, _) in &crit {
        if r.eval(*c).chordal(*c) > tol.root_match.max(1e-9) * 10.0 {
            return Ok(PowerMapConjugacy::no());
        }
    }
    let (c1, c2) = match (crit[0].0, crit[1].0) {
        (Ext::Infinity, b) => (b, Ext::Infinity),
        (a, b) => (a, b),
    };
    let c1 = c1.finite().expect("at most one critical point at infinity");
    let m = match c2 {
        Ext::Finite(c2) => RatFunc::mobius(ONE, -c1, ONE, -c2)?,
        Ext::Infinity => RatFunc::mobius(ONE, -c1, ZERO, ONE)?,
    };
    let rf = r.to_ratfunc()?;
    let s = rat_compose(&rat_compose(&m, &rf, tol)?, &mobius_inverse(&m)?, tol)?;
    // s should be k z^d
    let k = s.num().coeff(d) / s.den().coeff(0);
    if s.den().degree() != Some(0) || !k.is_finite() || k == ZERO {
        return Ok(PowerMapConjugacy::no());
    }
    let lambda = (ONE / k).powf(1.0 / (d - 1) as f64);
    let w = RatFunc::from_parts(m.num().scale(ONE / lambda), m.den().clone())?;
    let mut residual: f64 = 0.0;
    for j in 0..12 {
        let z = c1 + Scalar::from_polar(0.37 + 0.05 * j as f64, 0.7 + j as f64);
        let lhs = w.eval(rf.eval(Ext::Finite(z), tol), tol);
        let rhs = match w.eval(Ext::Finite(z), tol) {
            Ext::Finite(x) => Ext::Finite(x.powu(d as u32)),
            Ext::Infinity => Ext::Infinity,
        };
        let err = match (lhs, rhs) {
            (Ext::Finite(a), Ext::Finite(b)) => (a - b).norm() / b.norm().max(1.0),
            (Ext::Infinity, Ext::Infinity) => 0.0,
            _ => f64::INFINITY,
        };
        residual = residual.max(err);
    }
    Ok(PowerMapConjugacy {
        conjugate: residual <= 1e-7,
        witness: Some(w),
        residual,
    })
}

/// A cycle of type I points over the series field.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TypeICycle {
    #[serde(serialize_with = "ser_points")]
    pub points: Vec<ProjPointL>,
    pub period: usize,
    pub multiplier: Series,
    /// Valuation of `phi^n(z) - z` at the final Newton iterate.
    #[serde(serialize_with = "ser_expq_opt")]
    pub residual_valuation: Option<ExpQ>,
}

fn ser_points<S: serde::Serializer>(p: &[ProjPointL], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.iter().map(|x| x.to_string()))
}

fn ser_expq_opt<S: serde::Serializer>(e: &Option<ExpQ>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.serialize_str(&e.to_string()),
        None => s.serialize_str("inf"),
    }
}

/// Newton's method for a point of period dividing `n`, on the polynomial
/// `P(z) = N_n(z) - z D_n(z)` whose roots are the finite fixed points of
/// `phi^n`. Stops once `phi^n(z) - z` has valuation at least `target`.
pub fn newton_lift_periodic(
    phi: &RationalMapL,
    n: usize,
    seed: &ProjPointL,
    target: ExpQ,
    cap: usize,
    tol: &ToleranceConfig,
) -> Result<TypeICycle> {
    let phin = phi.iterate(n, cap, tol)?;
    let zpoly = vec![Series::zero(), Series::one()];
    let p = sp_sub(phin.num(), &sp_mul(phin.den(), &zpoly, tol), tol);
    let dp = sp_derivative(&p);
    let Some(mut z) = seed.affine(tol)? else {
        return Err(Error::InvalidArgument("seed at infinity".into()));
    };
    let mut last: Option<ExpQ> = None;
    for step in 0..64 {
        let r = sp_eval(&p, &z, tol);
        let dn = sp_eval(phin.den(), &z, tol);
        // phi^n(z) - z = P(z) / D_n(z); unknown while D_n(z) vanishes to precision
        let resid = match (r.valuation(), dn.valuation().finite()) {
            (_, None) => Err(()),
            (Valuation::Finite(v), Some(vd)) => Ok(Some(v - vd)),
            (Valuation::ZeroToPrecision(p), Some(vd)) => Ok(Some(p - vd)),
            (Valuation::Zero, Some(_)) => Ok(None),
        };
        if let Ok(resid) = resid {
            if resid.map_or(true, |x| x >= target) {
                return finish_cycle(phi, z, n, resid, tol);
            }
        }
        let vr = match r.valuation() {
            Valuation::Finite(v) => v,
            _ => {
                return Err(Error::PrecisionExhausted(format!(
                    "residual vanishes only to t^{:?}",
                    r.valuation().lower()
                )))
            }
        };
        let d = sp_eval(&dp, &z, tol);
        let vdp = d
            .valuation()
            .finite()
            .ok_or_else(|| Error::NewtonDiverged("derivative vanishes to precision".into()))?;
        if step == 0 && vr <= vdp + vdp {
            return Err(Error::NewtonDiverged(format!(
                "basin condition fails: val P = {vr}, val P' = {vdp}"
            )));
        }
        if let Some(prev) = last {
            if vr <= prev {
                return Err(Error::NewtonDiverged(format!("residual valuation stalled at {vr}")));
            }
        }
        last = Some(vr);
        z = z.sub(&r.div(&d, tol)?, tol);
    }
    Err(Error::NewtonDiverged("step limit reached".into()))
}

fn finish_cycle(
    phi: &RationalMapL,
    z: Series,
    n: usize,
    resid: Option<ExpQ>,
    tol: &ToleranceConfig,
) -> Result<TypeICycle> {
    let mut points = vec![ProjPointL::finite(z)];
    for _ in 1..n {
        let next = phi.eval(points.last().unwrap(), tol)?;
        points.push(next);
    }
    let multiplier = cycle_multiplier_points(phi, &points, tol)?;
    Ok(TypeICycle {
        points,
        period: n,
        multiplier,
        residual_valuation: resid,
    })
}

fn cycle_multiplier_points(phi: &RationalMapL, points: &[ProjPointL], tol: &ToleranceConfig) -> Result<Series> {
    let n = points.len();
    let mut m = Series::one();
    for i in 0..n {
        let d = phi.chart_derivative(&points[i], &points[(i + 1) % n], tol)?;
        m = m.mul(&d, tol);
    }
    Ok(m)
}

/// Multiplier of a type I cycle with its size classification.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MultiplierReport {
    pub multiplier: Series,
    #[serde(serialize_with = "ser_expq_opt")]
    pub valuation: Option<ExpQ>,
    pub bounded: bool,
    pub attracting: bool,
    #[serde(serialize_with = "ser_scalar_opt")]
    pub limit: Option<Scalar>,
}

fn ser_scalar_opt<S: serde::Serializer>(c: &Option<Scalar>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match c {
        Some(c) => s.serialize_str(&text::fmt_complex(*c)),
        None => s.serialize_none(),
    }
}

pub fn cycle_multiplier_l(phi: &RationalMapL, cyc: &TypeICycle, tol: &ToleranceConfig) -> Result<MultiplierReport> {
    let m = cycle_multiplier_points(phi, &cyc.points, tol)?;
    Ok(multiplier_report(m))
}

pub fn multiplier_report(m: Series) -> MultiplierReport {
    let v = m.valuation();
    let lower = v.lower();
    let bounded = lower.map_or(true, |x| !x.is_negative());
    let attracting = lower.map_or(true, |x| x.is_positive());
    let limit = match v {
        Valuation::Finite(x) if x.is_zero() => Some(m.coeff_at(ExpQ::zero())),
        Valuation::Finite(x) if x.is_positive() => Some(ZERO),
        Valuation::Zero => Some(ZERO),
        Valuation::ZeroToPrecision(p) if p.is_positive() => Some(ZERO),
        _ => None,
    };
    MultiplierReport {
        multiplier: m,
        valuation: v.finite(),
        bounded,
        attracting,
        limit,
    }
}

/// Order of vanishing of `R(u) - u` at `u` (0 when `u` is not fixed).
pub fn fixed_point_order(r: &RatFunc, u: Ext, tol: &ToleranceConfig) -> Result<usize> {
    let (num, den, at) = match u {
        Ext::Finite(u) => (r.num().clone(), r.den().clone(), u),
        Ext::Infinity => {
            // conjugate by 1/u: S(w) = 1/R(1/w)
            let d = r.degree();
            (r.den().reversed(d), r.num().reversed(d), ZERO)
        }
    };
    let h = num.sub(&den.mul(&Poly::x())).taylor_shift(at);
    if h.is_zero() {
        return Err(Error::InvalidArgument("tangent map is the identity".into()));
    }
    let scale = h.norm_inf();
    Ok(h.coeffs()
        .iter()
        .take_while(|c| tol.negligible(c.norm(), scale))
        .count())
}

/// A fixed Rivera domain given by its boundary cycle and a fixed point of
/// the convex hull of the boundary.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RiveraInstance {
    pub boundary: CycleRecord,
    pub center: TypeIIPoint,
    /// `(boundary point, m)` for the first-return map at each boundary point.
    #[serde(serialize_with = "ser_mults")]
    pub fixed_boundary_multiplicities: Vec<(TypeIIPoint, usize)>,
}

fn ser_mults<S: serde::Serializer>(v: &[(TypeIIPoint, usize)], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|(p, m)| (p.to_string(), m)))
}

impl RiveraInstance {
    /// Locates the fixed point of the hull among the midpoints and joins of
    /// the boundary points and records the multiplicities `m_xi(U)`.
    pub fn from_cycle(phi: &RationalMapL, boundary: CycleRecord, tol: &ToleranceConfig) -> Result<RiveraInstance> {
        let pts = &boundary.points;
        let mut candidates = Vec::new();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let len = hyp_distance(&pts[i], &pts[j], tol);
                candidates.push(point_on_segment(&pts[i], &pts[j], len / ExpQ::from_int(2), tol)?);
                candidates.push(join(&pts[i], &pts[j], tol));
            }
        }
        let mut center = None;
        for c in candidates {
            if pts.iter().any(|p| p.same_point(&c, tol)) {
                continue;
            }
            let td = image_type_ii(phi, &c, tol)?;
            if td.image.same_point(&c, tol) {
                center = Some(c);
                break;
            }
        }
        let center = center.ok_or_else(|| Error::NoSolution("no fixed point in the hull of the boundary".into()))?;
        let q = boundary.period;
        let mut mults = Vec::new();
        for (j, p) in pts.iter().enumerate() {
            let t = boundary.tangent_of_iterate(j, q, tol)?;
            let res = direction_of(p, &center, tol)?.residue;
            mults.push((p.clone(), fixed_point_order(&t, res, tol)?));
        }
        Ok(RiveraInstance {
            boundary,
            center,
            fixed_boundary_multiplicities: mults,
        })
    }

    /// Membership in the domain by direction tests at every boundary point.
    pub fn contains(&self, z: &ProjPointL, tol: &ToleranceConfig) -> Result<bool> {
        for p in &self.boundary.points {
            let dz = direction_of_point(p, z, tol).map_err(|e| match e {
                Error::PrecisionExhausted(_) => Error::MembershipUndecidable,
                e => e,
            })?;
            let dc = direction_of(p, &self.center, tol)?;
            if !dz.same(&dc, tol) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Counts of fixed points of `phi^n` in the domain.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RiveraCount {
    pub observed: usize,
    pub formula: i64,
    pub lifted: Vec<TypeICycle>,
}

/// Lifts each seed to a fixed point of `phi^n`, counts the distinct lifts
/// inside the domain, and evaluates `2 + Σ (m - 2)` over the boundary
/// points fixed by `phi^n`.
pub fn rivera_count_check(
    phi: &RationalMapL,
    inst: &RiveraInstance,
    n: usize,
    seeds: &[ProjPointL],
    target: ExpQ,
    cap: usize,
    tol: &ToleranceConfig,
) -> Result<RiveraCount> {
    let mut lifted: Vec<TypeICycle> = Vec::new();
    for s in seeds {
        let c = newton_lift_periodic(phi, n, s, target, cap, tol)?;
        let z = c.points[0].affine(tol)?;
        let dup = lifted.iter().any(|o| {
            let w = o.points[0].affine(tol).ok().flatten();
            match (&z, &w) {
                (Some(a), Some(b)) => a.sub(b, tol).valuation().lower().map_or(true, |v| v >= target),
                (None, None) => true,
                _ => false,
            }
        });
        if !dup {
            lifted.push(c);
        }
    }
    let mut observed = 0;
    for c in &lifted {
        for p in &inst.boundary.points {
            if direction_of_point(p, &c.points[0], tol).is_err() {
                return Err(Error::MembershipUndecidable);
            }
        }
        if inst.contains(&c.points[0], tol)? {
            observed += 1;
        }
    }
    let q = inst.boundary.period;
    let mut formula: i64 = 2;
    if n % q == 0 {
        for (j, p) in inst.boundary.points.iter().enumerate() {
            let t = inst.boundary.tangent_of_iterate(j, n, tol)?;
            let res = direction_of(p, &inst.center, tol)?.residue;
            formula += fixed_point_order(&t, res, tol)? as i64 - 2;
        }
    }
    Ok(RiveraCount {
        observed,
        formula,
        lifted,
    })
}

/// Holes of the reduction of `phi^q`.
pub fn holes_of_iterate(phi: &RationalMapL, q: usize, cap: usize, tol: &ToleranceConfig) -> Result<Reduction> {
    phi.iterate(q, cap, tol)?.reduce_mod_t(tol)
}
