//! Classical complex dynamics used as an independent check on the series
//! layer: cycles with multipliers, nonrepelling censuses, moduli
//! coordinates, the multiplier pair of the bicritical family and pointwise
//! convergence of rescalings.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::algebra::{aberth_refine, cluster_with, poly_roots_raw, Ext, Poly, Scalar, ToleranceConfig, ONE, ZERO};
use crate::dynamics::critical_points;
use crate::error::{Error, Result};
use crate::families::milnor_map;
use crate::puiseux::{ExpQ, Series};
use crate::ratmap::{ComplexRatMap, RationalMapL};
use crate::text;

/// Largest `d^n` accepted by [`cycles_of_complex_map`].
pub const ROOT_DEGREE_CAP: usize = 4096;
/// Distance from 1 in `|lambda|` separating attracting, indifferent and
/// repelling cycles; also the root-of-unity tolerance.
pub const CLASS_TOL: f64 = 1e-6;
/// `|lambda|` at or below this counts as zero.
pub const SUPERATTRACTING_TOL: f64 = 1e-8;
/// Largest order tested for rational indifference.
pub const MAX_ROOT_OF_UNITY_ORDER: u32 = 12;
/// Chordal tolerance for orbit closure.
pub const PERIOD_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum CycleClass {
    Superattracting,
    Attracting,
    Repelling,
    RationallyIndifferent,
    IrrationallyIndifferent,
}

impl CycleClass {
    pub fn is_repelling(self) -> bool {
        self == CycleClass::Repelling
    }
}

pub fn classify_multiplier(l: Scalar) -> CycleClass {
    let a = l.norm();
    if a <= SUPERATTRACTING_TOL {
        CycleClass::Superattracting
    } else if a < 1.0 - CLASS_TOL {
        CycleClass::Attracting
    } else if a > 1.0 + CLASS_TOL {
        CycleClass::Repelling
    } else {
        let rational = (1..=MAX_ROOT_OF_UNITY_ORDER).any(|q| (l.powu(q) - ONE).norm() <= CLASS_TOL * q as f64);
        if rational {
            CycleClass::RationallyIndifferent
        } else {
            CycleClass::IrrationallyIndifferent
        }
    }
}

fn ser_ext_list<S: Serializer>(v: &[Ext], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|z| z.to_string()))
}

fn ser_scalar<S: Serializer>(c: &Scalar, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&text::fmt_complex(*c))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ComplexCycle {
    #[serde(serialize_with = "ser_ext_list")]
    pub points: Vec<Ext>,
    pub period: usize,
    #[serde(serialize_with = "ser_scalar")]
    pub multiplier: Scalar,
    pub class: CycleClass,
    /// Multiplicity of each cycle point as a root of `f^n(z) = z`.
    pub multiplicity: usize,
}

/// `N_n(z) - z D_n(z)` and its derivative, by iterating the homogeneous
/// form of `f` on `(z, 1)` instead of expanding the iterate.
fn fixed_point_eval(f: &ComplexRatMap, n: usize, z: Scalar) -> (Scalar, Scalar) {
    let d = f.degree();
    let (a, b) = (f.num(), f.den());
    let (mut x, mut y, mut dx, mut dy) = (z, ONE, ONE, ZERO);
    let mut xp = vec![ONE; d + 1];
    let mut yp = vec![ONE; d + 1];
    for _ in 0..n {
        for i in 1..=d {
            xp[i] = xp[i - 1] * x;
            yp[i] = yp[i - 1] * y;
        }
        let (mut u, mut v, mut du, mut dv) = (ZERO, ZERO, ZERO, ZERO);
        for i in 0..=d {
            let m = xp[i] * yp[d - i];
            let mut dm = ZERO;
            if i > 0 {
                dm += xp[i - 1] * yp[d - i] * dx * i as f64;
            }
            if i < d {
                dm += xp[i] * yp[d - i - 1] * dy * (d - i) as f64;
            }
            u += a.coeff(i) * m;
            v += b.coeff(i) * m;
            du += a.coeff(i) * dm;
            dv += b.coeff(i) * dm;
        }
        (x, y, dx, dy) = (u, v, du, dv);
    }
    (x - z * y, dx - y - z * dy)
}

fn orbit(f: &ComplexRatMap, z: Ext, n: usize) -> Vec<Ext> {
    let mut out = vec![z];
    for _ in 1..n {
        out.push(f.eval(*out.last().unwrap()));
    }
    out
}

/// All cycles whose period divides `n`, found as roots of the numerator of
/// `f^n(z) - z` (infinity included), each with its exact period.
pub fn cycles_of_complex_map(f: &ComplexRatMap, n: usize, tol: &ToleranceConfig) -> Result<Vec<ComplexCycle>> {
    let d = f.degree();
    if n == 0 {
        return Err(Error::InvalidArgument("period 0".into()));
    }
    let dn = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dn > ROOT_DEGREE_CAP as u128 {
        return Err(Error::DegreeCapExceeded(dn.min(usize::MAX as u128) as usize, ROOT_DEGREE_CAP));
    }
    let fnth = f.iterate(n, ROOT_DEGREE_CAP)?;
    let p = fnth.fixed_point_poly();
    let Some(deg) = p.degree() else {
        return Err(Error::InvalidArgument("iterate is the identity".into()));
    };
    // refine against the unexpanded iterate, then merge only clusters that
    // carry multiplier 1, as multiple fixed points of f^n must
    let mut raw = poly_roots_raw(&p, tol)?;
    aberth_refine(&mut raw, |z| fixed_point_eval(f, n, z), 500);
    let parabolic = |c: Scalar, _k: usize| (fnth.chart_derivative(Ext::Finite(c), Ext::Finite(c)) - ONE).norm() <= 1e-3;
    let mut roots: Vec<(Ext, usize)> = cluster_with(&raw, tol, parabolic)
        .into_iter()
        .map(|(z, m)| (Ext::Finite(z), m))
        .collect();
    if fnth.degree() + 1 > deg {
        roots.push((Ext::Infinity, fnth.degree() + 1 - deg));
    }
    let mut used = vec![false; roots.len()];
    let mut out = Vec::new();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let (z, m) = roots[i];
        let period = (1..=n)
            .filter(|k| n % k == 0)
            .find(|&k| {
                let mut w = z;
                for _ in 0..k {
                    w = f.eval(w);
                }
                w.chordal(z) <= PERIOD_TOL
            })
            .unwrap_or(n);
        let pts = orbit(f, z, period);
        for q in &pts {
            let best = (0..roots.len())
                .filter(|&j| !used[j])
                .min_by(|&a, &b| {
                    roots[a].0.chordal(*q).partial_cmp(&roots[b].0.chordal(*q)).unwrap()
                });
            if let Some(j) = best {
                if roots[j].0.chordal(*q) <= 1e-5 {
                    used[j] = true;
                }
            }
        }
        used[i] = true;
        let multiplier = f.cycle_multiplier(&pts);
        out.push(ComplexCycle {
            points: pts,
            period,
            multiplier,
            class: classify_multiplier(multiplier),
            multiplicity: m,
        });
    }
    Ok(out)
}

/// Nonrepelling cycles against the bound `2d - 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FsiReport {
    pub cycles: Vec<ComplexCycle>,
    /// Nonrepelling cycles on the whole sphere.
    pub nonrepelling_count: usize,
    /// Nonrepelling cycles not passing through infinity.
    pub finite_nonrepelling_count: usize,
    pub bound: usize,
    /// Attracting plus irrationally indifferent cycles.
    pub gamma_lower: usize,
    /// Critical points whose orbits were not seen to be preperiodic.
    pub delta_upper: usize,
    pub parabolic_count: usize,
    /// Whether every period's points, counted with multiplicity, add up to
    /// `d^n + 1`.
    pub complete: bool,
    /// Set when the count exceeds the bound, which indicates a numerical
    /// failure.
    pub flagged: bool,
}

/// Sharp landing of the orbit of `c` on an earlier orbit point within 200
/// steps: a coincidence at tolerance `1e-8` not preceded by a near
/// coincidence, so that convergence to an attracting cycle is not taken for
/// preperiodicity.
pub fn is_preperiodic(f: &ComplexRatMap, c: Ext) -> bool {
    let orb = orbit(f, c, 201);
    for j in 1..orb.len() {
        for i in 0..j {
            if orb[i].chordal(orb[j]) <= 1e-8 && (i == 0 || orb[i - 1].chordal(orb[j - 1]) > 1e-4) {
                return true;
            }
        }
    }
    false
}

pub fn nonrepelling_census(f: &ComplexRatMap, max_period: usize, tol: &ToleranceConfig) -> Result<FsiReport> {
    if max_period == 0 || max_period > 6 {
        return Err(Error::InvalidArgument("maxPeriod must lie in 1..=6".into()));
    }
    let mut cycles = Vec::new();
    let mut complete = true;
    for n in 1..=max_period {
        let all = cycles_of_complex_map(f, n, tol)?;
        let count: usize = all.iter().map(|c| c.period * c.multiplicity).sum();
        complete &= count == f.degree().pow(n as u32) + 1;
        cycles.extend(all.into_iter().filter(|c| c.period == n));
    }
    let nonrep: Vec<&ComplexCycle> = cycles.iter().filter(|c| !c.class.is_repelling()).collect();
    let finite = nonrep
        .iter()
        .filter(|c| c.points.iter().all(|p| *p != Ext::Infinity))
        .count();
    let gamma_lower = nonrep
        .iter()
        .filter(|c| matches!(c.class, CycleClass::Attracting | CycleClass::IrrationallyIndifferent))
        .count();
    let parabolic_count = nonrep
        .iter()
        .filter(|c| c.class == CycleClass::RationallyIndifferent)
        .count();
    let delta_upper = critical_points(f, tol)?
        .into_iter()
        .filter(|(c, _)| !is_preperiodic(f, *c))
        .count();
    let bound = 2 * f.degree() - 2;
    let nonrepelling_count = nonrep.len();
    Ok(FsiReport {
        nonrepelling_count,
        finite_nonrepelling_count: finite,
        bound,
        gamma_lower,
        delta_upper,
        parabolic_count,
        complete,
        flagged: nonrepelling_count > bound,
        cycles,
    })
}

/// Runs [`nonrepelling_census`] over many maps in parallel.
pub fn census_batch(maps: &[ComplexRatMap], max_period: usize, tol: &ToleranceConfig) -> Vec<Result<FsiReport>> {
    maps.par_iter()
        .map(|f| nonrepelling_census(f, max_period, tol))
        .collect()
}

/// Attracting cycle reached by the orbit of `z`, detected by stability of
/// the tail over 500 steps within `1e-10`.
fn attracting_cycle_of(f: &ComplexRatMap, z: Ext, max_period: usize) -> Option<(Vec<Ext>, Scalar)> {
    const STEPS: usize = 10_000;
    const TAIL: usize = 500;
    let mut w = z;
    for _ in 0..STEPS - TAIL - max_period {
        w = f.eval(w);
    }
    let tail = orbit(f, w, TAIL + max_period);
    for p in 1..=max_period {
        if (0..TAIL).all(|k| tail[k].chordal(tail[k + p]) <= 1e-10) {
            let pts = tail[TAIL - p..TAIL].to_vec();
            let l = f.cycle_multiplier(&pts);
            return (l.norm() < 1.0).then_some((pts, l));
        }
    }
    None
}

/// Multipliers `(lambda, mu)` of the attracting cycles that capture the
/// critical points 0 and infinity. With `strict`, both cycles must have
/// period at least 2.
pub fn multiplier_pair_of(f: &ComplexRatMap, max_period: usize, strict: bool) -> Result<(Scalar, Scalar)> {
    let a = attracting_cycle_of(f, Ext::Finite(ZERO), max_period);
    let b = attracting_cycle_of(f, Ext::Infinity, max_period);
    let (Some((pa, la)), Some((pb, lb))) = (a, b) else {
        return Err(Error::NotTypeD("a critical orbit is not captured by an attracting cycle".into()));
    };
    if pa.iter().any(|x| pb.iter().any(|y| x.chordal(*y) <= 1e-6)) {
        return Err(Error::NotTypeD("both critical points share one attracting cycle".into()));
    }
    if strict && (pa.len() < 2 || pb.len() < 2) {
        return Err(Error::NotTypeD("an attracting cycle is a fixed point".into()));
    }
    Ok((la, lb))
}

pub fn multiplier_pair(
    u: Scalar,
    v: Scalar,
    d: usize,
    max_period: usize,
    strict: bool,
    tol: &ToleranceConfig,
) -> Result<(Scalar, Scalar)> {
    multiplier_pair_of(&milnor_map(u, v, d, tol)?, max_period, strict)
}

/// Elementary symmetric functions of all values.
fn elementary_symmetric(vals: &[Scalar]) -> Vec<Scalar> {
    let p = Poly::from_roots(vals);
    let n = vals.len();
    // prod (z - x_i) = sum (-1)^k e_k z^(n-k)
    (0..=n)
        .map(|k| {
            let c = p.coeff(n - k);
            if k % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect()
}

/// `(sigma_1, sigma_d)` of the `d + 1` fixed-point multipliers.
pub fn moduli_coordinates(f: &ComplexRatMap, tol: &ToleranceConfig) -> Result<(Scalar, Scalar)> {
    let d = f.degree();
    let mut mults = Vec::new();
    for c in cycles_of_complex_map(f, 1, tol)? {
        for _ in 0..c.multiplicity {
            mults.push(c.multiplier);
        }
    }
    if mults.len() != d + 1 {
        return Err(Error::NoConvergence(format!("found {} fixed points, expected {}", mults.len(), d + 1)));
    }
    let e = elementary_symmetric(&mults);
    Ok((e[1], e[d]))
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RescaleRow {
    pub t: f64,
    pub sup_error: f64,
}

/// `M_t(z) = a(t) + t^r z`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugacyCurve {
    pub a: Series,
    pub r: ExpQ,
}

/// Evaluates `M_t^-1 ∘ f_t^q ∘ M_t` on `zs` for each `t` and records the
/// largest distance to `g`. Points within 0.1 of a hole are rejected.
pub fn cross_validate_rescaling(
    phi: &RationalMapL,
    curve: &ConjugacyCurve,
    q: usize,
    g: &ComplexRatMap,
    ts: &[f64],
    zs: &[Scalar],
    cap: usize,
    tol: &ToleranceConfig,
) -> Result<Vec<RescaleRow>> {
    let conj = phi.iterate(q, cap, tol)?.conjugate_affine(&curve.a, curve.r, tol);
    let red = conj.reduce_mod_t(tol)?;
    for (h, _) in &red.holes {
        if let Ext::Finite(h) = h {
            if let Some(z) = zs.iter().find(|z| (*z - h).norm() < 0.1) {
                return Err(Error::HoleProximity(format!(
                    "{} is within 0.1 of the hole {}",
                    text::fmt_complex(*z),
                    text::fmt_complex(*h)
                )));
            }
        }
    }
    let mut rows = Vec::new();
    for &t in ts {
        let f = phi.numeric_at(t);
        let a = curve.a.eval_at(t);
        let s = t.powf(curve.r.to_f64());
        let mut sup: f64 = 0.0;
        for &z in zs {
            let mut w = Ext::Finite(a + s * z);
            for _ in 0..q {
                w = f.eval(w);
            }
            let lhs = match w {
                Ext::Finite(w) => Ext::Finite((w - a) / s),
                Ext::Infinity => Ext::Infinity,
            };
            let err = match (lhs, g.eval(Ext::Finite(z))) {
                (Ext::Finite(x), Ext::Finite(y)) => (x - y).norm(),
                (x, y) => x.chordal(y),
            };
            sup = sup.max(err);
        }
        rows.push(RescaleRow { t, sup_error: sup });
    }
    Ok(rows)
}

/// True when errors strictly decrease along the table.
pub fn strictly_decreasing(rows: &[RescaleRow]) -> bool {
    rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error)
}

/// `count` points on the circle of radius `r` about `c`.
pub fn circle(c: Scalar, r: f64, count: usize) -> Vec<Scalar> {
    (0..count)
        .map(|k| c + Scalar::from_polar(r, 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / count as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn map(s: &str) -> ComplexRatMap {
        ComplexRatMap::parse(s, &tol()).unwrap()
    }

    #[test]
    fn basilica_two_cycle() {
        let f = map("z^2 - 1");
        let cyc = cycles_of_complex_map(&f, 2, &tol()).unwrap();
        let two: Vec<_> = cyc.iter().filter(|c| c.period == 2).collect();
        assert_eq!(two.len(), 1);
        assert_eq!(two[0].class, CycleClass::Superattracting);
        let mut pts: Vec<f64> = two[0].points.iter().map(|p| p.finite().unwrap().re).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((pts[0] + 1.0).abs() < 1e-12 && pts[1].abs() < 1e-12);
        let total: usize = cyc.iter().map(|c| c.period * c.multiplicity).sum();
        assert_eq!(total, 5);
    }

    #[test]
    fn squaring_fixed_points() {
        let cyc = cycles_of_complex_map(&map("z^2"), 1, &tol()).unwrap();
        assert_eq!(cyc.len(), 3);
        let at = |z: Ext| cyc.iter().find(|c| c.points[0].chordal(z) < 1e-9).unwrap().multiplier;
        assert!(at(Ext::Finite(ZERO)).norm() < 1e-12);
        assert!(at(Ext::Infinity).norm() < 1e-12);
        assert!((at(Ext::Finite(ONE)) - 2.0).norm() < 1e-12);
    }

    #[test]
    fn parabolic_fixed_point_of_g() {
        // G for d = 2, a1 = 3/2
        let g = map("(2.5z^2 - 0.5)/(1.5z^2 + 0.5)");
        let cyc = cycles_of_complex_map(&g, 1, &tol()).unwrap();
        let c = cyc.iter().find(|c| c.points[0].chordal(Ext::Finite(ONE)) < 1e-6).unwrap();
        assert_eq!(c.class, CycleClass::RationallyIndifferent);
        assert_eq!(c.multiplicity, 2);
        let r = nonrepelling_census(&g, 3, &tol()).unwrap();
        assert!(r.parabolic_count >= 1 && r.nonrepelling_count <= 2);
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(classify_multiplier(Scalar::new(1e-9, 0.0)), CycleClass::Superattracting);
        assert_eq!(classify_multiplier(Scalar::new(0.5, 0.0)), CycleClass::Attracting);
        assert_eq!(classify_multiplier(Scalar::new(1.5, 0.0)), CycleClass::Repelling);
        assert_eq!(classify_multiplier(Scalar::from_polar(1.0, 2.0 * std::f64::consts::PI / 5.0)), CycleClass::RationallyIndifferent);
        assert_eq!(classify_multiplier(Scalar::from_polar(1.0, 2.0_f64.sqrt())), CycleClass::IrrationallyIndifferent);
    }

    #[test]
    fn basilica_census() {
        let r = nonrepelling_census(&map("z^2 - 1"), 4, &tol()).unwrap();
        assert_eq!(r.finite_nonrepelling_count, 1);
        assert_eq!(r.nonrepelling_count, 2);
        assert_eq!(r.gamma_lower, 0);
        assert_eq!(r.delta_upper, 0);
        assert!(!r.flagged);
    }

    #[test]
    fn attracting_orbit_is_not_preperiodic() {
        // z^2 + 0.2: critical orbit converges to an attracting fixed point
        let f = map("z^2 + 0.2");
        assert!(!is_preperiodic(&f, Ext::Finite(ZERO)));
        assert!(is_preperiodic(&map("z^2 - 2"), Ext::Finite(ZERO)));
        let r = nonrepelling_census(&f, 3, &tol()).unwrap();
        assert_eq!(r.gamma_lower, 1);
        assert_eq!(r.delta_upper, 1);
    }

    #[test]
    fn moduli_of_squaring_and_conjugate() {
        let (s1, s2) = moduli_coordinates(&map("z^2"), &tol()).unwrap();
        assert!((s1 - 2.0).norm() < 1e-9 && s2.norm() < 1e-9);
        // 1/(z-3) conjugate of z^2: w -> 1/((1/w + 3)^2 - 3)
        let c = map("z^2/(1 + 6z + 6z^2)");
        let (c1, c2) = moduli_coordinates(&c, &tol()).unwrap();
        assert!((c1 - s1).norm() < 1e-6 && (c2 - s2).norm() < 1e-6);
    }

    #[test]
    fn strict_type_d_center() {
        // (1 - z^3)/(1 + z^3): 0 -> 1 -> 0 and inf -> -1 -> inf
        let f = map("(1 - z^3)/(1 + z^3)");
        let (l, m) = multiplier_pair_of(&f, 4, true).unwrap();
        assert!(l.norm() < 1e-9 && m.norm() < 1e-9);
        // two attracting fixed points fail the strict filter
        let g = map("(0.1z^2 + 0.0)/(1.0)");
        assert!(multiplier_pair_of(&g, 4, true).is_err());
    }

    #[test]
    fn degenerate_pair() {
        assert_eq!(multiplier_pair(ONE, -ONE, 2, 4, true, &tol()), Err(Error::Degenerate));
    }

    #[test]
    fn elementary_symmetric_small() {
        let e = elementary_symmetric(&[ONE, Scalar::new(2.0, 0.0), Scalar::new(3.0, 0.0)]);
        assert!((e[1] - 6.0).norm() < 1e-12 && (e[2] - 11.0).norm() < 1e-12 && (e[3] - 6.0).norm() < 1e-12);
    }
}
