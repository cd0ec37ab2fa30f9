//! Randomized ring and ultrametric properties of series and polynomials.

use berkline_core::algebra::{poly_roots, rat_compose, Poly, RatFunc, Scalar, ToleranceConfig};
use berkline_core::puiseux::{ExpQ, Series, Valuation};
use proptest::prelude::*;

const CASES: u32 = 1000;

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn expq() -> impl Strategy<Value = ExpQ> {
    (-6i64..=18, 1i64..=4).prop_map(|(n, d)| ExpQ::new(n, d))
}

fn small_scalar() -> impl Strategy<Value = Scalar> {
    (-5i32..=5, -5i32..=5).prop_map(|(a, b)| Scalar::new(a as f64, b as f64))
}

/// Series with integer coefficients, exponents in [-3/2, 9/2] and either
/// exact or truncated at 5.
fn series() -> impl Strategy<Value = Series> {
    (
        prop::collection::vec(((-3i64..=9, 1i64..=3), small_scalar()), 0..5),
        any::<bool>(),
    )
        .prop_map(|(terms, exact)| {
            let terms = terms
                .into_iter()
                .map(|((n, d), c)| (ExpQ::new(n, 2 * d), c))
                .collect();
            Series::from_terms(terms, if exact { None } else { Some(ExpQ::from_int(5)) })
        })
}

fn nonzero_series() -> impl Strategy<Value = Series> {
    series().prop_filter("nonzero", |s| s.valuation().finite().is_some())
}

/// Agreement up to the common precision, coefficientwise to 1e-9.
fn agree(a: &Series, b: &Series) -> bool {
    let p = match (a.prec(), b.prec()) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    };
    let mut es: Vec<ExpQ> = a.terms().iter().chain(b.terms()).map(|(e, _)| *e).collect();
    es.sort();
    es.dedup();
    es.into_iter()
        .filter(|e| p.map_or(true, |p| *e < p))
        .all(|e| (a.coeff_at(e) - b.coeff_at(e)).norm() <= 1e-9 * (1.0 + a.coeff_at(e).norm()))
}

/// Nonzero series `c0 t^v (1 + beta)` whose tail coefficients sum to less
/// than `|c0|`, so that the geometric expansions in division and square
/// roots stay well conditioned in floating point.
fn unit_series() -> impl Strategy<Value = Series> {
    (
        small_scalar().prop_filter("nonzero", |c| c.norm() > 0.0),
        (-3i64..=9, 1i64..=3),
        prop::collection::vec(((1i64..=12, 1i64..=3), (-2i32..=2, -2i32..=2)), 0..4),
        any::<bool>(),
    )
        .prop_map(|(c0, (n, d), tail, exact)| {
            let v = ExpQ::new(n, 2 * d);
            let mut terms = vec![(v, c0)];
            for ((m, k), (a, b)) in tail {
                terms.push((v + ExpQ::new(m, 2 * k), c0 * Scalar::new(a as f64, b as f64) / 16.0));
            }
            Series::from_terms(terms, if exact { None } else { Some(ExpQ::from_int(5)) })
        })
}

fn poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec(small_scalar(), 0..6).prop_map(Poly::new)
}

fn point() -> impl Strategy<Value = Scalar> {
    (-1.5f64..1.5, -1.5f64..1.5).prop_map(|(a, b)| Scalar::new(a, b))
}

fn close(a: Scalar, b: Scalar, scale: f64) -> bool {
    (a - b).norm() <= 1e-9 * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(CASES))]

    #[test]
    fn expq_field_laws(a in expq(), b in expq(), c in expq()) {
        prop_assert_eq!(a + b, b + a);
        prop_assert_eq!((a + b) + c, a + (b + c));
        prop_assert_eq!(a * (b + c), a * b + a * c);
        prop_assert_eq!(a - a, ExpQ::zero());
        if !b.is_zero() {
            prop_assert_eq!((a / b) * b, a);
        }
        prop_assert_eq!(a.to_string().parse::<ExpQ>().unwrap(), a);
    }

    #[test]
    fn series_addition_laws(a in series(), b in series(), c in series()) {
        let t = tol();
        prop_assert!(agree(&a.add(&b, &t), &b.add(&a, &t)));
        prop_assert!(agree(&a.add(&b, &t).add(&c, &t), &a.add(&b.add(&c, &t), &t)));
        prop_assert!(a.sub(&a, &t).is_zero_to_precision());
    }

    #[test]
    fn series_multiplication_laws(a in series(), b in series(), c in series()) {
        let t = tol();
        prop_assert!(agree(&a.mul(&b, &t), &b.mul(&a, &t)));
        prop_assert!(agree(&a.mul(&b, &t).mul(&c, &t), &a.mul(&b.mul(&c, &t), &t)));
        prop_assert!(agree(&a.mul(&b.add(&c, &t), &t), &a.mul(&b, &t).add(&a.mul(&c, &t), &t)));
        prop_assert!(agree(&a.mul(&Series::one(), &t), &a));
    }

    #[test]
    fn valuation_is_multiplicative(a in nonzero_series(), b in nonzero_series()) {
        let va = a.valuation().finite().unwrap();
        let vb = b.valuation().finite().unwrap();
        prop_assert_eq!(a.mul(&b, &tol()).valuation(), Valuation::Finite(va + vb));
    }

    #[test]
    fn ultrametric_inequality(a in nonzero_series(), b in nonzero_series()) {
        let va = a.valuation().finite().unwrap();
        let vb = b.valuation().finite().unwrap();
        let s = a.add(&b, &tol());
        match s.valuation().lower() {
            Some(v) => prop_assert!(v >= va.min(vb)),
            None => {}
        }
        if va != vb {
            prop_assert_eq!(s.valuation(), Valuation::Finite(va.min(vb)));
        }
    }

    #[test]
    fn division_inverts_multiplication(a in series(), b in unit_series()) {
        let t = tol();
        let q = a.mul(&b, &t).div(&b, &t).unwrap();
        prop_assert!(agree(&q, &a.truncate(q.prec().unwrap_or(ExpQ::from_int(20)))));
    }

    #[test]
    fn square_root_squares_back(a in unit_series()) {
        let t = tol();
        let r = a.sqrt(&t).unwrap();
        prop_assert!(agree(&r.mul(&r, &t), &a));
    }

    #[test]
    fn series_text_round_trip(a in series()) {
        let s = a.to_string();
        let back = Series::parse(&s).unwrap();
        prop_assert!(agree(&a, &back), "{} reparsed as {}", s, back);
    }

    #[test]
    fn polynomial_ring_laws(p in poly(), q in poly(), r in poly(), z in point()) {
        let s = (1.0 + p.norm_inf()) * (1.0 + q.norm_inf()) * (1.0 + r.norm_inf()) * 100.0;
        prop_assert!(close(p.add(&q).eval(z), p.eval(z) + q.eval(z), s));
        prop_assert!(close(p.mul(&q).eval(z), p.eval(z) * q.eval(z), s));
        prop_assert!(close(p.mul(&q.add(&r)).eval(z), p.mul(&q).add(&p.mul(&r)).eval(z), s));
        prop_assert!(close(p.compose(&q).eval(z), p.eval(q.eval(z)), s * s));
        prop_assert!(close(p.taylor_shift(z).eval(Scalar::new(0.5, 0.0)), p.eval(z + 0.5), s));
    }

    #[test]
    fn polynomial_division(p in poly(), d in poly()) {
        prop_assume!(!d.is_zero());
        let (q, r) = p.div_rem(&d).unwrap();
        let back = q.mul(&d).add(&r);
        let n = p.degree().unwrap_or(0).max(back.degree().unwrap_or(0));
        for k in 0..=n {
            prop_assert!((back.coeff(k) - p.coeff(k)).norm() <= 1e-8 * (1.0 + p.norm_inf()));
        }
        if let Some(dr) = r.degree() {
            prop_assert!(dr < d.degree().unwrap());
        }
    }

    #[test]
    fn roots_are_recovered(rs in prop::collection::vec(point(), 1..6)) {
        // keep the roots well separated so that they are simple
        let sep = rs.iter().enumerate().all(|(i, a)| rs[..i].iter().all(|b| (a - b).norm() > 0.05));
        prop_assume!(sep);
        let found = poly_roots(&Poly::from_roots(&rs), &tol()).unwrap();
        prop_assert_eq!(found.iter().map(|(_, m)| m).sum::<usize>(), rs.len());
        for r in &rs {
            prop_assert!(found.iter().any(|(z, _)| (z - r).norm() < 1e-7));
        }
    }

    #[test]
    fn rational_composition(p in poly(), q in poly(), z in point()) {
        prop_assume!(!q.is_zero() && !p.is_zero());
        let t = tol();
        let f = RatFunc::new(p.clone(), q.clone(), &t).unwrap();
        let g = RatFunc::new(q.add(&Poly::x()), Poly::from_real(&[2.0, 0.5]), &t).unwrap();
        let h = rat_compose(&f, &g, &t).unwrap();
        let gz = g.eval_finite(z);
        let dq = q.eval(gz).norm();
        let dh = h.den().eval(z).norm();
        prop_assume!(dq > 1e-3 && dh > 1e-3 && (2.0 + 0.5 * z).norm() > 1e-3);
        let want = f.eval_finite(gz);
        prop_assert!((h.eval_finite(z) - want).norm() <= 1e-7 * (1.0 + want.norm()), "{} vs {}", h.eval_finite(z), want);
    }
}
