//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria whose stated target is known to be unreachable are still run at
//! their stated tolerances and reported as FAIL; they are listed in
//! `DOCUMENTED` and do not change the exit status. Any other failure does.

use std::process::Command;
use std::time::{Duration, Instant};

use berkline_core::algebra::{poly_roots, Ext, Poly, Scalar, ToleranceConfig, ONE, ZERO};
use berkline_core::berkovich::{hyp_distance, image_type_ii, on_ramification, TypeIIPoint};
use berkline_core::dynamics::{
    critical_points, cycle_multiplier_l, find_cycle_type_ii, holes_of_iterate, newton_lift_periodic, rescaling_limit,
    rivera_count_check, RiveraInstance,
};
use berkline_core::families::{
    example_map, milnor_coeffs, milnor_map, milnor_resultant, published_cubic_pair, solve_example_coefficients,
    verify_example, ExampleParams,
};
use berkline_core::numeric::{
    census_batch, circle, cross_validate_rescaling, nonrepelling_census, strictly_decreasing, ConjugacyCurve,
};
use berkline_core::puiseux::{ExpQ, Series, Valuation};
use berkline_core::ratmap::{ComplexRatMap, ProjPointL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria expected to fail, with the reason recorded in the ledger.
const DOCUMENTED: &[(u32, &str)] = &[
    (8, "the fixed points 1 +- i sqrt(t/2) have phi-multiplier -1 + O(t^(1/2)), not 1"),
    (10, "q = 3 at xi(0;1/2): the error decays like 148 t^(1/2), about 0.53 at t = 1e-5"),
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn prec() -> ExpQ {
    ExpQ::from_int(6)
}

fn rand_scalar(rng: &mut ChaCha8Rng, r: f64) -> Scalar {
    Scalar::new(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

fn lit(c: Scalar) -> String {
    format!("{}{:+}i", c.re, c.im)
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "example 2-cycle via berk cycle", c1),
        (2, "closed-form Gauss return map", c2),
        (3, "holes of the second iterate", c3),
        (4, "coefficient solve and 3-cycle", c4),
        (5, "metric law on random segments", c5),
        (6, "Milnor family identities", c6),
        (7, "Rivera count instance", c7),
        (8, "multiplier dichotomy", c8),
        (9, "FSI census", c9),
        (10, "rescaling convergence", c10),
        (11, "puiseux and algebra property trials", c11),
    ];
    let mut unexpected = 0;
    let mut failed = 0;
    for (n, name, f) in criteria {
        let o = f();
        let known = DOCUMENTED.iter().find(|(k, _)| *k == n);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, Some(_)) => "FAIL (documented)",
            (false, None) => "FAIL",
        };
        println!("criterion {n:>2} {tag}: {name}: {}", o.detail);
        if !o.pass {
            failed += 1;
            match known {
                Some((_, why)) => println!("             reason: {why}"),
                None => unexpected += 1,
            }
        }
    }
    println!("acceptance: {} of 11 passed, {failed} failed, {unexpected} unexpected", 11 - failed);
    if unexpected > 0 {
        std::process::exit(1);
    }
}

fn c1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = Duration::ZERO;
    let mut bad = Vec::new();
    for d in [2usize, 3] {
        for _ in 0..3 {
            let g: Vec<String> = (0..2).map(|_| lit(rand_scalar(&mut rng, 3.0))).collect();
            let start = Instant::now();
            let out = Command::new(env!("CARGO_BIN_EXE_berkline"))
                .args(["berk", "cycle", "--map", "example", "--seed", "gauss"])
                .args(["--d", &d.to_string(), "--g", &g.join(",")])
                .output()
                .expect("run berkline");
            let el = start.elapsed();
            worst = worst.max(el);
            let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap_or_default();
            let ok = out.status.success()
                && v["period"] == 2
                && v["localDegrees"] == serde_json::json!([d, 1])
                && v["classification"] == "repelling"
                && el < Duration::from_secs(1);
            if !ok {
                bad.push(format!("d={d} g={g:?}"));
            }
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: format!("6 runs, slowest {:.3} s, failures {:?}", worst.as_secs_f64(), bad),
    }
}

fn c2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = tol();
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for d in [2usize, 3] {
        let mut n = 0;
        while n < 10 {
            let a1 = rand_scalar(&mut rng, 3.0);
            if a1.norm() < 0.1 {
                continue;
            }
            n += 1;
            let phi = example_map(&ExampleParams::new(d, vec![a1]).unwrap(), prec());
            let g = match find_cycle_type_ii(&phi, &TypeIIPoint::gauss(), 4, &t)
                .ok()
                .flatten()
                .and_then(|r| rescaling_limit(&r).ok())
                .and_then(|g| g.to_ratfunc().ok())
            {
                Some(g) => g,
                None => {
                    ok = false;
                    continue;
                }
            };
            // closed form with monic denominator
            let dd = Scalar::new(d as f64, 0.0);
            let mut num = vec![ZERO; d + 1];
            let mut den = vec![ZERO; d + 1];
            num[0] = (dd - a1 - 1.0) / a1;
            num[d] = (a1 + 1.0) / a1;
            den[0] = (dd - a1) / a1;
            den[d] = ONE;
            for k in 0..=d {
                worst = worst
                    .max((g.num().coeff(k) - num[k]).norm())
                    .max((g.den().coeff(k) - den[k]).norm());
            }
            worst = worst.max((g.eval_finite(ONE) - ONE).norm());
            worst = worst.max((g.derivative().eval_finite(ONE) - ONE).norm());
            if g.num().degree() > Some(d) || g.den().degree() != Some(d) {
                ok = false;
            }
        }
    }
    Outcome {
        pass: ok && worst <= 1e-9,
        detail: format!("20 maps, max coefficient/G(1)/G'(1) error {worst:.2e} (tol 1e-9)"),
    }
}

fn c3() -> Outcome {
    let t = tol();
    let mut ok = true;
    let mut notes = Vec::new();
    for d in [2usize, 3] {
        let phi = example_map(&ExampleParams::new(d, vec![Scalar::new(0.7, -0.2)]).unwrap(), prec());
        let rec = find_cycle_type_ii(&phi, &TypeIIPoint::gauss(), 4, &t).unwrap().unwrap();
        let g = rescaling_limit(&rec).unwrap().to_ratfunc().unwrap();
        let level = poly_roots(&g.num().sub(g.den()), &t).unwrap();
        let red = holes_of_iterate(&phi, 2, 81, &t).unwrap();
        let card = red.hole_count();
        // each solution of G(z) = 1 is a hole of multiplicity d - 1
        let matched = red.holes.len() == level.len()
            && level.iter().all(|(w, m)| {
                red.holes
                    .iter()
                    .any(|(z, k)| z.finite().map_or(false, |z| (z - w).norm() <= 1e-7) && *k == m * (d - 1))
            });
        ok &= matched && card == d * d - d;
        if d == 2 {
            let mut pts: Vec<Scalar> = red.holes.iter().filter_map(|(z, _)| z.finite()).collect();
            pts.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
            let exact = pts.len() == 2 && (pts[0] + ONE).norm() <= 1e-7 && (pts[1] - ONE).norm() <= 1e-7;
            ok &= exact;
        }
        notes.push(format!("d={d}: {} holes, {} level points", card, level.len()));
    }
    Outcome {
        pass: ok,
        detail: notes.join("; "),
    }
}

fn c4() -> Outcome {
    let t = tol();
    let mut ok = true;
    let mut notes = Vec::new();
    for d in [2usize, 3] {
        match solve_example_coefficients(d, prec(), &t) {
            Ok(c) => {
                let good = c
                    .iter()
                    .filter(|x| x.verification.passed() && x.verification.residual <= 1e-7)
                    .count();
                ok &= good >= 1;
                notes.push(format!("d={d}: {good} verified of {}", c.len()));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("d={d}: {e}"));
            }
        }
    }
    let (a1, a2) = published_cubic_pair();
    let v = verify_example(&ExampleParams::new(3, vec![a1, a2]).unwrap(), prec(), &t).unwrap();
    notes.push(format!(
        "published d=3 pair verifies: {} (period {:?}, residual {:.1e})",
        v.passed(),
        v.period,
        v.residual
    ));
    Outcome {
        pass: ok,
        detail: notes.join("; "),
    }
}

fn random_exp(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> ExpQ {
    let den = rng.gen_range(1..=3);
    ExpQ::new(rng.gen_range(lo * den..=hi * den), den)
}

fn c5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = tol();
    let mut done = 0;
    let mut bad = 0;
    let mut skipped = 0;
    while done < 50 {
        let d = rng.gen_range(2..=3usize);
        let phi = example_map(&ExampleParams::new(d, vec![rand_scalar(&mut rng, 2.0)]).unwrap(), prec());
        let crit = phi.critical_points_bicritical(&t).unwrap();
        let on = done % 2 == 0;
        let (a, b) = if on {
            let r1 = random_exp(&mut rng, -1, 1);
            let r2 = random_exp(&mut rng, -1, 1);
            if r1 == r2 {
                continue;
            }
            (
                TypeIIPoint::new(&Series::zero(), r1).unwrap(),
                TypeIIPoint::new(&Series::zero(), r2).unwrap(),
            )
        } else {
            let c0 = Scalar::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..6.28));
            let c = Series::exact(vec![(ExpQ::zero(), c0), (ExpQ::new(1, 2), rand_scalar(&mut rng, 1.0))]);
            let r1 = random_exp(&mut rng, 0, 2);
            let r2 = random_exp(&mut rng, 0, 2);
            if r1 == r2 || r1.is_zero() || r2.is_zero() {
                continue;
            }
            (TypeIIPoint::new(&c, r1).unwrap(), TypeIIPoint::new(&c, r2).unwrap())
        };
        let in_r = |x: &TypeIIPoint| on_ramification(x, &crit.c1, &crit.c2, &t).unwrap();
        if in_r(&a) != on || in_r(&b) != on {
            skipped += 1;
            continue;
        }
        let (ia, ib) = match (image_type_ii(&phi, &a, &t), image_type_ii(&phi, &b, &t)) {
            (Ok(x), Ok(y)) => (x.image, y.image),
            _ => {
                skipped += 1;
                continue;
            }
        };
        let len = hyp_distance(&a, &b, &t);
        let want = if on { len * ExpQ::from_int(d as i64) } else { len };
        if hyp_distance(&ia, &ib, &t) != want {
            bad += 1;
        }
        done += 1;
    }
    Outcome {
        pass: bad == 0,
        detail: format!("50 segments (25 on R_phi, 25 off), {bad} mismatches, {skipped} draws redrawn"),
    }
}

fn c6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let t = tol();
    let mut worst_res: f64 = 0.0;
    let mut worst_fix: f64 = 0.0;
    let mut crit_bad = 0;
    let mut n = 0;
    while n < 100 {
        let (u, v) = (rand_scalar(&mut rng, 3.0), rand_scalar(&mut rng, 3.0));
        let d = 2 + n % 2;
        let f = match milnor_map(u, v, d, &t) {
            Ok(f) => f,
            Err(_) => continue,
        };
        n += 1;
        let [a, b, c, dd] = milnor_coeffs(u, v);
        let want = (v + 1.0).powu(2) * (u + v + 1.0).powu(2);
        let got = a * dd - b * c;
        worst_res = worst_res
            .max((got - want).norm() / want.norm())
            .max((milnor_resultant(u, v) - want).norm() / want.norm());
        worst_fix = worst_fix.max(match f.eval(Ext::Finite(ONE)) {
            Ext::Finite(w) => (w - ONE).norm(),
            Ext::Infinity => f64::INFINITY,
        });
        let cps = critical_points(&f, &t).unwrap_or_default();
        let zero = cps.iter().any(|(z, m)| z.finite().map_or(false, |z| z.norm() < 1e-9) && *m == d - 1);
        let inf = cps.iter().any(|(z, m)| *z == Ext::Infinity && *m == d - 1);
        if cps.len() != 2 || !zero || !inf {
            crit_bad += 1;
        }
    }
    Outcome {
        pass: worst_res <= 1e-9 && worst_fix <= 1e-9 && crit_bad == 0,
        detail: format!(
            "100 maps, resultant rel err {worst_res:.1e}, |f(1)-1| {worst_fix:.1e}, critical-point mismatches {crit_bad}"
        ),
    }
}

fn half_seed(sign: f64) -> ProjPointL {
    ProjPointL::finite(Series::exact(vec![
        (ExpQ::zero(), ONE),
        (ExpQ::new(1, 2), Scalar::new(0.0, sign * 0.5f64.sqrt())),
    ]))
}

fn c7() -> Outcome {
    let t = tol();
    let phi = example_map(&ExampleParams::new(2, vec![]).unwrap(), prec());
    let rec = find_cycle_type_ii(&phi, &TypeIIPoint::gauss(), 4, &t).unwrap().unwrap();
    let inst = match RiveraInstance::from_cycle(&phi, rec, &t) {
        Ok(i) => i,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: e.to_string(),
            }
        }
    };
    let seeds = vec![half_seed(1.0), half_seed(-1.0), ProjPointL::finite(Series::constant(-ONE))];
    match rivera_count_check(&phi, &inst, 1, &seeds, ExpQ::from_int(4), 81, &t) {
        Ok(rc) => {
            let resid = rc
                .lifted
                .iter()
                .all(|c| c.residual_valuation.map_or(true, |v| v >= ExpQ::from_int(4)));
            let s = 0.5f64.sqrt();
            let shape = [1.0, -1.0].iter().all(|&sg| {
                rc.lifted.iter().any(|c| {
                    let z = c.points[0].affine(&t).ok().flatten().unwrap_or_else(Series::zero);
                    (z.coeff_at(ExpQ::zero()) - ONE).norm() < 1e-9
                        && (z.coeff_at(ExpQ::new(1, 2)) - Scalar::new(0.0, sg * s)).norm() < 1e-9
                })
            });
            Outcome {
                pass: rc.observed == 2 && rc.formula == 2 && resid && shape,
                detail: format!(
                    "observed {}, formula {}, boundary m = {:?}, residual valuations >= 4: {resid}",
                    rc.observed,
                    rc.formula,
                    inst.fixed_boundary_multiplicities.iter().map(|x| x.1).collect::<Vec<_>>()
                ),
            }
        }
        Err(e) => Outcome {
            pass: false,
            detail: e.to_string(),
        },
    }
}

fn c8() -> Outcome {
    let t = tol();
    let phi = example_map(&ExampleParams::new(2, vec![]).unwrap(), prec());
    let lift = |s: &ProjPointL| newton_lift_periodic(&phi, 1, s, ExpQ::from_int(4), 81, &t);
    let minus = lift(&ProjPointL::finite(Series::constant(-ONE))).and_then(|c| cycle_multiplier_l(&phi, &c, &t));
    let minus_ok = minus
        .as_ref()
        .map_or(false, |r| r.valuation == Some(ExpQ::from_int(-1)) && !r.bounded);
    let mut near_one_ok = true;
    let mut limits = Vec::new();
    let mut square_limits = Vec::new();
    for sg in [1.0, -1.0] {
        match lift(&half_seed(sg)).and_then(|c| cycle_multiplier_l(&phi, &c, &t)) {
            Ok(r) => {
                // stated: 1 + O(t^(1/2)), i.e. bounded with limit 1
                let ok = r.bounded && r.limit.map_or(false, |l| (l - ONE).norm() < 1e-9);
                near_one_ok &= ok;
                limits.push(r.limit.map_or("none".into(), |l| format!("{:.6}", l.re)));
                let sq = r.multiplier.mul(&r.multiplier, &t);
                square_limits.push(match sq.valuation() {
                    Valuation::Finite(v) if v.is_zero() => format!("{:.6}", sq.coeff_at(ExpQ::zero()).re),
                    v => format!("{v:?}"),
                });
            }
            Err(e) => {
                near_one_ok = false;
                limits.push(e.to_string());
            }
        }
    }
    Outcome {
        pass: minus_ok && near_one_ok,
        detail: format!(
            "near -1: valuation {:?} unbounded {}; near 1: phi-multiplier limits {:?} (stated 1), phi^2-multiplier limits {:?}",
            minus.as_ref().ok().and_then(|r| r.valuation),
            minus.as_ref().map_or(false, |r| !r.bounded),
            limits,
            square_limits
        ),
    }
}

fn c9() -> Outcome {
    let t = tol();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut maps = Vec::new();
    while maps.len() < 500 {
        let d = 2 + maps.len() % 2;
        if let Ok(f) = milnor_map(rand_scalar(&mut rng, 3.0), rand_scalar(&mut rng, 3.0), d, &t) {
            maps.push(f);
        }
    }
    let reports = census_batch(&maps, 4, &t);
    let mut errors = 0;
    let mut flagged = 0;
    let mut unexplained = 0;
    let mut incomplete = 0;
    for r in &reports {
        match r {
            Ok(r) => {
                if !r.complete {
                    incomplete += 1;
                }
                if r.nonrepelling_count > r.bound {
                    flagged += 1;
                    if r.complete {
                        unexplained += 1;
                    }
                }
            }
            Err(_) => errors += 1,
        }
    }
    let basilica = ComplexRatMap::parse("z^2 - 1", &t).and_then(|f| nonrepelling_census(&f, 4, &t));
    let bas_ok = basilica
        .as_ref()
        .map_or(false, |r| r.finite_nonrepelling_count == 1 && r.nonrepelling_count <= 2);
    let el = start.elapsed();
    Outcome {
        pass: errors == 0 && unexplained == 0 && bas_ok && el < Duration::from_secs(60),
        detail: format!(
            "500 maps: {flagged} over the bound ({unexplained} unexplained), {incomplete} incomplete, {errors} errors; \
             z^2-1 finite nonrepelling {} (sphere {}); {:.1} s",
            basilica.as_ref().map_or(0, |r| r.finite_nonrepelling_count),
            basilica.as_ref().map_or(0, |r| r.nonrepelling_count),
            el.as_secs_f64()
        ),
    }
}

fn c10() -> Outcome {
    let t = tol();
    let ts = [1e-2, 1e-3, 1e-4, 1e-5];
    let fmt = |rows: &[berkline_core::numeric::RescaleRow]| {
        rows.iter().map(|r| format!("{:.2e}", r.sup_error)).collect::<Vec<_>>().join(" ")
    };

    let phi2 = example_map(&ExampleParams::new(2, vec![Scalar::new(0.4, 0.3)]).unwrap(), prec());
    let rec2 = find_cycle_type_ii(&phi2, &TypeIIPoint::gauss(), 4, &t).unwrap().unwrap();
    let g2 = rescaling_limit(&rec2).unwrap();
    let curve2 = ConjugacyCurve {
        a: Series::zero(),
        r: ExpQ::zero(),
    };
    let rows2 = cross_validate_rescaling(&phi2, &curve2, 2, &g2, &ts, &circle(ZERO, 2.0, 20), 81, &t).unwrap();
    let ok2 = strictly_decreasing(&rows2) && rows2.last().unwrap().sup_error <= 1e-3;

    let cands = solve_example_coefficients(3, prec(), &t).unwrap();
    let best = cands.iter().find(|c| c.verification.passed()).unwrap();
    let phi3 = example_map(&ExampleParams::new(3, best.g.clone()).unwrap(), prec());
    let xi = TypeIIPoint::new(&Series::zero(), ExpQ::new(1, 2)).unwrap();
    let rec3 = find_cycle_type_ii(&phi3, &xi, 6, &t).unwrap().unwrap();
    let g3 = rescaling_limit(&rec3).unwrap();
    let curve3 = ConjugacyCurve {
        a: Series::zero(),
        r: ExpQ::new(1, 2),
    };
    let rows3 = cross_validate_rescaling(&phi3, &curve3, 3, &g3, &ts, &circle(ZERO, 0.5, 20), 81, &t).unwrap();
    let dec3 = strictly_decreasing(&rows3);
    let ok3 = dec3 && rows3.last().unwrap().sup_error <= 1e-3;
    Outcome {
        pass: ok2 && ok3,
        detail: format!(
            "q=2 d=2 errors [{}] pass {ok2}; q=3 d=3 errors [{}] decreasing {dec3}, final <= 1e-3 {}",
            fmt(&rows2),
            fmt(&rows3),
            rows3.last().unwrap().sup_error <= 1e-3
        ),
    }
}

// ---------------------------------------------------------------------------
// Criterion 11

fn random_series(rng: &mut ChaCha8Rng) -> Series {
    let n = rng.gen_range(0..5);
    let terms = (0..n)
        .map(|_| {
            let e = ExpQ::new(rng.gen_range(-3..=9), 2 * rng.gen_range(1..=3));
            let c = Scalar::new(rng.gen_range(-5..=5) as f64, rng.gen_range(-5..=5) as f64);
            (e, c)
        })
        .collect();
    let prec = rng.gen_bool(0.5).then(|| ExpQ::from_int(5));
    Series::from_terms(terms, prec)
}

fn agree(a: &Series, b: &Series) -> bool {
    let p = match (a.prec(), b.prec()) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    };
    a.terms()
        .iter()
        .chain(b.terms())
        .map(|(e, _)| *e)
        .filter(|e| p.map_or(true, |p| *e < p))
        .all(|e| (a.coeff_at(e) - b.coeff_at(e)).norm() <= 1e-9 * (1.0 + a.coeff_at(e).norm()))
}

fn puiseux_trial(rng: &mut ChaCha8Rng) -> bool {
    let t = tol();
    let (a, b, c) = (random_series(rng), random_series(rng), random_series(rng));
    let mut ok = agree(&a.add(&b, &t), &b.add(&a, &t))
        && agree(&a.mul(&b, &t), &b.mul(&a, &t))
        && agree(&a.mul(&b.add(&c, &t), &t), &a.mul(&b, &t).add(&a.mul(&c, &t), &t))
        && agree(&a.mul(&b, &t).mul(&c, &t), &a.mul(&b.mul(&c, &t), &t))
        && a.sub(&a, &t).is_zero_to_precision();
    if let (Some(va), Some(vb)) = (a.valuation().finite(), b.valuation().finite()) {
        ok &= a.mul(&b, &t).valuation() == Valuation::Finite(va + vb);
        let s = a.add(&b, &t);
        ok &= s.valuation().lower().map_or(true, |v| v >= va.min(vb));
        if va != vb {
            ok &= s.valuation() == Valuation::Finite(va.min(vb));
        }
    }
    ok && agree(&Series::parse(&a.to_string()).unwrap_or_else(|_| Series::one()), &a)
}

fn algebra_trial(rng: &mut ChaCha8Rng) -> bool {
    let poly = |rng: &mut ChaCha8Rng| {
        let n = rng.gen_range(1..6);
        Poly::new((0..n).map(|_| Scalar::new(rng.gen_range(-5..=5) as f64, rng.gen_range(-5..=5) as f64)).collect())
    };
    let (p, q) = (poly(rng), poly(rng));
    let z = rand_scalar(rng, 1.5);
    let s = (1.0 + p.norm_inf()) * (1.0 + q.norm_inf()) * 100.0;
    let close = |a: Scalar, b: Scalar, s: f64| (a - b).norm() <= 1e-9 * (1.0 + s);
    let mut ok = close(p.add(&q).eval(z), p.eval(z) + q.eval(z), s)
        && close(p.mul(&q).eval(z), p.eval(z) * q.eval(z), s)
        && close(p.compose(&q).eval(z), p.eval(q.eval(z)), s * s);
    if !q.is_zero() {
        if let Ok((quo, rem)) = p.div_rem(&q) {
            let back = quo.mul(&q).add(&rem);
            ok &= (0..8).all(|k| (back.coeff(k) - p.coeff(k)).norm() <= 1e-8 * (1.0 + p.norm_inf()));
        } else {
            ok = false;
        }
    }
    let roots: Vec<Scalar> = (0..rng.gen_range(1..6)).map(|_| rand_scalar(rng, 1.5)).collect();
    let separated = roots
        .iter()
        .enumerate()
        .all(|(i, a)| roots[..i].iter().all(|b| (a - b).norm() > 0.05));
    if separated {
        match poly_roots(&Poly::from_roots(&roots), &tol()) {
            Ok(found) => {
                ok &= found.iter().map(|x| x.1).sum::<usize>() == roots.len()
                    && roots.iter().all(|r| found.iter().any(|(w, _)| (w - r).norm() < 1e-7));
            }
            Err(_) => ok = false,
        }
    }
    let (e1, e2) = (random_exp(rng, -4, 4), random_exp(rng, -4, 4));
    ok && e1 + e2 == e2 + e1 && (e1 - e2) + e2 == e1 && e1.to_string().parse::<ExpQ>().ok() == Some(e1)
}

fn c11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pf = (0..1000).filter(|_| !puiseux_trial(&mut rng)).count();
    let af = (0..1000).filter(|_| !algebra_trial(&mut rng)).count();
    Outcome {
        pass: pf == 0 && af == 0,
        detail: format!("puiseux 1000 trials, {pf} failures; algebra 1000 trials, {af} failures"),
    }
}
