//! Acceptance harness: runs the ten desk-scale criteria under the default
//! configuration (ε = 2⁻⁴ … 2⁻¹⁹, moment cap 24, quadrature tolerance
//! 1e-10) and prints one PASS/FAIL line per criterion. Exits nonzero when
//! any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use genfun::locality::{diagram_arrows, Admissibility, LocalityType};
use genfun::points::{
    find_witness_point, is_moderate_number, is_negligible_number, point_eval, GeneralizedNumber, GeneralizedPoint,
    PointKind, WitnessConfig,
};
use genfun::quotient::{
    collect_rows, default_probes, is_associated_zero, is_moderate, is_negligible, zeroth_order_applies, QuotientConfig,
    RepresentativeNet, Verdict, VerdictReport,
};
use genfun::sharp::{project_special, sharp_valuation, SharpConfig};
use genfun::sheafops::{glue, restrict, restrict_testobject, PartitionOfUnity};
use genfun::smooth::SmoothFn;
use genfun::symexpr::{Diffeo, Distribution, Representative};
use genfun::testobjects::{verify_test_object, Probes, Schedule, TestObjectFamily, VerifyConfig};
use genfun::Interval;

const BUDGET: Duration = Duration::from_secs(60);

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn x() -> SmoothFn {
    SmoothFn::x()
}

fn iota(u: Distribution, d: Interval) -> Representative {
    Representative::iota(u, d).unwrap()
}

fn mul(a: &Representative, b: &Representative) -> Representative {
    Representative::mul(a, b).unwrap()
}

fn sub(a: &Representative, b: &Representative) -> Representative {
    Representative::sub(a, b).unwrap()
}

/// `ι(f)ι(g) - ι(fg)`.
fn product_defect(f: SmoothFn, g: SmoothFn, d: Interval) -> Representative {
    let fg = f.clone() * g.clone();
    sub(&mul(&iota(Distribution::smooth(f), d), &iota(Distribution::smooth(g), d)), &iota(Distribution::smooth(fg), d))
}

/// `ι(f) - σ(f)`.
fn embedding_defect(f: SmoothFn, d: Interval) -> Representative {
    sub(&iota(Distribution::smooth(f.clone()), d), &Representative::sigma(f, d))
}

/// Negligible with every finite slope at least `min` and r² ≥ 0.9.
fn negligible_with_slope(rep: &VerdictReport, min: f64) -> Result<(), String> {
    ensure(rep.verdict == Verdict::True, format!("verdict {:?}", rep.verdict))?;
    for row in &rep.rows {
        let e = &row.estimate;
        if e.is_zero_net() {
            continue;
        }
        ensure(
            e.slope >= min && e.r2 >= 0.9,
            format!("{} {} k={}: slope {:.3} r2 {:.3}", row.testobj_id, row.seminorm_id, row.k, e.slope, e.r2),
        )?;
    }
    Ok(())
}

fn lattice() -> Check {
    let all = LocalityType::all();
    ensure(all.len() == 24, format!("{} valid types", all.len()))?;
    for &a in all {
        for &b in all {
            if a.stronger_eq(b) && b.stronger_eq(a) {
                ensure(a == b, format!("{a} and {b} are mutually stronger"))?;
            }
            for &c in all {
                if a.stronger_eq(b) && b.stronger_eq(c) {
                    ensure(a.stronger_eq(c), format!("transitivity fails at {a}, {b}, {c}"))?;
                }
            }
        }
    }
    let strictly = |a: LocalityType, b: LocalityType| a != b && a.stronger_eq(b);
    let between = |a: LocalityType, b: LocalityType| all.iter().any(|&c| strictly(a, c) && strictly(c, b));
    let covers: BTreeSet<_> = all
        .iter()
        .flat_map(|&a| all.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| strictly(a, b) && !between(a, b))
        .collect();
    let arrows = diagram_arrows();
    ensure(arrows.iter().all(|&(a, b)| strictly(a, b)), "an arrow contradicts the order")?;
    let reduction: BTreeSet<_> = arrows.iter().copied().filter(|&(a, b)| !between(a, b)).collect();
    ensure(reduction == covers, "transitive reduction of the diagram differs from the covering relation")?;
    for &a in all {
        for &b in all {
            let m = a.combine(b);
            ensure(a.stronger_eq(m) && b.stronger_eq(m), format!("combine({a}, {b}) = {m} is no lower bound"))?;
            for &c in all {
                if a.stronger_eq(c) && b.stronger_eq(c) {
                    ensure(m.stronger_eq(c), format!("combine({a}, {b}) = {m} is below the lower bound {c}"))?;
                }
            }
        }
    }
    let listed: BTreeSet<LocalityType> = [
        "(tau_x phi_eps, x, eps)",
        "(tau_x phi_eps, x, star)",
        "(phi_eps(x), x, eps)",
        "(phi_eps(x), x, star)",
        "(phi_eps(x), star, eps)",
        "phi_eps(x)",
        "(x,eps)",
        "x",
        "eps",
        "star",
    ]
    .iter()
    .map(|s| s.parse().unwrap())
    .collect();
    let sheaf: BTreeSet<_> = all.iter().copied().filter(|l| l.admissible(Admissibility::Sheaf)).collect();
    ensure(sheaf == listed, format!("{} sheaf-admissible types", sheaf.len()))?;
    Ok(format!("24 types, {} covering pairs, glb checked on 24³ triples, 10 sheaf types", covers.len()))
}

fn embedding() -> Check {
    let d = Interval::default();
    let cfg = QuotientConfig::standard(d);
    let fg = is_negligible(&product_defect(x().sin(), x().cos(), d), &cfg).map_err(|e| e.to_string())?;
    negligible_with_slope(&fg, 6.0).map_err(|e| format!("ι(sin)ι(cos) - ι(sin·cos): {e}"))?;

    let mut poly_cfg = cfg.clone();
    poly_cfg.k_max = 1;
    let polys = [
        SmoothFn::c(1.0),
        x(),
        x().powi(2) - SmoothFn::c(3.0),
        x().powi(3),
        x().powi(4) - x() * SmoothFn::c(2.0) + SmoothFn::c(0.5),
    ];
    for f in polys {
        let net = RepresentativeNet::new(&embedding_defect(f.clone(), d), 2);
        let rows = collect_rows(&net, &poly_cfg.battery, &poly_cfg.grid.values(), 1).map_err(|e| e.to_string())?;
        for row in rows {
            ensure(
                row.estimate.samples.iter().all(|s| s.floored),
                format!("(ι-σ)({f}) not floored on {} {}", row.testobj_id, row.seminorm_id),
            )?;
        }
    }

    let delta = iota(Distribution::delta(0.0), d);
    let m = is_moderate(&delta, &cfg).map_err(|e| e.to_string())?;
    ensure(m.verdict == Verdict::True, format!("ι(δ₀) moderate verdict {:?}", m.verdict))?;
    let mut worst: f64 = 0.0;
    for row in m.rows.iter().filter(|r| r.k == 0 && r.seminorm_id.ends_with("/d0")) {
        worst = worst.max((row.estimate.slope + 1.0).abs());
    }
    ensure(worst <= 0.1, format!("ι(δ₀) sup slope off −1 by {worst:.3}"))?;
    let n = is_negligible(&delta, &cfg).map_err(|e| e.to_string())?;
    ensure(n.verdict == Verdict::False, format!("ι(δ₀) negligible verdict {:?}", n.verdict))?;
    Ok(format!("fg min slope {:.2}; polynomials floored; ι(δ₀) slope −1 ± {worst:.3}", fg.min_slope()))
}

fn derivatives() -> Check {
    let d = Interval::default();
    let h = iota(Distribution::heaviside(0.0), d);
    ensure(h.diff_geometric() == iota(Distribution::delta(0.0), d), "D̂ι(H₀) is not ι(δ₀)")?;

    // Not translation invariant, so the transport term of D̂ is nonzero.
    let phi = TestObjectFamily::modulated(Schedule::default(), 2);
    let pts: Vec<(f64, f64)> = [2f64.powi(-5), 2f64.powi(-8)]
        .iter()
        .flat_map(|&e| (0..=20).map(move |i| (e, -0.9 + 0.09 * i as f64)))
        .collect();
    let close = |a: &Representative, b: &Representative| -> Result<f64, String> {
        let mut worst: f64 = 0.0;
        for &(e, xv) in &pts {
            let va = a.eval(&phi, e, xv).map_err(|e| e.to_string())?;
            let vb = b.eval(&phi, e, xv).map_err(|e| e.to_string())?;
            worst = worst.max((va - vb).abs() / (1.0 + vb.abs()));
        }
        Ok(worst)
    };
    let r = mul(&iota(Distribution::heaviside(0.1), d), &Representative::sigma(x().sin(), d));
    let s = Representative::add(&iota(Distribution::smooth(x().exp()), d), &Representative::eps(d)).unwrap();
    let rs = mul(&r, &s);
    let sum = |a: Representative, b: Representative| Representative::add(&a, &b).unwrap();
    let mut worst: f64 = 0.0;
    // D̂ through the evaluated Lie derivative, which does not expand products.
    let lie = |t: &Representative| Representative::lie(t);
    worst = worst.max(close(&lie(&rs), &sum(mul(&lie(&r), &s), mul(&r, &lie(&s))))?);
    worst = worst.max(close(&rs.diff_geometric(), &sum(mul(&r.diff_geometric(), &s), mul(&r, &s.diff_geometric())))?);
    worst = worst.max(close(
        &rs.diff_componentwise(),
        &sum(mul(&r.diff_componentwise(), &s), mul(&r, &s.diff_componentwise())),
    )?);
    ensure(worst < 1e-6, format!("Leibniz defect {worst:e}"))?;

    let theta = TestObjectFamily::dilated(Schedule::default(), 0.5);
    let local = [
        Representative::sigma(x().sin(), d),
        mul(&Representative::x(d), &Representative::eps(d)),
        Representative::iota_theta(Distribution::delta(0.2), theta, d).unwrap(),
        sum(mul(&Representative::eps_pow(2, d), &Representative::sigma(x().cos(), d)), Representative::x(d)),
    ];
    let mut count = 0;
    for r in &local {
        ensure(
            r.locality.stronger_eq("(x,eps)".parse().unwrap()),
            format!("{r} has locality {}", r.locality),
        )?;
        let dt = r.diff_componentwise();
        for dh in [r.diff_geometric(), Representative::lie(r)] {
            for &(e, xv) in &pts {
                let a = dh.eval(&phi, e, xv).map_err(|e| e.to_string())?;
                let b = dt.eval(&phi, e, xv).map_err(|e| e.to_string())?;
                ensure(a == b, format!("D̂ ≠ D̃ for {r} at ε={e}, x={xv}: {a} vs {b}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("AST identity holds; Leibniz defect {worst:.1e}; D̂ = D̃ bitwise on {count} evaluations"))
}

fn zeroth_order() -> Check {
    let d = Interval::default();
    let cfg = QuotientConfig::standard(d);
    let delta = iota(Distribution::delta(0.0), d);
    let heav = iota(Distribution::heaviside(0.0), d);
    let elements = [
        ("ι(δ₀)", delta.clone()),
        ("ι(x)ι(δ₀)", mul(&iota(Distribution::smooth(x()), d), &delta)),
        ("ι(H₀)²-ι(H₀)", sub(&mul(&heav, &heav), &heav)),
        ("ι(sin)ι(cos)-ι(sin·cos)", product_defect(x().sin(), x().cos(), d)),
        ("(ι-σ)(sin)", embedding_defect(x().sin(), d)),
        ("ι(δ₀)σ(cos)+ε", Representative::add(&mul(&delta, &Representative::sigma(x().cos(), d)), &Representative::eps(d)).unwrap()),
    ];
    let mut negligible = 0;
    for (name, r) in &elements {
        ensure(zeroth_order_applies(r.locality), format!("{name}: locality {} too weak", r.locality))?;
        let m = is_moderate(r, &cfg).map_err(|e| e.to_string())?;
        ensure(m.verdict == Verdict::True, format!("{name} is not moderate ({:?})", m.verdict))?;
        let rep = is_negligible(r, &cfg).map_err(|e| e.to_string())?;
        ensure(rep.verdict != Verdict::Inconclusive, format!("{name}: full verdict inconclusive"))?;
        ensure(
            rep.zeroth_order == Some(rep.verdict),
            format!("{name}: k = 0 gives {:?}, k ≤ 2 gives {:?}", rep.zeroth_order, rep.verdict),
        )?;
        negligible += rep.verdict.is_true() as usize;
    }
    Ok(format!("{} elements, {negligible} negligible, k = 0 verdict matches in all", elements.len()))
}

fn sheaf() -> Check {
    let d = Interval::new(-1.0, 1.0);
    let cover = [Interval::new(-1.0, 0.3), Interval::new(-0.3, 1.0)];
    let pou = PartitionOfUnity::new(&cover).map_err(|e| e.to_string())?;
    let global = mul(&iota(Distribution::delta(0.1), d), &Representative::sigma(x().sin() + SmoothFn::c(2.0), d));
    let parts: Vec<Representative> = cover.iter().map(|&v| restrict(&global, v).unwrap()).collect();
    let glued = glue(&parts, &pou).map_err(|e| e.to_string())?;
    let cfg = QuotientConfig::standard(d);
    let rep = is_negligible(&sub(&glued, &global), &cfg).map_err(|e| e.to_string())?;
    negligible_with_slope(&rep, 6.0).map_err(|e| format!("glue defect: {e}"))?;
    for (i, &v) in cover.iter().enumerate() {
        let back = restrict(&glued, v).map_err(|e| e.to_string())?;
        let rep = is_negligible(&sub(&back, &parts[i]), &QuotientConfig::standard(v)).map_err(|e| e.to_string())?;
        negligible_with_slope(&rep, 6.0).map_err(|e| format!("restricted glue on chart {i}: {e}"))?;
    }

    // (R|V)|W and R|W agree once the kernels sit where ρ_V is identically 1.
    let v = Interval::new(-0.8, 0.8);
    let w = Interval::new(-0.4, 0.5);
    let twice = restrict(&restrict(&global, v).unwrap(), w).unwrap();
    let once = restrict(&global, w).unwrap();
    let mut evaluations = 0;
    for phi in &cfg.battery.test_objects {
        let psi = restrict_testobject(phi, w);
        for k in 8..=19 {
            let e = 2f64.powi(-k);
            for i in 0..=20 {
                let xv = w.lo + w.width() * (i as f64 + 0.5) / 21.5;
                let a = twice.eval(&psi, e, xv).map_err(|e| e.to_string())?;
                let b = once.eval(&psi, e, xv).map_err(|e| e.to_string())?;
                ensure(a == b, format!("transitivity at ε={e}, x={xv}: {a} vs {b}"))?;
                evaluations += 1;
            }
        }
    }

    let candidates = [
        ("ι(sin)ι(cos)-ι(sin·cos)", product_defect(x().sin(), x().cos(), d), true),
        ("ι(δ₀.₁)σ(sin+2)", global.clone(), false),
    ];
    for (name, r, expected) in candidates {
        let whole = is_negligible(&r, &cfg).map_err(|e| e.to_string())?.verdict;
        let mut each = true;
        for &v in &cover {
            let rv = restrict(&r, v).map_err(|e| e.to_string())?;
            each &= is_negligible(&rv, &QuotientConfig::standard(v)).map_err(|e| e.to_string())?.verdict.is_true();
        }
        ensure(whole.is_true() == expected, format!("{name}: verdict {whole:?}"))?;
        ensure(whole.is_true() == each, format!("{name}: global {whole:?}, restrictions negligible {each}"))?;
    }
    Ok(format!("glue defect min slope {:.2}; transitivity exact on {evaluations} evaluations; localization holds", rep.min_slope()))
}

fn association() -> Check {
    let d = Interval::default();
    let cfg = QuotientConfig::standard(d);
    let probes = default_probes(d);
    let delta = iota(Distribution::delta(0.0), d);
    let heav = iota(Distribution::heaviside(0.0), d);
    let cases = [
        ("ι(x)ι(δ₀)", mul(&iota(Distribution::smooth(x()), d), &delta), Verdict::True),
        ("ι(H₀)²-ι(H₀)", sub(&mul(&heav, &heav), &heav), Verdict::True),
        ("ι(δ₀)", delta.clone(), Verdict::False),
    ];
    let mut worst: f64 = 0.0;
    for (name, r, expected) in cases {
        let rep = is_associated_zero(&r, &probes, &cfg).map_err(|e| e.to_string())?;
        ensure(rep.verdict == expected, format!("{name}: verdict {:?}", rep.verdict))?;
        if expected == Verdict::True {
            for row in &rep.rows {
                let last = row.pairings.last().map(|p| p.1.abs()).unwrap_or(f64::INFINITY);
                ensure(last < 1e-3, format!("{name}: final pairing {last:e} on {} / {}", row.testobj_id, row.probe))?;
                worst = worst.max(last);
            }
        }
    }
    Ok(format!("largest final pairing {worst:.1e}; ι(δ₀) not associated to 0"))
}

fn point_values() -> Check {
    let d = Interval::default();
    let cfg = QuotientConfig::standard(d);
    let phi = TestObjectFamily::base(Schedule::default());
    let wcfg = WitnessConfig::standard(d, cfg.grid.values());
    let delta = iota(Distribution::delta(0.0), d);
    let point = find_witness_point(&delta, &phi, &wcfg)
        .map_err(|e| e.to_string())?
        .ok_or("no witness for ι(δ₀)")?;
    let PointKind::Staircase { steps } = &point.kind else {
        return Err("witness is not a staircase".into());
    };
    let value = point_eval(&delta, &point, &cfg).map_err(|e| e.to_string())?;
    let m = is_moderate_number(&value, &cfg).map_err(|e| e.to_string())?;
    ensure(m.verdict == Verdict::True, format!("point value moderate verdict {:?}", m.verdict))?;
    let mut worst: f64 = 0.0;
    for row in m.rows.iter().filter(|r| r.k == 0) {
        worst = worst.max((row.estimate.slope + 1.0).abs());
    }
    ensure(worst <= 0.1, format!("point value slope off −1 by {worst:.3}"))?;

    let negligible = [
        product_defect(x().sin(), x().cos(), d),
        embedding_defect(x().sin(), d),
        embedding_defect(x().powi(3) - x(), d),
    ];
    for r in &negligible {
        let found = find_witness_point(r, &phi, &wcfg).map_err(|e| e.to_string())?;
        ensure(found.is_none(), format!("witness returned for negligible {r}"))?;
    }

    // R(X) - R'(X') for R' = R + negligible and X' = X + ε¹².
    let moved: Vec<(f64, f64)> = steps.iter().map(|&(e, xv)| (e, xv + e.powi(12))).collect();
    let point2 = GeneralizedPoint::staircase(moved, d);
    let r2 = Representative::add(&delta, &negligible[0]).unwrap();
    let defect = GeneralizedNumber::sub(&value, &point_eval(&r2, &point2, &cfg).map_err(|e| e.to_string())?);
    let rep = is_negligible_number(&defect, &cfg).map_err(|e| e.to_string())?;
    negligible_with_slope(&rep, 6.0).map_err(|e| format!("well-definedness defect: {e}"))?;
    Ok(format!(
        "staircase witness of {} steps, point value slope −1 ± {worst:.3}; defect min slope {:.2}",
        steps.len(),
        rep.min_slope()
    ))
}

fn sharp() -> Check {
    let d = Interval::default();
    let cfg = SharpConfig::standard(d);
    let zero = Representative::zero(d);
    let elements = [
        zero.clone(),
        iota(Distribution::delta(0.0), d),
        Representative::eps(d),
        Representative::eps_pow(2, d),
        Representative::sigma(x().sin(), d),
        iota(Distribution::heaviside(0.0), d),
    ];
    let n = elements.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sharp_valuation(&elements[i], &elements[j], &cfg).map_err(|e| e.to_string())?.v;
            dist[i][j] = (-v).exp2();
            dist[j][i] = dist[i][j];
        }
    }
    let slack = 0.2f64.exp2();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                ensure(
                    dist[a][c] <= slack * dist[a][b].max(dist[b][c]),
                    format!("ultrametric fails on ({a}, {b}, {c}): {} > max({}, {})", dist[a][c], dist[a][b], dist[b][c]),
                )?;
            }
        }
    }
    let mut worst_k: f64 = 0.0;
    for k in 1..=4 {
        let v = sharp_valuation(&Representative::eps_pow(k, d), &zero, &cfg).map_err(|e| e.to_string())?.v;
        worst_k = worst_k.max((v - k as f64).abs());
    }
    ensure(worst_k <= 0.1, format!("d(ε^k, 0) exponent off by {worst_k:.3}"))?;

    let theta = TestObjectFamily::dilated(Schedule::default(), 0.5);
    let others = [TestObjectFamily::base(Schedule::default()), TestObjectFamily::modulated(Schedule::default(), 3)];
    for u in [Distribution::delta(0.0), Distribution::heaviside(0.3), Distribution::smooth(x().cos())] {
        let projected = project_special(&iota(u.clone(), d), &theta).map_err(|e| e.to_string())?;
        let frozen = Representative::iota_theta(u, theta.clone(), d).unwrap();
        for phi in &others {
            for k in [4, 10, 19] {
                let e = 2f64.powi(-k);
                for i in 0..100 {
                    let xv = -1.98 + 3.96 * i as f64 / 99.0;
                    let a = projected.eval(phi, e, xv).map_err(|e| e.to_string())?;
                    let b = frozen.eval(phi, e, xv).map_err(|e| e.to_string())?;
                    ensure(a == b, format!("π_θ∘ι ≠ ι_θ at ε={e}, x={xv}"))?;
                }
            }
        }
    }

    let delta = iota(Distribution::delta(0.0), d);
    let pairs = [
        (delta.clone(), Representative::eps_pow(2, d)),
        (delta.clone(), delta.clone()),
        (Representative::eps(d), Representative::sigma(x().cos(), d)),
    ];
    let mut worst_add: f64 = 0.0;
    for (a, b) in &pairs {
        let v = |r: &Representative| sharp_valuation(r, &zero, &cfg).map(|s| s.v).map_err(|e| e.to_string());
        let (va, vb, vab) = (v(a)?, v(b)?, v(&mul(a, b))?);
        worst_add = worst_add.max((vab - va - vb).abs());
    }
    ensure(worst_add <= 0.2, format!("valuation additivity off by {worst_add:.3}"))?;
    Ok(format!(
        "ultrametric on {} triples; ε^k exponents within {worst_k:.3}; projection exact; additivity within {worst_add:.3}",
        n * n * n
    ))
}

fn pullback() -> Check {
    let double = Diffeo::new(x() * SmoothFn::c(2.0), Some(x() * SmoothFn::c(0.5)), Interval::new(-1.1, 1.1), Interval::new(-2.2, 2.2))
        .map_err(|e| e.to_string())?;
    let wiggle = Diffeo::new(x() + x().sin() * SmoothFn::c(0.1), None, Interval::new(-1.0, 1.0), Interval::new(-1.1, 1.1))
        .map_err(|e| e.to_string())?;
    let phi_all = [TestObjectFamily::base(Schedule::default()), TestObjectFamily::dilated(Schedule::default(), 0.5)];
    let grid: Vec<f64> = [6, 10, 14, 19].iter().map(|&k| 2f64.powi(-k)).collect();
    let max_diff = |a: &Representative, b: &Representative| -> Result<f64, String> {
        let dom = a.domain;
        let mut worst: f64 = 0.0;
        for phi in &phi_all {
            for &e in &grid {
                for i in 0..=40 {
                    let xv = dom.lo + dom.width() * (0.05 + 0.9 * i as f64 / 40.0);
                    let va = a.eval(phi, e, xv).map_err(|e| e.to_string())?;
                    let vb = b.eval(phi, e, xv).map_err(|e| e.to_string())?;
                    worst = worst.max((va - vb).abs());
                }
            }
        }
        Ok(worst)
    };
    let mut worst_embed: f64 = 0.0;
    for mu in [&double, &wiggle] {
        for f in [x().sin(), x().powi(2) + x().exp(), (x() * SmoothFn::c(3.0)).cos()] {
            let u = Distribution::smooth(f);
            let lhs = iota(u.clone(), mu.target).pullback(mu).map_err(|e| e.to_string())?;
            let rhs = iota(u.pullback(mu).map_err(|e| e.to_string())?, mu.source);
            worst_embed = worst_embed.max(max_diff(&lhs, &rhs)?);
        }
        for r in [
            iota(Distribution::delta(0.1), mu.target),
            Representative::sigma(x().sin(), mu.target),
            mul(&iota(Distribution::heaviside(0.0), mu.target), &Representative::eps(mu.target)),
        ] {
            let p = r.pullback(mu).map_err(|e| e.to_string())?;
            ensure(p.locality == r.locality, format!("locality {} became {}", r.locality, p.locality))?;
        }
    }
    ensure(worst_embed < 1e-8, format!("μ*(ιf) - ι(μ*f) = {worst_embed:e}"))?;
    let comp = double.compose(&wiggle).map_err(|e| e.to_string())?;
    let r = mul(&iota(Distribution::delta(0.3), double.target), &iota(Distribution::smooth(x().cos()), double.target));
    let once = r.pullback(&comp).map_err(|e| e.to_string())?;
    let twice = r.pullback(&double).unwrap().pullback(&wiggle).map_err(|e| e.to_string())?;
    let worst_fun = max_diff(&once, &twice)?;
    ensure(worst_fun < 1e-8, format!("functoriality defect {worst_fun:e}"))?;
    Ok(format!("embedding defect {worst_embed:.1e}; functoriality defect {worst_fun:.1e}; locality preserved"))
}

fn verifier() -> Check {
    let d = Interval::default();
    let cfg = VerifyConfig::standard(d);
    let probes = Probes::standard(d);
    let base = verify_test_object(&TestObjectFamily::base(Schedule::default()), &probes, &cfg);
    for c in &base.conditions {
        ensure(c.passed, format!("base fails ({}): {}", c.condition, c.detail))?;
    }
    let frozen = verify_test_object(&TestObjectFamily::fixed_order(0), &probes, &cfg);
    let iii = frozen.condition("iii").ok_or("no condition (iii) in the report")?;
    ensure(!iii.passed, "frozen m = 0 family passes (iii)")?;
    ensure((iii.measured - 2.0).abs() <= 0.3, format!("frozen (iii) slope {:.3}", iii.measured))?;
    Ok(format!("base passes (i)-(iv); m = 0 fails (iii) with slope {:.3}", iii.measured))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("lattice", lattice),
        ("embedding/quotient", embedding),
        ("derivatives", derivatives),
        ("zeroth-order reduction", zeroth_order),
        ("sheaf", sheaf),
        ("association", association),
        ("point values", point_values),
        ("sharp", sharp),
        ("pullback", pullback),
        ("test-object verifier", verifier),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = run();
        let took = start.elapsed();
        let result = match result {
            Ok(msg) if took > BUDGET => Err(format!("{msg}; exceeded the {}s budget", BUDGET.as_secs())),
            r => r,
        };
        let (tag, msg) = match &result {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        println!("criterion {:>2} {name:<24} {tag} [{:.1}s] {msg}", i + 1, took.as_secs_f64());
        failed += result.is_err() as usize;
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
