//! Mollifiers against a direct moment solve, kernel families, the
//! test-object verifier and uniform sets.

use genfun::quotient::EpsGrid;
use genfun::smooth::SmoothFn;
use genfun::symexpr::Distribution;
use genfun::testobjects::verify::{distribution_action, regularized_action, support_radius};
use genfun::testobjects::{
    check_uniform, make_uniform_set, mollifier, shift_set, verify_test_object, FamilyKind, Probes, Schedule,
    TestObjectFamily, VerifyConfig, MAX_ORDER,
};
use genfun::Interval;

fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// `∫_{-1}^{1} t^n B(t) dt` by composite Simpson on 20000 intervals.
fn bump_moment(n: i32) -> f64 {
    let k = 20_000;
    let h = 2.0 / k as f64;
    let f = |t: f64| t.powi(n) * bump(t);
    let mut s = f(-1.0) + f(1.0);
    for i in 1..k {
        let t = -1.0 + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
    }
    s * h / 3.0
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

#[test]
fn polynomial_matches_the_hankel_moment_solve_for_small_orders() {
    for m in [0usize, 2, 4, 6, 8] {
        let a: Vec<Vec<f64>> =
            (0..=m).map(|k| (0..=m).map(|j| bump_moment((k + j) as i32)).collect()).collect();
        let mut rhs = vec![0.0; m + 1];
        rhs[0] = 1.0;
        let want = solve(a, rhs);
        let got = mollifier(m).unwrap().coeffs();
        for (j, (w, g)) in want.iter().zip(&got).enumerate() {
            assert!((w - g).abs() < 1e-6 * (1.0 + w.abs()), "m={m} c{j}: hankel {w} vs {g}");
        }
    }
}

#[test]
fn moments_by_independent_quadrature() {
    for m in [4usize, 10, 16, 24] {
        let mol = mollifier(m).unwrap();
        let k = 40_000;
        let h = 2.0 / k as f64;
        for n in 0..=m.min(12) as i32 {
            let mut s = 0.0;
            for i in 0..k {
                let t = -1.0 + (i as f64 + 0.5) * h;
                s += t.powi(n) * mol.eval(&t);
            }
            let want = if n == 0 { 1.0 } else { 0.0 };
            assert!((s * h - want).abs() < 1e-8, "m={m} n={n}: {}", s * h);
        }
    }
    assert!(mollifier(MAX_ORDER + 1).is_err());
}

#[test]
fn kernels_have_unit_mass_and_shrinking_support() {
    let fams = [
        TestObjectFamily::base(Schedule::default()),
        TestObjectFamily::dilated(Schedule::default(), 0.5),
        TestObjectFamily::modulated(Schedule::default(), 4),
    ];
    for fam in &fams {
        for k in [4, 8, 12] {
            let eps = 2f64.powi(-k);
            let (lo, hi) = fam.family.support(eps, 0.3);
            assert!(hi - lo <= 2.0 * eps + 1e-15, "{}: support {lo}..{hi}", fam.id);
            let n = 4000;
            let h = (hi - lo) / n as f64;
            let mass: f64 = (0..n).map(|i| fam.family.value(eps, 0.3, lo + (i as f64 + 0.5) * h)).sum::<f64>() * h;
            assert!((mass - 1.0).abs() < 1e-6, "{} at ε={eps}: mass {mass}", fam.id);
        }
    }
    let z = TestObjectFamily::modulated_zero(Schedule::default(), 0.5, 9);
    assert_eq!(z.kind, FamilyKind::Zero);
    let eps = 2f64.powi(-6);
    let (lo, hi) = z.family.support(eps, 0.1);
    let n = 4000;
    let h = (hi - lo) / n as f64;
    let mass: f64 = (0..n).map(|i| z.family.value(eps, 0.1, lo + (i as f64 + 0.5) * h)).sum::<f64>() * h;
    assert!(mass.abs() < 1e-6, "0-test object mass {mass}");
}

#[test]
fn schedule_staircase_and_cap() {
    let s = Schedule::default();
    assert_eq!(s.order(0.5), 5);
    assert_eq!(s.order(0.25), 6);
    assert_eq!(s.order(2f64.powi(-19)), 23);
    assert_eq!(s.order(2f64.powi(-30)), 24);
    assert_eq!(Schedule::Fixed(3).order(1e-9), 3);
}

#[test]
fn reference_actions_match_closed_forms() {
    let d = Interval::default();
    let chi = SmoothFn::bump(SmoothFn::x());
    // ⟨δ', χ⟩ = -χ'(0) = 0 and ⟨δ'', χ⟩ = χ''(0) = -2/e for the bump.
    let d2 = distribution_action(&Distribution::delta_deriv(2, 0.0), &chi, d);
    assert!((d2 + 2.0 * (-1f64).exp()).abs() < 1e-12, "{d2}");
    let d1 = distribution_action(&Distribution::delta_deriv(1, 0.0), &chi, d);
    assert!(d1.abs() < 1e-14);
    // ⟨H, χ⟩ is half the bump integral.
    let h = distribution_action(&Distribution::heaviside(0.0), &chi, d);
    assert!((h - 0.5 * bump_moment(0)).abs() < 1e-8, "{h}");

    let base = TestObjectFamily::base(Schedule::default());
    for (u, want) in [(Distribution::heaviside(0.0), h), (Distribution::delta_deriv(2, 0.0), d2)] {
        let (v, _) = regularized_action(&u, &base.family, &chi, 2f64.powi(-12), d);
        assert!((v - want).abs() < 1e-6, "{v} vs {want}");
    }
}

#[test]
fn support_radius_tracks_epsilon() {
    let base = TestObjectFamily::base(Schedule::default());
    for k in [4, 9, 14] {
        let eps = 2f64.powi(-k);
        let r = support_radius(&base.family, eps, (-1.0, 1.0));
        assert!(r <= eps * 1.0001 && r >= 0.5 * eps, "ε={eps}: radius {r}");
    }
}

#[test]
fn verifier_accepts_test_objects_and_rejects_a_frozen_order() {
    let d = Interval::default();
    let cfg = VerifyConfig::standard(d);
    let probes = Probes::standard(d);
    let base = TestObjectFamily::base(Schedule::default());
    let z = TestObjectFamily::difference(&base, &TestObjectFamily::dilated(Schedule::default(), 0.5), 0.0);
    for fam in [
        base.clone(),
        TestObjectFamily::modulated(Schedule::default(), 1),
        TestObjectFamily::shifted(&base, &z, 1.0),
        z.clone(),
    ] {
        let rep = verify_test_object(&fam, &probes, &cfg);
        assert!(rep.passed, "{}: {:?}", fam.id, rep.conditions);
        let names: Vec<&str> = rep.conditions.iter().map(|c| c.condition.as_str()).collect();
        match fam.kind {
            FamilyKind::Test => assert_eq!(names, ["i", "ii", "iii", "iv"]),
            FamilyKind::Zero => assert_eq!(names, ["i'", "ii", "iii'", "iv"]),
        }
        assert!(rep.csv().starts_with("eps,condition,value\n"));
    }
    let frozen = verify_test_object(&TestObjectFamily::fixed_order(0), &probes, &cfg);
    assert!(!frozen.passed);
    let iii = frozen.condition("iii").unwrap();
    assert!(!iii.passed && (iii.measured - 2.0).abs() < 0.3, "{iii:?}");
    // A frozen order above the target passes (iii).
    let high = verify_test_object(&TestObjectFamily::fixed_order(4), &probes, &cfg);
    assert!(high.condition("iii").unwrap().passed);
}

#[test]
fn uniform_sets_share_schedule_and_support() {
    let d = Interval::default();
    let base = TestObjectFamily::base(Schedule::default());
    let set = make_uniform_set(&base, &[3, 4], 3);
    assert_eq!(set.len(), 3);
    assert!(check_uniform(&set, &EpsGrid::default(), d.middle(0.5)).uniform);
    let z = TestObjectFamily::difference(&base, &TestObjectFamily::dilated(Schedule::default(), 0.5), 0.0);
    let shifted = shift_set(&base, &z, &[0.5, 1.0, -1.0]);
    assert!(check_uniform(&shifted, &EpsGrid::default(), d.middle(0.5)).uniform);
    let mixed = [base, TestObjectFamily::fixed_order(4)];
    assert!(!check_uniform(&mixed, &EpsGrid::default(), d.middle(0.5)).uniform);
}
