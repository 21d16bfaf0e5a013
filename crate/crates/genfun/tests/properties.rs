//! Randomized invariants.

use genfun::quotient::least_squares;
use genfun::scalar::{Shape, Tps};
use genfun::sheafops::PartitionOfUnity;
use genfun::smooth::SmoothFn;
use genfun::symexpr::{Diffeo, Distribution, Representative};
use genfun::testobjects::{Schedule, TestObjectFamily};
use genfun::Interval;
use proptest::prelude::*;

fn smooth_fn() -> impl Strategy<Value = SmoothFn> {
    let leaf = prop_oneof![Just(SmoothFn::x()), (-2.0..2.0f64).prop_map(SmoothFn::c)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| f.sin()),
            inner.clone().prop_map(|f| (f * SmoothFn::c(0.3)).exp()),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner).prop_map(|(a, b)| a * b),
        ]
    })
}

fn affine(a: f64, b: f64, source: Interval) -> Diffeo {
    let (p, q) = (a * source.lo + b, a * source.hi + b);
    let target = Interval::new(p.min(q), p.max(q));
    let fwd = SmoothFn::x() * SmoothFn::c(a) + SmoothFn::c(b);
    let inv = (SmoothFn::x() - SmoothFn::c(b)) * SmoothFn::c(1.0 / a);
    Diffeo::new(fwd, Some(inv), source, target).unwrap()
}

fn slope() -> impl Strategy<Value = f64> {
    prop_oneof![0.5..2.0f64, -2.0..-0.5f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbolic_derivative_matches_central_differences(f in smooth_fn(), x in -1.0..1.0f64) {
        let h = 1e-5;
        let fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
        let d = f.derivative().value(x);
        prop_assert!((fd - d).abs() <= 1e-6 * (1.0 + d.abs()), "{f}: {fd} vs {d}");
    }

    #[test]
    fn taylor_jets_agree_with_f64_and_symbolic_derivatives(f in smooth_fn(), x in -1.0..1.0f64) {
        let shape = Shape::new(&[3]);
        let jet: Tps = f.eval(&Tps::var(&shape, 0, x));
        let v = f.value(x);
        prop_assert!((jet.derivative(&[0]) - v).abs() <= 1e-12 * (1.0 + v.abs()));
        let mut g = f.clone();
        for k in 1..=3u8 {
            g = g.derivative();
            let want = g.value(x);
            let got = jet.derivative(&[k]);
            prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{f} order {k}: {got} vs {want}");
        }
    }

    #[test]
    fn least_squares_recovers_power_laws(k in -6.0..6.0f64, c in 1e-3..1e3f64, n in 3usize..20) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| {
            let e = 0.1 * 0.5f64.powi(i as i32);
            (e.ln(), (c * e.powf(k)).ln())
        }).collect();
        let (s, b, r2) = least_squares(&pts);
        prop_assert!((s - k).abs() < 1e-9 && (b - c.ln()).abs() < 1e-8 && r2 > 1.0 - 1e-12);
    }

    #[test]
    fn partitions_of_unity_sum_to_one(cuts in prop::collection::vec((0.05..0.95f64, 0.01..0.2f64), 1..5)) {
        // A chain cover of (-2, 2): chart i ends past cut i, chart i+1 starts before it.
        let mut cs: Vec<(f64, f64)> = cuts.iter().map(|&(t, w)| (-2.0 + 4.0 * t, w)).collect();
        cs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        cs.dedup_by(|a, b| a.0 - b.0 < 0.5);
        let mut cover = Vec::new();
        let mut lo = -2.0;
        for &(c, w) in &cs {
            cover.push(Interval::new(lo, c + w));
            lo = c - w;
        }
        cover.push(Interval::new(lo, 2.0));
        let pou = PartitionOfUnity::new(&cover).unwrap();
        prop_assert!(pou.sum_defect(2000) < 1e-12);
        prop_assert!(pou.weights.iter().all(|w| (0..100).all(|i| w.value(-2.0 + 0.04 * i as f64) >= 0.0)));
    }

    #[test]
    fn affine_pullbacks_compose(
        a in slope(), b in -0.3..0.3f64, c in slope(), d in -0.3..0.3f64,
        p in 0.1..0.9f64, q in 0.1..0.9f64, x in -0.8..0.8f64, k in 3i32..12,
    ) {
        let s = Interval::new(-1.0, 1.0);
        let nu = affine(c, d, s);
        let mu = affine(a, b, nu.target);
        let t = mu.target;
        let at = |u: f64| t.lo + u * t.width();
        let r = Representative::add(
            &Representative::mul(
                &Representative::iota(Distribution::delta(at(p)), t).unwrap(),
                &Representative::sigma(SmoothFn::x().cos(), t),
            ).unwrap(),
            &Representative::iota(Distribution::heaviside(at(q)), t).unwrap(),
        ).unwrap();
        let direct = r.pullback(&mu.compose(&nu).unwrap()).unwrap();
        let stepwise = r.pullback(&mu).unwrap().pullback(&nu).unwrap();
        let phi = TestObjectFamily::modulated(Schedule::default(), 11);
        let eps = 2f64.powi(-k);
        let u = direct.eval(&phi, eps, x).unwrap();
        let v = stepwise.eval(&phi, eps, x).unwrap();
        prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs().max(v.abs())), "{u} vs {v}");
    }

    #[test]
    fn delta_pairing_is_the_kernel_value(x in -1.0..1.0f64, a in -1.0..1.0f64, k in 2i32..16, seed in 0u64..50) {
        let phi = TestObjectFamily::modulated(Schedule::default(), seed);
        let eps = 2f64.powi(-k);
        let r = Representative::iota(Distribution::delta(a), Interval::default()).unwrap();
        let got = r.eval(&phi, eps, x).unwrap();
        let want = phi.family.value(eps, x, a);
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }
}
