//! Lattice of locality types, checked against a finite model of the data
//! `(φ, x, ε)`: nets over two ε values and three points with 0/1 entries,
//! germs as values on the discrete neighbourhood `{x-1, x, x+1}`. A type
//! `a` is stronger than `b` exactly when the partition of the model induced
//! by the `b`-data refines the one induced by the `a`-data.

use std::collections::{BTreeSet, HashMap};

use genfun::locality::{
    diagram_arrows, is_valid, Admissibility, DerivativeKind, EpsComponent as E, LocalityType, PhiComponent as P,
    XComponent as X,
};

const NE: usize = 2;
const NX: usize = 3;

type Net = [[u8; NX]; NE];

fn nets() -> Vec<Net> {
    (0..1u32 << (NE * NX))
        .map(|bits| {
            let mut n = [[0u8; NX]; NE];
            for e in 0..NE {
                for x in 0..NX {
                    n[e][x] = ((bits >> (e * NX + x)) & 1) as u8;
                }
            }
            n
        })
        .collect()
}

fn nbhd(x: usize) -> Vec<usize> {
    (x.saturating_sub(1)..=(x + 1).min(NX - 1)).collect()
}

/// The data a type names at one model point, as a flat key.
fn data(l: LocalityType, n: &Net, x: usize, e: usize) -> Vec<i32> {
    let mut k: Vec<i32> = Vec::new();
    match l.phi {
        P::FullNet => k.extend(n.iter().flatten().map(|&v| v as i32)),
        P::Component => k.extend(n[e].iter().map(|&v| v as i32)),
        P::Germ => {
            k.push(100 + x as i32);
            for r in n.iter() {
                k.extend(nbhd(x).iter().map(|&y| r[y] as i32));
            }
        }
        P::GermComponent => {
            k.push(100 + x as i32);
            k.extend(nbhd(x).iter().map(|&y| n[e][y] as i32));
        }
        P::Value => k.extend(n.iter().map(|r| r[x] as i32)),
        P::ValueComponent => k.push(n[e][x] as i32),
        P::Star => {}
    }
    k.push(-1);
    if l.x == X::X {
        k.push(x as i32);
    }
    k.push(-2);
    if l.eps == E::Eps {
        k.push(e as i32);
    }
    k
}

/// Class label of every model point under each type.
fn partitions() -> HashMap<LocalityType, Vec<usize>> {
    let ns = nets();
    let mut out = HashMap::new();
    for &l in LocalityType::all() {
        let mut ids: HashMap<Vec<i32>, usize> = HashMap::new();
        let mut labels = Vec::new();
        for n in &ns {
            for x in 0..NX {
                for e in 0..NE {
                    let key = data(l, n, x, e);
                    let next = ids.len();
                    labels.push(*ids.entry(key).or_insert(next));
                }
            }
        }
        out.insert(l, labels);
    }
    out
}

/// Oracle order: `fine` determines `coarse`.
fn determines(fine: &[usize], coarse: &[usize]) -> bool {
    let mut map: HashMap<usize, usize> = HashMap::new();
    fine.iter().zip(coarse).all(|(&f, &c)| *map.entry(f).or_insert(c) == c)
}

fn t(phi: P, x: X, eps: E) -> LocalityType {
    LocalityType::canonical(phi, x, eps)
}

#[test]
fn exactly_24_of_28_raw_triples_are_valid() {
    let phis = [P::FullNet, P::Component, P::Germ, P::GermComponent, P::Value, P::ValueComponent, P::Star];
    let mut valid = 0;
    for phi in phis {
        for x in [X::X, X::Star] {
            for e in [E::Eps, E::Star] {
                valid += is_valid(phi, x, e) as usize;
            }
        }
    }
    assert_eq!(valid, 24);
    assert_eq!(LocalityType::all().len(), 24);
    assert!(!is_valid(P::Germ, X::Star, E::Eps));
    assert!(is_valid(P::Star, X::Star, E::Star));
    assert!(LocalityType::new(P::GermComponent, X::Star, E::Star).is_err());
}

#[test]
fn order_matches_the_finite_model() {
    let parts = partitions();
    for &a in LocalityType::all() {
        for &b in LocalityType::all() {
            let oracle = determines(&parts[&b], &parts[&a]);
            assert_eq!(a.stronger_eq(b), oracle, "{a} vs {b}");
        }
    }
}

#[test]
fn order_is_a_partial_order() {
    let all = LocalityType::all();
    for &a in all {
        assert!(a.stronger_eq(a));
        for &b in all {
            if a.stronger_eq(b) && b.stronger_eq(a) {
                assert_eq!(a, b);
            }
            for &c in all {
                if a.stronger_eq(b) && b.stronger_eq(c) {
                    assert!(a.stronger_eq(c), "{a} {b} {c}");
                }
            }
        }
    }
}

#[test]
fn diagram_closure_is_the_order_and_box_arrows_are_coverings() {
    let all = LocalityType::all();
    let idx = |l: LocalityType| all.iter().position(|&m| m == l).unwrap();
    let n = all.len();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
    }
    let arrows = diagram_arrows();
    for &(a, b) in &arrows {
        reach[idx(a)][idx(b)] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    for &a in all {
        for &b in all {
            assert_eq!(reach[idx(a)][idx(b)], a.stronger_eq(b), "{a} => {b}");
        }
    }
    // Covering pairs: a > b with nothing strictly between.
    let strictly = |a: LocalityType, b: LocalityType| a != b && a.stronger_eq(b);
    let covers: BTreeSet<(LocalityType, LocalityType)> = all
        .iter()
        .flat_map(|&a| all.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| strictly(a, b) && !all.iter().any(|&c| strictly(a, c) && strictly(c, b)))
        .collect();
    // The transitive reduction of the diagram is the covering relation.
    let reduction: BTreeSet<(LocalityType, LocalityType)> =
        arrows.iter().copied().filter(|&(a, b)| !all.iter().any(|&c| strictly(a, c) && strictly(c, b))).collect();
    assert_eq!(reduction, covers);
    // Every covering pair is drawn.
    for c in &covers {
        assert!(arrows.contains(c), "covering {} => {} missing from the diagram", c.0, c.1);
    }
    // Arrows inside one box (same x and ε components, both with φ data) are
    // coverings; arrows between boxes may skip intermediate types.
    for &(a, b) in &arrows {
        if a.x == b.x && a.eps == b.eps && a.phi != P::Star && b.phi != P::Star {
            assert!(covers.contains(&(a, b)), "{a} => {b} is not a covering");
        }
    }
}

#[test]
fn combine_is_the_greatest_lower_bound() {
    let all = LocalityType::all();
    for &a in all {
        assert_eq!(a.combine(a), a);
        for &b in all {
            let m = a.combine(b);
            assert_eq!(m, b.combine(a));
            assert!(a.stronger_eq(m) && b.stronger_eq(m), "{a} {b} -> {m}");
            for &c in all {
                if a.stronger_eq(c) && b.stronger_eq(c) {
                    assert!(m.stronger_eq(c), "{a} {b} -> {m}, lower bound {c}");
                }
                assert_eq!(a.combine(b).combine(c), a.combine(b.combine(c)));
            }
        }
    }
}

#[test]
fn listed_order_and_combine_examples() {
    assert!(t(P::Component, X::X, E::Eps).stronger_eq(t(P::FullNet, X::X, E::Eps)));
    // (φ_ε(x), x) determines (τ_xφ_ε, x) only up to the germ; with ε added
    // it is one of the sheaf types, so the implication holds.
    assert!(t(P::ValueComponent, X::X, E::Star).stronger_eq(t(P::GermComponent, X::X, E::Eps)));
    assert_eq!(
        t(P::ValueComponent, X::Star, E::Star).combine(t(P::Star, X::X, E::Star)),
        t(P::ValueComponent, X::X, E::Star)
    );
    assert_eq!(
        t(P::Component, X::Star, E::Eps).combine(t(P::Value, X::X, E::Star)),
        t(P::FullNet, X::X, E::Eps)
    );
}

#[test]
fn derivative_transforms() {
    for &l in LocalityType::all() {
        assert_eq!(l.derivative_transform(DerivativeKind::Geometric), l);
        for &m in LocalityType::all() {
            if l.stronger_eq(m) {
                assert!(l
                    .derivative_transform(DerivativeKind::Componentwise)
                    .stronger_eq(m.derivative_transform(DerivativeKind::Componentwise)));
            }
        }
    }
    assert_eq!(
        t(P::ValueComponent, X::X, E::Star).derivative_transform(DerivativeKind::Componentwise),
        t(P::GermComponent, X::X, E::Star)
    );
    assert_eq!(LocalityType::STAR.derivative_transform(DerivativeKind::Componentwise), LocalityType::STAR);
}

#[test]
fn sheaf_admissible_types_are_the_ten_listed() {
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
    .map(|s| s.parse().unwrap_or_else(|e| panic!("{s}: {e}")))
    .collect();
    assert_eq!(listed.len(), 10);
    let admissible: BTreeSet<LocalityType> =
        LocalityType::all().iter().copied().filter(|l| l.admissible(Admissibility::Sheaf)).collect();
    assert_eq!(admissible, listed);
    assert!(!t(P::FullNet, X::X, E::Eps).admissible(Admissibility::Sheaf));
    assert!(t(P::Star, X::X, E::Star).admissible(Admissibility::Sigma));
    assert!(t(P::ValueComponent, X::Star, E::Star).admissible(Admissibility::Iota));
    assert!(t(P::Star, X::X, E::Eps).admissible(Admissibility::IotaTheta));
}

#[test]
fn strings_round_trip_through_serde() {
    for &l in LocalityType::all() {
        let j = serde_json::to_string(&l).unwrap();
        let back: LocalityType = serde_json::from_str(&j).unwrap();
        assert_eq!(back, l);
    }
    assert!("(psi, x)".parse::<LocalityType>().is_err());
}
