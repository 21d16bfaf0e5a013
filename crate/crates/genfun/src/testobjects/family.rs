//! Smoothing-kernel families `ε ↦ (x ↦ φ_ε(x) ∈ D)`.
//!
//! A [`Family`] is a kernel formula `K_ε(x, y)` built from scaled
//! mollifiers and wrappers (cutoffs, push-forwards, frozen kernels). All
//! formulas are generic over [`Scalar`], so mixed partial derivatives in
//! `x` and `y` come out of the same code that computes values.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mollifier::{mollifier, MAX_ORDER};
use crate::quad::clean_breaks;
use crate::scalar::{Scalar, Shape, Tps};
use crate::sheafops::DiagonalCutoff;
use crate::smooth::SmoothFn;
use crate::symexpr::Diffeo;

/// Vanishing-moment order as a function of ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `m(ε) = min(cap, ⌈log₂(1/ε)⌉ + offset)`, floored at 0.
    Log2 { offset: i32, cap: u32 },
    /// The same order for every ε.
    Fixed(u32),
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Log2 { offset: 4, cap: MAX_ORDER as u32 }
    }
}

impl Schedule {
    pub fn order(&self, eps: f64) -> usize {
        match *self {
            Schedule::Log2 { offset, cap } => {
                let k = (-eps.log2() - 1e-9).ceil() as i64 + offset as i64;
                k.clamp(0, cap.min(MAX_ORDER as u32) as i64) as usize
            }
            Schedule::Fixed(m) => (m as usize).min(MAX_ORDER),
        }
    }

    pub fn cap(&self) -> u32 {
        match *self {
            Schedule::Log2 { cap, .. } => cap,
            Schedule::Fixed(m) => m,
        }
    }
}

/// Kernel formula of a family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `a(x) · (εs)⁻¹ ψ_{m(ε)}((y - x)/(εs))`.
    Atom { schedule: Schedule, dilation: f64, coef: Option<SmoothFn> },
    /// `ε^q · Σ c_i K_i`.
    Sum { eps_power: f64, terms: Vec<(f64, Arc<Family>)> },
    /// `ρ_V(x)(y) · K(x, y)`.
    Cutoff { cutoff: DiagonalCutoff, inner: Arc<Family> },
    /// Push-forward along `map`: `K(ν x', ν y') · |ν'(y')|`, `ν = map⁻¹`.
    Push { map: Diffeo, inner: Arc<Family> },
    /// A kernel constant in the base point: `w(y) · ∂_x^order K_{ε0}(x0, y)`.
    /// Missing `x0`/`eps0` mean the ambient ones.
    Frozen {
        inner: Arc<Family>,
        x0: Option<f64>,
        eps0: Option<f64>,
        x_order: u32,
        weight: Option<SmoothFn>,
    },
    /// `(∂_x + ∂_y) K`, the infinitesimal transport of the kernel.
    Lie(Arc<Family>),
}

impl Family {
    pub fn atom(schedule: Schedule, dilation: f64) -> Family {
        Family::Atom { schedule, dilation, coef: None }
    }

    pub fn kernel<S: Scalar>(&self, eps: f64, x: &S, y: &S) -> S {
        match self {
            Family::Atom { schedule, dilation, coef } => {
                let h = eps * dilation;
                let mol = mollifier(schedule.order(eps)).expect("schedule capped");
                let t = (y.clone() - x.clone()) * (1.0 / h);
                let k = mol.eval(&t) * (1.0 / h);
                match coef {
                    Some(a) => k * a.eval(x),
                    None => k,
                }
            }
            Family::Sum { eps_power, terms } => {
                let mut acc = x.cst(0.0);
                for (c, f) in terms {
                    acc = acc + f.kernel(eps, x, y) * *c;
                }
                if *eps_power != 0.0 {
                    acc * eps.powf(*eps_power)
                } else {
                    acc
                }
            }
            Family::Cutoff { cutoff, inner } => cutoff.rho(x, y) * inner.kernel(eps, x, y),
            Family::Push { map, inner } => {
                let xi = map.inverse.eval(x);
                let yi = map.inverse.eval(y);
                let jac = map.inverse_derivative().eval(y).abs();
                inner.kernel(eps, &xi, &yi) * jac
            }
            Family::Frozen { inner, x0, eps0, x_order, weight } => {
                let e = eps0.unwrap_or(eps);
                let w = weight.as_ref().map(|w| w.eval(y));
                let k = match (x0, x_order) {
                    (None, _) => inner.kernel(e, x, y),
                    (Some(p), 0) => inner.kernel(e, &x.cst(*p), y),
                    (Some(p), &n) => {
                        let yt = y.lift();
                        let shape = yt.shape().extended(n as u8);
                        let yt = yt.embed(&shape);
                        let xt = Tps::var(&shape, shape.nvars() - 1, *p);
                        let k = inner.kernel(e, &xt, &yt);
                        let c = k.last_var_coeff(n as u8) * crate::scalar::factorial(n as usize);
                        S::lower(&c)
                    }
                };
                match w {
                    Some(w) => k * w,
                    None => k,
                }
            }
            Family::Lie(inner) => {
                let (xt, yt) = (x.lift(), y.lift());
                let shape = common_shape(&xt, &yt).extended(1);
                let z = Tps::var(&shape, shape.nvars() - 1, 0.0);
                let xs = xt.embed(&shape) + z.clone();
                let ys = yt.embed(&shape) + z;
                let k = inner.kernel(eps, &xs, &ys);
                S::lower(&k.last_var_coeff(1))
            }
        }
    }

    /// Plain kernel value.
    pub fn value(&self, eps: f64, x: f64, y: f64) -> f64 {
        self.kernel(eps, &x, &y)
    }

    /// Interval containing the support of `y ↦ K_ε(x, y)`, with interior
    /// points where the integrand changes character (centres, support ends,
    /// cutoff transitions), all sorted.
    pub fn breakpoints(&self, eps: f64, x: f64) -> Vec<f64> {
        let mut pts = Vec::new();
        self.collect_breaks(eps, x, &mut pts);
        let lo = pts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = pts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        clean_breaks(pts, lo, hi)
    }

    pub fn support(&self, eps: f64, x: f64) -> (f64, f64) {
        let b = self.breakpoints(eps, x);
        (b[0], b[b.len() - 1])
    }

    fn collect_breaks(&self, eps: f64, x: f64, out: &mut Vec<f64>) {
        match self {
            Family::Atom { dilation, .. } => {
                let h = eps * dilation;
                out.extend([x - h, x, x + h]);
            }
            Family::Sum { terms, .. } => {
                for (_, f) in terms {
                    f.collect_breaks(eps, x, out);
                }
            }
            Family::Cutoff { cutoff, inner } => {
                let mut own = Vec::new();
                inner.collect_breaks(eps, x, &mut own);
                let (ilo, ihi) = own.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(*p), b.max(*p)));
                let r = cutoff.max_radius(x);
                let (lo, hi) = (x - r, x + r);
                own.retain(|p| *p > lo && *p < hi);
                own.extend(cutoff.transitions(x).into_iter().filter(|p| *p >= lo.max(ilo) && *p <= hi.min(ihi)));
                out.extend(own);
            }
            Family::Push { map, inner } => {
                let mut own = Vec::new();
                inner.collect_breaks(eps, map.inverse.value(x), &mut own);
                out.extend(own.into_iter().map(|p| map.forward.value(p)));
            }
            Family::Frozen { inner, x0, eps0, .. } => {
                inner.collect_breaks(eps0.unwrap_or(eps), x0.unwrap_or(x), out);
            }
            Family::Lie(inner) => inner.collect_breaks(eps, x, out),
        }
    }

    /// Whether the kernel does not depend on the base point except through
    /// translation (so `(∂_x + ∂_y) K = 0`).
    pub fn is_translation_invariant(&self) -> bool {
        match self {
            Family::Atom { coef, .. } => coef.is_none(),
            Family::Sum { terms, .. } => terms.iter().all(|(_, f)| f.is_translation_invariant()),
            _ => false,
        }
    }
}

fn common_shape(a: &Tps, b: &Tps) -> Shape {
    if a.shape().is_empty() {
        b.shape().clone()
    } else {
        a.shape().clone()
    }
}

/// Whether a family approximates the identity or zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Test,
    Zero,
}

/// A named test object or 0-test object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestObjectFamily {
    pub id: String,
    pub kind: FamilyKind,
    pub family: Arc<Family>,
    /// Seed of the smooth modulation, when one was drawn.
    pub modulation_seed: Option<u64>,
}

/// A 0-test object; kept as a separate name for signatures that want one.
pub type ZeroTestObjectFamily = TestObjectFamily;

/// Bounded smooth modulation `a·sin(b x + c)` drawn from a seed.
pub fn modulation(seed: u64) -> SmoothFn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: f64 = rng.gen_range(0.2..0.5);
    let b: f64 = rng.gen_range(0.5..2.0);
    let c: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    SmoothFn::c(a) * (SmoothFn::c(b) * SmoothFn::x() + SmoothFn::c(c)).sin()
}

impl TestObjectFamily {
    fn new(id: impl Into<String>, kind: FamilyKind, family: Family) -> Self {
        TestObjectFamily { id: id.into(), kind, family: Arc::new(family), modulation_seed: None }
    }

    /// Translation-invariant family `ε⁻¹ ψ_{m(ε)}((y-x)/ε)`.
    pub fn base(schedule: Schedule) -> Self {
        Self::new("base", FamilyKind::Test, Family::atom(schedule, 1.0))
    }

    /// Translation-invariant family with support radius `s·ε`.
    pub fn dilated(schedule: Schedule, s: f64) -> Self {
        Self::new(format!("dilated({s})"), FamilyKind::Test, Family::atom(schedule, s))
    }

    /// `φ + g(x)·(φ^{(1/2)} - φ)` with a seeded bounded modulation `g`.
    pub fn modulated(schedule: Schedule, seed: u64) -> Self {
        let g = modulation(seed);
        let fam = Family::Sum {
            eps_power: 0.0,
            terms: vec![
                (1.0, Arc::new(Family::atom(schedule, 1.0))),
                (1.0, Arc::new(Family::Atom { schedule, dilation: 0.5, coef: Some(g.clone()) })),
                (-1.0, Arc::new(Family::Atom { schedule, dilation: 1.0, coef: Some(g) })),
            ],
        };
        let mut t = Self::new(format!("modulated({seed})"), FamilyKind::Test, fam);
        t.modulation_seed = Some(seed);
        t
    }

    /// Frozen-order family `m(ε) ≡ m`.
    pub fn fixed_order(m: u32) -> Self {
        Self::new(format!("fixed({m})"), FamilyKind::Test, Family::atom(Schedule::Fixed(m), 1.0))
    }

    /// `ε^q (a - b)`, a 0-test object when both are test objects.
    pub fn difference(a: &TestObjectFamily, b: &TestObjectFamily, q: f64) -> Self {
        let fam = Family::Sum {
            eps_power: q,
            terms: vec![(1.0, a.family.clone()), (-1.0, b.family.clone())],
        };
        Self::new(format!("eps^{q}*({} - {})", a.id, b.id), FamilyKind::Zero, fam)
    }

    /// `a + s·z`: a test object shifted along a 0-test object.
    pub fn shifted(a: &TestObjectFamily, z: &TestObjectFamily, s: f64) -> Self {
        let fam = Family::Sum {
            eps_power: 0.0,
            terms: vec![(1.0, a.family.clone()), (s, z.family.clone())],
        };
        Self::new(format!("{} + {s}*[{}]", a.id, z.id), a.kind, fam)
    }

    /// `g(x)·(φ^{(s)} - φ)` for a seeded modulation `g`.
    pub fn modulated_zero(schedule: Schedule, s: f64, seed: u64) -> Self {
        let g = modulation(seed);
        let fam = Family::Sum {
            eps_power: 0.0,
            terms: vec![
                (1.0, Arc::new(Family::Atom { schedule, dilation: s, coef: Some(g.clone()) })),
                (-1.0, Arc::new(Family::Atom { schedule, dilation: 1.0, coef: Some(g) })),
            ],
        };
        let mut t = Self::new(format!("g{seed}*(dilated({s}) - base)"), FamilyKind::Zero, fam);
        t.modulation_seed = Some(seed);
        t
    }

    pub fn with_family(&self, id: impl Into<String>, family: Family) -> Self {
        TestObjectFamily {
            id: id.into(),
            kind: self.kind,
            family: Arc::new(family),
            modulation_seed: self.modulation_seed,
        }
    }

    /// The schedule of the first mollifier atom found in the formula.
    pub fn schedule(&self) -> Option<Schedule> {
        fn find(f: &Family) -> Option<Schedule> {
            match f {
                Family::Atom { schedule, .. } => Some(*schedule),
                Family::Sum { terms, .. } => terms.iter().find_map(|(_, t)| find(t)),
                Family::Cutoff { inner, .. }
                | Family::Push { inner, .. }
                | Family::Frozen { inner, .. }
                | Family::Lie(inner) => find(inner),
            }
        }
        find(&self.family)
    }

    /// Compact JSON description: schedule, cap and modulation seed.
    pub fn describe(&self) -> serde_json::Value {
        let sched = self.schedule();
        serde_json::json!({
            "id": self.id,
            "kind": self.kind,
            "schedule": sched,
            "cap": sched.map(|s| s.cap()),
            "modulation_seed": self.modulation_seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_is_offset_log_staircase() {
        let s = Schedule::default();
        assert_eq!(s.order(1.0 / 16.0), 8);
        assert_eq!(s.order(0.05), 9);
        assert_eq!(s.order(2f64.powi(-19)), 23);
        assert_eq!(s.order(2f64.powi(-30)), 24);
        assert_eq!(Schedule::Fixed(0).order(1e-6), 0);
    }

    #[test]
    fn kernel_jets_agree_with_plain_values() {
        let fam = TestObjectFamily::modulated(Schedule::default(), 7);
        let (eps, x, y) = (0.1, 0.3, 0.33);
        let s = Shape::new(&[1, 1]);
        let xt = Tps::var(&s, 0, x);
        let yt = Tps::var(&s, 1, y);
        let k = fam.family.kernel(eps, &xt, &yt);
        assert!((k.re() - fam.family.value(eps, x, y)).abs() < 1e-12);
        let h = 1e-6;
        let dx = (fam.family.value(eps, x + h, y) - fam.family.value(eps, x - h, y)) / (2.0 * h);
        assert!((k.derivative(&[1, 0]) - dx).abs() < 1e-4 * (1.0 + dx.abs()));
    }

    #[test]
    fn lie_kernel_vanishes_for_translation_invariant_families() {
        let fam = Family::Lie(Arc::new(Family::atom(Schedule::default(), 1.0)));
        for &y in &[0.01, 0.04, -0.03] {
            assert!(fam.value(0.05, 0.0, y).abs() < 1e-9);
        }
    }
}
