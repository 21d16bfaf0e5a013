//! Pairings `∂_x^j ⟨u, K_ε(x, ·)⟩` of distributions with kernel families.
//!
//! x-derivatives are moved onto the distribution and the transport
//! derivative `D = ∂_x + ∂_y`:
//! `∂_x^j ⟨u, K(x,·)⟩ = Σ_i C(j,i) ⟨u^{(j-i)}, D^i K(x,·)⟩`.
//! For translation-invariant atoms `D K = 0`, so only the `i = 0` term
//! survives and no large cancelling terms are ever formed.

use super::distribution::{Distribution, DistributionPrim};
use crate::quad::{clean_breaks, composite_nodes};
use crate::scalar::{Scalar, Shape, Tps};
use crate::smooth::SmoothFn;
use crate::testobjects::family::Family;
use crate::testobjects::mollifier::{mollifier, MomentMollifier};

/// Pairing value with a bound on the magnitude of the summed terms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Paired {
    pub value: f64,
    pub magnitude: f64,
}

impl Paired {
    fn add_scaled(&mut self, c: f64, o: Paired) {
        self.value += c * o.value;
        self.magnitude += c.abs() * o.magnitude;
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64)
}

/// `∂_x^j ⟨u, K_ε(x, ·)⟩`.
pub fn pair(u: &Distribution, fam: &Family, j: u32, eps: f64, x: f64) -> Paired {
    match fam {
        Family::Atom { schedule, dilation, coef } => {
            let h = eps * dilation;
            let mol = mollifier(schedule.order(eps)).expect("schedule is capped");
            match coef {
                None => base(&u.derivative_n(j), mol, h, x),
                Some(a) => {
                    let s = Shape::new(&[j as u8]);
                    let jet = a.eval(&Tps::var(&s, 0, x));
                    let mut out = Paired::default();
                    let mut ud = u.clone();
                    let mut parts = Vec::with_capacity(j as usize + 1);
                    for _ in 0..=j {
                        parts.push(base(&ud, mol, h, x));
                        ud = ud.derivative();
                    }
                    for i in 0..=j {
                        let ai = jet.derivative(&[i as u8]);
                        out.add_scaled(binomial(j, i) * ai, parts[(j - i) as usize]);
                    }
                    out
                }
            }
        }
        Family::Sum { eps_power, terms } => {
            let mut out = Paired::default();
            for (c, f) in terms {
                out.add_scaled(*c, pair(u, f, j, eps, x));
            }
            let s = if *eps_power != 0.0 { eps.powf(*eps_power) } else { 1.0 };
            Paired { value: out.value * s, magnitude: out.magnitude * s }
        }
        Family::Cutoff { cutoff, inner } => {
            let r = cutoff.certified_radius(x);
            let (lo, hi) = inner.support(eps, x);
            if lo > x - r && hi < x + r {
                pair(u, inner, j, eps, x)
            } else if lie_reduced(inner).is_some() {
                // ⟨u, ρK⟩ = ⟨u, K⟩ - ⟨u, (1 - ρ)K⟩; the second kernel vanishes
                // on the plateau |y - x| < r.
                let rest = Family::Sum {
                    eps_power: 0.0,
                    terms: vec![(1.0, inner.clone()), (-1.0, std::sync::Arc::new(fam.clone()))],
                };
                let mut breaks = fam.breakpoints(eps, x);
                breaks.extend(inner.breakpoints(eps, x));
                let pieces: Vec<Vec<f64>> = [(lo, x - r), (x + r, hi)]
                    .into_iter()
                    .filter(|(a, b)| a < b)
                    .map(|(a, b)| clean_breaks(breaks.clone(), a, b))
                    .collect();
                let mut out = pair(u, inner, j, eps, x);
                out.add_scaled(-1.0, general_on(u, &rest, j, eps, x, &pieces));
                out
            } else {
                general(u, fam, j, eps, x)
            }
        }
        Family::Lie(inner) => match lie_reduced(inner) {
            Some(f) => pair(u, &f, j, eps, x),
            None => general(u, fam, j, eps, x),
        },
        _ => general(u, fam, j, eps, x),
    }
}

/// `D K` in closed form when the kernel is built from atoms only.
fn lie_reduced(f: &Family) -> Option<Family> {
    match f {
        Family::Atom { schedule, dilation, coef } => Some(match coef {
            None => Family::Sum { eps_power: 0.0, terms: vec![] },
            Some(a) => Family::Atom { schedule: *schedule, dilation: *dilation, coef: Some(a.derivative()) },
        }),
        Family::Sum { eps_power, terms } => {
            let mut out = Vec::with_capacity(terms.len());
            for (c, t) in terms {
                out.push((*c, std::sync::Arc::new(lie_reduced(t)?)));
            }
            Some(Family::Sum { eps_power: *eps_power, terms: out })
        }
        _ => None,
    }
}

/// `⟨v, h⁻¹ψ((· - x)/h)⟩` for a translation-invariant atom.
fn base(v: &Distribution, mol: &MomentMollifier, h: f64, x: f64) -> Paired {
    let mut out = Paired::default();
    for (c, p) in &v.terms {
        let r = match p {
            DistributionPrim::Smooth { f } => smooth_base(f, mol, h, x),
            DistributionPrim::Heaviside { at } => {
                let value = mol.tail_mass((at - x) / h);
                Paired { value, magnitude: 1.0 }
            }
            DistributionPrim::Delta { order, at } => {
                let t = (at - x) / h;
                let k = *order;
                let value = if t.abs() >= 1.0 {
                    0.0
                } else if k == 0 {
                    mol.eval(&t) / h
                } else {
                    let s = Shape::new(&[k as u8]);
                    let d = mol.eval(&Tps::var(&s, 0, t)).derivative(&[k as u8]);
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    sign * d * h.powi(-1 - k as i32)
                };
                Paired { value, magnitude: value.abs() }
            }
        };
        out.add_scaled(*c, r);
    }
    out
}

fn smooth_base(f: &SmoothFn, mol: &MomentMollifier, h: f64, x: f64) -> Paired {
    if let SmoothFn::Const(c) = f {
        // The rule integrates ψ to 1 up to rounding.
        let s: f64 = mol.weighted_nodes().iter().map(|&(_, w)| w).sum();
        return Paired { value: c * s, magnitude: c.abs() * s.abs() };
    }
    let mut out = Paired::default();
    for &(t, w) in mol.weighted_nodes() {
        let v = w * f.value(x + h * t);
        out.value += v;
        out.magnitude += v.abs();
    }
    out
}

/// `(-1)^0 ∂_y^k D^i K(x, y)` at a single point.
fn kernel_d(fam: &Family, eps: f64, x: f64, y: f64, i: u32, k: u32) -> f64 {
    if i == 0 && k == 0 {
        return fam.value(eps, x, y);
    }
    let s = Shape::new(&[i as u8, k as u8]);
    let z = Tps::var(&s, 0, 0.0);
    let w = Tps::var(&s, 1, 0.0);
    let xs = z.clone() + x;
    let ys = z + w + y;
    fam.kernel(eps, &xs, &ys).derivative(&[i as u8, k as u8])
}

/// Quadrature over the kernel's breakpoints.
fn general(u: &Distribution, fam: &Family, j: u32, eps: f64, x: f64) -> Paired {
    general_on(u, fam, j, eps, x, &[fam.breakpoints(eps, x)])
}

/// Quadrature over disjoint pieces, each a sorted list of breakpoints,
/// outside of which the kernel vanishes.
fn general_on(u: &Distribution, fam: &Family, j: u32, eps: f64, x: f64, pieces: &[Vec<f64>]) -> Paired {
    let mut out = Paired::default();
    let mut ud = u.derivative_n(j);
    for i in 0..=j {
        // term C(j,i) ⟨u^{(j-i)}, D^i K⟩
        let coef = binomial(j, i);
        for (c, p) in &ud.terms {
            let mut r = Paired::default();
            for breaks in pieces {
                let (lo, hi) = (breaks[0], breaks[breaks.len() - 1]);
                let nodes = match p {
                    DistributionPrim::Smooth { .. } => composite_nodes(breaks),
                    DistributionPrim::Heaviside { at } if *at < hi => {
                        composite_nodes(&clean_breaks(breaks.clone(), lo.max(*at), hi))
                    }
                    _ => vec![],
                };
                for (y, w) in nodes {
                    let f = match p {
                        DistributionPrim::Smooth { f } => f.value(y),
                        _ => 1.0,
                    };
                    let v = w * f * kernel_d(fam, eps, x, y, i, 0);
                    r.value += v;
                    r.magnitude += v.abs();
                }
                if let DistributionPrim::Delta { order, at } = p {
                    if *at > lo && *at < hi {
                        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                        let v = sign * kernel_d(fam, eps, x, *at, i, *order);
                        r.value += v;
                        r.magnitude += v.abs();
                    }
                }
            }
            out.add_scaled(coef * c, r);
        }
        if i < j {
            // next i uses one fewer distributional derivative
            ud = u.derivative_n(j - i - 1);
        }
    }
    out
}
