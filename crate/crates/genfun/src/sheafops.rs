//! Diagonal cutoffs, restriction, partitions of unity and gluing.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::locality::{Admissibility, XComponent};
use crate::scalar::Scalar;
use crate::smooth::SmoothFn;
use crate::symexpr::pairing::pair;
use crate::symexpr::{Distribution, GlueTerm, Representative, StarTerm, SymError};
use crate::testobjects::{Family, TestObjectFamily};
use crate::Interval;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SheafError {
    #[error("cover must be a nonempty chain of overlapping open intervals: {0}")]
    BadCover(String),
    #[error("part {index}: {reason}")]
    BadPart { index: usize, reason: String },
    #[error("({lo}, {hi}) is not contained in the domain ({dlo}, {dhi})")]
    NotSubset { lo: f64, hi: f64, dlo: f64, dhi: f64 },
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// Cutoff `ρ_V(x)(y) = Σ_j χ_j(x) f((y - x)/r_j)` for an interval `V = (a, b)`.
///
/// The pieces are `V_j = {x : s(x) ∈ (j-1, j+1)}`, `j ∈ ℤ`, for the scaled
/// logistic coordinate `s(x) = ln((x-a)/(b-x)) / w`; `χ_j` is the normalized bump in
/// `s - j` and `r_j` is half the distance from `V_j` to the boundary, so
/// `closure(V_j) + [-r_j, r_j] ⊂ V`. `f ≡ 1` on `|t| <= 1/2` and `f = 0`
/// on `|t| >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalCutoff {
    pub lo: f64,
    pub hi: f64,
}

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`.
pub fn smooth_step<S: Scalar>(u: &S) -> S {
    let a = u.flat(0);
    let b = (u.cst(1.0) - u.clone()).flat(0);
    let d = a.clone() + b;
    a.div(&d)
}

/// Plateau profile: 1 on `|t| <= 1/2`, 0 on `|t| >= 1`.
pub fn plateau<S: Scalar>(t: &S) -> S {
    let r = t.re().abs();
    if r <= 0.5 {
        return t.cst(1.0);
    }
    if r >= 1.0 {
        return t.cst(0.0);
    }
    let a = t.abs();
    smooth_step(&(a * -2.0 + 2.0))
}

fn bump<S: Scalar>(u: &S) -> S {
    (u.cst(1.0) - u.clone() * u.clone()).flat(0)
}

/// Width of one piece in the logistic coordinate `ln((x - lo)/(hi - x))`.
/// Narrow pieces give wide plateaus around the diagonal.
const PIECE_WIDTH: f64 = 0.25;

impl DiagonalCutoff {
    pub fn new(lo: f64, hi: f64) -> DiagonalCutoff {
        assert!(lo < hi, "cutoff interval must be nonempty");
        DiagonalCutoff { lo, hi }
    }

    fn coord(&self, x: f64) -> f64 {
        ((x - self.lo) / (self.hi - x)).ln() / PIECE_WIDTH
    }

    fn coord_s<S: Scalar>(&self, x: &S) -> S {
        ((x.clone() - self.lo).div(&(x.cst(self.hi) - x.clone()))).ln() * (1.0 / PIECE_WIDTH)
    }

    fn point(&self, s: f64) -> f64 {
        self.lo + (self.hi - self.lo) / (1.0 + (-s * PIECE_WIDTH).exp())
    }

    /// Radius attached to piece `j`.
    pub fn radius(&self, j: i64) -> f64 {
        let a = self.point((j - 1) as f64) - self.lo;
        let b = self.hi - self.point((j + 1) as f64);
        0.5 * a.min(b)
    }

    /// Pieces whose closure contains `x`.
    pub fn active(&self, x: f64) -> Vec<i64> {
        if x <= self.lo || x >= self.hi {
            return vec![];
        }
        let s = self.coord(x);
        ((s - 1.0).ceil() as i64..=(s + 1.0).floor() as i64).collect()
    }

    /// Weight `χ_j(x)`.
    pub fn chi<S: Scalar>(&self, j: i64, x: &S) -> S {
        let s = self.coord_s(x);
        let num = bump(&(s.clone() - j as f64));
        let mut den = x.cst(0.0);
        for k in self.active(x.re()) {
            den = den + bump(&(s.clone() - k as f64));
        }
        num.div(&den)
    }

    pub fn rho<S: Scalar>(&self, x: &S, y: &S) -> S {
        let active = self.active(x.re());
        let mut plateaus = Vec::with_capacity(active.len());
        for &j in &active {
            let f = plateau(&((y.clone() - x.clone()) * (1.0 / self.radius(j))));
            if f.re() != 0.0 || f.lift().max_abs() != 0.0 {
                plateaus.push((j, f));
            }
        }
        if plateaus.is_empty() {
            return x.cst(0.0);
        }
        // Σ_j χ_j(x) p_j with the normalisation of the χ_j shared.
        let s = self.coord_s(x);
        let mut den = x.cst(0.0);
        let mut num = x.cst(0.0);
        for &k in &active {
            let b = bump(&(s.clone() - k as f64));
            if let Some((_, f)) = plateaus.iter().find(|(j, _)| *j == k) {
                num = num + b.clone() * f.clone();
            }
            den = den + b;
        }
        num.div(&den)
    }

    /// `ρ_V(x)(y) = 1` (with all derivatives in `(x, y)` vanishing) whenever
    /// `|y - x| < certified_radius(x)`.
    pub fn certified_radius(&self, x: f64) -> f64 {
        self.active(x).into_iter().map(|j| 0.5 * self.radius(j)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self, x: f64) -> f64 {
        self.active(x).into_iter().map(|j| self.radius(j)).fold(0.0, f64::max)
    }

    /// Points where `y ↦ ρ_V(x)(y)` leaves its plateau or reaches zero.
    pub fn transitions(&self, x: f64) -> Vec<f64> {
        let mut v = Vec::new();
        for j in self.active(x) {
            let r = self.radius(j);
            v.extend([x - r, x - 0.5 * r, x + 0.5 * r, x + r]);
        }
        v
    }
}


/// Cutoff attached to an open interval.
pub fn make_diagonal_cutoff(v: Interval) -> DiagonalCutoff {
    DiagonalCutoff::new(v.lo, v.hi)
}

/// `M(φ) = ∫ y φ(y) dy` for the kernel `K_ε(x, ·)`.
pub fn moment_map(fam: &Family, eps: f64, x: f64) -> f64 {
    pair(&Distribution::smooth(SmoothFn::x()), fam, 0, eps, x).value
}

/// Smooth partition of unity subordinate to a chain of open intervals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    pub cover: Vec<Interval>,
    pub weights: Vec<SmoothFn>,
    /// Closed intervals outside which each weight vanishes (clipped to the union).
    pub supports: Vec<(f64, f64)>,
}

fn positive_part_bump(p: f64, q: f64) -> SmoothFn {
    // exp(-1/((x-p)(q-x))) on (p, q)
    SmoothFn::Flat {
        order: 0,
        arg: Box::new((SmoothFn::x() - SmoothFn::c(p)) * (SmoothFn::c(q) - SmoothFn::x())),
    }
}

/// Smooth step in `u`: 0 for `u <= 0`, 1 for `u >= 1`.
fn step_fn(u: SmoothFn) -> SmoothFn {
    let a = SmoothFn::Flat { order: 0, arg: Box::new(u.clone()) };
    let b = SmoothFn::Flat { order: 0, arg: Box::new(SmoothFn::c(1.0) - u) };
    a.clone().div(a + b)
}

impl PartitionOfUnity {
    /// Bump quotients on shrunk intervals: interior endpoints move inwards by
    /// a quarter of the overlap, endpoints on the boundary of the union move
    /// outwards so the weights do not vanish there.
    pub fn new(cover: &[Interval]) -> Result<PartitionOfUnity, SheafError> {
        if cover.is_empty() {
            return Err(SheafError::BadCover("empty".into()));
        }
        let mut cover = cover.to_vec();
        cover.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
        for w in cover.windows(2) {
            if !(w[1].lo < w[0].hi && w[1].hi > w[0].hi && w[1].lo > w[0].lo) {
                return Err(SheafError::BadCover(format!(
                    "({}, {}) and ({}, {}) do not overlap as a chain",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        let n = cover.len();
        let union = Interval::new(cover[0].lo, cover[n - 1].hi);
        let mut supports = Vec::with_capacity(n);
        for i in 0..n {
            let lo = if i == 0 {
                union.lo - union.width()
            } else {
                cover[i].lo + 0.25 * (cover[i - 1].hi - cover[i].lo)
            };
            let hi = if i == n - 1 {
                union.hi + union.width()
            } else {
                cover[i].hi - 0.25 * (cover[i].hi - cover[i + 1].lo)
            };
            supports.push((lo, hi));
        }
        let bumps: Vec<SmoothFn> = supports.iter().map(|&(p, q)| positive_part_bump(p, q)).collect();
        let total = bumps.iter().cloned().reduce(|a, b| a + b).unwrap();
        let weights = if n == 1 {
            vec![SmoothFn::c(1.0)]
        } else {
            bumps.into_iter().map(|b| b.div(total.clone())).collect()
        };
        let supports = supports.into_iter().map(|(p, q)| (p.max(union.lo), q.min(union.hi))).collect();
        Ok(PartitionOfUnity { cover, weights, supports })
    }

    pub fn union(&self) -> Interval {
        Interval::new(self.cover[0].lo, self.cover[self.cover.len() - 1].hi)
    }

    /// `max |Σ χ_i - 1|` on a uniform sample of the union.
    pub fn sum_defect(&self, samples: usize) -> f64 {
        let u = self.union();
        (1..samples)
            .map(|k| {
                let x = u.lo + u.width() * k as f64 / samples as f64;
                (self.weights.iter().map(|w| w.value(x)).sum::<f64>() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn check_admissible(r: &Representative, index: usize) -> Result<(), SheafError> {
    if !r.locality.admissible(Admissibility::Sheaf) {
        return Err(SheafError::BadPart {
            index,
            reason: format!("locality {} is not sheaf-admissible", r.locality),
        });
    }
    Ok(())
}

/// `R|_V(ψ) = R(ρ_V ψ)` on `V`.
pub fn restrict(r: &Representative, v: Interval) -> Result<Representative, SheafError> {
    check_admissible(r, 0)?;
    if !r.domain.contains_interval(&v) {
        return Err(SheafError::NotSubset { lo: v.lo, hi: v.hi, dlo: r.domain.lo, dhi: r.domain.hi });
    }
    Ok(r.with_cutoff(make_diagonal_cutoff(v), v))
}

/// `r_V φ = ρ_V · φ` restricted to `V`.
pub fn restrict_testobject(phi: &TestObjectFamily, v: Interval) -> TestObjectFamily {
    let fam = Family::Cutoff { cutoff: make_diagonal_cutoff(v), inner: phi.family.clone() };
    phi.with_family(format!("restrict({}, ({}, {}))", phi.id, v.lo, v.hi), fam)
}

/// Sampling parameters of the finite-resolution `∼_W` check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceCheck {
    pub samples: usize,
    /// Decreasing ε values; agreement is required on the last `tail` of them.
    pub eps: Vec<f64>,
    pub tail: usize,
    /// Offsets `x' - x` probed around each sample.
    pub radius: f64,
    pub tol: f64,
}

impl Default for EquivalenceCheck {
    fn default() -> Self {
        EquivalenceCheck {
            samples: 21,
            eps: (4..=12).map(|k| 2f64.powi(-k)).collect(),
            tail: 4,
            radius: 1e-3,
            tol: 1e-12,
        }
    }
}

/// Whether `φ ∼_W ψ` at the given resolution: for every sample `x ∈ W`, the
/// kernels agree within `tol` near `x` for all sufficiently small sampled ε.
pub fn equivalent_on(
    phi: &TestObjectFamily,
    psi: &TestObjectFamily,
    w: Interval,
    check: &EquivalenceCheck,
) -> bool {
    let tail = &check.eps[check.eps.len().saturating_sub(check.tail)..];
    for k in 0..check.samples {
        let x = w.lo + w.width() * (k as f64 + 0.5) / check.samples as f64;
        for &eps in tail {
            for xp in [x - check.radius, x, x + check.radius] {
                let mut ys = phi.family.breakpoints(eps, xp);
                ys.extend(psi.family.breakpoints(eps, xp));
                let ys = crate::quad::clean_breaks(
                    ys.clone(),
                    ys.iter().cloned().fold(f64::INFINITY, f64::min),
                    ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                );
                for (y, _) in crate::quad::composite_nodes(&ys) {
                    let d = phi.family.value(eps, xp, y) - psi.family.value(eps, xp, y);
                    if d.abs() >= check.tol {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// `R(φ)_ε(x) = Σ_i χ_i(x) R_i(ρ_i φ)_ε(x)`.
pub fn glue(parts: &[Representative], pou: &PartitionOfUnity) -> Result<Representative, SheafError> {
    if parts.len() != pou.cover.len() {
        return Err(SheafError::BadCover(format!(
            "{} parts for {} charts",
            parts.len(),
            pou.cover.len()
        )));
    }
    let mut terms = Vec::with_capacity(parts.len());
    for (i, (p, (chart, w))) in parts.iter().zip(pou.cover.iter().zip(&pou.weights)).enumerate() {
        check_admissible(p, i)?;
        if p.domain != *chart {
            return Err(SheafError::BadPart { index: i, reason: "domain differs from its chart".into() });
        }
        terms.push(GlueTerm { weight: w.clone(), part: Arc::new(p.clone()), cutoff: make_diagonal_cutoff(*chart) });
    }
    Ok(Representative::glued(terms, pou.union()))
}

/// Weight `q ≡ 1` on a neighbourhood of `supp χ_i`, supported in chart `i`.
fn plateau_weight(pou: &PartitionOfUnity, i: usize) -> SmoothFn {
    let chart = pou.cover[i];
    let (slo, shi) = pou.supports[i];
    let union = pou.union();
    let mut q = SmoothFn::c(1.0);
    if chart.lo > union.lo {
        let a = chart.lo + 0.25 * (slo - chart.lo);
        let b = chart.lo + 0.75 * (slo - chart.lo);
        q = q * step_fn((SmoothFn::x() - SmoothFn::c(a)) * SmoothFn::c(1.0 / (b - a)));
    }
    if chart.hi < union.hi {
        let a = chart.hi - 0.25 * (chart.hi - shi);
        let b = chart.hi - 0.75 * (chart.hi - shi);
        q = q * step_fn((SmoothFn::c(a) - SmoothFn::x()) * SmoothFn::c(1.0 / (a - b)));
    }
    q
}

/// Moment-map gluing for parts without x-dependence:
/// `Σ_i χ_i(M(φ_ε(x))) · R_i(q_i φ_ε(x))_ε(x_i)`.
/// Anchors default to chart midpoints.
pub fn glue_star_x(
    parts: &[Representative],
    pou: &PartitionOfUnity,
    anchors: Option<&[f64]>,
) -> Result<Representative, SheafError> {
    if parts.len() != pou.cover.len() {
        return Err(SheafError::BadCover(format!(
            "{} parts for {} charts",
            parts.len(),
            pou.cover.len()
        )));
    }
    let mut terms = Vec::with_capacity(parts.len());
    for (i, p) in parts.iter().enumerate() {
        check_admissible(p, i)?;
        if p.locality.x != XComponent::Star {
            return Err(SheafError::BadPart { index: i, reason: "part depends on x".into() });
        }
        let chart = pou.cover[i];
        let anchor = anchors.map(|a| a[i]).unwrap_or_else(|| chart.mid());
        if !p.domain.contains(anchor) {
            return Err(SheafError::BadPart { index: i, reason: format!("anchor {anchor} outside part") });
        }
        terms.push(StarTerm {
            chi: pou.weights[i].clone(),
            q: plateau_weight(pou, i),
            part: Arc::new(p.clone()),
            anchor,
        });
    }
    Ok(Representative::glued_star_x(terms, pou.union()))
}
