//! Generalized points and numbers, point values and witness points.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::locality::{EpsComponent, LocalityType, PhiComponent, XComponent};
use crate::quad::composite_nodes;
use crate::quotient::{
    decide_source, Battery, NetSource, QuotientConfig, QuotientError, Seminorm, VerdictReport,
};
use crate::scalar::Scalar;
use crate::smooth::SmoothFn;
use crate::symexpr::{Combo, EvalError, Representative, Val};
use crate::testobjects::{Family, TestObjectFamily};
use crate::Interval;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointError {
    #[error("point is not compactly supported in ({lo}, {hi})")]
    NotCompactlySupported { lo: f64, hi: f64 },
    #[error("point domain ({}, {}) differs from the representative's ({}, {})", a.lo, a.hi, b.lo, b.hi)]
    DomainMismatch { a: Interval, b: Interval },
    #[error(transparent)]
    Quotient(#[from] QuotientError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointKind {
    Const { x: f64 },
    /// `X_ε = x_k` for `ε_k <= ε < ε_{k-1}`; steps sorted by decreasing `ε_k`.
    Staircase { steps: Vec<(f64, f64)> },
    /// `X_ε = f(ε)`.
    EpsPath { f: SmoothFn },
    /// `X(φ)_ε = x_k` for the largest `k` with `N(φ_ε(anchor)) >= level_k`,
    /// `N` the L² mass; levels increasing.
    PhiEps { anchor: f64, levels: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedPoint {
    pub kind: PointKind,
    pub domain: Interval,
}

/// `∫ K_ε(x, y)² dy`.
pub fn kernel_mass(fam: &Family, eps: f64, x: f64) -> f64 {
    let b = fam.breakpoints(eps, x);
    composite_nodes(&b).into_iter().map(|(y, w)| w * fam.value(eps, x, y).powi(2)).sum()
}

impl GeneralizedPoint {
    pub fn constant(x: f64, domain: Interval) -> Self {
        GeneralizedPoint { kind: PointKind::Const { x }, domain }
    }

    pub fn staircase(steps: Vec<(f64, f64)>, domain: Interval) -> Self {
        GeneralizedPoint { kind: PointKind::Staircase { steps }, domain }
    }

    pub fn eps_path(f: SmoothFn, domain: Interval) -> Self {
        GeneralizedPoint { kind: PointKind::EpsPath { f }, domain }
    }

    /// `X(φ)_ε` for the kernel family `phi`.
    pub fn value(&self, phi: &Family, eps: f64) -> f64 {
        match &self.kind {
            PointKind::Const { x } => *x,
            PointKind::Staircase { steps } => steps
                .iter()
                .find(|(e, _)| *e <= eps)
                .or(steps.last())
                .map(|s| s.1)
                .unwrap_or(self.domain.mid()),
            PointKind::EpsPath { f } => f.value(eps),
            PointKind::PhiEps { anchor, levels } => {
                let n = kernel_mass(phi, eps, *anchor);
                levels
                    .iter()
                    .rev()
                    .find(|(l, _)| n >= *l)
                    .or(levels.first())
                    .map(|s| s.1)
                    .unwrap_or(*anchor)
            }
        }
    }

    pub fn is_eps_local(&self) -> bool {
        !matches!(self.kind, PointKind::PhiEps { .. })
    }

    pub fn locality(&self) -> LocalityType {
        match self.kind {
            PointKind::Const { .. } => LocalityType::STAR,
            PointKind::PhiEps { .. } => {
                LocalityType::canonical(PhiComponent::Component, XComponent::Star, EpsComponent::Eps)
            }
            _ => LocalityType::canonical(PhiComponent::Star, XComponent::Star, EpsComponent::Eps),
        }
    }
}

/// Scalar nets `(φ, ε) ↦ Z(φ)_ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneralizedNumber {
    Const { c: f64 },
    /// The coordinate net of a point.
    Point { point: GeneralizedPoint },
    /// `R(φ)_ε(X(φ)_ε)`.
    PointValue { r: Arc<Representative>, point: GeneralizedPoint },
    Sum { terms: Vec<(f64, Arc<GeneralizedNumber>)> },
    Product { a: Arc<GeneralizedNumber>, b: Arc<GeneralizedNumber> },
}

fn base_family(combo: &Combo) -> Family {
    Family::Sum { eps_power: 0.0, terms: combo.terms.iter().map(|(c, f)| (c.re(), f.clone())).collect() }
}

/// Locality of `φ ↦ R(φ)_ε(X_ε)` when `R` is `l`-local and `X` depends on ε only.
fn after_point_evaluation(l: LocalityType) -> LocalityType {
    let phi = match l.phi {
        PhiComponent::FullNet | PhiComponent::Germ | PhiComponent::Value => PhiComponent::FullNet,
        PhiComponent::Component | PhiComponent::GermComponent | PhiComponent::ValueComponent => {
            PhiComponent::Component
        }
        PhiComponent::Star => PhiComponent::Star,
    };
    LocalityType::canonical(phi, XComponent::Star, EpsComponent::Eps)
}

impl GeneralizedNumber {
    pub fn point_value(r: &Representative, point: &GeneralizedPoint) -> Self {
        GeneralizedNumber::PointValue { r: Arc::new(r.clone()), point: point.clone() }
    }

    pub fn sub(a: &GeneralizedNumber, b: &GeneralizedNumber) -> Self {
        GeneralizedNumber::Sum { terms: vec![(1.0, Arc::new(a.clone())), (-1.0, Arc::new(b.clone()))] }
    }

    pub fn locality(&self) -> LocalityType {
        match self {
            GeneralizedNumber::Const { .. } => LocalityType::STAR,
            GeneralizedNumber::Point { point } => point.locality(),
            GeneralizedNumber::PointValue { r, point } => {
                after_point_evaluation(r.locality).combine(point.locality())
            }
            GeneralizedNumber::Sum { terms } => {
                terms.iter().fold(LocalityType::STAR, |a, (_, z)| a.combine(z.locality()))
            }
            GeneralizedNumber::Product { a, b } => a.locality().combine(b.locality()),
        }
    }

    pub fn eval_combo(&self, combo: &Combo, eps: f64) -> Result<Val, EvalError> {
        Ok(match self {
            GeneralizedNumber::Const { c } => Val { v: c.lift(), m: c.abs().lift() },
            GeneralizedNumber::Point { point } => {
                let x = point.value(&base_family(combo), eps);
                Val { v: x.lift(), m: x.abs().lift() }
            }
            GeneralizedNumber::PointValue { r, point } => {
                let x = point.value(&base_family(combo), eps);
                r.eval_combo(combo, eps, x)?
            }
            GeneralizedNumber::Sum { terms } => {
                let mut v = 0.0.lift();
                let mut m = 0.0.lift();
                for (c, z) in terms {
                    let t = z.eval_combo(combo, eps)?;
                    v = v + t.v * *c;
                    m = m + t.m * c.abs();
                }
                Val { v, m }
            }
            GeneralizedNumber::Product { a, b } => {
                let (a, b) = (a.eval_combo(combo, eps)?, b.eval_combo(combo, eps)?);
                Val { v: a.v * b.v, m: a.m * b.m }
            }
        })
    }

    pub fn value(&self, phi: &TestObjectFamily, eps: f64) -> Result<f64, EvalError> {
        Ok(self.eval_combo(&Combo::single(phi.family.clone()), eps)?.v.re())
    }
}

struct NumberNet<'a>(&'a GeneralizedNumber);

impl NetSource for NumberNet<'_> {
    fn alphas(&self) -> Vec<u32> {
        vec![0]
    }

    fn features(&self) -> Vec<f64> {
        vec![]
    }

    fn eval_at(&self, _alpha: u32, combo: &Combo, eps: f64, _x: f64) -> Result<Val, QuotientError> {
        Ok(self.0.eval_combo(combo, eps)?)
    }
}

/// The same battery with the absolute value as its only seminorm.
pub fn number_config(cfg: &QuotientConfig) -> QuotientConfig {
    let mut c = cfg.clone();
    c.battery = Battery { seminorms: vec![Seminorm::abs()], ..cfg.battery.clone() };
    c
}

/// Sampled check that `X` stays in a compact subset with the given margin.
pub fn is_compactly_supported(x: &GeneralizedPoint, battery: &[TestObjectFamily], grid: &[f64], margin: f64) -> bool {
    for phi in battery {
        for &eps in grid {
            let v = x.value(&phi.family, eps);
            if !(v >= x.domain.lo + margin && v <= x.domain.hi - margin) {
                return false;
            }
        }
    }
    true
}

pub const SUPPORT_MARGIN: f64 = 1e-3;

/// `R(X)`, rejecting points that are not compactly supported.
pub fn point_eval(
    r: &Representative,
    x: &GeneralizedPoint,
    cfg: &QuotientConfig,
) -> Result<GeneralizedNumber, PointError> {
    if r.domain != x.domain {
        return Err(PointError::DomainMismatch { a: x.domain, b: r.domain });
    }
    if !is_compactly_supported(x, &cfg.battery.test_objects, &cfg.grid.values(), SUPPORT_MARGIN) {
        return Err(PointError::NotCompactlySupported { lo: x.domain.lo, hi: x.domain.hi });
    }
    Ok(GeneralizedNumber::point_value(r, x))
}

pub fn is_moderate_point(x: &GeneralizedPoint, cfg: &QuotientConfig) -> Result<VerdictReport, QuotientError> {
    let z = GeneralizedNumber::Point { point: x.clone() };
    decide_source("moderate point", &NumberNet(&z), z.locality(), &number_config(cfg), false)
}

pub fn is_moderate_number(z: &GeneralizedNumber, cfg: &QuotientConfig) -> Result<VerdictReport, QuotientError> {
    decide_source("moderate number", &NumberNet(z), z.locality(), &number_config(cfg), false)
}

pub fn is_negligible_number(z: &GeneralizedNumber, cfg: &QuotientConfig) -> Result<VerdictReport, QuotientError> {
    decide_source("negligible number", &NumberNet(z), z.locality(), &number_config(cfg), true)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessConfig {
    pub grid: Vec<f64>,
    pub compact: (f64, f64),
    pub samples: usize,
    /// The maximum must beat `ε^m`.
    pub m: f64,
}

impl WitnessConfig {
    pub fn standard(domain: Interval, grid: Vec<f64>) -> WitnessConfig {
        WitnessConfig { grid, compact: domain.middle(0.5), samples: 401, m: 2.0 }
    }
}

/// Per-ε maxima `(ε_k, x_k, |R(φ)_{ε_k}(x_k)|)` on the compact; the lowest
/// x wins ties.
pub fn scan_maxima(
    r: &Representative,
    phi: &TestObjectFamily,
    cfg: &WitnessConfig,
) -> Result<Vec<(f64, f64, f64)>, EvalError> {
    let (lo, hi) = cfg.compact;
    let features = r.features();
    let mut out = Vec::with_capacity(cfg.grid.len());
    for &eps in &cfg.grid {
        let n = cfg.samples.max(2) - 1;
        let mut xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        for &c in &features {
            for i in -8..=8 {
                let p = c + eps * i as f64 / 8.0;
                if p >= lo && p <= hi {
                    xs.push(p);
                }
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let mut best = (xs[0], -1.0);
        for x in xs {
            let v = r.eval(phi, eps, x)?.abs();
            if v > best.1 {
                best = (x, v);
            }
        }
        out.push((eps, best.0, best.1));
    }
    Ok(out)
}

fn witness_exists(maxima: &[(f64, f64, f64)], m: f64) -> bool {
    let beats: Vec<bool> = maxima.iter().map(|&(e, _, v)| v > e.powf(m) && v > 1e-13).collect();
    let count = beats.iter().filter(|b| **b).count();
    beats.last().copied().unwrap_or(false) && 2 * count >= beats.len()
}

/// ε-local staircase through the per-ε argmaxima, or `None` when the maxima
/// do not beat `ε^m` along the grid.
pub fn find_witness_point(
    r: &Representative,
    phi: &TestObjectFamily,
    cfg: &WitnessConfig,
) -> Result<Option<GeneralizedPoint>, EvalError> {
    let maxima = scan_maxima(r, phi, cfg)?;
    if !witness_exists(&maxima, cfg.m) {
        return Ok(None);
    }
    Ok(Some(GeneralizedPoint::staircase(maxima.iter().map(|&(e, x, _)| (e, x)).collect(), r.domain)))
}

/// φ_ε-local variant: the step is selected by the L² mass of the kernel at
/// a fixed anchor instead of by ε.
pub fn find_witness_point_phi_eps(
    r: &Representative,
    phi: &TestObjectFamily,
    cfg: &WitnessConfig,
) -> Result<Option<GeneralizedPoint>, EvalError> {
    let maxima = scan_maxima(r, phi, cfg)?;
    if !witness_exists(&maxima, cfg.m) {
        return Ok(None);
    }
    let anchor = 0.5 * (cfg.compact.0 + cfg.compact.1);
    let masses: Vec<f64> = maxima.iter().map(|&(e, _, _)| kernel_mass(&phi.family, e, anchor)).collect();
    let mut levels = Vec::with_capacity(masses.len());
    for (k, &(_, x, _)) in maxima.iter().enumerate() {
        let level = if k == 0 { 0.0 } else { (masses[k - 1] * masses[k]).sqrt() };
        levels.push((level, x));
    }
    Ok(Some(GeneralizedPoint { kind: PointKind::PhiEps { anchor, levels }, domain: r.domain }))
}
