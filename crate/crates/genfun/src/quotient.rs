//! Moderateness, negligibility, association and quotient equality from
//! fitted ε-asymptotics over finite batteries.
//!
//! A net `ε ↦ p(d^k R(φ)(ψ_1, …, ψ_k)_ε)` is sampled on a geometric ε-grid
//! and `log p` is fitted against `log ε`. All Gateaux derivatives up to
//! `k_max` come from one evaluation on `φ + Σ t_i ψ_i` with nilpotent `t_i`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::locality::{EpsComponent, LocalityType, PhiComponent, XComponent};
use crate::quad::{adaptive_simpson_breaks, QuadError};
use crate::scalar::factorial;
use crate::smooth::SmoothFn;
use crate::symexpr::{Combo, EvalError, Representative, SymError, Val};
use crate::testobjects::{Family, Schedule, TestObjectFamily};
use crate::Interval;

/// Values at or below this are numerically zero.
pub const ABS_FLOOR: f64 = 1e-13;
/// Rounding allowance: a value is also zero when below `ROUNDING · M`,
/// `M` the magnitude of the summed terms.
pub const ROUNDING: f64 = 64.0 * f64::EPSILON;

/// Natural-log residual below which a fit counts as tight regardless of r².
pub const TIGHT_RESIDUAL: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuotientError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("finite-difference step {0:e} underflows")]
    StepUnderflow(f64),
    #[error("at most {max} Gateaux directions are supported, got {got}")]
    TooManyDirections { got: usize, max: usize },
    #[error("input is not moderate on the battery: {0}")]
    NotModerate(String),
}

fn ser_slope<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("+inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// Supremum seminorm `p_{K,α}(f) = sup_K |f^{(α)}|`, or the absolute value
/// for scalar nets when `compact` is absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seminorm {
    pub id: String,
    pub compact: Option<(f64, f64)>,
    pub alpha: u32,
    /// Uniform grid intervals on the compact.
    pub resolution: usize,
}

impl Seminorm {
    pub fn sup(lo: f64, hi: f64, alpha: u32) -> Seminorm {
        Seminorm { id: format!("sup[{lo},{hi}]/d{alpha}"), compact: Some((lo, hi)), alpha, resolution: 40 }
    }

    pub fn abs() -> Seminorm {
        Seminorm { id: "abs".into(), compact: None, alpha: 0, resolution: 0 }
    }

    /// Uniform grid on K plus points `c + ε t` around features `c`.
    pub fn sample_points(&self, features: &[f64], eps: f64) -> Vec<f64> {
        let Some((lo, hi)) = self.compact else { return vec![0.0] };
        let n = self.resolution.max(1);
        let mut pts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        for &c in features {
            for i in -8..=8 {
                let p = c + eps * i as f64 / 8.0;
                if p >= lo && p <= hi {
                    pts.push(p);
                }
            }
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        pts
    }
}

/// Geometric grid `start · ratio^i`, `i < count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for EpsGrid {
    fn default() -> Self {
        EpsGrid { start: 1.0 / 16.0, ratio: 0.5, count: 16 }
    }
}

impl EpsGrid {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.start * self.ratio.powi(i as i32)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub eps: f64,
    pub value: f64,
    /// Noise level below which the value counts as zero.
    pub floor: f64,
    pub floored: bool,
}

/// Fitted `p(ε) ≈ C ε^slope`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValuationEstimate {
    #[serde(serialize_with = "ser_slope")]
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Largest |log residual| of the fit.
    pub max_residual: f64,
    pub samples: Vec<Sample>,
    pub floor_hit: bool,
}

impl ValuationEstimate {
    /// Least-squares fit of `log p` against `log ε` over the non-floored
    /// samples. A net whose smaller half of ε values is entirely floored is
    /// numerically zero and gets slope `+∞`.
    pub fn fit(samples: Vec<Sample>) -> ValuationEstimate {
        let floor_hit = samples.iter().any(|s| s.floored);
        let n = samples.len();
        let tail_zero = n > 0 && samples[n / 2..].iter().all(|s| s.floored);
        if tail_zero {
            return ValuationEstimate {
                slope: f64::INFINITY,
                intercept: 0.0,
                r2: 1.0,
                max_residual: 0.0,
                samples,
                floor_hit,
            };
        }
        let pts: Vec<(f64, f64)> =
            samples.iter().filter(|s| !s.floored).map(|s| (s.eps.ln(), s.value.ln())).collect();
        let (slope, intercept, r2) = least_squares(&pts);
        let max_residual = pts.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(f64::NAN, f64::max);
        ValuationEstimate { slope, intercept, r2, max_residual, samples, floor_hit }
    }

    /// r² at least `r2_min`, or every point within [`TIGHT_RESIDUAL`] of the
    /// line. The second case covers nearly flat nets, whose r² carries no
    /// information.
    pub fn good_fit(&self, r2_min: f64) -> bool {
        self.is_zero_net()
            || (self.slope.is_finite() && (self.r2 >= r2_min || self.max_residual <= TIGHT_RESIDUAL))
    }

    pub fn is_zero_net(&self) -> bool {
        self.slope == f64::INFINITY
    }

    /// [`growth_exponent`] of the samples, floored values taken at their floor.
    pub fn growth_exponent(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self.samples.iter().map(|s| (s.eps, s.value.max(s.floor))).collect();
        growth_exponent(&pts)
    }
}

/// Smallest `N` with `v(ε) <= v(ε₀)·(ε₀/ε)^N` on samples `(ε, v)` ordered
/// by decreasing ε.
pub fn growth_exponent(s: &[(f64, f64)]) -> f64 {
    let Some(&(e0, v0)) = s.first() else { return f64::NAN };
    s.iter()
        .skip(1)
        .map(|&(e, v)| if v <= v0 { 0.0 } else { (v / v0).ln() / (e0 / e).ln() })
        .fold(0.0, f64::max)
}

/// Slope, intercept and r² of a straight-line fit; NaN slope for fewer
/// than two points, r² = 1 for exactly constant data.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN, 0.0);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (f64::NAN, my, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssres: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy <= 1e-24 * n { 1.0 } else { 1.0 - ssres / syy };
    (slope, intercept, r2)
}

fn floor_for(magnitude: f64) -> f64 {
    ABS_FLOOR.max(ROUNDING * magnitude)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    True,
    False,
    Inconclusive,
}

impl Verdict {
    pub fn is_true(self) -> bool {
        self == Verdict::True
    }
}

/// Finite stand-ins for the quantifiers over test objects, 0-test objects
/// and seminorms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub id: String,
    pub test_objects: Vec<TestObjectFamily>,
    pub zero_objects: Vec<TestObjectFamily>,
    pub seminorms: Vec<Seminorm>,
}

impl Battery {
    /// Three test objects, three 0-test objects, `α ≤ 2` on the middle half
    /// and middle quarter of the domain.
    pub fn standard(schedule: Schedule, domain: Interval, seed: u64) -> Battery {
        let base = TestObjectFamily::base(schedule);
        let half = TestObjectFamily::dilated(schedule, 0.5);
        let test_objects = vec![base.clone(), half.clone(), TestObjectFamily::modulated(schedule, seed)];
        let zero_objects = vec![
            TestObjectFamily::difference(&base, &half, 0.0),
            TestObjectFamily::modulated_zero(schedule, 0.5, seed + 1),
            TestObjectFamily::difference(&base, &TestObjectFamily::dilated(schedule, 0.75), 1.0),
        ];
        let mut seminorms = Vec::new();
        for frac in [0.5, 0.25] {
            let (lo, hi) = domain.middle(frac);
            for alpha in 0..=2 {
                seminorms.push(Seminorm::sup(lo, hi, alpha));
            }
        }
        Battery { id: format!("standard(seed={seed})"), test_objects, zero_objects, seminorms }
    }

    /// Only test objects and a single seminorm, no directions.
    pub fn minimal(phi: TestObjectFamily, seminorm: Seminorm) -> Battery {
        Battery {
            id: format!("minimal({})", phi.id),
            test_objects: vec![phi],
            zero_objects: vec![],
            seminorms: vec![seminorm],
        }
    }

    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "id": self.id,
            "test_objects": self.test_objects.iter().map(|t| t.describe()).collect::<Vec<_>>(),
            "zero_objects": self.zero_objects.iter().map(|t| t.id.clone()).collect::<Vec<_>>(),
            "seminorms": self.seminorms,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateauxMethod {
    /// Nilpotent direction variables: exact up to rounding.
    Exact,
    /// Iterated central differences with the given step.
    CentralDifference { step: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientConfig {
    pub grid: EpsGrid,
    pub battery: Battery,
    pub k_max: u32,
    /// Moderate: every slope `>= -n_max`.
    pub n_max: f64,
    /// Negligible: every slope `>= m_max`.
    pub m_max: f64,
    pub r2_min: f64,
    /// Association: the last value must be below this.
    pub assoc_tol: f64,
    /// Absolute tolerance of the adaptive x-quadrature in association tests.
    pub quad_tol: f64,
}

impl QuotientConfig {
    pub fn standard(domain: Interval) -> QuotientConfig {
        QuotientConfig {
            grid: EpsGrid::default(),
            battery: Battery::standard(Schedule::default(), domain, 1),
            k_max: 2,
            n_max: 12.0,
            m_max: 8.0,
            r2_min: 0.9,
            assoc_tol: 1e-3,
            quad_tol: 1e-10,
        }
    }
}

/// One fitted net: `p(d^k R(φ)(ψ…)_ε)` for a fixed `φ`, `p`, direction tuple.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeRow {
    pub testobj_id: String,
    pub seminorm_id: String,
    pub k: u32,
    pub directions: Vec<String>,
    #[serde(flatten)]
    pub estimate: ValuationEstimate,
}

impl SlopeRow {
    pub fn good_fit(&self, r2_min: f64) -> bool {
        self.estimate.good_fit(r2_min)
    }
}

/// A net that can be sampled under a kernel combination.
pub trait NetSource {
    fn alphas(&self) -> Vec<u32>;
    fn features(&self) -> Vec<f64>;
    fn eval_at(&self, alpha: u32, combo: &Combo, eps: f64, x: f64) -> Result<Val, QuotientError>;
}

/// A representative with its x-derivatives precomputed.
pub struct RepresentativeNet {
    derivs: Vec<Representative>,
    features: Vec<f64>,
}

impl RepresentativeNet {
    pub fn new(r: &Representative, max_alpha: u32) -> RepresentativeNet {
        let mut derivs = vec![r.clone()];
        for _ in 0..max_alpha {
            let next = derivs.last().unwrap().diff_componentwise();
            derivs.push(next);
        }
        RepresentativeNet { derivs, features: r.features() }
    }
}

impl NetSource for RepresentativeNet {
    fn alphas(&self) -> Vec<u32> {
        (0..self.derivs.len() as u32).collect()
    }

    fn features(&self) -> Vec<f64> {
        self.features.clone()
    }

    fn eval_at(&self, alpha: u32, combo: &Combo, eps: f64, x: f64) -> Result<Val, QuotientError> {
        Ok(self.derivs[alpha as usize].eval_combo(combo, eps, x)?)
    }
}

/// Nondecreasing index tuples of length `k` over `n` directions.
fn direction_tuples(n: usize, k: u32) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for t in direction_tuples(n, k - 1) {
        let start = t.last().copied().unwrap_or(0);
        for i in start..n {
            let mut u = t.clone();
            u.push(i);
            out.push(u);
        }
    }
    out
}

/// Coefficient multi-index of a direction tuple and the factor turning the
/// Taylor coefficient into `d^k R(ψ_{i_1}, …)`.
fn tuple_multi(t: &[usize], n: usize) -> (Vec<u8>, f64) {
    let mut m = vec![0u8; n];
    for &i in t {
        m[i] += 1;
    }
    let f = m.iter().map(|&c| factorial(c as usize)).product();
    (m, f)
}

/// Samples every (test object, seminorm, direction tuple) net and fits it.
pub fn collect_rows(
    source: &dyn NetSource,
    battery: &Battery,
    grid: &[f64],
    k_max: u32,
) -> Result<Vec<SlopeRow>, QuotientError> {
    let nd = battery.zero_objects.len();
    let k_max = if nd == 0 { 0 } else { k_max };
    let dirs: Vec<Arc<Family>> = battery.zero_objects.iter().map(|z| z.family.clone()).collect();
    let tuples: Vec<Vec<usize>> = (0..=k_max).flat_map(|k| direction_tuples(nd, k)).collect();
    let alphas = source.alphas();
    let features = source.features();
    let mut rows = Vec::new();
    for phi in &battery.test_objects {
        let combo = if k_max == 0 {
            Combo::single(phi.family.clone())
        } else {
            Combo::with_directions(phi.family.clone(), &dirs, k_max as u8)
        };
        // samples[(seminorm, tuple)] over ε
        let mut samples: BTreeMap<(usize, usize), Vec<Sample>> = BTreeMap::new();
        for &eps in grid {
            for &alpha in &alphas {
                let group: Vec<usize> = (0..battery.seminorms.len())
                    .filter(|&s| battery.seminorms[s].alpha == alpha)
                    .collect();
                if group.is_empty() {
                    continue;
                }
                let per_norm: Vec<Vec<f64>> =
                    group.iter().map(|&s| battery.seminorms[s].sample_points(&features, eps)).collect();
                let mut all: Vec<f64> = per_norm.iter().flatten().cloned().collect();
                all.sort_by(|a, b| a.partial_cmp(b).unwrap());
                all.dedup();
                let vals: Vec<Val> =
                    all.iter().map(|&x| source.eval_at(alpha, &combo, eps, x)).collect::<Result<_, _>>()?;
                for (gi, &s) in group.iter().enumerate() {
                    let idx: Vec<usize> =
                        per_norm[gi].iter().map(|p| all.binary_search_by(|a| a.partial_cmp(p).unwrap()).unwrap()).collect();
                    for (ti, t) in tuples.iter().enumerate() {
                        let (multi, fact) = tuple_multi(t, nd);
                        let mut value = 0.0f64;
                        let mut floored = true;
                        let mut floor = 0.0f64;
                        for &i in &idx {
                            let (v, m) = vals[i].coeff(&multi);
                            let (v, m) = ((v * fact).abs(), m * fact);
                            let fl = floor_for(m);
                            value = value.max(v);
                            floor = floor.max(fl);
                            if v > fl {
                                floored = false;
                            }
                        }
                        samples.entry((s, ti)).or_default().push(Sample { eps, value, floor, floored });
                    }
                }
            }
        }
        for ((s, ti), smp) in samples {
            let t = &tuples[ti];
            rows.push(SlopeRow {
                testobj_id: phi.id.clone(),
                seminorm_id: battery.seminorms[s].id.clone(),
                k: t.len() as u32,
                directions: t.iter().map(|&i| battery.zero_objects[i].id.clone()).collect(),
                estimate: ValuationEstimate::fit(smp),
            });
        }
    }
    Ok(rows)
}

/// `d^k R(φ)(ψ_1, …, ψ_k)_ε(x)` for `k <= 3`.
pub fn gateaux(
    r: &Representative,
    phi: &TestObjectFamily,
    psis: &[TestObjectFamily],
    eps: f64,
    x: f64,
    method: GateauxMethod,
) -> Result<f64, QuotientError> {
    if psis.len() > 3 {
        return Err(QuotientError::TooManyDirections { got: psis.len(), max: 3 });
    }
    match method {
        GateauxMethod::Exact => {
            let dirs: Vec<Arc<Family>> = psis.iter().map(|p| p.family.clone()).collect();
            let combo = Combo::with_directions(phi.family.clone(), &dirs, 1);
            let v = r.eval_combo(&combo, eps, x)?;
            Ok(v.coeff(&vec![1u8; psis.len()]).0)
        }
        GateauxMethod::CentralDifference { step } => {
            if !(step > 1e-8) {
                return Err(QuotientError::StepUnderflow(step));
            }
            let k = psis.len();
            let mut acc = 0.0;
            for mask in 0..(1u32 << k) {
                let mut terms = vec![(1.0, phi.family.clone())];
                let mut sign = 1.0;
                for (i, p) in psis.iter().enumerate() {
                    let s = if mask & (1 << i) == 0 { 1.0 } else { -1.0 };
                    sign *= s;
                    terms.push((s * step, p.family.clone()));
                }
                let fam = Arc::new(Family::Sum { eps_power: 0.0, terms });
                acc += sign * r.eval_family(&fam, eps, x)?;
            }
            Ok(acc / (2.0 * step).powi(k as i32))
        }
    }
}

/// Fitted valuation of `p(d^k R(φ)(ψ…)_ε)` over the grid.
pub fn estimate_valuation(
    r: &Representative,
    seminorm: &Seminorm,
    phi: &TestObjectFamily,
    psis: &[TestObjectFamily],
    grid: &EpsGrid,
) -> Result<ValuationEstimate, QuotientError> {
    let net = RepresentativeNet::new(r, seminorm.alpha);
    let features = r.features();
    let dirs: Vec<Arc<Family>> = psis.iter().map(|p| p.family.clone()).collect();
    let combo = if psis.is_empty() {
        Combo::single(phi.family.clone())
    } else {
        Combo::with_directions(phi.family.clone(), &dirs, 1)
    };
    let multi = vec![1u8; psis.len()];
    let mut samples = Vec::new();
    for eps in grid.values() {
        let mut value = 0.0f64;
        let mut floor = 0.0f64;
        let mut floored = true;
        for x in seminorm.sample_points(&features, eps) {
            let (v, m) = net.eval_at(seminorm.alpha, &combo, eps, x)?.coeff(&multi);
            let fl = floor_for(m);
            value = value.max(v.abs());
            floor = floor.max(fl);
            floored &= v.abs() <= fl;
        }
        samples.push(Sample { eps, value, floor, floored });
    }
    Ok(ValuationEstimate::fit(samples))
}

/// Verdict with the evidence it rests on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictReport {
    pub question: String,
    pub verdict: Verdict,
    pub rows: Vec<SlopeRow>,
    pub battery: serde_json::Value,
    pub grid: Vec<f64>,
    /// Verdict from the `k = 0` nets alone, when the zeroth-order reduction applies.
    pub zeroth_order: Option<Verdict>,
    /// Set when the full and zeroth-order verdicts disagree.
    pub violation: Option<String>,
    pub notes: Vec<String>,
}

impl VerdictReport {
    /// Smallest fitted slope among the rows (ignoring NaN).
    pub fn min_slope(&self) -> f64 {
        self.rows.iter().map(|r| r.estimate.slope).filter(|s| !s.is_nan()).fold(f64::INFINITY, f64::min)
    }

    /// `eps,k,seminorm_id,testobj_id,value` lines.
    pub fn csv(&self) -> String {
        let mut s = String::from("eps,k,seminorm_id,testobj_id,value\n");
        for r in &self.rows {
            let id = if r.directions.is_empty() {
                r.testobj_id.clone()
            } else {
                format!("{}|{}", r.testobj_id, r.directions.join(";"))
            };
            for smp in &r.estimate.samples {
                s.push_str(&format!("{:e},{},{},\"{}\",{:e}\n", smp.eps, r.k, r.seminorm_id, id, smp.value));
            }
        }
        s
    }
}

fn moderate_verdict(rows: &[SlopeRow], cfg: &QuotientConfig) -> Verdict {
    let mut inconclusive = false;
    for r in rows {
        if r.good_fit(cfg.r2_min) {
            if r.estimate.slope < -cfg.n_max {
                return Verdict::False;
            }
        } else if !(r.estimate.growth_exponent() <= cfg.n_max) {
            // A poor fit still bounds the net when its envelope grows slowly.
            inconclusive = true;
        }
    }
    if inconclusive {
        Verdict::Inconclusive
    } else {
        Verdict::True
    }
}

fn negligible_verdict(rows: &[SlopeRow], cfg: &QuotientConfig) -> Verdict {
    let mut inconclusive = false;
    for r in rows {
        if r.good_fit(cfg.r2_min) {
            if r.estimate.slope < cfg.m_max {
                return Verdict::False;
            }
        } else {
            inconclusive = true;
        }
    }
    if inconclusive {
        Verdict::Inconclusive
    } else {
        Verdict::True
    }
}

/// Whether the zeroth-order reduction applies (`ℓ ⪰ (φ_ε, x, ε)`).
pub fn zeroth_order_applies(l: LocalityType) -> bool {
    l.stronger_eq(LocalityType::canonical(PhiComponent::Component, XComponent::X, EpsComponent::Eps))
}

fn report(
    question: &str,
    r: &Representative,
    cfg: &QuotientConfig,
    decide: fn(&[SlopeRow], &QuotientConfig) -> Verdict,
) -> Result<VerdictReport, QuotientError> {
    let max_alpha = cfg.battery.seminorms.iter().map(|s| s.alpha).max().unwrap_or(0);
    let net = RepresentativeNet::new(r, max_alpha);
    let grid = cfg.grid.values();
    let rows = collect_rows(&net, &cfg.battery, &grid, cfg.k_max)?;
    Ok(finish(question, rows, r.locality, cfg, decide, grid))
}

fn finish(
    question: &str,
    rows: Vec<SlopeRow>,
    locality: LocalityType,
    cfg: &QuotientConfig,
    decide: fn(&[SlopeRow], &QuotientConfig) -> Verdict,
    grid: Vec<f64>,
) -> VerdictReport {
    let verdict = decide(&rows, cfg);
    let mut zeroth_order = None;
    let mut violation = None;
    if zeroth_order_applies(locality) && cfg.k_max > 0 {
        let k0: Vec<SlopeRow> = rows.iter().filter(|r| r.k == 0).cloned().collect();
        let v0 = decide(&k0, cfg);
        if v0 != verdict && verdict != Verdict::Inconclusive && v0 != Verdict::Inconclusive {
            violation = Some(format!("k = 0 nets give {v0:?}, all nets give {verdict:?}"));
        }
        zeroth_order = Some(v0);
    }
    VerdictReport {
        question: question.to_string(),
        verdict,
        rows,
        battery: cfg.battery.describe(),
        grid,
        zeroth_order,
        violation,
        notes: vec!["verdicts are relative to the recorded battery and ε-grid".into()],
    }
}

pub fn is_moderate(r: &Representative, cfg: &QuotientConfig) -> Result<VerdictReport, QuotientError> {
    report("moderate", r, cfg, moderate_verdict)
}

pub fn is_negligible(r: &Representative, cfg: &QuotientConfig) -> Result<VerdictReport, QuotientError> {
    report("negligible", r, cfg, negligible_verdict)
}

/// Verdicts for arbitrary net sources (used for generalized numbers).
pub fn decide_source(
    question: &str,
    source: &dyn NetSource,
    locality: LocalityType,
    cfg: &QuotientConfig,
    negligible: bool,
) -> Result<VerdictReport, QuotientError> {
    let grid = cfg.grid.values();
    let rows = collect_rows(source, &cfg.battery, &grid, cfg.k_max)?;
    let decide = if negligible { negligible_verdict } else { moderate_verdict };
    Ok(finish(question, rows, locality, cfg, decide, grid))
}

/// `R ~ S` in the quotient: both moderate and `R - S` negligible.
pub fn quotient_equal(
    r: &Representative,
    s: &Representative,
    cfg: &QuotientConfig,
) -> Result<VerdictReport, QuotientError> {
    for (name, x) in [("left", r), ("right", s)] {
        let m = is_moderate(x, cfg)?;
        if m.verdict == Verdict::False {
            return Err(QuotientError::NotModerate(format!("{name} operand {x}")));
        }
    }
    let mut rep = is_negligible(&Representative::sub(r, s)?, cfg)?;
    rep.question = "quotient_equal".into();
    Ok(rep)
}

/// Default probe functions for association: bumps inside the middle half.
pub fn default_probes(domain: Interval) -> Vec<SmoothFn> {
    let (lo, hi) = domain.middle(0.5);
    let c = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo);
    let u1 = (SmoothFn::x() - SmoothFn::c(c)) * SmoothFn::c(1.0 / r);
    let c2 = c + 0.2 * r;
    let u2 = (SmoothFn::x() - SmoothFn::c(c2)) * SmoothFn::c(1.0 / (0.7 * r));
    vec![SmoothFn::bump(u1), SmoothFn::bump(u2) * (SmoothFn::c(1.0) + SmoothFn::x())]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssociationRow {
    pub testobj_id: String,
    pub probe: String,
    /// `(ε, ∫ R(φ)_ε χ)`.
    pub pairings: Vec<(f64, f64)>,
    pub verdict: Verdict,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssociationReport {
    pub verdict: Verdict,
    pub rows: Vec<AssociationRow>,
    pub battery: serde_json::Value,
}

fn probe_support(chi: &SmoothFn, domain: Interval) -> (f64, f64) {
    let n = 400;
    let xs: Vec<f64> = (1..n).map(|i| domain.lo + domain.width() * i as f64 / n as f64).collect();
    let nz: Vec<f64> = xs.iter().cloned().filter(|&x| chi.value(x) != 0.0).collect();
    match (nz.first(), nz.last()) {
        (Some(&a), Some(&b)) => {
            let h = domain.width() / n as f64;
            ((a - h).max(domain.lo + 0.5 * h), (b + h).min(domain.hi - 0.5 * h))
        }
        _ => (domain.mid(), domain.mid()),
    }
}

/// `∫ R(φ)_ε(x) χ(x) dx → 0` for every battery test object and probe.
pub fn is_associated_zero(
    r: &Representative,
    probes: &[SmoothFn],
    cfg: &QuotientConfig,
) -> Result<AssociationReport, QuotientError> {
    let grid = cfg.grid.values();
    let features = r.features();
    let mut rows = Vec::new();
    for phi in &cfg.battery.test_objects {
        for chi in probes {
            let (a, b) = probe_support(chi, r.domain);
            let mut pairings = Vec::new();
            for &eps in &grid {
                let mut br = vec![a, b];
                for &c in &features {
                    for t in [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0] {
                        br.push(c + eps * t);
                    }
                }
                let br = crate::quad::clean_breaks(br, a, b);
                let mut err = None;
                let mut f = |x: f64| match r.eval(phi, eps, x) {
                    Ok(v) => v * chi.value(x),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                };
                // Tolerance relative to a rough ∫|R χ|, so growing nets do not
                // force the recursion to full depth.
                let mag: f64 = br
                    .windows(2)
                    .map(|w| (w[1] - w[0]) * f(w[0]).abs().max(f(0.5 * (w[0] + w[1])).abs()))
                    .sum();
                let v = adaptive_simpson_breaks(&mut f, &br, cfg.quad_tol * mag.max(1.0), 40)?;
                if let Some(e) = err {
                    return Err(e.into());
                }
                pairings.push((eps, v));
            }
            let (verdict, reason) = association_trend(&pairings, cfg.assoc_tol);
            rows.push(AssociationRow { testobj_id: phi.id.clone(), probe: chi.to_string(), pairings, verdict, reason });
        }
    }
    let verdict = if rows.iter().all(|r| r.verdict == Verdict::True) {
        Verdict::True
    } else if rows.iter().any(|r| r.verdict == Verdict::False) {
        Verdict::False
    } else {
        Verdict::Inconclusive
    };
    Ok(AssociationReport { verdict, rows, battery: cfg.battery.describe() })
}

/// Last four magnitudes non-increasing (values below the floor count as
/// zero) and a final value below `tol` → associated to 0. A sequence that
/// settles away from zero, or grows past `tol`, → not associated. Anything
/// else has no limit.
fn association_trend(p: &[(f64, f64)], tol: f64) -> (Verdict, String) {
    let n = p.len();
    let tail: Vec<f64> = p[n.saturating_sub(4)..].iter().map(|&(_, v)| {
        if v.abs() <= ABS_FLOOR { 0.0 } else { v.abs() }
    }).collect();
    let last = *tail.last().unwrap_or(&0.0);
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0]);
    if decreasing && last < tol {
        return (Verdict::True, format!("last four pairings decrease to {last:e}"));
    }
    let settled = tail.windows(2).all(|w| (w[1] - w[0]).abs() <= 0.05 * w[0].abs().max(tol));
    if last >= tol && settled {
        return (Verdict::False, format!("pairings settle near {last:e}"));
    }
    let growing = tail.len() > 1 && tail.windows(2).all(|w| w[1] > w[0]);
    if growing && tail[0] >= tol {
        return (Verdict::False, format!("pairings grow to {last:e}"));
    }
    (Verdict::Inconclusive, "no associated limit".into())
}
