//! The sharp topology as a valuation ultrametric `d(R, S) = 2^{-v(R - S)}`,
//! membership in the basic neighborhoods `W_{k,p,m}`, and the projection
//! `π_θ` onto the special algebra.

use serde::{Deserialize, Serialize};

use crate::locality::Admissibility;
use crate::quotient::{
    collect_rows, least_squares, Battery, EpsGrid, NetSource, QuotientError, RepresentativeNet, Seminorm, SlopeRow,
    ValuationEstimate,
};
use crate::symexpr::{Representative, SymError};
use crate::testobjects::{Schedule, TestObjectFamily};
use crate::Interval;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpConfig {
    pub grid: EpsGrid,
    pub battery: Battery,
    pub k_max: u32,
    /// Valuations are clamped to `[-s_max, s_max]`.
    pub s_max: f64,
    pub r2_min: f64,
}

impl SharpConfig {
    /// Standard test objects and directions, sup over the middle half with
    /// `α = 0`, first derivatives.
    pub fn standard(domain: Interval) -> SharpConfig {
        let mut battery = Battery::standard(Schedule::default(), domain, 1);
        let (lo, hi) = domain.middle(0.5);
        battery.seminorms = vec![Seminorm::sup(lo, hi, 0)];
        SharpConfig { grid: EpsGrid::default(), battery, k_max: 1, s_max: 8.0, r2_min: 0.9 }
    }

    /// The same config on the frozen battery `{θ}` without directions.
    pub fn frozen(&self, theta: TestObjectFamily) -> SharpConfig {
        let mut c = self.clone();
        c.battery = Battery {
            id: format!("frozen({})", theta.id),
            test_objects: vec![theta],
            zero_objects: vec![],
            seminorms: self.battery.seminorms.clone(),
        };
        c.k_max = 0;
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpValuation {
    pub v: f64,
    /// Identical expression trees; no sampling was done.
    pub exact: bool,
    /// Some fitted net fell below the r² threshold.
    pub inconclusive: bool,
    pub rows: Vec<SlopeRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpDistance {
    pub value: f64,
    pub valuation: SharpValuation,
}

/// Fewest unfloored samples from which a floored net's decay is read off.
const MIN_PREFIX: usize = 4;

/// Slope of the samples above the floor when the net sinks below it.
/// A net that is exactly representable (e.g. `ε⁴`) decays through the floor
/// at its true rate; the +∞ verdict only says it is numerically zero.
fn prefix_slope(est: &ValuationEstimate, r2_min: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        est.samples.iter().filter(|s| !s.floored).map(|s| (s.eps.ln(), s.value.ln())).collect();
    if pts.len() < MIN_PREFIX {
        return None;
    }
    let (slope, _, r2) = least_squares(&pts);
    (slope.is_finite() && r2 >= r2_min).then_some(slope)
}

/// Minimum clamped slope over the rows.
fn valuation_of_rows(rows: Vec<SlopeRow>, cfg: &SharpConfig) -> SharpValuation {
    let mut v = cfg.s_max;
    let mut inconclusive = false;
    for row in &rows {
        if !row.good_fit(cfg.r2_min) {
            inconclusive = true;
        }
        let s = match row.estimate.is_zero_net() {
            true => prefix_slope(&row.estimate, cfg.r2_min).unwrap_or(f64::INFINITY),
            false => row.estimate.slope,
        };
        if s.is_nan() {
            inconclusive = true;
            continue;
        }
        v = v.min(s.clamp(-cfg.s_max, cfg.s_max));
    }
    SharpValuation { v, exact: false, inconclusive, rows }
}

pub fn sharp_valuation_source(source: &dyn NetSource, cfg: &SharpConfig) -> Result<SharpValuation, QuotientError> {
    let rows = collect_rows(source, &cfg.battery, &cfg.grid.values(), cfg.k_max)?;
    Ok(valuation_of_rows(rows, cfg))
}

/// `v(R - S)`: the smallest fitted slope of `p(d^k (R - S)(φ)(ψ…)_ε)`.
pub fn sharp_valuation(r: &Representative, s: &Representative, cfg: &SharpConfig) -> Result<SharpValuation, QuotientError> {
    if r.domain == s.domain && r.expr == s.expr {
        return Ok(SharpValuation { v: cfg.s_max, exact: true, inconclusive: false, rows: vec![] });
    }
    let d = Representative::sub(r, s)?;
    let max_alpha = cfg.battery.seminorms.iter().map(|p| p.alpha).max().unwrap_or(0);
    sharp_valuation_source(&RepresentativeNet::new(&d, max_alpha), cfg)
}

pub fn sharp_distance(r: &Representative, s: &Representative, cfg: &SharpConfig) -> Result<SharpDistance, QuotientError> {
    let valuation = sharp_valuation(r, s, cfg)?;
    let value = if valuation.exact { 0.0 } else { (-valuation.v).exp2() };
    Ok(SharpDistance { value, valuation })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    pub inconclusive: bool,
    pub min_slope: f64,
    pub rows: Vec<SlopeRow>,
}

/// `R ∈ W_{k,p,m}`: every order-`k` net under `p` decays at least like `ε^m`.
pub fn neighborhood_member(
    r: &Representative,
    k: u32,
    p: &Seminorm,
    m: f64,
    cfg: &SharpConfig,
) -> Result<Membership, QuotientError> {
    let battery = Battery { seminorms: vec![p.clone()], ..cfg.battery.clone() };
    let net = RepresentativeNet::new(r, p.alpha);
    let rows: Vec<SlopeRow> =
        collect_rows(&net, &battery, &cfg.grid.values(), k)?.into_iter().filter(|row| row.k == k).collect();
    let inconclusive = rows.iter().any(|row| !row.good_fit(cfg.r2_min));
    let min_slope = rows.iter().map(|row| row.estimate.slope).fold(f64::INFINITY, f64::min);
    let member = !inconclusive && !rows.is_empty() && min_slope >= m;
    Ok(Membership { member, inconclusive, min_slope, rows })
}

/// `π_θ R`: evaluation feeds `θ` to `R` whatever the ambient test object.
pub fn project_special(r: &Representative, theta: &TestObjectFamily) -> Result<Representative, SymError> {
    if !r.locality.admissible(Admissibility::Sheaf) {
        return Err(SymError::InadmissibleLocality { found: r.locality, needed: "a sheaf-admissible type".into() });
    }
    Ok(r.project(theta.clone()))
}
