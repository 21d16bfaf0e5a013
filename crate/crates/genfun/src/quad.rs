//! Quadrature rules.
//!
//! Kernel pairings use a fixed composite Gauss–Legendre rule split at
//! caller-supplied breakpoints; the node set depends only on the
//! breakpoints, so results are reproducible to the last bit. Adaptive
//! Simpson is used where integrands are cheap and tolerances loose.

use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("adaptive quadrature did not converge on [{a}, {b}]: achieved error estimate {achieved:e}, requested {tol:e}")]
    NoConvergence { a: f64, b: f64, achieved: f64, tol: f64 },
}

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> GaussLegendre {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { z } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
                let dz = pn / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let m = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&t, &w)| (m + h * t, h * w))
    }
}

/// The 64-point rule shared by all kernel integrals.
pub fn gl64() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(64))
}

/// Panels per breakpoint interval.
pub const PANELS: usize = 2;

/// Composite nodes: each interval between consecutive breakpoints is split
/// into [`PANELS`] equal panels carrying the 64-point rule.
pub fn composite_nodes(breaks: &[f64]) -> Vec<(f64, f64)> {
    let rule = gl64();
    let mut out = Vec::with_capacity(breaks.len() * PANELS * 64);
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) / PANELS as f64;
        for p in 0..PANELS {
            let lo = a + p as f64 * h;
            out.extend(rule.mapped(lo, lo + h));
        }
    }
    out
}

/// Sorted, deduplicated breakpoints clipped to `[lo, hi]`, endpoints included.
pub fn clean_breaks(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.retain(|p| p.is_finite() && *p > lo && *p < hi);
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = (hi - lo).abs().max(f64::MIN_POSITIVE);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * scale);
    pts
}

/// Integral of `f` by the composite rule over the given breakpoints.
pub fn integrate_composite<F: FnMut(f64) -> f64>(breaks: &[f64], mut f: F) -> f64 {
    composite_nodes(breaks).into_iter().map(|(y, w)| w * f(y)).sum()
}

/// Adaptive Simpson with absolute tolerance and maximum recursion depth.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut worst = 0.0f64;
    let v = simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, max_depth, &mut worst);
    if worst > tol {
        return Err(QuadError::NoConvergence { a, b, achieved: worst, tol });
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    worst: &mut f64,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 && delta.abs() > 15.0 * tol {
            *worst = worst.max(delta.abs() / 15.0);
        }
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, worst)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, worst)
}

/// Adaptive Simpson over consecutive breakpoint intervals, splitting the
/// tolerance evenly.
pub fn adaptive_simpson_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    tol: f64,
    max_depth: u32,
) -> Result<f64, QuadError> {
    let n = breaks.len().saturating_sub(1).max(1) as f64;
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += adaptive_simpson(&mut f, w[0], w[1], tol / n, max_depth)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_high_degree_polynomials() {
        let r = GaussLegendre::new(64);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = r.nodes.iter().zip(&r.weights).map(|(t, w)| w * t.powi(126)).sum();
        assert!((m - 2.0 / 127.0).abs() < 1e-14);
    }

    #[test]
    fn composite_rule_integrates_the_bump_like_simpson() {
        let b = |t: f64| if t.abs() < 1.0 { (-1.0 / (1.0 - t * t)).exp() } else { 0.0 };
        let gl = integrate_composite(&[-1.0, 0.0, 1.0], b);
        let si = adaptive_simpson(b, -1.0, 1.0, 1e-13, 50).unwrap();
        assert!((gl - si).abs() < 1e-12);
        assert!((gl - 0.443_993_816_168_079_4).abs() < 1e-15);
    }

    #[test]
    fn simpson_reports_nonconvergence() {
        let r = adaptive_simpson(|t: f64| (1.0 / t).sin(), 1e-6, 1.0, 1e-14, 3);
        assert!(matches!(r, Err(QuadError::NoConvergence { .. })));
    }
}
