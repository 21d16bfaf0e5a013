//! Vanishing-moment mollifiers `ψ_m = B·Q_m` on `[-1, 1]`.
//!
//! `B(t) = exp(-1/(1-t²))`. `Q_m` is the degree-`m` polynomial with
//! `∫ t^k ψ_m = δ_{k0}` for `k <= m`. It is assembled from polynomials
//! orthonormal with respect to `B`, `Q_m(t) = Σ_{j<=m} p_j(0) p_j(t)`,
//! which avoids the badly conditioned moment (Hankel) system.

use std::sync::OnceLock;

use thiserror::Error;

use crate::quad::{composite_nodes, gl64};
use crate::scalar::Scalar;

/// Highest supported vanishing-moment order.
pub const MAX_ORDER: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MollifierError {
    #[error("mollifier order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooHigh(usize),
}

/// Three-term recurrence of the monic orthogonal polynomials for `B`:
/// `π_{k+1} = (t - α_k) π_k - β_k π_{k-1}`, with norms `N_k = ∫ π_k² B`.
#[derive(Debug)]
struct Recurrence {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    norm: Vec<f64>,
}

fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Nodes of the fixed rule on `[-1, 1]` used for every mollifier integral.
fn unit_nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| composite_nodes(&[-1.0, -0.5, 0.0, 0.5, 1.0]))
}

fn recurrence() -> &'static Recurrence {
    static REC: OnceLock<Recurrence> = OnceLock::new();
    REC.get_or_init(|| {
        let nodes: Vec<(f64, f64)> = unit_nodes().iter().map(|&(t, w)| (t, w * bump(t))).collect();
        let n = MAX_ORDER + 1;
        let mut alpha = Vec::with_capacity(n);
        let mut beta = Vec::with_capacity(n);
        let mut norm = Vec::with_capacity(n);
        let mut prev = vec![0.0; nodes.len()];
        let mut cur = vec![1.0; nodes.len()];
        for k in 0..n {
            let nk: f64 = nodes.iter().zip(&cur).map(|(&(_, w), p)| w * p * p).sum();
            let tk: f64 = nodes.iter().zip(&cur).map(|(&(t, w), p)| w * t * p * p).sum();
            let a = tk / nk;
            let b = if k == 0 { nk } else { nk / norm[k - 1] };
            alpha.push(a);
            beta.push(b);
            norm.push(nk);
            let next: Vec<f64> = nodes
                .iter()
                .zip(cur.iter().zip(&prev))
                .map(|(&(t, _), (p, q))| (t - a) * p - if k == 0 { 0.0 } else { b * q })
                .collect();
            prev = cur;
            cur = next;
        }
        Recurrence { alpha, beta, norm }
    })
}

/// The mollifier of a given vanishing-moment order.
#[derive(Debug)]
pub struct MomentMollifier {
    m: usize,
    /// `π_j(0) / N_j`, so that `Q_m = Σ w_j π_j`.
    weights: Vec<f64>,
    /// `(t_n, quadrature weight · ψ_m(t_n))` on the fixed rule.
    weighted_nodes: Vec<(f64, f64)>,
}

impl MomentMollifier {
    pub fn order(&self) -> usize {
        self.m
    }

    /// `ψ_m(t)` for any scalar `t`; zero outside `(-1, 1)`.
    pub fn eval<S: Scalar>(&self, t: &S) -> S {
        let b = (t.clone() * t.clone() * -1.0 + 1.0).flat(0);
        if b.re() == 0.0 && t.re().abs() >= 1.0 {
            return t.cst(0.0);
        }
        b * self.poly(t)
    }

    /// `Q_m(t)`.
    pub fn poly<S: Scalar>(&self, t: &S) -> S {
        let rec = recurrence();
        let mut prev = t.cst(0.0);
        let mut cur = t.cst(1.0);
        let mut acc = cur.clone() * self.weights[0];
        for k in 0..self.m {
            let next = (t.clone() - rec.alpha[k]) * cur.clone() - prev * rec.beta[k];
            prev = cur;
            cur = next;
            acc = acc + cur.clone() * self.weights[k + 1];
        }
        acc
    }

    /// Monomial coefficients `c_j` with `Q_m(t) = Σ c_j t^j`.
    pub fn coeffs(&self) -> Vec<f64> {
        let rec = recurrence();
        let mut prev: Vec<f64> = vec![];
        let mut cur: Vec<f64> = vec![1.0];
        let mut acc = vec![0.0; self.m + 1];
        acc[0] += self.weights[0];
        for k in 0..self.m {
            let mut next = vec![0.0; cur.len() + 1];
            for (i, c) in cur.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= rec.alpha[k] * c;
            }
            for (i, c) in prev.iter().enumerate() {
                next[i] -= rec.beta[k] * c;
            }
            prev = cur;
            cur = next;
            for (i, c) in cur.iter().enumerate() {
                acc[i] += self.weights[k + 1] * c;
            }
        }
        acc
    }

    /// Nodes of the fixed rule with weights already multiplied by `ψ_m`.
    pub fn weighted_nodes(&self) -> &[(f64, f64)] {
        &self.weighted_nodes
    }

    /// `∫ t^k ψ_m(t) dt` on the fixed rule.
    pub fn moment(&self, k: i32) -> f64 {
        self.weighted_nodes.iter().map(|&(t, w)| w * t.powi(k)).sum()
    }

    /// `∫_a^1 ψ_m(t) dt`.
    pub fn tail_mass(&self, a: f64) -> f64 {
        if a <= -1.0 {
            return 1.0;
        }
        if a >= 1.0 {
            return 0.0;
        }
        let mut breaks = vec![a];
        for p in [-0.5, 0.0, 0.5] {
            if p > a {
                breaks.push(p);
            }
        }
        breaks.push(1.0);
        let rule = gl64();
        let mut s = 0.0;
        for w in breaks.windows(2) {
            for (t, wt) in rule.mapped(w[0], w[1]) {
                s += wt * self.eval(&t);
            }
        }
        s
    }
}

/// Shared, lazily built mollifier of order `m`.
pub fn mollifier(m: usize) -> Result<&'static MomentMollifier, MollifierError> {
    static CACHE: OnceLock<Vec<MomentMollifier>> = OnceLock::new();
    if m > MAX_ORDER {
        return Err(MollifierError::OrderTooHigh(m));
    }
    let all = CACHE.get_or_init(|| (0..=MAX_ORDER).map(build).collect());
    Ok(&all[m])
}

/// Same as [`mollifier`]; rejects orders above the cap.
pub fn make_mollifier(m: usize) -> Result<&'static MomentMollifier, MollifierError> {
    mollifier(m)
}

fn build(m: usize) -> MomentMollifier {
    let rec = recurrence();
    // π_j(0) from the recurrence.
    let mut pi0 = Vec::with_capacity(m + 1);
    let (mut prev, mut cur) = (0.0, 1.0);
    pi0.push(cur);
    for k in 0..m {
        let next = -rec.alpha[k] * cur - rec.beta[k] * prev;
        prev = cur;
        cur = next;
        pi0.push(cur);
    }
    let weights: Vec<f64> = pi0.iter().zip(&rec.norm).map(|(p, n)| p / n).collect();
    let mut mol = MomentMollifier { m, weights, weighted_nodes: Vec::new() };
    mol.weighted_nodes = unit_nodes().iter().map(|&(t, w)| (t, w * mol.eval(&t))).collect();
    mol
}
