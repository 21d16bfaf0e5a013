//! Evaluation of representatives on linear combinations of kernel families.
//!
//! The argument is `φ = Σ c_k F_k` with Taylor-polynomial coefficients
//! `c_k` in nilpotent direction variables, so one evaluation yields the
//! value together with all Gateaux derivatives up to the truncation order.
//! Every value carries a coefficientwise bound on the magnitude of the
//! terms summed to produce it, used to separate exact cancellation from
//! rounding noise.

use std::sync::Arc;

use thiserror::Error;

use super::pairing::pair;
use super::{Distribution, Expr, Representative};
use crate::scalar::{factorial, Scalar, Shape, Tps};
use crate::smooth::SmoothFn;
use crate::testobjects::{Family, TestObjectFamily};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("x = {x} lies outside the domain ({lo}, {hi})")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("ε = {0} is outside (0, 1]")]
    EpsOutOfRange(f64),
    #[error("evaluation produced a non-finite value at x = {x}, ε = {eps}")]
    NonFinite { x: f64, eps: f64 },
}

/// `φ = Σ c_k F_k` with coefficients in a common Taylor shape.
#[derive(Clone, Debug)]
pub struct Combo {
    pub shape: Shape,
    pub terms: Vec<(Tps, Arc<Family>)>,
}

impl Combo {
    pub fn single(f: Arc<Family>) -> Combo {
        let shape = Shape::new(&[]);
        Combo { terms: vec![(Tps::constant(&shape, 1.0), f)], shape }
    }

    /// `φ + Σ t_i ψ_i` with each `t_i` truncated at `order`.
    pub fn with_directions(phi: Arc<Family>, dirs: &[Arc<Family>], order: u8) -> Combo {
        let shape = Shape::new(&vec![order; dirs.len()]);
        let mut terms = vec![(Tps::constant(&shape, 1.0), phi)];
        for (i, d) in dirs.iter().enumerate() {
            terms.push((Tps::var(&shape, i, 0.0), d.clone()));
        }
        Combo { shape, terms }
    }

    fn map(&self, f: impl Fn(&Arc<Family>) -> Family) -> Combo {
        Combo {
            shape: self.shape.clone(),
            terms: self.terms.iter().map(|(c, fam)| (c.clone(), Arc::new(f(fam)))).collect(),
        }
    }
}

/// Value and coefficientwise magnitude bound.
#[derive(Clone, Debug)]
pub struct Val {
    pub v: Tps,
    pub m: Tps,
}

impl Val {
    fn scalar(v: f64) -> Val {
        Val { v: Tps::scalar(v), m: Tps::scalar(v.abs()) }
    }

    /// Coefficient of `multi` and its magnitude bound.
    pub fn coeff(&self, multi: &[u8]) -> (f64, f64) {
        (coeff_of(&self.v, multi), coeff_of(&self.m, multi))
    }
}

/// Coefficient of a multi-index, treating shapeless values as constants.
pub(crate) fn coeff_of(t: &Tps, multi: &[u8]) -> f64 {
    if t.shape().is_empty() {
        if multi.iter().all(|&m| m == 0) {
            t.re()
        } else {
            0.0
        }
    } else {
        t.coeff(multi)
    }
}

fn in_shape(t: &Tps, shape: &Shape) -> Tps {
    if t.shape().is_empty() {
        Tps::constant(shape, t.re())
    } else {
        t.clone()
    }
}

impl Representative {
    /// `R(φ)_ε(x)`.
    pub fn eval(&self, phi: &TestObjectFamily, eps: f64, x: f64) -> Result<f64, EvalError> {
        self.eval_family(&phi.family, eps, x)
    }

    pub fn eval_family(&self, fam: &Arc<Family>, eps: f64, x: f64) -> Result<f64, EvalError> {
        let v = self.eval_combo(&Combo::single(fam.clone()), eps, x)?;
        Ok(v.v.re())
    }

    pub fn eval_combo(&self, combo: &Combo, eps: f64, x: f64) -> Result<Val, EvalError> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(EvalError::EpsOutOfRange(eps));
        }
        if !self.domain.contains(x) {
            return Err(EvalError::OutOfDomain { x, lo: self.domain.lo, hi: self.domain.hi });
        }
        let out = self.ev(combo, eps, x)?;
        if !out.v.re().is_finite() {
            return Err(EvalError::NonFinite { x, eps });
        }
        Ok(out)
    }

    fn ev(&self, combo: &Combo, eps: f64, x: f64) -> Result<Val, EvalError> {
        Ok(match &self.expr {
            Expr::Pairing { u, j } => pair_combo(u, combo, *j, eps, x),
            Expr::FrozenPairing { u, theta, j } => {
                let p = pair(u, &theta.family, *j, eps, x);
                Val { v: Tps::scalar(p.value), m: Tps::scalar(p.magnitude) }
            }
            Expr::Smooth { f } => Val::scalar(f.value(x)),
            Expr::Eps => Val::scalar(eps),
            Expr::X => Val::scalar(x),
            Expr::Const { c } => Val::scalar(*c),
            Expr::Add { a, b } => {
                let (a, b) = (a.ev(combo, eps, x)?, b.ev(combo, eps, x)?);
                Val { v: a.v + b.v, m: a.m + b.m }
            }
            Expr::Mul { a, b } => {
                let (a, b) = (a.ev(combo, eps, x)?, b.ev(combo, eps, x)?);
                Val { v: a.v * b.v, m: a.m * b.m }
            }
            Expr::Neg { a } => {
                let a = a.ev(combo, eps, x)?;
                Val { v: -a.v, m: a.m }
            }
            Expr::Pullback { inner, map } => {
                let pushed = combo.map(|f| Family::Push { map: map.clone(), inner: f.clone() });
                inner.eval_combo(&pushed, eps, map.forward.value(x))?
            }
            Expr::Restrict { inner, cutoff } => {
                let cut = combo.map(|f| Family::Cutoff { cutoff: cutoff.clone(), inner: f.clone() });
                inner.eval_combo(&cut, eps, x)?
            }
            Expr::Glue { terms } => {
                let mut acc = Val::scalar(0.0);
                for t in terms {
                    let w = t.weight.value(x);
                    if w == 0.0 {
                        continue;
                    }
                    let cut = combo.map(|f| Family::Cutoff { cutoff: t.cutoff.clone(), inner: f.clone() });
                    let p = t.part.eval_combo(&cut, eps, x)?;
                    acc = Val { v: acc.v + p.v * w, m: acc.m + p.m * w.abs() };
                }
                acc
            }
            Expr::GlueStarX { terms, x_order } => glue_star_x(terms, *x_order, combo, eps, x)?,
            Expr::Project { inner, theta } => {
                let c = Combo::single(theta.family.clone());
                inner.eval_combo(&c, eps, x)?
            }
            Expr::Lie { inner, dtilde } => {
                let shape = combo.shape.extended(1);
                let s = Tps::var(&shape, shape.nvars() - 1, 0.0);
                let mut terms = Vec::with_capacity(2 * combo.terms.len());
                for (c, f) in &combo.terms {
                    let ce = in_shape(c, &combo.shape).embed(&shape);
                    terms.push((ce.clone(), f.clone()));
                    terms.push((ce * s.clone(), Arc::new(Family::Lie(f.clone()))));
                }
                let r = inner.eval_combo(&Combo { shape: shape.clone(), terms }, eps, x)?;
                let dv = in_shape(&r.v, &shape).last_var_coeff(1);
                let dm = in_shape(&r.m, &shape).last_var_coeff(1);
                let t = dtilde.eval_combo(combo, eps, x)?;
                Val { v: t.v - dv, m: t.m + dm }
            }
            Expr::Number { z } => z.eval_combo(combo, eps)?,
        })
    }
}

fn pair_combo(u: &Distribution, combo: &Combo, j: u32, eps: f64, x: f64) -> Val {
    let mut v = Tps::scalar(0.0);
    let mut m = Tps::scalar(0.0);
    for (c, f) in &combo.terms {
        let p = pair(u, f, j, eps, x);
        v = v + c.clone() * p.value;
        m = m + c.abs_coeffs() * p.magnitude;
    }
    Val { v, m }
}

/// `∂_x^n Σ_α χ_α(M(φ_ε(x))) · R_α(q_α φ_ε(x))_ε(x_α)`, with `φ_ε(x + h)`
/// expanded in `h` to order `n`.
fn glue_star_x(
    terms: &[super::StarTerm],
    n: u32,
    combo: &Combo,
    eps: f64,
    x: f64,
) -> Result<Val, EvalError> {
    let shape = combo.shape.extended(n as u8);
    let h = Tps::var(&shape, shape.nvars() - 1, 0.0);
    let mut hpow = vec![Tps::constant(&shape, 1.0)];
    for l in 1..=n as usize {
        hpow.push(hpow[l - 1].clone() * h.clone() * (1.0 / l as f64));
    }
    let ident = Distribution::smooth(SmoothFn::x());
    let mut moment = Tps::constant(&shape, 0.0);
    for (c, f) in &combo.terms {
        let ce = in_shape(c, &combo.shape).embed(&shape);
        for (l, hp) in hpow.iter().enumerate() {
            let p = pair(&ident, f, l as u32, eps, x);
            moment = moment + ce.clone() * hp.clone() * p.value;
        }
    }
    let mut acc_v = Tps::constant(&shape, 0.0);
    let mut acc_m = Tps::constant(&shape, 0.0);
    for t in terms {
        let chi = t.chi.eval(&moment);
        if chi.max_abs() == 0.0 {
            continue;
        }
        let mut fams = Vec::with_capacity(combo.terms.len() * (n as usize + 1));
        for (c, f) in &combo.terms {
            let ce = in_shape(c, &combo.shape).embed(&shape);
            for (l, hp) in hpow.iter().enumerate() {
                let frozen = Family::Frozen {
                    inner: f.clone(),
                    x0: Some(x),
                    eps0: None,
                    x_order: l as u32,
                    weight: Some(t.q.clone()),
                };
                fams.push((ce.clone() * hp.clone(), Arc::new(frozen)));
            }
        }
        let part = t.part.eval_combo(&Combo { shape: shape.clone(), terms: fams }, eps, t.anchor)?;
        acc_v = acc_v + chi.clone() * in_shape(&part.v, &shape);
        acc_m = acc_m + chi.abs_coeffs() * in_shape(&part.m, &shape);
    }
    let f = factorial(n as usize);
    Ok(Val { v: acc_v.last_var_coeff(n as u8) * f, m: acc_m.last_var_coeff(n as u8) * f })
}
