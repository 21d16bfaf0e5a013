//! Smooth functions of one real variable as expression trees.
//!
//! Evaluation is generic over [`Scalar`], so the same tree yields values
//! and exact Taylor coefficients. `Flat { order, arg }` is the `order`-th
//! derivative of `s ↦ exp(-1/s)` (zero for `s <= 0`); the standard bump is
//! `Flat { 0, 1 - t² }`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothFn {
    Const(f64),
    X,
    Add(Box<SmoothFn>, Box<SmoothFn>),
    Sub(Box<SmoothFn>, Box<SmoothFn>),
    Mul(Box<SmoothFn>, Box<SmoothFn>),
    Div(Box<SmoothFn>, Box<SmoothFn>),
    Neg(Box<SmoothFn>),
    Powi(Box<SmoothFn>, i32),
    Sin(Box<SmoothFn>),
    Cos(Box<SmoothFn>),
    Exp(Box<SmoothFn>),
    Flat { order: u32, arg: Box<SmoothFn> },
    /// Inverse of a monotone `forward` on `[lo, hi]`, solved by Newton.
    InverseOf { forward: Box<SmoothFn>, deriv: Box<SmoothFn>, lo: f64, hi: f64 },
    /// `outer(inner(x))`, kept explicit where substitution cannot be pushed down.
    Compose(Box<SmoothFn>, Box<SmoothFn>),
}

use SmoothFn as F;

impl SmoothFn {
    pub fn c(v: f64) -> SmoothFn {
        F::Const(v)
    }

    pub fn x() -> SmoothFn {
        F::X
    }

    /// Standard bump `exp(-1/(1-u²))` on `(-1,1)`, zero outside.
    pub fn bump(u: SmoothFn) -> SmoothFn {
        F::Flat { order: 0, arg: Box::new(F::c(1.0) - u.clone() * u) }
    }

    pub fn sin(self) -> SmoothFn {
        F::Sin(Box::new(self))
    }

    pub fn cos(self) -> SmoothFn {
        F::Cos(Box::new(self))
    }

    pub fn exp(self) -> SmoothFn {
        F::Exp(Box::new(self))
    }

    pub fn powi(self, n: i32) -> SmoothFn {
        match n {
            0 => F::c(1.0),
            1 => self,
            _ => F::Powi(Box::new(self), n),
        }
    }

    pub fn div(self, o: SmoothFn) -> SmoothFn {
        F::Div(Box::new(self), Box::new(o))
    }

    pub fn is_const(&self, v: f64) -> bool {
        matches!(self, F::Const(c) if *c == v)
    }

    pub fn eval<S: Scalar>(&self, x: &S) -> S {
        match self {
            F::Const(c) => x.cst(*c),
            F::X => x.clone(),
            F::Add(a, b) => a.eval(x) + b.eval(x),
            F::Sub(a, b) => a.eval(x) - b.eval(x),
            F::Mul(a, b) => a.eval(x) * b.eval(x),
            F::Div(a, b) => a.eval(x).div(&b.eval(x)),
            F::Neg(a) => -a.eval(x),
            F::Powi(a, n) => a.eval(x).powi(*n),
            F::Sin(a) => a.eval(x).sin(),
            F::Cos(a) => a.eval(x).cos(),
            F::Exp(a) => a.eval(x).exp(),
            F::Flat { order, arg } => arg.eval(x).flat(*order as usize),
            F::InverseOf { forward, deriv, lo, hi } => {
                let y0 = invert(forward, deriv, x.re(), *lo, *hi);
                let mut y = x.cst(y0);
                // Each Newton step doubles the number of correct Taylor orders.
                let mut correct = 1;
                while correct <= x.degree() {
                    let r = forward.eval(&y) - x.clone();
                    let step = r.div(&deriv.eval(&y));
                    y = y - step;
                    correct *= 2;
                }
                y
            }
            F::Compose(o, i) => o.eval(&i.eval(x)),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(&x)
    }

    /// Symbolic derivative with light constant folding.
    pub fn derivative(&self) -> SmoothFn {
        match self {
            F::Const(_) => F::c(0.0),
            F::X => F::c(1.0),
            F::Add(a, b) => a.derivative() + b.derivative(),
            F::Sub(a, b) => a.derivative() - b.derivative(),
            F::Mul(a, b) => a.derivative() * (**b).clone() + (**a).clone() * b.derivative(),
            F::Div(a, b) => {
                let num = a.derivative() * (**b).clone() - (**a).clone() * b.derivative();
                if num.is_const(0.0) {
                    F::c(0.0)
                } else {
                    num.div((**b).clone().powi(2))
                }
            }
            F::Neg(a) => -a.derivative(),
            F::Powi(a, n) => F::c(*n as f64) * (**a).clone().powi(n - 1) * a.derivative(),
            F::Sin(a) => (**a).clone().cos() * a.derivative(),
            F::Cos(a) => -((**a).clone().sin() * a.derivative()),
            F::Exp(a) => self.clone() * a.derivative(),
            F::Flat { order, arg } => {
                F::Flat { order: order + 1, arg: arg.clone() } * arg.derivative()
            }
            F::InverseOf { deriv, .. } => F::c(1.0).div(deriv.substitute(self)),
            F::Compose(o, i) => o.derivative().substitute(i) * i.derivative(),
        }
    }

    /// `self(inner(x))`.
    pub fn substitute(&self, inner: &SmoothFn) -> SmoothFn {
        let s = |a: &SmoothFn| Box::new(a.substitute(inner));
        match self {
            F::Const(c) => F::Const(*c),
            F::X => inner.clone(),
            F::Add(a, b) => F::Add(s(a), s(b)),
            F::Sub(a, b) => F::Sub(s(a), s(b)),
            F::Mul(a, b) => F::Mul(s(a), s(b)),
            F::Div(a, b) => F::Div(s(a), s(b)),
            F::Neg(a) => F::Neg(s(a)),
            F::Powi(a, n) => F::Powi(s(a), *n),
            F::Sin(a) => F::Sin(s(a)),
            F::Cos(a) => F::Cos(s(a)),
            F::Exp(a) => F::Exp(s(a)),
            F::Flat { order, arg } => F::Flat { order: *order, arg: s(arg) },
            F::InverseOf { .. } => {
                if matches!(inner, F::X) {
                    self.clone()
                } else {
                    F::Compose(Box::new(self.clone()), Box::new(inner.clone()))
                }
            }
            F::Compose(o, i) => F::Compose(o.clone(), s(i)),
        }
    }
}

/// Newton iteration safeguarded by bisection for a monotone function.
fn invert(forward: &SmoothFn, deriv: &SmoothFn, target: f64, lo: f64, hi: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let increasing = forward.value(b) > forward.value(a);
    let mut y = 0.5 * (a + b);
    for _ in 0..200 {
        let r = forward.value(y) - target;
        if r == 0.0 {
            return y;
        }
        if (r > 0.0) == increasing {
            b = y;
        } else {
            a = y;
        }
        let step = y - r / deriv.value(y);
        let next = if step > a && step < b { step } else { 0.5 * (a + b) };
        if (next - y).abs() <= 1e-16 * (1.0 + y.abs()) {
            return next;
        }
        y = next;
    }
    y
}

impl std::ops::Add for SmoothFn {
    type Output = SmoothFn;
    fn add(self, o: SmoothFn) -> SmoothFn {
        match (&self, &o) {
            (F::Const(a), F::Const(b)) => F::c(a + b),
            _ if self.is_const(0.0) => o,
            _ if o.is_const(0.0) => self,
            _ => F::Add(Box::new(self), Box::new(o)),
        }
    }
}

impl std::ops::Sub for SmoothFn {
    type Output = SmoothFn;
    fn sub(self, o: SmoothFn) -> SmoothFn {
        match (&self, &o) {
            (F::Const(a), F::Const(b)) => F::c(a - b),
            _ if o.is_const(0.0) => self,
            _ if self.is_const(0.0) => -o,
            _ => F::Sub(Box::new(self), Box::new(o)),
        }
    }
}

impl std::ops::Mul for SmoothFn {
    type Output = SmoothFn;
    fn mul(self, o: SmoothFn) -> SmoothFn {
        match (&self, &o) {
            (F::Const(a), F::Const(b)) => F::c(a * b),
            _ if self.is_const(0.0) || o.is_const(0.0) => F::c(0.0),
            _ if self.is_const(1.0) => o,
            _ if o.is_const(1.0) => self,
            _ => F::Mul(Box::new(self), Box::new(o)),
        }
    }
}

impl std::ops::Neg for SmoothFn {
    type Output = SmoothFn;
    fn neg(self) -> SmoothFn {
        match self {
            F::Const(a) => F::c(-a),
            F::Neg(a) => *a,
            other => F::Neg(Box::new(other)),
        }
    }
}

impl fmt::Display for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            F::Const(c) => write!(f, "{c}"),
            F::X => write!(f, "x"),
            F::Add(a, b) => write!(f, "add({a}, {b})"),
            F::Sub(a, b) => write!(f, "sub({a}, {b})"),
            F::Mul(a, b) => write!(f, "mul({a}, {b})"),
            F::Div(a, b) => write!(f, "div({a}, {b})"),
            F::Neg(a) => write!(f, "neg({a})"),
            F::Powi(a, n) => write!(f, "pow({a}, {n})"),
            F::Sin(a) => write!(f, "sin({a})"),
            F::Cos(a) => write!(f, "cos({a})"),
            F::Exp(a) => write!(f, "exp({a})"),
            F::Flat { order, arg } => write!(f, "flat({order}, {arg})"),
            F::InverseOf { forward, lo, hi, .. } => write!(f, "inverse({forward}, {lo}, {hi})"),
            F::Compose(o, i) => write!(f, "compose({o}, {i})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{Shape, Tps};

    fn check_derivative(f: &SmoothFn, x: f64) {
        let s = Shape::new(&[1]);
        let jet = f.eval(&Tps::var(&s, 0, x));
        let sym = f.derivative().value(x);
        assert!((jet.derivative(&[1]) - sym).abs() <= 1e-10 * (1.0 + sym.abs()), "{f}");
    }

    #[test]
    fn symbolic_and_jet_derivatives_agree() {
        let x = F::x;
        let fs = vec![
            x().sin() * x().cos(),
            (x() * x()).exp().div(F::c(1.0) + x() * x()),
            F::bump(x() * F::c(0.5)),
            (x() + F::c(0.1) * x().sin()).powi(3),
            -(x().cos().powi(-2)),
        ];
        for f in &fs {
            for &p in &[-0.9, -0.3, 0.0, 0.4, 1.3] {
                check_derivative(f, p);
                check_derivative(&f.derivative(), p);
            }
        }
    }

    #[test]
    fn bump_is_flat_at_the_edge() {
        let b = F::bump(F::x());
        assert_eq!(b.value(1.0), 0.0);
        assert_eq!(b.derivative().value(1.0), 0.0);
        assert_eq!(b.derivative().derivative().value(-1.0), 0.0);
        assert!((b.value(0.0) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn newton_inverse_carries_taylor_coefficients() {
        let mu = F::x() + F::c(0.1) * F::x().sin();
        let inv = F::InverseOf {
            forward: Box::new(mu.clone()),
            deriv: Box::new(mu.derivative()),
            lo: -3.0,
            hi: 3.0,
        };
        for &p in &[-1.0, 0.2, 0.9] {
            let y = inv.value(mu.value(p));
            assert!((y - p).abs() < 1e-14);
            check_derivative(&inv, p);
        }
        let s = Shape::new(&[3]);
        let t = inv.eval(&Tps::var(&s, 0, 0.5));
        let back = mu.eval(&t);
        assert!((back.derivative(&[1]) - 1.0).abs() < 1e-12);
        assert!(back.derivative(&[2]).abs() < 1e-12);
        assert!(back.derivative(&[3]).abs() < 1e-11);
        let composed = inv.substitute(&(F::c(2.0) * F::x()));
        check_derivative(&composed, 0.3);
    }
}
