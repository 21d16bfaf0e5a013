//! Scalars for forward-mode differentiation.
//!
//! Every kernel and smooth-function formula is written once, generic over
//! [`Scalar`], and evaluated either on plain `f64` or on [`Tps`], a truncated
//! multivariate Taylor polynomial. `Tps` carries per-variable truncation
//! orders; a variable of order 1 is a nilpotent direction (Gateaux
//! derivatives), higher orders give mixed partial derivatives.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

/// Numbers that the formula layer can evaluate on.
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    /// Constant (zeroth) coefficient.
    fn re(&self) -> f64;
    /// A constant living in the same variable space as `self`.
    fn cst(&self, c: f64) -> Self;
    /// Highest total degree a nonzero monomial without constant part can have.
    fn degree(&self) -> usize;
    /// `f(self)` given `derivs[n] = f^(n)(self.re())` for `n <= self.degree()`.
    fn compose(&self, derivs: &[f64]) -> Self;
    fn lift(&self) -> Tps;
    fn lower(t: &Tps) -> Self;

    fn exp(&self) -> Self {
        let e = self.re().exp();
        self.compose(&vec![e; self.degree() + 1])
    }

    fn sin(&self) -> Self {
        let (s, c) = self.re().sin_cos();
        let cyc = [s, c, -s, -c];
        let d: Vec<f64> = (0..=self.degree()).map(|n| cyc[n % 4]).collect();
        self.compose(&d)
    }

    fn cos(&self) -> Self {
        let (s, c) = self.re().sin_cos();
        let cyc = [c, -s, -c, s];
        let d: Vec<f64> = (0..=self.degree()).map(|n| cyc[n % 4]).collect();
        self.compose(&d)
    }

    fn ln(&self) -> Self {
        let t = self.re();
        let mut d = vec![t.ln()];
        let mut p = 1.0 / t;
        for n in 1..=self.degree() {
            d.push(p);
            p *= -(n as f64) / t;
        }
        self.compose(&d)
    }

    fn recip(&self) -> Self {
        let t = self.re();
        let mut d = Vec::with_capacity(self.degree() + 1);
        let mut p = 1.0 / t;
        for n in 0..=self.degree() {
            d.push(p);
            p *= -((n + 1) as f64) / t;
        }
        self.compose(&d)
    }

    fn div(&self, o: &Self) -> Self {
        self.clone() * o.recip()
    }

    fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut acc = self.cst(1.0);
        let mut base = self.clone();
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base.clone();
            }
            k >>= 1;
            if k > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// `|self|`, differentiable away from zero.
    fn abs(&self) -> Self {
        if self.re() < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// n-th derivative of `s ↦ exp(-1/s)` for `s > 0`, extended by zero.
    fn flat(&self, n: usize) -> Self {
        let d = flat_derivs(self.re(), n, self.degree() + 1);
        self.compose(&d)
    }
}

/// `e^{(n+i)}(s)` for `i < count`, where `e(s) = exp(-1/s)` on `s > 0`.
pub fn flat_derivs(s: f64, n: usize, count: usize) -> Vec<f64> {
    if s <= 0.0 {
        return vec![0.0; count];
    }
    let u = 1.0 / s;
    let e = (-u).exp();
    if e == 0.0 {
        return vec![0.0; count];
    }
    // e^{(k)}(s) = e(s) P_k(1/s), P_{k+1}(u) = u^2 (P_k(u) - P_k'(u)).
    let mut p: Vec<f64> = vec![1.0];
    let mut out = Vec::with_capacity(count);
    for k in 0..n + count {
        if k >= n {
            let v: f64 = p.iter().rev().fold(0.0, |acc, &c| acc * u + c);
            out.push(e * v);
        }
        let mut next = vec![0.0; p.len() + 2];
        for (i, &c) in p.iter().enumerate() {
            next[i + 2] += c;
            if i > 0 {
                next[i + 1] -= c * i as f64;
            }
        }
        p = next;
    }
    out
}

impl Scalar for f64 {
    fn re(&self) -> f64 {
        *self
    }
    fn cst(&self, c: f64) -> Self {
        c
    }
    fn degree(&self) -> usize {
        0
    }
    fn compose(&self, derivs: &[f64]) -> Self {
        derivs[0]
    }
    fn lift(&self) -> Tps {
        Tps::scalar(*self)
    }
    fn lower(t: &Tps) -> Self {
        t.re()
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn recip(&self) -> Self {
        1.0 / *self
    }
    fn div(&self, o: &Self) -> Self {
        *self / *o
    }
    fn powi(&self, n: i32) -> Self {
        f64::powi(*self, n)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

/// Truncation pattern shared by a family of [`Tps`] values.
#[derive(Debug)]
pub struct ShapeData {
    orders: Vec<u8>,
    strides: Vec<usize>,
    len: usize,
    degree: usize,
    /// (i, j) pairs whose monomial product survives truncation; the product
    /// lands at index `i + j`.
    pairs: Vec<(u32, u32)>,
}

/// Shared handle to a truncation pattern.
#[derive(Clone, Debug)]
pub struct Shape(Arc<ShapeData>);

impl PartialEq for Shape {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.orders == other.0.orders
    }
}

fn shape_cache() -> &'static Mutex<HashMap<Vec<u8>, Shape>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<u8>, Shape>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Shape {
    /// Shape with the given per-variable truncation orders.
    pub fn new(orders: &[u8]) -> Shape {
        let mut cache = shape_cache().lock().expect("shape cache poisoned");
        if let Some(s) = cache.get(orders) {
            return s.clone();
        }
        let nv = orders.len();
        let mut strides = vec![1usize; nv];
        for v in (0..nv.saturating_sub(1)).rev() {
            strides[v] = strides[v + 1] * (orders[v + 1] as usize + 1);
        }
        let len: usize = orders.iter().map(|&o| o as usize + 1).product();
        let multis: Vec<Vec<u8>> = (0..len)
            .map(|mut i| {
                let mut m = vec![0u8; nv];
                for v in 0..nv {
                    m[v] = (i / strides[v]) as u8;
                    i %= strides[v];
                }
                m
            })
            .collect();
        let mut pairs = Vec::new();
        for (i, mi) in multis.iter().enumerate() {
            for (j, mj) in multis.iter().enumerate() {
                if (0..nv).all(|v| mi[v] + mj[v] <= orders[v]) {
                    pairs.push((i as u32, j as u32));
                }
            }
        }
        let shape = Shape(Arc::new(ShapeData {
            orders: orders.to_vec(),
            strides,
            len,
            degree: orders.iter().map(|&o| o as usize).sum(),
            pairs,
        }));
        cache.insert(orders.to_vec(), shape.clone());
        shape
    }

    pub fn orders(&self) -> &[u8] {
        &self.0.orders
    }

    pub fn nvars(&self) -> usize {
        self.0.orders.len()
    }

    pub fn len(&self) -> usize {
        self.0.len
    }

    pub fn is_empty(&self) -> bool {
        self.0.orders.is_empty()
    }

    /// Flat index of a multi-index.
    pub fn index(&self, multi: &[u8]) -> usize {
        multi.iter().zip(&self.0.strides).map(|(&m, &s)| m as usize * s).sum()
    }

    /// This shape with one more trailing variable of the given order.
    pub fn extended(&self, order: u8) -> Shape {
        let mut o = self.0.orders.clone();
        o.push(order);
        Shape::new(&o)
    }
}

/// Truncated multivariate Taylor polynomial.
#[derive(Clone, Debug)]
pub struct Tps {
    shape: Shape,
    c: Vec<f64>,
}

impl Tps {
    /// A constant with no variables; it broadcasts against any shape.
    pub fn scalar(c: f64) -> Tps {
        Tps { shape: Shape::new(&[]), c: vec![c] }
    }

    pub fn constant(shape: &Shape, c: f64) -> Tps {
        let mut v = vec![0.0; shape.len()];
        v[0] = c;
        Tps { shape: shape.clone(), c: v }
    }

    /// `value + t_var`.
    pub fn var(shape: &Shape, var: usize, value: f64) -> Tps {
        let mut t = Tps::constant(shape, value);
        if shape.orders()[var] > 0 {
            t.c[shape.0.strides[var]] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Taylor coefficient of the given multi-index (zero when truncated).
    pub fn coeff(&self, multi: &[u8]) -> f64 {
        if multi.iter().zip(self.shape.orders()).any(|(m, o)| m > o) {
            return 0.0;
        }
        self.c[self.shape.index(multi)]
    }

    /// Partial derivative `∂^multi` at the expansion point.
    pub fn derivative(&self, multi: &[u8]) -> f64 {
        let fact: f64 = multi.iter().map(|&m| factorial(m as usize)).product();
        self.coeff(multi) * fact
    }

    /// Re-express in `shape`, which must extend this shape by trailing variables.
    pub fn embed(&self, shape: &Shape) -> Tps {
        if self.shape == *shape {
            return self.clone();
        }
        let no = self.shape.nvars();
        debug_assert!(shape.orders()[..no] == *self.shape.orders());
        let mut out = vec![0.0; shape.len()];
        let mut multi = vec![0u8; shape.nvars()];
        for (i, &v) in self.c.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut r = i;
            for k in 0..no {
                multi[k] = (r / self.shape.0.strides[k]) as u8;
                r %= self.shape.0.strides[k];
            }
            out[shape.index(&multi)] = v;
        }
        Tps { shape: shape.clone(), c: out }
    }

    /// Coefficient of `t_last^k` as a polynomial in the remaining variables.
    pub fn last_var_coeff(&self, k: u8) -> Tps {
        let nv = self.shape.nvars();
        let inner = Shape::new(&self.shape.orders()[..nv - 1]);
        let ord = self.shape.orders()[nv - 1];
        let mut out = vec![0.0; inner.len()];
        if k <= ord {
            let step = ord as usize + 1;
            for (i, o) in out.iter_mut().enumerate() {
                *o = self.c[i * step + k as usize];
            }
        }
        Tps { shape: inner, c: out }
    }

    /// Coefficientwise absolute values (a magnitude bound of the terms).
    pub fn abs_coeffs(&self) -> Tps {
        Tps { shape: self.shape.clone(), c: self.c.iter().map(|v| v.abs()).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn unify(a: &Tps, b: &Tps) -> (Tps, Tps) {
        if a.shape == b.shape {
            (a.clone(), b.clone())
        } else if a.shape.is_empty() {
            (Tps::constant(&b.shape, a.c[0]), b.clone())
        } else if b.shape.is_empty() {
            (a.clone(), Tps::constant(&a.shape, b.c[0]))
        } else {
            panic!("incompatible Taylor shapes {:?} and {:?}", a.shape.orders(), b.shape.orders())
        }
    }

    fn mul_ref(&self, o: &Tps) -> Tps {
        if self.shape.is_empty() {
            return o.clone() * self.c[0];
        }
        if o.shape.is_empty() {
            return self.clone() * o.c[0];
        }
        assert!(self.shape == o.shape, "incompatible Taylor shapes");
        let mut out = vec![0.0; self.shape.len()];
        for &(i, j) in &self.shape.0.pairs {
            let (i, j) = (i as usize, j as usize);
            out[i + j] += self.c[i] * o.c[j];
        }
        Tps { shape: self.shape.clone(), c: out }
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

impl Add for Tps {
    type Output = Tps;
    fn add(self, o: Tps) -> Tps {
        let (mut a, b) = if self.shape == o.shape { (self, o) } else { Tps::unify(&self, &o) };
        for (x, y) in a.c.iter_mut().zip(&b.c) {
            *x += y;
        }
        a
    }
}

impl Sub for Tps {
    type Output = Tps;
    fn sub(self, o: Tps) -> Tps {
        let (mut a, b) = if self.shape == o.shape { (self, o) } else { Tps::unify(&self, &o) };
        for (x, y) in a.c.iter_mut().zip(&b.c) {
            *x -= y;
        }
        a
    }
}

impl Mul for Tps {
    type Output = Tps;
    fn mul(self, o: Tps) -> Tps {
        self.mul_ref(&o)
    }
}

impl Neg for Tps {
    type Output = Tps;
    fn neg(mut self) -> Tps {
        for x in self.c.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl Add<f64> for Tps {
    type Output = Tps;
    fn add(mut self, c: f64) -> Tps {
        self.c[0] += c;
        self
    }
}

impl Sub<f64> for Tps {
    type Output = Tps;
    fn sub(mut self, c: f64) -> Tps {
        self.c[0] -= c;
        self
    }
}

impl Mul<f64> for Tps {
    type Output = Tps;
    fn mul(mut self, c: f64) -> Tps {
        for x in self.c.iter_mut() {
            *x *= c;
        }
        self
    }
}

impl Scalar for Tps {
    fn re(&self) -> f64 {
        self.c[0]
    }

    fn cst(&self, c: f64) -> Self {
        Tps::constant(&self.shape, c)
    }

    fn degree(&self) -> usize {
        self.shape.0.degree
    }

    fn compose(&self, derivs: &[f64]) -> Self {
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut out = Tps::constant(&self.shape, derivs[0]);
        let mut pw = h.clone();
        let mut fact = 1.0;
        for (n, d) in derivs.iter().enumerate().take(self.degree() + 1).skip(1) {
            fact *= n as f64;
            if *d != 0.0 {
                let k = d / fact;
                for (o, p) in out.c.iter_mut().zip(&pw.c) {
                    *o += k * p;
                }
            }
            if n < self.degree() {
                pw = pw.mul_ref(&h);
            }
        }
        out
    }

    fn lift(&self) -> Tps {
        self.clone()
    }

    fn lower(t: &Tps) -> Self {
        t.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_truncates_per_variable() {
        let s = Shape::new(&[2, 1]);
        let x = Tps::var(&s, 0, 1.0);
        let y = Tps::var(&s, 1, 2.0);
        let p = x.clone() * x * y;
        // (1+a)^2 (2+b) = 2 + 4a + 2a^2 + b + 2ab + a^2 b
        assert_eq!(p.coeff(&[0, 0]), 2.0);
        assert_eq!(p.coeff(&[1, 0]), 4.0);
        assert_eq!(p.coeff(&[2, 0]), 2.0);
        assert_eq!(p.coeff(&[0, 1]), 1.0);
        assert_eq!(p.coeff(&[1, 1]), 2.0);
        assert_eq!(p.coeff(&[2, 1]), 1.0);
    }

    #[test]
    fn elementary_functions_match_closed_form_derivatives() {
        let s = Shape::new(&[3]);
        let x = Tps::var(&s, 0, 0.7);
        let e = x.sin();
        assert!((e.derivative(&[3]) + 0.7f64.cos()).abs() < 1e-14);
        let l = x.ln();
        assert!((l.derivative(&[2]) + 1.0 / 0.49).abs() < 1e-12);
        let r = x.recip();
        assert!((r.derivative(&[3]) + 6.0 / 0.7f64.powi(4)).abs() < 1e-10);
    }

    #[test]
    fn flat_derivatives_match_difference_quotients() {
        let s = 0.4;
        let h = 1e-5;
        let d = flat_derivs(s, 0, 3);
        let f = |t: f64| (-1.0 / t).exp();
        assert!((d[1] - (f(s + h) - f(s - h)) / (2.0 * h)).abs() < 1e-8);
        assert!((d[2] - (f(s + h) - 2.0 * f(s) + f(s - h)) / (h * h)).abs() < 1e-4);
        assert_eq!(flat_derivs(-0.1, 2, 4), vec![0.0; 4]);
    }

    #[test]
    fn embedding_and_last_coefficient_round_trip() {
        let s = Shape::new(&[1]);
        let t = Tps::var(&s, 0, 3.0);
        let big = s.extended(2);
        let e = t.embed(&big);
        let z = Tps::var(&big, 1, 0.0);
        let w = e * z.clone() * z;
        let back = w.last_var_coeff(2);
        assert_eq!(back.coeffs(), t.coeffs());
    }
}
