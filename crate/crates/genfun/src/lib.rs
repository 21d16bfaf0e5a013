//! Nonlinear generalized functions on open intervals.
//!
//! Representatives are expression trees evaluated on smoothing-kernel
//! families; moderateness, negligibility and association are decided from
//! fitted ε-asymptotics over finite batteries of test objects.

pub mod locality;
pub mod points;
pub mod quad;
pub mod quotient;
pub mod scalar;
pub mod sharp;
pub mod sheafops;
pub mod smooth;
pub mod symexpr;
pub mod testobjects;

use serde::{Deserialize, Serialize};

/// Open interval `(lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn contains_interval(&self, o: &Interval) -> bool {
        o.lo >= self.lo && o.hi <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Closed subinterval of relative size `frac` around the middle.
    pub fn middle(&self, frac: f64) -> (f64, f64) {
        let h = 0.5 * frac * self.width();
        (self.mid() - h, self.mid() + h)
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval { lo: -2.0, hi: 2.0 }
    }
}
