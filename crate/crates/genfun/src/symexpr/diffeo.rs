//! Diffeomorphisms between open intervals.

use serde::{Deserialize, Serialize};

use super::SymError;
use crate::smooth::SmoothFn;
use crate::Interval;

/// `μ: source → target` with its inverse and derivatives as expressions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diffeo {
    pub forward: SmoothFn,
    pub inverse: SmoothFn,
    pub forward_derivative: SmoothFn,
    inverse_derivative: SmoothFn,
    pub source: Interval,
    pub target: Interval,
}

const CHECK_POINTS: usize = 101;

impl Diffeo {
    /// Builds and validates `μ`. Without an explicit inverse, the inverse is
    /// solved by Newton iteration (exact on Taylor jets as well).
    pub fn new(
        forward: SmoothFn,
        inverse: Option<SmoothFn>,
        source: Interval,
        target: Interval,
    ) -> Result<Diffeo, SymError> {
        let forward_derivative = forward.derivative();
        let inverse = inverse.unwrap_or_else(|| SmoothFn::InverseOf {
            forward: Box::new(forward.clone()),
            deriv: Box::new(forward_derivative.clone()),
            lo: source.lo,
            hi: source.hi,
        });
        let inverse_derivative = inverse.derivative();
        let d = Diffeo { forward, inverse, forward_derivative, inverse_derivative, source, target };
        d.check()?;
        Ok(d)
    }

    pub fn identity(domain: Interval) -> Diffeo {
        Diffeo {
            forward: SmoothFn::x(),
            inverse: SmoothFn::x(),
            forward_derivative: SmoothFn::c(1.0),
            inverse_derivative: SmoothFn::c(1.0),
            source: domain,
            target: domain,
        }
    }

    pub fn inverse_derivative(&self) -> &SmoothFn {
        &self.inverse_derivative
    }

    /// Round trip, nonvanishing derivative and image on a sample grid.
    pub fn check(&self) -> Result<(), SymError> {
        let bad = |msg: String| Err(SymError::InvalidDiffeo(msg));
        let mut sign = 0.0;
        for i in 1..CHECK_POINTS {
            let x = self.source.lo + self.source.width() * i as f64 / CHECK_POINTS as f64;
            let y = self.forward.value(x);
            if !self.target.contains(y) {
                return bad(format!("μ({x}) = {y} lies outside the target"));
            }
            let back = self.inverse.value(y);
            if (back - x).abs() > 1e-9 {
                return bad(format!("inverse(forward({x})) = {back}"));
            }
            let d = self.forward_derivative.value(x);
            if d == 0.0 || (sign != 0.0 && d.signum() != sign) {
                return bad(format!("derivative vanishes or changes sign near {x}"));
            }
            sign = d.signum();
        }
        Ok(())
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Diffeo) -> Result<Diffeo, SymError> {
        if inner.target != self.source {
            return Err(SymError::DomainMismatch {
                left: inner.target,
                right: self.source,
            });
        }
        let forward = self.forward.substitute(&inner.forward);
        let inverse = inner.inverse.substitute(&self.inverse);
        let forward_derivative =
            self.forward_derivative.substitute(&inner.forward) * inner.forward_derivative.clone();
        let inverse_derivative =
            inner.inverse_derivative.substitute(&self.inverse) * self.inverse_derivative.clone();
        let d = Diffeo {
            forward,
            inverse,
            forward_derivative,
            inverse_derivative,
            source: inner.source,
            target: self.target,
        };
        d.check()?;
        Ok(d)
    }
}
