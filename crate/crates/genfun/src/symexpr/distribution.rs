//! Distributions: finite combinations of δ-derivatives, Heaviside steps
//! and smooth densities.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Diffeo, SymError};
use crate::smooth::SmoothFn;
use crate::Interval;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionPrim {
    /// `δ_a^{(k)}`: `χ ↦ (-1)^k χ^{(k)}(a)`.
    Delta { order: u32, at: f64 },
    /// `H_a`: `χ ↦ ∫_a^∞ χ`.
    Heaviside { at: f64 },
    /// A smooth density `f`: `χ ↦ ∫ f χ`.
    Smooth { f: SmoothFn },
}

impl DistributionPrim {
    pub fn derivative(&self) -> DistributionPrim {
        match self {
            DistributionPrim::Delta { order, at } => DistributionPrim::Delta { order: order + 1, at: *at },
            DistributionPrim::Heaviside { at } => DistributionPrim::Delta { order: 0, at: *at },
            DistributionPrim::Smooth { f } => DistributionPrim::Smooth { f: f.derivative() },
        }
    }

    pub fn location(&self) -> Option<f64> {
        match self {
            DistributionPrim::Delta { at, .. } | DistributionPrim::Heaviside { at } => Some(*at),
            DistributionPrim::Smooth { .. } => None,
        }
    }
}

/// `Σ c_i u_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub terms: Vec<(f64, DistributionPrim)>,
}

impl Distribution {
    pub fn prim(p: DistributionPrim) -> Distribution {
        Distribution { terms: vec![(1.0, p)] }
    }

    pub fn delta(at: f64) -> Distribution {
        Self::delta_deriv(0, at)
    }

    pub fn delta_deriv(order: u32, at: f64) -> Distribution {
        Self::prim(DistributionPrim::Delta { order, at })
    }

    pub fn heaviside(at: f64) -> Distribution {
        Self::prim(DistributionPrim::Heaviside { at })
    }

    pub fn smooth(f: SmoothFn) -> Distribution {
        Self::prim(DistributionPrim::Smooth { f })
    }

    pub fn zero() -> Distribution {
        Distribution { terms: vec![] }
    }

    pub fn scale(&self, c: f64) -> Distribution {
        Distribution { terms: self.terms.iter().map(|(a, p)| (a * c, p.clone())).collect() }
    }

    pub fn add(&self, o: &Distribution) -> Distribution {
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        Distribution { terms }
    }

    /// Distributional derivative.
    pub fn derivative(&self) -> Distribution {
        Distribution { terms: self.terms.iter().map(|(c, p)| (*c, p.derivative())).collect() }
    }

    pub fn derivative_n(&self, n: u32) -> Distribution {
        (0..n).fold(self.clone(), |d, _| d.derivative())
    }

    /// Locations of point-supported parts and jumps.
    pub fn locations(&self) -> Vec<f64> {
        self.terms.iter().filter_map(|(_, p)| p.location()).collect()
    }

    pub fn check_domain(&self, domain: &Interval) -> Result<(), SymError> {
        for at in self.locations() {
            if !domain.contains(at) {
                return Err(SymError::LocationOutsideDomain { at, lo: domain.lo, hi: domain.hi });
            }
        }
        Ok(())
    }

    /// Distributional pullback `μ* u` along a diffeomorphism onto u's domain.
    pub fn pullback(&self, mu: &Diffeo) -> Result<Distribution, SymError> {
        let mut terms = Vec::new();
        for (c, p) in &self.terms {
            match p {
                DistributionPrim::Smooth { f } => {
                    terms.push((*c, DistributionPrim::Smooth { f: f.substitute(&mu.forward) }));
                }
                DistributionPrim::Heaviside { at } => {
                    let b = mu.inverse.value(*at);
                    if mu.forward_derivative.value(b) > 0.0 {
                        terms.push((*c, DistributionPrim::Heaviside { at: b }));
                    } else {
                        terms.push((*c, DistributionPrim::Smooth { f: SmoothFn::c(1.0) }));
                        terms.push((-*c, DistributionPrim::Heaviside { at: b }));
                    }
                }
                DistributionPrim::Delta { order: 0, at } => {
                    let b = mu.inverse.value(*at);
                    let d = mu.forward_derivative.value(b).abs();
                    terms.push((c / d, DistributionPrim::Delta { order: 0, at: b }));
                }
                DistributionPrim::Delta { .. } => {
                    return Err(SymError::Unsupported(
                        "pullback of derivatives of δ".to_string(),
                    ))
                }
            }
        }
        Ok(Distribution { terms })
    }
}

impl fmt::Display for DistributionPrim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionPrim::Delta { order, at } => {
                write!(f, "delta{}({at})", "'".repeat(*order as usize))
            }
            DistributionPrim::Heaviside { at } => write!(f, "H({at})"),
            DistributionPrim::Smooth { f: g } => write!(f, "smooth({g})"),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (c, p)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if *c == 1.0 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{c}*{p}")?;
            }
        }
        Ok(())
    }
}
