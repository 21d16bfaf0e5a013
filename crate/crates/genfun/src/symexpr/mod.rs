//! Representatives: expression trees `R(φ)_ε(x)` over kernel pairings,
//! smooth functions, `x` and `ε`, with their locality tags.

mod diffeo;
mod distribution;
mod eval;
pub mod pairing;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diffeo::Diffeo;
pub use distribution::{Distribution, DistributionPrim};
pub use eval::{Combo, EvalError, Val};

use crate::locality::{DerivativeKind, EpsComponent as E, LocalityType, PhiComponent as P, XComponent as X};
use crate::points::GeneralizedNumber;
use crate::sheafops::DiagonalCutoff;
use crate::smooth::SmoothFn;
use crate::testobjects::TestObjectFamily;
use crate::Interval;

/// Version of the JSON AST layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymError {
    #[error("location {at} lies outside the domain ({lo}, {hi})")]
    LocationOutsideDomain { at: f64, lo: f64, hi: f64 },
    #[error("domain mismatch: ({}, {}) vs ({}, {})", left.lo, left.hi, right.lo, right.hi)]
    DomainMismatch { left: Interval, right: Interval },
    #[error("locality {found} is not admissible here (needs {needed})")]
    InadmissibleLocality { found: LocalityType, needed: String },
    #[error("invalid diffeomorphism: {0}")]
    InvalidDiffeo(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("schema version {found} does not match {SCHEMA_VERSION}")]
    Schema { found: u32 },
    #[error("malformed representative JSON: {0}")]
    Json(String),
}

/// One chart of a gluing: `weight(x) · part(ρ φ)_ε(x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlueTerm {
    pub weight: SmoothFn,
    pub part: Arc<Representative>,
    pub cutoff: DiagonalCutoff,
}

/// One term of the moment-map gluing:
/// `χ(M(φ_ε(x))) · part(q·φ_ε(x))_ε(anchor)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarTerm {
    pub chi: SmoothFn,
    pub q: SmoothFn,
    pub part: Arc<Representative>,
    pub anchor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Expr {
    /// `∂_x^j ⟨u, φ_ε(x)⟩`.
    Pairing { u: Distribution, j: u32 },
    /// `∂_x^j ⟨u, θ_ε(x)⟩`, ignoring the argument.
    FrozenPairing { u: Distribution, theta: TestObjectFamily, j: u32 },
    Smooth { f: SmoothFn },
    Eps,
    X,
    Const { c: f64 },
    Add { a: Arc<Representative>, b: Arc<Representative> },
    Mul { a: Arc<Representative>, b: Arc<Representative> },
    Neg { a: Arc<Representative> },
    /// `μ*(R(μ_* φ)_ε)`.
    Pullback { inner: Arc<Representative>, map: Diffeo },
    /// `R(ρ_V φ)`.
    Restrict { inner: Arc<Representative>, cutoff: DiagonalCutoff },
    Glue { terms: Vec<GlueTerm> },
    /// `∂_x^{x_order}` of the moment-map gluing.
    GlueStarX { terms: Vec<StarTerm>, x_order: u32 },
    /// `R(θ)`, ignoring the argument.
    Project { inner: Arc<Representative>, theta: TestObjectFamily },
    /// Geometric derivative `-dR(φ)(Dφ) + ∂_x R(φ)`; `dtilde` caches `∂_x R`.
    Lie { inner: Arc<Representative>, dtilde: Arc<Representative> },
    /// A generalized number as a function of `(φ, ε)`.
    Number { z: Arc<GeneralizedNumber> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Representative {
    pub expr: Expr,
    pub locality: LocalityType,
    pub domain: Interval,
}

fn lt(phi: P, x: X, eps: E) -> LocalityType {
    LocalityType::canonical(phi, x, eps)
}

impl Representative {
    fn node(expr: Expr, domain: Interval) -> Representative {
        let locality = infer_locality(&expr);
        Representative { expr, locality, domain }
    }

    /// `ι(u)`.
    pub fn iota(u: Distribution, domain: Interval) -> Result<Representative, SymError> {
        u.check_domain(&domain)?;
        Ok(Self::node(Expr::Pairing { u, j: 0 }, domain))
    }

    /// `σ(f)`.
    pub fn sigma(f: SmoothFn, domain: Interval) -> Representative {
        Self::node(Expr::Smooth { f }, domain)
    }

    /// `ι_θ(u)`.
    pub fn iota_theta(
        u: Distribution,
        theta: TestObjectFamily,
        domain: Interval,
    ) -> Result<Representative, SymError> {
        u.check_domain(&domain)?;
        Ok(Self::node(Expr::FrozenPairing { u, theta, j: 0 }, domain))
    }

    pub fn constant(c: f64, domain: Interval) -> Representative {
        Self::node(Expr::Const { c }, domain)
    }

    pub fn zero(domain: Interval) -> Representative {
        Self::constant(0.0, domain)
    }

    pub fn x(domain: Interval) -> Representative {
        Self::node(Expr::X, domain)
    }

    pub fn eps(domain: Interval) -> Representative {
        Self::node(Expr::Eps, domain)
    }

    /// `ε^k`.
    pub fn eps_pow(k: u32, domain: Interval) -> Representative {
        let mut r = Self::constant(1.0, domain);
        for _ in 0..k {
            r = Self::mul_raw(&r, &Self::eps(domain));
        }
        r
    }

    pub fn number(z: GeneralizedNumber, domain: Interval) -> Representative {
        Self::node(Expr::Number { z: Arc::new(z) }, domain)
    }

    fn same_domain(a: &Representative, b: &Representative) -> Result<(), SymError> {
        if a.domain != b.domain {
            return Err(SymError::DomainMismatch { left: a.domain, right: b.domain });
        }
        Ok(())
    }

    pub fn add(a: &Representative, b: &Representative) -> Result<Representative, SymError> {
        Self::same_domain(a, b)?;
        Ok(Self::node(Expr::Add { a: Arc::new(a.clone()), b: Arc::new(b.clone()) }, a.domain))
    }

    pub fn mul(a: &Representative, b: &Representative) -> Result<Representative, SymError> {
        Self::same_domain(a, b)?;
        Ok(Self::mul_raw(a, b))
    }

    fn mul_raw(a: &Representative, b: &Representative) -> Representative {
        Self::node(Expr::Mul { a: Arc::new(a.clone()), b: Arc::new(b.clone()) }, a.domain)
    }

    pub fn neg(a: &Representative) -> Representative {
        Self::node(Expr::Neg { a: Arc::new(a.clone()) }, a.domain)
    }

    pub fn sub(a: &Representative, b: &Representative) -> Result<Representative, SymError> {
        Self::add(a, &Self::neg(b))
    }

    pub fn scale(&self, c: f64) -> Representative {
        Self::mul_raw(&Self::constant(c, self.domain), self)
    }

    /// Pullback along `μ: domain' → self.domain`.
    pub fn pullback(&self, mu: &Diffeo) -> Result<Representative, SymError> {
        if mu.target != self.domain {
            return Err(SymError::DomainMismatch { left: mu.target, right: self.domain });
        }
        Ok(Self::node(Expr::Pullback { inner: Arc::new(self.clone()), map: mu.clone() }, mu.source))
    }

    /// `R(ρ_V φ)` with the cutoff of `V`, without admissibility checks.
    pub fn with_cutoff(&self, cutoff: DiagonalCutoff, domain: Interval) -> Representative {
        Self::node(Expr::Restrict { inner: Arc::new(self.clone()), cutoff }, domain)
    }

    pub fn glued(terms: Vec<GlueTerm>, domain: Interval) -> Representative {
        Self::node(Expr::Glue { terms }, domain)
    }

    pub fn glued_star_x(terms: Vec<StarTerm>, domain: Interval) -> Representative {
        Self::node(Expr::GlueStarX { terms, x_order: 0 }, domain)
    }

    /// `π_θ R`.
    pub fn project(&self, theta: TestObjectFamily) -> Representative {
        Self::node(Expr::Project { inner: Arc::new(self.clone()), theta }, self.domain)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.expr, Expr::Const { c } if c == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self.expr, Expr::Const { c } if c == 1.0)
    }

    fn add_s(a: Representative, b: Representative) -> Representative {
        if a.is_zero() {
            b
        } else if b.is_zero() {
            a
        } else {
            let d = b.domain;
            Self::node(Expr::Add { a: Arc::new(a), b: Arc::new(b) }, d)
        }
    }

    fn mul_s(a: Representative, b: Representative) -> Representative {
        if a.is_zero() || b.is_zero() {
            Self::zero(a.domain)
        } else if a.is_one() {
            b
        } else if b.is_one() {
            a
        } else {
            let d = b.domain;
            Self::node(Expr::Mul { a: Arc::new(a), b: Arc::new(b) }, d)
        }
    }

    fn neg_s(a: Representative) -> Representative {
        if a.is_zero() {
            a
        } else {
            Self::neg(&a)
        }
    }

    /// `D̃R = ∂_x(R(φ)_ε)`.
    pub fn diff_componentwise(&self) -> Representative {
        let d = self.domain;
        match &self.expr {
            Expr::Pairing { u, j } => Self::node(Expr::Pairing { u: u.clone(), j: j + 1 }, d),
            Expr::FrozenPairing { u, theta, j } => {
                Self::node(Expr::FrozenPairing { u: u.clone(), theta: theta.clone(), j: j + 1 }, d)
            }
            Expr::Smooth { f } => {
                let g = f.derivative();
                match g {
                    SmoothFn::Const(c) => Self::constant(c, d),
                    g => Self::sigma(g, d),
                }
            }
            Expr::X => Self::constant(1.0, d),
            Expr::Eps | Expr::Const { .. } | Expr::Number { .. } => Self::zero(d),
            Expr::Add { a, b } => Self::add_s(a.diff_componentwise(), b.diff_componentwise()),
            Expr::Neg { a } => Self::neg_s(a.diff_componentwise()),
            Expr::Mul { a, b } => Self::add_s(
                Self::mul_s(a.diff_componentwise(), (**b).clone()),
                Self::mul_s((**a).clone(), b.diff_componentwise()),
            ),
            Expr::Pullback { inner, map } => {
                let di = inner.diff_componentwise();
                if di.is_zero() {
                    return Self::zero(d);
                }
                let pb = Self::node(Expr::Pullback { inner: Arc::new(di), map: map.clone() }, d);
                Self::mul_s(Self::sigma(map.forward_derivative.clone(), d), pb)
            }
            Expr::Restrict { inner, cutoff } => {
                let di = inner.diff_componentwise();
                if di.is_zero() {
                    return Self::zero(d);
                }
                Self::node(Expr::Restrict { inner: Arc::new(di), cutoff: cutoff.clone() }, d)
            }
            Expr::Glue { terms } => {
                let mut out = Vec::with_capacity(2 * terms.len());
                for t in terms {
                    let w = t.weight.derivative();
                    if !w.is_const(0.0) {
                        out.push(GlueTerm { weight: w, part: t.part.clone(), cutoff: t.cutoff.clone() });
                    }
                    let dp = t.part.diff_componentwise();
                    if !dp.is_zero() {
                        out.push(GlueTerm {
                            weight: t.weight.clone(),
                            part: Arc::new(dp),
                            cutoff: t.cutoff.clone(),
                        });
                    }
                }
                if out.is_empty() {
                    Self::zero(d)
                } else {
                    Self::glued(out, d)
                }
            }
            Expr::GlueStarX { terms, x_order } => {
                Self::node(Expr::GlueStarX { terms: terms.clone(), x_order: x_order + 1 }, d)
            }
            Expr::Project { inner, theta } => {
                let di = inner.diff_componentwise();
                if di.is_zero() {
                    return Self::zero(d);
                }
                Self::node(Expr::Project { inner: Arc::new(di), theta: theta.clone() }, d)
            }
            Expr::Lie { dtilde, .. } => Self::lie(dtilde),
        }
    }

    /// `D̂R`: a derivation extending the distributional derivative via `ι`.
    pub fn diff_geometric(&self) -> Representative {
        let d = self.domain;
        match &self.expr {
            Expr::Pairing { u, j } => Self::node(Expr::Pairing { u: u.derivative(), j: *j }, d),
            Expr::FrozenPairing { .. } | Expr::Smooth { .. } | Expr::X | Expr::Eps | Expr::Const { .. } => {
                self.diff_componentwise()
            }
            Expr::Add { a, b } => Self::add_s(a.diff_geometric(), b.diff_geometric()),
            Expr::Neg { a } => Self::neg_s(a.diff_geometric()),
            Expr::Mul { a, b } => Self::add_s(
                Self::mul_s(a.diff_geometric(), (**b).clone()),
                Self::mul_s((**a).clone(), b.diff_geometric()),
            ),
            Expr::Project { .. } => self.diff_componentwise(),
            _ => Self::lie(self),
        }
    }

    /// The geometric derivative as an evaluated node.
    pub fn lie(r: &Representative) -> Representative {
        let dt = r.diff_componentwise();
        Self::node(Expr::Lie { inner: Arc::new(r.clone()), dtilde: Arc::new(dt) }, r.domain)
    }

    pub fn diff_componentwise_n(&self, n: u32) -> Representative {
        (0..n).fold(self.clone(), |r, _| r.diff_componentwise())
    }

    /// Points where the representative's dependence on `x` has features
    /// (point masses, jumps), used to refine sampling grids.
    pub fn features(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_features(&mut out);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }

    fn collect_features(&self, out: &mut Vec<f64>) {
        match &self.expr {
            Expr::Pairing { u, .. } | Expr::FrozenPairing { u, .. } => out.extend(u.locations()),
            Expr::Add { a, b } | Expr::Mul { a, b } => {
                a.collect_features(out);
                b.collect_features(out);
            }
            Expr::Neg { a } => a.collect_features(out),
            Expr::Pullback { inner, map } => {
                let mut v = Vec::new();
                inner.collect_features(&mut v);
                out.extend(v.into_iter().map(|p| map.inverse.value(p)));
            }
            Expr::Restrict { inner, .. } | Expr::Project { inner, .. } | Expr::Lie { inner, .. } => {
                inner.collect_features(out)
            }
            Expr::Glue { terms } => terms.iter().for_each(|t| t.part.collect_features(out)),
            Expr::GlueStarX { terms, .. } => terms.iter().for_each(|t| t.part.collect_features(out)),
            _ => {}
        }
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        1 + match &self.expr {
            Expr::Add { a, b } | Expr::Mul { a, b } => a.size() + b.size(),
            Expr::Neg { a } => a.size(),
            Expr::Pullback { inner, .. }
            | Expr::Restrict { inner, .. }
            | Expr::Project { inner, .. }
            | Expr::Lie { inner, .. } => inner.size(),
            Expr::Glue { terms } => terms.iter().map(|t| t.part.size()).sum(),
            Expr::GlueStarX { terms, .. } => terms.iter().map(|t| t.part.size()).sum(),
            _ => 0,
        }
    }

    /// Versioned JSON AST.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "schema": SCHEMA_VERSION, "representative": self })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Representative, SymError> {
        let found = v.get("schema").and_then(|s| s.as_u64()).unwrap_or(0) as u32;
        if found != SCHEMA_VERSION {
            return Err(SymError::Schema { found });
        }
        let r = v.get("representative").ok_or_else(|| SymError::Json("missing body".into()))?;
        serde_json::from_value(r.clone()).map_err(|e| SymError::Json(e.to_string()))
    }
}

/// Bottom-up locality tag of a node.
fn infer_locality(expr: &Expr) -> LocalityType {
    match expr {
        Expr::Pairing { j: 0, .. } => lt(P::ValueComponent, X::Star, E::Star),
        Expr::Pairing { .. } => lt(P::GermComponent, X::X, E::Star),
        Expr::FrozenPairing { .. } | Expr::Project { .. } => lt(P::Star, X::X, E::Eps),
        Expr::Smooth { .. } | Expr::X => lt(P::Star, X::X, E::Star),
        Expr::Eps => lt(P::Star, X::Star, E::Eps),
        Expr::Const { .. } => LocalityType::STAR,
        Expr::Add { a, b } | Expr::Mul { a, b } => a.locality.combine(b.locality),
        Expr::Neg { a } => a.locality,
        Expr::Pullback { inner, .. } | Expr::Restrict { inner, .. } | Expr::Lie { inner, .. } => {
            inner.locality
        }
        Expr::Glue { terms } => terms
            .iter()
            .fold(lt(P::Star, X::X, E::Star), |acc, t| acc.combine(t.part.locality)),
        Expr::GlueStarX { x_order, .. } => {
            let base = lt(P::ValueComponent, X::Star, E::Eps);
            if *x_order == 0 {
                base
            } else {
                base.derivative_transform(DerivativeKind::Componentwise)
            }
        }
        Expr::Number { z } => z.locality(),
    }
}

impl fmt::Display for Representative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.expr {
            Expr::Pairing { u, j } => match j {
                0 => write!(f, "iota({u})"),
                j => write!(f, "dx{j}(iota({u}))"),
            },
            Expr::FrozenPairing { u, theta, j } => match j {
                0 => write!(f, "iota_theta({u}; {})", theta.id),
                j => write!(f, "dx{j}(iota_theta({u}; {}))", theta.id),
            },
            Expr::Smooth { f: g } => write!(f, "sigma({g})"),
            Expr::Eps => write!(f, "eps"),
            Expr::X => write!(f, "x"),
            Expr::Const { c } => write!(f, "{c}"),
            Expr::Add { a, b } => write!(f, "add({a}, {b})"),
            Expr::Mul { a, b } => write!(f, "mul({a}, {b})"),
            Expr::Neg { a } => write!(f, "neg({a})"),
            Expr::Pullback { inner, map } => write!(f, "pullback({inner}, mu={})", map.forward),
            Expr::Restrict { inner, cutoff } => {
                write!(f, "restrict({inner}, ({}, {}))", cutoff.lo, cutoff.hi)
            }
            Expr::Glue { terms } => write!(f, "glue[{} terms]", terms.len()),
            Expr::GlueStarX { terms, x_order } => {
                write!(f, "glue_star_x[{} terms, dx{x_order}]", terms.len())
            }
            Expr::Project { inner, theta } => write!(f, "project({inner}; {})", theta.id),
            Expr::Lie { inner, .. } => write!(f, "dhat({inner})"),
            Expr::Number { .. } => write!(f, "number"),
        }
    }
}
