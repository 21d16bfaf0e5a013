//! Locality types and their implication order.
//!
//! A locality type names the data `(φ-part, x-part, ε-part)` on which a
//! representative's value `R(φ)_ε(x)` may depend. `a ⪰ b` ("a is stronger")
//! holds when every `a`-local element is `b`-local, i.e. when the data named
//! by `b` determines the data named by `a`. That is decided by closing the
//! atoms of `b` under the evident derivations (φ and ε give φ_ε, a germ at x
//! gives x and the value at x, and so on) and testing inclusion.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalityError {
    #[error("unrecognized locality type `{0}`")]
    Parse(String),
    #[error("germ components require the x-component to be present")]
    GermWithoutX,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhiComponent {
    /// φ
    FullNet,
    /// φ_ε
    Component,
    /// τ_x φ
    Germ,
    /// τ_x φ_ε
    GermComponent,
    /// φ(x)
    Value,
    /// φ_ε(x)
    ValueComponent,
    Star,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum XComponent {
    X,
    Star,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EpsComponent {
    Eps,
    Star,
}

pub const PHI_COMPONENTS: [PhiComponent; 7] = [
    PhiComponent::FullNet,
    PhiComponent::Component,
    PhiComponent::Germ,
    PhiComponent::GermComponent,
    PhiComponent::Value,
    PhiComponent::ValueComponent,
    PhiComponent::Star,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LocalityType {
    pub phi: PhiComponent,
    pub x: XComponent,
    pub eps: EpsComponent,
}

// Atoms of the data a type names.
const A_PHI: u8 = 1;
const A_PHI_E: u8 = 2;
const A_GERM: u8 = 4;
const A_GERM_E: u8 = 8;
const A_VAL: u8 = 16;
const A_VAL_E: u8 = 32;
const A_X: u8 = 64;
const A_EPS: u8 = 128;

fn closure(mut s: u8) -> u8 {
    const RULES: [(u8, u8); 7] = [
        (A_PHI | A_EPS, A_PHI_E),
        (A_PHI | A_X, A_VAL | A_GERM),
        (A_GERM, A_X | A_VAL),
        (A_GERM | A_EPS, A_GERM_E),
        (A_PHI_E | A_X, A_VAL_E | A_GERM_E),
        (A_GERM_E, A_X | A_VAL_E),
        (A_VAL | A_EPS, A_VAL_E),
    ];
    loop {
        let before = s;
        for (need, give) in RULES {
            if s & need == need {
                s |= give;
            }
        }
        if s == before {
            return s;
        }
    }
}

/// Whether a raw triple is one of the canonical types.
pub fn is_valid(phi: PhiComponent, x: XComponent, _eps: EpsComponent) -> bool {
    !(matches!(phi, PhiComponent::Germ | PhiComponent::GermComponent) && x == XComponent::Star)
}

impl LocalityType {
    pub fn new(phi: PhiComponent, x: XComponent, eps: EpsComponent) -> Result<Self, LocalityError> {
        if is_valid(phi, x, eps) {
            Ok(LocalityType { phi, x, eps })
        } else {
            Err(LocalityError::GermWithoutX)
        }
    }

    /// Like [`LocalityType::new`], mapping germ-without-x triples to x = X.
    pub fn canonical(phi: PhiComponent, x: XComponent, eps: EpsComponent) -> Self {
        let x = if matches!(phi, PhiComponent::Germ | PhiComponent::GermComponent) {
            XComponent::X
        } else {
            x
        };
        LocalityType { phi, x, eps }
    }

    pub const STAR: LocalityType =
        LocalityType { phi: PhiComponent::Star, x: XComponent::Star, eps: EpsComponent::Star };

    /// All 24 canonical types.
    pub fn all() -> &'static [LocalityType] {
        static ALL: OnceLock<Vec<LocalityType>> = OnceLock::new();
        ALL.get_or_init(|| {
            let mut v = Vec::new();
            for phi in PHI_COMPONENTS {
                for x in [XComponent::X, XComponent::Star] {
                    for eps in [EpsComponent::Eps, EpsComponent::Star] {
                        if is_valid(phi, x, eps) {
                            v.push(LocalityType { phi, x, eps });
                        }
                    }
                }
            }
            v
        })
    }

    fn atoms(self) -> u8 {
        let p = match self.phi {
            PhiComponent::FullNet => A_PHI,
            PhiComponent::Component => A_PHI_E,
            PhiComponent::Germ => A_GERM,
            PhiComponent::GermComponent => A_GERM_E,
            PhiComponent::Value => A_VAL,
            PhiComponent::ValueComponent => A_VAL_E,
            PhiComponent::Star => 0,
        };
        let x = if self.x == XComponent::X { A_X } else { 0 };
        let e = if self.eps == EpsComponent::Eps { A_EPS } else { 0 };
        p | x | e
    }

    fn index(self) -> usize {
        LocalityType::all().iter().position(|l| *l == self).expect("canonical type")
    }

    /// `self ⪰ other`: every `self`-local element is `other`-local.
    pub fn stronger_eq(self, other: LocalityType) -> bool {
        let a = self.atoms();
        a & closure(other.atoms()) == a
    }

    /// Greatest lower bound: the strongest type implied by both arguments.
    pub fn combine(self, other: LocalityType) -> LocalityType {
        static TABLE: OnceLock<Vec<LocalityType>> = OnceLock::new();
        let table = TABLE.get_or_init(|| {
            let all = LocalityType::all();
            let mut t = Vec::with_capacity(all.len() * all.len());
            for &a in all {
                for &b in all {
                    t.push(glb(a, b).expect("locality lattice has all meets"));
                }
            }
            t
        });
        table[self.index() * LocalityType::all().len() + other.index()]
    }

    pub fn derivative_transform(self, kind: DerivativeKind) -> LocalityType {
        match kind {
            DerivativeKind::Geometric => self,
            DerivativeKind::Componentwise => {
                let phi = match self.phi {
                    PhiComponent::Value => PhiComponent::Germ,
                    PhiComponent::ValueComponent => PhiComponent::GermComponent,
                    p => p,
                };
                LocalityType::canonical(phi, self.x, self.eps)
            }
        }
    }

    pub fn admissible(self, what: Admissibility) -> bool {
        use EpsComponent as E;
        use PhiComponent as P;
        use XComponent as X;
        match what {
            Admissibility::Iota => {
                LocalityType { phi: P::ValueComponent, x: X::Star, eps: E::Star }.stronger_eq(self)
            }
            Admissibility::Sigma => {
                LocalityType { phi: P::Star, x: X::X, eps: E::Star }.stronger_eq(self)
            }
            Admissibility::IotaTheta => {
                LocalityType { phi: P::Star, x: X::X, eps: E::Eps }.stronger_eq(self)
            }
            Admissibility::Sheaf => {
                self.stronger_eq(LocalityType { phi: P::GermComponent, x: X::X, eps: E::Eps })
            }
        }
    }
}

fn glb(a: LocalityType, b: LocalityType) -> Option<LocalityType> {
    let all = LocalityType::all();
    let lower: Vec<LocalityType> =
        all.iter().copied().filter(|&c| a.stronger_eq(c) && b.stronger_eq(c)).collect();
    lower.iter().copied().find(|&c| lower.iter().all(|&d| c.stronger_eq(d)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeKind {
    Geometric,
    Componentwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Admissibility {
    Iota,
    Sigma,
    IotaTheta,
    Sheaf,
}

/// Implication arrows as drawn in the standard diagram of the 24 types:
/// arrows inside each box, plus the box-to-box arrows expanded to "add one
/// component" edges.
pub fn diagram_arrows() -> Vec<(LocalityType, LocalityType)> {
    use EpsComponent as E;
    use PhiComponent as P;
    use XComponent as X;
    let t = LocalityType::canonical;
    let mut arrows = Vec::new();
    let mut push = |a: LocalityType, b: LocalityType| {
        if a != b && !arrows.contains(&(a, b)) {
            arrows.push((a, b));
        }
    };
    // Box with x and ε.
    for (a, b) in [
        (P::Component, P::FullNet),
        (P::GermComponent, P::Germ),
        (P::ValueComponent, P::Value),
        (P::Value, P::Germ),
        (P::Germ, P::FullNet),
        (P::ValueComponent, P::GermComponent),
        (P::GermComponent, P::Component),
    ] {
        push(t(a, X::X, E::Eps), t(b, X::X, E::Eps));
    }
    // Box with x only.
    for (a, b) in [
        (P::Value, P::Germ),
        (P::Germ, P::FullNet),
        (P::ValueComponent, P::GermComponent),
        (P::GermComponent, P::Component),
    ] {
        push(t(a, X::X, E::Star), t(b, X::X, E::Star));
    }
    // Box with ε only.
    for (a, b) in [(P::Component, P::FullNet), (P::ValueComponent, P::Value)] {
        push(t(a, X::Star, E::Eps), t(b, X::Star, E::Eps));
    }
    // φ-free box.
    push(t(P::Star, X::X, E::Star), t(P::Star, X::X, E::Eps));
    push(t(P::Star, X::Star, E::Eps), t(P::Star, X::X, E::Eps));
    push(t(P::Star, X::Star, E::Star), t(P::Star, X::Star, E::Eps));
    push(t(P::Star, X::Star, E::Star), t(P::Star, X::X, E::Star));
    // Between boxes: ℓ1 is ℓ2 with one component deleted.
    for &l in LocalityType::all() {
        if l.phi != P::Star {
            push(t(P::Star, l.x, l.eps), l);
        }
        if l.x == X::X {
            push(t(l.phi, X::Star, l.eps), l);
        }
        if l.eps == E::Eps {
            push(t(l.phi, l.x, E::Star), l);
        }
    }
    arrows
}

impl fmt::Display for LocalityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<&str> = Vec::new();
        match self.phi {
            PhiComponent::FullNet => parts.push("phi"),
            PhiComponent::Component => parts.push("phi_eps"),
            PhiComponent::Germ => parts.push("tau_x phi"),
            PhiComponent::GermComponent => parts.push("tau_x phi_eps"),
            PhiComponent::Value => parts.push("phi(x)"),
            PhiComponent::ValueComponent => parts.push("phi_eps(x)"),
            PhiComponent::Star => {}
        }
        if self.x == XComponent::X {
            parts.push("x");
        }
        if self.eps == EpsComponent::Eps {
            parts.push("eps");
        }
        match parts.len() {
            0 => write!(f, "star"),
            1 if self.phi == PhiComponent::Star => write!(f, "{}", parts[0]),
            _ => {
                // Full triple when a φ-part is present, with stars filled in.
                if self.phi != PhiComponent::Star {
                    let x = if self.x == XComponent::X { "x" } else { "star" };
                    let e = if self.eps == EpsComponent::Eps { "eps" } else { "star" };
                    write!(f, "({}, {x}, {e})", parts[0])
                } else {
                    write!(f, "({})", parts.join(","))
                }
            }
        }
    }
}

impl FromStr for LocalityType {
    type Err = LocalityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || LocalityError::Parse(s.to_string());
        let inner = s.trim();
        let inner = inner.strip_prefix('(').map(|r| r.strip_suffix(')').unwrap_or(r)).unwrap_or(inner);
        let mut phi = PhiComponent::Star;
        let mut x = XComponent::Star;
        let mut eps = EpsComponent::Star;
        let tokens: Vec<String> = inner
            .split(',')
            .map(|t| t.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|t| !t.is_empty())
            .collect();
        if tokens.is_empty() {
            return Err(err());
        }
        for tok in &tokens {
            match tok.as_str() {
                "star" | "*" => {}
                "x" => x = XComponent::X,
                "eps" | "ε" => eps = EpsComponent::Eps,
                "phi" => phi = PhiComponent::FullNet,
                "phi_eps" => phi = PhiComponent::Component,
                "tau_x phi" | "tau_x(phi)" => phi = PhiComponent::Germ,
                "tau_x phi_eps" | "tau_x(phi_eps)" => phi = PhiComponent::GermComponent,
                "phi(x)" => phi = PhiComponent::Value,
                "phi_eps(x)" => phi = PhiComponent::ValueComponent,
                _ => return Err(err()),
            }
        }
        Ok(LocalityType::canonical(phi, x, eps))
    }
}

impl TryFrom<String> for LocalityType {
    type Error = LocalityError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<LocalityType> for String {
    fn from(l: LocalityType) -> String {
        l.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_pair_has_a_meet() {
        for &a in LocalityType::all() {
            for &b in LocalityType::all() {
                assert!(glb(a, b).is_some(), "{a} {b}");
            }
        }
    }

    #[test]
    fn strings_round_trip() {
        for &l in LocalityType::all() {
            let s = l.to_string();
            assert_eq!(s.parse::<LocalityType>().unwrap(), l, "{s}");
        }
        assert_eq!(LocalityType::STAR.to_string(), "star");
        let xe: LocalityType = "(x,eps)".parse().unwrap();
        assert_eq!(xe.to_string(), "(x,eps)");
        let v: LocalityType = "(phi_eps(x), x, eps)".parse().unwrap();
        assert_eq!(v.to_string(), "(phi_eps(x), x, eps)");
    }
}
