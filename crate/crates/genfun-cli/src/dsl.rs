//! Expression language.
//!
//! ```text
//! expr  = call | number | ident ;
//! call  = ident "(" [ expr { "," expr } ] ")" ;
//! ident = letter { letter | digit | "_" | "'" } ;
//! ```
//!
//! The same syntax is read in three contexts: representatives, distributions
//! and smooth functions. Primitives per context:
//!
//! - representative: `iota(D)`, `iota_theta(D)`, `sigma(F)`, `x`, `eps`,
//!   `eps_pow(k)`, numbers, `add`, `sub`, `mul` (any arity >= 2 for add/mul),
//!   `neg`, `scale(c, R)`, `dtilde(R)`, `dhat(R)`, `lie(R)`,
//!   `pullback(R, F [, Finv], lo, hi)`, `restrict(R, lo, hi)`
//! - distribution: `delta(a)`, `delta'(a)`, `delta''(a)`, `ddelta(k, a)`,
//!   `H(a)`, `smooth(F)`, `add`, `sub`, `neg`, `scale(c, D)`, `diff(D)`, `0`
//! - smooth function: `x`, numbers, `sin`, `cos`, `exp`, `add`, `sub`, `mul`,
//!   `div`, `neg`, `pow(F, n)`, `bump(F)`; a caller may rename the variable
//!   (point paths use `eps`).

use genfun::smooth::SmoothFn;
use genfun::symexpr::{Diffeo, Distribution, Representative, SymError};
use genfun::testobjects::{Schedule, TestObjectFamily};
use genfun::{sheafops, Interval};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown {context} primitive `{name}` at {pos}")]
    Unknown { name: String, context: &'static str, pos: usize },
    #[error("`{name}` at {pos} expects {expected} arguments, got {got}")]
    Arity { name: String, pos: usize, expected: String, got: usize },
    #[error("at {pos}: {source}")]
    Domain { pos: usize, source: SymError },
    #[error("at {pos}: {msg}")]
    Invalid { pos: usize, msg: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { pos, .. }
            | ParseError::Unknown { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::Domain { pos, .. }
            | ParseError::Invalid { pos, .. } => *pos,
        }
    }
}

/// Untyped syntax tree with byte offsets.
#[derive(Clone, Debug, PartialEq)]
pub enum Syntax {
    Num { value: f64, pos: usize },
    Call { name: String, args: Vec<Syntax>, pos: usize, parens: bool },
}

impl Syntax {
    pub fn pos(&self) -> usize {
        match self {
            Syntax::Num { pos, .. } | Syntax::Call { pos, .. } => *pos,
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.i < self.src.len() && self.src[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.i).copied()
    }

    fn expr(&mut self) -> Result<Syntax, ParseError> {
        let pos = {
            self.skip_ws();
            self.i
        };
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'-' || c == b'+' || c == b'.' => self.number(pos),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.i;
                while self.i < self.src.len()
                    && (self.src[self.i].is_ascii_alphanumeric() || matches!(self.src[self.i], b'_' | b'\''))
                {
                    self.i += 1;
                }
                let name = String::from_utf8_lossy(&self.src[start..self.i]).into_owned();
                if self.peek() != Some(b'(') {
                    return Ok(Syntax::Call { name, args: vec![], pos, parens: false });
                }
                self.i += 1;
                let mut args = Vec::new();
                if self.peek() == Some(b')') {
                    self.i += 1;
                    return Ok(Syntax::Call { name, args, pos, parens: true });
                }
                loop {
                    args.push(self.expr()?);
                    match self.peek() {
                        Some(b',') => self.i += 1,
                        Some(b')') => {
                            self.i += 1;
                            break;
                        }
                        Some(c) => {
                            return Err(ParseError::Syntax {
                                pos: self.i,
                                msg: format!("expected `,` or `)`, found `{}`", c as char),
                            })
                        }
                        None => return Err(ParseError::Syntax { pos: self.i, msg: "unclosed `(`".into() }),
                    }
                }
                Ok(Syntax::Call { name, args, pos, parens: true })
            }
            Some(c) => Err(ParseError::Syntax { pos, msg: format!("unexpected `{}`", c as char) }),
            None => Err(ParseError::Syntax { pos, msg: "unexpected end of input".into() }),
        }
    }

    fn number(&mut self, pos: usize) -> Result<Syntax, ParseError> {
        let start = self.i;
        let mut prev = 0u8;
        while self.i < self.src.len() {
            let c = self.src[self.i];
            let sign_ok = (c == b'-' || c == b'+') && (self.i == start || prev == b'e' || prev == b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || sign_ok {
                prev = c;
                self.i += 1;
            } else {
                break;
            }
        }
        let text = String::from_utf8_lossy(&self.src[start..self.i]);
        text.parse::<f64>()
            .map(|value| Syntax::Num { value, pos })
            .map_err(|_| ParseError::Syntax { pos, msg: format!("malformed number `{text}`") })
    }
}

pub fn parse_syntax(text: &str) -> Result<Syntax, ParseError> {
    let mut p = Parser { src: text.as_bytes(), i: 0 };
    let e = p.expr()?;
    if let Some(c) = p.peek() {
        return Err(ParseError::Syntax { pos: p.i, msg: format!("trailing input starting with `{}`", c as char) });
    }
    Ok(e)
}

fn arity(name: &str, pos: usize, args: &[Syntax], ok: impl Fn(usize) -> bool, expected: &str) -> Result<(), ParseError> {
    if ok(args.len()) {
        Ok(())
    } else {
        Err(ParseError::Arity { name: name.to_string(), pos, expected: expected.to_string(), got: args.len() })
    }
}

fn number(s: &Syntax) -> Result<f64, ParseError> {
    match s {
        Syntax::Num { value, .. } => Ok(*value),
        other => Err(ParseError::Invalid { pos: other.pos(), msg: "expected a number".into() }),
    }
}

/// Smooth function in the variable `var`.
pub fn smooth_fn(s: &Syntax, var: &str) -> Result<SmoothFn, ParseError> {
    let (name, args, pos) = match s {
        Syntax::Num { value, .. } => return Ok(SmoothFn::c(*value)),
        Syntax::Call { name, args, pos, .. } => (name.as_str(), args, *pos),
    };
    if name == var && args.is_empty() {
        return Ok(SmoothFn::x());
    }
    let sub: Vec<SmoothFn> = match name {
        "pow" => vec![],
        _ => args.iter().map(|a| smooth_fn(a, var)).collect::<Result<_, _>>()?,
    };
    let one = |sub: Vec<SmoothFn>| -> Result<SmoothFn, ParseError> {
        arity(name, pos, args, |n| n == 1, "1")?;
        Ok(sub.into_iter().next().unwrap())
    };
    match name {
        "sin" => Ok(one(sub)?.sin()),
        "cos" => Ok(one(sub)?.cos()),
        "exp" => Ok(one(sub)?.exp()),
        "bump" => Ok(SmoothFn::bump(one(sub)?)),
        "neg" => Ok(-one(sub)?),
        "add" | "mul" => {
            arity(name, pos, args, |n| n >= 2, "at least 2")?;
            let mut it = sub.into_iter();
            let first = it.next().unwrap();
            Ok(it.fold(first, |a, b| if name == "add" { a + b } else { a * b }))
        }
        "sub" | "div" => {
            arity(name, pos, args, |n| n == 2, "2")?;
            let mut it = sub.into_iter();
            let (a, b) = (it.next().unwrap(), it.next().unwrap());
            Ok(if name == "sub" { a - b } else { a.div(b) })
        }
        "pow" => {
            arity(name, pos, args, |n| n == 2, "2")?;
            let n = number(&args[1])?;
            if n.fract() != 0.0 {
                return Err(ParseError::Invalid { pos: args[1].pos(), msg: "exponent must be an integer".into() });
            }
            Ok(smooth_fn(&args[0], var)?.powi(n as i32))
        }
        _ => Err(ParseError::Unknown { name: name.to_string(), context: "smooth function", pos }),
    }
}

pub fn distribution(s: &Syntax) -> Result<Distribution, ParseError> {
    let (name, args, pos) = match s {
        Syntax::Num { value, .. } if *value == 0.0 => return Ok(Distribution::zero()),
        Syntax::Num { pos, .. } => {
            return Err(ParseError::Invalid { pos: *pos, msg: "use smooth(c) for a constant distribution".into() })
        }
        Syntax::Call { name, args, pos, .. } => (name.as_str(), args, *pos),
    };
    if let Some(primes) = name.strip_prefix("delta") {
        if primes.chars().all(|c| c == '\'') {
            arity(name, pos, args, |n| n == 1, "1")?;
            return Ok(Distribution::delta_deriv(primes.len() as u32, number(&args[0])?));
        }
    }
    match name {
        "ddelta" => {
            arity(name, pos, args, |n| n == 2, "2")?;
            let k = number(&args[0])?;
            if k < 0.0 || k.fract() != 0.0 {
                return Err(ParseError::Invalid { pos: args[0].pos(), msg: "derivative order must be a natural number".into() });
            }
            Ok(Distribution::delta_deriv(k as u32, number(&args[1])?))
        }
        "H" | "heaviside" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Ok(Distribution::heaviside(number(&args[0])?))
        }
        "smooth" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Ok(Distribution::smooth(smooth_fn(&args[0], "x")?))
        }
        "add" => {
            arity(name, pos, args, |n| n >= 2, "at least 2")?;
            let mut acc = distribution(&args[0])?;
            for a in &args[1..] {
                acc = acc.add(&distribution(a)?);
            }
            Ok(acc)
        }
        "sub" => {
            arity(name, pos, args, |n| n == 2, "2")?;
            Ok(distribution(&args[0])?.add(&distribution(&args[1])?.scale(-1.0)))
        }
        "neg" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Ok(distribution(&args[0])?.scale(-1.0))
        }
        "scale" => {
            arity(name, pos, args, |n| n == 2, "2")?;
            Ok(distribution(&args[1])?.scale(number(&args[0])?))
        }
        "diff" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Ok(distribution(&args[0])?.derivative())
        }
        _ => Err(ParseError::Unknown { name: name.to_string(), context: "distribution", pos }),
    }
}

fn sym(pos: usize) -> impl Fn(SymError) -> ParseError {
    move |source| ParseError::Domain { pos, source }
}

fn interval(args: &[Syntax], pos: usize) -> Result<Interval, ParseError> {
    let (lo, hi) = (number(&args[0])?, number(&args[1])?);
    if !(lo < hi) {
        return Err(ParseError::Invalid { pos, msg: format!("empty interval ({lo}, {hi})") });
    }
    Ok(Interval::new(lo, hi))
}

/// Representative on `domain`; `theta` is used by `iota_theta`.
pub fn representative(s: &Syntax, domain: Interval, theta: &TestObjectFamily) -> Result<Representative, ParseError> {
    let (name, args, pos) = match s {
        Syntax::Num { value, .. } => return Ok(Representative::constant(*value, domain)),
        Syntax::Call { name, args, pos, .. } => (name.as_str(), args.as_slice(), *pos),
    };
    let rec = |a: &Syntax| representative(a, domain, theta);
    match name {
        "x" if args.is_empty() => Ok(Representative::x(domain)),
        "eps" if args.is_empty() => Ok(Representative::eps(domain)),
        "eps_pow" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            let k = number(&args[0])?;
            if k < 0.0 || k.fract() != 0.0 {
                return Err(ParseError::Invalid { pos: args[0].pos(), msg: "power must be a natural number".into() });
            }
            Ok(Representative::eps_pow(k as u32, domain))
        }
        "iota" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Representative::iota(distribution(&args[0])?, domain).map_err(sym(pos))
        }
        "iota_theta" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Representative::iota_theta(distribution(&args[0])?, theta.clone(), domain).map_err(sym(pos))
        }
        "sigma" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Ok(Representative::sigma(smooth_fn(&args[0], "x")?, domain))
        }
        "add" | "mul" => {
            arity(name, pos, args, |n| n >= 2, "at least 2")?;
            let mut acc = rec(&args[0])?;
            for a in &args[1..] {
                let b = rec(a)?;
                acc = if name == "add" { Representative::add(&acc, &b) } else { Representative::mul(&acc, &b) }
                    .map_err(sym(a.pos()))?;
            }
            Ok(acc)
        }
        "sub" => {
            arity(name, pos, args, |n| n == 2, "2")?;
            Representative::sub(&rec(&args[0])?, &rec(&args[1])?).map_err(sym(pos))
        }
        "neg" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Ok(Representative::neg(&rec(&args[0])?))
        }
        "scale" => {
            arity(name, pos, args, |n| n == 2, "2")?;
            Ok(rec(&args[1])?.scale(number(&args[0])?))
        }
        "dtilde" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Ok(rec(&args[0])?.diff_componentwise())
        }
        "dhat" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Ok(rec(&args[0])?.diff_geometric())
        }
        "lie" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Ok(Representative::lie(&rec(&args[0])?))
        }
        "pullback" => {
            arity(name, pos, args, |n| n == 4 || n == 5, "4 or 5")?;
            let inner = rec(&args[0])?;
            let forward = smooth_fn(&args[1], "x")?;
            let (inverse, rest) = if args.len() == 5 { (Some(smooth_fn(&args[2], "x")?), &args[3..]) } else { (None, &args[2..]) };
            let source = interval(rest, pos)?;
            let mu = Diffeo::new(forward, inverse, source, inner.domain).map_err(sym(pos))?;
            inner.pullback(&mu).map_err(sym(pos))
        }
        "restrict" => {
            arity(name, pos, args, |n| n == 3, "3")?;
            let inner = rec(&args[0])?;
            let v = interval(&args[1..], pos)?;
            sheafops::restrict(&inner, v).map_err(|e| ParseError::Invalid { pos, msg: e.to_string() })
        }
        _ => Err(ParseError::Unknown { name: name.to_string(), context: "representative", pos }),
    }
}

pub fn parse_expr(text: &str, domain: Interval, theta: &TestObjectFamily) -> Result<Representative, ParseError> {
    representative(&parse_syntax(text)?, domain, theta)
}

/// Test-object family: `base`, `dilated(s)`, `fixed(m)`, `modulated(seed)`,
/// `difference(A, B [, q])`, `shifted(A, Z, s)`.
pub fn family(s: &Syntax, schedule: Schedule) -> Result<TestObjectFamily, ParseError> {
    let (name, args, pos) = match s {
        Syntax::Num { pos, .. } => return Err(ParseError::Invalid { pos: *pos, msg: "expected a family".into() }),
        Syntax::Call { name, args, pos, .. } => (name.as_str(), args.as_slice(), *pos),
    };
    let nat = |a: &Syntax| -> Result<u64, ParseError> {
        let v = number(a)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(ParseError::Invalid { pos: a.pos(), msg: "expected a natural number".into() });
        }
        Ok(v as u64)
    };
    match name {
        "base" => Ok(TestObjectFamily::base(schedule)),
        "dilated" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            let s = number(&args[0])?;
            if !(s > 0.0) {
                return Err(ParseError::Invalid { pos, msg: "dilation must be positive".into() });
            }
            Ok(TestObjectFamily::dilated(schedule, s))
        }
        "fixed" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Ok(TestObjectFamily::fixed_order(nat(&args[0])? as u32))
        }
        "modulated" => {
            arity(name, pos, args, |n| n == 1, "1")?;
            Ok(TestObjectFamily::modulated(schedule, nat(&args[0])?))
        }
        "difference" => {
            arity(name, pos, args, |n| n == 2 || n == 3, "2 or 3")?;
            let q = if args.len() == 3 { number(&args[2])? } else { 0.0 };
            Ok(TestObjectFamily::difference(&family(&args[0], schedule)?, &family(&args[1], schedule)?, q))
        }
        "shifted" => {
            arity(name, pos, args, |n| n == 3, "3")?;
            Ok(TestObjectFamily::shifted(&family(&args[0], schedule)?, &family(&args[1], schedule)?, number(&args[2])?))
        }
        _ => Err(ParseError::Unknown { name: name.to_string(), context: "test object", pos }),
    }
}

pub fn parse_family(text: &str, schedule: Schedule) -> Result<TestObjectFamily, ParseError> {
    family(&parse_syntax(text)?, schedule)
}
