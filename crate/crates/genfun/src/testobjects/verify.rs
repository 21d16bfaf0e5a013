//! Empirical checks of the four test-object conditions on a probe battery,
//! and uniform sets of test objects.
//!
//! Test objects: (i) `⟨Φ_ε u, χ⟩ → ⟨u, χ⟩`, (ii) `Φ_ε u` polynomially
//! bounded, (iii) `⟨f, φ_ε(x)⟩ - f(x)` decays faster than the target
//! order on smooth `f`, (iv) support radius shrinks with ε.
//! 0-test objects replace the limits in (i) and (iii) by zero.

use serde::{Deserialize, Serialize};

use crate::quad::{adaptive_simpson_breaks, clean_breaks, composite_nodes};
use crate::quotient::{collect_rows, default_probes, growth_exponent, ROUNDING, Battery, EpsGrid, RepresentativeNet, Seminorm};
use crate::smooth::SmoothFn;
use crate::symexpr::pairing::pair;
use crate::symexpr::{Distribution, DistributionPrim, Representative};
use crate::testobjects::{Family, FamilyKind, Schedule, TestObjectFamily};
use crate::Interval;

/// Probe distributions, probe test functions and smooth probe functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probes {
    pub distributions: Vec<(String, Distribution)>,
    pub test_functions: Vec<(String, SmoothFn)>,
    pub smooth: Vec<(String, SmoothFn)>,
}

impl Probes {
    /// `δ₀, δ₀', δ₀'', H₀, sin`; two bumps; `sin, x³, exp`.
    pub fn standard(domain: Interval) -> Probes {
        let c = domain.mid();
        let x = SmoothFn::x();
        let distributions = vec![
            ("delta".to_string(), Distribution::delta(c)),
            ("delta'".to_string(), Distribution::delta_deriv(1, c)),
            ("delta''".to_string(), Distribution::delta_deriv(2, c)),
            ("H".to_string(), Distribution::heaviside(c)),
            ("sin".to_string(), Distribution::smooth(x.clone().sin())),
        ];
        let test_functions =
            default_probes(domain).into_iter().enumerate().map(|(i, f)| (format!("chi{i}"), f)).collect();
        let smooth = vec![
            ("sin".to_string(), x.clone().sin()),
            ("x^3".to_string(), x.clone().powi(3)),
            ("exp".to_string(), x.exp()),
        ];
        Probes { distributions, test_functions, smooth }
    }

    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "distributions": self.distributions.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
            "test_functions": self.test_functions.iter().map(|(n, f)| format!("{n} = {f}")).collect::<Vec<_>>(),
            "smooth": self.smooth.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub grid: EpsGrid,
    pub domain: Interval,
    /// Compact used for the sup seminorms and the support table.
    pub compact: (f64, f64),
    pub max_alpha: u32,
    /// Condition (iii) requires every smooth-probe slope to reach this.
    pub order: f64,
    /// Condition (ii) requires every slope to stay above `-n_max`.
    pub n_max: f64,
    /// Condition (i): final pairing error bound.
    pub conv_tol: f64,
    pub r2_min: f64,
}

impl VerifyConfig {
    pub fn standard(domain: Interval) -> VerifyConfig {
        VerifyConfig {
            grid: EpsGrid::default(),
            domain,
            compact: domain.middle(0.5),
            max_alpha: 2,
            order: 3.0,
            n_max: 12.0,
            conv_tol: 1e-3,
            r2_min: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionResult {
    pub condition: String,
    pub passed: bool,
    /// The deciding number: final error, worst slope or final radius.
    pub measured: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub family: serde_json::Value,
    pub kind: FamilyKind,
    pub passed: bool,
    pub conditions: Vec<ConditionResult>,
    pub probes: serde_json::Value,
    pub config: VerifyConfig,
    /// `(ε, condition, measured value)`.
    pub samples: Vec<(f64, String, f64)>,
}

impl VerificationReport {
    pub fn condition(&self, name: &str) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.condition == name)
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("eps,condition,value\n");
        for (e, c, v) in &self.samples {
            s.push_str(&format!("{e:e},{c},{v:e}\n"));
        }
        s
    }
}

fn uniform_breaks(a: f64, b: f64) -> Vec<f64> {
    (0..=32).map(|i| a + (b - a) * i as f64 / 32.0).collect()
}

/// `⟨u, χ⟩` for a probe distribution and a probe test function.
pub fn distribution_action(u: &Distribution, chi: &SmoothFn, domain: Interval) -> f64 {
    let mut total = 0.0;
    for (c, p) in &u.terms {
        let v = match p {
            DistributionPrim::Delta { order, at } => {
                let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
                let mut d = chi.clone();
                for _ in 0..*order {
                    d = d.derivative();
                }
                sign * d.value(*at)
            }
            DistributionPrim::Heaviside { at } => {
                adaptive_simpson_breaks(|x| chi.value(x), &uniform_breaks(*at, domain.hi), 1e-13, 40)
                    .unwrap_or(f64::NAN)
            }
            DistributionPrim::Smooth { f } => adaptive_simpson_breaks(
                |x| f.value(x) * chi.value(x),
                &uniform_breaks(domain.lo, domain.hi),
                1e-13,
                40,
            )
            .unwrap_or(f64::NAN),
        };
        total += c * v;
    }
    total
}

/// `∫ ⟨u, φ_ε(x)⟩ χ(x) dx` on composite Gauss–Legendre panels refined at
/// the scale ε around the singular support of `u`, with the rounding level
/// of the sum.
pub fn regularized_action(u: &Distribution, fam: &Family, chi: &SmoothFn, eps: f64, domain: Interval) -> (f64, f64) {
    let mut br = Vec::new();
    let n = 16;
    for i in 1..n {
        br.push(domain.lo + domain.width() * i as f64 / n as f64);
    }
    for c in u.locations() {
        for k in -8..=8 {
            br.push(c + eps * k as f64 / 4.0);
        }
    }
    let pad = 1e-3 * domain.width();
    let br = clean_breaks(br, domain.lo + pad, domain.hi - pad);
    let mut value = 0.0;
    let mut magnitude = 0.0;
    for (x, w) in composite_nodes(&br) {
        let c = chi.value(x);
        if c != 0.0 {
            let p = pair(u, fam, 0, eps, x);
            value += w * c * p.value;
            magnitude += (w * c).abs() * p.magnitude.max(p.value.abs());
        }
    }
    (value, ROUNDING * magnitude)
}

fn condition_i(
    fam: &TestObjectFamily,
    probes: &Probes,
    cfg: &VerifyConfig,
    grid: &[f64],
    samples: &mut Vec<(f64, String, f64)>,
) -> ConditionResult {
    let zero = fam.kind == FamilyKind::Zero;
    let name = if zero { "i'" } else { "i" };
    let mut worst = 0.0f64;
    let mut passed = true;
    let mut failures = Vec::new();
    for (un, u) in &probes.distributions {
        for (cn, chi) in &probes.test_functions {
            let target = if zero { 0.0 } else { distribution_action(u, chi, cfg.domain) };
            let errs: Vec<(f64, f64)> = grid
                .iter()
                .map(|&e| {
                    let (v, level) = regularized_action(u, &fam.family, chi, e, cfg.domain);
                    ((v - target).abs(), level)
                })
                .collect();
            for (&e, &(v, _)) in grid.iter().zip(&errs) {
                samples.push((e, format!("{name}:{un}:{cn}"), v));
            }
            // Errors under the rounding level of the x-integral are resolved.
            let tail = &errs[errs.len().saturating_sub(4)..];
            let ok = !tail.is_empty() && tail.iter().all(|&(v, level)| v < cfg.conv_tol || v <= level);
            let last = tail.last().map(|t| if t.0 <= t.1 { 0.0 } else { t.0 }).unwrap_or(f64::NAN);
            worst = worst.max(last);
            if !ok {
                passed = false;
                failures.push(format!("{un} against {cn}: final error {:e}", tail.last().map(|t| t.0).unwrap_or(f64::NAN)));
            }
        }
    }
    let detail = if passed {
        format!("every probe pairing converges; worst final error {worst:e}")
    } else {
        failures.join("; ")
    };
    ConditionResult { condition: name.into(), passed, measured: worst, detail }
}

/// Fitted sup-norm slopes of a net over the compact, one per α.
fn slopes(
    r: &Representative,
    fam: &TestObjectFamily,
    cfg: &VerifyConfig,
    grid: &[f64],
) -> Vec<(u32, f64, bool, Vec<(f64, f64)>)> {
    let (lo, hi) = cfg.compact;
    let battery = Battery {
        id: format!("verify({})", fam.id),
        test_objects: vec![fam.clone()],
        zero_objects: vec![],
        seminorms: (0..=cfg.max_alpha).map(|a| Seminorm::sup(lo, hi, a)).collect(),
    };
    let net = RepresentativeNet::new(r, cfg.max_alpha);
    match collect_rows(&net, &battery, grid, 0) {
        Ok(rows) => rows
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let s: Vec<(f64, f64)> = row.estimate.samples.iter().map(|s| (s.eps, s.value)).collect();
                (i as u32, row.estimate.slope, row.estimate.good_fit(cfg.r2_min), s)
            })
            .collect(),
        Err(_) => vec![(0, f64::NAN, false, vec![])],
    }
}

fn condition_ii(
    fam: &TestObjectFamily,
    probes: &Probes,
    cfg: &VerifyConfig,
    grid: &[f64],
    samples: &mut Vec<(f64, String, f64)>,
) -> ConditionResult {
    let mut worst = f64::INFINITY;
    let mut passed = true;
    let mut failures = Vec::new();
    for (un, u) in &probes.distributions {
        let r = match Representative::iota(u.clone(), cfg.domain) {
            Ok(r) => r,
            Err(e) => {
                return ConditionResult { condition: "ii".into(), passed: false, measured: f64::NAN, detail: e.to_string() }
            }
        };
        for (alpha, slope, good, s) in slopes(&r, fam, cfg, grid) {
            for &(e, v) in &s {
                samples.push((e, format!("ii:{un}:alpha={alpha}"), v));
            }
            worst = worst.min(slope);
            let env = growth_exponent(&s);
            if !((good && slope >= -cfg.n_max) || env <= cfg.n_max) {
                passed = false;
                failures.push(format!("{un}, alpha {alpha}: slope {slope:.3}, tight fit {good}"));
            }
        }
    }
    let detail = if passed { format!("all sup-norm slopes are at least {worst:.3}") } else { failures.join("; ") };
    ConditionResult { condition: "ii".into(), passed, measured: worst, detail }
}

fn condition_iii(
    fam: &TestObjectFamily,
    probes: &Probes,
    cfg: &VerifyConfig,
    grid: &[f64],
    samples: &mut Vec<(f64, String, f64)>,
) -> ConditionResult {
    let zero = fam.kind == FamilyKind::Zero;
    let name = if zero { "iii'" } else { "iii" };
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (fname, f) in &probes.smooth {
        let embedded = match Representative::iota(Distribution::smooth(f.clone()), cfg.domain) {
            Ok(r) => r,
            Err(e) => return ConditionResult { condition: name.into(), passed: false, measured: f64::NAN, detail: e.to_string() },
        };
        let r = if zero {
            embedded
        } else {
            Representative::sub(&embedded, &Representative::sigma(f.clone(), cfg.domain)).expect("same domain")
        };
        for (alpha, slope, _, s) in slopes(&r, fam, cfg, grid) {
            for (e, v) in s {
                samples.push((e, format!("{name}:{fname}:alpha={alpha}"), v));
            }
            worst = worst.min(slope);
            if !(slope >= cfg.order) {
                failures.push(format!("{fname}, alpha {alpha}: slope {slope:.3}"));
            }
        }
    }
    let passed = failures.is_empty();
    let detail = if passed {
        format!("every smooth-probe slope reaches order {}", cfg.order)
    } else {
        format!("below order {}: {}", cfg.order, failures.join("; "))
    };
    ConditionResult { condition: name.into(), passed, measured: worst, detail }
}

/// Largest distance from `x` to the kernel support over sample points.
pub fn support_radius(fam: &Family, eps: f64, compact: (f64, f64)) -> f64 {
    let n = 20;
    (0..=n)
        .map(|i| {
            let x = compact.0 + (compact.1 - compact.0) * i as f64 / n as f64;
            let (a, b) = fam.support(eps, x);
            (x - a).max(b - x).max(0.0)
        })
        .fold(0.0, f64::max)
}

fn condition_iv(fam: &TestObjectFamily, cfg: &VerifyConfig, grid: &[f64], samples: &mut Vec<(f64, String, f64)>) -> ConditionResult {
    let radii: Vec<f64> = grid.iter().map(|&e| support_radius(&fam.family, e, cfg.compact)).collect();
    for (&e, &r) in grid.iter().zip(&radii) {
        samples.push((e, "iv".into(), r));
    }
    let ratio = grid.iter().zip(&radii).map(|(e, r)| r / e).fold(0.0, f64::max);
    let monotone = radii.windows(2).all(|w| w[1] <= w[0]);
    let last = *radii.last().unwrap_or(&f64::NAN);
    let eps_min = *grid.last().unwrap_or(&f64::NAN);
    let passed = monotone && last <= 10.0 * eps_min;
    ConditionResult {
        condition: "iv".into(),
        passed,
        measured: last,
        detail: format!("support radius at most {ratio:.3}·ε; final radius {last:e}"),
    }
}

/// Runs conditions (i)–(iv), or (i'), (ii), (iii'), (iv) for 0-test objects.
pub fn verify_test_object(fam: &TestObjectFamily, probes: &Probes, cfg: &VerifyConfig) -> VerificationReport {
    let grid = cfg.grid.values();
    let mut samples = Vec::new();
    let conditions = vec![
        condition_i(fam, probes, cfg, &grid, &mut samples),
        condition_ii(fam, probes, cfg, &grid, &mut samples),
        condition_iii(fam, probes, cfg, &grid, &mut samples),
        condition_iv(fam, cfg, &grid, &mut samples),
    ];
    VerificationReport {
        family: fam.describe(),
        kind: fam.kind,
        passed: conditions.iter().all(|c| c.passed),
        conditions,
        probes: probes.describe(),
        config: cfg.clone(),
        samples,
    }
}

/// `fam` followed by `fam + s·ψ_i` for seeded bounded modulations `ψ_i`,
/// with `s` spread over `(0, 1]`.
pub fn make_uniform_set(fam: &TestObjectFamily, seeds: &[u64], count: usize) -> Vec<TestObjectFamily> {
    let schedule = fam.schedule().unwrap_or_default();
    let mut out = vec![fam.clone()];
    for i in 1..count.max(1) {
        let seed = if seeds.is_empty() { i as u64 } else { seeds[(i - 1) % seeds.len()] };
        let s = i as f64 / (count - 1) as f64;
        let z = TestObjectFamily::modulated_zero(schedule, 0.5, seed);
        out.push(TestObjectFamily::shifted(fam, &z, s));
    }
    out
}

/// `{φ + s·ψ}` for the given shifts.
pub fn shift_set(fam: &TestObjectFamily, zero: &TestObjectFamily, shifts: &[f64]) -> Vec<TestObjectFamily> {
    shifts
        .iter()
        .map(|&s| if s == 0.0 { fam.clone() } else { TestObjectFamily::shifted(fam, zero, s) })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniformityReport {
    pub uniform: bool,
    pub schedules: Vec<Schedule>,
    /// Largest support radius over ε across the set.
    pub support_ratio: f64,
    pub reason: String,
}

fn all_schedules(f: &Family, out: &mut Vec<Schedule>) {
    match f {
        Family::Atom { schedule, .. } => {
            if !out.contains(schedule) {
                out.push(*schedule)
            }
        }
        Family::Sum { terms, .. } => terms.iter().for_each(|(_, t)| all_schedules(t, out)),
        Family::Cutoff { inner, .. } | Family::Push { inner, .. } | Family::Frozen { inner, .. } | Family::Lie(inner) => {
            all_schedules(inner, out)
        }
    }
}

/// A set is uniform when all members share one schedule (so the constants
/// of (ii) and (iii) are common) and one support bound `C·ε`.
pub fn check_uniform(set: &[TestObjectFamily], grid: &EpsGrid, compact: (f64, f64)) -> UniformityReport {
    let mut schedules = Vec::new();
    for f in set {
        all_schedules(&f.family, &mut schedules);
    }
    let eps = grid.values();
    let ratios: Vec<f64> = set
        .iter()
        .map(|f| eps.iter().map(|&e| support_radius(&f.family, e, compact) / e).fold(0.0, f64::max))
        .collect();
    let support_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    if schedules.len() > 1 {
        return UniformityReport {
            uniform: false,
            schedules,
            support_ratio,
            reason: "members use different moment schedules".into(),
        };
    }
    let bounded = support_ratio.is_finite() && support_ratio <= 2.0;
    UniformityReport {
        uniform: bounded,
        schedules,
        support_ratio,
        reason: if bounded {
            "shared schedule and support bound".into()
        } else {
            format!("support radius reaches {support_ratio:.3}·ε")
        },
    }
}
