//! Command-line front end: argument handling, run configuration and JSON/CSV
//! reports for the `genfun` binary.

pub mod dsl;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use genfun::points::{
    find_witness_point, find_witness_point_phi_eps, is_moderate_number, is_negligible_number, point_eval,
    GeneralizedNumber, GeneralizedPoint, PointError, WitnessConfig,
};
use genfun::quotient::{
    default_probes, is_associated_zero, is_moderate, is_negligible, Battery, EpsGrid, QuotientConfig,
    QuotientError, Seminorm, Verdict, VerdictReport,
};
use genfun::sharp::{neighborhood_member, sharp_distance, SharpConfig};
use genfun::sheafops::{glue, restrict, PartitionOfUnity, SheafError};
use genfun::symexpr::{Representative, SymError};
use genfun::testobjects::{verify_test_object, Probes, Schedule, TestObjectFamily, VerifyConfig};
use genfun::Interval;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use dsl::{parse_expr, parse_family, ParseError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
    #[error(transparent)]
    Point(#[from] PointError),
    #[error(transparent)]
    Sheaf(#[from] SheafError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Quotient(_) => "quotient",
            CliError::Point(_) => "point",
            CliError::Sheaf(_) => "sheaf",
            CliError::Sym(_) => "expression",
            CliError::Config(_) => "config",
            CliError::Usage(_) => "usage",
        }
    }

    pub fn to_json(&self) -> Value {
        let mut e = json!({ "kind": self.kind(), "message": self.to_string() });
        if let CliError::Parse(p) = self {
            e["position"] = json!(p.position());
        }
        json!({ "error": e })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    Both,
}

/// Everything that determines a run; embedded verbatim in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub domain: (f64, f64),
    pub grid: EpsGrid,
    /// `m(ε) = min(cap, ⌈log₂(1/ε)⌉ + offset)`.
    pub schedule_offset: i32,
    pub moment_cap: u32,
    pub seed: u64,
    pub k_max: u32,
    /// Adaptive quadrature tolerance of the association integrals.
    pub quad_tol: f64,
    /// Test object used by `iota_theta` and frozen projections.
    pub theta: String,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: (-2.0, 2.0),
            grid: EpsGrid::default(),
            schedule_offset: 4,
            moment_cap: 24,
            seed: 1,
            k_max: 2,
            quad_tol: 1e-10,
            theta: "base".into(),
            format: OutputFormat::Json,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let (lo, hi) = self.domain;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(CliError::Config(format!("domain ({lo}, {hi}) is not an open interval")));
        }
        let g = &self.grid;
        if !(g.start > 0.0 && g.start <= 1.0 && g.ratio > 0.0 && g.ratio < 1.0 && g.count >= 3) {
            return Err(CliError::Config("ε-grid must start in (0, 1], shrink by a ratio in (0, 1) and have 3+ points".into()));
        }
        if self.moment_cap > genfun::testobjects::MAX_ORDER as u32 {
            return Err(CliError::Config(format!(
                "moment cap {} exceeds {}",
                self.moment_cap,
                genfun::testobjects::MAX_ORDER
            )));
        }
        if self.k_max > 3 {
            return Err(CliError::Config("k_max above 3 is not supported".into()));
        }
        Ok(())
    }

    pub fn domain(&self) -> Interval {
        Interval::new(self.domain.0, self.domain.1)
    }

    pub fn schedule(&self) -> Schedule {
        Schedule::Log2 { offset: self.schedule_offset, cap: self.moment_cap }
    }

    pub fn theta(&self) -> Result<TestObjectFamily, CliError> {
        Ok(parse_family(&self.theta, self.schedule())?)
    }

    pub fn quotient(&self) -> QuotientConfig {
        self.quotient_on(self.domain())
    }

    /// The battery with seminorm compacts inside `domain`.
    pub fn quotient_on(&self, domain: Interval) -> QuotientConfig {
        let mut q = QuotientConfig::standard(domain);
        q.grid = self.grid;
        q.battery = Battery::standard(self.schedule(), domain, self.seed);
        q.k_max = self.k_max;
        q.quad_tol = self.quad_tol;
        q
    }

    pub fn sharp(&self) -> SharpConfig {
        let mut s = SharpConfig::standard(self.domain());
        s.grid = self.grid;
        let std = Battery::standard(self.schedule(), self.domain(), self.seed);
        s.battery.test_objects = std.test_objects;
        s.battery.zero_objects = std.zero_objects;
        s
    }

    pub fn parse(&self, text: &str) -> Result<Representative, CliError> {
        Ok(parse_expr(text, self.domain(), &self.theta()?)?)
    }
}

#[derive(Parser, Debug)]
#[command(name = "genfun", about = "Nonlinear generalized functions on intervals", version)]
pub struct Cli {
    /// Domain as LO:HI (overrides the config file).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub domain: Option<String>,
    /// JSON file with a RunConfig.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the sample table to this CSV file.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TestKind {
    Moderate,
    Negligible,
    Associated,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse an expression and print its tree and locality.
    Embed { expr: String },
    /// Moderateness, negligibility or association to zero.
    Test {
        #[arg(value_enum)]
        kind: TestKind,
        expr: String,
    },
    /// Association to zero on the default probes.
    Associate { expr: String },
    /// Point value R(X) at a point spec: const:C, staircase:auto, eps-path:F.
    Pointval {
        expr: String,
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// Witness-point search.
    Witness {
        expr: String,
        /// Select steps by kernel mass instead of by ε.
        #[arg(long)]
        phi_eps: bool,
    },
    /// Sharp distance 2^{-v(A - B)}.
    SharpDist { a: String, b: String },
    /// Membership in W_{k,p,m}.
    SharpMember {
        expr: String,
        #[arg(long, default_value_t = 0)]
        k: u32,
        /// sup (middle half, α = 0) or sup:LO:HI:ALPHA.
        #[arg(long, default_value = "sup", allow_hyphen_values = true)]
        p: String,
        #[arg(long, allow_hyphen_values = true)]
        m: f64,
    },
    /// Locality type of an expression.
    Locality { expr: String },
    /// Restrict to a cover, glue back and test the defect.
    Sheaf {
        expr: String,
        /// Charts as LO:HI,LO:HI,...
        #[arg(long, allow_hyphen_values = true)]
        cover: String,
    },
    /// Check the test-object conditions for a family spec.
    VerifyTestobject { family: String },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub csv: Option<String>,
}

fn verdict_code(v: Verdict) -> i32 {
    match v {
        Verdict::True | Verdict::False => 0,
        Verdict::Inconclusive => 2,
    }
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64), CliError> {
    let mut it = s.split(':');
    let (a, b) = (it.next(), it.next());
    match (a.and_then(|a| a.trim().parse().ok()), b.and_then(|b| b.trim().parse().ok()), it.next()) {
        (Some(a), Some(b), None) if a < b => Ok((a, b)),
        _ => Err(CliError::Usage(format!("{what} must be LO:HI with LO < HI, got `{s}`"))),
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(d) = &cli.domain {
        cfg.domain = parse_pair(d, "--domain")?;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn seminorm_spec(spec: &str, domain: Interval) -> Result<Seminorm, CliError> {
    if spec == "sup" {
        let (lo, hi) = domain.middle(0.5);
        return Ok(Seminorm::sup(lo, hi, 0));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Usage(format!("seminorm must be `sup` or `sup:LO:HI:ALPHA`, got `{spec}`"));
    if parts.len() != 4 || parts[0] != "sup" {
        return Err(bad());
    }
    let lo: f64 = parts[1].parse().map_err(|_| bad())?;
    let hi: f64 = parts[2].parse().map_err(|_| bad())?;
    let alpha: u32 = parts[3].parse().map_err(|_| bad())?;
    if !(domain.lo < lo && lo < hi && hi < domain.hi) {
        return Err(CliError::Usage(format!("compact [{lo}, {hi}] is not inside the domain")));
    }
    Ok(Seminorm::sup(lo, hi, alpha))
}

fn point_spec(spec: &str, r: &Representative, cfg: &RunConfig) -> Result<GeneralizedPoint, CliError> {
    let domain = cfg.domain();
    if let Some(c) = spec.strip_prefix("const:") {
        let x: f64 = c.trim().parse().map_err(|_| CliError::Usage(format!("bad constant point `{c}`")))?;
        return Ok(GeneralizedPoint::constant(x, domain));
    }
    if let Some(f) = spec.strip_prefix("eps-path:") {
        let syn = dsl::parse_syntax(f)?;
        return Ok(GeneralizedPoint::eps_path(dsl::smooth_fn(&syn, "eps")?, domain));
    }
    if spec == "staircase:auto" {
        let phi = TestObjectFamily::base(cfg.schedule());
        let wc = WitnessConfig::standard(domain, cfg.grid.values());
        return find_witness_point(r, &phi, &wc)
            .map_err(|e| CliError::Quotient(e.into()))?
            .ok_or_else(|| CliError::Usage("no witness point: the maxima never beat ε^2".into()));
    }
    Err(CliError::Usage(format!("point spec must be const:C, staircase:auto or eps-path:F, got `{spec}`")))
}

fn verdict_json(rep: &VerdictReport) -> Value {
    json!({
        "question": rep.question,
        "verdict": rep.verdict,
        "min_slope": slope_json(rep.min_slope()),
        "zeroth_order": rep.zeroth_order,
        "violation": rep.violation,
        "rows": rep.rows,
        "battery": rep.battery,
        "grid": rep.grid,
        "notes": rep.notes,
    })
}

fn slope_json(s: f64) -> Value {
    if s == f64::INFINITY {
        json!("+inf")
    } else if s.is_finite() {
        json!(s)
    } else {
        json!(null)
    }
}

fn execute(cli: &Cli, cfg: &RunConfig) -> Result<(i32, Value, Option<String>), CliError> {
    let domain = cfg.domain();
    Ok(match &cli.command {
        Command::Embed { expr } => {
            let r = cfg.parse(expr)?;
            (
                0,
                json!({
                    "expr": r.to_string(),
                    "locality": r.locality.to_string(),
                    "domain": [r.domain.lo, r.domain.hi],
                    "features": r.features(),
                    "size": r.size(),
                    "ast": r.to_json(),
                }),
                None,
            )
        }
        Command::Locality { expr } => {
            let r = cfg.parse(expr)?;
            (0, json!({ "expr": r.to_string(), "locality": r.locality.to_string() }), None)
        }
        Command::Test { kind: TestKind::Associated, expr } | Command::Associate { expr } => {
            let r = cfg.parse(expr)?;
            let rep = is_associated_zero(&r, &default_probes(domain), &cfg.quotient())?;
            let mut csv = String::from("eps,k,seminorm_id,testobj_id,value\n");
            for row in &rep.rows {
                for (e, v) in &row.pairings {
                    csv.push_str(&format!("{e:e},0,pairing:{},{},{v:e}\n", row.probe, row.testobj_id));
                }
            }
            (verdict_code(rep.verdict), json!({ "question": "associated to 0", "verdict": rep.verdict, "report": rep }), Some(csv))
        }
        Command::Test { kind, expr } => {
            let r = cfg.parse(expr)?;
            let q = cfg.quotient();
            let rep = if *kind == TestKind::Moderate { is_moderate(&r, &q)? } else { is_negligible(&r, &q)? };
            (verdict_code(rep.verdict), verdict_json(&rep), Some(rep.csv()))
        }
        Command::Pointval { expr, at } => {
            let r = cfg.parse(expr)?;
            let q = cfg.quotient();
            let x = point_spec(at, &r, cfg)?;
            let z = point_eval(&r, &x, &q)?;
            let moderate = is_moderate_number(&z, &q)?;
            let negligible = is_negligible_number(&z, &q)?;
            let phi = TestObjectFamily::base(cfg.schedule());
            let values: Vec<Value> = cfg
                .grid
                .values()
                .iter()
                .map(|&e| json!({ "eps": e, "x": x.value(&phi.family, e), "value": z.value(&phi, e).ok() }))
                .collect();
            let code = verdict_code(moderate.verdict).max(verdict_code(negligible.verdict));
            (
                code,
                json!({
                    "expr": r.to_string(),
                    "point": x,
                    "locality": z.locality().to_string(),
                    "values": values,
                    "moderate": verdict_json(&moderate),
                    "negligible": verdict_json(&negligible),
                }),
                Some(negligible.csv()),
            )
        }
        Command::Witness { expr, phi_eps } => {
            let r = cfg.parse(expr)?;
            let phi = TestObjectFamily::base(cfg.schedule());
            let wc = WitnessConfig::standard(domain, cfg.grid.values());
            let found = if *phi_eps { find_witness_point_phi_eps(&r, &phi, &wc) } else { find_witness_point(&r, &phi, &wc) }
                .map_err(|e| CliError::Quotient(e.into()))?;
            let maxima = genfun::points::scan_maxima(&r, &phi, &wc).map_err(|e| CliError::Quotient(e.into()))?;
            let mut out = json!({
                "expr": r.to_string(),
                "witness": found,
                "maxima": maxima.iter().map(|(e, x, v)| json!({ "eps": e, "x": x, "value": v })).collect::<Vec<_>>(),
                "config": wc,
            });
            let mut code = 0;
            if let Some(p) = &found {
                let rep = is_negligible_number(&GeneralizedNumber::point_value(&r, p), &cfg.quotient())?;
                code = verdict_code(rep.verdict);
                out["point_value"] = verdict_json(&rep);
            }
            let mut csv = String::from("eps,k,seminorm_id,testobj_id,value\n");
            for (e, _, v) in &maxima {
                csv.push_str(&format!("{e:e},0,max_abs,{},{v:e}\n", phi.id));
            }
            (code, out, Some(csv))
        }
        Command::SharpDist { a, b } => {
            let (ra, rb) = (cfg.parse(a)?, cfg.parse(b)?);
            let d = sharp_distance(&ra, &rb, &cfg.sharp())?;
            let code = if d.valuation.inconclusive { 2 } else { 0 };
            (
                code,
                json!({
                    "a": ra.to_string(),
                    "b": rb.to_string(),
                    "distance": d.value,
                    "valuation": d.valuation.v,
                    "exact": d.valuation.exact,
                    "inconclusive": d.valuation.inconclusive,
                    "rows": d.valuation.rows,
                }),
                None,
            )
        }
        Command::SharpMember { expr, k, p, m } => {
            let r = cfg.parse(expr)?;
            let p = seminorm_spec(p, domain)?;
            let mem = neighborhood_member(&r, *k, &p, *m, &cfg.sharp())?;
            let code = if mem.inconclusive { 2 } else { 0 };
            (
                code,
                json!({
                    "expr": r.to_string(),
                    "k": k,
                    "seminorm": p,
                    "m": m,
                    "member": mem.member,
                    "inconclusive": mem.inconclusive,
                    "min_slope": slope_json(mem.min_slope),
                    "rows": mem.rows,
                }),
                None,
            )
        }
        Command::Sheaf { expr, cover } => {
            let r = cfg.parse(expr)?;
            let charts: Vec<Interval> = cover
                .split(',')
                .map(|c| parse_pair(c, "chart").map(|(a, b)| Interval::new(a, b)))
                .collect::<Result<_, _>>()?;
            let pou = PartitionOfUnity::new(&charts)?;
            let union = pou.union();
            let parts: Vec<Representative> = charts.iter().map(|c| restrict(&r, *c)).collect::<Result<_, _>>()?;
            let glued = glue(&parts, &pou)?;
            let base = if union == r.domain { r.clone() } else { restrict(&r, union)? };
            let defect = is_negligible(&Representative::sub(&glued, &base)?, &cfg.quotient_on(union))?;
            let mut parts_json = Vec::new();
            for (c, p) in charts.iter().zip(&parts) {
                let rep = is_negligible(p, &cfg.quotient_on(*c))?;
                parts_json.push(json!({ "chart": [c.lo, c.hi], "locality": p.locality.to_string(), "negligible": rep.verdict }));
            }
            (
                verdict_code(defect.verdict),
                json!({
                    "expr": r.to_string(),
                    "cover": charts.iter().map(|c| [c.lo, c.hi]).collect::<Vec<_>>(),
                    "partition_defect": pou.sum_defect(401),
                    "glue_defect": verdict_json(&defect),
                    "restrictions": parts_json,
                }),
                Some(defect.csv()),
            )
        }
        Command::VerifyTestobject { family } => {
            let fam = parse_family(family, cfg.schedule())?;
            let mut vc = VerifyConfig::standard(domain);
            vc.grid = cfg.grid;
            let rep = verify_test_object(&fam, &Probes::standard(domain), &vc);
            let csv = rep.csv();
            (0, serde_json::to_value(&rep).unwrap_or(Value::Null), Some(csv))
        }
    })
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn run_command<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let stdout = if code == 0 {
                e.to_string()
            } else {
                pretty(&CliError::Usage(e.to_string()).to_json())
            };
            return Outcome { code, stdout, csv: None };
        }
    };
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => return Outcome { code: 1, stdout: pretty(&e.to_json()), csv: None },
    };
    match execute(&cli, &cfg) {
        Ok((code, mut report, csv)) => {
            report["config"] = serde_json::to_value(&cfg).unwrap_or(Value::Null);
            report["exit_code"] = json!(code);
            let stdout = match (cfg.format, &csv) {
                (OutputFormat::Csv, Some(c)) => c.clone(),
                (OutputFormat::Both, Some(c)) => format!("{}\n{}", pretty(&report), c),
                _ => pretty(&report),
            };
            Outcome { code, stdout, csv }
        }
        Err(e) => {
            let mut j = e.to_json();
            j["config"] = serde_json::to_value(&cfg).unwrap_or(Value::Null);
            Outcome { code: 1, stdout: pretty(&j), csv: None }
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).unwrap_or_else(|_| v.to_string())
}

/// The `--csv` target of an argument list, if any.
pub fn csv_target<I, T>(argv: I) -> Option<PathBuf>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(argv).ok().and_then(|c| c.csv)
}
