//! Command-line front end: `eval`, `sweep`, `chsh` and `verify`.
//!
//! [`run`] takes the argument list and output streams and returns the process
//! exit code, so the binary is a one-line wrapper and tests can call it
//! in-process.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::measures::{
    chsh_horodecki, chsh_optimize, concurrence_closed, concurrence_wootters, degree_of_coherence,
    delocalization, full_report, log_negativity, measured_coherence, partial_transpose_spectrum,
    purity, MeasureReport,
};
use crate::scenarios::verify_invariance;
use crate::speclang::{evaluate, parse, Evaluated, Location, TwoSiteKind, GRAMMAR};
use crate::states::{embed_two_qubit, ScenarioBasis, SingleExcitationState};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
/// Parse errors in a spec, bad flags and bad sweep configurations.
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

pub const MAX_SWEEP_POINTS: f64 = 1e6;
pub const DEFAULT_SEED: u64 = 0x5eed;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const OPTIMIZER_TOLERANCE: f64 = 1e-6;
/// `S` must exceed `2` by more than this to count as a violation.
pub const DEFAULT_VIOLATION_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Parse(String),
    Domain(String),
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Parse(_) | CliError::Config(_) | CliError::Io(_) => EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

fn grammar_help() -> String {
    format!("State specs follow this grammar:\n\n{GRAMMAR}\n\nExample: deloc eval \"dimer(p1=0.5, eps=1)\"")
}

#[derive(Debug, Parser)]
#[command(
    name = "deloc",
    version,
    about = "Coherence, delocalization and entanglement of single-excitation states",
    after_help = grammar_help()
)]
pub struct Cli {
    /// Output format (default: table, or csv for sweep)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output to PATH instead of standard output
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Tolerance override: residual bound for verify, violation margin for chsh
    #[arg(long, global = true, value_name = "REAL")]
    pub tolerance: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a state spec and print every measure
    Eval { spec: String },
    /// Tabulate the measures along a line in (eps, p1)
    Sweep(SweepArgs),
    /// CHSH value in closed form and by optimizing the measurement angles
    Chsh { spec: String },
    /// Check the invariants over a grid of states
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    Eps,
    P1,
}

impl SweepVar {
    fn name(&self) -> &'static str {
        match self {
            SweepVar::Eps => "eps",
            SweepVar::P1 => "p1",
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub var: SweepVar,
    /// START:STOP:STEP
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub range: (f64, f64, f64),
    /// NAME=VALUE for p1, eps or phase (repeatable)
    #[arg(long, value_parser = parse_fixed)]
    pub fixed: Vec<(String, f64)>,
    #[arg(long, default_value = "dimer", value_parser = parse_kind)]
    pub kind: TwoSiteKind,
    /// Prepend '#' comment lines with the command and generation time
    #[arg(long)]
    pub stamp: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Use N seeded random (p1, eps, phase) points instead of the 11 x 21 grid
    #[arg(long, value_name = "N")]
    pub grid_points: Option<usize>,
    /// Seed for --grid-points
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_range(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected START:STOP:STEP, got '{s}'"));
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("'{part}' is not a number"))?;
    }
    Ok((v[0], v[1], v[2]))
}

fn parse_fixed(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got '{s}'"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("'{value}' is not a number"))?;
    Ok((name.trim().to_string(), value))
}

fn parse_kind(s: &str) -> Result<TwoSiteKind, String> {
    TwoSiteKind::from_keyword(s).ok_or_else(|| {
        let names: Vec<_> = TwoSiteKind::ALL.iter().map(|k| k.keyword()).collect();
        format!("unknown kind '{s}' (expected one of {})", names.join(", "))
    })
}

/// Shortest decimal that parses back to the same `f64` (at most 17
/// significant digits), switching to exponent form for very large or
/// small magnitudes.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x == 0.0 || (1e-5..1e17).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_else(|| "undefined".into())
}

fn render_table(rows: &[(String, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

fn diagnostic(text: &str, at: Location, message: &str) -> String {
    let line = text.lines().nth(at.line.saturating_sub(1)).unwrap_or("");
    let pad = " ".repeat(at.column.saturating_sub(1));
    format!("{message}\n  {line}\n  {pad}^")
}

fn load(text: &str) -> Result<Evaluated, CliError> {
    let spec = parse(text).map_err(|e| CliError::Parse(diagnostic(text, e.at, &e.to_string())))?;
    evaluate(&spec).map_err(|e| CliError::Domain(diagnostic(text, e.at, &e.to_string())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn to_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    spec: String,
    basis: ScenarioBasis,
    #[serde(flatten)]
    report: MeasureReport,
}

#[derive(Debug, Serialize)]
struct PairCoherence {
    i: usize,
    j: usize,
    g_abs: Option<f64>,
}

#[derive(Debug, Serialize)]
struct NSiteOutput {
    spec: String,
    n_sites: usize,
    epsilon: f64,
    probabilities: Vec<f64>,
    coherences: Vec<PairCoherence>,
    purity: f64,
}

fn nsite_output(spec: String, state: &SingleExcitationState) -> NSiteOutput {
    let n = state.n_sites();
    let mut coherences = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            coherences.push(PairCoherence {
                i: i + 1,
                j: j + 1,
                g_abs: degree_of_coherence(state, i, j).ok().map(|g| g.norm()),
            });
        }
    }
    NSiteOutput {
        spec,
        n_sites: n,
        epsilon: state.epsilon(),
        probabilities: state.probabilities(),
        coherences,
        purity: purity(&state.density_matrix()),
    }
}

fn cmd_eval(text: &str, format: Format) -> Result<String, CliError> {
    let ev = load(text)?;
    let canonical = parse(text).expect("already parsed").to_string();
    if ev.state.n_sites() != 2 {
        let out = nsite_output(canonical, &ev.state);
        return match format {
            Format::Json => Ok(to_json(&out)),
            Format::Table => {
                let mut rows = vec![
                    ("spec".to_string(), out.spec.clone()),
                    ("n_sites".into(), out.n_sites.to_string()),
                    ("epsilon".into(), fmt_num(out.epsilon)),
                ];
                for (k, p) in out.probabilities.iter().enumerate() {
                    rows.push((format!("p_{}", k + 1), fmt_num(*p)));
                }
                for c in &out.coherences {
                    rows.push((format!("|g_{},{}|", c.i, c.j), fmt_opt(c.g_abs)));
                }
                rows.push(("purity".into(), fmt_num(out.purity)));
                Ok(render_table(&rows))
            }
            Format::Csv => {
                let rows: Vec<Vec<String>> = out
                    .coherences
                    .iter()
                    .map(|c| {
                        vec![
                            c.i.to_string(),
                            c.j.to_string(),
                            c.g_abs.map(fmt_num).unwrap_or_default(),
                        ]
                    })
                    .collect();
                to_csv(&["i", "j", "g_abs"], &rows)
            }
        };
    }
    let report = full_report(&ev.state, ev.basis)?;
    let out = EvalOutput {
        spec: canonical,
        basis: ev.basis,
        report,
    };
    match format {
        Format::Json => Ok(to_json(&out)),
        Format::Table => {
            let mut rows = vec![
                ("spec".to_string(), out.spec.clone()),
                ("basis".into(), out.basis.tag().to_string()),
                (
                    "epsilon_measured".into(),
                    fmt_opt(out.report.epsilon_measured),
                ),
            ];
            rows.extend(
                out.report.fields()[1..]
                    .iter()
                    .map(|(k, v)| (k.to_string(), fmt_num(*v))),
            );
            Ok(render_table(&rows))
        }
        Format::Csv => {
            let fields = out.report.fields();
            let mut header = vec!["spec", "basis"];
            header.extend(fields.iter().map(|(k, _)| *k));
            let mut row = vec![out.spec.clone(), out.basis.tag().to_string()];
            row.extend(fields.iter().map(|(_, v)| {
                if v.is_nan() {
                    String::new()
                } else {
                    fmt_num(*v)
                }
            }));
            to_csv(&header, &[row])
        }
    }
}

/// Bloch directions of the optimal settings, `[theta, phi]` each.
#[derive(Debug, Serialize)]
pub struct ChshAngles {
    pub a: [f64; 2],
    pub a_prime: [f64; 2],
    pub b: [f64; 2],
    pub b_prime: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct ChshOutput {
    pub spec: String,
    pub chsh_horodecki: f64,
    pub chsh_optimized: f64,
    pub angles: ChshAngles,
    pub violation: bool,
}

pub fn chsh_summary(text: &str, margin: f64) -> Result<ChshOutput, CliError> {
    let ev = load(text)?;
    let rho = embed_two_qubit(&ev.state, ev.basis)?;
    let horodecki = chsh_horodecki(&rho)?;
    let opt = chsh_optimize(&rho)?;
    let x = opt.angles;
    Ok(ChshOutput {
        spec: parse(text).expect("already parsed").to_string(),
        chsh_horodecki: horodecki,
        chsh_optimized: opt.value,
        angles: ChshAngles {
            a: [x[0], x[1]],
            a_prime: [x[2], x[3]],
            b: [x[4], x[5]],
            b_prime: [x[6], x[7]],
        },
        violation: horodecki > 2.0 + margin,
    })
}

fn cmd_chsh(text: &str, format: Format, margin: f64) -> Result<String, CliError> {
    let out = chsh_summary(text, margin)?;
    match format {
        Format::Json => Ok(to_json(&out)),
        Format::Table => {
            let angle = |v: [f64; 2]| format!("theta={} phi={}", fmt_num(v[0]), fmt_num(v[1]));
            Ok(render_table(&[
                ("spec".into(), out.spec.clone()),
                ("chsh_horodecki".into(), fmt_num(out.chsh_horodecki)),
                ("chsh_optimized".into(), fmt_num(out.chsh_optimized)),
                ("a".into(), angle(out.angles.a)),
                ("a'".into(), angle(out.angles.a_prime)),
                ("b".into(), angle(out.angles.b)),
                ("b'".into(), angle(out.angles.b_prime)),
                ("violation".into(), out.violation.to_string()),
            ]))
        }
        Format::Csv => Err(CliError::Config("chsh prints table or json".into())),
    }
}

/// A one-variable sweep over a two-site family.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub kind: TwoSiteKind,
    pub var: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub fixed: Vec<(String, f64)>,
}

/// One sweep row; field names are the CSV header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub p1: f64,
    pub p2: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "C_closed")]
    pub c_closed: f64,
    #[serde(rename = "C_oracle")]
    pub c_oracle: f64,
    pub logneg: f64,
    pub chsh: f64,
    pub g_abs: Option<f64>,
    pub identity_residual: f64,
}

pub const SWEEP_COLUMNS: [&str; 10] = [
    "eps",
    "p1",
    "p2",
    "D",
    "C_closed",
    "C_oracle",
    "logneg",
    "chsh",
    "g_abs",
    "identity_residual",
];

impl SweepRow {
    fn cells(&self) -> Vec<String> {
        [
            self.eps,
            self.p1,
            self.p2,
            self.d,
            self.c_closed,
            self.c_oracle,
            self.logneg,
            self.chsh,
        ]
        .iter()
        .map(|v| fmt_num(*v))
        .chain([
            self.g_abs.map(fmt_num).unwrap_or_default(),
            fmt_num(self.identity_residual),
        ])
        .collect()
    }
}

/// Measures for one point of a two-site family, with `p2 = 1 - p1`.
/// `chsh` is the closed form.
pub fn sweep_row(kind: TwoSiteKind, p1: f64, eps: f64, phase: f64) -> crate::Result<SweepRow> {
    let state = SingleExcitationState::dimer(p1, eps, phase)?;
    let p2 = 1.0 - p1;
    let rho = embed_two_qubit(&state, kind.basis())?;
    let d = delocalization(p1, p2)?;
    let c_oracle = concurrence_wootters(&rho)?;
    Ok(SweepRow {
        eps,
        p1,
        p2,
        d,
        c_closed: concurrence_closed(p1, p2, eps)?,
        c_oracle,
        logneg: log_negativity(&rho)?,
        chsh: chsh_horodecki(&rho)?,
        g_abs: measured_coherence(&rho, kind.basis()),
        identity_residual: (c_oracle - eps * d).abs(),
    })
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let (start, stop, step) = (self.start, self.stop, self.step);
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(CliError::Config("range values must be finite".into()));
        }
        if step <= 0.0 {
            return Err(CliError::Config(format!(
                "step must be positive, got {step}"
            )));
        }
        if start > stop {
            return Err(CliError::Config(format!(
                "start {start} is after stop {stop}"
            )));
        }
        if (stop - start) / step > MAX_SWEEP_POINTS {
            return Err(CliError::Config(format!(
                "range has more than {MAX_SWEEP_POINTS} steps"
            )));
        }
        for (k, (name, value)) in self.fixed.iter().enumerate() {
            if !["p1", "eps", "phase"].contains(&name.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown fixed parameter '{name}'"
                )));
            }
            if name == self.var.name() {
                return Err(CliError::Config(format!("{name} is both swept and fixed")));
            }
            if self.fixed[..k].iter().any(|(n, _)| n == name) {
                return Err(CliError::Config(format!("{name} fixed twice")));
            }
            if !value.is_finite() {
                return Err(CliError::Config(format!("{name} must be finite")));
            }
        }
        let other = match self.var {
            SweepVar::Eps => "p1",
            SweepVar::P1 => "eps",
        };
        if self.fixed_value(other).is_none() {
            return Err(CliError::Config(format!("missing --fixed {other}=VALUE")));
        }
        Ok(())
    }

    fn fixed_value(&self, name: &str) -> Option<f64> {
        self.fixed.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    /// `start + k step` for `k = 0, 1, ...` up to `stop`; a final point
    /// within rounding of `stop` is snapped to it.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|k| {
                let x = self.start + k as f64 * self.step;
                if k + 1 == n && (x - self.stop).abs() <= 1e-9 * self.step {
                    self.stop
                } else {
                    x.min(self.stop)
                }
            })
            .collect()
    }

    pub fn run(&self) -> Result<Vec<SweepRow>, CliError> {
        self.validate()?;
        let phase = self.fixed_value("phase").unwrap_or(0.0);
        let var = self.var;
        let (p1_fixed, eps_fixed) = (self.fixed_value("p1"), self.fixed_value("eps"));
        self.points()
            .into_par_iter()
            .map(|x| {
                let (p1, eps) = match var {
                    SweepVar::Eps => (p1_fixed.expect("validated"), x),
                    SweepVar::P1 => (x, eps_fixed.expect("validated")),
                };
                sweep_row(self.kind, p1, eps, phase)
                    .map_err(|e| CliError::Domain(format!("at {}={}: {e}", var.name(), fmt_num(x))))
            })
            .collect()
    }
}

fn cmd_sweep(args: &SweepArgs, format: Format) -> Result<String, CliError> {
    let cfg = SweepConfig {
        kind: args.kind,
        var: args.var,
        start: args.range.0,
        stop: args.range.1,
        step: args.range.2,
        fixed: args.fixed.clone(),
    };
    let rows = cfg.run()?;
    let fixed: Vec<String> = cfg
        .fixed
        .iter()
        .map(|(n, v)| format!("{n}={}", fmt_num(*v)))
        .collect();
    let stamp = || {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        vec![
            format!("deloc {}", env!("CARGO_PKG_VERSION")),
            format!(
                "kind={} var={} range={}:{}:{} fixed={}",
                cfg.kind.keyword(),
                cfg.var.name(),
                fmt_num(cfg.start),
                fmt_num(cfg.stop),
                fmt_num(cfg.step),
                fixed.join(",")
            ),
            format!("generated_unix={secs}"),
        ]
    };
    match format {
        Format::Csv => {
            let body = to_csv(
                &SWEEP_COLUMNS,
                &rows.iter().map(SweepRow::cells).collect::<Vec<_>>(),
            )?;
            if args.stamp {
                let header: String = stamp().iter().map(|l| format!("# {l}\n")).collect();
                Ok(header + &body)
            } else {
                Ok(body)
            }
        }
        Format::Json => {
            if args.stamp {
                Ok(to_json(
                    &serde_json::json!({ "meta": stamp(), "rows": rows }),
                ))
            } else {
                Ok(to_json(&rows))
            }
        }
        Format::Table => Err(CliError::Config("sweep writes csv or json".into())),
    }
}

/// Invariants checked by `verify`, with their default tolerances.
pub const INVARIANTS: [(&str, f64); 9] = [
    ("physicality", DEFAULT_TOLERANCE),
    ("identity C = eps D", DEFAULT_TOLERANCE),
    ("closed form vs Wootters", DEFAULT_TOLERANCE),
    ("|g_12| = eps", DEFAULT_TOLERANCE),
    ("min PT eigenvalue", DEFAULT_TOLERANCE),
    ("E_N = log2(1 + C)", DEFAULT_TOLERANCE),
    ("Horodecki = 2 sqrt(1 + C^2)", DEFAULT_TOLERANCE),
    ("optimized vs Horodecki", OPTIMIZER_TOLERANCE),
    ("scenario invariance", DEFAULT_TOLERANCE),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub grid: String,
    pub points: usize,
    pub invariants: Vec<InvariantResult>,
    pub passed: bool,
}

/// Points as `(p1, eps, phase)`.
pub fn verify_grid(
    grid_points: Option<usize>,
    seed: Option<u64>,
) -> (String, Vec<(f64, f64, f64)>) {
    match grid_points {
        None => {
            let mut pts = Vec::with_capacity(11 * 21);
            for e in 0..=10 {
                for p in 0..=20 {
                    pts.push((p as f64 / 20.0, e as f64 / 10.0, 0.0));
                }
            }
            ("11 x 21 (eps x p1)".into(), pts)
        }
        Some(n) => {
            let seed = seed.unwrap_or(DEFAULT_SEED);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = (0..n)
                .map(|_| {
                    let p1: f64 = rng.random();
                    let eps: f64 = rng.random();
                    let phase: f64 = rng.random::<f64>() * 2.0 * PI;
                    (p1, eps, phase)
                })
                .collect();
            (format!("random (seed {seed})"), pts)
        }
    }
}

fn density_residual(rho: &crate::ComplexMatrix) -> crate::Result<f64> {
    let min = crate::linalg::hermitian_eigenvalues(rho)?[0];
    Ok(rho
        .hermitian_deviation()
        .max((rho.trace().re - 1.0).abs())
        .max(rho.trace().im.abs())
        .max((-min).max(0.0)))
}

fn point_residuals(p1: f64, eps: f64, phase: f64) -> crate::Result<[f64; 9]> {
    let state = SingleExcitationState::dimer(p1, eps, phase)?;
    let p = state.probabilities();
    let c = concurrence_closed(p[0], p[1], eps)?;
    let d = delocalization(p[0], p[1])?;
    let rho = embed_two_qubit(&state, ScenarioBasis::Dimer)?;
    let mut physical = density_residual(&state.density_matrix())?;
    for b in ScenarioBasis::ALL {
        physical = physical.max(density_residual(&embed_two_qubit(&state, b)?)?);
    }
    let oracle = concurrence_wootters(&rho)?;
    let coherence = match degree_of_coherence(&state, 0, 1) {
        Ok(g) => (g.norm() - eps).abs(),
        Err(_) => 0.0,
    };
    let pt_min = partial_transpose_spectrum(&rho)?[0];
    let horodecki = chsh_horodecki(&rho)?;
    let invariance = verify_invariance(&state)?;
    let optimized = invariance
        .reports
        .iter()
        .map(|(_, r)| (r.chsh_optimized - horodecki).abs())
        .fold(0.0, f64::max);
    Ok([
        physical,
        (oracle - eps * d).abs(),
        (c - oracle).abs(),
        coherence,
        (pt_min + eps * (p[0] * p[1]).sqrt()).abs(),
        (log_negativity(&rho)? - (1.0 + c).log2()).abs(),
        (horodecki - 2.0 * (1.0 + c * c).sqrt()).abs(),
        optimized,
        invariance.worst(),
    ])
}

/// Runs every invariant over the grid. `tolerance` replaces all default bounds.
pub fn run_verify(
    grid_points: Option<usize>,
    seed: Option<u64>,
    tolerance: Option<f64>,
) -> Result<VerifySummary, CliError> {
    let (grid, points) = verify_grid(grid_points, seed);
    let per_point: Vec<[f64; 9]> = points
        .par_iter()
        .map(|&(p1, eps, phase)| point_residuals(p1, eps, phase))
        .collect::<crate::Result<_>>()?;
    let mut worst = [0.0f64; 9];
    for r in &per_point {
        for (w, v) in worst.iter_mut().zip(r) {
            *w = if v.is_nan() { f64::INFINITY } else { w.max(*v) };
        }
    }
    let invariants: Vec<InvariantResult> = INVARIANTS
        .iter()
        .zip(worst)
        .map(|(&(name, default), max_residual)| {
            let tolerance = tolerance.unwrap_or(default);
            InvariantResult {
                name,
                max_residual,
                tolerance,
                passed: max_residual <= tolerance,
            }
        })
        .collect();
    Ok(VerifySummary {
        grid,
        points: points.len(),
        passed: invariants.iter().all(|i| i.passed),
        invariants,
    })
}

fn cmd_verify(
    args: &VerifyArgs,
    format: Format,
    tolerance: Option<f64>,
) -> Result<(String, i32), CliError> {
    if let Some(t) = tolerance {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::Config(format!(
                "tolerance must be a non-negative number, got {t}"
            )));
        }
    }
    let summary = run_verify(args.grid_points, args.seed, tolerance)?;
    let code = if summary.passed {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    };
    let text = match format {
        Format::Json => to_json(&summary),
        Format::Table => {
            let width = summary
                .invariants
                .iter()
                .map(|i| i.name.len())
                .max()
                .unwrap_or(0);
            let mut s = format!("grid: {}, {} points\n", summary.grid, summary.points);
            for i in &summary.invariants {
                s += &format!(
                    "{:<width$}  max residual {:<24}  tolerance {:<8}  {}\n",
                    i.name,
                    fmt_num(i.max_residual),
                    fmt_num(i.tolerance),
                    if i.passed { "PASS" } else { "FAIL" }
                );
            }
            s += if summary.passed {
                "all invariants hold\n"
            } else {
                "verification FAILED\n"
            };
            s
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = summary
                .invariants
                .iter()
                .map(|i| {
                    vec![
                        i.name.to_string(),
                        fmt_num(i.max_residual),
                        fmt_num(i.tolerance),
                        i.passed.to_string(),
                    ]
                })
                .collect();
            to_csv(&["invariant", "max_residual", "tolerance", "passed"], &rows)?
        }
    };
    Ok((text, code))
}

fn execute(cli: &Cli) -> Result<(String, i32), CliError> {
    let format = cli.format;
    match &cli.command {
        Command::Eval { spec } => Ok((cmd_eval(spec, format.unwrap_or(Format::Table))?, EXIT_OK)),
        Command::Chsh { spec } => {
            let margin = cli.tolerance.unwrap_or(DEFAULT_VIOLATION_MARGIN);
            Ok((
                cmd_chsh(spec, format.unwrap_or(Format::Table), margin)?,
                EXIT_OK,
            ))
        }
        Command::Sweep(args) => Ok((cmd_sweep(args, format.unwrap_or(Format::Csv))?, EXIT_OK)),
        Command::Verify(args) => cmd_verify(args, format.unwrap_or(Format::Table), cli.tolerance),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let result = execute(&cli).and_then(|(text, code)| {
        match &cli.out {
            Some(path) => std::fs::write(path, &text)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
            None => stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))?,
        }
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
