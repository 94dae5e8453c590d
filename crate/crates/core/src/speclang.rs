//! A small text format for naming states, e.g. `dimer(p1=0.5, eps=1.0)`.
//!
//! Parsing is recursive descent over the grammar in [`GRAMMAR`]. Errors carry
//! a 1-based line and column and the set of tokens that would have been
//! accepted. Semantic checks that need numeric ranges (probabilities,
//! normalization, `eps` in `[0,1]`) happen in [`evaluate`], which reports
//! the location of the offending parameter.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::error::Error as DomainError;
use crate::states::{ScenarioBasis, SingleExcitationState};

/// The accepted syntax, in EBNF.
pub const GRAMMAR: &str = r#"spec    := kind "(" param ("," param)* ")"
param   := name "=" value
value   := number | complex | list
complex := number ("+"|"-") number "i"
list    := "[" value ("," value)* "]"
kind    := dimer | nsite | two_photon | spin_orbit | two_photon_parallel
(whitespace is insignificant)"#;

const MAX_LIST_DEPTH: usize = 16;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

/// A value with the position it was written at. The position does not take
/// part in equality, so a printed and reparsed spec compares equal.
#[derive(Debug, Clone)]
pub struct Located<T> {
    pub value: T,
    pub at: Location,
}

impl<T: PartialEq> PartialEq for Located<T> {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl<T> Located<T> {
    fn new(value: T, at: Location) -> Self {
        Self { value, at }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub at: Location,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.at, self.message)?;
        if !self.expected.is_empty() {
            write!(f, "; expected {}", self.expected.join(" or "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

/// A domain error raised while evaluating a spec, tied to its source position.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{at}: {message}")]
pub struct EvalError {
    pub at: Location,
    pub message: String,
}

impl EvalError {
    fn domain(at: Location, err: DomainError) -> Self {
        Self {
            at,
            message: err.to_string(),
        }
    }
}

/// State families that are parameterized by `p1`, `eps`, `phase`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoSiteKind {
    Dimer,
    TwoPhoton,
    SpinOrbit,
    TwoPhotonParallel,
}

impl TwoSiteKind {
    pub const ALL: [TwoSiteKind; 4] = [
        TwoSiteKind::Dimer,
        TwoSiteKind::TwoPhoton,
        TwoSiteKind::SpinOrbit,
        TwoSiteKind::TwoPhotonParallel,
    ];

    pub fn keyword(&self) -> &'static str {
        match self {
            TwoSiteKind::Dimer => "dimer",
            TwoSiteKind::TwoPhoton => "two_photon",
            TwoSiteKind::SpinOrbit => "spin_orbit",
            TwoSiteKind::TwoPhotonParallel => "two_photon_parallel",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }

    pub fn basis(&self) -> ScenarioBasis {
        match self {
            TwoSiteKind::Dimer => ScenarioBasis::Dimer,
            TwoSiteKind::TwoPhoton => ScenarioBasis::TwoPhotonAntiparallel,
            TwoSiteKind::SpinOrbit => ScenarioBasis::SpinOrbit,
            TwoSiteKind::TwoPhotonParallel => ScenarioBasis::TwoPhotonParallel,
        }
    }
}

const NSITE: &str = "nsite";
const TWO_SITE_PARAMS: [&str; 3] = ["p1", "eps", "phase"];
const NSITE_PARAMS: [&str; 2] = ["amps", "eps"];

/// `kind(p1=.., eps=.., phase=..)`. Missing `p1`/`eps` are reported by [`evaluate`].
#[derive(Debug, Clone)]
pub struct TwoSiteSpec {
    pub kind: TwoSiteKind,
    pub p1: Option<Located<f64>>,
    pub eps: Option<Located<f64>>,
    /// Defaults to 0 when omitted.
    pub phase: Located<f64>,
    pub at: Location,
}

/// `nsite(amps=[..], eps=..)`.
#[derive(Debug, Clone)]
pub struct NSiteSpec {
    pub amps: Option<Located<Vec<Complex64>>>,
    pub eps: Option<Located<f64>>,
    pub at: Location,
}

impl PartialEq for TwoSiteSpec {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.p1 == other.p1
            && self.eps == other.eps
            && self.phase == other.phase
    }
}

impl PartialEq for NSiteSpec {
    fn eq(&self, other: &Self) -> bool {
        self.amps == other.amps && self.eps == other.eps
    }
}

/// Parsed form of a state description.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    TwoSite(TwoSiteSpec),
    NSite(NSiteSpec),
}

impl StateSpec {
    pub fn kind_keyword(&self) -> &'static str {
        match self {
            StateSpec::TwoSite(s) => s.kind.keyword(),
            StateSpec::NSite(_) => NSITE,
        }
    }
}

fn write_complex(f: &mut fmt::Formatter<'_>, z: &Complex64) -> fmt::Result {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    write!(f, "{}{}{}i", z.re, sign, z.im.abs())
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        match self {
            StateSpec::TwoSite(s) => {
                if let Some(p1) = &s.p1 {
                    parts.push(format!("p1={}", p1.value));
                }
                if let Some(eps) = &s.eps {
                    parts.push(format!("eps={}", eps.value));
                }
                parts.push(format!("phase={}", s.phase.value));
            }
            StateSpec::NSite(s) => {
                if let Some(amps) = &s.amps {
                    let items: Vec<String> = amps
                        .value
                        .iter()
                        .map(|z| format!("{}", ComplexLiteral(*z)))
                        .collect();
                    parts.push(format!("amps=[{}]", items.join(", ")));
                }
                if let Some(eps) = &s.eps {
                    parts.push(format!("eps={}", eps.value));
                }
            }
        }
        write!(f, "{}({})", self.kind_keyword(), parts.join(", "))
    }
}

struct ComplexLiteral(Complex64);

impl fmt::Display for ComplexLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_complex(f, &self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
    Plus,
    Minus,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Number(x) => format!("number {x}"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Equals => "'='".into(),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Location)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut column) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let at = Location { line, column };
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            column += 1;
            i += 1;
            continue;
        }
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Equals),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, at));
            column += 1;
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), at));
        } else if c.is_ascii_digit()
            || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let digits = |i: &mut usize| {
                while *i < chars.len() && chars[*i].is_ascii_digit() {
                    *i += 1;
                }
            };
            digits(&mut i);
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                digits(&mut i);
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    digits(&mut i);
                }
            }
            let literal: String = chars[start..i].iter().collect();
            let value: f64 = literal.parse().map_err(|_| ParseError {
                at,
                message: format!("malformed number '{literal}'"),
                expected: vec![],
            })?;
            if !value.is_finite() {
                return Err(ParseError {
                    at,
                    message: format!("number '{literal}' is not finite"),
                    expected: vec![],
                });
            }
            out.push((Tok::Number(value), at));
        } else {
            return Err(ParseError {
                at,
                message: format!("unexpected character '{}'", c.escape_debug()),
                expected: vec![],
            });
        }
        column += i - start;
    }
    out.push((Tok::Eof, Location { line, column }));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Real(f64),
    Complex(Complex64),
    List(Vec<Value>),
}

struct Parser {
    tokens: Vec<(Tok, Location)>,
    pos: usize,
}

fn expected_set(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn here(&self) -> Location {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Location) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError {
            at: self.here(),
            message: format!("unexpected {}", self.peek().describe()),
            expected: expected_set(expected),
        }
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<Location, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            Err(self.unexpected(&[name]))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Location), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let at = self.bump().1;
                Ok((s, at))
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    /// `["+"|"-"] NUMBER`
    fn signed_number(&mut self) -> Result<f64, ParseError> {
        let negative = match self.peek() {
            Tok::Minus => {
                self.bump();
                true
            }
            Tok::Plus => {
                self.bump();
                false
            }
            _ => false,
        };
        match *self.peek() {
            Tok::Number(x) => {
                self.bump();
                Ok(if negative { -x } else { x })
            }
            _ => Err(self.unexpected(&["number"])),
        }
    }

    fn value(&mut self, depth: usize) -> Result<Value, ParseError> {
        match self.peek() {
            Tok::LBracket => {
                if depth >= MAX_LIST_DEPTH {
                    return Err(ParseError {
                        at: self.here(),
                        message: format!("lists nested deeper than {MAX_LIST_DEPTH}"),
                        expected: vec![],
                    });
                }
                self.bump();
                let mut items = vec![self.value(depth + 1)?];
                loop {
                    match self.peek() {
                        Tok::Comma => {
                            self.bump();
                            items.push(self.value(depth + 1)?);
                        }
                        Tok::RBracket => {
                            self.bump();
                            return Ok(Value::List(items));
                        }
                        _ => return Err(self.unexpected(&["','", "']'"])),
                    }
                }
            }
            Tok::Number(_) | Tok::Plus | Tok::Minus => {
                let re = self.signed_number()?;
                let negative = match self.peek() {
                    Tok::Plus => false,
                    Tok::Minus => true,
                    _ => return Ok(Value::Real(re)),
                };
                self.bump();
                let im = match *self.peek() {
                    Tok::Number(x) => {
                        self.bump();
                        x
                    }
                    _ => return Err(self.unexpected(&["number"])),
                };
                match self.peek() {
                    Tok::Ident(s) if s == "i" => {
                        self.bump();
                    }
                    _ => return Err(self.unexpected(&["'i'"])),
                }
                Ok(Value::Complex(Complex64::new(
                    re,
                    if negative { -im } else { im },
                )))
            }
            _ => Err(self.unexpected(&["number", "'['"])),
        }
    }

    fn spec(&mut self) -> Result<StateSpec, ParseError> {
        let kinds: Vec<&str> = TwoSiteKind::ALL
            .iter()
            .map(|k| k.keyword())
            .chain(std::iter::once(NSITE))
            .collect();
        let (kind, at) = self.ident("state kind")?;
        let two_site = TwoSiteKind::from_keyword(&kind);
        if two_site.is_none() && kind != NSITE {
            return Err(ParseError {
                at,
                message: format!("unknown kind '{kind}'"),
                expected: expected_set(&kinds),
            });
        }
        let names: &[&str] = if two_site.is_some() {
            &TWO_SITE_PARAMS
        } else {
            &NSITE_PARAMS
        };

        self.expect(Tok::LParen, "'('")?;
        let mut params: Vec<(String, Location, Value, Location)> = Vec::new();
        loop {
            let (name, name_at) = self.ident("parameter name")?;
            if !names.contains(&name.as_str()) {
                return Err(ParseError {
                    at: name_at,
                    message: format!("unknown parameter '{name}' for {kind}"),
                    expected: expected_set(names),
                });
            }
            if params.iter().any(|p| p.0 == name) {
                return Err(ParseError {
                    at: name_at,
                    message: format!("duplicate parameter '{name}'"),
                    expected: vec![],
                });
            }
            self.expect(Tok::Equals, "'='")?;
            let value_at = self.here();
            let value = self.value(0)?;
            params.push((name, name_at, value, value_at));
            match self.peek() {
                Tok::Comma => {
                    self.bump();
                }
                Tok::RParen => {
                    self.bump();
                    break;
                }
                _ => return Err(self.unexpected(&["','", "')'"])),
            }
        }
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected(&["end of input"]));
        }

        let real = |name: &str, v: &Value, at: Location| match v {
            Value::Real(x) => Ok(Located::new(*x, at)),
            _ => Err(ParseError {
                at,
                message: format!("{name} takes a real number"),
                expected: expected_set(&["number"]),
            }),
        };

        match two_site {
            Some(kind) => {
                let mut spec = TwoSiteSpec {
                    kind,
                    p1: None,
                    eps: None,
                    phase: Located::new(0.0, at),
                    at,
                };
                for (name, _, value, value_at) in &params {
                    let x = real(name, value, *value_at)?;
                    match name.as_str() {
                        "p1" => spec.p1 = Some(x),
                        "eps" => spec.eps = Some(x),
                        _ => spec.phase = x,
                    }
                }
                Ok(StateSpec::TwoSite(spec))
            }
            None => {
                let mut spec = NSiteSpec {
                    amps: None,
                    eps: None,
                    at,
                };
                for (name, _, value, value_at) in &params {
                    if name == "eps" {
                        spec.eps = Some(real(name, value, *value_at)?);
                        continue;
                    }
                    let shape_error = || ParseError {
                        at: *value_at,
                        message: "amps takes a list of real or complex numbers".into(),
                        expected: expected_set(&["'['"]),
                    };
                    let Value::List(items) = value else {
                        return Err(shape_error());
                    };
                    let amps = items
                        .iter()
                        .map(|v| match v {
                            Value::Real(x) => Ok(Complex64::new(*x, 0.0)),
                            Value::Complex(z) => Ok(*z),
                            Value::List(_) => Err(shape_error()),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    spec.amps = Some(Located::new(amps, *value_at));
                }
                Ok(StateSpec::NSite(spec))
            }
        }
    }
}

/// Parses one state description.
pub fn parse(text: &str) -> Result<StateSpec, ParseError> {
    let tokens = lex(text)?;
    Parser { tokens, pos: 0 }.spec()
}

/// A spec turned into a validated state plus the basis it is written in.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluated {
    pub state: SingleExcitationState,
    pub basis: ScenarioBasis,
}

fn required<T: Clone>(
    v: &Option<Located<T>>,
    name: &str,
    at: Location,
) -> Result<Located<T>, EvalError> {
    v.clone().ok_or_else(|| EvalError {
        at,
        message: format!("missing parameter {name}"),
    })
}

/// Builds the state a spec describes. `nsite` specs use the dimer basis.
pub fn evaluate(spec: &StateSpec) -> Result<Evaluated, EvalError> {
    match spec {
        StateSpec::TwoSite(s) => {
            let p1 = required(&s.p1, "p1", s.at)?;
            if !(0.0..=1.0).contains(&p1.value) {
                return Err(EvalError::domain(
                    p1.at,
                    DomainError::ProbabilityOutOfRange {
                        name: "p1",
                        value: p1.value,
                    },
                ));
            }
            let eps = required(&s.eps, "eps", s.at)?;
            let state = SingleExcitationState::dimer(p1.value, eps.value, s.phase.value)
                .map_err(|e| EvalError::domain(eps.at, e))?;
            Ok(Evaluated {
                state,
                basis: s.kind.basis(),
            })
        }
        StateSpec::NSite(s) => {
            let amps = required(&s.amps, "amps", s.at)?;
            let eps = required(&s.eps, "eps", s.at)?;
            let state = SingleExcitationState::new(amps.value.clone(), eps.value).map_err(|e| {
                let at = match e {
                    DomainError::EpsilonOutOfRange(_) => eps.at,
                    _ => amps.at,
                };
                EvalError::domain(at, e)
            })?;
            Ok(Evaluated {
                state,
                basis: ScenarioBasis::Dimer,
            })
        }
    }
}
