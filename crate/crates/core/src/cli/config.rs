//! Line-oriented run configuration: `section.key = value unit`.
//!
//! Every physical quantity carries a unit tag that is converted to the key's
//! canonical unit on parse. Rates quoted in Hz or rad/s become multiples of
//! γ_r, so they are resolved after `medium.gamma_r` is known. Serialization
//! writes canonical units with shortest round-trip numbers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::atomic::{build_lambda_scheme, build_rb87_d1_scheme, LevelScheme, RateUnits, Rb87D1Config};
use crate::error::{Error, Result};
use crate::inference::{MatchWeights, RootOptions};
use crate::lambda::{FieldState, MediumParams, MediumSpec};
use crate::multilevel::{DecaySchedule, SolverConfig, VelocityGrid};
use crate::trapping::TrappingModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    SimulateAnalytic,
    SimulateMultilevel,
    ScanDensity,
    Fit,
    ThresholdReport,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::SimulateAnalytic,
        Mode::SimulateMultilevel,
        Mode::ScanDensity,
        Mode::Fit,
        Mode::ThresholdReport,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SimulateAnalytic => "simulate-analytic",
            Mode::SimulateMultilevel => "simulate-multilevel",
            Mode::ScanDensity => "scan-density",
            Mode::Fit => "fit",
            Mode::ThresholdReport => "threshold-report",
        }
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

/// Physical dimension of a quantity key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Density,
    Length,
    /// Rates and detunings, canonically in units of γ_r.
    Rate,
    /// Absolute cyclic frequency, canonically MHz.
    Frequency,
    Larmor,
    Field,
    Area,
    Volume,
    Temperature,
}

enum Conv {
    Scale(f64),
    /// Cyclic frequency with the given scale to Hz, divided by γ_r.
    CyclicPerGammaR(f64),
    /// Angular rate divided by γ_r.
    AngularPerGammaR,
    Offset(f64),
}

const TWO_PI: f64 = std::f64::consts::TAU;

fn unit_table(dim: Dim) -> &'static [(&'static str, Conv)] {
    use Conv::*;
    match dim {
        Dim::Density => &[("cm^-3", Scale(1.0)), ("m^-3", Scale(1e-6))],
        Dim::Length => &[("cm", Scale(1.0)), ("mm", Scale(0.1)), ("m", Scale(100.0)), ("um", Scale(1e-4)), ("nm", Scale(1e-7))],
        Dim::Rate => &[
            ("gamma_r", Scale(1.0)),
            ("Hz", CyclicPerGammaR(1.0)),
            ("kHz", CyclicPerGammaR(1e3)),
            ("MHz", CyclicPerGammaR(1e6)),
            ("rad/s", AngularPerGammaR),
            ("s^-1", AngularPerGammaR),
        ],
        Dim::Frequency => &[("MHz", Scale(1.0)), ("kHz", Scale(1e-3)), ("Hz", Scale(1e-6)), ("GHz", Scale(1e3)), ("rad/s", Scale(1e-6 / TWO_PI))],
        Dim::Larmor => &[("MHz/G", Scale(1.0)), ("kHz/G", Scale(1e-3)), ("Hz/G", Scale(1e-6)), ("rad/s/G", Scale(1e-6 / TWO_PI))],
        Dim::Field => &[("G", Scale(1.0)), ("mG", Scale(1e-3)), ("T", Scale(1e4)), ("uT", Scale(1e-2))],
        Dim::Area => &[("cm^2", Scale(1.0)), ("m^2", Scale(1e4))],
        Dim::Volume => &[("cm^3", Scale(1.0)), ("m^3", Scale(1e6))],
        Dim::Temperature => &[("K", Offset(0.0)), ("degC", Offset(273.15))],
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Quantity(Dim, &'static str),
    /// A quantity, or the literal `auto`.
    AutoQuantity(Dim, &'static str),
    Ratio,
    AutoRatio,
    Count,
    Choice(&'static [&'static str]),
    Text,
    Flag,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Count(u64),
    Text(String),
    Flag(bool),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Default,
    File { line: usize },
    Override,
}

struct KeySpec {
    key: &'static str,
    kind: Kind,
    default: fn() -> Value,
}

macro_rules! key {
    ($k:literal, $kind:expr, $def:expr) => {
        KeySpec { key: $k, kind: $kind, default: || $def }
    };
}

const SCHEMES: &[&str] = &["rb87-d1", "lambda"];
const MODELS: &[&str] = &["analytic", "multilevel"];
const SCHEDULES: &[&str] = &["trapping", "explicit", "constant"];
const MODES: &[&str] = &["simulate-analytic", "simulate-multilevel", "scan-density", "fit", "threshold-report"];

fn text(s: &str) -> Value {
    Value::Text(s.to_string())
}

static KEYS: &[KeySpec] = &[
    key!("run.mode", Kind::Choice(MODES), text("")),
    key!("medium.density", Kind::Quantity(Dim::Density, "cm^-3"), Value::Num(5e11)),
    key!("medium.wavelength", Kind::Quantity(Dim::Length, "nm"), Value::Num(794.8)),
    key!("medium.gamma_r", Kind::Quantity(Dim::Frequency, "MHz"), Value::Num(2.87)),
    key!("medium.gamma_0", Kind::Quantity(Dim::Rate, "gamma_r"), Value::Num(0.004)),
    key!("medium.doppler_width", Kind::Quantity(Dim::Rate, "gamma_r"), Value::Num(100.0)),
    key!("medium.length", Kind::Quantity(Dim::Length, "cm"), Value::Num(5.0)),
    key!("medium.beam_diameter", Kind::Quantity(Dim::Length, "cm"), Value::Num(0.2)),
    key!("beam.rabi_frequency", Kind::Quantity(Dim::Rate, "gamma_r"), Value::Num(3.6)),
    key!("beam.field", Kind::Quantity(Dim::Field, "G"), Value::Num(0.0)),
    key!("scheme.kind", Kind::Choice(SCHEMES), text("rb87-d1")),
    key!("scheme.hyperfine_splitting", Kind::Quantity(Dim::Frequency, "MHz"), Value::Num(814.5)),
    key!("scheme.leak_fraction", Kind::AutoRatio, Value::Auto),
    key!("constants.bohr", Kind::Quantity(Dim::Larmor, "MHz/G"), Value::Num(1.3996)),
    key!("solver.velocity_classes", Kind::Count, Value::Count(101)),
    key!("solver.grid_span", Kind::Ratio, Value::Num(4.0)),
    key!("solver.z_steps", Kind::Count, Value::Count(20)),
    key!("solver.gamma_eff", Kind::Quantity(Dim::Rate, "gamma_r"), Value::Num(0.004)),
    key!("solver.laser_detuning", Kind::Quantity(Dim::Rate, "gamma_r"), Value::Num(0.0)),
    key!("solver.pumping_rate", Kind::Quantity(Dim::Rate, "gamma_r"), Value::Num(0.0)),
    key!("solver.b_step", Kind::AutoQuantity(Dim::Field, "G"), Value::Auto),
    key!("trapping.n_threshold", Kind::Quantity(Dim::Density, "cm^-3"), Value::Num(5e10)),
    key!("trapping.n_beam", Kind::Quantity(Dim::Density, "cm^-3"), Value::Num(5e11)),
    key!("trapping.slope_low", Kind::Quantity(Dim::Volume, "cm^3"), Value::Num(1e-12)),
    key!("trapping.slope_high", Kind::Quantity(Dim::Volume, "cm^3"), Value::Num(5e-13)),
    key!("trapping.exponent", Kind::Ratio, Value::Num(1.0)),
    key!("trapping.escape_rate", Kind::Quantity(Dim::Rate, "gamma_r"), Value::Num(1.0)),
    key!("trapping.cross_section", Kind::Quantity(Dim::Area, "cm^2"), Value::Num(2e-14)),
    key!("trapping.temperature", Kind::AutoQuantity(Dim::Temperature, "K"), Value::Auto),
    key!("scan.n_min", Kind::Quantity(Dim::Density, "cm^-3"), Value::Num(1e10)),
    key!("scan.n_max", Kind::Quantity(Dim::Density, "cm^-3"), Value::Num(5e11)),
    key!("scan.points", Kind::Count, Value::Count(12)),
    key!("scan.model", Kind::Choice(MODELS), text("analytic")),
    key!("scan.schedule", Kind::Choice(SCHEDULES), text("trapping")),
    key!("fit.low_density_transmission", Kind::Ratio, Value::Num(0.95)),
    key!("fit.simulation", Kind::Flag, Value::Flag(false)),
    key!("fit.weight_transmission", Kind::Ratio, Value::Num(1.0)),
    key!("fit.weight_slope", Kind::Ratio, Value::Num(1.0)),
    key!("fit.clamp", Kind::Ratio, Value::Num(0.05)),
    key!("fit.bracket_low", Kind::Ratio, Value::Num(0.1)),
    key!("fit.bracket_high", Kind::Ratio, Value::Num(100.0)),
    key!("fit.tolerance", Kind::Ratio, Value::Num(1e-6)),
    key!("validity.margin", Kind::Ratio, Value::Num(1.0)),
    key!("io.input", Kind::Text, text("")),
    key!("io.output_dir", Kind::Text, text("out")),
    key!("io.samples", Kind::Count, Value::Count(101)),
];

fn spec(key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.key == key)
}

/// Parsed, validated configuration with per-key provenance.
#[derive(Debug, Clone)]
pub struct RunConfig {
    values: BTreeMap<&'static str, Value>,
    provenance: BTreeMap<&'static str, Provenance>,
}

impl PartialEq for RunConfig {
    /// Equality of settings; provenance is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.values == other.values
    }
}

/// A value as written, before unit resolution.
struct Raw {
    key: &'static str,
    value: String,
    unit: String,
    line: usize,
    origin: Provenance,
}

fn split_line(line: &str, lineno: usize) -> Result<Option<(String, String, String)>> {
    let body = match line.find('#') {
        // A `#` inside a quoted value is kept.
        Some(pos) if !line[..pos].contains('"') => &line[..pos],
        _ => line,
    };
    let body = body.trim();
    if body.is_empty() {
        return Ok(None);
    }
    let (key, rhs) = body
        .split_once('=')
        .ok_or_else(|| Error::Parse { line: lineno, msg: format!("expected `key = value unit`, got `{body}`") })?;
    let key = key.trim().to_string();
    let rhs = rhs.trim();
    let (value, unit) = if let Some(rest) = rhs.strip_prefix('"') {
        let end = rest
            .find('"')
            .ok_or_else(|| Error::Parse { line: lineno, msg: "unterminated quoted value".into() })?;
        (rest[..end].to_string(), rest[end + 1..].trim().to_string())
    } else {
        let mut parts = rhs.split_whitespace();
        let v = parts
            .next()
            .ok_or_else(|| Error::Parse { line: lineno, msg: format!("missing value for `{key}`") })?;
        let rest: Vec<&str> = parts.collect();
        if rest.len() > 1 {
            return Err(Error::Parse { line: lineno, msg: format!("trailing tokens after unit: `{}`", rest[1..].join(" ")) });
        }
        (v.to_string(), rest.first().map_or(String::new(), |s| s.to_string()))
    };
    Ok(Some((key, value, unit)))
}

fn parse_number(raw: &Raw) -> Result<f64> {
    let v: f64 = raw
        .value
        .parse()
        .map_err(|_| Error::Parse { line: raw.line, msg: format!("`{}` is not a number for `{}`", raw.value, raw.key) })?;
    if !v.is_finite() {
        return Err(Error::Parse { line: raw.line, msg: format!("`{}` must be finite", raw.key) });
    }
    Ok(v)
}

fn no_unit(raw: &Raw) -> Result<()> {
    if raw.unit.is_empty() || raw.unit == "1" {
        Ok(())
    } else {
        Err(Error::UnitMismatch { line: raw.line, key: raw.key.into(), unit: raw.unit.clone(), expected: "1".into() })
    }
}

fn convert(raw: &Raw, dim: Dim, canonical: &str, gamma_r_rad: f64) -> Result<f64> {
    let v = parse_number(raw)?;
    let table = unit_table(dim);
    let expected = || table.iter().map(|u| u.0).collect::<Vec<_>>().join(", ");
    if raw.unit.is_empty() {
        return Err(Error::UnitMismatch { line: raw.line, key: raw.key.into(), unit: "(none)".into(), expected: expected() });
    }
    if raw.unit == canonical {
        return Ok(v);
    }
    let conv = table
        .iter()
        .find(|u| u.0 == raw.unit)
        .map(|u| &u.1)
        .ok_or_else(|| Error::UnitMismatch { line: raw.line, key: raw.key.into(), unit: raw.unit.clone(), expected: expected() })?;
    let canon = &table.iter().find(|u| u.0 == canonical).expect("canonical unit listed").1;
    Ok(match (conv, canon) {
        (Conv::Scale(a), Conv::Scale(b)) => v * a / b,
        (Conv::Offset(a), Conv::Offset(b)) => v + a - b,
        (Conv::CyclicPerGammaR(s), _) => TWO_PI * v * s / gamma_r_rad,
        (Conv::AngularPerGammaR, _) => v / gamma_r_rad,
        _ => unreachable!("unit table mixes conversion kinds"),
    })
}

fn resolve(raw: &Raw, gamma_r_rad: f64) -> Result<Value> {
    let spec = spec(raw.key).expect("key validated on read");
    let is_auto = raw.value == "auto";
    match spec.kind {
        Kind::Quantity(dim, canon) => Ok(Value::Num(convert(raw, dim, canon, gamma_r_rad)?)),
        Kind::AutoQuantity(_, _) | Kind::AutoRatio if is_auto => {
            no_unit(raw)?;
            Ok(Value::Auto)
        }
        Kind::AutoQuantity(dim, canon) => Ok(Value::Num(convert(raw, dim, canon, gamma_r_rad)?)),
        Kind::Ratio | Kind::AutoRatio => {
            no_unit(raw)?;
            Ok(Value::Num(parse_number(raw)?))
        }
        Kind::Count => {
            no_unit(raw)?;
            raw.value
                .parse::<u64>()
                .map(Value::Count)
                .map_err(|_| Error::Parse { line: raw.line, msg: format!("`{}` expects a non-negative integer", raw.key) })
        }
        Kind::Choice(options) => {
            no_unit(raw)?;
            if options.contains(&raw.value.as_str()) {
                Ok(Value::Text(raw.value.clone()))
            } else {
                Err(Error::Parse {
                    line: raw.line,
                    msg: format!("`{}` must be one of {}, got `{}`", raw.key, options.join(", "), raw.value),
                })
            }
        }
        Kind::Text => {
            no_unit(raw)?;
            Ok(Value::Text(raw.value.clone()))
        }
        Kind::Flag => {
            no_unit(raw)?;
            match raw.value.as_str() {
                "true" => Ok(Value::Flag(true)),
                "false" => Ok(Value::Flag(false)),
                other => Err(Error::Parse { line: raw.line, msg: format!("`{}` expects true or false, got `{other}`", raw.key) }),
            }
        }
    }
}

fn read_line(line: &str, lineno: usize, origin: Provenance) -> Result<Option<Raw>> {
    let Some((key, value, unit)) = split_line(line, lineno)? else {
        return Ok(None);
    };
    let spec = spec(&key).ok_or(Error::UnknownKey { line: lineno, key: key.clone() })?;
    Ok(Some(Raw { key: spec.key, value, unit, line: lineno, origin }))
}

/// Parses config text; fails with [`Error::MissingMode`] when `run.mode` is absent.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, None, &[])
}

/// Parses config text, then applies a command-line mode and `key=value unit`
/// overrides (which win over the file). Override errors report line 0.
pub fn parse_config_with(text: &str, mode: Option<Mode>, overrides: &[String]) -> Result<RunConfig> {
    let mut raws: BTreeMap<&'static str, Raw> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(raw) = read_line(line, i + 1, Provenance::File { line: i + 1 })? {
            if let Some(prev) = raws.get(raw.key) {
                return Err(Error::Parse { line: raw.line, msg: format!("`{}` already set on line {}", raw.key, prev.line) });
            }
            raws.insert(raw.key, raw);
        }
    }
    for o in overrides {
        let line = o.replacen('=', " = ", 1);
        match read_line(&line, 0, Provenance::Override)? {
            Some(raw) => {
                raws.insert(raw.key, raw);
            }
            None => return Err(Error::Parse { line: 0, msg: format!("empty override `{o}`") }),
        }
    }
    if let Some(m) = mode {
        raws.insert(
            "run.mode",
            Raw { key: "run.mode", value: m.as_str().into(), unit: String::new(), line: 0, origin: Provenance::Override },
        );
    }

    let gamma_r_mhz = match raws.get("medium.gamma_r") {
        Some(r) => match resolve(r, 1.0)? {
            Value::Num(v) => v,
            _ => unreachable!(),
        },
        None => 2.87,
    };
    if !(gamma_r_mhz > 0.0) {
        return Err(Error::Config("medium.gamma_r must be positive".into()));
    }
    let gamma_r_rad = TWO_PI * gamma_r_mhz * 1e6;

    let mut values = BTreeMap::new();
    let mut provenance = BTreeMap::new();
    for spec in KEYS {
        match raws.get(spec.key) {
            Some(raw) => {
                values.insert(spec.key, resolve(raw, gamma_r_rad)?);
                provenance.insert(spec.key, raw.origin);
            }
            None => {
                values.insert(spec.key, (spec.default)());
                provenance.insert(spec.key, Provenance::Default);
            }
        }
    }
    let cfg = RunConfig { values, provenance };
    if cfg.text("run.mode").is_empty() {
        return Err(Error::MissingMode);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn format_value(v: &Value, kind: Kind) -> String {
    let unit = match kind {
        Kind::Quantity(_, u) | Kind::AutoQuantity(_, u) => u,
        _ => "",
    };
    let body = match v {
        Value::Num(x) => format!("{x:?}"),
        Value::Count(c) => c.to_string(),
        Value::Flag(b) => b.to_string(),
        Value::Auto => return "auto".into(),
        Value::Text(t) if t.is_empty() || t.contains(char::is_whitespace) || t.contains('#') => format!("\"{t}\""),
        Value::Text(t) => t.clone(),
    };
    if unit.is_empty() {
        body
    } else {
        format!("{body} {unit}")
    }
}

impl RunConfig {
    fn get(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or_else(|| panic!("unregistered config key `{key}`"))
    }

    pub fn mode(&self) -> Mode {
        self.text("run.mode").parse().expect("mode validated on parse")
    }

    pub fn num(&self, key: &str) -> f64 {
        match self.get(key) {
            Value::Num(v) => *v,
            other => panic!("`{key}` is not numeric: {other:?}"),
        }
    }

    /// Numeric value, or `None` for `auto`.
    pub fn num_or_auto(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Value::Auto => None,
            _ => Some(self.num(key)),
        }
    }

    pub fn count(&self, key: &str) -> u64 {
        match self.get(key) {
            Value::Count(v) => *v,
            other => panic!("`{key}` is not a count: {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            Value::Text(t) => t,
            other => panic!("`{key}` is not text: {other:?}"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        match self.get(key) {
            Value::Flag(b) => *b,
            other => panic!("`{key}` is not a flag: {other:?}"),
        }
    }

    pub fn provenance(&self, key: &str) -> Option<Provenance> {
        self.provenance.get(key).copied()
    }

    /// Canonical text. With `all = false` only non-default keys are written.
    pub fn to_text(&self, all: bool) -> String {
        let mut out = String::new();
        let mut section = "";
        for spec in KEYS {
            if !all && self.provenance[spec.key] == Provenance::Default {
                continue;
            }
            let this = spec.key.split('.').next().unwrap_or("");
            if this != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                section = this;
            }
            let _ = writeln!(out, "{} = {}", spec.key, format_value(&self.values[spec.key], spec.kind));
        }
        out
    }

    /// SHA-256 of the full canonical text, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text(true).as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            "medium.density",
            "medium.wavelength",
            "medium.doppler_width",
            "medium.length",
            "medium.beam_diameter",
            "constants.bohr",
            "scan.n_min",
            "scan.n_max",
            "trapping.n_beam",
            "trapping.exponent",
            "trapping.escape_rate",
            "fit.bracket_low",
            "fit.bracket_high",
            "fit.tolerance",
            "validity.margin",
        ];
        for key in positive {
            if !(self.num(key) > 0.0) {
                return Err(Error::Config(format!("`{key}` must be positive")));
            }
        }
        let non_negative = [
            "medium.gamma_0",
            "beam.rabi_frequency",
            "scheme.hyperfine_splitting",
            "solver.gamma_eff",
            "solver.pumping_rate",
            "trapping.n_threshold",
            "trapping.slope_low",
            "trapping.slope_high",
            "trapping.cross_section",
            "fit.weight_transmission",
            "fit.weight_slope",
            "fit.clamp",
        ];
        for key in non_negative {
            if !(self.num(key) >= 0.0) {
                return Err(Error::Config(format!("`{key}` must be non-negative")));
            }
        }
        if self.num("scan.n_max") < self.num("scan.n_min") {
            return Err(Error::Config("scan.n_max must not be below scan.n_min".into()));
        }
        if self.count("scan.points") == 0 || self.count("solver.velocity_classes") == 0 {
            return Err(Error::Config("scan.points and solver.velocity_classes must be positive".into()));
        }
        if self.count("solver.z_steps") < 2 {
            return Err(Error::Config("solver.z_steps must be at least 2".into()));
        }
        if self.count("io.samples") < 2 {
            return Err(Error::Config("io.samples must be at least 2".into()));
        }
        if self.num("fit.bracket_high") <= self.num("fit.bracket_low") {
            return Err(Error::Config("fit.bracket_high must exceed fit.bracket_low".into()));
        }
        if let Some(l) = self.num_or_auto("scheme.leak_fraction") {
            if !(0.0..1.0).contains(&l) {
                return Err(Error::Config("scheme.leak_fraction must lie in [0, 1)".into()));
            }
        }
        let t = self.num("fit.low_density_transmission");
        if !(0.0..1.0).contains(&t) {
            return Err(Error::Config("fit.low_density_transmission must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn units(&self) -> RateUnits<f64> {
        RateUnits::from_mhz(self.num("medium.gamma_r"), self.num("constants.bohr"))
    }

    pub fn medium(&self) -> Result<MediumParams<f64>> {
        MediumParams::new(MediumSpec {
            density: self.num("medium.density"),
            wavelength: self.num("medium.wavelength") * 1e-7,
            units: self.units(),
            gamma_0: self.num("medium.gamma_0"),
            doppler_width: self.num("medium.doppler_width"),
            length: self.num("medium.length"),
            beam_diameter: self.num("medium.beam_diameter"),
        })
    }

    pub fn scheme(&self) -> Result<LevelScheme<f64>> {
        match self.text("scheme.kind") {
            "lambda" => Ok(build_lambda_scheme()),
            _ => build_rb87_d1_scheme(&Rb87D1Config {
                hyperfine_mhz: self.num("scheme.hyperfine_splitting"),
                leak_fraction: self.num_or_auto("scheme.leak_fraction"),
                units: self.units(),
            }),
        }
    }

    pub fn solver(&self) -> Result<SolverConfig<f64>> {
        let grid = VelocityGrid::gaussian(
            self.num("medium.doppler_width"),
            self.count("solver.velocity_classes") as usize,
            self.num("solver.grid_span"),
        )?;
        let c = SolverConfig {
            velocity_grid: grid,
            z_steps: self.count("solver.z_steps") as usize,
            b_step: self.num_or_auto("solver.b_step"),
            laser_detuning: self.num("solver.laser_detuning"),
            gamma_eff: self.num("solver.gamma_eff"),
            pumping_rate: self.num("solver.pumping_rate"),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn trapping(&self) -> TrappingModel<f64> {
        TrappingModel {
            n_threshold: self.num("trapping.n_threshold"),
            n_beam: self.num("trapping.n_beam"),
            slope_low: self.num("trapping.slope_low"),
            slope_high: self.num("trapping.slope_high"),
            exponent: self.num("trapping.exponent"),
            escape_rate: self.num("trapping.escape_rate"),
        }
    }

    pub fn schedule(&self) -> DecaySchedule<f64> {
        let gamma_0 = self.num("medium.gamma_0");
        let model = self.trapping();
        match self.text("scan.schedule") {
            "explicit" => DecaySchedule::Explicit { gamma_0, model },
            "constant" => DecaySchedule::Constant,
            _ => DecaySchedule::Folded { gamma_0, model },
        }
    }

    /// Linearly polarized input with |Ω₀| = `beam.rabi_frequency`.
    pub fn input_field(&self) -> FieldState<f64> {
        let r = self.num("beam.rabi_frequency");
        FieldState::linear(r * r)
    }

    /// `scan.points` densities, log-spaced over [n_min, n_max].
    pub fn densities(&self) -> Vec<f64> {
        let (lo, hi) = (self.num("scan.n_min"), self.num("scan.n_max"));
        let k = self.count("scan.points") as usize;
        if k == 1 {
            return vec![lo];
        }
        let (a, b) = (lo.ln(), hi.ln());
        (0..k)
            .map(|i| match i {
                0 => lo,
                _ if i + 1 == k => hi,
                _ => (a + (b - a) * i as f64 / (k - 1) as f64).exp(),
            })
            .collect()
    }

    pub fn root_options(&self) -> RootOptions<f64> {
        RootOptions {
            weights: MatchWeights { transmission: self.num("fit.weight_transmission"), slope: self.num("fit.weight_slope") },
            lower: self.num("fit.bracket_low"),
            upper: self.num("fit.bracket_high"),
            rel_tol: self.num("fit.tolerance"),
            max_iter: 200,
        }
    }
}
