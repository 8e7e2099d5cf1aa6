//! Run configuration: TOML text with unit-suffixed keys.
//!
//! Every physical quantity carries its unit in the key name, for example
//! `g_mhz = 5.5`, `t1_us = 5`, `kappa_per_s = 3.9e6` or `phi2_deg = 180`.
//! Frequencies are ordinary (divided by 2π) in the file and angular inside.
//! Keys may sit at the top level or in their own section (`[device]`,
//! `[drive]`, ...).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use toml::de::{DeTable, DeValue};

use rabisim_core::hamiltonian::ModelOptions;
use rabisim_core::lindblad::Tolerances;
use rabisim_core::params::DeviceParams;
use rabisim_core::state::QubitPreparation;
use rabisim_core::{mhz, TAU};

use crate::experiments::bias_tee::{BiasTeeConfig, Segment};
use crate::experiments::revival::ViolationMode;
use crate::experiments::Frame;
use crate::report::format_value;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    At { line: usize, key: String, message: String },
    #[error("--set {key}: {message}")]
    Override { key: String, message: String },
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// The simulations the binary can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    VacuumRabi,
    DetuningMap,
    CollapseRevival,
    FullRabi,
    VerifyScheme,
    Parasitic,
    ViolateConstraint,
    AvoidedCrossing,
    TransmonLevels,
    BiasTee,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Self::VacuumRabi,
        Self::DetuningMap,
        Self::CollapseRevival,
        Self::FullRabi,
        Self::VerifyScheme,
        Self::Parasitic,
        Self::ViolateConstraint,
        Self::AvoidedCrossing,
        Self::TransmonLevels,
        Self::BiasTee,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::VacuumRabi => "vacuum-rabi",
            Self::DetuningMap => "detuning-map",
            Self::CollapseRevival => "collapse-revival",
            Self::FullRabi => "full-rabi",
            Self::VerifyScheme => "verify-scheme",
            Self::Parasitic => "parasitic",
            Self::ViolateConstraint => "violate-constraint",
            Self::AvoidedCrossing => "avoided-crossing",
            Self::TransmonLevels => "transmon-levels",
            Self::BiasTee => "bias-tee",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Frequency,
    Rate,
    Time,
    Angle,
    Resistance,
    Real,
    Count,
    Flag,
    Text,
    FrequencyList,
    Segments,
}

const FREQ_UNITS: &[(&str, f64)] = &[("hz", 1.0), ("khz", 1e3), ("mhz", 1e6), ("ghz", 1e9)];
const RATE_UNITS: &[(&str, f64)] = &[("per_s", 1.0), ("per_ms", 1e3), ("per_us", 1e6), ("per_ns", 1e9)];
const TIME_UNITS: &[(&str, f64)] = &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9)];
const ANGLE_UNITS: &[(&str, f64)] = &[("rad", 1.0), ("deg", std::f64::consts::PI / 180.0)];
const OHM_UNITS: &[(&str, f64)] = &[("ohm", 1.0), ("kohm", 1e3)];

impl Kind {
    /// Unit suffixes and their factor to SI (before the 2π of frequencies).
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Self::Frequency | Self::FrequencyList => FREQ_UNITS,
            Self::Rate => RATE_UNITS,
            Self::Time | Self::Segments => TIME_UNITS,
            Self::Angle => ANGLE_UNITS,
            Self::Resistance => OHM_UNITS,
            _ => &[],
        }
    }

    /// Unit used when echoing a resolved configuration.
    fn display_unit(self) -> Option<(&'static str, f64)> {
        match self {
            Self::Frequency | Self::FrequencyList => Some(("mhz", 1e6)),
            Self::Rate => Some(("per_s", 1.0)),
            Self::Time | Self::Segments => Some(("ns", 1e-9)),
            Self::Angle => Some(("rad", 1.0)),
            Self::Resistance => Some(("ohm", 1.0)),
            _ => None,
        }
    }

    fn angular(self) -> bool {
        matches!(self, Self::Frequency | Self::FrequencyList)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Bound {
    Any,
    NonNegative,
    Positive,
    AtLeast(f64),
    Between(f64, f64),
}

impl Bound {
    fn check(self, v: f64) -> Result<(), String> {
        if !v.is_finite() {
            return Err("value must be finite".into());
        }
        let ok = match self {
            Self::Any => true,
            Self::NonNegative => v >= 0.0,
            Self::Positive => v > 0.0,
            Self::AtLeast(lo) => v >= lo,
            Self::Between(lo, hi) => (lo..=hi).contains(&v),
        };
        if ok {
            Ok(())
        } else {
            Err(match self {
                Self::NonNegative => "value must be >= 0".into(),
                Self::Positive => "value must be > 0".into(),
                Self::AtLeast(lo) => format!("value must be >= {lo}"),
                Self::Between(lo, hi) => format!("value must lie in [{lo}, {hi}]"),
                Self::Any => unreachable!(),
            })
        }
    }
}

struct KeySpec {
    name: &'static str,
    section: &'static str,
    kind: Kind,
    bound: Bound,
    choices: &'static [&'static str],
}

const fn key(name: &'static str, section: &'static str, kind: Kind, bound: Bound) -> KeySpec {
    KeySpec { name, section, kind, bound, choices: &[] }
}

const fn choice(name: &'static str, section: &'static str, choices: &'static [&'static str]) -> KeySpec {
    KeySpec { name, section, kind: Kind::Text, bound: Bound::Any, choices }
}

const EXPERIMENT_NAMES: &[&str] = &[
    "vacuum-rabi",
    "detuning-map",
    "collapse-revival",
    "full-rabi",
    "verify-scheme",
    "parasitic",
    "violate-constraint",
    "avoided-crossing",
    "transmon-levels",
    "bias-tee",
];

use Bound::{AtLeast, Any, Between, NonNegative, Positive};
use Kind::*;

const KEYS: &[KeySpec] = &[
    choice("experiment", "run", EXPERIMENT_NAMES),
    key("out_dir", "run", Text, Any),
    choice("frame", "run", &["rotating", "lab"]),
    choice("initial", "run", &["g", "e", "+", "-"]),
    key("parasitic", "run", Flag, Any),
    key("readout", "run", Flag, Any),
    key("rwa", "run", Flag, Any),
    key("dissipation", "run", Flag, Any),
    key("deterministic", "run", Flag, Any),
    key("epsilon", "device", Frequency, Positive),
    key("omega", "device", Frequency, Positive),
    key("g", "device", Frequency, NonNegative),
    key("omega_r", "device", Frequency, Positive),
    key("g_r", "device", Frequency, NonNegative),
    key("f", "device", Frequency, NonNegative),
    key("anharmonicity", "device", Frequency, Any),
    key("kappa", "device", Rate, NonNegative),
    key("t1", "device", Time, Positive),
    key("t2", "device", Time, Positive),
    key("eta_r", "device", Frequency, NonNegative),
    key("qubit_levels", "device", Count, Between(2.0, 3.0)),
    key("fock_dim", "device", Count, Between(2.0, 200.0)),
    key("readout_dim", "device", Count, Between(2.0, 50.0)),
    key("ej_over_ec", "device", Real, Positive),
    key("ec", "device", Frequency, Positive),
    key("ng", "device", Real, Any),
    key("charge_cutoff", "device", Count, Between(10.0, 500.0)),
    key("eta1", "drive", Frequency, NonNegative),
    key("eta2", "drive", Frequency, NonNegative),
    key("omega_eff", "drive", Frequency, Positive),
    key("omega2", "drive", Frequency, Positive),
    key("phi1", "drive", Angle, Any),
    key("phi2", "drive", Angle, Any),
    key("eta1_list", "drive", FrequencyList, Positive),
    key("omega_eff_list", "drive", FrequencyList, Positive),
    key("eta_r_list", "drive", FrequencyList, NonNegative),
    choice("violation", "drive", &["phase", "frequency", "both"]),
    key("t_end", "grid", Time, Positive),
    key("dt", "grid", Time, Positive),
    key("detuning_min", "sweep", Frequency, Any),
    key("detuning_max", "sweep", Frequency, Any),
    key("detuning_points", "sweep", Count, Between(1.0, 10_000.0)),
    key("check_detunings", "sweep", FrequencyList, Any),
    key("epsilon_min", "sweep", Frequency, Positive),
    key("epsilon_max", "sweep", Frequency, Positive),
    key("epsilon_points", "sweep", Count, Between(3.0, 100_000.0)),
    key("levels", "sweep", Count, Between(3.0, 20.0)),
    key("rtol", "solver", Real, Between(1e-14, 1e-2)),
    key("atol", "solver", Real, Between(1e-16, 1e-2)),
    key("max_steps", "solver", Count, AtLeast(1.0)),
    key("step_ceiling", "solver", Flag, Any),
    key("convergence_check", "solver", Flag, Any),
    key("tau", "bias_tee", Time, Positive),
    key("resistance", "bias_tee", Resistance, Positive),
    key("horizon", "bias_tee", Time, Positive),
    key("segments", "bias_tee", Segments, Positive),
    key("enabled", "retrieval", Flag, Any),
    key("weight", "retrieval", Real, NonNegative),
];

const SECTIONS: &[&str] = &["run", "device", "drive", "grid", "sweep", "solver", "bias_tee", "retrieval"];

/// A parsed setting in SI units (angular for frequencies).
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Flag(bool),
    Text(String),
    List(Vec<f64>),
    Segments(Vec<Segment>),
}

/// Explicitly set keys, before experiment defaults are applied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    values: BTreeMap<&'static str, Value>,
}

enum Raw<'a> {
    Num(f64),
    Flag(bool),
    Text(String),
    Array(Vec<Raw<'a>>),
    Other(&'a str),
}

fn raw_of<'a>(v: &DeValue<'a>) -> Result<Raw<'a>, String> {
    Ok(match v {
        DeValue::Integer(i) => {
            let s = i.as_str().replace('_', "");
            let digits = s.trim_start_matches(['+', '-']);
            let digits = digits.get(2..).filter(|_| i.radix() != 10).unwrap_or(digits);
            let mag = i64::from_str_radix(digits, i.radix()).map_err(|e| e.to_string())?;
            Raw::Num(if s.starts_with('-') { -mag as f64 } else { mag as f64 })
        }
        DeValue::Float(f) => Raw::Num(f.as_str().replace('_', "").parse::<f64>().map_err(|e| e.to_string())?),
        DeValue::Boolean(b) => Raw::Flag(*b),
        DeValue::String(s) => Raw::Text(s.to_string()),
        DeValue::Array(a) => Raw::Array(a.iter().map(|x| raw_of(x.get_ref())).collect::<Result<_, _>>()?),
        DeValue::Datetime(_) => Raw::Other("datetime"),
        DeValue::Table(_) => Raw::Other("table"),
    })
}

fn find_key(key: &str) -> Result<(&'static KeySpec, f64), String> {
    for spec in KEYS {
        let units = spec.kind.units();
        if units.is_empty() {
            if key == spec.name {
                return Ok((spec, 1.0));
            }
            continue;
        }
        if key == spec.name {
            let allowed: Vec<String> = units.iter().map(|(u, _)| format!("{}_{u}", spec.name)).collect();
            return Err(format!("`{key}` needs a unit suffix (one of {})", allowed.join(", ")));
        }
        if let Some(unit) = key.strip_prefix(spec.name).and_then(|r| r.strip_prefix('_')) {
            if let Some((_, f)) = units.iter().find(|(u, _)| *u == unit) {
                return Ok((spec, *f));
            }
        }
    }
    Err(format!("unknown key `{key}`"))
}

fn convert(spec: &KeySpec, key: &str, factor: f64, raw: Raw<'_>) -> Result<Value, String> {
    let scale = |x: f64| if spec.kind.angular() { x * factor * TAU } else { x * factor };
    let number = |raw: Raw<'_>| match raw {
        Raw::Num(x) => Ok(x),
        _ => Err(format!("`{key}` expects a number")),
    };
    match spec.kind {
        Frequency | Rate | Time | Angle | Resistance | Real => {
            let x = number(raw)?;
            spec.bound.check(x).map_err(|m| format!("`{key}`: {m}"))?;
            Ok(Value::Num(scale(x)))
        }
        Count => {
            let x = number(raw)?;
            if x.fract() != 0.0 {
                return Err(format!("`{key}` expects an integer"));
            }
            spec.bound.check(x).map_err(|m| format!("`{key}`: {m}"))?;
            Ok(Value::Num(x))
        }
        Flag => match raw {
            Raw::Flag(b) => Ok(Value::Flag(b)),
            _ => Err(format!("`{key}` expects true or false")),
        },
        Text => match raw {
            Raw::Text(s) => {
                if !spec.choices.is_empty() && !spec.choices.contains(&s.as_str()) {
                    return Err(format!("`{key}` must be one of {}", spec.choices.join(", ")));
                }
                Ok(Value::Text(s))
            }
            _ => Err(format!("`{key}` expects a string")),
        },
        FrequencyList => match raw {
            Raw::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    let x = number(item)?;
                    spec.bound.check(x).map_err(|m| format!("`{key}` entry: {m}"))?;
                    out.push(scale(x));
                }
                Ok(Value::List(out))
            }
            _ => Err(format!("`{key}` expects an array of numbers")),
        },
        Segments => match raw {
            Raw::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    let Raw::Array(pair) = item else {
                        return Err(format!("`{key}` expects [duration, level] pairs"));
                    };
                    let mut pair = pair.into_iter();
                    let (Some(d), Some(l), None) = (pair.next(), pair.next(), pair.next()) else {
                        return Err(format!("`{key}` expects [duration, level] pairs"));
                    };
                    let (d, l) = (number(d)?, number(l)?);
                    spec.bound.check(d).map_err(|m| format!("`{key}` duration: {m}"))?;
                    Bound::Any.check(l).map_err(|m| format!("`{key}` level: {m}"))?;
                    out.push(Segment { duration: d * factor, level: l });
                }
                if out.is_empty() {
                    return Err(format!("`{key}` needs at least one segment"));
                }
                Ok(Value::Segments(out))
            }
            _ => Err(format!("`{key}` expects an array of [duration, level] pairs")),
        },
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

impl RunConfig {
    fn insert(&mut self, key: &str, section: Option<&str>, raw: Raw<'_>) -> Result<(), String> {
        let (spec, factor) = find_key(key)?;
        if let Some(sec) = section {
            if sec != spec.section {
                return Err(format!("`{key}` belongs in [{}], not [{sec}]", spec.section));
            }
        }
        if self.values.contains_key(spec.name) {
            return Err(format!("`{}` is set more than once", spec.name));
        }
        let value = convert(spec, key, factor, raw)?;
        self.values.insert(spec.name, value);
        Ok(())
    }

    /// `--set key=value` with an optional `section.` prefix. The value is
    /// read as TOML and falls back to a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let err = |key: &str, message: String| ConfigError::Override { key: key.into(), message };
        let (lhs, rhs) = assignment.split_once('=').ok_or_else(|| err(assignment, "expected key=value".into()))?;
        let (lhs, rhs) = (lhs.trim(), rhs.trim());
        let (section, key) = match lhs.split_once('.') {
            Some((s, k)) => (Some(s), k),
            None => (None, lhs),
        };
        if let Some(s) = section {
            if !SECTIONS.contains(&s) {
                return Err(err(lhs, format!("unknown section `{s}`")));
            }
        }
        if let Ok((spec, _)) = find_key(key) {
            self.values.remove(spec.name);
        }
        let parsed = DeValue::parse(rhs).ok();
        let raw = match parsed.as_ref() {
            Some(v) => raw_of(v.get_ref()).map_err(|m| err(lhs, m))?,
            None => Raw::Text(rhs.to_string()),
        };
        self.insert(key, section, raw).map_err(|m| err(lhs, m))
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    fn num(&self, name: &str) -> Option<f64> {
        match self.values.get(name) {
            Some(Value::Num(x)) => Some(*x),
            _ => None,
        }
    }

    fn flag(&self, name: &str) -> Option<bool> {
        match self.values.get(name) {
            Some(Value::Flag(b)) => Some(*b),
            _ => None,
        }
    }

    fn text(&self, name: &str) -> Option<&str> {
        match self.values.get(name) {
            Some(Value::Text(s)) => Some(s),
            _ => None,
        }
    }

    fn list(&self, name: &str) -> Option<Vec<f64>> {
        match self.values.get(name) {
            Some(Value::List(v)) => Some(v.clone()),
            _ => None,
        }
    }

    pub fn experiment(&self) -> Option<Experiment> {
        self.text("experiment").and_then(Experiment::from_name)
    }

    /// Applies the experiment defaults and validates cross-key constraints.
    pub fn resolve(&self, experiment: Experiment) -> Result<Resolved, ConfigError> {
        use Experiment as X;
        if let Some(named) = self.experiment() {
            if named != experiment {
                return Err(ConfigError::Invalid(format!(
                    "configuration names experiment `{}` but `{}` was requested",
                    named.name(),
                    experiment.name()
                )));
            }
        }
        let mut p = DeviceParams::default();
        p.g = match experiment {
            X::CollapseRevival | X::FullRabi | X::ViolateConstraint => mhz(5.5),
            X::VerifyScheme | X::Parasitic => mhz(5.0),
            X::AvoidedCrossing => mhz(3.9),
            _ => p.g,
        };
        let swap = matches!(experiment, X::VacuumRabi | X::DetuningMap);
        macro_rules! apply {
            ($($field:ident),*) => { $( if let Some(x) = self.num(stringify!($field)) { p.$field = x; } )* };
        }
        apply!(epsilon, omega, g, omega_r, g_r, f, anharmonicity, kappa, t1, t2, eta_r, ej_over_ec, ec, ng);
        if self.num("epsilon").is_none() {
            p.epsilon = p.omega;
        }
        if swap && self.num("t2").is_none() {
            p.t2 = 2.0 * p.t1;
        }
        let count = |name: &str, default: usize| self.num(name).map_or(default, |x| x as usize);
        p.qubit_levels = count("qubit_levels", p.qubit_levels);
        p.fock_dim = count("fock_dim", p.fock_dim);
        p.readout_dim = count("readout_dim", p.readout_dim);
        p.charge_cutoff = count("charge_cutoff", p.charge_cutoff);
        p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

        let omega_eff = self.num("omega_eff").unwrap_or(match experiment {
            X::CollapseRevival => mhz(8.0),
            X::FullRabi | X::ViolateConstraint => mhz(6.0),
            _ => mhz(5.0),
        });
        if omega_eff >= p.omega {
            return Err(ConfigError::Invalid("omega_eff must be below omega".into()));
        }
        let period = TAU / omega_eff;
        let t_end = self.num("t_end").unwrap_or(match experiment {
            X::CollapseRevival => 2.3 * period,
            X::FullRabi | X::ViolateConstraint => 2.5 * period,
            _ => 1e-6,
        });
        let dt = self.num("dt").unwrap_or(1e-9);
        if dt > t_end / 4.0 {
            return Err(ConfigError::Invalid("dt must be at most a quarter of t_end".into()));
        }
        let violation = match self.text("violation").unwrap_or("both") {
            "phase" => vec![ViolationMode::PhaseMismatch],
            "frequency" => vec![ViolationMode::FrequencyMismatch],
            _ => vec![ViolationMode::PhaseMismatch, ViolationMode::FrequencyMismatch],
        };
        let frame = match self.text("frame") {
            Some("lab") => Frame::Lab,
            _ => Frame::Rotating,
        };
        let initial = match self.text("initial") {
            Some("g") => QubitPreparation::Ground,
            Some("+") => QubitPreparation::Plus,
            Some("-") => QubitPreparation::Minus,
            Some("e") => QubitPreparation::Excited,
            _ if matches!(experiment, X::VerifyScheme | X::FullRabi | X::ViolateConstraint) => QubitPreparation::Ground,
            _ => QubitPreparation::Excited,
        };
        let det_min = self.num("detuning_min").unwrap_or(mhz(-20.0));
        let det_max = self.num("detuning_max").unwrap_or(mhz(20.0));
        let det_points = count("detuning_points", 41);
        if det_points > 1 && det_max <= det_min {
            return Err(ConfigError::Invalid("detuning_max must exceed detuning_min".into()));
        }
        let detunings = (0..det_points)
            .map(|k| if det_points == 1 { det_min } else { det_min + (det_max - det_min) * k as f64 / (det_points - 1) as f64 })
            .collect();
        let eps_min = self.num("epsilon_min").unwrap_or(p.omega - mhz(30.0));
        let eps_max = self.num("epsilon_max").unwrap_or(p.omega + mhz(30.0));
        if eps_max <= eps_min {
            return Err(ConfigError::Invalid("epsilon_max must exceed epsilon_min".into()));
        }
        let defaults = Tolerances::default();
        let tol = Tolerances {
            rtol: self.num("rtol").unwrap_or(defaults.rtol),
            atol: self.num("atol").unwrap_or(defaults.atol),
            max_steps: self.num("max_steps").map_or(defaults.max_steps, |x| x as usize),
            step_ceiling: self.flag("step_ceiling").unwrap_or(defaults.step_ceiling),
            ..defaults
        };
        let bt = BiasTeeConfig::default();
        let bias_tee = BiasTeeConfig {
            segments: match self.values.get("segments") {
                Some(Value::Segments(s)) => s.clone(),
                _ => bt.segments,
            },
            dt: self.num("dt").unwrap_or(bt.dt),
            tau: self.num("tau").unwrap_or(bt.tau),
            resistance: self.num("resistance").unwrap_or(bt.resistance),
            horizon: self.num("horizon").unwrap_or(bt.horizon),
        };
        Ok(Resolved {
            experiment,
            options: ModelOptions {
                parasitic: self.flag("parasitic").unwrap_or(false),
                readout: self.flag("readout").unwrap_or(false),
                rwa: self.flag("rwa").unwrap_or(true),
            },
            frame,
            initial,
            dissipative: self.flag("dissipation").unwrap_or(!matches!(experiment, X::VerifyScheme | X::Parasitic)),
            eta1: self.num("eta1").unwrap_or(mhz(50.0)),
            eta2: self.num("eta2").unwrap_or(mhz(3.0)),
            omega_eff,
            omega2: self.num("omega2"),
            phi1: self.num("phi1").unwrap_or(0.0),
            phi2: self.num("phi2").or(self.num("phi1")).unwrap_or(0.0),
            eta1_list: self.list("eta1_list").unwrap_or_else(|| [40.0, 50.0, 60.0].map(mhz).to_vec()),
            omega_eff_list: self.list("omega_eff_list").unwrap_or_else(|| [2.0, 3.0, 5.0, 8.0].map(mhz).to_vec()),
            eta_r_list: self.list("eta_r_list").unwrap_or_else(|| [0.0, 2.5, 5.0].map(mhz).to_vec()),
            violation,
            t_end,
            dt,
            detunings,
            check_detunings: self.list("check_detunings").unwrap_or_else(|| vec![0.0, 2.0 * p.g, mhz(95.0)]),
            epsilon_range: (eps_min, eps_max),
            epsilon_points: count("epsilon_points", 121),
            levels: count("levels", 4),
            tol,
            convergence_check: self.flag("convergence_check").unwrap_or(false),
            bias_tee,
            retrieval: self.flag("enabled").unwrap_or(false).then(|| self.num("weight").unwrap_or(0.2)),
            out_dir: self.text("out_dir").map(PathBuf::from),
            params: p,
        })
    }
}

/// Parses configuration text. Identical text yields an identical config.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let table = DeTable::parse(text).map_err(|e| ConfigError::Syntax {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    let mut cfg = RunConfig::default();
    let mut entries: Vec<_> = table.get_ref().iter().collect();
    entries.sort_by_key(|(k, _)| k.span().start);
    for (k, v) in entries {
        let line = line_of(text, k.span().start);
        let name = k.get_ref().as_ref();
        let at = |message: String| ConfigError::At { line, key: name.to_string(), message };
        if let DeValue::Table(inner) = v.get_ref() {
            if !SECTIONS.contains(&name) {
                return Err(at(format!("unknown section [{name}]")));
            }
            let mut inner: Vec<_> = inner.iter().collect();
            inner.sort_by_key(|(k, _)| k.span().start);
            for (ik, iv) in inner {
                let iline = line_of(text, ik.span().start);
                let iname = ik.get_ref().as_ref();
                let raw = raw_of(iv.get_ref())
                    .map_err(|m| ConfigError::At { line: iline, key: iname.into(), message: m.clone() })?;
                if let Raw::Other(kind) = raw {
                    return Err(ConfigError::At { line: iline, key: iname.into(), message: format!("unexpected {kind}") });
                }
                cfg.insert(iname, Some(name), raw)
                    .map_err(|message| ConfigError::At { line: iline, key: iname.into(), message })?;
            }
            continue;
        }
        let raw = raw_of(v.get_ref()).map_err(at)?;
        if let Raw::Other(kind) = raw {
            return Err(at(format!("unexpected {kind}")));
        }
        cfg.insert(name, None, raw).map_err(at)?;
    }
    Ok(cfg)
}

/// A configuration with every default filled in, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub experiment: Experiment,
    pub params: DeviceParams,
    pub options: ModelOptions,
    pub frame: Frame,
    pub initial: QubitPreparation,
    pub dissipative: bool,
    pub eta1: f64,
    pub eta2: f64,
    pub omega_eff: f64,
    pub omega2: Option<f64>,
    pub phi1: f64,
    pub phi2: f64,
    pub eta1_list: Vec<f64>,
    pub omega_eff_list: Vec<f64>,
    pub eta_r_list: Vec<f64>,
    pub violation: Vec<ViolationMode>,
    pub t_end: f64,
    pub dt: f64,
    pub detunings: Vec<f64>,
    pub check_detunings: Vec<f64>,
    pub epsilon_range: (f64, f64),
    pub epsilon_points: usize,
    pub levels: usize,
    pub tol: Tolerances,
    /// Rerun with five more Fock levels and flag metrics that move by more than 1%.
    pub convergence_check: bool,
    pub bias_tee: BiasTeeConfig,
    /// Dispersive weight when the retrieval protocol is enabled.
    pub retrieval: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

fn show(kind: Kind, x: f64) -> String {
    match kind.display_unit() {
        Some((_, f)) if kind.angular() => format_value(x / TAU / f),
        Some((_, f)) => format_value(x / f),
        None => format_value(x),
    }
}

fn show_list(kind: Kind, v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| show(kind, *x)).collect();
    format!("[{}]", items.join(", "))
}

fn spec(name: &str) -> &'static KeySpec {
    KEYS.iter().find(|k| k.name == name).expect("known key")
}

impl Resolved {
    /// `(section, key with unit, TOML value)` for every setting.
    pub fn echo(&self) -> Vec<(&'static str, String, String)> {
        let mut out = Vec::new();
        let mut num = |name: &'static str, x: f64| {
            let s = spec(name);
            let key = match s.kind.display_unit() {
                Some((u, _)) => format!("{name}_{u}"),
                None => name.to_string(),
            };
            out.push((s.section, key, show(s.kind, x)));
        };
        let p = &self.params;
        num("epsilon", p.epsilon);
        num("omega", p.omega);
        num("g", p.g);
        num("omega_r", p.omega_r);
        num("g_r", p.g_r);
        num("f", p.f);
        num("anharmonicity", p.anharmonicity);
        num("kappa", p.kappa);
        num("t1", p.t1);
        num("t2", p.t2);
        num("eta_r", p.eta_r);
        num("qubit_levels", p.qubit_levels as f64);
        num("fock_dim", p.fock_dim as f64);
        num("readout_dim", p.readout_dim as f64);
        num("ej_over_ec", p.ej_over_ec);
        num("ec", p.ec);
        num("ng", p.ng);
        num("charge_cutoff", p.charge_cutoff as f64);
        num("eta1", self.eta1);
        num("eta2", self.eta2);
        num("omega_eff", self.omega_eff);
        if let Some(w) = self.omega2 {
            num("omega2", w);
        }
        num("phi1", self.phi1);
        num("phi2", self.phi2);
        num("t_end", self.t_end);
        num("dt", self.dt);
        num("epsilon_min", self.epsilon_range.0);
        num("epsilon_max", self.epsilon_range.1);
        num("epsilon_points", self.epsilon_points as f64);
        num("levels", self.levels as f64);
        num("rtol", self.tol.rtol);
        num("atol", self.tol.atol);
        num("max_steps", self.tol.max_steps as f64);
        num("tau", self.bias_tee.tau);
        num("resistance", self.bias_tee.resistance);
        num("horizon", self.bias_tee.horizon);
        if let Some(w) = self.retrieval {
            num("weight", w);
        }
        let q = |s: &str| format!("\"{s}\"");
        let b = |x: bool| x.to_string();
        out.push(("run", "experiment".into(), q(self.experiment.name())));
        out.push(("run", "frame".into(), q(self.frame.name())));
        out.push(("run", "initial".into(), q(crate::experiments::preparation_name(self.initial))));
        out.push(("run", "parasitic".into(), b(self.options.parasitic)));
        out.push(("run", "readout".into(), b(self.options.readout)));
        out.push(("run", "rwa".into(), b(self.options.rwa)));
        out.push(("run", "dissipation".into(), b(self.dissipative)));
        out.push(("solver", "step_ceiling".into(), b(self.tol.step_ceiling)));
        out.push(("solver", "convergence_check".into(), b(self.convergence_check)));
        out.push(("retrieval", "enabled".into(), b(self.retrieval.is_some())));
        let v = match self.violation.as_slice() {
            [ViolationMode::PhaseMismatch] => "phase",
            [ViolationMode::FrequencyMismatch] => "frequency",
            _ => "both",
        };
        out.push(("drive", "violation".into(), q(v)));
        for (name, list) in
            [("eta1_list", &self.eta1_list), ("omega_eff_list", &self.omega_eff_list), ("eta_r_list", &self.eta_r_list)]
        {
            out.push(("drive", format!("{name}_mhz"), show_list(FrequencyList, list)));
        }
        out.push(("sweep", "check_detunings_mhz".into(), show_list(FrequencyList, &self.check_detunings)));
        let segs: Vec<String> = self
            .bias_tee
            .segments
            .iter()
            .map(|s| format!("[{}, {}]", format_value(s.duration * 1e9), format_value(s.level)))
            .collect();
        out.push(("bias_tee", "segments_ns".into(), format!("[{}]", segs.join(", "))));
        if let Some(d) = &self.out_dir {
            out.push(("run", "out_dir".into(), q(&d.display().to_string())));
        }
        out.sort_by_key(|(s, _, _)| SECTIONS.iter().position(|x| x == s));
        out
    }

    /// TOML text that resolves back to this configuration (up to 12
    /// significant digits). The detuning sweep is echoed as its bounds.
    pub fn echo_toml(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (section, key, value) in self.echo() {
            if section != current {
                let _ = writeln!(out, "{}[{section}]", if current.is_empty() { "" } else { "\n" });
                current = section;
            }
            let _ = writeln!(out, "{key} = {value}");
            if section == "sweep" && key == "check_detunings_mhz" {
                let first = self.detunings.first().copied().unwrap_or(0.0);
                let last = self.detunings.last().copied().unwrap_or(first);
                let _ = writeln!(out, "detuning_min_mhz = {}", show(Frequency, first));
                let _ = writeln!(out, "detuning_max_mhz = {}", show(Frequency, last));
                let _ = writeln!(out, "detuning_points = {}", self.detunings.len());
            }
        }
        out
    }
}

/// Device defaults as `key = value` lines in file units.
pub fn list_defaults() -> String {
    let r = RunConfig::default().resolve(Experiment::VacuumRabi).expect("defaults resolve");
    let p = DeviceParams::default();
    let r = Resolved { params: p, ..r };
    r.echo()
        .into_iter()
        .filter(|(s, _, _)| *s == "device")
        .map(|(_, k, v)| format!("{k} = {v}\n"))
        .collect()
}
