//! Line-based `key = value unit` configuration.
//!
//! ```text
//! # closest tracks
//! scenario = propagate-counter
//!
//! [interaction]
//! a = 0.58 sigma
//!
//! [propagation]
//! step_frac = 0.005
//! ```
//!
//! Keys live in sections; anything before the first header belongs to the
//! top level. Quantities carry an optional unit, and each key has a default
//! unit used when none is written. `gamma` and `sigma` are relative units,
//! resolved against the configured γ and σ wherever those appear in the file.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{ChiModel, Feedback, Geometry};
use crate::units::{C6Convention, MICRON, SPEED_OF_LIGHT};
use crate::xpm::{ProfileSize, SlowPassMode, MIN_GRID};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        column,
        message: message.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    SusceptibilitySweep,
    BlockadeSweep,
    PropagateCounter,
    PropagateCo,
    Xpm,
    SlowPass,
    CustomSweep,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 7] = [
        ScenarioKind::SusceptibilitySweep,
        ScenarioKind::BlockadeSweep,
        ScenarioKind::PropagateCounter,
        ScenarioKind::PropagateCo,
        ScenarioKind::Xpm,
        ScenarioKind::SlowPass,
        ScenarioKind::CustomSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::SusceptibilitySweep => "susceptibility-sweep",
            ScenarioKind::BlockadeSweep => "blockade-sweep",
            ScenarioKind::PropagateCounter => "propagate-counter",
            ScenarioKind::PropagateCo => "propagate-co",
            ScenarioKind::Xpm => "xpm",
            ScenarioKind::SlowPass => "slow-pass",
            ScenarioKind::CustomSweep => "custom-sweep",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Scalars a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    A,
    Sigma,
    C6Scale,
    DeltaR,
    Delta1,
    /// Sets Δ1 = x and Δ2 = −x together.
    EitDetuning,
    OmegaC,
    GammaRg,
    TargetVg,
    Length,
    StepFrac,
    VgScale,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 12] = [
        SweepAxis::A,
        SweepAxis::Sigma,
        SweepAxis::C6Scale,
        SweepAxis::DeltaR,
        SweepAxis::Delta1,
        SweepAxis::EitDetuning,
        SweepAxis::OmegaC,
        SweepAxis::GammaRg,
        SweepAxis::TargetVg,
        SweepAxis::Length,
        SweepAxis::StepFrac,
        SweepAxis::VgScale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::A => "a",
            SweepAxis::Sigma => "sigma",
            SweepAxis::C6Scale => "c6_scale",
            SweepAxis::DeltaR => "delta_r",
            SweepAxis::Delta1 => "delta1",
            SweepAxis::EitDetuning => "eit_detuning",
            SweepAxis::OmegaC => "omega_c",
            SweepAxis::GammaRg => "gamma_rg",
            SweepAxis::TargetVg => "target_vg",
            SweepAxis::Length => "length",
            SweepAxis::StepFrac => "step_frac",
            SweepAxis::VgScale => "vg_scale",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    fn quantity(self) -> Quantity {
        match self {
            SweepAxis::A | SweepAxis::Length => Quantity::Length {
                default: "sigma",
                relative: true,
            },
            SweepAxis::Sigma => Quantity::Length {
                default: "um",
                relative: false,
            },
            SweepAxis::C6Scale | SweepAxis::StepFrac | SweepAxis::VgScale => Quantity::Ratio,
            SweepAxis::DeltaR | SweepAxis::Delta1 | SweepAxis::EitDetuning | SweepAxis::OmegaC | SweepAxis::GammaRg => {
                Quantity::Freq {
                    default: "gamma",
                    relative: true,
                }
            }
            SweepAxis::TargetVg => Quantity::Velocity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    pub gamma: f64,
    pub gamma_rg: f64,
    pub omega_c: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// g²N / Ω_c².
    pub g2n_ratio: f64,
    pub target_vg: f64,
    /// Explicit susceptibility amplitude; skips calibration when set.
    pub chi_amp: Option<f64>,
    pub lambda_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractionConfig {
    /// rad/s·m⁶.
    pub c6: f64,
    pub c6_units: C6Convention,
    pub a: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropagationConfig {
    pub length: f64,
    pub step_frac: f64,
    pub feedback: Feedback,
    pub absorption: bool,
    pub chi_model: ChiModel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumConfig {
    pub delta1_min: f64,
    pub delta1_max: f64,
    pub delta1_points: usize,
    pub delta_r_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockadeConfig {
    pub delta_r_start: f64,
    pub delta_r_end: f64,
    pub points: usize,
    pub plateau_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XpmConfig {
    pub geometry: Geometry,
    pub lengths: Vec<f64>,
    pub grid_n: usize,
    pub profile: ProfileSize,
    pub vg_scale: f64,
    pub slow_mode: SlowPassMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    /// SI (or dimensionless) values.
    pub values: Vec<f64>,
    pub base: ScenarioKind,
}

/// A fully resolved configuration, everything in SI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub system: SystemConfig,
    pub interaction: InteractionConfig,
    pub propagation: PropagationConfig,
    pub spectrum: SpectrumConfig,
    pub blockade: BlockadeConfig,
    pub xpm: XpmConfig,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Quantity {
    Freq { default: &'static str, relative: bool },
    Length { default: &'static str, relative: bool },
    Velocity,
    C6,
    Ratio,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Scalar(Quantity),
    List(Quantity),
    Int,
    Bool,
    Choice(&'static [&'static str]),
    /// Values whose unit depends on `sweep.axis`.
    AxisValues,
}

#[derive(Debug)]
struct KeyDef {
    section: &'static str,
    key: &'static str,
    kind: Kind,
}

const FREQ_G: Quantity = Quantity::Freq {
    default: "gamma",
    relative: true,
};
const LEN_S: Quantity = Quantity::Length {
    default: "sigma",
    relative: true,
};

const KEYS: &[KeyDef] = &[
    KeyDef {
        section: "",
        key: "scenario",
        kind: Kind::Choice(&[]),
    },
    KeyDef {
        section: "system",
        key: "gamma",
        kind: Kind::Scalar(Quantity::Freq {
            default: "MHz",
            relative: false,
        }),
    },
    KeyDef {
        section: "system",
        key: "gamma_rg",
        kind: Kind::Scalar(FREQ_G),
    },
    KeyDef {
        section: "system",
        key: "omega_c",
        kind: Kind::Scalar(FREQ_G),
    },
    KeyDef {
        section: "system",
        key: "delta1",
        kind: Kind::Scalar(FREQ_G),
    },
    KeyDef {
        section: "system",
        key: "delta2",
        kind: Kind::Scalar(FREQ_G),
    },
    KeyDef {
        section: "system",
        key: "g2n_ratio",
        kind: Kind::Scalar(Quantity::Ratio),
    },
    KeyDef {
        section: "system",
        key: "target_vg",
        kind: Kind::Scalar(Quantity::Velocity),
    },
    KeyDef {
        section: "system",
        key: "chi_amp",
        kind: Kind::Scalar(FREQ_G),
    },
    KeyDef {
        section: "system",
        key: "lambda_p",
        kind: Kind::Scalar(Quantity::Length {
            default: "nm",
            relative: false,
        }),
    },
    KeyDef {
        section: "interaction",
        key: "c6",
        kind: Kind::Scalar(Quantity::C6),
    },
    KeyDef {
        section: "interaction",
        key: "c6_units",
        kind: Kind::Choice(&["angular", "cyclic"]),
    },
    KeyDef {
        section: "interaction",
        key: "a",
        kind: Kind::Scalar(LEN_S),
    },
    KeyDef {
        section: "interaction",
        key: "sigma",
        kind: Kind::Scalar(Quantity::Length {
            default: "um",
            relative: false,
        }),
    },
    KeyDef {
        section: "propagation",
        key: "length",
        kind: Kind::Scalar(LEN_S),
    },
    KeyDef {
        section: "propagation",
        key: "step_frac",
        kind: Kind::Scalar(Quantity::Ratio),
    },
    KeyDef {
        section: "propagation",
        key: "feedback",
        kind: Kind::Choice(&["self-consistent", "disabled", "constant"]),
    },
    KeyDef {
        section: "propagation",
        key: "feedback_shift",
        kind: Kind::Scalar(FREQ_G),
    },
    KeyDef {
        section: "propagation",
        key: "absorption",
        kind: Kind::Bool,
    },
    KeyDef {
        section: "propagation",
        key: "chi_model",
        kind: Kind::Choice(&["adiabatic", "history"]),
    },
    KeyDef {
        section: "spectrum",
        key: "delta1_min",
        kind: Kind::Scalar(FREQ_G),
    },
    KeyDef {
        section: "spectrum",
        key: "delta1_max",
        kind: Kind::Scalar(FREQ_G),
    },
    KeyDef {
        section: "spectrum",
        key: "delta1_points",
        kind: Kind::Int,
    },
    KeyDef {
        section: "spectrum",
        key: "delta_r_values",
        kind: Kind::List(FREQ_G),
    },
    KeyDef {
        section: "blockade",
        key: "delta_r_start",
        kind: Kind::Scalar(FREQ_G),
    },
    KeyDef {
        section: "blockade",
        key: "delta_r_end",
        kind: Kind::Scalar(FREQ_G),
    },
    KeyDef {
        section: "blockade",
        key: "points",
        kind: Kind::Int,
    },
    KeyDef {
        section: "blockade",
        key: "plateau_threshold",
        kind: Kind::Scalar(Quantity::Ratio),
    },
    KeyDef {
        section: "xpm",
        key: "geometry",
        kind: Kind::Choice(&["counter", "co"]),
    },
    KeyDef {
        section: "xpm",
        key: "lengths",
        kind: Kind::List(LEN_S),
    },
    KeyDef {
        section: "xpm",
        key: "grid_n",
        kind: Kind::Int,
    },
    KeyDef {
        section: "xpm",
        key: "profile",
        kind: Kind::Choice(&["initial", "final"]),
    },
    KeyDef {
        section: "xpm",
        key: "vg_scale",
        kind: Kind::Scalar(Quantity::Ratio),
    },
    KeyDef {
        section: "xpm",
        key: "slow_mode",
        kind: Kind::Choice(&["resimulate", "replay"]),
    },
    KeyDef {
        section: "sweep",
        key: "axis",
        kind: Kind::Choice(&[]),
    },
    KeyDef {
        section: "sweep",
        key: "values",
        kind: Kind::AxisValues,
    },
    KeyDef {
        section: "sweep",
        key: "base",
        kind: Kind::Choice(&[]),
    },
];

const SECTIONS: &[&str] = &[
    "system",
    "interaction",
    "propagation",
    "spectrum",
    "blockade",
    "xpm",
    "sweep",
];

/// A value as written, with positions for error reporting.
#[derive(Debug, Clone)]
struct Raw {
    line: usize,
    /// Column of the first character of the value.
    col: usize,
    /// `(number text, column)` for every list item.
    numbers: Vec<(String, usize)>,
    unit: Option<(String, usize)>,
    text: String,
}

#[derive(Debug, Default)]
struct RawConfig {
    entries: Vec<(&'static KeyDef, Raw)>,
    end_line: usize,
}

impl RawConfig {
    fn get(&self, section: &str, key: &str) -> Option<&Raw> {
        self.entries
            .iter()
            .rev()
            .find(|(d, _)| d.section == section && d.key == key)
            .map(|(_, r)| r)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// 1-based character column of byte offset `off` within `line`.
fn column(line: &str, off: usize) -> usize {
    line[..off].chars().count() + 1
}

fn lex(text: &str, raw: &mut RawConfig) -> Result<(), ConfigError> {
    let mut section = "";
    let mut seen: Vec<(&str, &str)> = Vec::new();
    let mut n_lines = 0;
    for (idx, full) in text.lines().enumerate() {
        n_lines = idx + 1;
        let line_no = idx + 1;
        let body = strip_comment(full);
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let lead = body.len() - body.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return err(line_no, column(full, lead), "unterminated section header");
            };
            let name = name.trim();
            match SECTIONS.iter().find(|s| **s == name) {
                Some(s) => section = s,
                None => return err(line_no, column(full, lead + 1), format!("unknown section `{name}`")),
            }
            continue;
        }
        let Some(eq) = body.find('=') else {
            return err(line_no, column(full, lead), "expected `key = value`");
        };
        let key = body[..eq].trim();
        let Some(def) = KEYS.iter().find(|d| d.section == section && d.key == key) else {
            let where_ = if section.is_empty() {
                "top level".to_string()
            } else {
                format!("section [{section}]")
            };
            return err(line_no, column(full, lead), format!("unknown key `{key}` in {where_}"));
        };
        if seen.contains(&(def.section, def.key)) {
            return err(line_no, column(full, lead), format!("duplicate key `{key}`"));
        }
        seen.push((def.section, def.key));
        let value = &body[eq + 1..];
        let v_lead = eq + 1 + (value.len() - value.trim_start().len());
        let value = value.trim();
        if value.is_empty() {
            return err(line_no, column(full, eq + 1), format!("missing value for `{key}`"));
        }
        let raw_value = split_value(full, line_no, v_lead, value)?;
        raw.entries.push((def, raw_value));
    }
    raw.end_line = n_lines.max(1);
    Ok(())
}

/// Splits `1, 2.5, 3 sigma` into numbers and a trailing unit.
fn split_value(full: &str, line: usize, start: usize, value: &str) -> Result<Raw, ConfigError> {
    let mut numbers = Vec::new();
    let mut unit = None;
    let mut offset = start;
    let items: Vec<&str> = value.split(',').collect();
    for (k, item) in items.iter().enumerate() {
        let lead = item.len() - item.trim_start().len();
        let item_start = offset + lead;
        let t = item.trim();
        if t.is_empty() && items.len() > 1 {
            return err(line, column(full, item_start), "empty list item");
        }
        let mut parts = t.splitn(2, char::is_whitespace);
        let num = parts.next().unwrap_or("");
        numbers.push((num.to_string(), column(full, item_start)));
        if let Some(rest) = parts.next() {
            let rest_trim = rest.trim();
            let u_off = item_start + num.len() + (rest.len() - rest.trim_start().len()) + 1;
            if k + 1 != items.len() {
                return err(line, column(full, u_off), "a unit may only follow the last value");
            }
            if rest_trim.contains(char::is_whitespace) {
                return err(line, column(full, u_off), format!("unexpected text `{rest_trim}`"));
            }
            unit = Some((rest_trim.to_string(), column(full, u_off)));
        }
        offset += item.len() + 1;
    }
    Ok(Raw {
        line,
        col: column(full, start),
        numbers,
        unit,
        text: value.to_string(),
    })
}

struct Ctx {
    gamma: f64,
    sigma: f64,
    c6_units: C6Convention,
}

fn parse_number(line: usize, (text, col): &(String, usize)) -> Result<f64, ConfigError> {
    match text.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => err(line, *col, format!("`{text}` is not a finite number")),
    }
}

fn unit_factor(q: Quantity, unit: &str, ctx: &Ctx) -> Option<f64> {
    let two_pi = 2.0 * PI;
    match q {
        Quantity::Freq { relative, .. } => match unit {
            "gamma" if relative => Some(ctx.gamma),
            "rad/s" => Some(1.0),
            "Hz" => Some(two_pi),
            "kHz" => Some(two_pi * 1e3),
            "MHz" => Some(two_pi * 1e6),
            "GHz" => Some(two_pi * 1e9),
            _ => None,
        },
        Quantity::Length { relative, .. } => match unit {
            "sigma" if relative => Some(ctx.sigma),
            "m" => Some(1.0),
            "mm" => Some(1e-3),
            "um" | "μm" => Some(MICRON),
            "nm" => Some(1e-9),
            _ => None,
        },
        Quantity::Velocity => match unit {
            "m/s" => Some(1.0),
            _ => None,
        },
        Quantity::C6 => match unit {
            "GHz*um^6" | "GHz·μm⁶" => Some(ctx.c6_units.ghz_um6_to_si(1.0)),
            "rad/s*m^6" => Some(1.0),
            _ => None,
        },
        Quantity::Ratio => None,
    }
}

fn default_unit(q: Quantity) -> Option<&'static str> {
    match q {
        Quantity::Freq { default, .. } | Quantity::Length { default, .. } => Some(default),
        Quantity::Velocity => Some("m/s"),
        Quantity::C6 => Some("GHz*um^6"),
        Quantity::Ratio => None,
    }
}

fn quantity_name(q: Quantity) -> &'static str {
    match q {
        Quantity::Freq { .. } => "frequency",
        Quantity::Length { .. } => "length",
        Quantity::Velocity => "velocity",
        Quantity::C6 => "C6",
        Quantity::Ratio => "dimensionless",
    }
}

fn factor_for(q: Quantity, raw: &Raw, ctx: &Ctx) -> Result<f64, ConfigError> {
    match (&raw.unit, q) {
        (Some((u, col)), Quantity::Ratio) => err(
            raw.line,
            *col,
            format!("unit mismatch: `{u}` given for a dimensionless value"),
        ),
        (Some((u, col)), _) => unit_factor(q, u, ctx).map_or_else(
            || {
                err(
                    raw.line,
                    *col,
                    format!("unit mismatch: `{u}` is not a {} unit here", quantity_name(q)),
                )
            },
            Ok,
        ),
        (None, _) => Ok(default_unit(q).map_or(1.0, |u| unit_factor(q, u, ctx).expect("default units are valid"))),
    }
}

fn scalar(q: Quantity, raw: &Raw, ctx: &Ctx) -> Result<f64, ConfigError> {
    if raw.numbers.len() != 1 {
        return err(raw.line, raw.col, "expected a single value");
    }
    let k = factor_for(q, raw, ctx)?;
    Ok(parse_number(raw.line, &raw.numbers[0])? * k)
}

fn list(q: Quantity, raw: &Raw, ctx: &Ctx) -> Result<Vec<f64>, ConfigError> {
    let k = factor_for(q, raw, ctx)?;
    raw.numbers
        .iter()
        .map(|n| parse_number(raw.line, n).map(|x| x * k))
        .collect()
}

fn word(raw: &Raw) -> &str {
    raw.text.as_str()
}

fn choice(raw: &Raw, options: &[&str]) -> Result<String, ConfigError> {
    let w = word(raw);
    if options.contains(&w) {
        Ok(w.to_string())
    } else {
        err(
            raw.line,
            raw.col,
            format!("`{w}` is not one of: {}", options.join(", ")),
        )
    }
}

/// Reads one config text into a resolved [`ScenarioConfig`].
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_layers(&[text])
}

/// Later layers override keys from earlier ones (preset, then user file).
pub fn parse_layers(texts: &[&str]) -> Result<ScenarioConfig, ConfigError> {
    let mut merged = RawConfig::default();
    for t in texts {
        let mut layer = RawConfig::default();
        lex(t, &mut layer)?;
        merged.end_line = layer.end_line;
        merged.entries.extend(layer.entries);
    }
    resolve(&merged)
}

fn positive(raw: Option<&Raw>, value: f64, name: &str, allow_zero: bool) -> Result<f64, ConfigError> {
    let ok = if allow_zero { value >= 0.0 } else { value > 0.0 };
    if ok {
        return Ok(value);
    }
    let (line, col) = raw.map_or((0, 0), |r| (r.line, r.col));
    let rel = if allow_zero { "non-negative" } else { "positive" };
    err(line, col, format!("`{name}` must be {rel}, got {value:e}"))
}

fn resolve(raw: &RawConfig) -> Result<ScenarioConfig, ConfigError> {
    let base_ctx = Ctx {
        gamma: 0.0,
        sigma: 0.0,
        c6_units: C6Convention::Angular,
    };
    let get = |s: &str, k: &str| raw.get(s, k);

    let scenario = match get("", "scenario") {
        Some(r) => ScenarioKind::parse(word(r))
            .map_or_else(|| err(r.line, r.col, format!("unknown scenario `{}`", word(r))), Ok)?,
        None => return err(raw.end_line, 1, "missing required key `scenario`"),
    };

    let freq_abs = Quantity::Freq {
        default: "MHz",
        relative: false,
    };
    let gamma = match get("system", "gamma") {
        Some(r) => positive(Some(r), scalar(freq_abs, r, &base_ctx)?, "gamma", false)?,
        None => 2.0 * PI * 5.75e6,
    };
    let len_abs = Quantity::Length {
        default: "um",
        relative: false,
    };
    let sigma = match get("interaction", "sigma") {
        Some(r) => positive(Some(r), scalar(len_abs, r, &base_ctx)?, "sigma", false)?,
        None => 11.1 * MICRON,
    };
    let c6_units = match get("interaction", "c6_units") {
        Some(r) => match choice(r, &["angular", "cyclic"])?.as_str() {
            "cyclic" => C6Convention::Cyclic,
            _ => C6Convention::Angular,
        },
        None => C6Convention::Angular,
    };
    let ctx = Ctx { gamma, sigma, c6_units };

    let f = |s: &str, k: &str, default: f64| -> Result<f64, ConfigError> {
        let def = KEYS.iter().find(|d| d.section == s && d.key == k).expect("known key");
        let Kind::Scalar(q) = def.kind else {
            unreachable!("scalar key")
        };
        match get(s, k) {
            Some(r) => scalar(q, r, &ctx),
            None => Ok(default),
        }
    };
    let nonneg = |s: &str, k: &str, v: f64| positive(get(s, k), v, k, true);
    let pos = |s: &str, k: &str, v: f64| positive(get(s, k), v, k, false);
    let int = |s: &str, k: &str, default: usize| -> Result<usize, ConfigError> {
        match get(s, k) {
            Some(r) => match word(r).parse::<usize>() {
                Ok(n) => Ok(n),
                Err(_) => err(r.line, r.col, format!("`{}` is not a non-negative integer", word(r))),
            },
            None => Ok(default),
        }
    };
    let pick = |s: &str, k: &str, options: &[&str], default: &str| -> Result<String, ConfigError> {
        match get(s, k) {
            Some(r) => choice(r, options),
            None => Ok(default.to_string()),
        }
    };

    let system = SystemConfig {
        gamma,
        gamma_rg: nonneg("system", "gamma_rg", f("system", "gamma_rg", 1e-6 * gamma)?)?,
        omega_c: nonneg("system", "omega_c", f("system", "omega_c", 2.0 * gamma)?)?,
        delta1: f("system", "delta1", 2.0 * gamma)?,
        delta2: f("system", "delta2", -2.0 * gamma)?,
        g2n_ratio: nonneg("system", "g2n_ratio", f("system", "g2n_ratio", 0.75e7)?)?,
        target_vg: pos("system", "target_vg", f("system", "target_vg", 10.0)?)?,
        chi_amp: match get("system", "chi_amp") {
            Some(r) => Some(positive(Some(r), scalar(FREQ_G, r, &ctx)?, "chi_amp", true)?),
            None => None,
        },
        lambda_p: pos("system", "lambda_p", f("system", "lambda_p", 795e-9)?)?,
    };
    if system.target_vg > SPEED_OF_LIGHT {
        let r = get("system", "target_vg").expect("default is below c");
        return err(r.line, r.col, "`target_vg` exceeds the speed of light");
    }

    let interaction = InteractionConfig {
        c6: nonneg(
            "interaction",
            "c6",
            f("interaction", "c6", c6_units.ghz_um6_to_si(8500.0))?,
        )?,
        c6_units,
        a: nonneg("interaction", "a", f("interaction", "a", 1.5 * sigma)?)?,
        sigma,
    };

    let feedback = match pick(
        "propagation",
        "feedback",
        &["self-consistent", "disabled", "constant"],
        "self-consistent",
    )?
    .as_str()
    {
        "disabled" => Feedback::Disabled,
        "constant" => Feedback::Constant(f("propagation", "feedback_shift", 0.0)?),
        _ => Feedback::SelfConsistent,
    };
    let step_frac = pos("propagation", "step_frac", f("propagation", "step_frac", 0.005)?)?;
    if step_frac > 1.0 {
        let r = get("propagation", "step_frac").expect("default is small");
        return err(r.line, r.col, "`step_frac` must not exceed 1");
    }
    let propagation = PropagationConfig {
        length: pos("propagation", "length", f("propagation", "length", 8.0 * sigma)?)?,
        step_frac,
        feedback,
        absorption: match get("propagation", "absorption") {
            Some(r) => match word(r) {
                "true" => true,
                "false" => false,
                w => return err(r.line, r.col, format!("`{w}` is not true or false")),
            },
            None => true,
        },
        chi_model: match pick("propagation", "chi_model", &["adiabatic", "history"], "adiabatic")?.as_str() {
            "history" => ChiModel::History,
            _ => ChiModel::Adiabatic,
        },
    };

    let spectrum = SpectrumConfig {
        delta1_min: f("spectrum", "delta1_min", -10.0 * gamma)?,
        delta1_max: f("spectrum", "delta1_max", 10.0 * gamma)?,
        delta1_points: int("spectrum", "delta1_points", 401)?,
        delta_r_values: match get("spectrum", "delta_r_values") {
            Some(r) => list(FREQ_G, r, &ctx)?,
            None => vec![0.0],
        },
    };
    if spectrum.delta1_points < 2 || spectrum.delta1_max <= spectrum.delta1_min {
        let r = get("spectrum", "delta1_points").or(get("spectrum", "delta1_max"));
        let (l, c) = r.map_or((raw.end_line, 1), |r| (r.line, r.col));
        return err(l, c, "spectrum needs delta1_max > delta1_min and at least 2 points");
    }

    let blockade = BlockadeConfig {
        delta_r_start: f("blockade", "delta_r_start", 0.0)?,
        delta_r_end: f("blockade", "delta_r_end", -50.0 * gamma)?,
        points: int("blockade", "points", 501)?,
        plateau_threshold: pos(
            "blockade",
            "plateau_threshold",
            f("blockade", "plateau_threshold", 0.5)?,
        )?,
    };
    if blockade.points == 0 {
        let r = get("blockade", "points").expect("default is non-zero");
        return err(r.line, r.col, "`points` must be at least 1");
    }

    let grid_n = int("xpm", "grid_n", MIN_GRID)?;
    if grid_n < MIN_GRID || grid_n.is_multiple_of(2) {
        let r = get("xpm", "grid_n").expect("default is valid");
        return err(r.line, r.col, format!("`grid_n` must be odd and at least {MIN_GRID}"));
    }
    let vg_scale = pos("xpm", "vg_scale", f("xpm", "vg_scale", 1e-3)?)?;
    if vg_scale > 1.0 {
        let r = get("xpm", "vg_scale").expect("default is valid");
        return err(r.line, r.col, "`vg_scale` must lie in (0, 1]");
    }
    let lengths = match get("xpm", "lengths") {
        Some(r) => {
            let v = list(LEN_S, r, &ctx)?;
            if v.iter().any(|x| *x <= 0.0) {
                return err(r.line, r.col, "`lengths` must be positive");
            }
            v
        }
        None => vec![8.0 * sigma],
    };
    let xpm = XpmConfig {
        geometry: match pick("xpm", "geometry", &["counter", "co"], "counter")?.as_str() {
            "co" => Geometry::Co,
            _ => Geometry::Counter,
        },
        lengths,
        grid_n,
        profile: match pick("xpm", "profile", &["initial", "final"], "initial")?.as_str() {
            "final" => ProfileSize::Final,
            _ => ProfileSize::Initial,
        },
        vg_scale,
        slow_mode: match pick("xpm", "slow_mode", &["resimulate", "replay"], "resimulate")?.as_str() {
            "replay" => SlowPassMode::Replay,
            _ => SlowPassMode::Resimulate,
        },
    };

    let sweep = match get("sweep", "axis") {
        None => {
            if let Some(r) = get("sweep", "values") {
                return err(r.line, r.col, "`values` given without `axis`");
            }
            None
        }
        Some(r) => {
            let axis = SweepAxis::parse(word(r)).map_or_else(
                || {
                    let names: Vec<&str> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
                    err(
                        r.line,
                        r.col,
                        format!("`{}` is not a sweep axis ({})", word(r), names.join(", ")),
                    )
                },
                Ok,
            )?;
            let Some(vr) = get("sweep", "values") else {
                return err(r.line, r.col, "`axis` given without `values`");
            };
            let values = list(axis.quantity(), vr, &ctx)?;
            let base = match get("sweep", "base") {
                Some(b) => match ScenarioKind::parse(word(b)) {
                    Some(ScenarioKind::CustomSweep) | None => {
                        return err(b.line, b.col, format!("`{}` is not a base scenario", word(b)))
                    }
                    Some(k) => k,
                },
                None if scenario == ScenarioKind::CustomSweep => {
                    return err(r.line, r.col, "custom-sweep needs `base` in [sweep]")
                }
                None => scenario,
            };
            Some(SweepConfig { axis, values, base })
        }
    };
    if scenario == ScenarioKind::CustomSweep && sweep.is_none() {
        return err(
            raw.end_line,
            1,
            "custom-sweep needs a [sweep] section with `axis` and `values`",
        );
    }

    Ok(ScenarioConfig {
        scenario,
        system,
        interaction,
        propagation,
        spectrum,
        blockade,
        xpm,
        sweep,
    })
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ")
}

fn si_unit(q: Quantity) -> &'static str {
    match q {
        Quantity::Freq { .. } => " rad/s",
        Quantity::Length { .. } => " m",
        Quantity::Velocity => " m/s",
        Quantity::C6 => " rad/s*m^6",
        Quantity::Ratio => "",
    }
}

impl ScenarioConfig {
    /// Every key in SI units; parsing the echo gives back an equal config.
    pub fn echo(&self) -> String {
        let mut o = String::new();
        let s = &self.system;
        let i = &self.interaction;
        let p = &self.propagation;
        let sp = &self.spectrum;
        let b = &self.blockade;
        let x = &self.xpm;
        let _ = writeln!(o, "scenario = {}", self.scenario.name());
        let _ = writeln!(o, "\n[system]");
        let _ = writeln!(o, "gamma = {:e} rad/s", s.gamma);
        let _ = writeln!(o, "gamma_rg = {:e} rad/s", s.gamma_rg);
        let _ = writeln!(o, "omega_c = {:e} rad/s", s.omega_c);
        let _ = writeln!(o, "delta1 = {:e} rad/s", s.delta1);
        let _ = writeln!(o, "delta2 = {:e} rad/s", s.delta2);
        let _ = writeln!(o, "g2n_ratio = {:e}", s.g2n_ratio);
        let _ = writeln!(o, "target_vg = {:e} m/s", s.target_vg);
        if let Some(c) = s.chi_amp {
            let _ = writeln!(o, "chi_amp = {c:e} rad/s");
        }
        let _ = writeln!(o, "lambda_p = {:e} m", s.lambda_p);
        let _ = writeln!(o, "\n[interaction]");
        let _ = writeln!(o, "c6 = {:e} rad/s*m^6", i.c6);
        let units = match i.c6_units {
            C6Convention::Angular => "angular",
            C6Convention::Cyclic => "cyclic",
        };
        let _ = writeln!(o, "c6_units = {units}");
        let _ = writeln!(o, "a = {:e} m", i.a);
        let _ = writeln!(o, "sigma = {:e} m", i.sigma);
        let _ = writeln!(o, "\n[propagation]");
        let _ = writeln!(o, "length = {:e} m", p.length);
        let _ = writeln!(o, "step_frac = {:e}", p.step_frac);
        match p.feedback {
            Feedback::SelfConsistent => {
                let _ = writeln!(o, "feedback = self-consistent");
            }
            Feedback::Disabled => {
                let _ = writeln!(o, "feedback = disabled");
            }
            Feedback::Constant(v) => {
                let _ = writeln!(o, "feedback = constant\nfeedback_shift = {v:e} rad/s");
            }
        }
        let _ = writeln!(o, "absorption = {}", p.absorption);
        let model = match p.chi_model {
            ChiModel::Adiabatic => "adiabatic",
            ChiModel::History => "history",
        };
        let _ = writeln!(o, "chi_model = {model}");
        let _ = writeln!(o, "\n[spectrum]");
        let _ = writeln!(o, "delta1_min = {:e} rad/s", sp.delta1_min);
        let _ = writeln!(o, "delta1_max = {:e} rad/s", sp.delta1_max);
        let _ = writeln!(o, "delta1_points = {}", sp.delta1_points);
        let _ = writeln!(o, "delta_r_values = {} rad/s", fmt_list(&sp.delta_r_values));
        let _ = writeln!(o, "\n[blockade]");
        let _ = writeln!(o, "delta_r_start = {:e} rad/s", b.delta_r_start);
        let _ = writeln!(o, "delta_r_end = {:e} rad/s", b.delta_r_end);
        let _ = writeln!(o, "points = {}", b.points);
        let _ = writeln!(o, "plateau_threshold = {:e}", b.plateau_threshold);
        let _ = writeln!(o, "\n[xpm]");
        let geo = match x.geometry {
            Geometry::Counter => "counter",
            Geometry::Co => "co",
        };
        let _ = writeln!(o, "geometry = {geo}");
        let _ = writeln!(o, "lengths = {} m", fmt_list(&x.lengths));
        let _ = writeln!(o, "grid_n = {}", x.grid_n);
        let prof = match x.profile {
            ProfileSize::Initial => "initial",
            ProfileSize::Final => "final",
        };
        let _ = writeln!(o, "profile = {prof}");
        let _ = writeln!(o, "vg_scale = {:e}", x.vg_scale);
        let mode = match x.slow_mode {
            SlowPassMode::Resimulate => "resimulate",
            SlowPassMode::Replay => "replay",
        };
        let _ = writeln!(o, "slow_mode = {mode}");
        if let Some(sw) = &self.sweep {
            let _ = writeln!(o, "\n[sweep]");
            let _ = writeln!(o, "axis = {}", sw.axis.name());
            let _ = writeln!(o, "values = {}{}", fmt_list(&sw.values), si_unit(sw.axis.quantity()));
            let _ = writeln!(o, "base = {}", sw.base.name());
        }
        o
    }
}
