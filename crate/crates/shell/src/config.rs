//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Numbers may be
//! written with `pi`, e.g. `beta = -pi/2` or `times = 0, pi/2, 2.5*pi`.
//! A metadata document written by a scenario run is accepted too: its
//! `config` object holds the same keys.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use wavetrain_core::FitUnit;

use crate::error::{Result, ShellError};

/// Every key the format knows, in canonical output order.
pub const KEYS: &[&str] = &[
    "scenario",
    "n",
    "A",
    "B",
    "alpha",
    "beta",
    "b0",
    "omega_r",
    "omega_x_si",
    "mass_amu",
    "grid.x_min",
    "grid.x_max",
    "grid.points",
    "grid.y_max",
    "grid.y_points",
    "times",
    "outputs",
    "transition.t",
    "transition.n",
    "g1d",
    "dt",
    "t_end",
    "seed",
    "fit.amplitude",
    "fit.width_min",
    "fit.width_max",
    "fit.unit",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    DensityXy,
    DensityProfile,
    VerticalView,
    Wavefunction,
    Report,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::DensityXy => "density_xy",
            OutputKind::DensityProfile => "density_profile",
            OutputKind::VerticalView => "vertical_view",
            OutputKind::Wavefunction => "wavefunction",
            OutputKind::Report => "report",
        }
    }
}

impl FromStr for OutputKind {
    type Err = ShellError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "density_xy" => OutputKind::DensityXy,
            "density_profile" => OutputKind::DensityProfile,
            "vertical_view" => OutputKind::VerticalView,
            "wavefunction" => OutputKind::Wavefunction,
            "report" => OutputKind::Report,
            other => return Err(ShellError::UnknownOutput(other.to_string())),
        })
    }
}

/// Parsed settings; `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub scenario: Option<String>,
    pub n: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub b0: Option<f64>,
    pub omega_r: Option<f64>,
    pub omega_x_si: Option<f64>,
    pub mass_amu: Option<f64>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub points: Option<usize>,
    pub y_max: Option<f64>,
    pub y_points: Option<usize>,
    pub times: Option<Vec<f64>>,
    pub outputs: Option<Vec<OutputKind>>,
    pub transition_t: Option<f64>,
    pub transition_n: Option<usize>,
    pub g1d: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub seed: Option<u64>,
    pub fit_amplitude: Option<f64>,
    pub fit_width_min: Option<f64>,
    pub fit_width_max: Option<f64>,
    pub fit_unit: Option<FitUnit>,
}

/// Parses a real number, allowing `pi` factors: `-pi/2`, `2.5*pi`, `3pi`.
pub fn parse_real(text: &str) -> std::result::Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty number".into());
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    let mut value = 1.0;
    let mut divide = false;
    let mut rest = body;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let factor = parse_factor(&rest[..end])?;
        value = if divide {
            value / factor
        } else {
            value * factor
        };
        if end == rest.len() {
            break;
        }
        divide = rest.as_bytes()[end] == b'/';
        rest = &rest[end + 1..];
    }
    if !value.is_finite() {
        return Err(format!("`{text}` is not finite"));
    }
    Ok(sign * value)
}

fn parse_factor(s: &str) -> std::result::Result<f64, String> {
    if s == "pi" {
        return Ok(std::f64::consts::PI);
    }
    if let Some(number) = s.strip_suffix("pi") {
        return number
            .parse::<f64>()
            .map(|v| v * std::f64::consts::PI)
            .map_err(|e| format!("`{s}`: {e}"));
    }
    s.parse::<f64>().map_err(|e| format!("`{s}`: {e}"))
}

fn invalid(key: &str, value: &str, reason: impl Display) -> ShellError {
    ShellError::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

fn real(key: &str, value: &str) -> Result<f64> {
    parse_real(value).map_err(|e| invalid(key, value, e))
}

fn count<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| invalid(key, value, e))
}

fn list<T>(value: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect()
}

impl Settings {
    /// Applies one `key = value` pair. `line` is only used for error messages.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let value = value.trim();
        match key {
            "scenario" => self.scenario = Some(value.to_string()),
            "n" => self.n = Some(count(key, value)?),
            "A" => self.a = Some(real(key, value)?),
            "B" => self.b = Some(real(key, value)?),
            "alpha" => self.alpha = Some(real(key, value)?),
            "beta" => self.beta = Some(real(key, value)?),
            "b0" => self.b0 = Some(real(key, value)?),
            "omega_r" => self.omega_r = Some(real(key, value)?),
            "omega_x_si" => self.omega_x_si = Some(real(key, value)?),
            "mass_amu" => self.mass_amu = Some(real(key, value)?),
            "grid.x_min" => self.x_min = Some(real(key, value)?),
            "grid.x_max" => self.x_max = Some(real(key, value)?),
            "grid.points" => self.points = Some(count(key, value)?),
            "grid.y_max" => self.y_max = Some(real(key, value)?),
            "grid.y_points" => self.y_points = Some(count(key, value)?),
            "times" => self.times = Some(list(value, |v| real(key, v))?),
            "outputs" => self.outputs = Some(list(value, OutputKind::from_str)?),
            "transition.t" => self.transition_t = Some(real(key, value)?),
            "transition.n" => self.transition_n = Some(count(key, value)?),
            "g1d" => self.g1d = Some(real(key, value)?),
            "dt" => self.dt = Some(real(key, value)?),
            "t_end" => self.t_end = Some(real(key, value)?),
            "seed" => self.seed = Some(count(key, value)?),
            "fit.amplitude" => self.fit_amplitude = Some(real(key, value)?),
            "fit.width_min" => self.fit_width_min = Some(real(key, value)?),
            "fit.width_max" => self.fit_width_max = Some(real(key, value)?),
            "fit.unit" => {
                self.fit_unit = Some(match value {
                    "natural" => FitUnit::Natural,
                    "physical" => FitUnit::Physical,
                    other => return Err(invalid(key, other, "expected natural or physical")),
                })
            }
            _ => {
                return Err(ShellError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Values from `other` win wherever they are set.
    pub fn merge(mut self, other: Settings) -> Settings {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if other.$field.is_some() { self.$field = other.$field; })*
            };
        }
        take!(
            scenario,
            n,
            a,
            b,
            alpha,
            beta,
            b0,
            omega_r,
            omega_x_si,
            mass_amu,
            x_min,
            x_max,
            points,
            y_max,
            y_points,
            times,
            outputs,
            transition_t,
            transition_n,
            g1d,
            dt,
            t_end,
            seed,
            fit_amplitude,
            fit_width_min,
            fit_width_max,
            fit_unit
        );
        self
    }

    /// The settings as `(key, value)` pairs in canonical order; reals use
    /// the shortest text that parses back to the same bits.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let r = |v: f64| format!("{v:?}");
        let reals = |v: &[f64]| v.iter().map(|x| r(*x)).collect::<Vec<_>>().join(",");
        let mut out = Vec::new();
        for &key in KEYS {
            let value = match key {
                "scenario" => self.scenario.clone(),
                "n" => self.n.map(|v| v.to_string()),
                "A" => self.a.map(r),
                "B" => self.b.map(r),
                "alpha" => self.alpha.map(r),
                "beta" => self.beta.map(r),
                "b0" => self.b0.map(r),
                "omega_r" => self.omega_r.map(r),
                "omega_x_si" => self.omega_x_si.map(r),
                "mass_amu" => self.mass_amu.map(r),
                "grid.x_min" => self.x_min.map(r),
                "grid.x_max" => self.x_max.map(r),
                "grid.points" => self.points.map(|v| v.to_string()),
                "grid.y_max" => self.y_max.map(r),
                "grid.y_points" => self.y_points.map(|v| v.to_string()),
                "times" => self.times.as_deref().map(reals),
                "outputs" => self
                    .outputs
                    .as_ref()
                    .map(|o| o.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")),
                "transition.t" => self.transition_t.map(r),
                "transition.n" => self.transition_n.map(|v| v.to_string()),
                "g1d" => self.g1d.map(r),
                "dt" => self.dt.map(r),
                "t_end" => self.t_end.map(r),
                "seed" => self.seed.map(|v| v.to_string()),
                "fit.amplitude" => self.fit_amplitude.map(r),
                "fit.width_min" => self.fit_width_min.map(r),
                "fit.width_max" => self.fit_width_max.map(r),
                "fit.unit" => self.fit_unit.map(|u| {
                    match u {
                        FitUnit::Natural => "natural",
                        FitUnit::Physical => "physical",
                    }
                    .to_string()
                }),
                _ => unreachable!("every key is listed"),
            };
            if let Some(value) = value {
                out.push((key, value));
            }
        }
        out
    }

    /// `key=value` lines that [`parse_config`] reads back unchanged.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn has_fit_keys(&self) -> bool {
        self.fit_amplitude.is_some() || self.fit_width_min.is_some() || self.fit_width_max.is_some()
    }
}

/// Parses the `key = value` text format.
pub fn parse_config(text: &str) -> Result<Settings> {
    let mut settings = Settings::default();
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ShellError::Parse {
                line,
                message: format!("expected `key = value`, got `{trimmed}`"),
            });
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(ShellError::Parse {
                line,
                message: "empty key".into(),
            });
        }
        settings.set(key, value, line).map_err(|e| match e {
            ShellError::InvalidValue { key, value, reason } => ShellError::Parse {
                line,
                message: format!("invalid value `{value}` for `{key}`: {reason}"),
            },
            other => other,
        })?;
    }
    Ok(settings)
}

/// Reads the `config` object of a metadata document.
pub fn parse_metadata(text: &str) -> Result<Settings> {
    let doc: serde_json::Value = serde_json::from_str(text)?;
    let config = doc
        .get("config")
        .and_then(|c| c.as_object())
        .ok_or(ShellError::MissingKey("config"))?;
    let mut settings = Settings::default();
    for (key, value) in config {
        let text = match value {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        settings.set(key, &text, 0)?;
    }
    Ok(settings)
}

/// Loads either format, telling them apart by a leading `{`.
pub fn load_settings(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(ShellError::io(path))?;
    if text.trim_start().starts_with('{') {
        parse_metadata(&text)
    } else {
        parse_config(&text)
    }
}
