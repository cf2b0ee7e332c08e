//! Run configuration: a line-oriented `key=value` file.
//!
//! Blank lines and lines starting with `#` are ignored, so the `# key=value`
//! lines of a table preamble re-parse once the leading `# ` is stripped
//! (see [`preamble_config`]). Every key is optional; defaults mirror the
//! published figure parameters and a 0 to 200 km scan in 1 km steps.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use amdi_core::closed_form::Backend;
use amdi_core::rates::{DistanceConvention, RateForm};
use amdi_core::{DetectorKind, ProtocolParams, SumVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("csv")
    }
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown output format `{other}` (expected csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Protocol parameters; `distance_km` is set per scan point.
    pub params: ProtocolParams,
    pub from_km: f64,
    pub to_km: f64,
    pub step_km: f64,
    /// Standard output when unset.
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ProtocolParams::default(),
            from_km: 0.0,
            to_km: 200.0,
            step_km: 1.0,
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

/// Accepted keys, in preamble order.
pub const KEYS: [&str; 18] = [
    "r",
    "l_att_km",
    "eta",
    "eta_sw",
    "p_dark",
    "eta_source",
    "tau_s",
    "c_mps",
    "detector",
    "backend",
    "variant",
    "distance_convention",
    "rate_form",
    "from_km",
    "to_km",
    "step_km",
    "format",
    "output",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key=value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("`{key}` out of range: {message}")]
    Range { key: String, message: String },
}

fn number(value: &str) -> Result<f64, String> {
    let x: f64 = value.parse().map_err(|_| format!("`{value}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{value}` is not finite"))
    }
}

/// Plain decimals for moderate magnitudes, exponent form otherwise; both
/// parse back to the same `f64`.
fn show(x: f64) -> String {
    if x != 0.0 && !(1e-4..1e7).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn parsed<T: FromStr<Err = String>>(value: &str) -> Result<T, String> {
    value.parse()
}

impl RunConfig {
    /// Sets one key. Unknown keys are `Ok(false)`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        let p = &mut self.params;
        match key {
            "r" => p.r = number(value)?,
            "l_att_km" => p.l_att_km = number(value)?,
            "eta" => p.eta = number(value)?,
            "eta_sw" => p.eta_sw = number(value)?,
            "p_dark" => p.p_dark = number(value)?,
            "eta_source" => p.eta_source = number(value)?,
            "tau_s" => p.tau_s = number(value)?,
            "c_mps" => p.c_mps = number(value)?,
            "detector" => p.detector = parsed::<DetectorKind>(value)?,
            "backend" => p.backend = parsed::<Backend>(value)?,
            "variant" => p.variant = parsed::<SumVariant>(value)?,
            "distance_convention" => p.distance_convention = parsed::<DistanceConvention>(value)?,
            "rate_form" => p.rate_form = parsed::<RateForm>(value)?,
            "from_km" => self.from_km = number(value)?,
            "to_km" => self.to_km = number(value)?,
            "step_km" => self.step_km = number(value)?,
            "format" => self.format = parsed::<OutputFormat>(value)?,
            "output" => {
                if value.is_empty() {
                    return Err("empty path".into());
                }
                self.output = Some(PathBuf::from(value));
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// The value of every key that has one, in [`KEYS`] order. Numbers use
    /// the shortest representation that parses back to the same `f64`.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        let mut out = vec![
            ("r", show(p.r)),
            ("l_att_km", show(p.l_att_km)),
            ("eta", show(p.eta)),
            ("eta_sw", show(p.eta_sw)),
            ("p_dark", show(p.p_dark)),
            ("eta_source", show(p.eta_source)),
            ("tau_s", show(p.tau_s)),
            ("c_mps", show(p.c_mps)),
            ("detector", p.detector.to_string()),
            ("backend", p.backend.to_string()),
            ("variant", p.variant.to_string()),
            ("distance_convention", p.distance_convention.to_string()),
            ("rate_form", p.rate_form.to_string()),
            ("from_km", show(self.from_km)),
            ("to_km", show(self.to_km)),
            ("step_km", show(self.step_km)),
            ("format", self.format.to_string()),
        ];
        if let Some(path) = &self.output {
            out.push(("output", path.display().to_string()));
        }
        out
    }

    pub fn to_config_string(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |key: &str, message: String| Err(ConfigError::Range { key: key.into(), message });
        if let Err(amdi_core::rates::RateError::InvalidParameter { name, value }) = self.params.validate() {
            return range(name, format!("{value} is not allowed"));
        }
        if self.from_km < 0.0 {
            return range("from_km", format!("{} is negative", self.from_km));
        }
        if self.to_km < self.from_km {
            return range("to_km", format!("{} is below from_km = {}", self.to_km, self.from_km));
        }
        if self.step_km <= 0.0 {
            return range("step_km", format!("{} is not positive", self.step_km));
        }
        Ok(())
    }

    /// Distances covered by the scan, both ends included.
    pub fn distances(&self) -> Vec<f64> {
        amdi_core::rates::distance_grid(self.from_km, self.to_km, self.step_km)
    }
}

/// Parses configuration text on top of the defaults. Range checks are left
/// to [`RunConfig::validate`] so that command-line overrides can apply first.
pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: trimmed.into() });
        };
        let (key, value) = (key.trim(), value.trim());
        if seen.contains(&key) {
            return Err(ConfigError::Duplicate { line, key: key.into() });
        }
        match cfg.set(key, value) {
            Ok(true) => seen.push(key),
            Ok(false) => return Err(ConfigError::UnknownKey { line, key: key.into() }),
            Err(message) => return Err(ConfigError::Value { line, key: key.into(), message }),
        }
    }
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
    parse_str(&text)
}

/// The configuration echoed in a table preamble: its `# key=value` lines.
pub fn preamble_config(table: &str) -> Result<RunConfig, ConfigError> {
    let lines: String = table
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| format!("{l}\n"))
        .collect();
    parse_str(&lines)
}
