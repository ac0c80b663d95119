//! Run configuration: the TOML file layout, command-line overrides and
//! resolution against preset defaults.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::presets::{Preset, PRESETS};

/// A diagnostic on the configuration; `line` is set when it came from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.source, line, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// A grid given either as an explicit list or as a dyadic range `2^a..2^b`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Range(String),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSection {
    pub name: Option<String>,
    pub d: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub deltas: Option<GridValue>,
    pub lambdas: Option<GridValue>,
    #[serde(rename = "N")]
    pub n_level: Option<usize>,
    pub p: Option<f64>,
    pub probes: Option<usize>,
    pub fields: Option<usize>,
    pub samples: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlackSection {
    pub fit: Option<f64>,
}

/// The file layout.
///
/// ```toml
/// [run]
/// experiment = "theorem1-scaling"
/// seed = 7
///
/// [curve]
/// name = "circle2d"
/// d = 2
///
/// [grid]
/// deltas = "2^-3..2^-7"
/// probes = 20000
///
/// [slack]
/// fit = 0.25
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub curve: CurveSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub slack: SlackSection,
}

/// A parsed file together with its text, kept for line lookups.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: String,
    pub text: String,
    pub file: ConfigFile,
}

impl LoadedConfig {
    pub fn parse(path: impl Into<String>, text: String) -> Result<Self, ConfigError> {
        let path = path.into();
        let file: ConfigFile = toml::from_str(&text).map_err(|e| ConfigError {
            line: e.span().map(|s| line_of(&text, s.start)),
            message: e.message().trim().to_string(),
            source: path.clone(),
        })?;
        Ok(Self { path, text, file })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: path.display().to_string(),
            line: None,
            message: e.to_string(),
        })?;
        Self::parse(path.display().to_string(), text)
    }

    /// First line assigning `key`, for diagnostics raised after parsing.
    fn key_line(&self, key: &str) -> Option<usize> {
        self.text
            .lines()
            .position(|l| {
                let l = l.trim_start();
                l.strip_prefix(key)
                    .is_some_and(|rest| rest.trim_start().starts_with('='))
            })
            .map(|i| i + 1)
    }

    fn error(&self, key: &str, message: String) -> ConfigError {
        ConfigError {
            source: self.path.clone(),
            line: self.key_line(key),
            message,
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

/// Command-line values; each one overrides the matching config key.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub curve: Option<String>,
    pub d: Option<usize>,
    pub deltas: Option<String>,
    pub lambdas: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub slack: Option<f64>,
}

/// Every parameter that affects results; serialized canonically for the run hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: String,
    pub curve: String,
    pub d: usize,
    pub deltas: Vec<f64>,
    pub lambdas: Vec<u64>,
    #[serde(rename = "N")]
    pub n_level: usize,
    pub p: f64,
    pub probes: usize,
    pub fields: usize,
    pub samples: u64,
    pub seed: u64,
    pub slack: f64,
}

/// Where and how to run; does not enter the hash.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
}

/// Parses `2^a..2^b`, a single `2^a`, a plain number, or a comma list.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let (a, b) = (dyadic_exponent(a)?, dyadic_exponent(b)?);
        let step = if b >= a { 1 } else { -1 };
        let mut k = a;
        let mut out = vec![2f64.powi(a)];
        while k != b {
            k += step;
            out.push(2f64.powi(k));
        }
        return Ok(out);
    }
    text.split(',').map(|v| parse_number(v.trim())).collect()
}

fn parse_number(v: &str) -> Result<f64, String> {
    if v.starts_with("2^") {
        return dyadic_exponent(v).map(|k| 2f64.powi(k));
    }
    v.parse::<f64>()
        .map_err(|_| format!("cannot parse `{v}` as a number"))
}

fn dyadic_exponent(v: &str) -> Result<i32, String> {
    let v = v.trim();
    if let Some(k) = v.strip_prefix("2^") {
        return k
            .trim()
            .parse()
            .map_err(|_| format!("cannot parse exponent in `{v}`"));
    }
    let x: f64 = v
        .parse()
        .map_err(|_| format!("range endpoints must be powers of two, got `{v}`"))?;
    let k = x.log2().round();
    if x > 0.0 && 2f64.powf(k) == x {
        Ok(k as i32)
    } else {
        Err(format!("range endpoint {v} is not a power of two"))
    }
}

fn grid_from_value(v: &GridValue) -> Result<Vec<f64>, String> {
    match v {
        GridValue::Range(s) => parse_grid(s),
        GridValue::List(l) => Ok(l.clone()),
    }
}

fn to_lambdas(values: &[f64]) -> Result<Vec<u64>, String> {
    values
        .iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 && v <= 65536.0 {
                Ok(v as u64)
            } else {
                Err(format!("λ = {v} must be an integer in 1..=2^16"))
            }
        })
        .collect()
}

enum Origin<'a> {
    Flag(&'static str),
    File(&'a LoadedConfig, &'static str),
}

impl Origin<'_> {
    fn error(&self, message: String) -> ConfigError {
        match self {
            Origin::Flag(name) => ConfigError {
                source: format!("--{name}"),
                line: None,
                message,
            },
            Origin::File(cfg, key) => cfg.error(key, message),
        }
    }
}

/// Applies overrides over the file over the preset defaults, then validates.
pub fn resolve(
    file: Option<&LoadedConfig>,
    flags: &Overrides,
) -> Result<(RunConfig, Execution), ConfigError> {
    let empty = ConfigFile::default();
    let f = file.map(|c| &c.file).unwrap_or(&empty);
    let origin = |flag: bool, name: &'static str, key: &'static str| match (flag, file) {
        (false, Some(c)) => Origin::File(c, key),
        _ => Origin::Flag(name),
    };

    let (name, from_flag) = match (&flags.preset, &f.run.experiment) {
        (Some(p), _) => (p.clone(), true),
        (None, Some(p)) => (p.clone(), false),
        (None, None) => {
            return Err(ConfigError {
                source: file
                    .map(|c| c.path.clone())
                    .unwrap_or_else(|| "--preset".into()),
                line: None,
                message: "no experiment given; use --preset or [run] experiment".into(),
            })
        }
    };
    let preset: &Preset = PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        origin(from_flag, "preset", "experiment").error(format!("unknown experiment `{name}`"))
    })?;

    let curve_flag = flags.curve.is_some();
    let curve = flags
        .curve
        .clone()
        .or_else(|| f.curve.name.clone())
        .unwrap_or_else(|| preset.curve.into());
    let d_flag = flags.d.is_some();
    let d = flags.d.or(f.curve.d).unwrap_or(preset.d);
    if preset.fixed_curve && (curve != preset.curve || d != preset.d) {
        let o = if curve != preset.curve {
            origin(curve_flag, "curve", "name")
        } else {
            origin(d_flag, "d", "d")
        };
        return Err(o.error(format!(
            "{} runs only on {} in d = {}",
            preset.name, preset.curve, preset.d
        )));
    }
    if let Err(e) = nikodym::curve::lookup::<f64>(&curve, d) {
        let o = if curve_flag || (!d_flag && f.curve.name.is_some()) {
            origin(curve_flag, "curve", "name")
        } else {
            origin(d_flag, "d", "d")
        };
        return Err(o.error(e.to_string()));
    }

    let deltas = match (&flags.deltas, &f.grid.deltas) {
        (Some(s), _) => parse_grid(s).map_err(|m| Origin::Flag("deltas").error(m))?,
        (None, Some(v)) => {
            grid_from_value(v).map_err(|m| origin(false, "deltas", "deltas").error(m))?
        }
        (None, None) => preset.deltas(d),
    };
    let delta_origin = origin(flags.deltas.is_some(), "deltas", "deltas");
    if let Some(bad) = deltas.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(delta_origin.error(format!("δ = {bad} must lie in (0, 1)")));
    }
    if preset.full_field {
        let floor = if d <= 2 { 2f64.powi(-7) } else { 2f64.powi(-5) };
        if let Some(bad) = deltas.iter().find(|&&x| x < floor) {
            return Err(delta_origin.error(format!(
                "δ = {bad} is below the resolvable floor {floor} for d = {d}"
            )));
        }
    }
    if preset.min_deltas > deltas.len() {
        return Err(delta_origin.error(format!(
            "{} needs at least {} δ values, got {}",
            preset.name,
            preset.min_deltas,
            deltas.len()
        )));
    }

    let lambdas = match (&flags.lambdas, &f.grid.lambdas) {
        (Some(s), _) => parse_grid(s)
            .and_then(|v| to_lambdas(&v))
            .map_err(|m| Origin::Flag("lambda").error(m))?,
        (None, Some(v)) => grid_from_value(v)
            .and_then(|v| to_lambdas(&v))
            .map_err(|m| origin(false, "lambda", "lambdas").error(m))?,
        (None, None) => preset.lambdas.to_vec(),
    };
    if preset.uses_lambda && lambdas.is_empty() {
        return Err(
            origin(flags.lambdas.is_some(), "lambda", "lambdas").error("empty λ grid".into())
        );
    }

    let n_level = f.grid.n_level.unwrap_or(preset.n_level.unwrap_or(d));
    if !(2..=6).contains(&n_level) {
        return Err(origin(false, "", "N").error(format!("N = {n_level} must lie in 2..=6")));
    }
    let p = f.grid.p.unwrap_or(2.0);
    if !(p > 1.0 && p.is_finite()) {
        return Err(origin(false, "", "p").error(format!("p = {p} must be a finite exponent > 1")));
    }
    let positive = |v: Option<usize>, default: usize, key: &'static str| match v {
        Some(0) => Err(origin(false, "", key).error(format!("{key} must be positive"))),
        Some(v) => Ok(v),
        None => Ok(default),
    };
    let probes = positive(f.grid.probes, preset.probes, "probes")?;
    let fields = positive(f.grid.fields, preset.fields, "fields")?;
    let samples = positive(
        f.grid.samples.map(|v| v as usize),
        preset.samples as usize,
        "samples",
    )? as u64;
    let slack = flags.slack.or(f.slack.fit).unwrap_or(preset.slack);
    if !(slack >= 0.0 && slack.is_finite()) {
        return Err(origin(flags.slack.is_some(), "slack", "fit").error(format!(
            "slack {slack} must be a finite non-negative number"
        )));
    }
    let workers = flags.workers.or(f.run.workers);
    if workers == Some(0) {
        return Err(origin(flags.workers.is_some(), "workers", "workers")
            .error("workers must be positive".into()));
    }

    let run = RunConfig {
        experiment: preset.name.into(),
        curve,
        d,
        deltas: if preset.uses_delta {
            deltas
        } else {
            Vec::new()
        },
        lambdas: if preset.uses_lambda {
            lambdas
        } else {
            Vec::new()
        },
        n_level,
        p,
        probes,
        fields,
        samples,
        seed: flags.seed.or(f.run.seed).unwrap_or(1),
        slack,
    };
    let exec = Execution {
        output_dir: flags
            .out
            .clone()
            .or_else(|| f.run.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("results")),
        workers,
    };
    Ok((run, exec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_ranges() {
        assert_eq!(
            parse_grid("2^-3..2^-5").unwrap(),
            vec![0.125, 0.0625, 0.03125]
        );
        assert_eq!(parse_grid("16..64").unwrap(), vec![16.0, 32.0, 64.0]);
        assert_eq!(parse_grid("0.5, 2^-2").unwrap(), vec![0.5, 0.25]);
        assert!(parse_grid("3..8").is_err());
    }

    #[test]
    fn parse_errors_carry_lines() {
        let text = "[run]\nexperiment = \"lemma-audit\"\nseed = \"x\"\n".to_string();
        let e = LoadedConfig::parse("c.toml", text).unwrap_err();
        assert_eq!(e.line, Some(3));
    }

    #[test]
    fn unknown_curve_points_at_its_line() {
        let text =
            "[run]\nexperiment = \"lemma-audit\"\n\n[curve]\nname = \"spiral\"\n".to_string();
        let cfg = LoadedConfig::parse("c.toml", text).unwrap();
        let e = resolve(Some(&cfg), &Overrides::default()).unwrap_err();
        assert_eq!(e.line, Some(5));
    }

    #[test]
    fn flags_override_file() {
        let text =
            "[run]\nexperiment = \"lemma-audit\"\nseed = 3\n[grid]\nlambdas = [64]\n".to_string();
        let cfg = LoadedConfig::parse("c.toml", text).unwrap();
        let flags = Overrides {
            seed: Some(9),
            lambdas: Some("256".into()),
            ..Default::default()
        };
        let (run, _) = resolve(Some(&cfg), &flags).unwrap();
        assert_eq!((run.seed, run.lambdas.as_slice()), (9, &[256u64][..]));
    }
}
