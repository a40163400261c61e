//! Run configuration: one TOML file drives every subcommand, with dotted
//! `key=value` overrides applied on top (`--set scan.beta_max=8` or the
//! shorthand `--scan.beta_max=8`).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Deserialize;

use ptigp::tolerances::Tolerances;

/// Configuration loading / validation failure: always maps to exit code 3.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn cerr<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub path: PathConfig,
    pub scan: ScanConfig,
    pub output: OutputConfig,
    /// Overrides for the numerical tolerance bundle, keyed by field name
    /// (`properness`, `biorthonormality`, ...).
    pub tolerances: BTreeMap<String, f64>,
    pub oracle: OracleConfig,
    pub evolve: EvolveConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub name: String,
    pub parameters: BTreeMap<String, f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            name: "two-level-pt".to_string(),
            parameters: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathConfig {
    /// `latitude` or `custom-polyline`.
    #[serde(rename = "type")]
    pub kind: String,
    /// Polar angle of the latitude circle.
    pub theta: f64,
    /// Number of segments; the built path has `samples + 1` points.
    pub samples: usize,
    /// Total traversal time.
    pub tau: f64,
    /// Vertices for `custom-polyline` (each entry one coordinate tuple).
    pub points: Option<Vec<Vec<f64>>>,
    /// Close a custom polyline by returning to its first vertex.
    pub closed: bool,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            kind: "latitude".to_string(),
            theta: PI / 2.0,
            samples: 2048,
            tau: 2.0 * PI,
            points: None,
            closed: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub beta_min: f64,
    pub beta_max: f64,
    /// Number of grid points along beta (inclusive of both ends).
    pub beta_steps: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Number of grid points along theta (inclusive of both ends).
    pub theta_steps: usize,
    /// Space the beta grid geometrically instead of linearly.
    pub log_beta: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            beta_min: 0.1,
            beta_max: 5.0,
            beta_steps: 100,
            theta_min: 0.0,
            theta_max: PI,
            theta_steps: 100,
            log_beta: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// `csv` or `json`.
    pub format: String,
    /// Destination file; absent or `-` writes to stdout.
    pub path: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            format: "csv".to_string(),
            path: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Ramp factors compared by the adiabatic-oracle table.
    pub ramps: Vec<f64>,
    /// Level whose evolution is tracked.
    pub level: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            ramps: vec![10.0, 50.0, 200.0],
            level: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    /// Ramp factor of the single gated evolution run.
    pub ramp: f64,
    /// Level whose evolution is tracked.
    pub level: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            ramp: 64.0,
            level: 0,
        }
    }
}

/// Parses an override value: bool, then integer, then float, then a TOML
/// expression (for arrays like `[10,50,200]`), else a plain string.
fn parse_scalar(raw: &str) -> toml::Value {
    if raw == "true" {
        return toml::Value::Boolean(true);
    }
    if raw == "false" {
        return toml::Value::Boolean(false);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if raw.starts_with('[') {
        if let Ok(table) = toml::from_str::<toml::value::Table>(&format!("v = {raw}")) {
            if let Some(value) = table.get("v") {
                return value.clone();
            }
        }
    }
    toml::Value::String(raw.to_string())
}

/// Inserts `value` at the dotted `key` path, creating tables on the way.
fn insert_dotted(
    table: &mut toml::value::Table,
    key: &str,
    value: toml::Value,
) -> Result<(), ConfigError> {
    let mut parts = key.split('.').peekable();
    let mut current = table;
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return cerr(format!("override key `{key}` has an empty segment"));
        }
        if parts.peek().is_none() {
            current.insert(part.to_string(), value);
            return Ok(());
        }
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::value::Table::new()));
        current = entry.as_table_mut().ok_or_else(|| {
            ConfigError(format!("override key `{key}`: `{part}` is not a section"))
        })?;
    }
    unreachable!("split yields at least one part")
}

/// Loads the configuration: file (when given) + `key=value` overrides.
pub fn load(file: Option<&str>, sets: &[String]) -> Result<RunConfig, ConfigError> {
    let mut root: toml::value::Table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config `{path}`: {e}")))?;
            toml::from_str::<toml::Value>(&text)
                .map_err(|e| ConfigError(format!("cannot parse config `{path}`: {e}")))?
                .as_table()
                .cloned()
                .ok_or_else(|| ConfigError(format!("config `{path}` is not a table")))?
        }
        None => toml::value::Table::new(),
    };

    for set in sets {
        let (key, raw) = set
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("override `{set}` is not key=value")))?;
        insert_dotted(&mut root, key.trim(), parse_scalar(raw.trim()))?;
    }

    let config: RunConfig = toml::Value::Table(root)
        .try_into()
        .map_err(|e| ConfigError(format!("invalid configuration: {e}")))?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.path.kind != "latitude" && self.path.kind != "custom-polyline" {
            return cerr(format!(
                "path.type must be `latitude` or `custom-polyline`, got `{}`",
                self.path.kind
            ));
        }
        if self.path.samples < 64 {
            return cerr(format!("path.samples must be >= 64, got {}", self.path.samples));
        }
        if !(self.path.tau.is_finite() && self.path.tau > 0.0) {
            return cerr(format!("path.tau must be positive, got {}", self.path.tau));
        }
        if !self.path.theta.is_finite() {
            return cerr("path.theta must be finite");
        }
        if self.path.kind == "custom-polyline" {
            match &self.path.points {
                None => return cerr("path.type = custom-polyline requires path.points"),
                Some(points) if points.len() < 2 => {
                    return cerr("path.points needs at least 2 vertices")
                }
                Some(points) => {
                    let dim = points[0].len();
                    if dim == 0 || points.iter().any(|p| p.len() != dim) {
                        return cerr("path.points vertices must share a nonzero dimension");
                    }
                    if points.iter().flatten().any(|x| !x.is_finite()) {
                        return cerr("path.points must be finite");
                    }
                }
            }
        }
        if !(self.scan.beta_min.is_finite() && self.scan.beta_min > 0.0) {
            return cerr(format!("scan.beta_min must be > 0, got {}", self.scan.beta_min));
        }
        if !(self.scan.beta_max.is_finite() && self.scan.beta_max > self.scan.beta_min) {
            return cerr("scan.beta_max must exceed scan.beta_min");
        }
        if self.scan.beta_steps < 2 || self.scan.theta_steps < 2 {
            return cerr("scan grids need at least 2 points per axis");
        }
        if !(self.scan.theta_min.is_finite()
            && self.scan.theta_max.is_finite()
            && self.scan.theta_max > self.scan.theta_min)
        {
            return cerr("scan.theta_max must exceed scan.theta_min");
        }
        if self.output.format != "csv" && self.output.format != "json" {
            return cerr(format!(
                "output.format must be `csv` or `json`, got `{}`",
                self.output.format
            ));
        }
        if self.oracle.ramps.is_empty() {
            return cerr("oracle.ramps must not be empty");
        }
        if self.oracle.ramps.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return cerr("oracle.ramps must be positive");
        }
        if !(self.evolve.ramp.is_finite() && self.evolve.ramp > 0.0) {
            return cerr(format!("evolve.ramp must be positive, got {}", self.evolve.ramp));
        }
        self.tolerances().map(|_| ())
    }

    /// The tolerance bundle with the `[tolerances]` overrides applied.
    pub fn tolerances(&self) -> Result<Tolerances, ConfigError> {
        let mut tol = Tolerances::default();
        for (key, value) in &self.tolerances {
            if !(value.is_finite() && *value > 0.0) {
                return cerr(format!("tolerances.{key} must be positive, got {value}"));
            }
            let slot = match key.as_str() {
                "eig_residual" => &mut tol.eig_residual,
                "hermiticity" => &mut tol.hermiticity,
                "positivity" => &mut tol.positivity,
                "pseudo_hermiticity" => &mut tol.pseudo_hermiticity,
                "biorthonormality" => &mut tol.biorthonormality,
                "completeness" => &mut tol.completeness,
                "left_state" => &mut tol.left_state,
                "degeneracy" => &mut tol.degeneracy,
                "broken_phase" => &mut tol.broken_phase,
                "properness" => &mut tol.properness,
                "unitarity" => &mut tol.unitarity,
                "zero_overlap" => &mut tol.zero_overlap,
                "imaginary_leak" => &mut tol.imaginary_leak,
                "match_ambiguity" => &mut tol.match_ambiguity,
                "condition_max" => &mut tol.condition_max,
                other => return cerr(format!("unknown tolerance `{other}`")),
            };
            *slot = *value;
        }
        Ok(tol)
    }

    /// The theta grid of the scan (inclusive linear spacing).
    pub fn theta_grid(&self) -> Vec<f64> {
        linspace(self.scan.theta_min, self.scan.theta_max, self.scan.theta_steps)
    }

    /// The beta grid of the scan (linear or geometric per `log_beta`).
    pub fn beta_grid(&self) -> Vec<f64> {
        if self.scan.log_beta {
            linspace(self.scan.beta_min.ln(), self.scan.beta_max.ln(), self.scan.beta_steps)
                .into_iter()
                .map(f64::exp)
                .collect()
        } else {
            linspace(self.scan.beta_min, self.scan.beta_max, self.scan.beta_steps)
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}
