//! Plain-text run configuration: `[section]` headers followed by `key = value`
//! lines. `#` and `;` start comments. Lists are comma separated.
//!
//! ```text
//! [copula]
//! family = clayton
//! theta = 2            # or: target_tau = 0.5
//! dim = 3
//!
//! [var]
//! alpha = 0.05
//! margins = uniform    # or a two-column (u, quantile) file, or one entry per component
//!
//! [quadrature]
//! abs_tol = 1e-10
//! rel_tol = 1e-9
//! max_subdivisions = 2000
//!
//! [mc]
//! n = 50000, 1000000
//! replications = 100
//! h = 1e-4
//! seed = 42
//!
//! [table1]
//! cases = clayton:2, frank:5.74, gumbel:2, joe:2.4
//!
//! [output]
//! path = report.csv
//! full_precision = false
//! timestamp = true
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use archvar::{FamilyId, QuadConfig, QuantileFn};

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    ("copula", &["family", "theta", "target_tau", "dim"]),
    ("var", &["alpha", "margins"]),
    ("quadrature", &["abs_tol", "rel_tol", "max_subdivisions"]),
    ("mc", &["n", "replications", "h", "seed"]),
    ("table1", &["cases"]),
    ("output", &["path", "full_precision", "timestamp"]),
];

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_DIM: usize = 3;
pub const DEFAULT_ALPHA: f64 = 0.05;

/// A configuration problem tied to the field that caused it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration field '{}': {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq)]
pub enum MarginSpec {
    Uniform,
    Tabulated(PathBuf),
}

impl fmt::Display for MarginSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarginSpec::Uniform => f.write_str("uniform"),
            MarginSpec::Tabulated(p) => write!(f, "{}", p.display()),
        }
    }
}

/// Every knob a subcommand may read; command-line flags are layered on top.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub family: Option<FamilyId>,
    pub theta: Option<f64>,
    pub target_tau: Option<f64>,
    pub dim: usize,
    pub alpha: f64,
    pub margins: Vec<MarginSpec>,
    pub quad: QuadConfig,
    pub n: Vec<usize>,
    pub replications: Option<usize>,
    pub h: Option<f64>,
    pub seed: u64,
    pub cases: Option<Vec<(FamilyId, f64)>>,
    pub out: Option<PathBuf>,
    pub full_precision: bool,
    pub timestamp: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: None,
            theta: None,
            target_tau: None,
            dim: DEFAULT_DIM,
            alpha: DEFAULT_ALPHA,
            margins: vec![MarginSpec::Uniform],
            quad: QuadConfig::default(),
            n: Vec::new(),
            replications: None,
            h: None,
            seed: DEFAULT_SEED,
            cases: None,
            out: None,
            full_precision: false,
            timestamp: true,
        }
    }
}

fn parse_value<T: FromStr>(field: &str, raw: &str) -> Result<T> {
    raw.parse::<T>()
        .map_err(|_| ConfigError::new(field, format!("cannot parse '{raw}'")))
}

/// Accepts `50000`, `5e4` and `1_000_000` for counts.
pub fn parse_count(field: &str, raw: &str) -> Result<usize> {
    let cleaned = raw.trim().replace('_', "");
    if let Ok(v) = cleaned.parse::<usize>() {
        return Ok(v);
    }
    match cleaned.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= 1e15 => Ok(x as usize),
        _ => Err(ConfigError::new(
            field,
            format!("'{raw}' is not a non-negative integer"),
        )),
    }
}

fn parse_bool(field: &str, raw: &str) -> Result<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::new(field, format!("'{raw}' is not a boolean"))),
    }
}

fn parse_family(field: &str, raw: &str) -> Result<FamilyId> {
    raw.parse::<FamilyId>()
        .map_err(|e| ConfigError::new(field, e.to_string()))
}

fn parse_margins(raw: &str, base: &Path) -> Vec<MarginSpec> {
    raw.split(',')
        .map(str::trim)
        .map(|item| {
            if item.eq_ignore_ascii_case("uniform") {
                MarginSpec::Uniform
            } else {
                MarginSpec::Tabulated(base.join(item))
            }
        })
        .collect()
}

pub fn parse_cases(field: &str, raw: &str) -> Result<Vec<(FamilyId, f64)>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (fam, theta) = item.split_once(':').ok_or_else(|| {
                ConfigError::new(field, format!("expected family:theta, got '{item}'"))
            })?;
            Ok((parse_family(field, fam)?, parse_value(field, theta.trim())?))
        })
        .collect()
}

impl RunConfig {
    /// Parse configuration text. Relative margin paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        let mut section = String::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line
                .split(['#', ';'])
                .next()
                .unwrap_or_default()
                .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_ascii_lowercase();
                if !KNOWN_KEYS.iter().any(|(s, _)| *s == section) {
                    return Err(ConfigError::new(
                        format!("[{section}]"),
                        format!("unknown section on line {}", lineno + 1),
                    ));
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::new(
                    format!("line {}", lineno + 1),
                    format!("expected 'key = value', got '{line}'"),
                ));
            };
            let key = key.trim().to_ascii_lowercase();
            let field = format!("{section}.{key}");
            let known = KNOWN_KEYS
                .iter()
                .find(|(s, _)| *s == section)
                .is_some_and(|(_, keys)| keys.contains(&key.as_str()));
            if !known {
                return Err(ConfigError::new(field, "unknown key"));
            }
            if entries.insert(field.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::new(field, "given more than once"));
            }
        }

        let mut cfg = RunConfig::default();
        for (field, raw) in &entries {
            let f = field.as_str();
            match f {
                "copula.family" => cfg.family = Some(parse_family(f, raw)?),
                "copula.theta" => cfg.theta = Some(parse_value(f, raw)?),
                "copula.target_tau" => cfg.target_tau = Some(parse_value(f, raw)?),
                "copula.dim" => cfg.dim = parse_count(f, raw)?,
                "var.alpha" => cfg.alpha = parse_value(f, raw)?,
                "var.margins" => cfg.margins = parse_margins(raw, base),
                "quadrature.abs_tol" => cfg.quad.abs_tol = parse_value(f, raw)?,
                "quadrature.rel_tol" => cfg.quad.rel_tol = parse_value(f, raw)?,
                "quadrature.max_subdivisions" => cfg.quad.max_subdivisions = parse_count(f, raw)?,
                "mc.n" => {
                    cfg.n = raw
                        .split(',')
                        .map(|s| parse_count(f, s))
                        .collect::<Result<_>>()?
                }
                "mc.replications" => cfg.replications = Some(parse_count(f, raw)?),
                "mc.h" => cfg.h = Some(parse_value(f, raw)?),
                "mc.seed" => cfg.seed = parse_value(f, raw)?,
                "table1.cases" => cfg.cases = Some(parse_cases(f, raw)?),
                "output.path" => cfg.out = Some(PathBuf::from(raw)),
                "output.full_precision" => cfg.full_precision = parse_bool(f, raw)?,
                "output.timestamp" => cfg.timestamp = parse_bool(f, raw)?,
                _ => unreachable!("keys are checked against KNOWN_KEYS"),
            }
        }
        if cfg.theta.is_some() && cfg.target_tau.is_some() {
            return Err(ConfigError::new(
                "copula.theta",
                "give exactly one of theta and target_tau",
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("--config", format!("cannot read {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn require_family(&self) -> Result<FamilyId> {
        self.family
            .ok_or_else(|| ConfigError::new("copula.family", "missing (set it or pass --family)"))
    }

    /// The single dependence specification: an explicit theta or a target tau.
    pub fn dependence(&self) -> Result<Dependence> {
        match (self.theta, self.target_tau) {
            (Some(t), None) => Ok(Dependence::Theta(t)),
            (None, Some(tau)) => Ok(Dependence::Tau(tau)),
            (None, None) => Err(ConfigError::new(
                "copula.theta",
                "missing: give theta or target_tau",
            )),
            (Some(_), Some(_)) => Err(ConfigError::new(
                "copula.theta",
                "give exactly one of theta and target_tau",
            )),
        }
    }

    /// Resolve the margin descriptors into `dim` quantile functions. A single
    /// descriptor applies to every component and is loaded once.
    pub fn load_margins(&self) -> Result<Vec<QuantileFn>> {
        let field = "var.margins";
        let load = |m: &MarginSpec| -> Result<QuantileFn> {
            match m {
                MarginSpec::Uniform => Ok(QuantileFn::uniform()),
                MarginSpec::Tabulated(path) => load_tabulated(path)
                    .map_err(|msg| ConfigError::new(field, msg)),
            }
        };
        match self.margins.len() {
            1 => Ok(vec![load(&self.margins[0])?; self.dim]),
            k if k == self.dim => self.margins.iter().map(load).collect(),
            k => Err(ConfigError::new(
                field,
                format!("expected 1 or {} entries, got {k}", self.dim),
            )),
        }
    }

    pub fn margins_label(&self) -> String {
        self.margins
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dependence {
    Theta(f64),
    Tau(f64),
}

/// Two columns `u, quantile` separated by commas or whitespace; `#` lines and
/// a non-numeric header line are skipped.
pub fn load_tabulated(path: &Path) -> std::result::Result<QuantileFn, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read margin file {}: {e}", path.display()))?;
    let mut knots = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|s| s.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => knots.push((v[0], v[1])),
            None if knots.is_empty() => continue,
            _ => {
                return Err(format!(
                    "{} line {}: expected two numbers, got '{line}'",
                    path.display(),
                    lineno + 1
                ))
            }
        }
    }
    QuantileFn::tabulated(knots).map_err(|e| format!("{}: {e}", path.display()))
}
