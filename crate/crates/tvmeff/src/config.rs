//! Run configuration. Every field has a default; values are layered as
//! command-line flag > `TVMEFF_THREADS` (workers only) > config file >
//! default. Config files are flat TOML using the field names below.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use tvmeff_core::bootstrap::{BootstrapConfig, Workers};
use tvmeff_core::unitroot::DetrendSpec;
use tvmeff_core::var::Bandwidth;
use tvmeff_core::YearMonth;

use crate::error::{CliError, CliResult};
use crate::io::{ColumnSpec, LoadOptions};

pub const THREADS_ENV: &str = "TVMEFF_THREADS";

/// `auto` or a fixed non-negative integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Auto,
    Fixed(usize),
}

impl FromStr for Choice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Choice::Auto);
        }
        s.parse().map(Choice::Fixed).map_err(|_| format!("expected `auto` or a non-negative integer, got `{s}`"))
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Auto => f.write_str("auto"),
            Choice::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl Serialize for Choice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Choice::Auto => s.serialize_str("auto"),
            Choice::Fixed(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Choice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(n) => Ok(Choice::Fixed(n as usize)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Detrend {
    Trend,
    Constant,
}

impl Detrend {
    pub fn spec(self) -> DetrendSpec {
        match self {
            Detrend::Trend => DetrendSpec::trend(),
            Detrend::Constant => DetrendSpec::constant(),
        }
    }
}

/// Where individual degrees come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum IndividualSource {
    /// One univariate TV-AR per series.
    Univariate,
    /// Diagonal of the joint TV-VAR.
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Fully resolved configuration. `workers` and `out` are not serialized:
/// they do not affect results, so manifests stay identical across machines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub date_column: String,
    pub columns: Vec<String>,
    pub forward_fill: bool,
    pub detrend: Detrend,
    pub pmax: Choice,
    pub qmax: usize,
    pub q: Choice,
    pub bandwidth: Choice,
    pub smoothness: f64,
    pub horizon: usize,
    pub at: Vec<YearMonth>,
    pub orthogonalized: bool,
    pub individual: IndividualSource,
    pub replications: usize,
    pub level: f64,
    pub seed: u64,
    pub formats: Vec<Format>,
    #[serde(skip)]
    pub workers: Choice,
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let boot = BootstrapConfig::default();
        Self {
            input: None,
            date_column: "date".to_string(),
            columns: Vec::new(),
            forward_fill: false,
            detrend: Detrend::Trend,
            pmax: Choice::Auto,
            qmax: 12,
            q: Choice::Auto,
            bandwidth: Choice::Auto,
            smoothness: 1.0,
            horizon: 12,
            at: Vec::new(),
            orthogonalized: false,
            individual: IndividualSource::Univariate,
            replications: boot.replications,
            level: boot.level,
            seed: boot.seed,
            formats: vec![Format::Csv, Format::Json],
            workers: Choice::Auto,
            out: PathBuf::from("tvmeff-out"),
        }
    }
}

/// One configuration layer; `None` defers to the layer below.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub input: Option<PathBuf>,
    pub date_column: Option<String>,
    pub columns: Option<Vec<String>>,
    pub forward_fill: Option<bool>,
    pub detrend: Option<Detrend>,
    pub pmax: Option<Choice>,
    pub qmax: Option<usize>,
    pub q: Option<Choice>,
    pub bandwidth: Option<Choice>,
    pub smoothness: Option<f64>,
    pub horizon: Option<usize>,
    pub at: Option<Vec<YearMonth>>,
    pub orthogonalized: Option<bool>,
    pub individual: Option<IndividualSource>,
    pub replications: Option<usize>,
    pub level: Option<f64>,
    pub seed: Option<u64>,
    pub formats: Option<Vec<Format>>,
    pub workers: Option<Choice>,
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        PartialConfig { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl PartialConfig {
    pub fn from_toml_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// The configuration recorded in a run manifest.
    pub fn from_manifest(path: &Path) -> CliResult<Self> {
        #[derive(Deserialize)]
        struct ManifestConfig {
            config: PartialConfig,
        }
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        serde_json::from_str::<ManifestConfig>(&text)
            .map(|m| m.config)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Workers from `TVMEFF_THREADS`, if set.
    pub fn from_env_value(value: Option<&str>) -> CliResult<Self> {
        let workers = value
            .map(|v| v.parse::<Choice>().map_err(|e| CliError::Config(format!("{THREADS_ENV}: {e}"))))
            .transpose()?;
        Ok(PartialConfig { workers, ..Default::default() })
    }

    /// `self` where set, `lower` elsewhere.
    pub fn over(self, lower: PartialConfig) -> PartialConfig {
        overlay!(
            self,
            lower,
            input,
            date_column,
            columns,
            forward_fill,
            detrend,
            pmax,
            qmax,
            q,
            bandwidth,
            smoothness,
            horizon,
            at,
            orthogonalized,
            individual,
            replications,
            level,
            seed,
            formats,
            workers,
            out
        )
    }
}

impl RunConfig {
    /// Resolve layers ordered from highest to lowest precedence over the
    /// defaults, then validate.
    pub fn resolve(layers: impl IntoIterator<Item = PartialConfig>) -> CliResult<Self> {
        let merged = layers.into_iter().fold(PartialConfig::default(), |acc, layer| acc.over(layer));
        let d = RunConfig::default();
        let cfg = RunConfig {
            input: merged.input.or(d.input),
            date_column: merged.date_column.unwrap_or(d.date_column),
            columns: merged.columns.unwrap_or(d.columns),
            forward_fill: merged.forward_fill.unwrap_or(d.forward_fill),
            detrend: merged.detrend.unwrap_or(d.detrend),
            pmax: merged.pmax.unwrap_or(d.pmax),
            qmax: merged.qmax.unwrap_or(d.qmax),
            q: merged.q.unwrap_or(d.q),
            bandwidth: merged.bandwidth.unwrap_or(d.bandwidth),
            smoothness: merged.smoothness.unwrap_or(d.smoothness),
            horizon: merged.horizon.unwrap_or(d.horizon),
            at: merged.at.unwrap_or(d.at),
            orthogonalized: merged.orthogonalized.unwrap_or(d.orthogonalized),
            individual: merged.individual.unwrap_or(d.individual),
            replications: merged.replications.unwrap_or(d.replications),
            level: merged.level.unwrap_or(d.level),
            seed: merged.seed.unwrap_or(d.seed),
            formats: merged.formats.unwrap_or(d.formats),
            workers: merged.workers.unwrap_or(d.workers),
            out: merged.out.unwrap_or(d.out),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.qmax == 0 {
            return bad("qmax must be at least 1".into());
        }
        if self.q == Choice::Fixed(0) {
            return bad("q must be at least 1".into());
        }
        if !(self.smoothness.is_finite() && self.smoothness > 0.0) {
            return bad(format!("smoothness must be positive and finite, got {}", self.smoothness));
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.workers == Choice::Fixed(0) {
            return bad("workers must be at least 1".into());
        }
        if self.formats.is_empty() {
            return bad("at least one output format is required".into());
        }
        for c in &self.columns {
            c.parse::<ColumnSpec>().map_err(CliError::Config)?;
        }
        self.bootstrap().validate().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn input(&self) -> CliResult<&Path> {
        self.input.as_deref().ok_or_else(|| CliError::Config("no input file given".to_string()))
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            date_column: self.date_column.clone(),
            columns: self.columns.iter().map(|c| c.parse().expect("validated")).collect(),
            forward_fill: self.forward_fill,
        }
    }

    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            replications: self.replications,
            level: self.level,
            seed: self.seed,
            workers: match self.workers {
                Choice::Auto => Workers::Auto,
                Choice::Fixed(n) => Workers::Fixed(n),
            },
        }
    }

    pub fn bandwidth(&self) -> Bandwidth {
        match self.bandwidth {
            Choice::Auto => Bandwidth::Auto,
            Choice::Fixed(n) => Bandwidth::Fixed(n),
        }
    }

    pub fn pmax(&self) -> Option<usize> {
        match self.pmax {
            Choice::Auto => None,
            Choice::Fixed(n) => Some(n),
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Compact JSON of the resolved configuration.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
