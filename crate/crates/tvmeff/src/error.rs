use std::path::PathBuf;

use serde::Serialize;
use tvmeff_core::Error as CoreError;

/// Exit status categories of the command-line tool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Input,
    Numerical,
    Config,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Input => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Config => 4,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A core failure, tagged with the pipeline stage that raised it.
    #[error("{stage}: {source}")]
    Core {
        stage: &'static str,
        #[source]
        source: CoreError,
    },

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("{}: line {line}: {source}", path.display())]
    Load {
        path: PathBuf,
        line: u64,
        #[source]
        source: CoreError,
    },

    #[error("{0}")]
    Config(String),

    #[error("{0}")]
    Input(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn core(stage: &'static str) -> impl FnOnce(CoreError) -> CliError {
        move |source| CliError::Core { stage, source }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |e| CliError::Io { path, message: e.to_string() }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            CliError::Core { source, .. } | CliError::Load { source, .. } => core_kind(source),
            CliError::Io { .. } | CliError::Input(_) => ErrorKind::Input,
            CliError::Config(_) => ErrorKind::Config,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind().exit_code()
    }

    pub fn stage(&self) -> &'static str {
        match self {
            CliError::Core { stage, .. } => stage,
            CliError::Io { .. } | CliError::Load { .. } | CliError::Input(_) => "input",
            CliError::Config(_) => "config",
        }
    }

    /// One-line JSON error report for stderr.
    pub fn report(&self) -> String {
        #[derive(Serialize)]
        struct Report<'a> {
            error: ErrorKind,
            code: i32,
            stage: &'a str,
            variant: &'a str,
            message: String,
        }
        let variant = match self {
            CliError::Core { source, .. } | CliError::Load { source, .. } => core_variant(source),
            CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
            CliError::Input(_) => "input",
        };
        let report = Report {
            error: self.kind(),
            code: self.exit_code(),
            stage: self.stage(),
            variant,
            message: self.to_string(),
        };
        serde_json::to_string(&report).expect("error report serializes")
    }
}

fn core_kind(e: &CoreError) -> ErrorKind {
    match e {
        CoreError::Gap { .. }
        | CoreError::Duplicate(_)
        | CoreError::Parse { .. }
        | CoreError::InsufficientData(_)
        | CoreError::Shape(_)
        | CoreError::Spec(_) => ErrorKind::Input,
        CoreError::Singular(_)
        | CoreError::DegenerateSeries(_)
        | CoreError::Numeric(_)
        | CoreError::UnitRootBoundary { .. }
        | CoreError::Quality { .. } => ErrorKind::Numerical,
        CoreError::Bandwidth { .. } | CoreError::Range(_) | CoreError::Config(_) => ErrorKind::Config,
    }
}

fn core_variant(e: &CoreError) -> &'static str {
    match e {
        CoreError::Gap { .. } => "gap",
        CoreError::Duplicate(_) => "duplicate",
        CoreError::Parse { .. } => "parse",
        CoreError::InsufficientData(_) => "insufficient_data",
        CoreError::Singular(_) => "singular",
        CoreError::DegenerateSeries(_) => "degenerate_series",
        CoreError::Numeric(_) => "numeric",
        CoreError::Bandwidth { .. } => "bandwidth",
        CoreError::UnitRootBoundary { .. } => "unit_root_boundary",
        CoreError::Range(_) => "range",
        CoreError::Quality { .. } => "quality",
        CoreError::Spec(_) => "spec",
        CoreError::Shape(_) => "shape",
        CoreError::Config(_) => "config",
    }
}
